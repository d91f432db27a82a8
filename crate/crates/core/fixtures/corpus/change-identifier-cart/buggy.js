const cart = [];
const item = { id: 4, price: 20 };
const object = { id: 0 };
let total = 0;

function addToCart() {
  cart.push(object);
  total = total + item.price;
  return cart.length;
}

function clearCart() {
  cart.length = 0;
  total = 0;
}

addToCart();
