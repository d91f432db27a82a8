class Cart {
  add(item) {
    this.items.push(item);
    return `added ${item.name}`;
  }
}
const cart = new Cart();
cart.add(other);
