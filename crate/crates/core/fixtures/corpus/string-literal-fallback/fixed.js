const colors = ['red', 'green'];
const size = 4;

function label() {
  return "bar";
}

function paint() {
  for (const c of colors) {
    console.log(c, size);
  }
}

paint();
