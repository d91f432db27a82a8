const list = [1, 2, 3];
const factor = 3;

function scale() {
  return list.map((x) => x * factor);
}

function sum() {
  let s = 0;
  for (const x of list) {
    s = s + x;
  }
  return s;
}

scale();
