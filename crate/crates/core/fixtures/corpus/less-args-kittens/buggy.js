const kittens = ['tom', 'felix', 'garfield'];
let removed = 0;

function adopt(name) {
  const last = kittens.pop(name);
  removed = removed + 1;
  return last;
}

function count() {
  return kittens.length;
}

adopt('felix');
console.log(count());
