const files = ['a.txt', 'b.txt'];
const seen = [];

function collect() {
  for (const file in files) {
    seen.push(file);
  }
  return seen;
}

function reset() {
  seen.length = 0;
}

collect();
