const files = ['a.txt', 'b.txt'];
const seen = [];

function collect() {
  for (const file of files) {
    seen.push(file);
  }
  return seen;
}

function reset() {
  seen.length = 0;
}

collect();
