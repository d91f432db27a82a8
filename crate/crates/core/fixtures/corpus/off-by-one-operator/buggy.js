const items = [3, 1, 4, 1, 5];
let best = 0;

function lastIndex(list) {
  return list.length + 1;
}

function pick() {
  best = items[lastIndex(items)];
  return best;
}

pick();
