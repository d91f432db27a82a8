const prefix = 'user-';

function ids(count) {
  const out = [];
  let n = 0;
  while (n < count) {
    out.push(prefix + n);
    n = n + 1;
  }
  return out;
}

ids(3);
