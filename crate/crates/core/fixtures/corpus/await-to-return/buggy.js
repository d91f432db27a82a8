const cache = {};
const api = require('./api');

function load(id) {
  if (cache[id]) {
    return cache[id];
  }
  await api.fetch(id);
}

function clear() {
  for (const key in cache) {
    cache[key] = null;
  }
}

load(3);
