const users = {};
let lastId = 0;

function create(name) {
  lastId = lastId + 1;
  users[lastId] = { name: name };
  return;
}

function find(id) {
  return users[id];
}

create('ada');
