const pageSize = 20;
let page = 0;

function offset() {
  return page * pageSize;
}

function next() {
  page = page + 1;
  return offset();
}

next();
