const fs = require('fs');
const path = require('path');

function destroy(res, err) {
  if (err) {
    res.status(500);
  }
  res.end();
}

function read(file, res) {
  fs.readFile(path.join('.', file), function (err, data) {
    destroy(res, res);
  });
}

read('a.txt', null);
