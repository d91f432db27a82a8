const express = require('express');
const parser = require('body-parser');

const app = express();
const port = 3000;

app.use(parser.json());
app.use(parser.urlencoded({ extended: true }));

app.get('/', function (req, res) {
  res.send('ok');
});

app.listen(port);
