const theme = { mode: 'dark' };
let lines = [];

function log(text) {
  if (theme.mode === 0) {
    return;
  }
  lines.push(text);
}

log('hello');
