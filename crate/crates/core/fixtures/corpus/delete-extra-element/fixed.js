const defaults = ['a', 'b'];
const extra = 'c';

function options() {
  return [defaults[0], defaults[1]];
}

options();
