const handlers = [];
const names = ['open', 'close', 'save'];

function register() {
  for (var i = 0; i < names.length; i++) {
    handlers.push(function () {
      return names[i];
    });
  }
  return handlers.length;
}

register();
