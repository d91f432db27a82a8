const settings = { timeout: 30, retries: 2 };
let timer = null;

function schedule(task) {
  timer = setTimeout(task, settings.timout);
  return timer;
}

function cancel() {
  clearTimeout(timer);
}

schedule(function () {});
