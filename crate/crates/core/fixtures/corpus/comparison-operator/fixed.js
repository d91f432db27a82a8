const limit = 10;
let retries = 0;

function shouldRetry(error) {
  if (retries >= limit) {
    return false;
  }
  retries = retries + 1;
  return error !== null;
}

shouldRetry(null);
