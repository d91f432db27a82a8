let connected = false;
let ready = false;

function canSend(message) {
  if (connected && ready) {
    return message.length > 0;
  }
  return false;
}

connected = true;
canSend('hi');
