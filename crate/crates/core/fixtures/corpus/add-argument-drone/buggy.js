import Drone from './drone';
import config from './config';

const port = config.port;
const speed = 10;
let drone = null;

function connect(host) {
  drone = new Drone(host);
  return drone;
}

function land() {
  if (drone) {
    drone.land();
  }
}

connect('192.168.1.1');
land();
