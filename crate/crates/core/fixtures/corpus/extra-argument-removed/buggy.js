const logger = require('./logger');
const level = 'debug';

function report(message) {
  logger.write(message, level, message);
}

function warn(message) {
  logger.write(message, 'warn');
}

report('starting');
warn('late');
