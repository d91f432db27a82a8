const crypto = require('crypto');
const secret = process.env.SECRET;

function sign(payload) {
  const hmac = crypto.createHmac('sha256', secret);
  hmac.update(payload);
  return hmac.digest('hex');
}

module.exports = sign;
