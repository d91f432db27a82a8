const React = require('react');
const store = require('./store');

const Widget = React.createClass({
  componentDidMount: function () {
    store.subscribe(this.update);
  },
  update: function () {
    this.setState(store.get());
  },
  render: function () {
    return null;
  }
});

module.exports = Widget;
