const counter = {
  count: 0,
  step: 1,
  increment: function () {
    this.count = this.count + this.count;
    return this.count;
  }
};

counter.increment();
