import mongoose from 'mongoose';

const Schema = mongoose.Schema;
const fields = { name: String, age: Number };

const userSchema = Schema(fields);

function model() {
  return mongoose.model('User', userSchema);
}

export default model;
