pub mod syntax;
pub mod diff;
pub mod slicer;
pub mod corpus;
pub mod graph;
pub mod model;
pub mod eval;
pub mod synth;
pub mod cli;
