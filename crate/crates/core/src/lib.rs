pub mod bench;
pub mod callgraph;
pub mod circuit;
pub mod domains;
pub mod emitter;
pub mod expr;
pub mod model;
pub mod reuse;
pub mod simulator;
pub mod solver;
pub mod stdlib;
pub mod synth;
