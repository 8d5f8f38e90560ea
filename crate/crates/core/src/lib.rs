//! Toolchain for a stream-based runtime monitoring language: parsing, two
//! dimensional type checking, optimisation passes and a reference
//! interpreter.

pub mod analysis;
pub mod corpus;
pub mod gen;
pub mod harness;
pub mod interp;
pub mod ir;
pub mod parser;
pub mod passes;
pub mod trace;
