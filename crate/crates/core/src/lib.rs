//! Synthesis of reversible CNF oracles with a configurable ancilla budget.

pub mod bench;
pub mod circuit;
pub mod cnf;
pub mod gand;
pub mod lowering;
pub mod qasm;
pub mod sim;
pub mod synth;
pub mod synth_depth;
pub mod synth_size;
