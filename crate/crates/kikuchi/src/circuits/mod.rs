//! Gate-level constructions of the state-preparation and block-encoding
//! gadgets, static counting, and a small simulator to check them.

pub mod dicke;
pub mod ir;
pub mod oracles;
pub mod qsp;
pub mod sim;
pub mod stateprep;

pub use dicke::{check_dicke, check_shuffle, dicke_prep, one_hot_shuffle};
pub use ir::{CircuitIR, CountReport, Ctrl, Gate, Register, Role};
pub use oracles::{block_encoding_check, oh_term_cost, oracle_circuits, p_gadget};
pub use qsp::{qsp_response, qsp_rounding_error};
pub use sim::{SparseState, StateVec};
pub use stateprep::{guiding_prep_circuit, simulate_guiding_prep, state_prep_circuit};
