//! Per-unit conversion, preconditioning and DC/AC optimal power flow.

pub mod ac;
pub mod dc;
pub mod flows;
pub mod ipm;
pub mod matpower;
pub mod network;
pub mod precondition;
pub mod progressive;
pub mod relax;
pub mod solution;

pub use ac::{solve_ac_opf, WarmStart};
pub use dc::solve_dc_opf;
pub use network::{to_per_unit, BusType, PuBranch, PuBus, PuDcLine, PuGen, PuNetwork};
pub use precondition::{decommit_generators, inject_shunts};
pub use progressive::{progressive_solve, ProgressiveResult, SolveConfig};
pub use relax::{enforce_impedance_consistency, Level, RelaxationPlan, RelaxedNetwork};
pub use solution::{Attempt, Formulation, OpfSolution, Status};
