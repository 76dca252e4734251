//! Projected gradient methods: deterministic PG, the randomized stochastic method
//! (RSPG), its two-phase variants and the gradient-free version (RSPGF), together with
//! the parameter formulas and theoretical bounds that drive them.

mod bounds;
mod config;
mod law;
mod params;
mod pg;
mod rspg;
mod run;
mod two_phase;

pub use bounds::{compute_theory_bounds, d_psi, BoundInputs, TheoryBounds, ZerothOrderBounds};
pub use config::{SolverConfig, StepsizePolicy};
pub use law::{termination_law, TerminationLaw};
pub use params::{
    budget_for_accuracy, post_sample_size, post_sample_size_light_tail, rspg_batch_size,
    rspgf_batch_size, rspgf_smoothing_mu, runs_for_confidence, two_phase_parameters,
    AccuracyConstants, TwoPhaseParameters,
};
pub use pg::pg_solve;
pub use rspg::{estimated_mapping_norm_sq, rspg_solve, rspgf_solve, true_mapping_norm_sq};
pub use run::{PhaseMetadata, SolverRun};
pub use two_phase::{post_select, two_phase_rspg, two_phase_rspg_v, Selection};
