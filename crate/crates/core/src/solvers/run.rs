use serde::Serialize;

/// Output of one solver invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverRun {
    pub output_x: Vec<f64>,
    /// 1-based index `R` of the returned iterate.
    pub random_index: usize,
    /// Stepsize attached to the returned iterate.
    pub output_stepsize: f64,
    /// Iteration limit `N`.
    pub iterations: usize,
    pub batch_size: usize,
    /// Iterates `x_1 ..` when recording was requested.
    pub trajectory: Option<Vec<Vec<f64>>>,
    /// Squared mapping norms of the iterations actually performed.
    pub mapping_norms_sq: Vec<f64>,
    pub sfo_calls: u64,
    pub szo_calls: u64,
    /// Oracle calls spent in post-selection.
    pub post_calls: u64,
    pub phase: Option<PhaseMetadata>,
}

/// Candidates and scores of a post-optimization phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMetadata {
    pub candidates: Vec<Vec<f64>>,
    /// Trajectory index `R_s` of each candidate.
    pub candidate_indices: Vec<usize>,
    pub candidate_stepsizes: Vec<f64>,
    /// Estimated mapping norm of each candidate.
    pub scores: Vec<f64>,
    /// Position of the winner in `candidates`.
    pub selected: usize,
    /// Optimization-phase runs, when several were made.
    pub runs: Vec<SolverRun>,
}
