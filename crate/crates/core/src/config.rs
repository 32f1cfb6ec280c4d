//! Tolerances and solver settings shared by every module.

use crate::exec::Execution;

/// Validation tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub psd: f64,
    pub completeness: f64,
    pub weight_sum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { hermiticity: 1e-10, psd: 1e-9, completeness: 1e-9, weight_sum: 1e-12 }
    }
}

/// Sparse LDL factorization used by the backend for its KKT systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinearSolver {
    /// Supernodal; faster on programs with many PSD blocks.
    #[default]
    Faer,
    Qdldl,
}

impl LinearSolver {
    pub fn backend_name(self) -> &'static str {
        match self {
            LinearSolver::Faer => "faer",
            LinearSolver::Qdldl => "qdldl",
        }
    }
}

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Settings for the conic backend and enumeration limits.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative duality gap requested from the backend.
    pub gap_rel: f64,
    /// Absolute duality gap requested from the backend.
    pub gap_abs: f64,
    /// Primal/dual feasibility tolerance requested from the backend.
    pub feas: f64,
    pub max_iter: u32,
    /// Tolerance of the independent residual re-check.
    pub feasibility_tol: f64,
    /// Largest admissible number of deterministic strategies.
    pub enumeration_cap: u64,
    /// Allowed |primal - dual| when both forms are solved.
    pub duality_tol: f64,
    /// Solve the primal as well and compare with the dual.
    pub cross_check: bool,
    pub execution: Execution,
    pub linear_solver: LinearSolver,
    pub tolerances: Tolerances,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gap_rel: 1e-8,
            gap_abs: 1e-8,
            feas: 1e-8,
            max_iter: 300,
            feasibility_tol: 1e-7,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            duality_tol: 1e-5,
            cross_check: true,
            execution: Execution::default(),
            linear_solver: LinearSolver::default(),
            tolerances: Tolerances::default(),
            verbose: false,
        }
    }
}

impl SolverConfig {
    /// Defaults overridden by `QMEAS_SOLVER_TOL` and `QMEAS_CAP` when set.
    pub fn from_env() -> Self {
        Self::default().with_env_overrides()
    }

    pub fn with_env_overrides(mut self) -> Self {
        if let Some(t) = std::env::var("QMEAS_SOLVER_TOL").ok().and_then(|v| v.parse::<f64>().ok()) {
            if t > 0.0 {
                self.gap_rel = t;
                self.gap_abs = t;
                self.feas = t;
            }
        }
        if let Some(cap) = std::env::var("QMEAS_CAP").ok().and_then(|v| v.parse::<u64>().ok()) {
            self.enumeration_cap = cap;
        }
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.enumeration_cap = cap;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_cross_check(mut self, on: bool) -> Self {
        self.cross_check = on;
        self
    }

    /// Tighter backend tolerances, used for small problems that feed
    /// axiom checks at the 1e-7 level.
    pub fn tight(mut self) -> Self {
        self.gap_rel = 1e-10;
        self.gap_abs = 1e-10;
        self.feas = 1e-10;
        self
    }
}
