//! Harnesses for the MUB incompatibility table, the CGLMP resource
//! hierarchy and the optimal setting distribution sweep.

use crate::assemblage::{cglmp_pair, depolarize_second, heisenberg_weyl_mub, NoisyPairSpec, Party};
use crate::bounds::{self, corollary2_bounds, mub_closed_form_incompatibility, theorem3_bounds};
use crate::config::SolverConfig;
use crate::correlations::{hierarchy_report, HierarchyReport};
use crate::error::Result;
use crate::linalg::DensityMatrix;
use crate::monotones;

/// Published cells `(d, m, upper, value, lower)`, rounded to four digits.
pub const TABLE1: &[(usize, usize, f64, f64, f64)] = &[
    (2, 2, 0.1667, 0.1464, 0.1464),
    (2, 3, 0.2222, 0.2113, 0.1953),
    (3, 2, 0.2500, 0.2113, 0.2113),
    (3, 3, 0.3333, 0.2876, 0.2818),
    (3, 4, 0.3750, 0.3455, 0.3170),
    (5, 2, 0.3333, 0.2764, 0.2764),
    (5, 3, 0.4444, 0.3750, 0.3685),
    (5, 4, 0.5000, 0.4307, 0.4146),
    (5, 5, 0.5333, 0.4657, 0.4422),
    (5, 6, 0.5556, 0.4910, 0.4607),
    (7, 2, 0.3750, 0.3110, 0.3110),
    (7, 3, 0.5000, 0.4154, 0.4147),
    (7, 4, 0.5625, 0.4724, 0.4665),
    (7, 5, 0.6000, 0.5040, 0.4976),
    (7, 6, 0.6250, 0.5257, 0.5184),
    (7, 7, 0.6429, 0.5413, 0.5332),
    (7, 8, 0.6563, 0.5728, 0.5443),
];

/// The published cell for `(d, m)`, as `(upper, value, lower)`.
pub fn table1_reference(d: usize, m: usize) -> Option<(f64, f64, f64)> {
    TABLE1.iter().find(|c| c.0 == d && c.1 == m).map(|c| (c.2, c.3, c.4))
}

/// Cells of the table for the given dimensions.
pub fn table1_cells(dims: &[usize]) -> Vec<(usize, usize)> {
    TABLE1.iter().filter(|c| dims.contains(&c.0)).map(|c| (c.0, c.1)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1Row {
    pub d: usize,
    pub m: usize,
    pub upper: f64,
    pub sdp_value: f64,
    /// Lower bound from the overlap estimate of `T`.
    pub lower: f64,
    /// Lower bound `1 − T/m` with the exact `T`.
    pub tight_lower: f64,
    /// `1 − T/m` where the closed form applies (`m ∈ {2, d, d+1}`).
    pub closed_form: Option<f64>,
    /// `|computed − published|` for upper, value and lower.
    pub deviations: Option<[f64; 3]>,
}

/// One cell for the first `m` Heisenberg-Weyl bases in dimension `d`.
pub fn table1_row(d: usize, m: usize, config: &SolverConfig) -> Result<Table1Row> {
    let a = heisenberg_weyl_mub(d, m)?;
    let t3 = theorem3_bounds(&a)?;
    let c2 = corollary2_bounds(&a, config)?;
    let sdp_value = monotones::incompatibility(&a, config)?;
    let closed_form = mub_closed_form_incompatibility(d, m, c2.t).ok().map(|c| c.incompatibility);
    let deviations = table1_reference(d, m)
        .map(|(u, v, l)| [(t3.upper - u).abs(), (sdp_value - v).abs(), (t3.lower - l).abs()]);
    Ok(Table1Row { d, m, upper: t3.upper, sdp_value, lower: t3.lower, tight_lower: c2.lower, closed_form, deviations })
}

/// Table rows, solved independently (in parallel when configured).
pub fn table1(cells: &[(usize, usize)], config: &SolverConfig) -> Vec<Result<Table1Row>> {
    crate::exec::map_slice(cells, config.execution, |&(d, m)| table1_row(d, m, config))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyRow {
    pub d: usize,
    pub report: HierarchyReport,
}

/// CGLMP measurements for both parties on `|Φ+⟩` in dimension `d`.
pub fn hierarchy_row(d: usize, config: &SolverConfig) -> Result<HierarchyRow> {
    let alice = cglmp_pair(d, Party::Alice)?;
    let bob = cglmp_pair(d, Party::Bob)?;
    let report = hierarchy_report(&alice, &bob, &DensityMatrix::phi_plus(d), config)?;
    Ok(HierarchyRow { d, report })
}

pub fn hierarchy(dims: &[usize], config: &SolverConfig) -> Vec<Result<HierarchyRow>> {
    crate::exec::map_slice(dims, config.execution, |&d| hierarchy_row(d, config))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizePRow {
    pub d: usize,
    pub mu: f64,
    /// Optimal weight of the noiseless setting.
    pub p1: f64,
    pub i_opt: f64,
    pub i_uniform: f64,
}

/// Two MUB settings in dimension `d`, the second depolarized by `mu`.
pub fn optimize_p_row(d: usize, mu: f64, config: &SolverConfig) -> Result<OptimizePRow> {
    let base = heisenberg_weyl_mub(d, 2)?;
    let a = depolarize_second(&NoisyPairSpec::new(base, mu)?)?;
    let opt = monotones::incompatibility_optimal_weights(&a, config)?;
    let i_uniform = monotones::incompatibility(&a, config)?;
    Ok(OptimizePRow { d, mu, p1: opt.weights[0], i_opt: opt.value, i_uniform })
}

/// `μ ∈ {0.1, 0.2, ..., 1.0}`.
pub fn default_mu_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

pub fn optimize_p(d: usize, grid: &[f64], config: &SolverConfig) -> Vec<Result<OptimizePRow>> {
    crate::exec::map_slice(grid, config.execution, |&mu| optimize_p_row(d, mu, config))
}

/// Closed-form MUB bounds for reference in reports.
pub fn formula_bounds(d: usize, m: usize) -> (f64, f64) {
    let b = bounds::mub_bounds(d, m);
    (b.lower, b.upper)
}
