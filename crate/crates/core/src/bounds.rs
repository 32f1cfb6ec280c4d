//! Analytic incompatibility bounds for uniformly weighted assemblages, the
//! spectral quantity `T` and the closed form for MUB assemblages.

use crate::assemblage::WeightedAssemblage;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, CMat};
use crate::strategies;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundsMethod {
    Theorem3,
    Corollary2,
    MubClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    /// For `Corollary2` the exact `T`; for `Theorem3` its upper estimate
    /// `max‖M‖ + (m-1) max‖M^{1/2} M'^{1/2}‖`; for `MubClosedForm` the
    /// overlap estimate `1 + (m-1)/√d`.
    pub t: f64,
    /// Depolarizing robustness used for the upper bound.
    pub eta_low: f64,
    pub method: BoundsMethod,
}

/// `(1/m)(1 + (m-1)/(d+1))`, a lower bound on the depolarizing robustness
/// of any `m` measurements in dimension `d`.
pub fn eta_low(d: usize, m: usize) -> f64 {
    let (d, m) = (d as f64, m as f64);
    (1.0 + (m - 1.0) / (d + 1.0)) / m
}

fn require_uniform(a: &WeightedAssemblage) -> Result<()> {
    if !a.is_uniform() {
        return Err(Error::NonUniformWeights);
    }
    Ok(())
}

const RANK_ONE_TOL: f64 = 1e-8;

fn is_rank_one_projector(m: &CMat) -> bool {
    let tr = linalg::trace(m).re;
    let tr2 = linalg::trace_product_re(m, m);
    (tr - 1.0).abs() <= RANK_ONE_TOL && (tr2 - 1.0).abs() <= RANK_ONE_TOL
}

/// Unit vector spanning a rank-one projector.
fn top_vector(m: &CMat) -> nalgebra::DVector<linalg::C64> {
    let (_, vecs) = linalg::eigh(m);
    vecs.column(m.nrows() - 1).into_owned()
}

/// Square roots of every effect, or the spanning vectors when all effects
/// are rank-one projectors.
enum Roots {
    Vectors(Vec<Vec<nalgebra::DVector<linalg::C64>>>),
    Matrices(Vec<Vec<CMat>>),
}

impl Roots {
    fn of(a: &WeightedAssemblage) -> Self {
        let all_rank_one = a.povms().iter().all(|p| p.effects().iter().all(is_rank_one_projector));
        if all_rank_one {
            Roots::Vectors(a.povms().iter().map(|p| p.effects().iter().map(top_vector).collect()).collect())
        } else {
            Roots::Matrices(a.povms().iter().map(|p| p.effects().iter().map(linalg::sqrt_psd).collect()).collect())
        }
    }

    /// `‖M_{a|x}^{1/2} M_{b|y}^{1/2}‖_∞`.
    fn overlap(&self, x: usize, a: usize, y: usize, b: usize) -> f64 {
        match self {
            Roots::Vectors(v) => v[x][a].dotc(&v[y][b]).norm(),
            Roots::Matrices(s) => linalg::operator_norm(&(&s[x][a] * &s[y][b])),
        }
    }
}

/// Largest `‖M_{a|x}^{1/2} M_{a'|x'}^{1/2}‖_∞` over `x ≠ x'`; zero for `m = 1`.
pub fn max_cross_overlap(a: &WeightedAssemblage) -> f64 {
    let roots = Roots::of(a);
    let (m, o) = (a.settings(), a.outcomes());
    let mut best = 0.0f64;
    for x in 0..m {
        for y in (x + 1)..m {
            for i in 0..o {
                for j in 0..o {
                    best = best.max(roots.overlap(x, i, y, j));
                }
            }
        }
    }
    best
}

fn max_effect_norm(a: &WeightedAssemblage) -> f64 {
    a.povms().iter().flat_map(|p| p.effects().iter()).map(linalg::spectral_norm_of).fold(0.0, f64::max)
}

/// `Σ_x ‖d I − Σ_a Tr[M_{a|x}] M_{a|x}‖_∞`.
fn depolarizing_spread(a: &WeightedAssemblage) -> f64 {
    let d = a.dim();
    (0..a.settings())
        .map(|x| {
            let mut s = linalg::scale(&linalg::identity(d), d as f64);
            for e in a.povm(x).effects() {
                s -= linalg::scale(e, linalg::trace(e).re);
            }
            linalg::spectral_norm_of(&s)
        })
        .sum()
}

/// Bounds for general uniformly weighted assemblages.
pub fn theorem3_bounds(a: &WeightedAssemblage) -> Result<BoundsReport> {
    theorem3_bounds_with_eta(a, None)
}

/// As [`theorem3_bounds`], with a caller-supplied depolarizing robustness.
pub fn theorem3_bounds_with_eta(a: &WeightedAssemblage, eta: Option<f64>) -> Result<BoundsReport> {
    require_uniform(a)?;
    let (d, m) = (a.dim(), a.settings());
    let eta = check_eta(eta.unwrap_or_else(|| eta_low(d, m)))?;
    let (df, mf) = (d as f64, m as f64);
    let purity: f64 = a.povms().iter().flat_map(|p| p.effects().iter()).map(|e| linalg::trace_product_re(e, e)).sum();
    let t = max_effect_norm(a) + (mf - 1.0) * max_cross_overlap(a);
    let lower = purity / (mf * df) - t / mf;
    let upper = (1.0 - eta) / (mf * df) * depolarizing_spread(a);
    Ok(BoundsReport { lower, upper, t, eta_low: eta, method: BoundsMethod::Theorem3 })
}

fn check_eta(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("robustness {eta} outside (0, 1]")));
    }
    Ok(eta)
}

/// Bounds for uniformly weighted rank-one projective assemblages, with the
/// exact `T`.
pub fn corollary2_bounds(a: &WeightedAssemblage, config: &SolverConfig) -> Result<BoundsReport> {
    corollary2_bounds_with_eta(a, None, config)
}

pub fn corollary2_bounds_with_eta(a: &WeightedAssemblage, eta: Option<f64>, config: &SolverConfig) -> Result<BoundsReport> {
    require_uniform(a)?;
    for x in 0..a.settings() {
        for (k, e) in a.povm(x).effects().iter().enumerate() {
            if !is_rank_one_projector(e) {
                return Err(Error::NotRankOneProjective { setting: x, outcome: k });
            }
        }
    }
    let (d, m) = (a.dim(), a.settings());
    let eta = check_eta(eta.unwrap_or_else(|| eta_low(d, m)))?;
    let (t, _) = compute_t(a, config)?;
    let df = d as f64;
    Ok(BoundsReport {
        lower: 1.0 - t / m as f64,
        upper: (1.0 - eta) * (df - 1.0) / df,
        t,
        eta_low: eta,
        method: BoundsMethod::Corollary2,
    })
}

/// Bounds for `m` uniformly weighted MUB measurements in dimension `d`.
pub fn mub_bounds(d: usize, m: usize) -> BoundsReport {
    let (df, mf) = (d as f64, m as f64);
    let t = 1.0 + (mf - 1.0) / df.sqrt();
    BoundsReport {
        lower: 1.0 - t / mf,
        upper: (df - 1.0) * (mf - 1.0) / ((df + 1.0) * mf),
        t,
        eta_low: eta_low(d, m),
        method: BoundsMethod::MubClosedForm,
    }
}

/// `T = max_λ ‖Σ_{a,x} v(a|x,λ) M_{a|x}‖_∞` by exhaustive enumeration.
/// Returns `T` and the smallest maximizing `λ`.
pub fn compute_t(a: &WeightedAssemblage, config: &SolverConfig) -> Result<(f64, usize)> {
    let st = strategies::enumerate(a.settings(), a.outcomes(), config.enumeration_cap)?;
    let d = a.dim();
    let score = |l: usize| {
        let mut s = linalg::zeros(d);
        for x in 0..a.settings() {
            s += a.effect(x, st.outcome(l, x));
        }
        linalg::max_eigenvalue(&s)
    };
    // Effects are PSD, so the spectral norm of the sum is its top eigenvalue.
    exec::argmax_range(st.count(), config.execution, score)
        .map(|(l, t)| (t, l))
        .ok_or_else(|| Error::InvalidArgument("assemblage has no strategies".into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub incompatibility: f64,
    /// Depolarizing robustness `(dT − m)/(dm − m)`.
    pub eta: f64,
}

pub fn is_prime_power(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let p = (2..=n).find(|k| n % k == 0).unwrap();
    let mut r = n;
    while r % p == 0 {
        r /= p;
    }
    r == 1
}

/// `1 − T/m` for the standard MUB construction with `m ∈ {2, d, d+1}`.
///
/// The caller asserts that the assemblage is a standard-construction MUB in
/// prime-power dimension; only `d` and `m` are checked here.
pub fn mub_closed_form_incompatibility(d: usize, m: usize, t: f64) -> Result<ClosedForm> {
    if !is_prime_power(d) {
        return Err(Error::InvalidArgument(format!("dimension {d} is not a prime power")));
    }
    if !(m == 2 || m == d || m == d + 1) {
        return Err(Error::InadmissibleM { m, d });
    }
    let (df, mf) = (d as f64, m as f64);
    Ok(ClosedForm { incompatibility: 1.0 - t / mf, eta: (df * t - mf) / (df * mf - mf) })
}
