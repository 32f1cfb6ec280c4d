//! Schatten-norm and ℓ1 distances between assemblages and the quantifiers
//! they induce.
//!
//! `R_1` is provided as an ingredient of the bound chain only: the trace
//! distance does not give a quantifier that is monotone under all free
//! operations.

use crate::assemblage::{check_same_shape, WeightedAssemblage};
use crate::config::SolverConfig;
use crate::conic::{ConicProblem, LinExpr, MatExpr};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::monotones::{self, build_free_vars, check_free_set, jm_strategies, FreeSetSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schatten {
    One,
    Inf,
}

/// `D_p(M, N) = Σ_{a,x} p(x) (1/2) ‖M_{a|x} − N_{a|x}‖_p`.
pub fn schatten_distance(a: &WeightedAssemblage, b: &WeightedAssemblage, p: Schatten) -> Result<f64> {
    check_same_shape(a, b)?;
    let norm = match p {
        Schatten::One => linalg::trace_norm_of,
        Schatten::Inf => linalg::spectral_norm_of,
    };
    let mut total = 0.0;
    for x in 0..a.settings() {
        let s: f64 = (0..a.outcomes())
            .map(|k| {
                // canonical order keeps D(a, b) and D(b, a) bit-identical
                let (u, v) = (a.effect(x, k), b.effect(x, k));
                if monotones::lex_less(v, u) {
                    norm(&(v - u))
                } else {
                    norm(&(u - v))
                }
            })
            .sum();
        total += a.weight(x) * 0.5 * s;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AltKind {
    RInf,
    R1,
    RL1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AltQuantifierResult {
    pub kind: AltKind,
    pub value: f64,
    /// Optimal free effects `F_{a|x}`.
    pub free_assemblage: Vec<Vec<CMat>>,
}

/// Largest number of outcomes whose sign patterns are enumerated.
pub const MAX_SIGN_OUTCOMES: usize = 20;

fn quantifier(assemblage: &WeightedAssemblage, free: &FreeSetSpec, kind: AltKind, config: &SolverConfig) -> Result<AltQuantifierResult> {
    check_free_set(assemblage, free)?;
    let (d, m, o) = (assemblage.dim(), assemblage.settings(), assemblage.outcomes());
    if kind == AltKind::RL1 && o > MAX_SIGN_OUTCOMES {
        return Err(Error::SignPatternOverflow { outcomes: o });
    }
    let strategies = match free {
        FreeSetSpec::Jm => Some(jm_strategies(assemblage, config)?),
        _ => None,
    };
    let mut p = ConicProblem::new();
    let (_, f) = build_free_vars(&mut p, assemblage, free, strategies.as_ref());
    let delta: Vec<Vec<MatExpr>> = (0..m)
        .map(|x| (0..o).map(|a| MatExpr::zero(d).add_const(assemblage.effect(x, a), 1.0).add_expr(&f[x][a], -1.0)).collect())
        .collect();
    let mut obj = LinExpr::new();
    for x in 0..m {
        let w = assemblage.weight(x);
        match kind {
            AltKind::RInf => {
                for a in 0..o {
                    let t = p.nonneg(format!("t[{x}][{a}]"));
                    p.spectral_norm_bound(format!("‖Δ[{x}][{a}]‖ <= t"), t, &delta[x][a]);
                    obj = obj.add_var(t, 0.5 * w);
                }
            }
            AltKind::R1 => {
                for a in 0..o {
                    let tn = p.trace_norm_bound(format!("‖Δ[{x}][{a}]‖_1"), &delta[x][a]);
                    obj = obj.add_expr(&tn, 0.5 * w);
                }
            }
            AltKind::RL1 => {
                let t = p.scalar(format!("t[{x}]"));
                for s in 0..(1usize << o) {
                    let mut e = MatExpr::zero(d).add_scalar_identity(t, 1.0);
                    for a in 0..o {
                        let sign = if s >> a & 1 == 1 { -0.5 } else { 0.5 };
                        e = e.add_expr(&delta[x][a], -sign);
                    }
                    p.psd(format!("t[{x}] I >= sum_a s_a Δ[{x}][a] / 2, s={s:b}"), e);
                }
                obj = obj.add_var(t, w);
            }
        }
    }
    p.minimize(obj);
    let sol = p.solve_optimal(config)?;
    let free_assemblage =
        f.iter().map(|fx| fx.iter().map(|e| linalg::hermitize(&e.eval(&sol.x))).collect()).collect();
    Ok(AltQuantifierResult { kind, value: sol.objective_value, free_assemblage })
}

/// `R_∞ = min_{F free} D_∞(M, F)`.
pub fn r_inf(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<AltQuantifierResult> {
    quantifier(assemblage, free, AltKind::RInf, config)
}

/// `R_1 = min_{F free} D_1(M, F)`. Bound ingredient only; not a monotone.
pub fn r_1(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<AltQuantifierResult> {
    quantifier(assemblage, free, AltKind::R1, config)
}

/// `R_ℓ1 = min_{F free} Σ_x p(x) max_ρ (1/2) Σ_a |Tr[(M_{a|x} − F_{a|x}) ρ]|`.
///
/// The inner maximum is the largest `λ_max((1/2) Σ_a s_a Δ_a)` over sign
/// patterns `s ∈ {±1}^o`, so the quantifier is a single program with one
/// epigraph constraint per setting and pattern.
pub fn r_l1(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<AltQuantifierResult> {
    quantifier(assemblage, free, AltKind::RL1, config)
}

/// `max_ρ (1/2) Σ_a |Tr[Δ_a ρ]|` for one setting, by pattern enumeration.
pub fn l1_distance(m: &[CMat], f: &[CMat]) -> Result<f64> {
    if m.len() != f.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} outcomes", m.len(), f.len())));
    }
    let o = m.len();
    if o > MAX_SIGN_OUTCOMES {
        return Err(Error::SignPatternOverflow { outcomes: o });
    }
    let delta: Vec<CMat> = m.iter().zip(f).map(|(a, b)| a - b).collect();
    let d = m.first().map(|x| x.nrows()).unwrap_or(0);
    let mut best = 0.0f64;
    for s in 0..(1usize << o) {
        let mut sum = linalg::zeros(d);
        for (a, da) in delta.iter().enumerate() {
            let sign = if s >> a & 1 == 1 { -0.5 } else { 0.5 };
            sum += linalg::scale(da, sign);
        }
        best = best.max(linalg::max_eigenvalue(&sum));
    }
    Ok(best)
}

/// The five quantities of `(1/d)R_∞ ≤ (1/d)R_1 ≤ R⋄ ≤ R_∞ ≤ R_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundChain {
    pub dim: usize,
    pub r_inf: f64,
    pub r_1: f64,
    pub r_diamond: f64,
}

impl BoundChain {
    /// The chain in order, left to right.
    pub fn values(&self) -> [f64; 5] {
        let d = self.dim as f64;
        [self.r_inf / d, self.r_1 / d, self.r_diamond, self.r_inf, self.r_1]
    }

    /// Differences `right − left` of consecutive entries.
    pub fn slacks(&self) -> [f64; 4] {
        let v = self.values();
        [v[1] - v[0], v[2] - v[1], v[3] - v[2], v[4] - v[3]]
    }

    pub fn min_slack(&self) -> f64 {
        self.slacks().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack() >= -tol
    }
}

/// Computes the chain; fails with `NumericalTrouble` if it is violated by
/// more than `1e-6`.
pub fn bound_chain_check(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<BoundChain> {
    let chain = bound_chain(assemblage, free, config)?;
    if !chain.holds(1e-6) {
        return Err(Error::NumericalTrouble(format!("bound chain violated: {:?}", chain.values())));
    }
    Ok(chain)
}

/// Computes the chain without judging it.
pub fn bound_chain(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<BoundChain> {
    let r_diamond = monotones::resource_value(assemblage, free, config)?.dual;
    Ok(BoundChain {
        dim: assemblage.dim(),
        r_inf: r_inf(assemblage, free, config)?.value,
        r_1: r_1(assemblage, free, config)?.value,
        r_diamond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::{heisenberg_weyl_mub, random_assemblage, random_povm, Povm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn distance_to_self_and_symmetry() {
        let a = random_assemblage(3, 2, 3, 1).unwrap();
        let b = random_assemblage(3, 2, 3, 2).unwrap();
        for p in [Schatten::One, Schatten::Inf] {
            assert_eq!(schatten_distance(&a, &a, p).unwrap(), 0.0);
            assert_eq!(schatten_distance(&a, &b, p).unwrap(), schatten_distance(&b, &a, p).unwrap());
        }
    }

    #[test]
    fn depolarized_z_distance() {
        // M = {|0><0|, |1><1|}, N = μ M + (1-μ) I/2; the differences are
        // ±(1-μ)σ_z/2 with spectral norm (1-μ)/2 and trace norm (1-μ).
        let mu = 0.3;
        let z = WeightedAssemblage::uniform(vec![Povm::computational(2)]).unwrap();
        let n = z.map_effects(|e| linalg::scale(e, mu) + linalg::scale(&linalg::identity(2), (1.0 - mu) / 2.0)).unwrap();
        let dinf = schatten_distance(&z, &n, Schatten::Inf).unwrap();
        let d1 = schatten_distance(&z, &n, Schatten::One).unwrap();
        assert!((dinf - (1.0 - mu) / 2.0).abs() < 1e-12);
        assert!((d1 - (1.0 - mu)).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = random_assemblage(2, 2, 2, 1).unwrap();
        let b = random_assemblage(2, 3, 2, 1).unwrap();
        assert!(matches!(schatten_distance(&a, &b, Schatten::Inf), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn free_element_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = random_povm(2, 3, &mut rng).unwrap();
        let a = WeightedAssemblage::uniform(vec![z]).unwrap();
        for kind in [r_inf, r_1, r_l1] {
            let r = kind(&a, &FreeSetSpec::Jm, &cfg()).unwrap();
            assert!(r.value.abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn qubit_xz_chain() {
        let a = heisenberg_weyl_mub(2, 2).unwrap();
        let c = bound_chain_check(&a, &FreeSetSpec::Jm, &cfg()).unwrap();
        assert!((c.r_diamond - 0.1464).abs() < 5e-5);
        assert!(c.r_inf >= c.r_diamond - 1e-6);
    }

    #[test]
    fn dichotomic_quantifiers_coincide() {
        let a = random_assemblage(3, 2, 2, 9).unwrap();
        let d = monotones::incompatibility(&a, &cfg()).unwrap();
        let ri = r_inf(&a, &FreeSetSpec::Jm, &cfg()).unwrap().value;
        let rl = r_l1(&a, &FreeSetSpec::Jm, &cfg()).unwrap().value;
        assert!((d - ri).abs() < 1e-5 && (d - rl).abs() < 1e-5, "{d} {ri} {rl}");
    }

    #[test]
    fn l1_below_diamond_three_outcomes() {
        let a = random_assemblage(3, 2, 3, 5).unwrap();
        let d = monotones::incompatibility(&a, &cfg()).unwrap();
        let rl = r_l1(&a, &FreeSetSpec::Jm, &cfg()).unwrap();
        assert!(rl.value <= d + 1e-6, "{} > {d}", rl.value);
        // Re-evaluate the optimizer with the enumerating oracle.
        let direct: f64 = (0..2)
            .map(|x| a.weight(x) * l1_distance(a.povm(x).effects(), &rl.free_assemblage[x]).unwrap())
            .sum();
        assert!((direct - rl.value).abs() < 1e-6, "{direct} vs {}", rl.value);
    }

    #[test]
    fn optimizers_evaluate_to_reported_values() {
        let a = random_assemblage(2, 2, 3, 6).unwrap();
        for p in [Schatten::Inf, Schatten::One] {
            let r = match p {
                Schatten::Inf => r_inf(&a, &FreeSetSpec::Ui, &cfg()),
                Schatten::One => r_1(&a, &FreeSetSpec::Ui, &cfg()),
            }
            .unwrap();
            let fa = WeightedAssemblage::unchecked(
                r.free_assemblage.iter().map(|fx| Povm::unchecked(fx.clone()).unwrap()).collect(),
                a.weights().to_vec(),
            )
            .unwrap();
            let direct = schatten_distance(&a, &fa, p).unwrap();
            assert!((direct - r.value).abs() < 1e-6, "{p:?}: {direct} vs {}", r.value);
        }
    }

    #[test]
    fn sign_pattern_cap() {
        let m: Vec<CMat> = (0..21).map(|_| linalg::zeros(2)).collect();
        assert!(matches!(l1_distance(&m, &m), Err(Error::SignPatternOverflow { outcomes: 21 })));
    }
}
