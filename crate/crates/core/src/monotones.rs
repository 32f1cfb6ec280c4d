//! Diamond-distance resource monotones for measurement assemblages:
//! informativeness (free set UI), coherence (IC) and incompatibility (JM).
//!
//! The Choi matrices of measure-and-prepare channels are block diagonal, so
//! the programs carry one `d x d` block `Z_{a|x}` per effect instead of a
//! full `od x od` matrix `Z_x`. Certificates are reported in the full form.

use crate::assemblage::{Povm, WeightedAssemblage};
use crate::config::SolverConfig;
use crate::conic::{ConicProblem, LinExpr, MatExpr, MatVar, ScalarVar};
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, CMat};
use crate::strategies::{self, DeterministicStrategySet};

/// The free set a monotone is measured against.
#[derive(Clone, Debug, PartialEq)]
pub enum FreeSetSpec {
    /// Uninformative: `F_{a|x} = q(a|x) I`.
    Ui,
    /// Incoherent in the basis given by the columns of `basis`.
    Ic { basis: CMat },
    /// Jointly measurable.
    Jm,
}

impl FreeSetSpec {
    /// Incoherent effects in the computational basis.
    pub fn ic_computational(d: usize) -> Self {
        FreeSetSpec::Ic { basis: linalg::identity(d) }
    }

    /// Incoherent effects in an orthonormal basis (columns of `basis`).
    pub fn ic(basis: CMat) -> Result<Self> {
        let d = basis.nrows();
        if basis.ncols() != d {
            return Err(Error::DimensionMismatch("basis must be square".into()));
        }
        let dev = linalg::max_abs_entry(&(basis.adjoint() * &basis - linalg::identity(d)));
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!("basis is not orthonormal (deviation {dev:.2e})")));
        }
        Ok(FreeSetSpec::Ic { basis })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FreeSetSpec::Ui => "informativeness",
            FreeSetSpec::Ic { .. } => "coherence",
            FreeSetSpec::Jm => "incompatibility",
        }
    }

    fn basis_projectors(&self) -> Vec<CMat> {
        match self {
            FreeSetSpec::Ic { basis } => (0..basis.ncols()).map(|i| linalg::outer(&basis.column(i).into_owned())).collect(),
            _ => Vec::new(),
        }
    }
}

/// `J(M) = Σ_a |a><a| ⊗ M_a^T`.
pub fn choi(povm: &Povm) -> CMat {
    let d = povm.dim();
    let o = povm.outcomes();
    let mut j = CMat::zeros(o * d, o * d);
    for (a, e) in povm.effects().iter().enumerate() {
        j.view_mut((a * d, a * d), (d, d)).copy_from(&e.transpose());
    }
    j
}

/// The optimizing free assemblage, in the parameters of its free set.
#[derive(Clone, Debug, PartialEq)]
pub enum FreeAssemblage {
    /// `q[x][a]`.
    Ui(Vec<Vec<f64>>),
    /// `alpha[x][a][i]`.
    Ic(Vec<Vec<Vec<f64>>>),
    /// Parent POVM `G_λ`, indexed as the deterministic strategies.
    Jm(Vec<CMat>),
}

#[derive(Clone, Debug)]
pub struct PrimalCertificate {
    pub value: f64,
    /// Full `od x od` matrices `Z_x`.
    pub z: Vec<CMat>,
    pub a: Vec<f64>,
    pub free_assemblage: FreeAssemblage,
    /// `F_{a|x}` reconstructed from `free_assemblage`.
    pub free_effects: Vec<Vec<CMat>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Multipliers {
    Jm(CMat),
    Ui(Vec<f64>),
    Ic(Vec<Vec<f64>>),
}

#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub value: f64,
    /// `C[x][a]`.
    pub c: Vec<Vec<CMat>>,
    pub rho: Vec<CMat>,
    pub multipliers: Multipliers,
}

impl DualCertificate {
    /// `Σ p(x) Tr[M_{a|x} C_{a|x}]`.
    pub fn quantum_value(&self, assemblage: &WeightedAssemblage) -> f64 {
        weighted_overlap(assemblage, &self.c)
    }

    /// Value of the multiplier term (`Tr L`, `Σ ℓ_x` or `Σ ℓ_{x,i}`).
    pub fn multiplier_bound(&self) -> f64 {
        match &self.multipliers {
            Multipliers::Jm(l) => linalg::trace(l).re,
            Multipliers::Ui(l) => l.iter().sum(),
            Multipliers::Ic(l) => l.iter().flatten().sum(),
        }
    }
}

fn weighted_overlap(assemblage: &WeightedAssemblage, c: &[Vec<CMat>]) -> f64 {
    let mut s = 0.0;
    for x in 0..assemblage.settings() {
        for a in 0..assemblage.outcomes() {
            s += assemblage.weight(x) * linalg::trace_product_re(assemblage.effect(x, a), &c[x][a]);
        }
    }
    s
}

pub(crate) fn check_free_set(assemblage: &WeightedAssemblage, free: &FreeSetSpec) -> Result<()> {
    if let FreeSetSpec::Ic { basis } = free {
        if basis.nrows() != assemblage.dim() {
            return Err(Error::DimensionMismatch(format!(
                "incoherent basis has dimension {}, assemblage {}",
                basis.nrows(),
                assemblage.dim()
            )));
        }
    }
    Ok(())
}

pub(crate) fn jm_strategies(assemblage: &WeightedAssemblage, config: &SolverConfig) -> Result<DeterministicStrategySet> {
    strategies::enumerate(assemblage.settings(), assemblage.outcomes(), config.enumeration_cap)
}

/// Free-set variables of the primal, with the affine expressions `F_{a|x}`.
pub(crate) enum FreeVars {
    Ui(Vec<Vec<ScalarVar>>),
    Ic(Vec<Vec<Vec<ScalarVar>>>),
    Jm(Vec<MatVar>),
}

pub(crate) fn build_free_vars(
    p: &mut ConicProblem,
    assemblage: &WeightedAssemblage,
    free: &FreeSetSpec,
    strategies: Option<&DeterministicStrategySet>,
) -> (FreeVars, Vec<Vec<MatExpr>>) {
    let d = assemblage.dim();
    let m = assemblage.settings();
    let o = assemblage.outcomes();
    let id = linalg::identity(d);
    match free {
        FreeSetSpec::Ui => {
            let q: Vec<Vec<ScalarVar>> =
                (0..m).map(|x| (0..o).map(|a| p.nonneg(format!("q[{x}][{a}]"))).collect()).collect();
            for (x, qx) in q.iter().enumerate() {
                let sum = qx.iter().fold(LinExpr::constant(-1.0), |e, &v| e.add_var(v, 1.0));
                p.eq(format!("sum_a q[{x}] = 1"), sum);
            }
            let f = q.iter().map(|qx| qx.iter().map(|&v| MatExpr::zero(d).add_scalar(v, &id)).collect()).collect();
            (FreeVars::Ui(q), f)
        }
        FreeSetSpec::Ic { .. } => {
            let proj = free.basis_projectors();
            let alpha: Vec<Vec<Vec<ScalarVar>>> = (0..m)
                .map(|x| (0..o).map(|a| (0..d).map(|i| p.nonneg(format!("alpha[{x}][{a}][{i}]"))).collect()).collect())
                .collect();
            for (x, ax) in alpha.iter().enumerate() {
                for i in 0..d {
                    let sum = ax.iter().fold(LinExpr::constant(-1.0), |e, v| e.add_var(v[i], 1.0));
                    p.eq(format!("sum_a alpha[{x}][.][{i}] = 1"), sum);
                }
            }
            let f = alpha
                .iter()
                .map(|ax| {
                    ax.iter()
                        .map(|v| v.iter().zip(&proj).fold(MatExpr::zero(d), |e, (&s, pi)| e.add_scalar(s, pi)))
                        .collect()
                })
                .collect();
            (FreeVars::Ic(alpha), f)
        }
        FreeSetSpec::Jm => {
            let st = strategies.expect("strategies enumerated for JM");
            let g: Vec<MatVar> = (0..st.count()).map(|l| p.psd_var(format!("G[{l}]"), d)).collect();
            let total = g.iter().fold(MatExpr::zero(d).add_const(&id, -1.0), |e, &gl| e.add_var(gl, 1.0));
            p.mat_eq("sum G = I", total);
            let f = (0..m)
                .map(|x| {
                    (0..o).map(|a| st.with_outcome(x, a).fold(MatExpr::zero(d), |e, l| e.add_var(g[l], 1.0))).collect()
                })
                .collect();
            (FreeVars::Jm(g), f)
        }
    }
}

/// Builds the primal program; `fixed` replaces the free-set variables by a
/// given free assemblage.
fn primal_problem(
    assemblage: &WeightedAssemblage,
    f: Vec<Vec<MatExpr>>,
    p: &mut ConicProblem,
) -> (Vec<ScalarVar>, Vec<Vec<MatVar>>) {
    let d = assemblage.dim();
    let m = assemblage.settings();
    let o = assemblage.outcomes();
    let mut avars = Vec::with_capacity(m);
    let mut zvars = Vec::with_capacity(m);
    let mut obj = LinExpr::new();
    for x in 0..m {
        let ax = p.nonneg(format!("a[{x}]"));
        let mut zx = Vec::with_capacity(o);
        let mut bound = MatExpr::zero(d).add_scalar_identity(ax, 1.0);
        for a in 0..o {
            let z = p.psd_var(format!("Z[{x}][{a}]"), d);
            let gap = MatExpr::var(z).add_const(assemblage.effect(x, a), -1.0).add_expr(&f[x][a], 1.0);
            p.psd(format!("Z[{x}][{a}] >= M - F"), gap);
            bound = bound.add_var(z, -1.0);
            zx.push(z);
        }
        p.psd(format!("a[{x}] I >= Tr_1 Z[{x}]"), bound);
        obj = obj.add_var(ax, assemblage.weight(x));
        avars.push(ax);
        zvars.push(zx);
    }
    p.minimize(obj);
    (avars, zvars)
}

fn block_diag_transpose(blocks: &[CMat]) -> CMat {
    let d = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let n = blocks.len() * d;
    let mut z = CMat::zeros(n, n);
    for (a, b) in blocks.iter().enumerate() {
        z.view_mut((a * d, a * d), (d, d)).copy_from(&b.transpose());
    }
    z
}

/// Solves the primal program (minimization over `a_x`, `Z_x` and `F`).
pub fn resource_primal(
    assemblage: &WeightedAssemblage,
    free: &FreeSetSpec,
    config: &SolverConfig,
) -> Result<PrimalCertificate> {
    check_free_set(assemblage, free)?;
    let strategies = match free {
        FreeSetSpec::Jm => Some(jm_strategies(assemblage, config)?),
        _ => None,
    };
    let mut p = ConicProblem::new();
    let (vars, f) = build_free_vars(&mut p, assemblage, free, strategies.as_ref());
    let (avars, zvars) = primal_problem(assemblage, f.clone(), &mut p);
    let s = p.solve_optimal(config)?;
    let free_effects: Vec<Vec<CMat>> =
        f.iter().map(|fx| fx.iter().map(|e| linalg::hermitize(&e.eval(&s.x))).collect()).collect();
    let free_assemblage = match vars {
        FreeVars::Ui(q) => FreeAssemblage::Ui(q.iter().map(|qx| qx.iter().map(|&v| s.scalar(v)).collect()).collect()),
        FreeVars::Ic(alpha) => FreeAssemblage::Ic(
            alpha.iter().map(|ax| ax.iter().map(|v| v.iter().map(|&s_| s.scalar(s_)).collect()).collect()).collect(),
        ),
        FreeVars::Jm(g) => FreeAssemblage::Jm(g.iter().map(|&gl| s.matrix(gl)).collect()),
    };
    Ok(PrimalCertificate {
        value: s.objective_value,
        z: zvars.iter().map(|zx| block_diag_transpose(&zx.iter().map(|&z| s.matrix(z)).collect::<Vec<_>>())).collect(),
        a: avars.iter().map(|&v| s.scalar(v)).collect(),
        free_assemblage,
        free_effects,
    })
}

/// Solves the dual program (maximization over `C_{a|x}`, `ρ_x` and the
/// multipliers of the free set).
pub fn resource_dual(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<DualCertificate> {
    check_free_set(assemblage, free)?;
    let d = assemblage.dim();
    let m = assemblage.settings();
    let o = assemblage.outcomes();
    let mut p = ConicProblem::new();
    let mut obj = LinExpr::new();
    let mut rho = Vec::with_capacity(m);
    let mut cv: Vec<Vec<MatVar>> = Vec::with_capacity(m);
    for x in 0..m {
        let r = p.psd_var(format!("rho[{x}]"), d);
        p.eq(format!("Tr rho[{x}] = 1"), LinExpr::new().add_trace_identity(r, 1.0).add_const(-1.0));
        let mut cx = Vec::with_capacity(o);
        for a in 0..o {
            let c = p.psd_var(format!("C[{x}][{a}]"), d);
            p.psd(format!("rho[{x}] >= C[{x}][{a}]"), MatExpr::var(r).add_var(c, -1.0));
            obj = obj.add_trace(c, assemblage.effect(x, a), assemblage.weight(x));
            cx.push(c);
        }
        rho.push(r);
        cv.push(cx);
    }
    enum Mult {
        Jm(MatVar),
        Ui(Vec<ScalarVar>),
        Ic(Vec<Vec<ScalarVar>>),
    }
    let mult = match free {
        FreeSetSpec::Jm => {
            let st = jm_strategies(assemblage, config)?;
            let l = p.hermitian("L", d);
            for lambda in 0..st.count() {
                let mut e = MatExpr::var(l);
                for (x, cx) in cv.iter().enumerate() {
                    e = e.add_var(cx[st.outcome(lambda, x)], -assemblage.weight(x));
                }
                p.psd(format!("L >= K[{lambda}]"), e);
            }
            obj = obj.add_trace_identity(l, -1.0);
            Mult::Jm(l)
        }
        FreeSetSpec::Ui => {
            let l: Vec<ScalarVar> = (0..m).map(|x| p.scalar(format!("l[{x}]"))).collect();
            for x in 0..m {
                for a in 0..o {
                    let e = LinExpr::var(l[x]).add_trace_identity(cv[x][a], -assemblage.weight(x));
                    p.ge(format!("l[{x}] >= p Tr C[{x}][{a}]"), e);
                }
                obj = obj.add_var(l[x], -1.0);
            }
            Mult::Ui(l)
        }
        FreeSetSpec::Ic { .. } => {
            let proj = free.basis_projectors();
            let l: Vec<Vec<ScalarVar>> =
                (0..m).map(|x| (0..d).map(|i| p.scalar(format!("l[{x}][{i}]"))).collect()).collect();
            for x in 0..m {
                for (i, pi) in proj.iter().enumerate() {
                    for a in 0..o {
                        let e = LinExpr::var(l[x][i]).add_trace(cv[x][a], pi, -assemblage.weight(x));
                        p.ge(format!("l[{x}][{i}] >= p <i|C[{x}][{a}]|i>"), e);
                    }
                    obj = obj.add_var(l[x][i], -1.0);
                }
            }
            Mult::Ic(l)
        }
    };
    p.maximize(obj);
    let s = p.solve_optimal(config)?;
    let multipliers = match mult {
        Mult::Jm(l) => Multipliers::Jm(s.matrix(l)),
        Mult::Ui(l) => Multipliers::Ui(l.iter().map(|&v| s.scalar(v)).collect()),
        Mult::Ic(l) => Multipliers::Ic(l.iter().map(|lx| lx.iter().map(|&v| s.scalar(v)).collect()).collect()),
    };
    Ok(DualCertificate {
        value: s.objective_value,
        c: cv.iter().map(|cx| cx.iter().map(|&c| s.matrix(c)).collect()).collect(),
        rho: rho.iter().map(|&r| s.matrix(r)).collect(),
        multipliers,
    })
}

/// Primal and dual values of one monotone.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceValue {
    pub primal: f64,
    pub dual: f64,
}

impl ResourceValue {
    pub fn gap(&self) -> f64 {
        (self.primal - self.dual).abs()
    }
}

/// Dual value, cross-checked against the primal when `config.cross_check`.
pub fn resource_value(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<ResourceValue> {
    if matches!(free, FreeSetSpec::Jm) && assemblage.settings() <= 1 {
        return Ok(ResourceValue { primal: 0.0, dual: 0.0 });
    }
    let dual = resource_dual(assemblage, free, config)?.value;
    let primal = if config.cross_check { resource_primal(assemblage, free, config)?.value } else { dual };
    if (primal - dual).abs() > config.duality_tol {
        return Err(Error::DualityGap { primal, dual });
    }
    Ok(ResourceValue { primal, dual })
}

/// Informativeness, measured against uninformative effects `q(a|x) I`.
pub fn informativeness(assemblage: &WeightedAssemblage, config: &SolverConfig) -> Result<f64> {
    resource_value(assemblage, &FreeSetSpec::Ui, config).map(|v| v.dual)
}

/// Coherence with respect to the columns of `basis` (computational if `None`).
pub fn coherence(assemblage: &WeightedAssemblage, basis: Option<&CMat>, config: &SolverConfig) -> Result<f64> {
    let free = match basis {
        Some(b) => FreeSetSpec::ic(b.clone())?,
        None => FreeSetSpec::ic_computational(assemblage.dim()),
    };
    resource_value(assemblage, &free, config).map(|v| v.dual)
}

/// Incompatibility, measured against jointly measurable assemblages.
pub fn incompatibility(assemblage: &WeightedAssemblage, config: &SolverConfig) -> Result<f64> {
    resource_value(assemblage, &FreeSetSpec::Jm, config).map(|v| v.dual)
}

/// `Σ_x p(x) D⋄(M_x, F_x)` for a fixed assemblage `F` of the same shape,
/// from the block-reduced primal with `F` held constant.
pub fn fixed_free_value(assemblage: &WeightedAssemblage, free_effects: &[Vec<CMat>], config: &SolverConfig) -> Result<f64> {
    let f: Vec<Vec<MatExpr>> = free_effects.iter().map(|fx| fx.iter().map(MatExpr::constant).collect()).collect();
    let mut p = ConicProblem::new();
    primal_problem(assemblage, f, &mut p);
    Ok(p.solve_optimal(config)?.objective_value)
}

/// Diamond distance `(1/2)‖Λ_M − Λ_F‖⋄` between two measure-and-prepare
/// channels, from the Watrous program on the full `od x od` Choi matrices.
pub fn diamond_distance(m: &Povm, f: &Povm, config: &SolverConfig) -> Result<f64> {
    if m.dim() != f.dim() {
        return Err(Error::DimensionMismatch(format!("POVMs on C^{} and C^{}", m.dim(), f.dim())));
    }
    let o = m.outcomes().max(f.outcomes());
    let pad = |p: &Povm| -> Result<Povm> {
        let mut e = p.effects().to_vec();
        e.resize(o, linalg::zeros(p.dim()));
        Povm::unchecked(e)
    };
    // evaluate on a canonical order so the value is exactly symmetric
    let (jm, jf) = {
        let (a, b) = (choi(&pad(m)?), choi(&pad(f)?));
        if lex_less(&b, &a) {
            (b, a)
        } else {
            (a, b)
        }
    };
    let d = m.dim();
    let n = o * d;
    let mut p = ConicProblem::new();
    let t = p.nonneg("t");
    let z = p.psd_var("Z", n);
    p.psd("Z >= J(M) - J(F)", MatExpr::var(z).add_const(&jm, -1.0).add_const(&jf, 1.0));
    // t I - Tr_1 Z, with Tr_1 summing the diagonal d x d blocks of Z
    let zexpr = MatExpr::var(z);
    let z_blocks = (0..o).fold(MatExpr::zero(d).add_scalar_identity(t, 1.0), |e, a| {
        e.add_expr(&zexpr.principal_block(a * d, d), -1.0)
    });
    p.psd("t I >= Tr_1 Z", z_blocks);
    p.minimize(LinExpr::var(t));
    Ok(p.solve_optimal(config)?.objective_value)
}

/// `D(M, N) = Σ_x p(x) D⋄(Λ_{M_x}, Λ_{N_x})` for assemblages of the same
/// shape and weights.
pub fn assemblage_distance(m: &WeightedAssemblage, n: &WeightedAssemblage, config: &SolverConfig) -> Result<f64> {
    crate::assemblage::check_same_shape(m, n)?;
    let per_setting = exec::map_range(m.settings(), config.execution, |x| diamond_distance(m.povm(x), n.povm(x), config));
    let mut total = 0.0;
    for (x, d) in per_setting.into_iter().enumerate() {
        total += m.weight(x) * d?;
    }
    Ok(total)
}

pub(crate) fn lex_less(a: &CMat, b: &CMat) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x.re != y.re {
            return x.re < y.re;
        }
        if x.im != y.im {
            return x.im < y.im;
        }
    }
    false
}

/// Optimal setting distribution for the incompatibility of unweighted
/// measurements and the attained value.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalWeights {
    pub weights: Vec<f64>,
    pub value: f64,
}

/// Maximizes the incompatibility over the setting distribution, with
/// `C'_{a|x} = p(x) C_{a|x}` and `H_x = p(x) ρ_x` so that `p(x) = Tr H_x`.
/// The weights stored in `assemblage` are ignored.
pub fn incompatibility_optimal_weights(assemblage: &WeightedAssemblage, config: &SolverConfig) -> Result<OptimalWeights> {
    let d = assemblage.dim();
    let m = assemblage.settings();
    let o = assemblage.outcomes();
    if m <= 1 {
        return Ok(OptimalWeights { weights: vec![1.0; m], value: 0.0 });
    }
    let st = jm_strategies(assemblage, config)?;
    let mut p = ConicProblem::new();
    let mut obj = LinExpr::new();
    let mut total = LinExpr::constant(-1.0);
    let mut hv = Vec::with_capacity(m);
    let mut cv: Vec<Vec<MatVar>> = Vec::with_capacity(m);
    for x in 0..m {
        let h = p.psd_var(format!("H[{x}]"), d);
        total = total.add_trace_identity(h, 1.0);
        let mut cx = Vec::with_capacity(o);
        for a in 0..o {
            let c = p.psd_var(format!("C'[{x}][{a}]"), d);
            p.psd(format!("H[{x}] >= C'[{x}][{a}]"), MatExpr::var(h).add_var(c, -1.0));
            obj = obj.add_trace(c, assemblage.effect(x, a), 1.0);
            cx.push(c);
        }
        hv.push(h);
        cv.push(cx);
    }
    p.eq("sum Tr H = 1", total);
    let l = p.hermitian("L", d);
    for lambda in 0..st.count() {
        let e = (0..m).fold(MatExpr::var(l), |e, x| e.add_var(cv[x][st.outcome(lambda, x)], -1.0));
        p.psd(format!("L >= K[{lambda}]"), e);
    }
    obj = obj.add_trace_identity(l, -1.0);
    p.maximize(obj);
    let s = p.solve_optimal(config)?;
    let mut weights: Vec<f64> = hv.iter().map(|&h| linalg::trace(&s.matrix(h)).re.max(0.0)).collect();
    let norm: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= norm);
    Ok(OptimalWeights { weights, value: s.objective_value })
}

/// Smallest `t` such that some free assemblage `F` has
/// `max_x ‖J(M_x) − J(F_x)‖_∞ <= t`. Zero exactly on the free set.
pub fn distance_to_free_set(assemblage: &WeightedAssemblage, free: &FreeSetSpec, config: &SolverConfig) -> Result<f64> {
    check_free_set(assemblage, free)?;
    let strategies = match free {
        FreeSetSpec::Jm => Some(jm_strategies(assemblage, config)?),
        _ => None,
    };
    let mut p = ConicProblem::new();
    let (_, f) = build_free_vars(&mut p, assemblage, free, strategies.as_ref());
    let t = p.nonneg("t");
    for (x, fx) in f.iter().enumerate() {
        for (a, fa) in fx.iter().enumerate() {
            // the Choi difference is block diagonal, so its norm is the
            // largest block norm
            let diff = fa.clone().add_const(assemblage.effect(x, a), -1.0);
            p.spectral_norm_bound(format!("|M - F|[{x}][{a}] <= t"), t, &diff);
        }
    }
    p.minimize(LinExpr::var(t));
    Ok(p.solve_optimal(config)?.objective_value.max(0.0))
}

/// Residuals of a primal certificate, recomputed on the full Choi matrices.
/// Returns labels of the violated conditions.
pub fn check_primal_certificate(
    assemblage: &WeightedAssemblage,
    cert: &PrimalCertificate,
    tol: f64,
) -> Vec<String> {
    let d = assemblage.dim();
    let o = assemblage.outcomes();
    let mut out = Vec::new();
    for x in 0..assemblage.settings() {
        let z = &cert.z[x];
        if linalg::min_eigenvalue(z) < -tol {
            out.push(format!("Z[{x}] not PSD"));
        }
        let jf = choi(&Povm::unchecked(cert.free_effects[x].clone()).expect("shape"));
        let gap = z - (choi(assemblage.povm(x)) - jf);
        if linalg::min_eigenvalue(&gap) < -tol {
            out.push(format!("Z[{x}] below J(M) - J(F)"));
        }
        let tr1 = linalg::partial_trace_first(z, o, d).expect("shape");
        if linalg::min_eigenvalue(&(linalg::scale(&linalg::identity(d), cert.a[x]) - tr1)) < -tol {
            out.push(format!("a[{x}] I below Tr_1 Z[{x}]"));
        }
        let sum = cert.free_effects[x].iter().fold(linalg::zeros(d), |s, e| s + e);
        if linalg::max_abs_entry(&(sum - linalg::identity(d))) > tol {
            out.push(format!("F[{x}] incomplete"));
        }
        for (a, e) in cert.free_effects[x].iter().enumerate() {
            if linalg::min_eigenvalue(e) < -tol {
                out.push(format!("F[{x}][{a}] not PSD"));
            }
        }
    }
    let value: f64 = (0..assemblage.settings()).map(|x| assemblage.weight(x) * cert.a[x]).sum();
    if (value - cert.value).abs() > tol {
        out.push("value differs from Σ p a".into());
    }
    out
}

/// Residuals of a dual certificate. Multiplier inequalities are checked
/// over every deterministic strategy (JM), outcome (UI) or basis index (IC).
pub fn check_dual_certificate(
    assemblage: &WeightedAssemblage,
    free: &FreeSetSpec,
    cert: &DualCertificate,
    config: &SolverConfig,
) -> Result<Vec<String>> {
    let tol = config.feasibility_tol;
    let d = assemblage.dim();
    let m = assemblage.settings();
    let o = assemblage.outcomes();
    let mut out = Vec::new();
    for x in 0..m {
        let r = &cert.rho[x];
        if linalg::min_eigenvalue(r) < -tol {
            out.push(format!("rho[{x}] not PSD"));
        }
        if (linalg::trace(r).re - 1.0).abs() > tol {
            out.push(format!("Tr rho[{x}] != 1"));
        }
        for a in 0..o {
            let c = &cert.c[x][a];
            if linalg::min_eigenvalue(c) < -tol {
                out.push(format!("C[{x}][{a}] not PSD"));
            }
            if linalg::min_eigenvalue(&(r - c)) < -tol {
                out.push(format!("C[{x}][{a}] above rho[{x}]"));
            }
        }
    }
    match (&cert.multipliers, free) {
        (Multipliers::Jm(l), FreeSetSpec::Jm) => {
            let st = jm_strategies(assemblage, config)?;
            let bad = exec::map_range(st.count(), config.execution, |lambda| {
                let k = (0..m).fold(linalg::zeros(d), |k, x| {
                    k + linalg::scale(&cert.c[x][st.outcome(lambda, x)], assemblage.weight(x))
                });
                linalg::min_eigenvalue(&(l - k)) < -tol
            });
            if let Some(lambda) = bad.iter().position(|&b| b) {
                out.push(format!("L below K[{lambda}]"));
            }
        }
        (Multipliers::Ui(l), FreeSetSpec::Ui) => {
            for x in 0..m {
                for a in 0..o {
                    if l[x] < assemblage.weight(x) * linalg::trace(&cert.c[x][a]).re - tol {
                        out.push(format!("l[{x}] below p Tr C[{x}][{a}]"));
                    }
                }
            }
        }
        (Multipliers::Ic(l), FreeSetSpec::Ic { .. }) => {
            let proj = free.basis_projectors();
            for x in 0..m {
                for (i, pi) in proj.iter().enumerate() {
                    for a in 0..o {
                        if l[x][i] < assemblage.weight(x) * linalg::trace_product_re(pi, &cert.c[x][a]) - tol {
                            out.push(format!("l[{x}][{i}] below p <i|C[{x}][{a}]|i>"));
                        }
                    }
                }
            }
        }
        _ => out.push("multipliers do not match the free set".into()),
    }
    Ok(out)
}

/// `max_{F ∈ free} Σ p(x) Tr[F_{a|x} C_{a|x}]`, computed without the dual's
/// multipliers: closed forms for UI and IC, a separate SDP over parent
/// POVMs for JM.
pub fn classical_bound(
    assemblage: &WeightedAssemblage,
    free: &FreeSetSpec,
    c: &[Vec<CMat>],
    config: &SolverConfig,
) -> Result<f64> {
    let m = assemblage.settings();
    let o = assemblage.outcomes();
    let d = assemblage.dim();
    match free {
        FreeSetSpec::Ui => Ok((0..m)
            .map(|x| {
                let best = (0..o).map(|a| linalg::trace(&c[x][a]).re).fold(f64::NEG_INFINITY, f64::max);
                assemblage.weight(x) * best
            })
            .sum()),
        FreeSetSpec::Ic { .. } => {
            let proj = free.basis_projectors();
            Ok((0..m)
                .map(|x| {
                    proj.iter()
                        .map(|pi| {
                            let best =
                                (0..o).map(|a| linalg::trace_product_re(pi, &c[x][a])).fold(f64::NEG_INFINITY, f64::max);
                            assemblage.weight(x) * best
                        })
                        .sum::<f64>()
                })
                .sum())
        }
        FreeSetSpec::Jm => {
            let st = jm_strategies(assemblage, config)?;
            let mut p = ConicProblem::new();
            let g: Vec<MatVar> = (0..st.count()).map(|l| p.psd_var(format!("G[{l}]"), d)).collect();
            let id = linalg::identity(d);
            let total = g.iter().fold(MatExpr::zero(d).add_const(&id, -1.0), |e, &gl| e.add_var(gl, 1.0));
            p.mat_eq("sum G = I", total);
            let mut obj = LinExpr::new();
            for (lambda, &gl) in g.iter().enumerate() {
                let k = (0..m).fold(linalg::zeros(d), |k, x| k + linalg::scale(&c[x][st.outcome(lambda, x)], assemblage.weight(x)));
                obj = obj.add_trace(gl, &k, 1.0);
            }
            p.maximize(obj);
            Ok(p.solve_optimal(config)?.objective_value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::{heisenberg_weyl_mub, random_assemblage};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn qubit_xz() -> WeightedAssemblage {
        heisenberg_weyl_mub(2, 2).unwrap()
    }

    #[test]
    fn stalled_factorization_falls_back() {
        // faer stops at AlmostSolved slightly above the residual tolerance here
        let a = random_assemblage(3, 2, 3, 600).unwrap();
        let p = resource_primal(&a, &FreeSetSpec::Ui, &cfg()).unwrap().value;
        let d = resource_dual(&a, &FreeSetSpec::Ui, &cfg()).unwrap().value;
        assert!((p - d).abs() < 1e-6, "{p} {d}");
    }

    #[test]
    fn choi_of_computational_basis() {
        let j = choi(&Povm::computational(2));
        let expect = [1.0, 0.0, 0.0, 1.0];
        for i in 0..4 {
            for k in 0..4 {
                let want = if i == k { expect[i] } else { 0.0 };
                assert_eq!(j[(i, k)].re, want);
                assert_eq!(j[(i, k)].im, 0.0);
            }
        }
    }

    #[test]
    fn choi_of_trivial_povm_is_identity() {
        let j = choi(&Povm::trivial(3, &[1.0]).unwrap());
        assert_eq!(j, linalg::identity(3));
    }

    #[test]
    fn choi_trace_is_dimension() {
        let a = random_assemblage(3, 2, 4, 5).unwrap();
        for povm in a.povms() {
            assert!((linalg::trace(&choi(povm)).re - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_xz_incompatibility() {
        let a = qubit_xz();
        let v = resource_value(&a, &FreeSetSpec::Jm, &cfg()).unwrap();
        assert!((v.dual - 0.1464).abs() < 5e-5, "{v:?}");
        assert!(v.gap() < 1e-6);
    }

    #[test]
    fn single_setting_is_compatible() {
        let a = WeightedAssemblage::uniform(vec![Povm::computational(2)]).unwrap();
        assert_eq!(incompatibility(&a, &cfg()).unwrap(), 0.0);
        // also without the short cut
        let p = resource_primal(&a, &FreeSetSpec::Jm, &cfg()).unwrap();
        assert!(p.value.abs() < 1e-7);
    }

    #[test]
    fn computational_basis_is_incoherent() {
        let a = WeightedAssemblage::uniform(vec![Povm::computational(2)]).unwrap();
        let v = coherence(&a, None, &cfg()).unwrap();
        assert!(v.abs() < 1e-7);
    }

    #[test]
    fn informativeness_of_projective_measurements() {
        let a = heisenberg_weyl_mub(3, 2).unwrap();
        let v = informativeness(&a, &cfg()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-6);
        // explicit dual point C = M/d, rho = I/d, l_x = p(x)/d
        let d = 3.0;
        let c: Vec<Vec<CMat>> = a.povms().iter().map(|p| p.effects().iter().map(|e| linalg::scale(e, 1.0 / d)).collect()).collect();
        let lhs = weighted_overlap(&a, &c) - a.weights().iter().map(|w| w / d).sum::<f64>();
        assert!((lhs - (1.0 - 1.0 / d)).abs() < 1e-12);
    }

    #[test]
    fn certificates_verify() {
        let a = random_assemblage(2, 2, 2, 11).unwrap();
        for free in [FreeSetSpec::Ui, FreeSetSpec::ic_computational(2), FreeSetSpec::Jm] {
            let pc = resource_primal(&a, &free, &cfg()).unwrap();
            assert!(check_primal_certificate(&a, &pc, 1e-6).is_empty(), "{free:?}: {:?}", check_primal_certificate(&a, &pc, 1e-6));
            let dc = resource_dual(&a, &free, &cfg()).unwrap();
            assert!(check_dual_certificate(&a, &free, &dc, &cfg()).unwrap().is_empty());
            let witness = dc.quantum_value(&a) - classical_bound(&a, &free, &dc.c, &cfg()).unwrap();
            assert!((witness - dc.value).abs() < 1e-5, "{free:?}: {witness} vs {}", dc.value);
            assert!((pc.value - dc.value).abs() < 1e-5);
        }
    }

    #[test]
    fn diamond_distance_to_trivial_measurement() {
        let d = diamond_distance(&Povm::computational(2), &Povm::trivial(2, &[0.5, 0.5]).unwrap(), &cfg()).unwrap();
        assert!((d - 0.5).abs() < 1e-7);
        let z = diamond_distance(&Povm::computational(2), &Povm::computational(2), &cfg()).unwrap();
        assert!(z.abs() < 1e-7);
    }

    #[test]
    fn fixed_free_value_matches_per_setting_distances() {
        let a = qubit_xz();
        let pc = resource_primal(&a, &FreeSetSpec::Jm, &cfg()).unwrap();
        let fixed = fixed_free_value(&a, &pc.free_effects, &cfg()).unwrap();
        let direct: f64 = (0..a.settings())
            .map(|x| {
                let f = Povm::unchecked(pc.free_effects[x].clone()).unwrap();
                a.weight(x) * diamond_distance(a.povm(x), &f, &cfg()).unwrap()
            })
            .sum();
        assert!((fixed - direct).abs() < 1e-6);
        assert!((fixed - pc.value).abs() < 1e-6);
    }

    #[test]
    fn free_set_distance_is_zero_on_free_elements() {
        let a = WeightedAssemblage::uniform(vec![Povm::trivial(2, &[0.3, 0.7]).unwrap(), Povm::computational(2)]).unwrap();
        assert!(distance_to_free_set(&a, &FreeSetSpec::Jm, &cfg()).unwrap() < 1e-6);
        assert!(distance_to_free_set(&a, &FreeSetSpec::ic_computational(2), &cfg()).unwrap() < 1e-6);
        assert!(distance_to_free_set(&qubit_xz(), &FreeSetSpec::Jm, &cfg()).unwrap() > 1e-3);
    }

    #[test]
    fn optimal_weights_uniform_for_noiseless_pair() {
        let ow = incompatibility_optimal_weights(&qubit_xz(), &cfg()).unwrap();
        assert!((ow.weights[0] - 0.5).abs() < 1e-4, "{ow:?}");
        assert!((ow.value - 0.1464).abs() < 5e-5);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let mut b = linalg::identity(2);
        b[(0, 1)] = linalg::c(0.1, 0.0);
        assert!(FreeSetSpec::ic(b).is_err());
    }
}
