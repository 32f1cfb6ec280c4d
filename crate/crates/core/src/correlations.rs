//! Bell-scenario layer: state assemblages and behaviors generated from
//! measurements on a shared state, steerability (SDP) and nonlocality (LP)
//! with their inequality certificates.

use rand::Rng;

use crate::assemblage::{Povm, WeightedAssemblage};
use crate::config::{SolverConfig, Tolerances};
use crate::conic::{ConicProblem, LinExpr, MatExpr, MatVar, ScalarVar};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, DensityMatrix};
use crate::monotones::{self, FreeSetSpec};
use crate::random;
use crate::strategies::{self, BipartiteStrategySet, DeterministicStrategySet};

/// Conditional states `σ_{a|x}` with setting weights `p(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateAssemblage {
    dim: usize,
    members: Vec<Vec<CMat>>,
    weights: Vec<f64>,
}

impl StateAssemblage {
    /// Validated: members PSD, `Σ_a Tr σ_{a|x} = 1`, weights a distribution.
    pub fn new(members: Vec<Vec<CMat>>, weights: Vec<f64>) -> Result<Self> {
        let s = Self::unchecked(members, weights)?;
        let tol = Tolerances::default();
        for (x, sx) in s.members.iter().enumerate() {
            for (a, m) in sx.iter().enumerate() {
                if linalg::hermiticity_defect(m) > tol.hermiticity {
                    return Err(Error::InvalidArgument(format!("σ[{x}][{a}] is not Hermitian")));
                }
                let l = linalg::min_eigenvalue(m);
                if l < -tol.psd {
                    return Err(Error::InvalidArgument(format!("σ[{x}][{a}] has eigenvalue {l:.3e}")));
                }
            }
            let t: f64 = sx.iter().map(|m| linalg::trace(m).re).sum();
            if (t - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("Σ_a Tr σ[{x}] = {t}")));
            }
        }
        if s.weights.len() != s.members.len() {
            return Err(Error::ShapeMismatch(format!("{} weights for {} settings", s.weights.len(), s.members.len())));
        }
        if s.weights.iter().any(|&w| w <= 0.0 || !w.is_finite())
            || (s.weights.iter().sum::<f64>() - 1.0).abs() > tol.weight_sum.max(1e-12)
        {
            return Err(Error::InvalidArgument("weights must be positive and sum to 1".into()));
        }
        let members = s.members.into_iter().map(|sx| sx.iter().map(linalg::hermitize).collect()).collect();
        Ok(Self { members, ..s })
    }

    /// Shape checks only; members of a setting are padded with zeros.
    pub fn unchecked(members: Vec<Vec<CMat>>, weights: Vec<f64>) -> Result<Self> {
        let dim = members.first().and_then(|sx| sx.first()).map(|m| m.nrows()).unwrap_or(0);
        if members.iter().flatten().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::DimensionMismatch("members of unequal size".into()));
        }
        let o = members.iter().map(|sx| sx.len()).max().unwrap_or(0);
        let members = members
            .into_iter()
            .map(|mut sx| {
                sx.resize(o, linalg::zeros(dim));
                sx
            })
            .collect();
        Ok(Self { dim, members, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.members.len()
    }

    pub fn outcomes(&self) -> usize {
        self.members.first().map(|s| s.len()).unwrap_or(0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn member(&self, x: usize, a: usize) -> &CMat {
        &self.members[x][a]
    }

    pub fn members(&self) -> &[Vec<CMat>] {
        &self.members
    }

    /// `Σ_x p(x) Σ_a σ_{a|x}`, the reduced state when the assemblage is
    /// no-signaling.
    pub fn reduced_state(&self) -> CMat {
        let mut r = linalg::zeros(self.dim);
        for (x, sx) in self.members.iter().enumerate() {
            for m in sx {
                r += linalg::scale(m, self.weights[x]);
            }
        }
        r
    }
}

/// `σ_{a|x} = Tr_1[(M_{a|x} ⊗ I) ρ]`; weights are inherited.
pub fn steer(measurements: &WeightedAssemblage, state: &DensityMatrix) -> Result<StateAssemblage> {
    let da = measurements.dim();
    let n = state.dim();
    if da == 0 || n % da != 0 {
        return Err(Error::DimensionMismatch(format!("state of dimension {n} is not {da} x d_B")));
    }
    let db = n / da;
    let idb = linalg::identity(db);
    let mut members = Vec::with_capacity(measurements.settings());
    for x in 0..measurements.settings() {
        let mut sx = Vec::with_capacity(measurements.outcomes());
        for a in 0..measurements.outcomes() {
            let op = linalg::kron(measurements.effect(x, a), &idb) * state.matrix();
            sx.push(linalg::hermitize(&linalg::partial_trace_first(&op, da, db)?));
        }
        members.push(sx);
    }
    StateAssemblage::unchecked(members, measurements.weights().to_vec())
}

/// Joint outcome table `q(a,b|x,y)` with product setting weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    settings: (usize, usize),
    outcomes: (usize, usize),
    weights_a: Vec<f64>,
    weights_b: Vec<f64>,
    table: Vec<f64>,
}

impl Behavior {
    /// `table[x][y][a][b]`; rows must be normalized and nonnegative.
    pub fn new(table: Vec<Vec<Vec<Vec<f64>>>>, weights_a: Vec<f64>, weights_b: Vec<f64>) -> Result<Self> {
        let ma = table.len();
        let mb = table.first().map(|t| t.len()).unwrap_or(0);
        let oa = table.first().and_then(|t| t.first()).map(|t| t.len()).unwrap_or(0);
        let ob = table.first().and_then(|t| t.first()).and_then(|t| t.first()).map(|t| t.len()).unwrap_or(0);
        if weights_a.len() != ma || weights_b.len() != mb {
            return Err(Error::ShapeMismatch("weights do not match settings".into()));
        }
        let mut flat = Vec::with_capacity(ma * mb * oa * ob);
        for (x, tx) in table.iter().enumerate() {
            if tx.len() != mb {
                return Err(Error::ShapeMismatch(format!("row x={x} has {} Bob settings", tx.len())));
            }
            for (y, txy) in tx.iter().enumerate() {
                if txy.len() != oa || txy.iter().any(|r| r.len() != ob) {
                    return Err(Error::ShapeMismatch(format!("block ({x},{y}) has wrong shape")));
                }
                let sum: f64 = txy.iter().flatten().sum();
                if (sum - 1.0).abs() > 1e-9 || txy.iter().flatten().any(|&v| v < -1e-12 || !v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("q(.,.|{x},{y}) is not a distribution")));
                }
                flat.extend(txy.iter().flatten().copied());
            }
        }
        for w in [&weights_a, &weights_b] {
            if w.iter().any(|&v| v <= 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument("setting weights must be positive and sum to 1".into()));
            }
        }
        Ok(Self { settings: (ma, mb), outcomes: (oa, ob), weights_a, weights_b, table: flat })
    }

    pub fn settings(&self) -> (usize, usize) {
        self.settings
    }

    pub fn outcomes(&self) -> (usize, usize) {
        self.outcomes
    }

    fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((x * self.settings.1 + y) * self.outcomes.0 + a) * self.outcomes.1 + b
    }

    pub fn q(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.table[self.index(a, b, x, y)]
    }

    /// `p(x,y) = p_A(x) p_B(y)`.
    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.weights_a[x] * self.weights_b[y]
    }

    /// Largest deviation from no-signaling in either direction.
    pub fn signaling(&self) -> f64 {
        let (ma, mb) = self.settings;
        let (oa, ob) = self.outcomes;
        let mut worst: f64 = 0.0;
        for x in 0..ma {
            for a in 0..oa {
                let marg: Vec<f64> = (0..mb).map(|y| (0..ob).map(|b| self.q(a, b, x, y)).sum()).collect();
                for v in &marg {
                    worst = worst.max((v - marg[0]).abs());
                }
            }
        }
        for y in 0..mb {
            for b in 0..ob {
                let marg: Vec<f64> = (0..ma).map(|x| (0..oa).map(|a| self.q(a, b, x, y)).sum()).collect();
                for v in &marg {
                    worst = worst.max((v - marg[0]).abs());
                }
            }
        }
        worst
    }

    /// `Σ p(x,y) C_{ab|xy} q(a,b|x,y)` for coefficients laid out like the table.
    pub fn pair(&self, coefficients: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in 0..self.settings.0 {
            for y in 0..self.settings.1 {
                for a in 0..self.outcomes.0 {
                    for b in 0..self.outcomes.1 {
                        let i = self.index(a, b, x, y);
                        s += self.p(x, y) * coefficients[i] * self.table[i];
                    }
                }
            }
        }
        s
    }

    /// The deterministic behavior of a strategy pair.
    pub fn deterministic(&self, strategies: &BipartiteStrategySet, lambda: usize) -> Self {
        let (la, lb) = strategies.decode(lambda);
        let mut table = vec![0.0; self.table.len()];
        for x in 0..self.settings.0 {
            for y in 0..self.settings.1 {
                let (a, b) = (strategies.alice.outcome(la, x), strategies.bob.outcome(lb, y));
                table[self.index(a, b, x, y)] = 1.0;
            }
        }
        Self { table, ..self.clone() }
    }

    /// Convex combination `Σ π(λ) t_λ` of deterministic behaviors.
    pub fn local_mixture(&self, strategies: &BipartiteStrategySet, pi: &[f64]) -> Self {
        let mut table = vec![0.0; self.table.len()];
        for (lambda, &w) in pi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (la, lb) = strategies.decode(lambda);
            for x in 0..self.settings.0 {
                for y in 0..self.settings.1 {
                    let (a, b) = (strategies.alice.outcome(la, x), strategies.bob.outcome(lb, y));
                    table[self.index(a, b, x, y)] += w;
                }
            }
        }
        Self { table, ..self.clone() }
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }
}

/// `q(a,b|x,y) = Tr[(M_{a|x} ⊗ N_{b|y}) ρ]`, `p(x,y) = p_A(x) p_B(y)`.
pub fn behavior(alice: &WeightedAssemblage, bob: &WeightedAssemblage, state: &DensityMatrix) -> Result<Behavior> {
    if alice.dim() * bob.dim() != state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurements on C^{} x C^{} but state of dimension {}",
            alice.dim(),
            bob.dim(),
            state.dim()
        )));
    }
    let rho = state.matrix();
    let table = (0..alice.settings())
        .map(|x| {
            (0..bob.settings())
                .map(|y| {
                    (0..alice.outcomes())
                        .map(|a| {
                            (0..bob.outcomes())
                                .map(|b| {
                                    let op = linalg::kron(alice.effect(x, a), bob.effect(y, b));
                                    linalg::trace_product_re(&op, rho).max(0.0)
                                })
                                .collect::<Vec<f64>>()
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .map(|tx: Vec<Vec<Vec<f64>>>| {
            // remove rounding so each block sums to one exactly
            tx.into_iter()
                .map(|txy| {
                    let s: f64 = txy.iter().flatten().sum();
                    txy.into_iter().map(|r| r.into_iter().map(|v| v / s).collect()).collect()
                })
                .collect()
        })
        .collect();
    Behavior::new(table, alice.weights().to_vec(), bob.weights().to_vec())
}

/// Bob's measurements `(Z ± X)/√2` that attain the Tsirelson bound with
/// Alice measuring `Z` and `X` on `|Φ+>`.
pub fn chsh_bob() -> WeightedAssemblage {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMat::from_row_slice(2, 2, &[linalg::c(1.0, 0.0), linalg::ZERO, linalg::ZERO, linalg::c(-1.0, 0.0)]);
    let x = CMat::from_row_slice(2, 2, &[linalg::ZERO, linalg::ONE, linalg::ONE, linalg::ZERO]);
    let povm = |obs: CMat| -> Povm {
        let id = linalg::identity(2);
        Povm::new(vec![linalg::scale(&(&id + &obs), 0.5), linalg::scale(&(&id - &obs), 0.5)]).expect("valid")
    };
    let plus = linalg::scale(&(&z + &x), s);
    let minus = linalg::scale(&(&z - &x), s);
    WeightedAssemblage::uniform(vec![povm(plus), povm(minus)]).expect("valid")
}

/// Dual-side data of the steerability.
#[derive(Clone, Debug)]
pub struct SteeringCertificate {
    /// Dual value, reported as the steerability.
    pub value: f64,
    pub primal_value: f64,
    /// Functional `G_{a|x}`, `0 ⪯ G ⪯ I`.
    pub g: Vec<Vec<CMat>>,
    /// Classical bound: `ℓ`, or `Tr[Y ρ_B]` with the consistency constraint.
    pub classical_bound: f64,
    /// `Y` when the consistency constraint is imposed.
    pub y: Option<CMat>,
    /// Hidden states `σ_λ` of the closest LHS model.
    pub hidden_states: Vec<CMat>,
}

impl SteeringCertificate {
    /// `Σ p(x) Tr[τ_{a|x} G_{a|x}]`.
    pub fn evaluate(&self, assemblage: &StateAssemblage) -> f64 {
        let mut s = 0.0;
        for x in 0..assemblage.settings() {
            for a in 0..assemblage.outcomes() {
                s += assemblage.weights()[x] * linalg::trace_product_re(assemblage.member(x, a), &self.g[x][a]);
            }
        }
        s
    }
}

/// Options for the steerability programs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SteeringOptions {
    /// Impose `Σ_λ σ_λ = ρ_B` on the LHS model.
    pub consistency: bool,
}

/// Primal: `min (1/4) Σ p Tr[U + W]` over trace-norm blocks of
/// `σ_{a|x} − Σ_λ v σ_λ`. Returns the value and the hidden states.
pub fn steerability_primal(
    assemblage: &StateAssemblage,
    options: SteeringOptions,
    config: &SolverConfig,
) -> Result<(f64, Vec<CMat>)> {
    let st = strategies::enumerate(assemblage.settings(), assemblage.outcomes(), config.enumeration_cap)?;
    let d = assemblage.dim();
    let mut p = ConicProblem::new();
    let hidden: Vec<MatVar> = (0..st.count()).map(|l| p.psd_var(format!("sigma[{l}]"), d)).collect();
    if options.consistency {
        let e = hidden.iter().fold(MatExpr::zero(d).add_const(&assemblage.reduced_state(), -1.0), |e, &h| e.add_var(h, 1.0));
        p.mat_eq("sum sigma = rho_B", e);
    } else {
        let e = hidden.iter().fold(LinExpr::constant(-1.0), |e, &h| e.add_trace_identity(h, 1.0));
        p.eq("Tr sum sigma = 1", e);
    }
    let mut obj = LinExpr::new();
    for x in 0..assemblage.settings() {
        for a in 0..assemblage.outcomes() {
            let delta = st
                .with_outcome(x, a)
                .fold(MatExpr::constant(assemblage.member(x, a)), |e, l| e.add_var(hidden[l], -1.0));
            let tn = p.trace_norm_bound(format!("|delta[{x}][{a}]|_1"), &delta);
            obj = obj.add_expr(&tn, 0.5 * assemblage.weights()[x]);
        }
    }
    p.minimize(obj);
    let s = p.solve_optimal(config)?;
    Ok((s.objective_value, hidden.iter().map(|&h| s.matrix(h)).collect()))
}

/// Dual: `max Σ p Tr[G σ] − ℓ` with `ℓ I ⪰ Σ p v G` for all `λ`.
pub fn steerability_dual(
    assemblage: &StateAssemblage,
    options: SteeringOptions,
    config: &SolverConfig,
) -> Result<(f64, Vec<Vec<CMat>>, f64, Option<CMat>)> {
    let st = strategies::enumerate(assemblage.settings(), assemblage.outcomes(), config.enumeration_cap)?;
    let d = assemblage.dim();
    let id = linalg::identity(d);
    let mut p = ConicProblem::new();
    let mut obj = LinExpr::new();
    let mut g: Vec<Vec<MatVar>> = Vec::new();
    for x in 0..assemblage.settings() {
        let mut gx = Vec::new();
        for a in 0..assemblage.outcomes() {
            let v = p.psd_var(format!("G[{x}][{a}]"), d);
            p.psd(format!("G[{x}][{a}] <= I"), MatExpr::constant(&id).add_var(v, -1.0));
            obj = obj.add_trace(v, assemblage.member(x, a), assemblage.weights()[x]);
            gx.push(v);
        }
        g.push(gx);
    }
    enum Bound {
        Scalar(ScalarVar),
        Matrix(MatVar),
    }
    let bound = if options.consistency {
        Bound::Matrix(p.hermitian("Y", d))
    } else {
        Bound::Scalar(p.scalar("l"))
    };
    for lambda in 0..st.count() {
        let mut e = match bound {
            Bound::Scalar(l) => MatExpr::zero(d).add_scalar_identity(l, 1.0),
            Bound::Matrix(y) => MatExpr::var(y),
        };
        for (x, gx) in g.iter().enumerate() {
            e = e.add_var(gx[st.outcome(lambda, x)], -assemblage.weights()[x]);
        }
        p.psd(format!("bound >= K[{lambda}]"), e);
    }
    let rho_b = assemblage.reduced_state();
    obj = match bound {
        Bound::Scalar(l) => obj.add_var(l, -1.0),
        Bound::Matrix(y) => obj.add_trace(y, &rho_b, -1.0),
    };
    p.maximize(obj);
    let s = p.solve_optimal(config)?;
    let gm: Vec<Vec<CMat>> = g.iter().map(|gx| gx.iter().map(|&v| s.matrix(v)).collect()).collect();
    let (classical, y) = match bound {
        Bound::Scalar(l) => (s.scalar(l), None),
        Bound::Matrix(y) => {
            let ym = s.matrix(y);
            (linalg::trace_product_re(&ym, &rho_b), Some(ym))
        }
    };
    Ok((s.objective_value, gm, classical, y))
}

/// Steerability with primal/dual cross-check.
pub fn steerability_with(
    assemblage: &StateAssemblage,
    options: SteeringOptions,
    config: &SolverConfig,
) -> Result<SteeringCertificate> {
    let (value, g, classical_bound, y) = steerability_dual(assemblage, options, config)?;
    let (primal_value, hidden_states) = steerability_primal(assemblage, options, config)?;
    if (primal_value - value).abs() > config.duality_tol {
        return Err(Error::DualityGap { primal: primal_value, dual: value });
    }
    Ok(SteeringCertificate { value, primal_value, g, classical_bound, y, hidden_states })
}

/// Steerability without the consistency constraint.
pub fn steerability(assemblage: &StateAssemblage, config: &SolverConfig) -> Result<SteeringCertificate> {
    steerability_with(assemblage, SteeringOptions::default(), config)
}

/// Unsteerable assemblage `τ_{a|x} = Σ_λ v(a|x,λ) σ_λ` from random hidden states.
pub fn random_lhs<R: Rng + ?Sized>(d: usize, m: usize, o: usize, weights: &[f64], rng: &mut R) -> Result<StateAssemblage> {
    let st = strategies::enumerate(m, o, u64::MAX)?;
    let probs = random::simplex_point(st.count(), rng);
    let hidden: Vec<CMat> = probs.iter().map(|&w| linalg::scale(&random::density_matrix(d, d, rng), w)).collect();
    let members = (0..m)
        .map(|x| (0..o).map(|a| st.with_outcome(x, a).fold(linalg::zeros(d), |acc, l| acc + &hidden[l])).collect())
        .collect();
    StateAssemblage::new(members, weights.to_vec())
}

/// Dual-side data of the nonlocality.
#[derive(Clone, Debug)]
pub struct BellCertificate {
    pub value: f64,
    pub primal_value: f64,
    /// `C_{ab|xy} ∈ [0, 1]`, laid out like the behavior table.
    pub coefficients: Vec<f64>,
    pub local_bound: f64,
    /// Weights `π(λ)` of the closest local model.
    pub pi: Vec<f64>,
}

fn bell_strategies(q: &Behavior, config: &SolverConfig) -> Result<BipartiteStrategySet> {
    let (ma, mb) = q.settings();
    let (oa, ob) = q.outcomes();
    strategies::enumerate_bipartite(ma, oa, mb, ob, config.enumeration_cap)
}

fn deterministic_entry(st: &BipartiteStrategySet, lambda: usize, a: usize, b: usize, x: usize, y: usize) -> bool {
    let (la, lb) = st.decode(lambda);
    st.alice.outcome(la, x) == a && st.bob.outcome(lb, y) == b
}

/// Primal LP: `min Σ A` with `A − B = p(q − Σ π v_A v_B)`, `Σ π = 1`.
pub fn nonlocality_primal(q: &Behavior, config: &SolverConfig) -> Result<(f64, Vec<f64>)> {
    let st = bell_strategies(q, config)?;
    let (ma, mb) = q.settings();
    let (oa, ob) = q.outcomes();
    let mut p = ConicProblem::new();
    let pi: Vec<ScalarVar> = (0..st.count()).map(|l| p.nonneg(format!("pi[{l}]"))).collect();
    p.eq("sum pi = 1", pi.iter().fold(LinExpr::constant(-1.0), |e, &v| e.add_var(v, 1.0)));
    // λ lists per table entry, built once
    let mut support: Vec<Vec<usize>> = vec![Vec::new(); q.table().len()];
    for lambda in 0..st.count() {
        let (la, lb) = st.decode(lambda);
        for x in 0..ma {
            for y in 0..mb {
                let (a, b) = (st.alice.outcome(la, x), st.bob.outcome(lb, y));
                support[q.index(a, b, x, y)].push(lambda);
            }
        }
    }
    let mut obj = LinExpr::new();
    for x in 0..ma {
        for y in 0..mb {
            for a in 0..oa {
                for b in 0..ob {
                    let i = q.index(a, b, x, y);
                    let av = p.nonneg(format!("A[{i}]"));
                    let bv = p.nonneg(format!("B[{i}]"));
                    let pxy = q.p(x, y);
                    let mut e = LinExpr::var(av).add_var(bv, -1.0).add_const(-pxy * q.q(a, b, x, y));
                    for &l in &support[i] {
                        e = e.add_var(pi[l], pxy);
                    }
                    p.eq(format!("A - B [{i}]"), e);
                    obj = obj.add_var(av, 1.0);
                }
            }
        }
    }
    p.minimize(obj);
    let s = p.solve_optimal(config)?;
    Ok((s.objective_value, pi.iter().map(|&v| s.scalar(v).max(0.0)).collect()))
}

/// Dual LP: `max Σ p C q − ℓ'` with `ℓ' ≥ Σ p C v_A v_B`, `0 ≤ C ≤ 1`.
pub fn nonlocality_dual(q: &Behavior, config: &SolverConfig) -> Result<(f64, Vec<f64>, f64)> {
    let st = bell_strategies(q, config)?;
    let (ma, mb) = q.settings();
    let mut p = ConicProblem::new();
    let c: Vec<ScalarVar> = (0..q.table().len()).map(|i| p.nonneg(format!("C[{i}]"))).collect();
    for (i, &v) in c.iter().enumerate() {
        p.ge(format!("C[{i}] <= 1"), LinExpr::constant(1.0).add_var(v, -1.0));
    }
    let l = p.scalar("l'");
    for lambda in 0..st.count() {
        let (la, lb) = st.decode(lambda);
        let mut e = LinExpr::var(l);
        for x in 0..ma {
            for y in 0..mb {
                let (a, b) = (st.alice.outcome(la, x), st.bob.outcome(lb, y));
                e = e.add_var(c[q.index(a, b, x, y)], -q.p(x, y));
            }
        }
        p.ge(format!("l' >= local[{lambda}]"), e);
    }
    let mut obj = LinExpr::new().add_var(l, -1.0);
    for x in 0..ma {
        for y in 0..q.settings().1 {
            for a in 0..q.outcomes().0 {
                for b in 0..q.outcomes().1 {
                    let i = q.index(a, b, x, y);
                    obj = obj.add_var(c[i], q.p(x, y) * q.q(a, b, x, y));
                }
            }
        }
    }
    p.maximize(obj);
    let s = p.solve_optimal(config)?;
    Ok((s.objective_value, c.iter().map(|&v| s.scalar(v)).collect(), s.scalar(l)))
}

/// Nonlocality with primal/dual cross-check (LP gap `<= 1e-7`).
pub fn nonlocality(q: &Behavior, config: &SolverConfig) -> Result<BellCertificate> {
    let lp = config.clone().tight();
    let (value, coefficients, local_bound) = nonlocality_dual(q, &lp)?;
    let (primal_value, pi) = nonlocality_primal(q, &lp)?;
    if (primal_value - value).abs() > 1e-7 {
        return Err(Error::DualityGap { primal: primal_value, dual: value });
    }
    Ok(BellCertificate { value, primal_value, coefficients, local_bound, pi })
}

/// Largest `Σ p C t` over deterministic local behaviors, by enumeration.
pub fn local_bound_by_enumeration(q: &Behavior, coefficients: &[f64], config: &SolverConfig) -> Result<f64> {
    let st = bell_strategies(q, config)?;
    let (ma, mb) = q.settings();
    let (oa, ob) = q.outcomes();
    let mut best = f64::NEG_INFINITY;
    for lambda in 0..st.count() {
        let mut s = 0.0;
        for x in 0..ma {
            for y in 0..mb {
                for a in 0..oa {
                    for b in 0..ob {
                        if deterministic_entry(&st, lambda, a, b, x, y) {
                            s += q.p(x, y) * coefficients[q.index(a, b, x, y)];
                        }
                    }
                }
            }
        }
        best = best.max(s);
    }
    Ok(best)
}

/// The five quantifiers of one scenario, strongest resource first.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyReport {
    pub informativeness: f64,
    pub coherence: f64,
    pub incompatibility: f64,
    pub steerability: f64,
    pub nonlocality: f64,
}

impl HierarchyReport {
    pub fn values(&self) -> [f64; 5] {
        [self.informativeness, self.coherence, self.incompatibility, self.steerability, self.nonlocality]
    }

    /// Consecutive differences `IF − C`, `C − I`, `I − S`, `S − N`.
    pub fn slacks(&self) -> [f64; 4] {
        let v = self.values();
        [v[0] - v[1], v[1] - v[2], v[2] - v[3], v[3] - v[4]]
    }

    /// Labels of links where the chain fails by more than `tol`.
    pub fn violations(&self, tol: f64) -> Vec<&'static str> {
        const LINKS: [&str; 4] = ["IF >= C", "C >= I", "I >= S", "S >= N"];
        self.slacks().iter().zip(LINKS).filter(|(s, _)| **s < -tol).map(|(_, l)| l).collect()
    }

    pub fn is_ordered(&self, tol: f64) -> bool {
        self.violations(tol).is_empty()
    }
}

/// `IF ≥ C ≥ I` on Alice's measurements, `S` of the assemblage they steer,
/// and `N` of the joint behavior with Bob.
pub fn hierarchy_report(
    alice: &WeightedAssemblage,
    bob: &WeightedAssemblage,
    state: &DensityMatrix,
    config: &SolverConfig,
) -> Result<HierarchyReport> {
    let sigma = steer(alice, state)?;
    let q = behavior(alice, bob, state)?;
    Ok(HierarchyReport {
        informativeness: monotones::informativeness(alice, config)?,
        coherence: monotones::resource_value(alice, &FreeSetSpec::ic_computational(alice.dim()), config)?.dual,
        incompatibility: monotones::incompatibility(alice, config)?,
        steerability: steerability(&sigma, config)?.value,
        nonlocality: nonlocality(&q, config)?.value,
    })
}

/// Alice's strategy set for a state assemblage.
pub fn lhs_strategies(assemblage: &StateAssemblage, config: &SolverConfig) -> Result<DeterministicStrategySet> {
    strategies::enumerate(assemblage.settings(), assemblage.outcomes(), config.enumeration_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::{cglmp_pair, heisenberg_weyl_mub, Party};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn steering_phi_plus_gives_transposes() {
        let m = heisenberg_weyl_mub(3, 2).unwrap();
        let s = steer(&m, &DensityMatrix::phi_plus(3)).unwrap();
        for x in 0..2 {
            for a in 0..3 {
                let want = linalg::scale(&m.effect(x, a).transpose(), 1.0 / 3.0);
                assert!(linalg::max_abs_entry(&(s.member(x, a) - want)) < 1e-12);
            }
        }
    }

    #[test]
    fn product_state_is_unsteerable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ra = random::density_matrix(2, 2, &mut rng);
        let rb = random::density_matrix(2, 2, &mut rng);
        let rho = DensityMatrix::new(linalg::kron(&ra, &rb), &Tolerances::default()).unwrap();
        let m = heisenberg_weyl_mub(2, 2).unwrap();
        let s = steer(&m, &rho).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                let want = linalg::scale(&rb, linalg::trace_product_re(m.effect(x, a), &ra));
                assert!(linalg::max_abs_entry(&(s.member(x, a) - want)) < 1e-12);
            }
        }
        assert!(steerability(&s, &cfg()).unwrap().value.abs() < 1e-6);
    }

    #[test]
    fn qubit_xz_steerability() {
        let s = steer(&heisenberg_weyl_mub(2, 2).unwrap(), &DensityMatrix::phi_plus(2)).unwrap();
        let cert = steerability(&s, &cfg()).unwrap();
        assert!((cert.value - 0.1464).abs() < 5e-5, "{}", cert.value);
        assert!((cert.evaluate(&s) - cert.classical_bound - cert.value).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let t = random_lhs(2, 2, 2, s.weights(), &mut rng).unwrap();
            assert!(cert.evaluate(&t) <= cert.classical_bound + 1e-6);
        }
    }

    #[test]
    fn consistency_flag_never_lowers_steerability() {
        let s = steer(&heisenberg_weyl_mub(2, 2).unwrap(), &DensityMatrix::phi_plus(2)).unwrap();
        let free = steerability(&s, &cfg()).unwrap().value;
        let cons = steerability_with(&s, SteeringOptions { consistency: true }, &cfg()).unwrap();
        assert!(cons.value >= free - 1e-6);
        assert!(cons.y.is_some());
    }

    #[test]
    fn behavior_rows_and_marginals() {
        let alice = cglmp_pair(2, Party::Alice).unwrap();
        let bob = cglmp_pair(2, Party::Bob).unwrap();
        let rho = DensityMatrix::phi_plus(2);
        let q = behavior(&alice, &bob, &rho).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let op = linalg::kron(alice.effect(x, a), bob.effect(y, b));
                        let direct = (op * rho.matrix()).trace().re;
                        assert!((q.q(a, b, x, y) - direct).abs() < 1e-12);
                    }
                }
            }
        }
        assert!(q.signaling() < 1e-12);
    }

    #[test]
    fn local_behavior_has_no_nonlocality() {
        let q = behavior(&chsh_bob(), &chsh_bob(), &DensityMatrix::phi_plus(2)).unwrap();
        let st = bell_strategies(&q, &cfg()).unwrap();
        let det = q.deterministic(&st, 5);
        let cert = nonlocality(&det, &cfg()).unwrap();
        assert!(cert.value.abs() < 1e-7);
    }

    #[test]
    fn chsh_certificate_is_a_bell_inequality() {
        let q = behavior(&heisenberg_weyl_mub(2, 2).unwrap(), &chsh_bob(), &DensityMatrix::phi_plus(2)).unwrap();
        let cert = nonlocality(&q, &cfg()).unwrap();
        assert!(cert.value > 0.0);
        assert!((q.pair(&cert.coefficients) - cert.local_bound - cert.value).abs() < 1e-7);
        let lb = local_bound_by_enumeration(&q, &cert.coefficients, &cfg()).unwrap();
        assert!((lb - cert.local_bound).abs() < 1e-7);
        assert!((cert.pi.iter().sum::<f64>() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_mismatched_state() {
        let m = heisenberg_weyl_mub(2, 2).unwrap();
        assert!(matches!(steer(&m, &DensityMatrix::phi_plus(3)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(behavior(&m, &m, &DensityMatrix::phi_plus(3)), Err(Error::DimensionMismatch(_))));
    }
}
