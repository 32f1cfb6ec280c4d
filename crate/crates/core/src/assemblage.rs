//! Measurement assemblages and their constructors.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64, ONE};
use crate::random;

/// A violated assemblage invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    NoSettings,
    NoOutcomes,
    DimensionMismatch { setting: usize, expected: usize, found: usize },
    NonFinite { setting: usize, outcome: usize },
    NonHermitian { setting: usize, outcome: usize, defect: f64 },
    /// Smallest eigenvalue of an effect that should be PSD.
    PositivityViolation { setting: usize, outcome: usize, min_eigenvalue: f64 },
    /// Largest entry of `Σ_a M_{a|x} - I` in modulus.
    CompletenessViolation { setting: usize, deviation: f64 },
    WeightCount { settings: usize, weights: usize },
    NonPositiveWeight { setting: usize, weight: f64 },
    /// `|Σ_x p(x) - 1|`.
    WeightNormalization { deviation: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Diagnostic::*;
        match self {
            NoSettings => write!(f, "no settings"),
            NoOutcomes => write!(f, "no outcomes"),
            DimensionMismatch { setting, expected, found } => {
                write!(f, "setting {setting}: dimension {found}, expected {expected}")
            }
            NonFinite { setting, outcome } => write!(f, "M[{outcome}|{setting}] has non-finite entries"),
            NonHermitian { setting, outcome, defect } => {
                write!(f, "M[{outcome}|{setting}] not Hermitian (defect {defect:.3e})")
            }
            PositivityViolation { setting, outcome, min_eigenvalue } => {
                write!(f, "M[{outcome}|{setting}] has eigenvalue {min_eigenvalue:.3e}")
            }
            CompletenessViolation { setting, deviation } => {
                write!(f, "setting {setting}: effects miss identity by {deviation:.3e}")
            }
            WeightCount { settings, weights } => write!(f, "{weights} weights for {settings} settings"),
            NonPositiveWeight { setting, weight } => write!(f, "p({setting}) = {weight}"),
            WeightNormalization { deviation } => write!(f, "weights miss unit sum by {deviation:.3e}"),
        }
    }
}

/// A POVM on `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<CMat>,
}

impl Povm {
    /// Validated POVM. Effects are stored exactly Hermitian.
    pub fn new(effects: Vec<CMat>) -> Result<Self> {
        let p = Self::unchecked(effects)?;
        let diags = p.diagnostics(0, &Tolerances::default());
        if diags.is_empty() {
            Ok(p.hermitized())
        } else {
            Err(Error::InvalidAssemblage(diags))
        }
    }

    /// Shape checks only; positivity and completeness are not verified.
    pub fn unchecked(effects: Vec<CMat>) -> Result<Self> {
        let dim = effects.first().map(|e| e.nrows()).unwrap_or(0);
        for e in &effects {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch("effects of unequal size".into()));
            }
        }
        Ok(Self { dim, effects })
    }

    fn hermitized(self) -> Self {
        Self { dim: self.dim, effects: self.effects.iter().map(linalg::hermitize).collect() }
    }

    /// Projective measurement onto the columns of a unitary.
    pub fn from_basis(u: &CMat) -> Result<Self> {
        let effects = (0..u.ncols()).map(|k| linalg::outer(&u.column(k).into_owned())).collect();
        Self::new(effects)
    }

    pub fn computational(d: usize) -> Self {
        Self { dim: d, effects: (0..d).map(|i| linalg::basis_projector(d, i)).collect() }
    }

    /// `{q_a I}`.
    pub fn trivial(d: usize, probabilities: &[f64]) -> Result<Self> {
        Self::new(probabilities.iter().map(|&q| linalg::scale(&linalg::identity(d), q)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn effect(&self, a: usize) -> &CMat {
        &self.effects[a]
    }

    fn padded(&self, o: usize) -> Self {
        let mut effects = self.effects.clone();
        effects.resize(o, linalg::zeros(self.dim));
        Self { dim: self.dim, effects }
    }

    fn diagnostics(&self, setting: usize, tol: &Tolerances) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.effects.is_empty() {
            out.push(Diagnostic::NoOutcomes);
            return out;
        }
        let mut sum = linalg::zeros(self.dim);
        for (a, e) in self.effects.iter().enumerate() {
            if !linalg::is_finite(e) {
                out.push(Diagnostic::NonFinite { setting, outcome: a });
                continue;
            }
            let defect = linalg::hermiticity_defect(e);
            if defect > tol.hermiticity {
                out.push(Diagnostic::NonHermitian { setting, outcome: a, defect });
            }
            let lmin = linalg::min_eigenvalue(e);
            if lmin < -tol.psd {
                out.push(Diagnostic::PositivityViolation { setting, outcome: a, min_eigenvalue: lmin });
            }
            sum += e;
        }
        let deviation = linalg::max_abs_entry(&(sum - linalg::identity(self.dim)));
        if deviation > tol.completeness {
            out.push(Diagnostic::CompletenessViolation { setting, deviation });
        }
        out
    }
}

/// A set of POVMs `M_{a|x}` with setting weights `p(x)`.
///
/// All POVMs share the dimension and the outcome count; shorter POVMs are
/// padded with zero effects.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedAssemblage {
    dim: usize,
    outcomes: usize,
    povms: Vec<Povm>,
    weights: Vec<f64>,
}

impl WeightedAssemblage {
    pub fn new(povms: Vec<Povm>, weights: Vec<f64>) -> Result<Self> {
        let a = Self::unchecked(povms, weights)?;
        let diags = validate(&a);
        if diags.is_empty() {
            let povms = a.povms.into_iter().map(Povm::hermitized).collect();
            Ok(Self { povms, ..a })
        } else {
            Err(Error::InvalidAssemblage(diags))
        }
    }

    pub fn uniform(povms: Vec<Povm>) -> Result<Self> {
        let m = povms.len();
        Self::new(povms, vec![1.0 / m.max(1) as f64; m])
    }

    /// Builds without validating effects or weights (shapes are still
    /// checked). Use `validate` to inspect the result.
    pub fn unchecked(povms: Vec<Povm>, weights: Vec<f64>) -> Result<Self> {
        let dim = povms.first().map(|p| p.dim()).unwrap_or(0);
        if let Some((x, p)) = povms.iter().enumerate().find(|(_, p)| p.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "setting {x} has dimension {}, expected {dim}",
                p.dim()
            )));
        }
        let outcomes = povms.iter().map(|p| p.outcomes()).max().unwrap_or(0);
        let povms = povms.iter().map(|p| p.padded(outcomes)).collect();
        Ok(Self { dim, outcomes, povms, weights })
    }

    /// Effects indexed `[x][a]`.
    pub fn from_effects(effects: Vec<Vec<CMat>>, weights: Vec<f64>) -> Result<Self> {
        let povms = effects.into_iter().map(Povm::unchecked).collect::<Result<Vec<_>>>()?;
        Self::new(povms, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.povms.len()
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn povms(&self) -> &[Povm] {
        &self.povms
    }

    pub fn povm(&self, x: usize) -> &Povm {
        &self.povms[x]
    }

    pub fn effect(&self, x: usize, a: usize) -> &CMat {
        self.povms[x].effect(a)
    }

    /// Same measurements, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.povms.clone(), weights)
    }

    pub fn is_uniform(&self) -> bool {
        let m = self.settings() as f64;
        self.weights.iter().all(|&w| (w - 1.0 / m).abs() <= 1e-12)
    }

    /// True if every effect is a real matrix.
    pub fn is_real(&self) -> bool {
        self.povms.iter().all(|p| p.effects.iter().all(|e| linalg::is_real(e, 1e-14)))
    }

    /// Entrywise map `M_{a|x} -> f(M_{a|x})`, keeping weights.
    pub fn map_effects(&self, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        let povms = self
            .povms
            .iter()
            .map(|p| Povm::unchecked(p.effects.iter().map(&f).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(povms, self.weights.clone())
    }

    /// `η·self + (1-η)·other`; both must share shapes and weights.
    pub fn mix(&self, other: &Self, eta: f64) -> Result<Self> {
        check_same_shape(self, other)?;
        let povms = self
            .povms
            .iter()
            .zip(&other.povms)
            .map(|(p, q)| {
                Povm::unchecked(
                    p.effects
                        .iter()
                        .zip(&q.effects)
                        .map(|(a, b)| linalg::scale(a, eta) + linalg::scale(b, 1.0 - eta))
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(povms, self.weights.clone())
    }

    /// Heisenberg-picture action of a channel given by Kraus operators
    /// `K_i : C^{d_in} -> C^{d_out}` on assemblages over `C^{d_out}`:
    /// `M -> Σ_i K_i† M K_i`.
    pub fn apply_adjoint_channel(&self, kraus: &[CMat]) -> Result<Self> {
        if kraus.iter().any(|k| k.nrows() != self.dim) {
            return Err(Error::DimensionMismatch("Kraus output dimension".into()));
        }
        self.map_effects(|m| {
            let mut out = linalg::zeros(kraus[0].ncols());
            for k in kraus {
                out += k.adjoint() * m * k;
            }
            out
        })
    }

    /// Classical simulation
    /// `M'_{b|y} = Σ_x p(x|y) Σ_a q(b|y,x,a) M_{a|x}` with new weights `q(y)`.
    pub fn simulate(&self, sim: &Simulation) -> Result<Self> {
        let m = self.settings();
        if sim.p_x_given_y.iter().any(|r| r.len() != m)
            || sim.post.iter().any(|r| r.len() != m || r.iter().any(|s| s.len() != self.outcomes))
        {
            return Err(Error::ShapeMismatch("simulation does not match assemblage".into()));
        }
        let mut povms = Vec::with_capacity(sim.q_y.len());
        for y in 0..sim.q_y.len() {
            let mut effects = vec![linalg::zeros(self.dim); sim.outcomes];
            for x in 0..m {
                let pxy = sim.p_x_given_y[y][x];
                if pxy == 0.0 {
                    continue;
                }
                for a in 0..self.outcomes {
                    for (b, e) in effects.iter_mut().enumerate() {
                        let w = pxy * sim.post[y][x][a][b];
                        if w != 0.0 {
                            *e += linalg::scale(self.effect(x, a), w);
                        }
                    }
                }
            }
            povms.push(Povm::unchecked(effects)?);
        }
        Self::new(povms, sim.q_y.clone())
    }
}

/// Shape and weight compatibility of two assemblages.
pub fn check_same_shape(a: &WeightedAssemblage, b: &WeightedAssemblage) -> Result<()> {
    if a.dim != b.dim || a.outcomes != b.outcomes || a.settings() != b.settings() {
        return Err(Error::ShapeMismatch(format!(
            "(d={}, m={}, o={}) vs (d={}, m={}, o={})",
            a.dim,
            a.settings(),
            a.outcomes,
            b.dim,
            b.settings(),
            b.outcomes
        )));
    }
    if a.weights.iter().zip(&b.weights).any(|(x, y)| (x - y).abs() > 1e-12) {
        return Err(Error::ShapeMismatch("setting weights differ".into()));
    }
    Ok(())
}

/// All invariant violations of an assemblage; empty if valid.
pub fn validate(a: &WeightedAssemblage) -> Vec<Diagnostic> {
    validate_with(a, &Tolerances::default())
}

pub fn validate_with(a: &WeightedAssemblage, tol: &Tolerances) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if a.povms.is_empty() {
        out.push(Diagnostic::NoSettings);
        return out;
    }
    for (x, p) in a.povms.iter().enumerate() {
        if p.dim() != a.dim {
            out.push(Diagnostic::DimensionMismatch { setting: x, expected: a.dim, found: p.dim() });
            continue;
        }
        out.extend(p.diagnostics(x, tol));
    }
    if a.weights.len() != a.povms.len() {
        out.push(Diagnostic::WeightCount { settings: a.povms.len(), weights: a.weights.len() });
        return out;
    }
    for (x, &w) in a.weights.iter().enumerate() {
        if !(w > 0.0) || !w.is_finite() {
            out.push(Diagnostic::NonPositiveWeight { setting: x, weight: w });
        }
    }
    let deviation = (a.weights.iter().sum::<f64>() - 1.0).abs();
    if deviation > tol.weight_sum {
        out.push(Diagnostic::WeightNormalization { deviation });
    }
    out
}

/// Classical post-processing data for `WeightedAssemblage::simulate`.
#[derive(Clone, Debug)]
pub struct Simulation {
    /// Output setting weights `q(y)`.
    pub q_y: Vec<f64>,
    /// `p(x|y)`, indexed `[y][x]`.
    pub p_x_given_y: Vec<Vec<f64>>,
    /// `q(b|y,x,a)`, indexed `[y][x][a][b]`.
    pub post: Vec<Vec<Vec<Vec<f64>>>>,
    pub outcomes: usize,
}

impl Simulation {
    /// Random simulation compatible with input weights `p`: draws `P(y|x)`,
    /// forms the joint `p(x)P(y|x)` and conditions on `y`, so that
    /// `Σ_y q(y) p(x|y) = p(x)`.
    pub fn random<R: Rng + ?Sized>(
        p: &[f64],
        outcomes_in: usize,
        settings_out: usize,
        outcomes_out: usize,
        rng: &mut R,
    ) -> Self {
        let m = p.len();
        let joint: Vec<Vec<f64>> = (0..m)
            .map(|x| random::positive_weights(settings_out, rng).into_iter().map(|t| t * p[x]).collect())
            .collect();
        let q_y: Vec<f64> = (0..settings_out).map(|y| (0..m).map(|x| joint[x][y]).sum()).collect();
        let p_x_given_y = (0..settings_out)
            .map(|y| (0..m).map(|x| joint[x][y] / q_y[y]).collect())
            .collect();
        let post = (0..settings_out)
            .map(|_| {
                (0..m)
                    .map(|_| (0..outcomes_in).map(|_| random::simplex_point(outcomes_out, rng)).collect())
                    .collect()
            })
            .collect();
        let total: f64 = q_y.iter().sum();
        let q_y = q_y.into_iter().map(|v| v / total).collect();
        Self { q_y, p_x_given_y, post, outcomes: outcomes_out }
    }
}

/// Kraus operators `C^{d_in} -> C^{d_out}` of a random channel from a
/// Haar-random Stinespring isometry with `env` environment levels.
pub fn random_channel_kraus<R: Rng + ?Sized>(d_in: usize, d_out: usize, env: usize, rng: &mut R) -> Vec<CMat> {
    let v = random::haar_isometry(d_out * env, d_in, rng);
    (0..env)
        .map(|i| CMat::from_fn(d_out, d_in, |r, col| v[(r * env + i, col)]))
        .collect()
}

/// Kraus operators `K_i = P_i D_i` (permutation times diagonal) with
/// `Σ_i K_i† K_i = I`. Their adjoint map sends diagonal effects to diagonal
/// effects.
pub fn random_incoherent_kraus<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Vec<CMat> {
    let g = random::ginibre(count, d, rng);
    let mut kraus = Vec::with_capacity(count);
    for i in 0..count {
        let mut perm: Vec<usize> = (0..d).collect();
        for k in (1..d).rev() {
            let j = rng.gen_range(0..=k);
            perm.swap(k, j);
        }
        let mut k = linalg::zeros(d);
        for col in 0..d {
            let norm = (0..count).map(|r| g[(r, col)].norm_sqr()).sum::<f64>().sqrt();
            k[(perm[col], col)] = g[(i, col)] / norm;
        }
        kraus.push(k);
    }
    kraus
}

/// Random assemblage from normalized Wishart effects, uniform weights.
/// Deterministic per seed.
pub fn random_assemblage(d: usize, m: usize, o: usize, seed: u64) -> Result<WeightedAssemblage> {
    if d == 0 || m == 0 || o == 0 {
        return Err(Error::InvalidArgument("d, m, o must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let povms = (0..m).map(|_| random_povm(d, o, &mut rng)).collect::<Result<Vec<_>>>()?;
    WeightedAssemblage::uniform(povms)
}

/// Random POVM `S^{-1/2} A_a A_a† S^{-1/2}` with `S = Σ_a A_a A_a†`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, o: usize, rng: &mut R) -> Result<Povm> {
    const ATTEMPTS: usize = 16;
    for _ in 0..ATTEMPTS {
        let raw: Vec<CMat> = (0..o)
            .map(|_| {
                let a = random::ginibre(d, d, rng);
                &a * a.adjoint()
            })
            .collect();
        let s = raw.iter().fold(linalg::zeros(d), |acc, e| acc + e);
        let Some(w) = linalg::inv_sqrt_pd(&s, 1e-12) else { continue };
        let effects = raw.iter().map(|e| linalg::hermitize(&(&w * e * &w))).collect();
        let mut p = Povm::unchecked(effects)?;
        if o == 1 {
            p.effects[0] = linalg::identity(d);
        }
        return Ok(p);
    }
    Err(Error::SingularNormalization(ATTEMPTS))
}

/// Random dichotomic POVM `{E, I - E}` with a random spectrum in [0, 1].
pub fn random_dichotomic_povm<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Povm> {
    let u = random::haar_unitary(d, rng);
    let spec = DVector::from_iterator(d, (0..d).map(|_| c(rng.gen::<f64>(), 0.0)));
    let e = linalg::hermitize(&(&u * CMat::from_diagonal(&spec) * u.adjoint()));
    let f = linalg::identity(d) - &e;
    Povm::unchecked(vec![e, f])
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// Shift `X|k> = |k+1>` in dimension `d`.
pub fn shift(d: usize) -> CMat {
    let mut x = linalg::zeros(d);
    for k in 0..d {
        x[((k + 1) % d, k)] = ONE;
    }
    x
}

/// Clock `Z = diag(ω^k)`, `ω = exp(2πi/d)`.
pub fn clock(d: usize) -> CMat {
    let mut z = linalg::zeros(d);
    for k in 0..d {
        z[(k, k)] = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    }
    z
}

/// The operator list `X, Z, XZ, XZ^2, ..., XZ^{d-1}` as (X-power, Z-power).
pub fn heisenberg_weyl_labels(d: usize) -> Vec<(usize, usize)> {
    let mut v = vec![(1, 0), (0, 1)];
    v.extend((1..d).map(|k| (1, k)));
    v
}

/// Eigenbasis projectors of `W = X^a Z^b`, ordered by eigenphase.
///
/// `W^d = c·I` for a phase `c`; with `μ_j = c^{1/d} ω^j` the projector onto
/// the `μ_j` eigenspace is `(1/d) Σ_n (W/μ_j)^n`.
fn word_eigenprojectors(d: usize, xp: usize, zp: usize) -> Vec<CMat> {
    let x = shift(d);
    let z = clock(d);
    let mut w = linalg::identity(d);
    for _ in 0..xp {
        w = &w * &x;
    }
    for _ in 0..zp {
        w = &w * &z;
    }
    let mut wd = linalg::identity(d);
    for _ in 0..d {
        wd = &wd * &w;
    }
    let phase = wd[(0, 0)];
    let root = C64::from_polar(1.0, phase.arg() / d as f64);
    (0..d)
        .map(|j| {
            let mu = root * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / d as f64);
            let step = w.map(|e| e / mu);
            let mut acc = linalg::identity(d);
            let mut pow = linalg::identity(d);
            for _ in 1..d {
                pow = &pow * &step;
                acc += &pow;
            }
            linalg::hermitize(&acc.map(|e| e / d as f64))
        })
        .collect()
}

/// First `m` Heisenberg-Weyl eigenbases (`X, Z, XZ, ..., XZ^{d-1}`) in prime
/// dimension `d`, uniformly weighted.
pub fn heisenberg_weyl_mub(d: usize, m: usize) -> Result<WeightedAssemblage> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    if m == 0 || m > d + 1 {
        return Err(Error::TooManySettings { requested: m, available: d + 1 });
    }
    let labels = heisenberg_weyl_labels(d);
    heisenberg_weyl_mub_subset(d, &labels[..m])
}

/// Eigenbases of the listed words `X^a Z^b` (exponents reduced mod `d`).
pub fn heisenberg_weyl_mub_subset(d: usize, operators: &[(usize, usize)]) -> Result<WeightedAssemblage> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    if operators.is_empty() {
        return Err(Error::InvalidArgument("no operators given".into()));
    }
    let mut seen = Vec::new();
    for &(a, b) in operators {
        let key = (a % d, b % d);
        if key == (0, 0) {
            return Err(Error::InvalidArgument("the identity has no eigenbasis".into()));
        }
        if seen.contains(&key) {
            return Err(Error::DuplicateOperator(key.0, key.1));
        }
        seen.push(key);
    }
    let povms = seen
        .iter()
        .map(|&(a, b)| Povm::new(word_eigenprojectors(d, a, b)))
        .collect::<Result<Vec<_>>>()?;
    WeightedAssemblage::uniform(povms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// The two CGLMP measurements of one party, uniformly weighted.
///
/// Alice: `|a_x> = d^{-1/2} Σ_q exp(2πi q(a - α_x)/d)|q>`, `α_x = (x - 1/2)/2`.
/// Bob: `|b_y> = d^{-1/2} Σ_q exp(-2πi q(b - β_y)/d)|q>`, `β_y = y/2`.
/// Settings are numbered from 1 in these formulas.
pub fn cglmp_pair(d: usize, party: Party) -> Result<WeightedAssemblage> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let povms = (1..=2)
        .map(|x| {
            let (shift, sign) = match party {
                Party::Alice => ((x as f64 - 0.5) / 2.0, 1.0),
                Party::Bob => (x as f64 / 2.0, -1.0),
            };
            let effects = (0..d)
                .map(|a| {
                    let v = DVector::from_iterator(
                        d,
                        (0..d).map(|q| {
                            let angle = sign * 2.0 * std::f64::consts::PI * q as f64 * (a as f64 - shift) / d as f64;
                            C64::from_polar(amp, angle)
                        }),
                    );
                    linalg::outer(&v)
                })
                .collect();
            Povm::new(effects)
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedAssemblage::uniform(povms)
}

/// A two-setting assemblage whose second setting is depolarized by `mu`.
#[derive(Clone, Debug)]
pub struct NoisyPairSpec {
    base: WeightedAssemblage,
    mu: f64,
}

impl NoisyPairSpec {
    pub fn new(base: WeightedAssemblage, mu: f64) -> Result<Self> {
        if base.settings() != 2 {
            return Err(Error::InvalidArgument(format!(
                "noisy pair needs 2 settings, got {}",
                base.settings()
            )));
        }
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidArgument(format!("mu = {mu} outside [0, 1]")));
        }
        Ok(Self { base, mu })
    }

    pub fn base(&self) -> &WeightedAssemblage {
        &self.base
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `M_{a|1} = N_{a|1}`, `M_{a|2} = μ N_{a|2} + (1-μ) Tr[N_{a|2}] I/d`.
pub fn depolarize_second(spec: &NoisyPairSpec) -> Result<WeightedAssemblage> {
    let base = &spec.base;
    let d = base.dim();
    let mu = spec.mu;
    let second = base
        .povm(1)
        .effects()
        .iter()
        .map(|n| {
            let t = linalg::trace(n).re;
            linalg::scale(n, mu) + linalg::scale(&linalg::identity(d), (1.0 - mu) * t / d as f64)
        })
        .collect();
    WeightedAssemblage::new(vec![base.povm(0).clone(), Povm::unchecked(second)?], base.weights().to_vec())
}

/// Maximum of `|<v|w>|^2` deviation from `1/d` over effects of distinct
/// settings, for rank-one projective assemblages (uses traces of products).
pub fn max_mub_overlap_deviation(a: &WeightedAssemblage) -> f64 {
    let d = a.dim() as f64;
    let mut worst = 0.0f64;
    for x in 0..a.settings() {
        for y in x + 1..a.settings() {
            for e in a.povm(x).effects() {
                for f in a.povm(y).effects() {
                    worst = worst.max((linalg::trace_product_re(e, f) - 1.0 / d).abs());
                }
            }
        }
    }
    worst
}
