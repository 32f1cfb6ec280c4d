//! Conic problem builder over Hermitian matrix variables, compiled to the
//! clarabel interior-point solver.
//!
//! Hermitian `d x d` variables are stored as `d^2` real parameters (diagonal,
//! then real and imaginary parts of the strict upper triangle). PSD
//! constraints on complex affine expressions are passed to the backend as
//! real `2d x 2d` constraints through `[[Re, -Im], [Im, Re]]`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use crate::config::{LinearSolver, SolverConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, CMat, C64, ONE};

/// Handle to a real scalar variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarVar(usize);

impl ScalarVar {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a Hermitian matrix variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatVar {
    offset: usize,
    dim: usize,
}

impl MatVar {
    pub fn dim(self) -> usize {
        self.dim
    }

    fn pair_index(self, i: usize, j: usize) -> usize {
        // position of (i, j), i < j, in row-major order of the strict upper triangle
        let d = self.dim;
        i * (2 * d - i - 1) / 2 + (j - i - 1)
    }

    /// `(parameter, row, col, coefficient)` over the upper triangle: the
    /// matrix equals `Σ x_p B_p` with `B_p` Hermitian and upper entries given.
    fn basis(self) -> impl Iterator<Item = (usize, usize, usize, C64)> {
        let d = self.dim;
        let off = self.offset;
        let diag = (0..d).map(move |i| (off + i, i, i, ONE));
        let upper = (0..d).flat_map(move |i| {
            (i + 1..d).flat_map(move |j| {
                let k = off + d + 2 * self.pair_index(i, j);
                [(k, i, j, ONE), (k + 1, i, j, C64::new(0.0, 1.0))]
            })
        });
        diag.chain(upper)
    }

    fn param_count(self) -> usize {
        self.dim * self.dim
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Scalar,
    Hermitian(usize),
}

#[derive(Clone, Debug)]
struct VarInfo {
    name: String,
    kind: VarKind,
    offset: usize,
}

/// Real affine expression `constant + Σ coef·x_p`.
#[derive(Clone, Debug, Default)]
pub struct LinExpr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: ScalarVar) -> Self {
        Self { terms: vec![(v.0, 1.0)], constant: 0.0 }
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_var(mut self, v: ScalarVar, coef: f64) -> Self {
        self.terms.push((v.0, coef));
        self
    }

    /// Adds `coef·Re Tr[K X]` for Hermitian `K`.
    pub fn add_trace(mut self, x: MatVar, k: &CMat, coef: f64) -> Self {
        let d = x.dim;
        for i in 0..d {
            let v = k[(i, i)].re * coef;
            if v != 0.0 {
                self.terms.push((x.offset + i, v));
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                let p = x.offset + d + 2 * x.pair_index(i, j);
                let kij = k[(i, j)];
                if kij.re != 0.0 {
                    self.terms.push((p, 2.0 * kij.re * coef));
                }
                if kij.im != 0.0 {
                    self.terms.push((p + 1, 2.0 * kij.im * coef));
                }
            }
        }
        self
    }

    /// Adds `coef·Tr[X]`.
    pub fn add_trace_identity(mut self, x: MatVar, coef: f64) -> Self {
        for i in 0..x.dim {
            self.terms.push((x.offset + i, coef));
        }
        self
    }

    pub fn add_expr(mut self, other: &LinExpr, coef: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|&(p, c)| (p, c * coef)));
        self.constant += other.constant * coef;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(p, c)| c * x[p]).sum::<f64>()
    }
}

/// Hermitian affine expression `K_0 + Σ x_p B_p`; only upper-triangle
/// entries of each `B_p` are stored.
#[derive(Clone, Debug)]
pub struct MatExpr {
    dim: usize,
    constant: CMat,
    entries: Vec<(usize, u32, u32, C64)>,
}

impl MatExpr {
    pub fn zero(dim: usize) -> Self {
        Self { dim, constant: linalg::zeros(dim), entries: Vec::new() }
    }

    /// Constant Hermitian matrix.
    pub fn constant(k: &CMat) -> Self {
        Self { dim: k.nrows(), constant: linalg::hermitize(k), entries: Vec::new() }
    }

    pub fn var(x: MatVar) -> Self {
        Self::zero(x.dim).add_var(x, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `coef·K`.
    pub fn add_const(mut self, k: &CMat, coef: f64) -> Self {
        assert_eq!(k.nrows(), self.dim);
        self.constant += linalg::hermitize(k).map(|z| z * coef);
        self
    }

    /// Adds `coef·X`.
    pub fn add_var(self, x: MatVar, coef: f64) -> Self {
        self.add_var_at(x, coef, 0)
    }

    /// Adds `coef·X` as the diagonal block starting at `off`.
    pub fn add_var_at(mut self, x: MatVar, coef: f64, off: usize) -> Self {
        assert!(off + x.dim <= self.dim);
        for (p, r, c, v) in x.basis() {
            self.entries.push((p, (r + off) as u32, (c + off) as u32, v * coef));
        }
        self
    }

    /// Adds `s·K` for a scalar variable `s` and Hermitian `K`.
    pub fn add_scalar(mut self, s: ScalarVar, k: &CMat) -> Self {
        assert_eq!(k.nrows(), self.dim);
        for c in 0..self.dim {
            for r in 0..=c {
                let v = k[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    self.entries.push((s.0, r as u32, c as u32, v));
                }
            }
        }
        self
    }

    /// Adds `coef·s·I`.
    pub fn add_scalar_identity(mut self, s: ScalarVar, coef: f64) -> Self {
        for i in 0..self.dim {
            self.entries.push((s.0, i as u32, i as u32, C64::new(coef, 0.0)));
        }
        self
    }

    pub fn add_expr(mut self, other: &MatExpr, coef: f64) -> Self {
        assert_eq!(other.dim, self.dim);
        self.constant += other.constant.map(|z| z * coef);
        self.entries.extend(other.entries.iter().map(|&(p, r, c, v)| (p, r, c, v * coef)));
        self
    }

    /// The principal `len x len` sub-expression starting at `off`.
    pub fn principal_block(&self, off: usize, len: usize) -> Self {
        assert!(off + len <= self.dim);
        let inside = |i: u32| (i as usize) >= off && (i as usize) < off + len;
        Self {
            dim: len,
            constant: self.constant.view((off, off), (len, len)).into_owned(),
            entries: self
                .entries
                .iter()
                .filter(|&&(_, r, c, _)| inside(r) && inside(c))
                .map(|&(p, r, c, v)| (p, r - off as u32, c - off as u32, v))
                .collect(),
        }
    }

    /// `[[a, b], [b, c]]` for Hermitian blocks of equal size.
    pub fn block2(a: &MatExpr, b: &MatExpr, c: &MatExpr) -> Self {
        let d = a.dim;
        assert!(b.dim == d && c.dim == d);
        let mut out = Self::zero(2 * d);
        for i in 0..d {
            for j in 0..d {
                out.constant[(i, j)] = a.constant[(i, j)];
                out.constant[(i + d, j + d)] = c.constant[(i, j)];
                out.constant[(i, j + d)] = b.constant[(i, j)];
                out.constant[(j + d, i)] = b.constant[(i, j)].conj();
            }
        }
        for &(p, r, col, v) in &a.entries {
            out.entries.push((p, r, col, v));
        }
        for &(p, r, col, v) in &c.entries {
            out.entries.push((p, r + d as u32, col + d as u32, v));
        }
        for &(p, r, col, v) in &b.entries {
            // the off-diagonal block is entirely in the upper triangle
            out.entries.push((p, r, col + d as u32, v));
            if r != col {
                out.entries.push((p, col, r + d as u32, v.conj()));
            }
        }
        out
    }

    /// Value at parameter vector `x`.
    pub fn eval(&self, x: &[f64]) -> CMat {
        let mut m = self.constant.clone();
        for &(p, r, c, v) in &self.entries {
            let (r, c) = (r as usize, c as usize);
            let z = v * x[p];
            if r == c {
                m[(r, r)] += C64::new(z.re, 0.0);
            } else {
                m[(r, c)] += z;
                m[(c, r)] += z.conj();
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
enum Constraint {
    Psd { label: String, expr: MatExpr },
    MatEq { label: String, expr: MatExpr },
    Eq { label: String, expr: LinExpr },
    NonNeg { label: String, expr: LinExpr },
}

impl Constraint {
    fn label(&self) -> &str {
        match self {
            Constraint::Psd { label, .. }
            | Constraint::MatEq { label, .. }
            | Constraint::Eq { label, .. }
            | Constraint::NonNeg { label, .. } => label,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A linear objective over PSD, equality and nonnegativity constraints.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    vars: Vec<VarInfo>,
    n: usize,
    constraints: Vec<Constraint>,
    sense: Sense,
    objective: LinExpr,
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProblem {
    pub fn new() -> Self {
        Self { vars: Vec::new(), n: 0, constraints: Vec::new(), sense: Sense::Minimize, objective: LinExpr::new() }
    }

    pub fn param_count(&self) -> usize {
        self.n
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    /// Free real scalar.
    pub fn scalar(&mut self, name: impl Into<String>) -> ScalarVar {
        let v = ScalarVar(self.n);
        self.vars.push(VarInfo { name: name.into(), kind: VarKind::Scalar, offset: self.n });
        self.n += 1;
        v
    }

    /// Scalar constrained to be `>= 0`.
    pub fn nonneg(&mut self, name: impl Into<String>) -> ScalarVar {
        let name = name.into();
        let v = self.scalar(name.clone());
        self.ge(format!("{name} >= 0"), LinExpr::var(v));
        v
    }

    /// Free Hermitian matrix.
    pub fn hermitian(&mut self, name: impl Into<String>, dim: usize) -> MatVar {
        let v = MatVar { offset: self.n, dim };
        self.vars.push(VarInfo { name: name.into(), kind: VarKind::Hermitian(dim), offset: self.n });
        self.n += v.param_count();
        v
    }

    /// Hermitian matrix constrained to be PSD.
    pub fn psd_var(&mut self, name: impl Into<String>, dim: usize) -> MatVar {
        let name = name.into();
        let v = self.hermitian(name.clone(), dim);
        self.psd(format!("{name} >= 0"), MatExpr::var(v));
        v
    }

    /// `expr ⪰ 0`.
    pub fn psd(&mut self, label: impl Into<String>, expr: MatExpr) {
        self.constraints.push(Constraint::Psd { label: label.into(), expr });
    }

    /// `expr == 0` (Hermitian).
    pub fn mat_eq(&mut self, label: impl Into<String>, expr: MatExpr) {
        self.constraints.push(Constraint::MatEq { label: label.into(), expr });
    }

    /// `expr == 0`.
    pub fn eq(&mut self, label: impl Into<String>, expr: LinExpr) {
        self.constraints.push(Constraint::Eq { label: label.into(), expr });
    }

    /// `expr >= 0`.
    pub fn ge(&mut self, label: impl Into<String>, expr: LinExpr) {
        self.constraints.push(Constraint::NonNeg { label: label.into(), expr });
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.sense = Sense::Minimize;
        self.objective = objective;
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.sense = Sense::Maximize;
        self.objective = objective;
    }

    /// Spectral-norm epigraph `[[t I, Z], [Z, t I]] ⪰ 0` for Hermitian `Z`,
    /// i.e. `‖Z‖_∞ <= t`.
    pub fn spectral_norm_bound(&mut self, label: impl Into<String>, t: ScalarVar, z: &MatExpr) {
        let d = z.dim();
        let tid = MatExpr::zero(d).add_scalar_identity(t, 1.0);
        self.psd(label, MatExpr::block2(&tid, z, &tid));
    }

    /// Trace-norm gadget `[[U, Z], [Z, W]] ⪰ 0` for Hermitian `Z`. Returns
    /// the expression `(Tr U + Tr W)/2`, whose minimum is `‖Z‖_1`.
    pub fn trace_norm_bound(&mut self, label: impl Into<String>, z: &MatExpr) -> LinExpr {
        let label = label.into();
        let d = z.dim();
        let u = self.hermitian(format!("{label}.U"), d);
        let w = self.hermitian(format!("{label}.W"), d);
        self.psd(label, MatExpr::block2(&MatExpr::var(u), z, &MatExpr::var(w)));
        LinExpr::new().add_trace_identity(u, 0.5).add_trace_identity(w, 0.5)
    }

    fn compile(&self) -> Compiled {
        let mut rows = 0usize;
        let mut ii = Vec::new();
        let mut jj = Vec::new();
        let mut vv = Vec::new();
        let mut b = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

        // Scalar equalities and matrix equalities first, then inequalities,
        // then PSD blocks; consecutive scalar rows share one cone.
        let push_scalar_row = |expr: &LinExpr, rows: &mut usize, ii: &mut Vec<usize>, jj: &mut Vec<usize>, vv: &mut Vec<f64>, b: &mut Vec<f64>| {
            for &(p, c) in &expr.terms {
                ii.push(*rows);
                jj.push(p);
                vv.push(-c);
            }
            b.push(expr.constant);
            *rows += 1;
        };

        let mut zero_rows = 0;
        for con in &self.constraints {
            match con {
                Constraint::Eq { expr, .. } => {
                    push_scalar_row(expr, &mut rows, &mut ii, &mut jj, &mut vv, &mut b);
                    zero_rows += 1;
                }
                Constraint::MatEq { expr, .. } => {
                    let d = expr.dim;
                    let base = rows;
                    // rows: diagonal (d), then (re, im) per strict upper pair
                    let row_of = |r: usize, c: usize| -> usize {
                        if r == c {
                            base + r
                        } else {
                            let k = r * (2 * d - r - 1) / 2 + (c - r - 1);
                            base + d + 2 * k
                        }
                    };
                    let mut bb = vec![0.0; d * d];
                    for r in 0..d {
                        bb[r] = expr.constant[(r, r)].re;
                        for c in r + 1..d {
                            let z = expr.constant[(r, c)];
                            let k = row_of(r, c) - base;
                            bb[k] = z.re;
                            bb[k + 1] = z.im;
                        }
                    }
                    b.extend(bb);
                    for &(p, r, c, v) in &expr.entries {
                        let (r, c) = (r as usize, c as usize);
                        let row = row_of(r, c);
                        if r == c {
                            ii.push(row);
                            jj.push(p);
                            vv.push(-v.re);
                        } else {
                            ii.push(row);
                            jj.push(p);
                            vv.push(-v.re);
                            ii.push(row + 1);
                            jj.push(p);
                            vv.push(-v.im);
                        }
                    }
                    rows += d * d;
                    zero_rows += d * d;
                }
                _ => {}
            }
        }
        if zero_rows > 0 {
            cones.push(SupportedConeT::ZeroConeT(zero_rows));
        }
        let mut nonneg_rows = 0;
        for con in &self.constraints {
            if let Constraint::NonNeg { expr, .. } = con {
                push_scalar_row(expr, &mut rows, &mut ii, &mut jj, &mut vv, &mut b);
                nonneg_rows += 1;
            }
        }
        if nonneg_rows > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(nonneg_rows));
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        for con in &self.constraints {
            if let Constraint::Psd { expr, .. } = con {
                let d = expr.dim;
                let n = 2 * d;
                let base = rows;
                let svec = |i: usize, j: usize| -> (usize, f64) {
                    let (i, j) = if i <= j { (i, j) } else { (j, i) };
                    (base + j * (j + 1) / 2 + i, if i == j { 1.0 } else { sqrt2 })
                };
                let mut bb = vec![0.0; n * (n + 1) / 2];
                let emb = linalg::real_embed(&expr.constant);
                for j in 0..n {
                    for i in 0..=j {
                        let (row, s) = svec(i, j);
                        bb[row - base] = s * emb[(i, j)];
                    }
                }
                b.extend(bb);
                let mut put = |i: usize, j: usize, p: usize, val: f64| {
                    if val != 0.0 {
                        let (row, s) = svec(i, j);
                        ii.push(row);
                        jj.push(p);
                        vv.push(-s * val);
                    }
                };
                for &(p, r, c, v) in &expr.entries {
                    let (r, c) = (r as usize, c as usize);
                    put(r, c, p, v.re);
                    put(r + d, c + d, p, v.re);
                    if r != c {
                        put(r, c + d, p, -v.im);
                        put(c, r + d, p, v.im);
                    }
                }
                rows += n * (n + 1) / 2;
                cones.push(SupportedConeT::PSDTriangleConeT(n));
            }
        }
        let a = CscMatrix::new_from_triplets(rows, self.n, ii, jj, vv);
        let sign = if self.sense == Sense::Minimize { 1.0 } else { -1.0 };
        let mut q = vec![0.0; self.n];
        for &(p, c) in &self.objective.terms {
            q[p] += sign * c;
        }
        Compiled { a, b, q, cones }
    }

    fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Solves with clarabel and re-checks every constraint independently.
    pub fn solve(&self, config: &SolverConfig) -> Result<ConicSolution> {
        let compiled = self.compile();
        let p = CscMatrix::zeros((self.n, self.n));
        let mut settings = DefaultSettings::<f64>::default();
        settings.verbose = config.verbose;
        settings.tol_gap_abs = config.gap_abs;
        settings.tol_gap_rel = config.gap_rel;
        settings.tol_feas = config.feas;
        settings.max_iter = config.max_iter;
        settings.direct_solve_method = config.linear_solver.backend_name().into();
        let mut solver = DefaultSolver::new(&p, &compiled.q, &compiled.a, &compiled.b, &compiled.cones, settings)
            .map_err(|e| Error::BackendUnavailable(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let gap = (sol.obj_val - sol.obj_val_dual).abs();
        let mut status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ => SolveStatus::NumericalTrouble,
        };
        let x = sol.x.clone();
        let mut solution = ConicSolution {
            status,
            objective_value: self.objective_value(&x),
            x,
            reported_gap: gap,
            iterations: sol.iterations,
            solve_time: sol.solve_time,
            backend_status: format!("{:?}", sol.status),
            vars: self.vars.clone(),
        };
        if status == SolveStatus::Optimal {
            let violations = verify_feasibility_with(self, &solution, config.feasibility_tol, config.execution);
            if !violations.is_empty() {
                status = SolveStatus::NumericalTrouble;
                solution.backend_status = format!(
                    "{} ({} residuals above {:.1e}, worst {}: {:.3e})",
                    solution.backend_status,
                    violations.len(),
                    config.feasibility_tol,
                    violations[0].label,
                    violations[0].magnitude
                );
            }
        }
        solution.status = status;
        Ok(solution)
    }

    /// Solve and return the solution only if optimal. On numerical trouble
    /// the program is solved once more with the other KKT factorization;
    /// the retry goes through the same residual check.
    pub fn solve_optimal(&self, config: &SolverConfig) -> Result<ConicSolution> {
        let mut s = self.solve(config)?;
        if s.status == SolveStatus::NumericalTrouble {
            let mut alt = config.clone();
            alt.linear_solver = match config.linear_solver {
                LinearSolver::Faer => LinearSolver::Qdldl,
                LinearSolver::Qdldl => LinearSolver::Faer,
            };
            let retry = self.solve(&alt)?;
            if retry.status == SolveStatus::Optimal {
                s = retry;
            } else {
                s.backend_status = format!("{}; retry with {}: {}", s.backend_status, alt.linear_solver.backend_name(), retry.backend_status);
            }
        }
        match s.status {
            SolveStatus::Optimal => Ok(s),
            SolveStatus::Infeasible => Err(Error::Infeasible(s.backend_status)),
            SolveStatus::Unbounded => Err(Error::NumericalTrouble(format!("unbounded: {}", s.backend_status))),
            SolveStatus::NumericalTrouble => Err(Error::NumericalTrouble(s.backend_status)),
        }
    }
}

struct Compiled {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    q: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
}

/// Backend output together with the variable layout needed to read it.
#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Objective recomputed from the returned point.
    pub objective_value: f64,
    pub x: Vec<f64>,
    /// |primal cost - dual cost| reported by the backend.
    pub reported_gap: f64,
    pub iterations: u32,
    pub solve_time: f64,
    pub backend_status: String,
    vars: Vec<VarInfo>,
}

/// A value extracted by variable name.
#[derive(Clone, Debug, PartialEq)]
pub enum VarValue {
    Scalar(f64),
    Matrix(CMat),
}

impl ConicSolution {
    pub fn scalar(&self, v: ScalarVar) -> f64 {
        self.x[v.0]
    }

    pub fn matrix(&self, v: MatVar) -> CMat {
        MatExpr::var(v).eval(&self.x)
    }

    pub fn by_name(&self, name: &str) -> Option<VarValue> {
        let info = self.vars.iter().find(|v| v.name == name)?;
        Some(match info.kind {
            VarKind::Scalar => VarValue::Scalar(self.x[info.offset]),
            VarKind::Hermitian(d) => VarValue::Matrix(self.matrix(MatVar { offset: info.offset, dim: d })),
        })
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }
}

/// A constraint residual above tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub label: String,
    pub kind: ViolationKind,
    pub magnitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Negative eigenvalue of a PSD constraint.
    Psd,
    /// Nonzero residual of an equality.
    Equality,
    /// Negative value of an inequality.
    Inequality,
}

/// Recomputes all constraint residuals at the solution point with the
/// crate's own linear algebra. Violations are sorted, worst first.
pub fn verify_feasibility(problem: &ConicProblem, solution: &ConicSolution, tol: f64) -> Vec<Violation> {
    verify_feasibility_with(problem, solution, tol, exec::Execution::Sequential)
}

pub fn verify_feasibility_with(
    problem: &ConicProblem,
    solution: &ConicSolution,
    tol: f64,
    execution: exec::Execution,
) -> Vec<Violation> {
    let x = &solution.x;
    let residuals = exec::map_slice(&problem.constraints, execution, |con| -> Option<Violation> {
        let (kind, magnitude) = match con {
            Constraint::Psd { expr, .. } => (ViolationKind::Psd, (-linalg::min_eigenvalue(&expr.eval(x))).max(0.0)),
            Constraint::MatEq { expr, .. } => (ViolationKind::Equality, linalg::max_abs_entry(&expr.eval(x))),
            Constraint::Eq { expr, .. } => (ViolationKind::Equality, expr.eval(x).abs()),
            Constraint::NonNeg { expr, .. } => (ViolationKind::Inequality, (-expr.eval(x)).max(0.0)),
        };
        (magnitude > tol || !magnitude.is_finite()).then(|| Violation { label: con.label().to_string(), kind, magnitude })
    });
    let mut out: Vec<Violation> = residuals.into_iter().flatten().collect();
    out.sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap_or(std::cmp::Ordering::Equal));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))))
    }

    #[test]
    fn spectral_epigraph_of_diagonal() {
        let mut p = ConicProblem::new();
        let t = p.scalar("t");
        p.psd("tI - A", MatExpr::zero(2).add_scalar_identity(t, 1.0).add_const(&diag(&[1.0, 2.0]), -1.0));
        p.minimize(LinExpr::var(t));
        let s = p.solve_optimal(&SolverConfig::default()).unwrap();
        assert!((s.objective_value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn trace_norm_gadget_of_pauli_z() {
        let mut p = ConicProblem::new();
        let obj = p.trace_norm_bound("z", &MatExpr::constant(&diag(&[1.0, -1.0])));
        p.minimize(obj);
        let s = p.solve_optimal(&SolverConfig::default()).unwrap();
        assert!((s.objective_value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn spectral_norm_gadget_of_complex_matrix() {
        // Pauli-Y has spectral norm 1.
        let y = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let mut p = ConicProblem::new();
        let t = p.scalar("t");
        p.spectral_norm_bound("y", t, &MatExpr::constant(&y));
        p.minimize(LinExpr::var(t));
        let s = p.solve_optimal(&SolverConfig::default()).unwrap();
        assert!((s.objective_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn negative_identity_is_infeasible() {
        let mut p = ConicProblem::new();
        let t = p.scalar("t");
        p.psd("-I", MatExpr::constant(&diag(&[-1.0, -1.0])).add_scalar_identity(t, 0.0));
        p.minimize(LinExpr::var(t));
        let s = p.solve(&SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn complex_variable_round_trip() {
        // max Re Tr[K X] over states: the top eigenvector of K.
        let k = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, -0.4), c(0.3, 0.4), c(-0.5, 0.0)]);
        let mut p = ConicProblem::new();
        let x = p.psd_var("rho", 2);
        p.eq("tr", LinExpr::new().add_trace_identity(x, 1.0).add_const(-1.0));
        p.maximize(LinExpr::new().add_trace(x, &k, 1.0));
        let s = p.solve_optimal(&SolverConfig::default()).unwrap();
        let (vals, vecs) = linalg::eigh(&k);
        assert!((s.objective_value - vals[1]).abs() < 1e-7);
        let top = linalg::outer(&vecs.column(1).into_owned());
        assert!(linalg::max_abs_entry(&(s.matrix(x) - top)) < 1e-4);
        // the embedded block of the returned matrix is PSD and matches
        let emb = linalg::real_embed(&s.matrix(x));
        assert!(emb.symmetric_eigen().eigenvalues.iter().all(|&l| l > -1e-8));
        match s.by_name("rho") {
            Some(VarValue::Matrix(m)) => assert_eq!(m, s.matrix(x)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hermitian_equality_constraint() {
        let target = CMat::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)]);
        let mut p = ConicProblem::new();
        let x = p.hermitian("X", 2);
        p.mat_eq("X = T", MatExpr::var(x).add_const(&target, -1.0));
        p.minimize(LinExpr::new().add_trace_identity(x, 1.0));
        let s = p.solve_optimal(&SolverConfig::default()).unwrap();
        assert!(linalg::max_abs_entry(&(s.matrix(x) - target)) < 1e-7);
    }

    #[test]
    fn verification_flags_perturbations() {
        let mut p = ConicProblem::new();
        let x = p.psd_var("X", 2);
        p.eq("tr", LinExpr::new().add_trace_identity(x, 1.0).add_const(-1.0));
        p.minimize(LinExpr::new().add_trace(x, &diag(&[1.0, 0.0]), 1.0));
        let s = p.solve_optimal(&SolverConfig::default()).unwrap();
        assert!(verify_feasibility(&p, &s, 1e-7).is_empty());

        let mut bad = s.clone();
        bad.x[0] -= 1e-3; // X_00 ≈ 0 at the optimum, so X is pushed below zero
        let v = verify_feasibility(&p, &bad, 1e-7);
        assert!(v.iter().any(|v| v.kind == ViolationKind::Psd));

        let mut off = s.clone();
        off.x[1] += 1e-5;
        let v = verify_feasibility(&p, &off, 1e-7);
        assert!(v.iter().any(|v| v.kind == ViolationKind::Equality && (v.magnitude - 1e-5).abs() < 1e-9));
    }
}
