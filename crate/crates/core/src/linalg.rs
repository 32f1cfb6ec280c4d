//! Dense complex matrix kernel.
//!
//! Everything downstream works with `CMat` (a dense `DMatrix<Complex<f64>>`).
//! `Hermitian` and `DensityMatrix` are validated wrappers around it.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use std::ops::Deref;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(d: usize) -> CMat {
    CMat::zeros(d, d)
}

/// `|i><i|` in dimension `d`.
pub fn basis_projector(d: usize, i: usize) -> CMat {
    let mut m = zeros(d);
    m[(i, i)] = ONE;
    m
}

/// Rank-one projector `|v><v|` (no normalization applied).
pub fn outer(v: &DVector<C64>) -> CMat {
    v * v.adjoint()
}

pub fn scale(m: &CMat, s: f64) -> CMat {
    m.map(|z| z * s)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Re Tr[a b], with no intermediate product matrix.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    s
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `(m + m†)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

pub fn is_real(m: &CMat, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Trace over the first tensor factor of a `(d1*d2) x (d1*d2)` matrix.
pub fn partial_trace_first(m: &CMat, dim_first: usize, dim_second: usize) -> Result<CMat> {
    let n = dim_first * dim_second;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = CMat::zeros(dim_second, dim_second);
    for k in 0..dim_first {
        let off = k * dim_second;
        for i in 0..dim_second {
            for j in 0..dim_second {
                out[(i, j)] += m[(off + i, off + j)];
            }
        }
    }
    Ok(out)
}

/// Trace over the second tensor factor.
pub fn partial_trace_second(m: &CMat, dim_first: usize, dim_second: usize) -> Result<CMat> {
    let n = dim_first * dim_second;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = CMat::zeros(dim_first, dim_first);
    for i in 0..dim_first {
        for j in 0..dim_first {
            let mut s = ZERO;
            for k in 0..dim_second {
                s += m[(i * dim_second + k, j * dim_second + k)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Transpose in the computational basis (no conjugation).
pub fn transpose(m: &CMat) -> CMat {
    m.transpose()
}

/// Eigenvalues of a Hermitian matrix in ascending order. Only the upper
/// triangle is trusted; the input is symmetrized first.
pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Eigen-decomposition `(values, vectors)` with eigenvectors as columns,
/// sorted by ascending eigenvalue.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    eigvalsh(m)[0]
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    *eigvalsh(m).last().unwrap()
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let fk = f(vals[k]);
        for i in 0..n {
            scaled[(i, k)] *= fk;
        }
    }
    hermitize(&(scaled * vecs.adjoint()))
}

/// Principal square root of a PSD matrix (negative eigenvalues clipped).
pub fn sqrt_psd(m: &CMat) -> CMat {
    spectral_map(m, |x| x.max(0.0).sqrt())
}

/// Inverse square root; `None` if the smallest eigenvalue is below `floor`.
pub fn inv_sqrt_pd(m: &CMat, floor: f64) -> Option<CMat> {
    if min_eigenvalue(m) <= floor {
        return None;
    }
    Some(spectral_map(m, |x| 1.0 / x.sqrt()))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_of(m: &CMat) -> f64 {
    eigvalsh(m).iter().map(|x| x.abs()).sum()
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_of(m: &CMat) -> f64 {
    eigvalsh(m).iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Largest singular value of an arbitrary square matrix.
pub fn operator_norm(m: &CMat) -> f64 {
    max_eigenvalue(&(m.adjoint() * m)).max(0.0).sqrt()
}

/// Real symmetric embedding `[[Re m, -Im m], [Im m, Re m]]`.
pub fn real_embed(m: &CMat) -> RMat {
    let n = m.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Hermitian matrix, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian(CMat);

impl Hermitian {
    /// Accepts `m` if it is square, finite and Hermitian within
    /// `tol.hermiticity`. The stored matrix is exactly Hermitian.
    pub fn new(m: CMat, tol: &Tolerances) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_finite(&m) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let defect = hermiticity_defect(&m);
        if defect > tol.hermiticity {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self(hermitize(&m)))
    }

    /// Symmetrizes without checking.
    pub fn from_hermitized(m: &CMat) -> Self {
        Self(hermitize(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.0)
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm_of(&self.0)
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm_of(&self.0)
    }

    pub fn real_embed(&self) -> RMat {
        real_embed(&self.0)
    }
}

impl Deref for Hermitian {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

pub fn trace_norm(m: &Hermitian) -> f64 {
    m.trace_norm()
}

pub fn spectral_norm(m: &Hermitian) -> f64 {
    m.spectral_norm()
}

pub fn real_embed_hermitian(m: &Hermitian) -> RMat {
    m.real_embed()
}

/// Unit-trace PSD matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Hermitian);

impl DensityMatrix {
    pub fn new(m: CMat, tol: &Tolerances) -> Result<Self> {
        let h = Hermitian::new(m, tol)?;
        let lmin = min_eigenvalue(&h);
        if lmin < -tol.psd {
            return Err(Error::InvalidArgument(format!(
                "state has negative eigenvalue {lmin:.3e}"
            )));
        }
        let tr = trace(&h).re;
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("state has trace {tr}")));
        }
        Ok(Self(h))
    }

    /// `|Φ+><Φ+|` on `C^d ⊗ C^d` with `|Φ+> = d^{-1/2} Σ_i |ii>`.
    pub fn phi_plus(d: usize) -> Self {
        let mut v = DVector::from_element(d * d, ZERO);
        let amp = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            v[i * d + i] = c(amp, 0.0);
        }
        Self(Hermitian::from_hermitized(&outer(&v)))
    }

    /// Pure state from an (unnormalized) vector.
    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let u = v / c(n, 0.0);
        Ok(Self(Hermitian::from_hermitized(&outer(&u))))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(Hermitian::from_hermitized(&scale(&identity(d), 1.0 / d as f64)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMat {
        self.0.matrix()
    }
}

impl Deref for DensityMatrix {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        self.0.matrix()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))))
    }

    fn random_matrix(n: usize, seed: u64) -> CMat {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        crate::random::ginibre(n, n, &mut rng)
    }

    #[test]
    fn kron_identity_and_diagonal() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        assert_eq!(kron(&diag(&[1.0, 2.0]), &diag(&[3.0, 4.0])), diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_with_projector_is_block() {
        let m = random_matrix(3, 7);
        let k = kron(&basis_projector(2, 0), &m);
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i < 3 && j < 3 { m[(i, j)] } else { ZERO };
                assert_eq!(k[(i, j)], expect);
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let a = random_matrix(2, 1);
        let b = random_matrix(3, 2);
        let pt = partial_trace_first(&kron(&a, &b), 2, 3).unwrap();
        let expect = &b * trace(&a);
        assert!(max_abs_entry(&(pt - expect)) < 1e-12);
    }

    #[test]
    fn partial_trace_of_unnormalized_phi_plus_is_identity() {
        let d = 3;
        let phi = scale(DensityMatrix::phi_plus(d).matrix(), d as f64);
        let pt = partial_trace_first(&phi, d, d).unwrap();
        assert!(max_abs_entry(&(pt - identity(d))) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        assert!(matches!(
            partial_trace_first(&zeros(5), 2, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn norms_of_simple_matrices() {
        let z = Hermitian::from_hermitized(&diag(&[1.0, -1.0]));
        assert!((z.trace_norm() - 2.0).abs() < 1e-14);
        assert!((z.spectral_norm() - 1.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&Hermitian::from_hermitized(&zeros(3))), 0.0);
        assert!((spectral_norm(&Hermitian::from_hermitized(&identity(4))) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_two_projectors() {
        // |v> = |0>, |w> = |+>: overlap 1/sqrt 2.
        let v = DVector::from_vec(vec![ONE, ZERO]);
        let w = DVector::from_vec(vec![c(1.0 / 2f64.sqrt(), 0.0), c(1.0 / 2f64.sqrt(), 0.0)]);
        let s = Hermitian::from_hermitized(&(outer(&v) + outer(&w)));
        assert!((s.spectral_norm() - (1.0 + 1.0 / 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_matches_singular_values() {
        let a = random_matrix(4, 11);
        let h = hermitize(&a);
        let sv: f64 = h.clone().svd(false, false).singular_values.iter().sum();
        assert!((trace_norm_of(&h) - sv).abs() < 1e-10);
    }

    #[test]
    fn embedding_of_pauli_y() {
        let y = CMat::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
        let e = real_embed(&y);
        assert_eq!(e, e.transpose());
        let mut ev: Vec<f64> = e.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_of_real_matrix_is_block_diagonal() {
        let m = diag(&[1.0, 2.0]);
        let e = real_embed(&m);
        let want = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 1.0, 2.0]));
        assert_eq!(e, want);
    }

    #[test]
    fn hermitian_constructor_rejects_non_hermitian() {
        let tol = Tolerances::default();
        let m = CMat::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(Hermitian::new(m, &tol).is_err());
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let a = random_matrix(3, 5);
        let p = &a * a.adjoint();
        let r = sqrt_psd(&p);
        assert!(max_abs_entry(&(&r * &r - p)) < 1e-10);
    }
}
