//! Seeded random matrices and maps used as test fuel.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMat, C64};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed isometry `C^cols -> C^rows` (`rows >= cols`).
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    assert!(rows >= cols);
    let g = ginibre(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    haar_isometry(d, d, rng)
}

/// Random point of the probability simplex of size `n` (uniform).
pub fn simplex_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random probability vector bounded away from zero.
pub fn positive_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| 0.2 + rng.gen::<f64>()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Haar-random pure state of dimension `d`.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<C64> {
    let g = ginibre(d, 1, rng);
    let n = g.norm();
    DVector::from_iterator(d, g.iter().map(|z| z / n))
}

/// Random density matrix of dimension `d` from a Ginibre matrix of the given
/// rank (Hilbert-Schmidt measure when `rank == d`).
pub fn density_matrix<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, rank.max(1), rng);
    let p = &g * g.adjoint();
    let t = crate::linalg::trace(&p).re;
    crate::linalg::hermitize(&p.map(|z| z / t))
}
