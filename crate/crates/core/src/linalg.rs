//! Small complex linear-algebra and sampling helpers shared by the simulator.
//!
//! Matrices and vectors are `nalgebra` dynamic types over `Complex<f64>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues below this are treated as a genuine loss of positive semidefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// One draw from CN(0, 1).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.norm().max(1.0);
    (m - m.adjoint()).norm() <= tol * scale
}

/// Hermitian positive semidefinite square root `U diag(sqrt(max(λ, 0))) U^H`.
///
/// Eigenvalues in `[-PSD_TOLERANCE, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(r: &CMat) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(r)?;
    let scale = vals.iter().fold(1.0_f64, |a, &l| a.max(l.abs()));
    let mut out = CMat::zeros(r.nrows(), r.ncols());
    for (i, &lambda) in vals.iter().enumerate() {
        if lambda < -PSD_TOLERANCE * scale {
            return Err(Error::Domain(format!(
                "matrix is not positive semidefinite (eigenvalue {lambda:e})"
            )));
        }
        let s = lambda.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        let u = vecs.column(i);
        out += (u * u.adjoint()) * C64::from(s);
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and unitary eigenvectors.
pub fn hermitian_eigen(r: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !r.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if !is_hermitian(r, 1e-9) {
        return Err(Error::Domain("matrix is not Hermitian".into()));
    }
    if r.nrows() == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (r + r.adjoint()) * C64::from(0.5);
    let eig = sym.symmetric_eigen();
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

pub fn diag(v: &CVec) -> CMat {
    CMat::from_diagonal(v)
}

/// Real part of `a^H b`.
pub fn re_inner(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).re
}

/// Derives an independent, reproducible random stream for `(seed, trial, purpose)`.
///
/// Each purpose gets its own ChaCha stream so that, for example, the direct
/// channels of trial `t` do not depend on how many IRS elements were drawn.
pub fn stream_rng(seed: u64, trial: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(16).wrapping_add(purpose as u64));
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Placement = 0,
    DirectChannel = 1,
    BsIrsChannel = 2,
    IrsUserChannel = 3,
    TrainingNoise = 4,
    Optimizer = 5,
}
