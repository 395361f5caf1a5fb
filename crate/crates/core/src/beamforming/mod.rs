//! BS precoding and IRS reflect beamforming.

mod pga;
mod precoder;

pub use pga::{irs_phases_multiuser_pga, PgaOptions, PgaResult, SoftMinObjective};
pub use precoder::{maxmin_precoder, maxmin_precoder_warm, MaxMinOptions, MaxMinOutcome};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// IRS reflection vector with unit-modulus entries.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsPhaseVector(CVec);

impl IrsPhaseVector {
    pub fn ones(n: usize) -> Self {
        Self(CVec::from_element(n, C64::from(1.0)))
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self(CVec::from_iterator(phases.len(), phases.iter().map(|&p| C64::from_polar(1.0, p))))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self(CVec::from_fn(n, |_, _| {
            C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
        }))
    }

    /// Projects an arbitrary vector onto the unit-modulus set, entry by entry.
    /// Entries that vanish get a fresh random phase.
    pub fn project<R: Rng + ?Sized>(v: &CVec, rng: &mut R) -> Self {
        Self(v.map(|z| {
            let r = z.norm();
            if r > 0.0 && r.is_finite() {
                z / r
            } else {
                C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
            }
        }))
    }

    pub fn as_vector(&self) -> &CVec {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }

    /// Largest deviation of any entry from unit modulus.
    pub fn modulus_error(&self) -> f64 {
        self.0.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Per-user precoding directions and powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecoderSolution {
    #[serde(skip)]
    pub g: Vec<CVec>,
    /// Watts.
    pub p: Vec<f64>,
}

impl PrecoderSolution {
    pub fn total_power(&self) -> f64 {
        self.p.iter().zip(&self.g).map(|(p, g)| p * g.norm_squared()).sum()
    }
}

/// Maximum ratio transmission for a single user.
pub fn mrt(h_eff: &CVec, p_t: f64) -> Result<PrecoderSolution> {
    let norm = h_eff.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateChannel("MRT needs a nonzero channel".into()));
    }
    Ok(PrecoderSolution {
        g: vec![h_eff / C64::from(norm)],
        p: vec![p_t],
    })
}

/// Single-user optimum `v = exp(j arg(h0^H hd))`: every reflected path adds
/// in phase with the direct path. Elements with `(h0^H hd)_n = 0` get phase 0.
pub fn irs_phases_single_user(h0: &CMat, hd: &CVec) -> Result<IrsPhaseVector> {
    if h0.nrows() != hd.len() {
        return Err(Error::Dimension(format!("cascade has {} rows, direct channel {} entries", h0.nrows(), hd.len())));
    }
    if hd.norm() == 0.0 {
        return Err(Error::DegenerateChannel(
            "direct channel is zero; use irs_phases_reflect_only".into(),
        ));
    }
    Ok(align_to(h0, hd))
}

/// Maximizes `||h0 v||` when there is no direct path: align every element
/// with the principal left singular vector of `h0` (exact for rank-one `h0`).
pub fn irs_phases_reflect_only(h0: &CMat) -> Result<IrsPhaseVector> {
    if h0.ncols() == 0 {
        return Ok(IrsPhaseVector::ones(0));
    }
    if h0.norm() == 0.0 {
        return Err(Error::DegenerateChannel("cascaded channel is zero".into()));
    }
    let svd = h0.clone().svd(true, false);
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &s)| if s > best.1 { (i, s) } else { best });
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not return left singular vectors".into()))?
        .column(idx)
        .into_owned();
    Ok(align_to(h0, &u))
}

fn align_to(h0: &CMat, reference: &CVec) -> IrsPhaseVector {
    let proj = h0.adjoint() * reference;
    IrsPhaseVector(proj.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::from(1.0) }))
}
