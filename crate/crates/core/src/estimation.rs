//! Uplink training with on/off IRS elements and LMMSE channel estimation.
//!
//! The training window is split into N + 1 sub-phases. In sub-phase 0 every
//! element is off and the BS sees only the direct channels; in sub-phase t
//! only element t is on, adding the cascaded column `h0[k][:, t-1]`. After
//! matching with each user's (orthogonal) pilot, every sub-phase yields one
//! noisy M-vector observation per user.

use rand::Rng;

use crate::channel::{CascadedChannels, ChannelSet, ChannelStatistics};
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_vec, hermitian_eigen, CMat, CVec, C64};
use crate::scenario::ScenarioConfig;

/// Pilot-matched observations, indexed `r[sub_phase][user]`.
#[derive(Debug, Clone)]
pub struct TrainingObservations {
    pub r: Vec<Vec<CVec>>,
    /// Per-entry noise variance of every observation.
    pub noise_var_eff: f64,
}

impl TrainingObservations {
    pub fn sub_phases(&self) -> usize {
        self.r.len()
    }
}

/// Runs the full protocol on `channels` with the noise level implied by the
/// pilot energy of one sub-phase (see [`ScenarioConfig::training_noise_var`]).
pub fn run_training<R: Rng + ?Sized>(cfg: &ScenarioConfig, channels: &ChannelSet, rng: &mut R) -> TrainingObservations {
    let noise = cfg.training_noise_var(channels.n_irs() + 1);
    observe(channels, noise, rng)
}

/// Same protocol with an explicit per-entry observation noise variance.
pub fn observe<R: Rng + ?Sized>(channels: &impl CascadedChannels, noise_var: f64, rng: &mut R) -> TrainingObservations {
    let n = channels.n_irs();
    let std = noise_var.max(0.0).sqrt();
    let mut r = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let row = channels
            .direct()
            .iter()
            .zip(channels.cascaded())
            .map(|(hd, h0)| {
                let mut obs = hd.clone();
                if t > 0 {
                    obs += h0.column(t - 1);
                }
                if std > 0.0 {
                    obs += complex_gaussian_vec(hd.len(), rng) * C64::from(std);
                }
                obs
            })
            .collect();
        r.push(row);
    }
    TrainingObservations { r, noise_var_eff: noise_var }
}

/// LMMSE estimate of a zero-mean vector with covariance `prior_cov` seen in
/// white noise of variance `noise_var`: `C (C + sI)^{-1} r` and its error
/// covariance `C - C (C + sI)^{-1} C`.
///
/// Evaluated in the eigenbasis of `C`, which keeps the noiseless limit
/// (`noise_var = 0`) well defined for singular priors.
pub fn lmmse_direct(r0k: &CVec, prior_cov: &CMat, noise_var: f64) -> Result<(CVec, CMat)> {
    if !(noise_var >= 0.0) {
        return Err(Error::Domain(format!("noise variance must be non-negative, got {noise_var}")));
    }
    if prior_cov.nrows() != r0k.len() {
        return Err(Error::Dimension(format!(
            "prior covariance is {}x{}, observation has {} entries",
            prior_cov.nrows(),
            prior_cov.ncols(),
            r0k.len()
        )));
    }
    let (vals, vecs) = hermitian_eigen(prior_cov)?;
    let scale = vals.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    let mut estimate = CVec::zeros(r0k.len());
    let mut err = CMat::zeros(r0k.len(), r0k.len());
    for (i, &lambda) in vals.iter().enumerate() {
        if lambda < -1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain("prior covariance is not positive semidefinite".into()));
        }
        let lambda = lambda.max(0.0);
        let u = vecs.column(i);
        let denom = lambda + noise_var;
        // Shrinkage lambda / (lambda + s); a null direction keeps the prior mean.
        let (gain, residual) = if denom > 0.0 { (lambda / denom, lambda * noise_var / denom) } else { (0.0, 0.0) };
        if gain != 0.0 {
            estimate += u * (u.dotc(r0k) * gain);
        }
        if residual != 0.0 {
            err += (u * u.adjoint()) * C64::from(residual);
        }
    }
    Ok((estimate, err))
}

/// LMMSE estimate of the cascaded column `h0_{t,k} = h1_col * h2_{t,k}` from
/// the difference `r_t - r_0`, whose noise has twice the per-observation
/// variance.
///
/// With a known BS-IRS column the prior `var_n h1_col h1_col^H` is rank one,
/// so the estimate is always `h1_col` times a scalar (returned as the third
/// element: the estimate of `h2_{t,k}`).
pub fn lmmse_cascaded(rtk: &CVec, r0k: &CVec, h1_col: &CVec, var_n: f64, noise_var: f64) -> Result<(CVec, CMat, C64)> {
    if !(var_n >= 0.0) || !(noise_var >= 0.0) {
        return Err(Error::Domain("variances must be non-negative".into()));
    }
    if rtk.len() != r0k.len() || rtk.len() != h1_col.len() {
        return Err(Error::Dimension("observation and BS-IRS column lengths differ".into()));
    }
    let m = h1_col.len();
    let energy = h1_col.norm_squared();
    let denom = var_n * energy + 2.0 * noise_var;
    if var_n == 0.0 || energy == 0.0 || denom == 0.0 {
        return Ok((CVec::zeros(m), CMat::zeros(m, m), C64::from(0.0)));
    }
    let d = rtk - r0k;
    let coeff = h1_col.dotc(&d) * (var_n / denom);
    let estimate = h1_col * coeff;
    let err = (h1_col * h1_col.adjoint()) * C64::from(var_n * 2.0 * noise_var / denom);
    Ok((estimate, err, coeff))
}

/// Channel estimates plus their analytic error covariances.
#[derive(Debug, Clone)]
pub struct ChannelEstimateSet {
    pub hd_hat: Vec<CVec>,
    /// `h0_hat[k][n]` is the estimate of column n of the cascade of user k.
    pub h0_hat: Vec<Vec<CVec>>,
    pub err_cov_d: Vec<CMat>,
    pub err_cov_0: Vec<Vec<CMat>>,
    /// Estimated IRS-user coefficients, one per element.
    pub h2_hat: Vec<CVec>,
    h0_matrices: Vec<CMat>,
}

impl ChannelEstimateSet {
    /// Cascade of user k assembled column by column.
    pub fn h0_matrix(&self, k: usize) -> &CMat {
        &self.h0_matrices[k]
    }

    /// The estimates repackaged as a channel realization over the known `h1`.
    pub fn to_channel_set(&self, h1: &CMat) -> Result<ChannelSet> {
        ChannelSet::from_parts(h1.clone(), self.h2_hat.clone(), self.hd_hat.clone())
    }
}

impl CascadedChannels for ChannelEstimateSet {
    fn direct(&self) -> &[CVec] {
        &self.hd_hat
    }
    fn cascaded(&self) -> &[CMat] {
        &self.h0_matrices
    }
}

/// Estimates every direct channel from sub-phase 0 and every cascaded
/// column from sub-phase t, one element at a time.
pub fn estimate_all(obs: &TrainingObservations, stats: &ChannelStatistics, h1: &CMat) -> Result<ChannelEstimateSet> {
    let k_users = stats.k_users();
    let n = h1.ncols();
    if obs.sub_phases() != n + 1 {
        return Err(Error::Dimension(format!(
            "{} sub-phases observed, expected {} for {n} IRS elements",
            obs.sub_phases(),
            n + 1
        )));
    }
    if obs.r.iter().any(|row| row.len() != k_users) {
        return Err(Error::Dimension("observation rows must have one entry per user".into()));
    }
    let s = obs.noise_var_eff;
    let mut out = ChannelEstimateSet {
        hd_hat: Vec::with_capacity(k_users),
        h0_hat: Vec::with_capacity(k_users),
        err_cov_d: Vec::with_capacity(k_users),
        err_cov_0: Vec::with_capacity(k_users),
        h2_hat: Vec::with_capacity(k_users),
        h0_matrices: Vec::with_capacity(k_users),
    };
    let columns: Vec<CVec> = h1.column_iter().map(|c| c.into_owned()).collect();
    for k in 0..k_users {
        let r0k = &obs.r[0][k];
        let (hd, cov_d) = lmmse_direct(r0k, &stats.direct_prior(k), s)?;
        let mut cols = Vec::with_capacity(n);
        let mut covs = Vec::with_capacity(n);
        let mut h2 = CVec::zeros(n);
        let mut h0 = CMat::zeros(h1.nrows(), n);
        for (idx, col) in columns.iter().enumerate() {
            let (est, cov, coeff) = lmmse_cascaded(&obs.r[idx + 1][k], r0k, col, stats.irs_entry_var(k, idx), s)?;
            h0.set_column(idx, &est);
            h2[idx] = coeff;
            cols.push(est);
            covs.push(cov);
        }
        out.hd_hat.push(hd);
        out.err_cov_d.push(cov_d);
        out.h0_hat.push(cols);
        out.err_cov_0.push(covs);
        out.h2_hat.push(h2);
        out.h0_matrices.push(h0);
    }
    Ok(out)
}
