//! Channel realizations for the BS -> IRS -> user and BS -> user links.
//!
//! `h1` is the M x N BS-IRS matrix, `h2[k]` the IRS-user-k vector and
//! `hd[k]` the direct BS-user-k vector. The cascade `h0[k] = h1 diag(h2[k])`
//! separates everything the IRS cannot control from its reflection vector.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, complex_gaussian_vec, psd_sqrt, CMat, CVec, C64};
use crate::scenario::{link_gain, Link, ScenarioConfig};

/// Half-wavelength ULA response: entry m is `exp(j pi m sin(angle))`.
pub fn steering_vector(n_elem: usize, angle: f64) -> CVec {
    let phase = PI * angle.sin();
    CVec::from_fn(n_elem, |m, _| C64::from_polar(1.0, phase * m as f64))
}

/// Departure angle at the BS and arrival angle at the IRS for the LoS link,
/// measured from each array's broadside (taken along the x axis).
pub fn los_angles(cfg: &ScenarioConfig) -> (f64, f64) {
    let dx = cfg.irs_pos[0] - cfg.bs_pos[0];
    let dy = cfg.irs_pos[1] - cfg.bs_pos[1];
    (dy.atan2(dx), (-dy).atan2(-dx))
}

/// Rank-one LoS BS-IRS matrix `sqrt(beta_1) a(aod) b(aoa)^H`.
pub fn rank_one_h1(cfg: &ScenarioConfig, aod: f64, aoa: f64) -> Result<CMat> {
    let beta = link_gain(Link::BsIrs, cfg)?;
    Ok(rank_one_with_gain(cfg.m_bs, cfg.n_irs, beta, aod, aoa))
}

fn rank_one_with_gain(m: usize, n: usize, beta: f64, aod: f64, aoa: f64) -> CMat {
    let a = steering_vector(m, aod);
    let b = steering_vector(n, aoa);
    (a * b.adjoint()) * C64::from(beta.sqrt())
}

/// Multipath BS-IRS matrix: a sum of `n_paths` rank-one components with
/// CN(0, 1) gains and angles uniform on [-pi/2, pi/2], scaled so that
/// `E ||H1||_F^2 = beta_1 M N`.
pub fn full_rank_h1<R: Rng + ?Sized>(cfg: &ScenarioConfig, n_paths: usize, rng: &mut R) -> Result<CMat> {
    if n_paths < cfg.k_users {
        return Err(Error::Config(format!(
            "full-rank BS-IRS channel needs at least K = {} paths, got {n_paths}",
            cfg.k_users
        )));
    }
    let beta = link_gain(Link::BsIrs, cfg)?;
    Ok(full_rank_with_gain(cfg.m_bs, cfg.n_irs, beta, n_paths, rng))
}

fn full_rank_with_gain<R: Rng + ?Sized>(m: usize, n: usize, beta: f64, n_paths: usize, rng: &mut R) -> CMat {
    let mut h = CMat::zeros(m, n);
    for _ in 0..n_paths {
        let gain = complex_gaussian(rng);
        let aod = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let aoa = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let a = steering_vector(m, aod);
        let b = steering_vector(n, aoa);
        h += (a * b.adjoint()) * gain;
    }
    h * C64::from((beta / n_paths as f64).sqrt())
}

/// Exponential correlation model, entry (i, j) = `rho^|i - j|`.
pub fn exp_correlation(n: usize, rho: f64) -> Result<CMat> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("correlation coefficient must lie in [0, 1), got {rho}")));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::from(rho.powi(i.abs_diff(j) as i32))))
}

/// One draw of `sqrt(beta) R^{1/2} z` with `z ~ CN(0, I)`.
pub fn sample_correlated_rayleigh<R: Rng + ?Sized>(r: &CMat, beta: f64, rng: &mut R) -> Result<CVec> {
    let sqrt_r = psd_sqrt(r)?;
    Ok(sample_with_sqrt(&sqrt_r, beta, rng))
}

fn sample_with_sqrt<R: Rng + ?Sized>(sqrt_r: &CMat, beta: f64, rng: &mut R) -> CVec {
    let z = complex_gaussian_vec(sqrt_r.ncols(), rng);
    (sqrt_r * z) * C64::from(beta.sqrt())
}

/// `h1 diag(h2k)`: column n of `h1` scaled by `h2k[n]`.
pub fn cascade(h1: &CMat, h2k: &CVec) -> Result<CMat> {
    if h1.ncols() != h2k.len() {
        return Err(Error::Dimension(format!(
            "BS-IRS matrix has {} columns but IRS-user vector has {} entries",
            h1.ncols(),
            h2k.len()
        )));
    }
    let mut h0 = h1.clone();
    for (n, mut col) in h0.column_iter_mut().enumerate() {
        col *= h2k[n];
    }
    Ok(h0)
}

/// Second-order statistics of every link.
#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    pub r_bs: Vec<CMat>,
    pub r_irs: Vec<CMat>,
    pub beta_1: f64,
    pub beta_2: Vec<f64>,
    pub beta_d: Vec<f64>,
    sqrt_bs: Vec<CMat>,
    sqrt_irs: Vec<CMat>,
}

impl ChannelStatistics {
    pub fn new(r_bs: Vec<CMat>, r_irs: Vec<CMat>, beta_1: f64, beta_2: Vec<f64>, beta_d: Vec<f64>) -> Result<Self> {
        let k = beta_d.len();
        if r_bs.len() != k || r_irs.len() != k || beta_2.len() != k {
            return Err(Error::Dimension("per-user statistics must all have K entries".into()));
        }
        if beta_2.iter().chain(&beta_d).chain(std::iter::once(&beta_1)).any(|b| !(*b >= 0.0)) {
            return Err(Error::Domain("link gains must be non-negative".into()));
        }
        let sqrt_bs = r_bs.iter().map(psd_sqrt).collect::<Result<Vec<_>>>()?;
        let sqrt_irs = r_irs.iter().map(psd_sqrt).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            r_bs,
            r_irs,
            beta_1,
            beta_2,
            beta_d,
            sqrt_bs,
            sqrt_irs,
        })
    }

    /// Exponential-correlation statistics with link gains from the geometry.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let k = cfg.k_users;
        let r_bs = exp_correlation(cfg.m_bs, cfg.rho_bs)?;
        let r_irs = exp_correlation(cfg.n_irs, cfg.rho_irs)?;
        let beta_1 = link_gain(Link::BsIrs, cfg)?;
        let beta_2 = (0..k).map(|i| link_gain(Link::IrsUser(i), cfg)).collect::<Result<Vec<_>>>()?;
        let beta_d = (0..k).map(|i| link_gain(Link::BsUser(i), cfg)).collect::<Result<Vec<_>>>()?;
        // All users share one correlation model, so factor it once.
        let sqrt_bs = psd_sqrt(&r_bs)?;
        let sqrt_irs = psd_sqrt(&r_irs)?;
        Ok(Self {
            r_bs: vec![r_bs; k],
            r_irs: vec![r_irs; k],
            beta_1,
            beta_2,
            beta_d,
            sqrt_bs: vec![sqrt_bs; k],
            sqrt_irs: vec![sqrt_irs; k],
        })
    }

    pub fn k_users(&self) -> usize {
        self.beta_d.len()
    }

    /// Prior covariance of the direct channel of user k, `beta_d R_BS`.
    pub fn direct_prior(&self, k: usize) -> CMat {
        &self.r_bs[k] * C64::from(self.beta_d[k])
    }

    /// Marginal variance of IRS-user entry n for user k.
    pub fn irs_entry_var(&self, k: usize, n: usize) -> f64 {
        self.beta_2[k] * self.r_irs[k][(n, n)].re
    }

    pub fn sample_direct<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> CVec {
        sample_with_sqrt(&self.sqrt_bs[k], self.beta_d[k], rng)
    }

    pub fn sample_irs_user<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> CVec {
        sample_with_sqrt(&self.sqrt_irs[k], self.beta_2[k], rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum H1Model {
    /// Pure LoS between co-located arrays; fixed by the geometry.
    RankOne,
    /// Scattered LoS with this many paths.
    FullRank { n_paths: usize },
}

impl H1Model {
    pub fn full_rank_default(k_users: usize) -> Self {
        H1Model::FullRank { n_paths: 2 * k_users }
    }

    /// Draws the BS-IRS matrix with link gain `beta_1`.
    pub fn draw<R: Rng + ?Sized>(self, cfg: &ScenarioConfig, beta_1: f64, rng: &mut R) -> Result<CMat> {
        match self {
            H1Model::RankOne => {
                let (aod, aoa) = los_angles(cfg);
                Ok(rank_one_with_gain(cfg.m_bs, cfg.n_irs, beta_1, aod, aoa))
            }
            H1Model::FullRank { n_paths } => {
                if n_paths < cfg.k_users {
                    return Err(Error::Config(format!(
                        "full-rank BS-IRS channel needs at least K = {} paths, got {n_paths}",
                        cfg.k_users
                    )));
                }
                Ok(full_rank_with_gain(cfg.m_bs, cfg.n_irs, beta_1, n_paths, rng))
            }
        }
    }
}

/// Cascaded view of a channel: what beamformer design and evaluation need.
pub trait CascadedChannels {
    fn direct(&self) -> &[CVec];
    fn cascaded(&self) -> &[CMat];

    fn k_users(&self) -> usize {
        self.direct().len()
    }
    fn m_bs(&self) -> usize {
        self.direct().first().map_or(0, |h| h.len())
    }
    fn n_irs(&self) -> usize {
        self.cascaded().first().map_or(0, |h| h.ncols())
    }
}

/// One realization of all links plus the derived cascades.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h1: CMat,
    pub h2: Vec<CVec>,
    pub hd: Vec<CVec>,
    pub h0: Vec<CMat>,
}

impl ChannelSet {
    pub fn from_parts(h1: CMat, h2: Vec<CVec>, hd: Vec<CVec>) -> Result<Self> {
        if h2.len() != hd.len() {
            return Err(Error::Dimension(format!("{} IRS-user vectors vs {} direct vectors", h2.len(), hd.len())));
        }
        if let Some(bad) = hd.iter().find(|h| h.len() != h1.nrows()) {
            return Err(Error::Dimension(format!("direct channel has {} entries, expected {}", bad.len(), h1.nrows())));
        }
        let h0 = h2.iter().map(|h2k| cascade(&h1, h2k)).collect::<Result<Vec<_>>>()?;
        Ok(Self { h1, h2, hd, h0 })
    }

    /// A system without an IRS: zero reflecting elements, direct links only.
    pub fn direct_only(hd: Vec<CVec>) -> Self {
        let m = hd.first().map_or(0, |h| h.len());
        let k = hd.len();
        Self {
            h1: CMat::zeros(m, 0),
            h2: vec![CVec::zeros(0); k],
            h0: vec![CMat::zeros(m, 0); k],
            hd,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ChannelSetDump::from(self))?)
    }
}

impl CascadedChannels for ChannelSet {
    fn direct(&self) -> &[CVec] {
        &self.hd
    }
    fn cascaded(&self) -> &[CMat] {
        &self.h0
    }
}

/// Draws every link of one realization. Direct channels are drawn first so
/// that, for a fixed RNG state, they do not depend on the IRS size.
pub fn draw_channel_set<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    stats: &ChannelStatistics,
    mode: H1Model,
    rng: &mut R,
) -> Result<ChannelSet> {
    if stats.k_users() != cfg.k_users {
        return Err(Error::Dimension(format!("statistics for {} users, config has {}", stats.k_users(), cfg.k_users)));
    }
    let hd = (0..cfg.k_users).map(|k| stats.sample_direct(k, rng)).collect();
    let h1 = mode.draw(cfg, stats.beta_1, rng)?;
    let h2 = (0..cfg.k_users).map(|k| stats.sample_irs_user(k, rng)).collect();
    ChannelSet::from_parts(h1, h2, hd)
}

#[derive(Serialize)]
struct ComplexArray {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl ComplexArray {
    fn from_matrix(m: &CMat) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| m.row(i).iter().map(f).collect()).collect();
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

#[derive(Serialize)]
struct ComplexVector {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<&CVec> for ComplexVector {
    fn from(v: &CVec) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

#[derive(Serialize)]
struct ChannelSetDump {
    m_bs: usize,
    n_irs: usize,
    k_users: usize,
    h1: ComplexArray,
    h2: Vec<ComplexVector>,
    hd: Vec<ComplexVector>,
    h0: Vec<ComplexArray>,
}

impl From<&ChannelSet> for ChannelSetDump {
    fn from(c: &ChannelSet) -> Self {
        Self {
            m_bs: c.h1.nrows(),
            n_irs: c.h1.ncols(),
            k_users: c.hd.len(),
            h1: ComplexArray::from_matrix(&c.h1),
            h2: c.h2.iter().map(ComplexVector::from).collect(),
            hd: c.hd.iter().map(ComplexVector::from).collect(),
            h0: c.h0.iter().map(ComplexArray::from_matrix).collect(),
        }
    }
}
