//! SINR and rate evaluation, and seeded Monte Carlo sweeps.
//!
//! Beamformers may be designed on estimated channels, but every SINR is
//! evaluated on the true channels.

use rand::Rng;
use serde::Serialize;

use crate::beamforming::{
    irs_phases_multiuser_pga, irs_phases_reflect_only, irs_phases_single_user, maxmin_precoder_warm, mrt,
    IrsPhaseVector, PgaOptions, PrecoderSolution,
};
use crate::channel::{CascadedChannels, ChannelSet, ChannelStatistics, H1Model};
use crate::error::{Error, Result};
use crate::estimation::{estimate_all, run_training};
use crate::linalg::{stream_rng, CVec, StreamPurpose};
use crate::scenario::{linear_to_db, ScenarioConfig, MULTI_USER_DROP_BOX};

/// `h_k = h_d,k + H_0,k v`.
pub fn effective_channel(channels: &impl CascadedChannels, v: &IrsPhaseVector, k: usize) -> Result<CVec> {
    let hd = channels
        .direct()
        .get(k)
        .ok_or_else(|| Error::Usage(format!("user {k} out of range")))?;
    let h0 = &channels.cascaded()[k];
    if h0.ncols() == 0 {
        return Ok(hd.clone());
    }
    if h0.ncols() != v.len() {
        return Err(Error::Dimension(format!("{} IRS elements but phase vector of length {}", h0.ncols(), v.len())));
    }
    Ok(hd + h0 * v.as_vector())
}

/// Downlink SINR of user k: `p_k |h_k^H g_k|² / (Σ_{j≠k} p_j |h_k^H g_j|² + σ²)`.
pub fn sinr(channels: &impl CascadedChannels, v: &IrsPhaseVector, sol: &PrecoderSolution, sigma2: f64, k: usize) -> Result<f64> {
    let h = effective_channel(channels, v, k)?;
    Ok(sinr_on(&h, sol, sigma2, k))
}

fn sinr_on(h: &CVec, sol: &PrecoderSolution, sigma2: f64, k: usize) -> f64 {
    let signal = sol.p[k] * h.dotc(&sol.g[k]).norm_sqr();
    let interference: f64 = (0..sol.p.len())
        .filter(|&j| j != k)
        .map(|j| sol.p[j] * h.dotc(&sol.g[j]).norm_sqr())
        .sum();
    signal / (interference + sigma2)
}

pub fn sinrs(channels: &impl CascadedChannels, v: &IrsPhaseVector, sol: &PrecoderSolution, sigma2: f64) -> Result<Vec<f64>> {
    if sol.p.len() != channels.k_users() || sol.g.len() != channels.k_users() {
        return Err(Error::Dimension("precoder and channel user counts differ".into()));
    }
    (0..channels.k_users())
        .map(|k| effective_channel(channels, v, k).map(|h| sinr_on(&h, sol, sigma2, k)))
        .collect()
}

/// Single-user received SNR in dB under MRT on the true effective channel.
pub fn received_snr_db(channels: &impl CascadedChannels, v: &IrsPhaseVector, cfg: &ScenarioConfig) -> Result<f64> {
    if channels.k_users() != 1 {
        return Err(Error::Usage(format!("received SNR is defined for one user, got {}", channels.k_users())));
    }
    let h = effective_channel(channels, v, 0)?;
    Ok(linear_to_db(cfg.total_power_w * h.norm_squared() / cfg.noise_power_w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// User x-coordinate in the single-user geometry, meters.
    Du,
    /// Training duration, seconds.
    TauC,
    /// Number of IRS elements.
    NIrs,
}

impl SweepVariable {
    pub fn column_name(self) -> &'static str {
        match self {
            SweepVariable::Du => "du_m",
            SweepVariable::TauC => "tau_c_s",
            SweepVariable::NIrs => "n_irs",
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, value: f64) -> Result<()> {
        match self {
            SweepVariable::Du => {
                if cfg.k_users != 1 {
                    return Err(Error::Usage("a d_u sweep needs a single-user configuration".into()));
                }
                cfg.user_pos = vec![[value, 0.0]];
            }
            SweepVariable::TauC => cfg.training_s = value,
            SweepVariable::NIrs => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Usage(format!("IRS size must be a positive integer, got {value}")));
                }
                cfg.n_irs = value as usize;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Perfect,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Irs,
    NoIrs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UserPlacement {
    /// Use `ScenarioConfig::user_pos` as given.
    Fixed,
    /// Drop every user uniformly in `[x0, x1] x [y0, y1]` per trial.
    UniformBox { x: [f64; 2], y: [f64; 2] },
}

impl UserPlacement {
    pub fn multi_user_default() -> Self {
        let (x, y) = MULTI_USER_DROP_BOX;
        UserPlacement::UniformBox { x, y }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub csi: CsiMode,
    pub system: SystemKind,
    /// `None` picks rank-one for a single user and full-rank with 2K paths otherwise.
    pub h1_model: Option<H1Model>,
    pub placement: UserPlacement,
    /// Drop the direct links (IRS-only propagation).
    pub reflect_only: bool,
    pub pga: PgaOptions,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            variable,
            grid,
            trials,
            csi: CsiMode::Perfect,
            system: SystemKind::Irs,
            h1_model: None,
            placement: UserPlacement::Fixed,
            reflect_only: false,
            pga: PgaOptions::default(),
            seed,
        }
    }
}

/// One Monte Carlo trial at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub value: f64,
    pub seed: u64,
    pub trial: u64,
    pub snr_db: Vec<f64>,
    pub sinr: Vec<f64>,
    pub rate_bps_hz: Vec<f64>,
    pub min_rate: f64,
    pub net_min_rate: f64,
}

/// Trial averages at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub value: f64,
    pub trials: usize,
    /// Mean of the linear SINR over trials and users.
    pub mean_sinr: f64,
    /// `10 log10(mean_sinr)`.
    pub snr_db: f64,
    pub min_rate: f64,
    pub net_min_rate: f64,
}

fn drop_users(cfg: &mut ScenarioConfig, placement: UserPlacement, seed: u64, trial: u64) {
    if let UserPlacement::UniformBox { x, y } = placement {
        let mut rng = stream_rng(seed, trial, StreamPurpose::Placement);
        cfg.user_pos = (0..cfg.k_users)
            .map(|_| [rng.random_range(x[0]..=x[1]), rng.random_range(y[0]..=y[1])])
            .collect();
    }
}

/// Runs trial `trial` of `spec` at grid value `value`.
pub fn run_trial(base: &ScenarioConfig, spec: &SweepSpec, value: f64, trial: u64) -> Result<TrialResult> {
    let mut cfg = base.clone();
    spec.variable.apply(&mut cfg, value)?;
    drop_users(&mut cfg, spec.placement, spec.seed, trial);
    let k_users = cfg.k_users;

    // Training that fills the whole coherence block leaves no time for data.
    if spec.variable == SweepVariable::TauC && cfg.training_s >= cfg.coherence_s {
        return Ok(TrialResult {
            value,
            seed: spec.seed,
            trial,
            snr_db: vec![f64::NEG_INFINITY; k_users],
            sinr: vec![0.0; k_users],
            rate_bps_hz: vec![0.0; k_users],
            min_rate: 0.0,
            net_min_rate: 0.0,
        });
    }
    cfg.validate()?;

    let stats = ChannelStatistics::from_config(&cfg)?;
    let truth = draw_truth(&cfg, &stats, spec, trial)?;
    let (v, sol) = match spec.csi {
        CsiMode::Perfect => design(&cfg, &truth, spec, trial)?,
        CsiMode::Estimated => {
            let mut rng = stream_rng(spec.seed, trial, StreamPurpose::TrainingNoise);
            let obs = run_training(&cfg, &truth, &mut rng);
            let est = estimate_all(&obs, &stats, &truth.h1)?;
            design(&cfg, &est, spec, trial)?
        }
    };

    let sinr = sinrs(&truth, &v, &sol, cfg.noise_power_w)?;
    let rate_bps_hz: Vec<f64> = sinr.iter().map(|s| (1.0 + s).log2()).collect();
    let min_rate = rate_bps_hz.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TrialResult {
        value,
        seed: spec.seed,
        trial,
        snr_db: sinr.iter().map(|&s| linear_to_db(s)).collect(),
        sinr,
        rate_bps_hz,
        min_rate,
        net_min_rate: cfg.data_fraction() * min_rate,
    })
}

fn draw_truth(cfg: &ScenarioConfig, stats: &ChannelStatistics, spec: &SweepSpec, trial: u64) -> Result<ChannelSet> {
    let mut rng_d = stream_rng(spec.seed, trial, StreamPurpose::DirectChannel);
    let hd: Vec<CVec> = (0..cfg.k_users)
        .map(|k| {
            let h = stats.sample_direct(k, &mut rng_d);
            if spec.reflect_only {
                CVec::zeros(h.len())
            } else {
                h
            }
        })
        .collect();
    if spec.system == SystemKind::NoIrs {
        return Ok(ChannelSet::direct_only(hd));
    }
    let model = spec.h1_model.unwrap_or(if cfg.k_users == 1 {
        H1Model::RankOne
    } else {
        H1Model::full_rank_default(cfg.k_users)
    });
    let mut rng_1 = stream_rng(spec.seed, trial, StreamPurpose::BsIrsChannel);
    let h1 = model.draw(cfg, stats.beta_1, &mut rng_1)?;
    let mut rng_2 = stream_rng(spec.seed, trial, StreamPurpose::IrsUserChannel);
    let h2 = (0..cfg.k_users).map(|k| stats.sample_irs_user(k, &mut rng_2)).collect();
    ChannelSet::from_parts(h1, h2, hd)
}

fn design(
    cfg: &ScenarioConfig,
    channels: &impl CascadedChannels,
    spec: &SweepSpec,
    trial: u64,
) -> Result<(IrsPhaseVector, PrecoderSolution)> {
    let n = channels.n_irs();
    if channels.k_users() == 1 {
        let hd = &channels.direct()[0];
        let h0 = &channels.cascaded()[0];
        let v = if n == 0 {
            IrsPhaseVector::ones(0)
        } else if hd.norm() > 0.0 {
            irs_phases_single_user(h0, hd)?
        } else {
            irs_phases_reflect_only(h0)?
        };
        let h = effective_channel(channels, &v, 0)?;
        return Ok((v, mrt(&h, cfg.total_power_w)?));
    }
    if n == 0 {
        let out = maxmin_precoder_warm(
            channels.direct(),
            cfg.total_power_w,
            cfg.noise_power_w,
            None,
            &spec.pga.precoder,
        )?;
        return Ok((IrsPhaseVector::ones(0), out.solution));
    }
    let opts = PgaOptions {
        seed: spec.seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ..spec.pga.clone()
    };
    let res = irs_phases_multiuser_pga(channels, cfg.total_power_w, cfg.noise_power_w, &opts)?;
    Ok((res.v, res.precoder))
}

/// All trials of `spec`, grouped by grid value, in grid then trial order.
pub fn run_sweep_trials(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<Vec<TrialResult>>> {
    if spec.grid.is_empty() {
        return Err(Error::Usage("sweep grid is empty".into()));
    }
    if spec.trials == 0 {
        return Err(Error::Usage("at least one trial is required".into()));
    }
    spec.grid
        .iter()
        .map(|&value| run_trials_at(base, spec, value))
        .collect()
}

#[cfg(feature = "parallel")]
fn run_trials_at(base: &ScenarioConfig, spec: &SweepSpec, value: f64) -> Result<Vec<TrialResult>> {
    use rayon::prelude::*;
    (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(base, spec, value, t))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_trials_at(base: &ScenarioConfig, spec: &SweepSpec, value: f64) -> Result<Vec<TrialResult>> {
    (0..spec.trials as u64).map(|t| run_trial(base, spec, value, t)).collect()
}

/// Averages every grid value over its trials. Sums run in trial order, so the
/// result does not depend on how trials were scheduled.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<GridPoint>> {
    Ok(run_sweep_trials(base, spec)?.iter().map(|t| aggregate(t)).collect())
}

pub fn aggregate(trials: &[TrialResult]) -> GridPoint {
    let n = trials.len() as f64;
    let mut sinr = 0.0;
    let mut min_rate = 0.0;
    let mut net = 0.0;
    for t in trials {
        sinr += t.sinr.iter().sum::<f64>() / t.sinr.len().max(1) as f64;
        min_rate += t.min_rate;
        net += t.net_min_rate;
    }
    let mean_sinr = sinr / n;
    GridPoint {
        value: trials.first().map_or(f64::NAN, |t| t.value),
        trials: trials.len(),
        mean_sinr,
        snr_db: linear_to_db(mean_sinr),
        min_rate: min_rate / n,
        net_min_rate: net / n,
    }
}
