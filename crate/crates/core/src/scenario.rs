//! Physical configuration: geometry, link budget, path loss and training timing.
//!
//! Everything inside the simulator is in linear power units. dB and dBm
//! appear only in configuration fields and report columns.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2-D coordinates in meters.
pub type Point = [f64; 2];

/// Log-distance path loss `10^(-C/10) / d^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Fixed loss at d = 1 m, in dB.
    pub c_db: f64,
    /// Path-loss exponent.
    pub alpha: f64,
}

impl PathLossParams {
    /// 3GPP UMi line-of-sight parameters at 2.5 GHz, used for the BS-IRS link.
    pub const UMI_LOS: Self = Self {
        c_db: 26.0,
        alpha: 2.2,
    };
    /// 3GPP UMi non-line-of-sight parameters at 2.5 GHz, used for user links.
    pub const UMI_NLOS: Self = Self {
        c_db: 28.0,
        alpha: 3.67,
    };
}

pub fn path_loss_linear(d: f64, p: PathLossParams) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    if !(p.alpha > 0.0) {
        return Err(Error::Domain(format!(
            "path-loss exponent must be positive, got {}",
            p.alpha
        )));
    }
    Ok(db_to_linear(-p.c_db) * d.powf(-p.alpha))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    BsIrs,
    IrsUser(usize),
    BsUser(usize),
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// All physical and protocol parameters of one simulated deployment.
///
/// Missing JSON fields fall back to the single-user defaults; unknown
/// fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m_bs: usize,
    pub n_irs: usize,
    pub k_users: usize,
    pub carrier_freq_hz: f64,
    pub total_power_w: f64,
    pub pilot_power_w: f64,
    pub noise_power_w: f64,
    pub coherence_s: f64,
    pub training_s: f64,
    pub bs_pos: Point,
    pub irs_pos: Point,
    pub user_pos: Vec<Point>,
    pub bs_gain_dbi: f64,
    pub irs_gain_dbi: f64,
    pub pen_bs_user_db: f64,
    pub pen_irs_user_db: f64,
    /// Exponential correlation coefficient across BS antennas.
    pub rho_bs: f64,
    /// Exponential correlation coefficient across IRS elements.
    pub rho_irs: f64,
    /// Reference duration that converts pilot energy `p_c * tau_s` into an
    /// effective observation SNR (see [`ScenarioConfig::training_noise_var`]).
    pub pilot_ref_s: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let coherence_s = 0.01;
        Self {
            m_bs: 4,
            n_irs: 35,
            k_users: 1,
            carrier_freq_hz: 2.5e9,
            total_power_w: 5.0,
            pilot_power_w: 1.0,
            noise_power_w: dbm_to_watt(-80.0),
            coherence_s,
            training_s: 0.01 * coherence_s,
            bs_pos: [0.0, 0.0],
            irs_pos: SINGLE_USER_IRS_POS,
            user_pos: vec![[50.0, 0.0]],
            bs_gain_dbi: 5.0,
            irs_gain_dbi: 5.0,
            pen_bs_user_db: 20.0,
            pen_irs_user_db: 10.0,
            rho_bs: 0.5,
            rho_irs: 0.7,
            pilot_ref_s: DEFAULT_PILOT_REF_S,
        }
    }
}

pub const SINGLE_USER_IRS_POS: Point = [50.0, 10.0];
pub const MULTI_USER_IRS_POS: Point = [0.0, 100.0];
/// Users are dropped uniformly in `[-30, 30] x [70, 130]` for multi-user runs.
pub const MULTI_USER_DROP_BOX: ([f64; 2], [f64; 2]) = ([-30.0, 30.0], [70.0, 130.0]);
pub const DEFAULT_PILOT_REF_S: f64 = 1e-10;

impl ScenarioConfig {
    /// Single-user geometry: BS at the origin, IRS at (50, 10), user at (d_u, 0).
    pub fn single_user(m_bs: usize, n_irs: usize, du: f64) -> Self {
        Self {
            m_bs,
            n_irs,
            k_users: 1,
            user_pos: vec![[du, 0.0]],
            ..Self::default()
        }
    }

    /// Multi-user geometry with the IRS at (0, 100). User positions start at
    /// the centre of the drop box; sweeps re-drop them per trial.
    pub fn multi_user(m_bs: usize, n_irs: usize, k_users: usize) -> Self {
        Self {
            m_bs,
            n_irs,
            k_users,
            irs_pos: MULTI_USER_IRS_POS,
            user_pos: vec![[0.0, 100.0]; k_users],
            ..Self::default()
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_bs == 0 || self.n_irs == 0 || self.k_users == 0 {
            return Err(Error::Config("m_bs, n_irs and k_users must all be >= 1".into()));
        }
        if self.user_pos.len() != self.k_users {
            return Err(Error::Config(format!(
                "user_pos has {} entries but k_users = {}",
                self.user_pos.len(),
                self.k_users
            )));
        }
        let positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("total_power_w", self.total_power_w),
            ("pilot_power_w", self.pilot_power_w),
            ("noise_power_w", self.noise_power_w),
            ("coherence_s", self.coherence_s),
            ("training_s", self.training_s),
            ("pilot_ref_s", self.pilot_ref_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.training_s >= self.coherence_s {
            return Err(Error::Config(format!(
                "training_s ({}) must be shorter than coherence_s ({})",
                self.training_s, self.coherence_s
            )));
        }
        for (name, rho) in [("rho_bs", self.rho_bs), ("rho_irs", self.rho_irs)] {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {rho}")));
            }
        }
        let coords = [self.bs_pos, self.irs_pos]
            .into_iter()
            .chain(self.user_pos.iter().copied());
        for p in coords {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Config("positions must be finite".into()));
            }
        }
        Ok(())
    }

    /// Duration of one training sub-phase when the window is split `subphases` ways.
    pub fn sub_phase_s(&self, subphases: usize) -> f64 {
        self.training_s / subphases as f64
    }

    /// Sub-phase duration of the full on/off protocol (N + 1 sub-phases).
    pub fn irs_sub_phase_s(&self) -> f64 {
        self.sub_phase_s(self.n_irs + 1)
    }

    /// Per-entry noise variance of a pilot-matched training observation.
    ///
    /// The pilot energy collected in one sub-phase is `p_c * tau_s`;
    /// normalising by `pilot_ref_s` gives `sigma^2 * pilot_ref_s / (p_c * tau_s)`.
    pub fn training_noise_var(&self, subphases: usize) -> f64 {
        self.noise_power_w * self.pilot_ref_s / (self.pilot_power_w * self.sub_phase_s(subphases))
    }

    /// Fraction of the coherence block left for data, `1 - tau_c / tau`.
    pub fn data_fraction(&self) -> f64 {
        (1.0 - self.training_s / self.coherence_s).max(0.0)
    }

    pub fn link_distance(&self, link: Link) -> Result<f64> {
        let user = |k: usize| {
            self.user_pos
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("user index {k} out of range")))
        };
        Ok(match link {
            Link::BsIrs => distance(self.bs_pos, self.irs_pos),
            Link::IrsUser(k) => distance(self.irs_pos, user(k)?),
            Link::BsUser(k) => distance(self.bs_pos, user(k)?),
        })
    }
}

/// Linear power gain of one link: path loss, antenna gains at the BS/IRS
/// ends, and penetration loss on the user links.
pub fn link_gain(link: Link, cfg: &ScenarioConfig) -> Result<f64> {
    let d = cfg.link_distance(link)?;
    if d == 0.0 {
        return Err(Error::Domain(format!("{link:?} endpoints coincide")));
    }
    let (params, gain_db) = match link {
        Link::BsIrs => (PathLossParams::UMI_LOS, cfg.bs_gain_dbi + cfg.irs_gain_dbi),
        Link::IrsUser(_) => (PathLossParams::UMI_NLOS, cfg.irs_gain_dbi - cfg.pen_irs_user_db),
        Link::BsUser(_) => (PathLossParams::UMI_NLOS, cfg.bs_gain_dbi - cfg.pen_bs_user_db),
    };
    Ok(path_loss_linear(d, params)? * db_to_linear(gain_db))
}
