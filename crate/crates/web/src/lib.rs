//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated glue
//! beyond `wasm-bindgen`'s own.

use rand::Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use irs_core::beamforming::{irs_phases_multiuser_pga, PgaOptions};
use irs_core::channel::{draw_channel_set, ChannelStatistics, H1Model};
use irs_core::evaluate::sinrs;
use irs_core::experiments::{du_table, n_table, CsiSelection, DuSweep, NSweep, Table};
use irs_core::linalg::{stream_rng, StreamPurpose};
use irs_core::scenario::{ScenarioConfig, MULTI_USER_DROP_BOX};

fn to_js<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

fn core_err(e: irs_core::error::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn table_json(t: Result<Table, irs_core::error::Error>) -> Result<String, JsError> {
    to_js(&t.map_err(core_err)?)
}

/// Single-user received SNR (dB) against the user's distance, with and
/// without the IRS, under perfect and estimated CSI.
#[wasm_bindgen]
pub fn snr_vs_distance(m_bs: usize, n_irs: usize, trials: usize, seed: u64) -> Result<String, JsError> {
    let s = DuSweep {
        base: ScenarioConfig::single_user(m_bs, n_irs, 50.0),
        trials,
        seed,
        ..DuSweep::default()
    };
    table_json(du_table(&s))
}

/// Multi-user minimum rate against the number of IRS elements.
#[wasm_bindgen]
pub fn min_rate_vs_n(m_bs: usize, k_users: usize, trials: usize, seed: u64, estimated: bool) -> Result<String, JsError> {
    let s = NSweep {
        base: ScenarioConfig::multi_user(m_bs, 4, k_users),
        m_values: vec![m_bs],
        baseline_m: Some(m_bs),
        trials,
        seed,
        csi: if estimated { CsiSelection::Estimated } else { CsiSelection::Perfect },
        ..NSweep::default()
    };
    table_json(n_table(&s))
}

#[derive(Serialize)]
struct PgaRun {
    users: Vec<[f64; 2]>,
    trace: Vec<f64>,
    phases: Vec<f64>,
    sinr_db: Vec<f64>,
}

/// One gradient-ascent run on a random multi-user drop: the min-rate trace,
/// the final IRS phases and the per-user SINRs.
#[wasm_bindgen]
pub fn pga_run(m_bs: usize, n_irs: usize, k_users: usize, seed: u64) -> Result<String, JsError> {
    let mut cfg = ScenarioConfig::multi_user(m_bs, n_irs, k_users);
    let ([x0, x1], [y0, y1]) = MULTI_USER_DROP_BOX;
    let mut place = stream_rng(seed, 0, StreamPurpose::Placement);
    cfg.user_pos = (0..k_users)
        .map(|_| [place.random_range(x0..x1), place.random_range(y0..y1)])
        .collect();
    cfg.validate().map_err(core_err)?;

    let stats = ChannelStatistics::from_config(&cfg).map_err(core_err)?;
    let mut rng = stream_rng(seed, 0, StreamPurpose::DirectChannel);
    let set = draw_channel_set(&cfg, &stats, H1Model::full_rank_default(k_users), &mut rng).map_err(core_err)?;
    let opts = PgaOptions { seed, ..PgaOptions::default() };
    let res = irs_phases_multiuser_pga(&set, cfg.total_power_w, cfg.noise_power_w, &opts).map_err(core_err)?;
    let sinr = sinrs(&set, &res.v, &res.precoder, cfg.noise_power_w).map_err(core_err)?;
    to_js(&PgaRun {
        users: cfg.user_pos.clone(),
        trace: res.trace,
        phases: res.v.phases(),
        sinr_db: sinr.iter().map(|s| 10.0 * s.log10()).collect(),
    })
}
