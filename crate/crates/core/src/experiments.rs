//! The three standard sweeps as CSV-ready tables.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::{run_sweep, CsiMode, SweepSpec, SweepVariable, SystemKind, UserPlacement};
use crate::scenario::ScenarioConfig;

/// Which CSI assumptions to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiSelection {
    Perfect,
    Estimated,
    Both,
}

impl CsiSelection {
    pub fn modes(self) -> Vec<CsiMode> {
        match self {
            CsiSelection::Perfect => vec![CsiMode::Perfect],
            CsiSelection::Estimated => vec![CsiMode::Estimated],
            CsiSelection::Both => vec![CsiMode::Perfect, CsiMode::Estimated],
        }
    }
}

fn csi_tag(csi: CsiMode) -> &'static str {
    match csi {
        CsiMode::Perfect => "perfect",
        CsiMode::Estimated => "estimated",
    }
}

/// Numeric table with a named first column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(first: &str, grid: &[f64]) -> Self {
        Self {
            header: vec![first.to_string()],
            rows: grid.iter().map(|&x| vec![x]).collect(),
        }
    }

    fn push_column(&mut self, name: String, values: impl IntoIterator<Item = f64>) {
        self.header.push(name);
        for (row, v) in self.rows.iter_mut().zip(values) {
            row.push(v);
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Header row, then one row per grid value. Numbers use the shortest
    /// representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Received SNR against the user's x-coordinate, single user.
#[derive(Debug, Clone)]
pub struct DuSweep {
    pub base: ScenarioConfig,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub csi: CsiSelection,
    /// Add perfect-CSI columns for an IRS with twice as many elements.
    pub doubled_n: bool,
}

impl Default for DuSweep {
    fn default() -> Self {
        Self {
            base: ScenarioConfig::default(),
            grid: (1..=24).map(|i| 5.0 * i as f64).collect(),
            trials: 200,
            seed: 0,
            csi: CsiSelection::Both,
            doubled_n: false,
        }
    }
}

pub fn du_table(s: &DuSweep) -> Result<Table> {
    let mut base = s.base.clone();
    base.k_users = 1;
    base.user_pos = vec![[s.grid.first().copied().unwrap_or(50.0), 0.0]];
    let mut table = Table::new("du_m", &s.grid);
    for (system, tag) in [(SystemKind::Irs, "irs"), (SystemKind::NoIrs, "noirs")] {
        for csi in s.csi.modes() {
            let mut spec = SweepSpec::new(SweepVariable::Du, s.grid.clone(), s.trials, s.seed);
            spec.csi = csi;
            spec.system = system;
            let pts = run_sweep(&base, &spec)?;
            table.push_column(format!("snr_db_{tag}_{}", csi_tag(csi)), pts.iter().map(|p| p.snr_db));
        }
    }
    if s.doubled_n {
        let doubled = ScenarioConfig { n_irs: 2 * base.n_irs, ..base.clone() };
        let spec = SweepSpec::new(SweepVariable::Du, s.grid.clone(), s.trials, s.seed);
        let pts = run_sweep(&doubled, &spec)?;
        table.push_column(format!("snr_db_irs_n{}_perfect", doubled.n_irs), pts.iter().map(|p| p.snr_db));
    }
    Ok(table)
}

/// Training durations on which the net rate is tabulated by default, seconds.
pub const TAU_C_GRID: [f64; 16] = [
    1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 5e-7, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 6e-3, 1e-2,
];

/// Net minimum rate against training duration, multi-user.
#[derive(Debug, Clone)]
pub struct TauCSweep {
    pub base: ScenarioConfig,
    pub grid: Vec<f64>,
    /// IRS configurations as `(M, N)`.
    pub pairs: Vec<(usize, usize)>,
    /// BS antennas of the system without an IRS, if any.
    pub baseline_m: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub csi: CsiSelection,
}

impl Default for TauCSweep {
    fn default() -> Self {
        Self {
            base: ScenarioConfig::multi_user(12, 54, 8),
            grid: TAU_C_GRID.to_vec(),
            pairs: vec![(12, 54), (15, 23)],
            baseline_m: Some(20),
            trials: 200,
            seed: 0,
            csi: CsiSelection::Estimated,
        }
    }
}

pub fn tauc_table(s: &TauCSweep) -> Result<Table> {
    let mut table = Table::new("tau_c_s", &s.grid);
    let mut configs: Vec<(String, ScenarioConfig, SystemKind)> = s
        .pairs
        .iter()
        .map(|&(m, n)| {
            (format!("m{m}_n{n}"), ScenarioConfig { m_bs: m, n_irs: n, ..s.base.clone() }, SystemKind::Irs)
        })
        .collect();
    if let Some(m) = s.baseline_m {
        configs.push((format!("noirs_m{m}"), ScenarioConfig { m_bs: m, ..s.base.clone() }, SystemKind::NoIrs));
    }
    for (name, cfg, system) in configs {
        for csi in s.csi.modes() {
            let spec = multi_user_spec(SweepVariable::TauC, &s.grid, s.trials, s.seed, csi, system);
            let pts = run_sweep(&cfg, &spec)?;
            table.push_column(format!("net_min_rate_{name}_{}", csi_tag(csi)), pts.iter().map(|p| p.net_min_rate));
        }
    }
    Ok(table)
}

/// Gross minimum rate against IRS size, multi-user.
#[derive(Debug, Clone)]
pub struct NSweep {
    pub base: ScenarioConfig,
    pub grid: Vec<usize>,
    pub m_values: Vec<usize>,
    pub baseline_m: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub csi: CsiSelection,
}

impl Default for NSweep {
    fn default() -> Self {
        Self {
            base: ScenarioConfig::multi_user(12, 4, 8),
            grid: vec![4, 8, 16, 32, 64],
            m_values: vec![12, 15, 20],
            baseline_m: Some(20),
            trials: 200,
            seed: 0,
            csi: CsiSelection::Both,
        }
    }
}

pub fn n_table(s: &NSweep) -> Result<Table> {
    let grid: Vec<f64> = s.grid.iter().map(|&n| n as f64).collect();
    let mut table = Table::new("n_irs", &grid);
    let mut configs: Vec<(String, usize, SystemKind)> =
        s.m_values.iter().map(|&m| (format!("m{m}"), m, SystemKind::Irs)).collect();
    if let Some(m) = s.baseline_m {
        configs.push((format!("noirs_m{m}"), m, SystemKind::NoIrs));
    }
    for (name, m, system) in configs {
        let cfg = ScenarioConfig { m_bs: m, ..s.base.clone() };
        for csi in s.csi.modes() {
            let spec = multi_user_spec(SweepVariable::NIrs, &grid, s.trials, s.seed, csi, system);
            let pts = run_sweep(&cfg, &spec)?;
            table.push_column(format!("min_rate_{name}_{}", csi_tag(csi)), pts.iter().map(|p| p.min_rate));
        }
    }
    Ok(table)
}

fn multi_user_spec(
    variable: SweepVariable,
    grid: &[f64],
    trials: usize,
    seed: u64,
    csi: CsiMode,
    system: SystemKind,
) -> SweepSpec {
    let mut spec = SweepSpec::new(variable, grid.to_vec(), trials, seed);
    spec.csi = csi;
    spec.system = system;
    spec.placement = UserPlacement::multi_user_default();
    spec
}

/// Checks that a configuration is usable as the base of a multi-user sweep.
pub fn require_multi_user(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.k_users < 2 {
        return Err(Error::Config(format!("multi-user sweeps need at least 2 users, got {}", cfg.k_users)));
    }
    Ok(())
}
