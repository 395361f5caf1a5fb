//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use irs_core::beamforming::{
    irs_phases_multiuser_pga, irs_phases_single_user, maxmin_precoder, IrsPhaseVector, PgaOptions, PrecoderSolution,
    SoftMinObjective,
};
use irs_core::channel::{draw_channel_set, los_angles, rank_one_h1, steering_vector, ChannelSet, ChannelStatistics, H1Model};
use irs_core::estimation::{estimate_all, observe};
use irs_core::evaluate::{run_sweep, SweepSpec, SweepVariable};
use irs_core::experiments::{
    du_table, n_table, tauc_table, CsiSelection, DuSweep, NSweep, TauCSweep, Table, TAU_C_GRID,
};
use irs_core::linalg::{complex_gaussian, complex_gaussian_vec, CMat, CVec, C64};
use irs_core::scenario::ScenarioConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() <= limit_s {
        Ok(())
    } else {
        Err(format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64()))
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Criterion 1: Doubling N from 35 to 70 at the near-IRS position gains 6 ± 1.5 dB.
fn n_squared_gain() -> Outcome {
    let start = Instant::now();
    let cfg = ScenarioConfig::single_user(4, 35, 50.0);
    let spec = SweepSpec::new(SweepVariable::NIrs, vec![35.0, 70.0], 500, 101);
    let pts = run_sweep(&cfg, &spec).map_err(|e| e.to_string())?;
    within(start.elapsed(), 60.0)?;
    let gain = pts[1].snr_db - pts[0].snr_db;
    check(
        (gain - 6.0).abs() <= 1.5,
        format!("mean SNR {:.2} -> {:.2} dB, gain {gain:.2} dB over 500 trials", pts[0].snr_db, pts[1].snr_db),
    )
}

/// Optimum of `||H0 v||²` for rank-one `H0 = a b^H diag(h2)`: `||a||² (Σ |b_n h2_n|)²`.
fn rank_one_reflect_optimum(a: &CVec, b: &CVec, h2: &CVec) -> f64 {
    a.norm_squared() * b.iter().zip(h2.iter()).map(|(x, y)| (x.conj() * y).norm()).sum::<f64>().powi(2)
}

/// Criterion 2: IRS-only link with aligned phases: 20 log10(2) dB per doubling of N.
fn quadratic_law() -> Outcome {
    let start = Instant::now();
    let trials = 300;
    let mut mean_db = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let cfg = ScenarioConfig::single_user(4, n, 50.0);
        let stats = ChannelStatistics::from_config(&cfg).map_err(|e| e.to_string())?;
        let (aod, aoa) = los_angles(&cfg);
        let a = steering_vector(cfg.m_bs, aod);
        let b = steering_vector(n, aoa);
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let mut acc = 0.0;
        for _ in 0..trials {
            let set = draw_channel_set(&cfg, &stats, H1Model::RankOne, &mut rng).map_err(|e| e.to_string())?;
            let v = irs_core::beamforming::irs_phases_reflect_only(&set.h0[0]).map_err(|e| e.to_string())?;
            let achieved = (&set.h0[0] * v.as_vector()).norm_squared();
            let oracle = rank_one_reflect_optimum(&a, &b, &set.h2[0]) * stats.beta_1;
            if (achieved - oracle).abs() > 1e-9 * oracle {
                return Err(format!("N={n}: aligned power {achieved:e} differs from rank-one optimum {oracle:e}"));
            }
            acc += cfg.total_power_w * achieved / cfg.noise_power_w;
        }
        mean_db.push(db(acc / trials as f64));
    }
    within(start.elapsed(), 30.0)?;
    let gains: Vec<f64> = mean_db.windows(2).map(|w| w[1] - w[0]).collect();
    let ideal = 20.0 * 2f64.log10();
    check(
        gains.iter().all(|g| (g - ideal).abs() <= 0.5),
        format!("gains for N=8->16->32->64: {:.3?} dB (ideal {ideal:.2})", gains),
    )
}

/// Criterion 3: IRS beats no IRS for d_u > 30 and is within 1 dB of it for d_u <= 20.
fn crossover() -> Outcome {
    let table = du_table(&DuSweep {
        trials: 200,
        seed: 303,
        csi: CsiSelection::Perfect,
        ..DuSweep::default()
    })
    .map_err(|e| e.to_string())?;
    let du = table.column("du_m").unwrap();
    let irs = table.column("snr_db_irs_perfect").unwrap();
    let direct = table.column("snr_db_noirs_perfect").unwrap();
    let mut far_margin = f64::INFINITY;
    let mut near_gap: f64 = 0.0;
    for i in 0..du.len() {
        let diff = irs[i] - direct[i];
        if du[i] > 30.0 {
            far_margin = far_margin.min(diff);
        }
        if du[i] <= 20.0 {
            near_gap = near_gap.max(diff.abs());
        }
    }
    check(
        far_margin > 0.0 && near_gap <= 1.0,
        format!(
            "smallest IRS gain for d_u > 30: {far_margin:.2} dB; largest gap for d_u <= 20: {near_gap:.2} dB \
             (model geometry; absolute values are not those of any published curve)"
        ),
    )
}

fn argmax(x: &[f64]) -> usize {
    (0..x.len()).fold(0, |best, i| if x[i] > x[best] { i } else { best })
}

/// Criterion 4: Net rate against training time: ~0 at both ends, interior peak, and
/// the IRS peaks at no shorter a training time than the system without IRS.
fn unimodality() -> Outcome {
    let start = Instant::now();
    let table = tauc_table(&TauCSweep {
        trials: 200,
        seed: 404,
        ..TauCSweep::default()
    })
    .map_err(|e| e.to_string())?;
    within(start.elapsed(), 600.0)?;
    let last = TAU_C_GRID.len() - 1;
    let mut notes = Vec::new();
    let mut ok = true;
    let mut irs_peaks = Vec::new();
    let mut base_peak = None;
    for name in &table.header[1..] {
        let y = table.column(name).unwrap();
        let k = argmax(&y);
        let peak = y[k];
        // "~0" is read as at most 5% of the curve's peak.
        let ends_small = y[0] <= 0.05 * peak && y[last] <= 0.05 * peak;
        let interior = k > 0 && k < last;
        ok &= ends_small && interior && peak > 0.0;
        notes.push(format!("{name}: peak {peak:.3} at {:e} s, ends {:.4}/{:.4}", TAU_C_GRID[k], y[0], y[last]));
        if name.contains("noirs") {
            base_peak = Some(TAU_C_GRID[k]);
        } else {
            irs_peaks.push(TAU_C_GRID[k]);
        }
    }
    let base = base_peak.ok_or("no baseline column")?;
    ok &= irs_peaks.iter().all(|&t| t >= base);
    check(ok, format!("{}; {:.0} s", notes.join("; "), start.elapsed().as_secs_f64()))
}

/// Criterion 5: Minimum rate strictly increasing in N for every IRS curve; the
/// baseline without IRS varies by less than 2%.
fn monotone_in_n() -> Outcome {
    let table = n_table(&NSweep {
        trials: 100,
        seed: 505,
        ..NSweep::default()
    })
    .map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut notes = Vec::new();
    for name in &table.header[1..] {
        let y = table.column(name).unwrap();
        if name.contains("noirs") {
            let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let spread = (hi - lo) / mean;
            ok &= spread < 0.02;
            notes.push(format!("{name}: spread {:.2}%", 100.0 * spread));
        } else {
            let increasing = y.windows(2).all(|w| w[1] > w[0]);
            ok &= increasing;
            notes.push(format!("{name}: {:.3?}{}", y, if increasing { "" } else { " NOT increasing" }));
        }
    }
    check(ok, notes.join("; "))
}

/// Criterion 6: Exhaustive 64-level search over every element phase never beats the
/// closed form by more than the grid-resolution bound.
fn closed_form_optimality() -> Outcome {
    const LEVELS: usize = 64;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let p_t = 5.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_gap_ratio: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=4);
        let n = rng.random_range(1..=3);
        let a = steering_vector(m, rng.random_range(-PI / 2.0..PI / 2.0));
        let b = steering_vector(n, rng.random_range(-PI / 2.0..PI / 2.0));
        let h2 = complex_gaussian_vec(n, &mut rng);
        let hd = complex_gaussian_vec(m, &mut rng);
        let h0 = CMat::from_fn(m, n, |i, j| a[i] * b[j].conj() * h2[j]);

        let v = irs_phases_single_user(&h0, &hd).map_err(|e| e.to_string())?;
        let closed = p_t * (&hd + &h0 * v.as_vector()).norm_squared();

        let mut best: f64 = 0.0;
        for idx in 0..LEVELS.pow(n as u32) {
            let mut h = hd.clone();
            let mut rest = idx;
            for col in 0..n {
                let phase = 2.0 * PI * (rest % LEVELS) as f64 / LEVELS as f64;
                rest /= LEVELS;
                h += h0.column(col) * C64::from_polar(1.0, phase);
            }
            best = best.max(p_t * h.norm_squared());
        }
        let bound = 2.0 * closed * (1.0 - (PI / LEVELS as f64).cos());
        worst_excess = worst_excess.max((best - closed) / closed);
        worst_gap_ratio = worst_gap_ratio.max((closed - best) / bound);
    }
    within(start.elapsed(), 60.0)?;
    check(
        worst_excess <= 1e-12 && worst_gap_ratio <= 1.0,
        format!(
            "worst grid excess {worst_excess:.2e} (relative), worst closed-form lead {:.2} of the resolution bound",
            worst_gap_ratio
        ),
    )
}

/// Criterion 7: Empirical MSE matches the analytic error covariance within 5% and the
/// error is orthogonal to the estimate, for both estimators.
fn estimation_consistency() -> Outcome {
    let cfg = ScenarioConfig::single_user(4, 8, 50.0);
    let stats = ChannelStatistics::from_config(&cfg).map_err(|e| e.to_string())?;
    let (aod, aoa) = los_angles(&cfg);
    let h1 = rank_one_h1(&cfg, aod, aoa).map_err(|e| e.to_string())?;
    let n = cfg.n_irs;
    let direct_power = stats.beta_d[0];
    let cascade_power = h1.column(0).norm_squared() * stats.irs_entry_var(0, 0) / cfg.m_bs as f64;
    let reference = direct_power.min(cascade_power);
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let trials = 10_000;
    let mut ok = true;
    let mut notes = Vec::new();
    for level in [0.01, 0.1, 1.0] {
        let s = level * reference;
        let mut mse = [0.0; 2];
        let mut analytic = [0.0; 2];
        let mut cross = [CMat::zeros(4, 4), CMat::zeros(4, 4)];
        let mut est_cov = [CMat::zeros(4, 4), CMat::zeros(4, 4)];
        for _ in 0..trials {
            let hd = vec![stats.sample_direct(0, &mut rng)];
            let h2 = vec![stats.sample_irs_user(0, &mut rng)];
            let truth = ChannelSet::from_parts(h1.clone(), h2, hd).map_err(|e| e.to_string())?;
            let obs = observe(&truth, s, &mut rng);
            let est = estimate_all(&obs, &stats, &h1).map_err(|e| e.to_string())?;
            let e = &truth.hd[0] - &est.hd_hat[0];
            mse[0] += e.norm_squared();
            cross[0] += &est.hd_hat[0] * e.adjoint();
            est_cov[0] += &est.hd_hat[0] * est.hd_hat[0].adjoint();
            analytic[0] = est.err_cov_d[0].trace().re;
            analytic[1] = 0.0;
            for col in 0..n {
                let hat = &est.h0_hat[0][col];
                let e = truth.h0[0].column(col) - hat;
                mse[1] += e.norm_squared();
                cross[1] += hat * e.adjoint();
                est_cov[1] += hat * hat.adjoint();
                analytic[1] += est.err_cov_0[0][col].trace().re;
            }
        }
        for (i, name) in ["direct", "cascaded"].iter().enumerate() {
            let empirical = mse[i] / trials as f64;
            let gap = (empirical - analytic[i]).abs() / analytic[i];
            let orth = cross[i].norm() / est_cov[i].norm();
            ok &= gap <= 0.05 && orth < 0.05;
            notes.push(format!("{name}@{level}: MSE gap {:.2}%, orthogonality {:.2}%", 100.0 * gap, 100.0 * orth));
        }
    }
    check(ok, notes.join("; "))
}

fn downlink_sinrs(h: &[CVec], sol: &PrecoderSolution, sigma2: f64) -> Vec<f64> {
    (0..h.len())
        .map(|k| {
            let rx: Vec<f64> = (0..h.len()).map(|j| sol.p[j] * h[k].dotc(&sol.g[j]).norm_sqr()).collect();
            rx[k] / (rx.iter().sum::<f64>() - rx[k] + sigma2)
        })
        .collect()
}

fn random_multiuser(m: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> ChannelSet {
    let h1 = CMat::from_fn(m, n, |_, _| complex_gaussian(rng));
    let h2 = (0..k).map(|_| complex_gaussian_vec(n, rng) * C64::from(0.3)).collect();
    let hd = (0..k).map(|_| complex_gaussian_vec(m, rng)).collect();
    ChannelSet::from_parts(h1, h2, hd).unwrap()
}

/// Criterion 8: Optimizer contracts.
fn optimizer_contracts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut notes = Vec::new();
    let mut ok = true;

    let mut spread: f64 = 0.0;
    for _ in 0..50 {
        let h: Vec<CVec> = (0..4).map(|_| complex_gaussian_vec(8, &mut rng)).collect();
        let sol = maxmin_precoder(&h, 1.0, 0.1).map_err(|e| e.to_string())?;
        let s = downlink_sinrs(&h, &sol, 0.1);
        let hi = s.iter().copied().fold(f64::MIN, f64::max);
        let lo = s.iter().copied().fold(f64::MAX, f64::min);
        spread = spread.max((hi - lo) / lo);
    }
    ok &= spread <= 1e-3;
    notes.push(format!("max-min SINR spread {spread:.1e}"));

    let mut monotone = true;
    for _ in 0..10 {
        let set = random_multiuser(4, 16, 4, &mut rng);
        let res = irs_phases_multiuser_pga(&set, 1.0, 0.1, &PgaOptions::default()).map_err(|e| e.to_string())?;
        monotone &= res.trace.windows(2).all(|w| w[1] >= w[0]);
        let h: Vec<CVec> = (0..4).map(|k| &set.hd[k] + &set.h0[k] * res.v.as_vector()).collect();
        let achieved = downlink_sinrs(&h, &res.precoder, 0.1).into_iter().fold(f64::MAX, f64::min);
        monotone &= ((1.0 + achieved).log2() - res.min_rate()).abs() <= 1e-6 * res.min_rate();
    }
    ok &= monotone;
    notes.push(format!("PGA traces monotone: {monotone}"));

    let mut worst_k1: f64 = 0.0;
    for _ in 0..10 {
        let a = steering_vector(4, rng.random_range(-1.0..1.0));
        let b = steering_vector(16, rng.random_range(-1.0..1.0));
        let h1 = &a * b.adjoint();
        let set = ChannelSet::from_parts(h1, vec![complex_gaussian_vec(16, &mut rng) * C64::from(0.3)], vec![
            complex_gaussian_vec(4, &mut rng),
        ])
        .unwrap();
        let v = irs_phases_single_user(&set.h0[0], &set.hd[0]).map_err(|e| e.to_string())?;
        let closed = (1.0 + (&set.hd[0] + &set.h0[0] * v.as_vector()).norm_squared() / 0.1).log2();
        let pga = irs_phases_multiuser_pga(&set, 1.0, 0.1, &PgaOptions::default()).map_err(|e| e.to_string())?;
        worst_k1 = worst_k1.max((closed - pga.min_rate()) / closed);
    }
    ok &= worst_k1 <= 0.005;
    notes.push(format!("K=1 PGA shortfall vs closed form {:.3}%", 100.0 * worst_k1));

    let mut worst_grad: f64 = 0.0;
    for _ in 0..10 {
        let set = random_multiuser(3, 6, 3, &mut rng);
        let v = IrsPhaseVector::random(6, &mut rng);
        let g: Vec<CVec> = (0..3).map(|_| complex_gaussian_vec(3, &mut rng).normalize()).collect();
        let p = (0..3).map(|_| rng.random_range(0.2..1.0)).collect();
        let obj = SoftMinObjective::new(&set, &PrecoderSolution { g, p }, 0.2, 0.1);
        let analytic = obj.gradient(v.as_vector());
        let h = 1e-6;
        let numeric = CVec::from_fn(6, |i, _| {
            let part = |dir: C64| {
                let mut e = CVec::zeros(6);
                e[i] = dir * h;
                (obj.value(&(v.as_vector() + &e)) - obj.value(&(v.as_vector() - &e))) / (2.0 * h)
            };
            C64::new(part(C64::from(1.0)), part(C64::new(0.0, 1.0)))
        });
        worst_grad = worst_grad.max((&analytic - &numeric).norm() / numeric.norm());
    }
    ok &= worst_grad <= 1e-5;
    notes.push(format!("gradient vs central differences {worst_grad:.1e}"));
    check(ok, notes.join("; "))
}

/// Criterion 9: Same seed, same bytes.
fn determinism() -> Outcome {
    let run = |seed: u64| -> Result<[String; 3], String> {
        let du = du_table(&DuSweep {
            grid: vec![10.0, 50.0, 90.0],
            trials: 4,
            seed,
            ..DuSweep::default()
        });
        let tau = tauc_table(&TauCSweep {
            base: ScenarioConfig::multi_user(4, 8, 3),
            grid: vec![1e-6, 1e-4, 1e-2],
            pairs: vec![(4, 8)],
            baseline_m: Some(6),
            trials: 3,
            seed,
            ..TauCSweep::default()
        });
        let n = n_table(&NSweep {
            base: ScenarioConfig::multi_user(4, 4, 3),
            grid: vec![2, 4],
            m_values: vec![4],
            baseline_m: Some(6),
            trials: 3,
            seed,
            ..NSweep::default()
        });
        let csv = |t: irs_core::Result<Table>| t.map(|t| t.to_csv()).map_err(|e| e.to_string());
        Ok([csv(du)?, csv(tau)?, csv(n)?])
    };
    let a = run(909)?;
    let b = run(909)?;
    let c = run(910)?;
    check(
        a == b && a != c,
        format!("three sweeps re-run with seed 909: identical = {}; seed 910 differs = {}", a == b, a != c),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 N-squared SNR scaling", n_squared_gain),
        ("2 IRS-only quadratic law", quadratic_law),
        ("3 crossover with distance", crossover),
        ("4 unimodal net rate vs training time", unimodality),
        ("5 monotone N benefit, flat baseline", monotone_in_n),
        ("6 closed-form phase optimality", closed_form_optimality),
        ("7 estimation consistency", estimation_consistency),
        ("8 optimizer contracts", optimizer_contracts),
        ("9 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1} s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
