//! Self-checks run by `irs-sim validate`.
//!
//! Each suite produces rows of `(metric, value, threshold, pass)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beamforming::{
    irs_phases_single_user, maxmin_precoder_warm, IrsPhaseVector, MaxMinOptions, PrecoderSolution, SoftMinObjective,
};
use crate::channel::{exp_correlation, sample_correlated_rayleigh, steering_vector, ChannelSet};
use crate::error::Result;
use crate::evaluate::{run_sweep, SweepSpec, SweepVariable};
use crate::estimation::{lmmse_cascaded, lmmse_direct};
use crate::linalg::{complex_gaussian, complex_gaussian_vec, CMat, CVec, C64};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(suite: &'static str, metric: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            suite,
            metric: metric.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_suites(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.suite).collect();
        out.dedup();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,metric,value,threshold,pass\n");
        for c in &self.checks {
            s.push_str(&format!("{},{},{:e},{:e},{}\n", c.suite, c.metric, c.value, c.threshold, c.pass));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Monte Carlo trials per noise level in the estimation suite.
    pub mmse_trials: usize,
    /// Multiplies the three estimation noise levels `{0.01, 0.1, 1}` (prior variance 1); 0 gives noiseless training.
    pub noise_scale: f64,
    /// Multiplies the analytic gradient before it is compared; 1 means no fault.
    pub gradient_fault: f64,
    pub brute_force_instances: usize,
    pub scaling_trials: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            mmse_trials: 10_000,
            noise_scale: 1.0,
            gradient_fault: 1.0,
            brute_force_instances: 100,
            scaling_trials: 200,
        }
    }
}

pub fn run_all(opts: &ValidationOptions) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    report.checks.extend(mmse_suite(opts)?);
    report.checks.extend(gradient_suite(opts)?);
    report.checks.extend(phase_optimality_suite(opts)?);
    report.checks.extend(scaling_suite(opts)?);
    report.checks.extend(precoder_suite(opts)?);
    Ok(report)
}

/// Relative mismatch; absolute when the analytic value is zero.
fn rel_gap(empirical: f64, analytic: f64) -> f64 {
    if analytic == 0.0 {
        empirical.abs()
    } else {
        (empirical - analytic).abs() / analytic.abs()
    }
}

#[derive(Default)]
struct Moments {
    mse: f64,
    cross: Option<CMat>,
    est_cov: Option<CMat>,
}

impl Moments {
    fn add(&mut self, h: &CVec, est: &CVec) {
        let err = h - est;
        self.mse += err.norm_squared();
        let c = est * err.adjoint();
        let e = est * est.adjoint();
        match (&mut self.cross, &mut self.est_cov) {
            (Some(x), Some(y)) => {
                *x += c;
                *y += e;
            }
            _ => {
                self.cross = Some(c);
                self.est_cov = Some(e);
            }
        }
    }

    /// `‖E[ĥ e^H]‖_F / ‖E[ĥ ĥ^H]‖_F`.
    fn orthogonality(&self) -> f64 {
        let (Some(x), Some(y)) = (&self.cross, &self.est_cov) else { return 0.0 };
        if y.norm() == 0.0 {
            0.0
        } else {
            x.norm() / y.norm()
        }
    }
}

/// Empirical MSE against the analytic error-covariance trace, and the
/// orthogonality residual, for both estimators at three noise levels.
pub fn mmse_suite(opts: &ValidationOptions) -> Result<Vec<Check>> {
    const SUITE: &str = "mmse";
    let m = 4;
    let prior = exp_correlation(m, 0.5)?;
    let h1_col = steering_vector(m, 0.4);
    let var_n: f64 = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    for (i, level) in [0.01, 0.1, 1.0].into_iter().enumerate() {
        let s = level * opts.noise_scale;
        let mut direct = Moments::default();
        let mut casc = Moments::default();
        let mut direct_trace = 0.0;
        let mut casc_trace = 0.0;
        for _ in 0..opts.mmse_trials {
            let hd = sample_correlated_rayleigh(&prior, 1.0, &mut rng)?;
            let h0 = &h1_col * (complex_gaussian(&mut rng) * var_n.sqrt());
            let noise = |rng: &mut ChaCha8Rng| complex_gaussian_vec(m, rng) * C64::from(s.sqrt());
            let r0 = &hd + noise(&mut rng);
            let rt = &hd + &h0 + noise(&mut rng);
            let (d_est, d_err) = lmmse_direct(&r0, &prior, s)?;
            let (c_est, c_err, _) = lmmse_cascaded(&rt, &r0, &h1_col, var_n, s)?;
            direct.add(&hd, &d_est);
            casc.add(&h0, &c_est);
            direct_trace = d_err.trace().re;
            casc_trace = c_err.trace().re;
        }
        let n = opts.mmse_trials as f64;
        for (name, mom, trace) in [("direct", &direct, direct_trace), ("cascaded", &casc, casc_trace)] {
            let emp = mom.mse / n;
            checks.push(Check::at_most(
                SUITE,
                format!("{name}_level{i}_mse_rel_gap(empirical={emp:e};analytic={trace:e})"),
                rel_gap(emp, trace),
                0.05,
            ));
            checks.push(Check::at_most(SUITE, format!("{name}_level{i}_orthogonality"), mom.orthogonality(), 0.05));
        }
    }
    Ok(checks)
}

fn random_multiuser_set(m: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<ChannelSet> {
    let h1 = CMat::from_fn(m, n, |_, _| complex_gaussian(rng));
    let h2 = (0..k).map(|_| complex_gaussian_vec(n, rng) * C64::from(0.5)).collect();
    let hd = (0..k).map(|_| complex_gaussian_vec(m, rng)).collect();
    ChannelSet::from_parts(h1, h2, hd)
}

/// Analytic soft-min gradient against central differences at 10 random points.
pub fn gradient_suite(opts: &ValidationOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let (m, n, k, sigma2) = (4, 8, 3, 0.5);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let set = random_multiuser_set(m, n, k, &mut rng)?;
        let v = IrsPhaseVector::random(n, &mut rng);
        let h: Vec<CVec> = (0..k).map(|i| &set.hd[i] + &set.h0[i] * v.as_vector()).collect();
        let g = maxmin_precoder_warm(&h, 2.0, sigma2, None, &MaxMinOptions::default())?.solution.g;
        let p = (0..k).map(|_| rng.random_range(0.3..1.0)).collect();
        let obj = SoftMinObjective::new(&set, &PrecoderSolution { g, p }, sigma2, 0.1);
        let analytic = obj.gradient(v.as_vector()) * C64::from(opts.gradient_fault);
        let step = 1e-6;
        let numeric = CVec::from_fn(n, |i, _| {
            let mut e = CVec::zeros(n);
            e[i] = C64::from(step);
            let gx = (obj.value(&(v.as_vector() + &e)) - obj.value(&(v.as_vector() - &e))) / (2.0 * step);
            e[i] = C64::new(0.0, step);
            let gy = (obj.value(&(v.as_vector() + &e)) - obj.value(&(v.as_vector() - &e))) / (2.0 * step);
            C64::new(gx, gy)
        });
        worst = worst.max((&analytic - &numeric).norm() / numeric.norm());
    }
    Ok(vec![Check::at_most("gradient", "max_relative_error", worst, 1e-5)])
}

/// Exhaustive 64-level phase search against the single-user closed form on
/// rank-one cascades with M ≤ 4 and N = 3.
pub fn phase_optimality_suite(opts: &ValidationOptions) -> Result<Vec<Check>> {
    const LEVELS: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let rotations: Vec<C64> = (0..LEVELS)
        .map(|l| C64::from_polar(1.0, std::f64::consts::TAU * l as f64 / LEVELS as f64))
        .collect();
    let resolution = 1.0 - (std::f64::consts::PI / LEVELS as f64).cos();
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    let mut worst_gap: f64 = 0.0;
    for inst in 0..opts.brute_force_instances {
        let m = 1 + inst % 4;
        let n = 3;
        let a = steering_vector(m, rng.random_range(-1.5..1.5));
        let b = steering_vector(n, rng.random_range(-1.5..1.5));
        let h2 = complex_gaussian_vec(n, &mut rng);
        let hd = complex_gaussian_vec(m, &mut rng);
        let h0 = &a * b.adjoint() * crate::linalg::diag(&h2);
        let v = irs_phases_single_user(&h0, &hd)?;
        let closed = (&hd + &h0 * v.as_vector()).norm_squared();

        let cols: Vec<Vec<CVec>> = (0..n)
            .map(|i| rotations.iter().map(|r| h0.column(i) * *r).collect())
            .collect();
        let mut best: f64 = 0.0;
        for x in &cols[0] {
            let hx = &hd + x;
            for y in &cols[1] {
                let hxy = &hx + y;
                for z in &cols[2] {
                    best = best.max(hxy.iter().zip(z.iter()).map(|(p, q)| (p + q).norm_sqr()).sum());
                }
            }
        }
        worst_excess = worst_excess.max((best - closed) / closed);
        worst_gap = worst_gap.max((closed - best) / (2.0 * closed * resolution));
    }
    Ok(vec![
        Check::at_most("phase_optimality", "grid_excess_over_closed_form", worst_excess, 1e-12),
        Check::at_most("phase_optimality", "closed_form_gap_over_resolution_bound", worst_gap, 1.0),
    ])
}

/// IRS-only SNR gain per doubling of N, expected 20 log10(2) dB.
pub fn scaling_suite(opts: &ValidationOptions) -> Result<Vec<Check>> {
    let cfg = ScenarioConfig::single_user(4, 8, 50.0);
    let mut spec = SweepSpec::new(SweepVariable::NIrs, vec![8.0, 16.0, 32.0, 64.0], opts.scaling_trials, opts.seed);
    spec.reflect_only = true;
    let pts = run_sweep(&cfg, &spec)?;
    let ideal = 20.0 * 2f64.log10();
    Ok(pts
        .windows(2)
        .map(|w| {
            let gain = w[1].snr_db - w[0].snr_db;
            Check::at_most(
                "n_squared",
                format!("gain_db_n{}_to_n{}(value={gain:.3})", w[0].value, w[1].value),
                (gain - ideal).abs(),
                0.5,
            )
        })
        .collect())
}

/// SINR spread of the max-min precoder on random K=4, M=8 instances.
pub fn precoder_suite(opts: &ValidationOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(3));
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let h: Vec<CVec> = (0..4).map(|_| complex_gaussian_vec(8, &mut rng)).collect();
        let sol = maxmin_precoder_warm(&h, 1.0, 0.1, None, &MaxMinOptions::default())?.solution;
        let set = ChannelSet::direct_only(h);
        let s = crate::evaluate::sinrs(&set, &IrsPhaseVector::ones(0), &sol, 0.1)?;
        let hi = s.iter().copied().fold(f64::MIN, f64::max);
        let lo = s.iter().copied().fold(f64::MAX, f64::min);
        worst = worst.max((hi - lo) / hi);
    }
    Ok(vec![Check::at_most("precoder", "max_sinr_spread", worst, 1e-3)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ValidationOptions {
        ValidationOptions {
            mmse_trials: 2000,
            brute_force_instances: 4,
            scaling_trials: 50,
            ..ValidationOptions::default()
        }
    }

    #[test]
    fn gradient_fault_is_caught() {
        assert!(gradient_suite(&quick()).unwrap()[0].pass);
        let faulty = ValidationOptions { gradient_fault: 1.1, ..quick() };
        assert!(!gradient_suite(&faulty).unwrap()[0].pass);
    }

    #[test]
    fn noiseless_training_has_zero_error() {
        let opts = ValidationOptions { noise_scale: 0.0, mmse_trials: 200, ..quick() };
        let checks = mmse_suite(&opts).unwrap();
        assert!(checks.iter().all(|c| c.pass));
        for c in &checks {
            let bound = if c.metric.contains("mse") { 1e-20 } else { 1e-12 };
            assert!(c.value < bound, "{c:?}");
        }
    }

    #[test]
    fn brute_force_never_beats_closed_form() {
        assert!(phase_optimality_suite(&quick()).unwrap().iter().all(|c| c.pass));
    }

    #[test]
    fn csv_has_header_and_one_row_per_check() {
        let report = ValidationReport {
            checks: precoder_suite(&quick()).unwrap(),
        };
        let csv = report.to_csv();
        assert!(csv.starts_with("suite,metric,value,threshold,pass\n"));
        assert_eq!(csv.lines().count(), 1 + report.checks.len());
        assert!(report.passed());
    }
}
