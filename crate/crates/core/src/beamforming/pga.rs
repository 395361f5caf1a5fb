//! Multi-user reflect beamforming by projected gradient ascent.
//!
//! Alternates between (a) the max-min precoder for the current reflection
//! vector and (b) a projected step along the tangent gradient of a soft-min of the user rates
//! with the precoder held fixed. A step is accepted only if the soft-min
//! does not drop and the re-optimized minimum rate does not drop, so the
//! returned trace is non-decreasing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::precoder::{maxmin_precoder_warm, MaxMinOptions, MaxMinOutcome};
use super::{IrsPhaseVector, PrecoderSolution};
use crate::channel::CascadedChannels;
use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct PgaOptions {
    /// Stop once three accepted steps in a row improve the minimum rate by less than this, relatively.
    pub tol: f64,
    pub max_outer: usize,
    /// Soft-min temperature in bits.
    pub mu_init: f64,
    pub mu_decay: f64,
    /// Outer iterations between temperature reductions.
    pub mu_every: usize,
    pub mu_min: f64,
    /// First trial step, as the largest per-element move before projection.
    pub step_init: f64,
    pub backtrack: f64,
    pub max_halvings: usize,
    /// Number of starts; the first is all-ones, the rest are random.
    pub restarts: usize,
    pub seed: u64,
    pub precoder: MaxMinOptions,
}

impl Default for PgaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_outer: 100,
            mu_init: 0.1,
            mu_decay: 0.5,
            mu_every: 20,
            mu_min: 1e-3,
            step_init: 1.0,
            backtrack: 0.5,
            max_halvings: 30,
            restarts: 1,
            seed: 0,
            precoder: MaxMinOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PgaResult {
    pub v: IrsPhaseVector,
    pub precoder: PrecoderSolution,
    /// Minimum user rate (bit/s/Hz) after each accepted outer iteration,
    /// starting with the initial point.
    pub trace: Vec<f64>,
}

impl PgaResult {
    pub fn min_rate(&self) -> f64 {
        *self.trace.last().expect("trace always holds the initial point")
    }
}

/// Soft-min of the user rates `-μ ln Σ_k exp(-R_k/μ)` as a function of the
/// reflection vector, for a fixed precoder.
///
/// With `c_kj(v) = g_j^H (h_d,k + H_0,k v) = b_kj + a_kj^H v` where
/// `a_kj = H_0,k^H g_j`, every received power `|c_kj|²` is a quadratic in `v`.
#[derive(Debug, Clone)]
pub struct SoftMinObjective {
    b: Vec<Vec<C64>>,
    a: Vec<Vec<CVec>>,
    p: Vec<f64>,
    sigma2: f64,
    mu: f64,
}

impl SoftMinObjective {
    pub fn new(channels: &impl CascadedChannels, sol: &PrecoderSolution, sigma2: f64, mu: f64) -> Self {
        let k_users = channels.k_users();
        let mut b = vec![Vec::with_capacity(k_users); k_users];
        let mut a = vec![Vec::with_capacity(k_users); k_users];
        for k in 0..k_users {
            let hd = &channels.direct()[k];
            let h0 = &channels.cascaded()[k];
            for g in &sol.g {
                b[k].push(g.dotc(hd));
                a[k].push(h0.adjoint() * g);
            }
        }
        Self {
            b,
            a,
            p: sol.p.clone(),
            sigma2,
            mu,
        }
    }

    fn amplitudes(&self, v: &CVec) -> Vec<Vec<C64>> {
        self.b
            .iter()
            .zip(&self.a)
            .map(|(bk, ak)| bk.iter().zip(ak).map(|(b, a)| b + a.dotc(v)).collect())
            .collect()
    }

    fn sinr_parts(&self, c: &[Vec<C64>], k: usize) -> (f64, f64) {
        let signal = self.p[k] * c[k][k].norm_sqr();
        let interference: f64 = (0..self.p.len())
            .filter(|&j| j != k)
            .map(|j| self.p[j] * c[k][j].norm_sqr())
            .sum();
        (signal, interference + self.sigma2)
    }

    pub fn rates(&self, v: &CVec) -> Vec<f64> {
        let c = self.amplitudes(v);
        (0..self.p.len())
            .map(|k| {
                let (s, d) = self.sinr_parts(&c, k);
                (1.0 + s / d).log2()
            })
            .collect()
    }

    pub fn value(&self, v: &CVec) -> f64 {
        soft_min(&self.rates(v), self.mu)
    }

    /// Real gradient packed as a complex vector: entry n is
    /// `∂f/∂Re v_n + j ∂f/∂Im v_n`, i.e. twice the Wirtinger derivative `∂f/∂v̄_n`.
    pub fn gradient(&self, v: &CVec) -> CVec {
        let c = self.amplitudes(v);
        let k_users = self.p.len();
        let mut rates = Vec::with_capacity(k_users);
        let mut parts = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let (s, d) = self.sinr_parts(&c, k);
            rates.push((1.0 + s / d).log2());
            parts.push((s, d));
        }
        let weights = soft_min_weights(&rates, self.mu);
        let mut grad = CVec::zeros(v.len());
        for k in 0..k_users {
            if weights[k] == 0.0 {
                continue;
            }
            let (s, d) = parts[k];
            // dR/dSINR = 1 / ((1 + SINR) ln 2); dSINR = (ds d - s dd) / d^2.
            let scale = weights[k] / ((1.0 + s / d) * std::f64::consts::LN_2) / (d * d);
            for j in 0..k_users {
                // d|c_kj|^2 / d conj(v) = a_kj c_kj
                let coef = if j == k { self.p[k] * d } else { -s * self.p[j] };
                grad.axpy(C64::from(2.0 * scale * coef) * c[k][j], &self.a[k][j], C64::from(1.0));
            }
        }
        grad
    }
}

/// `-μ ln Σ exp(-x_k/μ)`, evaluated around the minimum for stability.
pub fn soft_min(x: &[f64], mu: f64) -> f64 {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = x.iter().map(|v| (-(v - min) / mu).exp()).sum();
    min - mu * s.ln()
}

fn soft_min_weights(x: &[f64], mu: f64) -> Vec<f64> {
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = x.iter().map(|v| (-(v - min) / mu).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|w| w / s).collect()
}

pub(crate) fn effective_channels(channels: &impl CascadedChannels, v: &CVec) -> Vec<CVec> {
    channels
        .direct()
        .iter()
        .zip(channels.cascaded())
        .map(|(hd, h0)| if h0.ncols() == 0 { hd.clone() } else { hd + h0 * v })
        .collect()
}

struct Design {
    outcome: MaxMinOutcome,
    min_rate: f64,
}

fn design(channels: &impl CascadedChannels, v: &CVec, p_t: f64, sigma2: f64, warm: Option<&[f64]>, opts: &MaxMinOptions) -> Result<Design> {
    let h = effective_channels(channels, v);
    let outcome = maxmin_precoder_warm(&h, p_t, sigma2, warm, opts)?;
    let min_rate = (1.0 + outcome.sinr).log2();
    Ok(Design { outcome, min_rate })
}

/// Jointly designs the reflection vector and the max-min precoder.
pub fn irs_phases_multiuser_pga(
    channels: &impl CascadedChannels,
    p_t: f64,
    sigma2: f64,
    opts: &PgaOptions,
) -> Result<PgaResult> {
    if channels.k_users() == 0 {
        return Err(Error::Usage("PGA needs at least one user".into()));
    }
    let n = channels.n_irs();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<PgaResult> = None;
    for restart in 0..opts.restarts.max(1) {
        let start = if restart == 0 { IrsPhaseVector::ones(n) } else { IrsPhaseVector::random(n, &mut rng) };
        let run = ascend(channels, start, p_t, sigma2, opts, &mut rng)?;
        if best.as_ref().is_none_or(|b| run.min_rate() > b.min_rate()) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Consecutive sub-tolerance steps before stopping. One small gain is common
/// right after leaving a saddle.
const STALL_PATIENCE: usize = 3;

fn ascend(
    channels: &impl CascadedChannels,
    start: IrsPhaseVector,
    p_t: f64,
    sigma2: f64,
    opts: &PgaOptions,
    rng: &mut ChaCha8Rng,
) -> Result<PgaResult> {
    let mut v = start;
    let mut current = design(channels, v.as_vector(), p_t, sigma2, None, &opts.precoder)?;
    let mut trace = vec![current.min_rate];
    let mut mu = opts.mu_init;
    let mut stalled = 0;

    for outer in 1..=opts.max_outer {
        if v.is_empty() {
            break;
        }
        if outer > 1 && opts.mu_every > 0 && (outer - 1) % opts.mu_every == 0 {
            mu = (mu * opts.mu_decay).max(opts.mu_min);
        }
        let objective = SoftMinObjective::new(channels, &current.outcome.solution, sigma2, mu);
        let f0 = objective.value(v.as_vector());
        let grad = objective.gradient(v.as_vector());
        if grad.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("non-finite PGA gradient".into()));
        }
        // Only the component tangent to the unit circle moves the phases;
        // near a saddle the full gradient is almost radial.
        let dir = grad.zip_map(v.as_vector(), |g, vn| g - vn * (vn.conj() * g).re);
        let peak = dir.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            break;
        }
        let mut step = opts.step_init / peak;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let raw = v.as_vector() + &dir * C64::from(step);
            let cand = IrsPhaseVector::project(&raw, rng);
            if objective.value(cand.as_vector()) >= f0 {
                let next = design(
                    channels,
                    cand.as_vector(),
                    p_t,
                    sigma2,
                    Some(&current.outcome.uplink_powers),
                    &opts.precoder,
                )?;
                if next.min_rate >= current.min_rate {
                    accepted = Some((cand, next));
                    break;
                }
            }
            step *= opts.backtrack;
        }
        let Some((cand, next)) = accepted else { break };
        let gain = (next.min_rate - current.min_rate) / current.min_rate.abs().max(f64::MIN_POSITIVE);
        v = cand;
        current = next;
        trace.push(current.min_rate);
        stalled = if gain < opts.tol { stalled + 1 } else { 0 };
        if stalled >= STALL_PATIENCE {
            break;
        }
    }

    Ok(PgaResult {
        v,
        precoder: current.outcome.solution,
        trace,
    })
}
