//! Max-min SINR linear precoding under a total power budget.
//!
//! Solved in the dual uplink by alternating two steps: for fixed uplink
//! powers `q` the MMSE receive beams `g_k ∝ (σ²I + Σ_j q_j h_j h_j^H)^{-1} h_k`
//! are optimal, and for fixed beams the powers that balance every uplink SINR
//! under `Σ q = P_T` follow from a one-dimensional search. The balanced SINR
//! never decreases across rounds. The final beams are reused in the downlink,
//! where duality gives the same balanced SINR with `Σ p = P_T`.

use nalgebra::{DMatrix, DVector};

use super::{mrt, PrecoderSolution};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxMinOptions {
    pub max_iter: usize,
    /// Stop when a round improves the balanced SINR by less than this, relatively.
    pub tol: f64,
}

impl Default for MaxMinOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxMinOutcome {
    pub solution: PrecoderSolution,
    /// The common downlink SINR.
    pub sinr: f64,
    /// Dual uplink powers; pass back in to warm-start a nearby problem.
    pub uplink_powers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Max-min SINR precoder. On non-convergence the error carries the last
/// iterate, which is still SINR-balanced and meets the power budget.
pub fn maxmin_precoder(h_eff: &[CVec], p_t: f64, sigma2: f64) -> Result<PrecoderSolution> {
    let out = maxmin_precoder_warm(h_eff, p_t, sigma2, None, &MaxMinOptions::default())?;
    if out.converged {
        Ok(out.solution)
    } else {
        Err(Error::Convergence {
            iterations: out.iterations,
            last: Box::new(out.solution),
        })
    }
}

/// Like [`maxmin_precoder`], optionally starting from previous uplink powers.
/// Reports convergence in the outcome instead of failing.
pub fn maxmin_precoder_warm(
    h_eff: &[CVec],
    p_t: f64,
    sigma2: f64,
    warm: Option<&[f64]>,
    opts: &MaxMinOptions,
) -> Result<MaxMinOutcome> {
    let k = h_eff.len();
    if k == 0 {
        return Err(Error::Usage("no users to precode for".into()));
    }
    if !(p_t > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::Domain("power budget and noise power must be positive".into()));
    }
    let m = h_eff[0].len();
    if h_eff.iter().any(|h| h.len() != m) {
        return Err(Error::Dimension("effective channels differ in length".into()));
    }
    if let Some(idx) = h_eff.iter().position(|h| !(h.norm() > 0.0) || !h.norm().is_finite()) {
        return Err(Error::DegenerateChannel(format!("effective channel of user {idx} is zero or non-finite")));
    }
    if k == 1 {
        let solution = mrt(&h_eff[0], p_t)?;
        let sinr = p_t * h_eff[0].norm_squared() / sigma2;
        return Ok(MaxMinOutcome {
            solution,
            sinr,
            uplink_powers: vec![p_t],
            iterations: 0,
            converged: true,
        });
    }

    let mut q: Vec<f64> = match warm {
        Some(w) if w.len() == k && w.iter().all(|x| *x > 0.0 && x.is_finite()) => {
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x * p_t / s).collect()
        }
        _ => vec![p_t / k as f64; k],
    };

    let mut converged = false;
    let mut iterations = 0;
    let mut beams = mmse_beams(h_eff, &q, sigma2)?;
    let mut gamma = 0.0;
    while iterations < opts.max_iter {
        iterations += 1;
        let uplink = coupling(h_eff, &beams, true);
        let (next, g) = balance(&uplink, p_t, sigma2)?;
        q = next;
        beams = mmse_beams(h_eff, &q, sigma2)?;
        let gain = (g - gamma) / g;
        gamma = g;
        if gain < opts.tol {
            converged = true;
            break;
        }
    }

    let (p, sinr) = balance(&coupling(h_eff, &beams, false), p_t, sigma2)?;
    Ok(MaxMinOutcome {
        solution: PrecoderSolution { g: beams, p },
        sinr,
        uplink_powers: q,
        iterations,
        converged,
    })
}

fn mmse_beams(h: &[CVec], q: &[f64], sigma2: f64) -> Result<Vec<CVec>> {
    let m = h[0].len();
    let mut a = CMat::identity(m, m) * C64::from(sigma2);
    for (hk, &qk) in h.iter().zip(q) {
        a.gerc(C64::from(qk), hk, hk, C64::from(1.0));
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("uplink covariance is not positive definite".into()))?;
    h.iter()
        .map(|hk| {
            let w = chol.solve(hk);
            let n = w.norm();
            if n > 0.0 && n.is_finite() {
                Ok(w / C64::from(n))
            } else {
                Err(Error::Numerical("MMSE beam vanished".into()))
            }
        })
        .collect()
}

/// Power gains between beams and users. Downlink entry `(i, j)` is what
/// user `i` receives through beam `j`; the uplink matrix is its transpose.
fn coupling(h: &[CVec], g: &[CVec], uplink: bool) -> DMatrix<f64> {
    let k = h.len();
    DMatrix::from_fn(k, k, |i, j| {
        let (user, beam) = if uplink { (j, i) } else { (i, j) };
        g[beam].dotc(&h[user]).norm_sqr()
    })
}

/// Powers giving every link the same SINR with `Σ p = p_t`, for unit-norm beams.
///
/// For a target SINR γ the powers solve `(D - γΨ) p = γσ² 1`, where `D` is
/// the diagonal of `gains` and `Ψ` its off-diagonal part. The total power
/// grows monotonically in γ, so γ is found by bisection.
fn balance(gains: &DMatrix<f64>, p_t: f64, sigma2: f64) -> Result<(Vec<f64>, f64)> {
    let k = gains.nrows();
    if (0..k).any(|i| !(gains[(i, i)] > 0.0)) {
        return Err(Error::DegenerateChannel("a beam is orthogonal to its own user's channel".into()));
    }
    let powers_for = |gamma: f64| -> Option<Vec<f64>> {
        let a = DMatrix::from_fn(k, k, |i, j| if i == j { gains[(i, i)] } else { -gamma * gains[(i, j)] });
        let rhs = DVector::from_element(k, gamma * sigma2);
        let p = a.lu().solve(&rhs)?;
        if p.iter().all(|x| x.is_finite() && *x > 0.0) {
            Some(p.iter().copied().collect())
        } else {
            None
        }
    };
    let sum = |p: &[f64]| p.iter().sum::<f64>();

    let mut lo = 0.0;
    let mut hi = 1.0_f64;
    let mut doublings = 0;
    // Grow until the target is infeasible or overshoots the budget.
    while let Some(p) = powers_for(hi) {
        if sum(&p) > p_t {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::Numerical("downlink SINR target unbounded".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi {
            break;
        }
        match powers_for(mid) {
            Some(p) if sum(&p) <= p_t => lo = mid,
            _ => hi = mid,
        }
    }
    let gamma = lo;
    let mut p = powers_for(gamma)
        .filter(|_| gamma > 0.0)
        .ok_or_else(|| Error::Numerical("downlink power balancing failed".into()))?;
    let s = sum(&p);
    p.iter_mut().for_each(|x| *x *= p_t / s);
    Ok((p, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian_vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn downlink_sinrs(h: &[CVec], sol: &PrecoderSolution, sigma2: f64) -> Vec<f64> {
        (0..h.len())
            .map(|k| {
                let s = sol.p[k] * h[k].dotc(&sol.g[k]).norm_sqr();
                let i: f64 = (0..h.len())
                    .filter(|&j| j != k)
                    .map(|j| sol.p[j] * h[k].dotc(&sol.g[j]).norm_sqr())
                    .sum();
                s / (i + sigma2)
            })
            .collect()
    }

    #[test]
    fn single_user_is_mrt() {
        let h = vec![CVec::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)])];
        let sol = maxmin_precoder(&h, 5.0, 0.1).unwrap();
        assert_eq!(sol, mrt(&h[0], 5.0).unwrap());
    }

    #[test]
    fn orthogonal_equal_norm_users_split_evenly() {
        let h = vec![
            CVec::from_vec(vec![C64::from(1.0), C64::from(0.0)]),
            CVec::from_vec(vec![C64::from(0.0), C64::new(0.0, 1.0)]),
        ];
        let sol = maxmin_precoder(&h, 4.0, 0.5).unwrap();
        assert!((sol.p[0] - 2.0).abs() < 1e-9 && (sol.p[1] - 2.0).abs() < 1e-9);
        for k in 0..2 {
            assert!((sol.g[k].dotc(&h[k]).norm() - 1.0).abs() < 1e-9);
        }
        let s = downlink_sinrs(&h, &sol, 0.5);
        assert!((s[0] - s[1]).abs() < 1e-9 * s[0]);

        // Brute force over the power split: equal split maximizes the minimum.
        let mut best = (0.0, 0.0);
        for i in 1..1000 {
            let p0 = 4.0 * i as f64 / 1000.0;
            let m = (p0 / 0.5).min((4.0 - p0) / 0.5);
            if m > best.1 {
                best = (p0, m);
            }
        }
        assert!((best.0 - 2.0).abs() <= 4.0 / 1000.0);
        assert!(s[0] >= best.1 * (1.0 - 1e-9));
    }

    #[test]
    fn random_instances_balance_and_meet_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let h: Vec<CVec> = (0..4).map(|_| complex_gaussian_vec(6, &mut rng)).collect();
            let sol = maxmin_precoder(&h, 5.0, 0.3).unwrap();
            let s = downlink_sinrs(&h, &sol, 0.3);
            let (lo, hi) = s.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(hi - lo < 1e-3 * lo);
            assert!((sol.total_power() - 5.0).abs() < 1e-9 * 5.0);
            assert!(sol.g.iter().all(|g| (g.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn balanced_sinr_beats_perturbed_allocations() {
        // Perturbing the powers of the solution can only lower the minimum SINR.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h: Vec<CVec> = (0..3).map(|_| complex_gaussian_vec(4, &mut rng)).collect();
        let sol = maxmin_precoder(&h, 2.0, 0.1).unwrap();
        let base = downlink_sinrs(&h, &sol, 0.1).into_iter().fold(f64::MAX, f64::min);
        for i in 0..3 {
            let mut p = sol.p.clone();
            p[i] *= 1.05;
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x *= 2.0 / s);
            let alt = PrecoderSolution { g: sol.g.clone(), p };
            let min = downlink_sinrs(&h, &alt, 0.1).into_iter().fold(f64::MAX, f64::min);
            assert!(min <= base * (1.0 + 1e-9));
        }
    }

    #[test]
    fn zero_channel_rejected() {
        let h = vec![CVec::from_element(2, C64::from(1.0)), CVec::zeros(2)];
        assert!(matches!(maxmin_precoder(&h, 1.0, 1.0), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h: Vec<CVec> = (0..4).map(|_| complex_gaussian_vec(4, &mut rng)).collect();
        let opts = MaxMinOptions { max_iter: 1, tol: 1e-14 };
        let out = maxmin_precoder_warm(&h, 1.0, 0.01, None, &opts).unwrap();
        assert!(!out.converged);
        assert!((out.solution.total_power() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_converges_faster() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let h: Vec<CVec> = (0..5).map(|_| complex_gaussian_vec(8, &mut rng)).collect();
        let cold = maxmin_precoder_warm(&h, 5.0, 0.05, None, &MaxMinOptions::default()).unwrap();
        let warm = maxmin_precoder_warm(&h, 5.0, 0.05, Some(&cold.uplink_powers), &MaxMinOptions::default()).unwrap();
        assert!(warm.iterations <= cold.iterations);
        assert!((warm.sinr - cold.sinr).abs() < 1e-6 * cold.sinr);
    }
}
