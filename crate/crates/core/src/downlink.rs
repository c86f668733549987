//! Max-min downlink power allocation: maximize the smallest rate-per-sample
//! `R_k / D_k` under the base-station power budget.
//!
//! For a target ratio `η` the powers follow from a back-substitution that
//! makes every rate exactly `η D_k`; the total power is increasing in `η`,
//! so the best `η` is found by bisection.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::access::Access;
use crate::bisection::{max_feasible, rel_width};
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Largest `ηD/B` for which `2^(ηD/B)` is evaluated.
const MAX_EXPONENT: f64 = 1000.0;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownlinkSolution {
    pub p_down_w: Vec<f64>,
    /// Achieved `min_k R_k / D_k`; infinite when nobody needs data.
    pub eta: f64,
    pub iterations: usize,
}

fn spectral_factor(exponent: f64) -> Result<f64> {
    if exponent > MAX_EXPONENT {
        return Err(Error::Domain(format!("rate exponent {exponent} overflows")));
    }
    Ok((exponent * std::f64::consts::LN_2).exp_m1())
}

/// NOMA powers giving every device with data the rate `η D_k`, built from
/// the strongest device down.
pub fn recursive_downlink_powers(
    eta: f64,
    d_gen: &[f64],
    h: &[f64],
    params: &SystemParams,
) -> Result<Vec<f64>> {
    let noise = params.noise_power_w();
    let mut p = vec![0.0; d_gen.len()];
    let mut tail = 0.0;
    for k in (0..d_gen.len()).rev() {
        if d_gen[k] > 0.0 {
            p[k] = spectral_factor(eta * d_gen[k] / params.bandwidth_hz)? * (noise / h[k] + tail);
            tail += p[k];
        }
    }
    Ok(p)
}

/// Interference-free powers on equal sub-bands for the same target ratio.
pub fn fdma_downlink_powers(
    eta: f64,
    d_gen: &[f64],
    h: &[f64],
    params: &SystemParams,
) -> Result<Vec<f64>> {
    let k = d_gen.len() as f64;
    let sub_band = params.bandwidth_hz / k;
    let sub_noise = params.noise_power_w() / k;
    d_gen
        .iter()
        .zip(h)
        .map(|(&d, &hk)| {
            if d > 0.0 {
                Ok(spectral_factor(eta * d / sub_band)? * sub_noise / hk)
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

pub fn solve_downlink(
    d_gen: &[f64],
    h: &[f64],
    params: &SystemParams,
    tol: f64,
) -> DownlinkSolution {
    solve_downlink_with(Access::Noma, d_gen, h, params, tol)
}

/// Max-min ratio allocation for `access`. Under TDMA every slot simply
/// uses the full base-station power.
pub fn solve_downlink_with(
    access: Access,
    d_gen: &[f64],
    h: &[f64],
    params: &SystemParams,
    tol: f64,
) -> DownlinkSolution {
    let k = d_gen.len();
    let budget = params.bs_power_w;
    let min_demand = d_gen
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);

    if access == Access::Tdma {
        let rates = access.downlink_rates(&vec![budget; k], h, params);
        let eta = d_gen
            .iter()
            .zip(&rates)
            .filter(|(&d, _)| d > 0.0)
            .map(|(&d, &r)| r / d)
            .fold(f64::INFINITY, f64::min);
        return DownlinkSolution {
            p_down_w: vec![budget; k],
            eta,
            iterations: 0,
        };
    }
    if !min_demand.is_finite() {
        return DownlinkSolution {
            p_down_w: vec![0.0; k],
            eta: f64::INFINITY,
            iterations: 0,
        };
    }

    let powers = |eta: f64| match access {
        Access::Fdma => fdma_downlink_powers(eta, d_gen, h, params),
        _ => recursive_downlink_powers(eta, d_gen, h, params),
    };
    let strongest = h[k - 1];
    let capacity = match access {
        Access::Fdma => {
            let kf = k as f64;
            params.bandwidth_hz / kf
                * (1.0 + strongest * budget * kf / params.noise_power_w()).log2()
        }
        _ => params.bandwidth_hz * (1.0 + strongest * budget / params.noise_power_w()).log2(),
    };
    let eta_hi = capacity / min_demand;

    // Total power at the best feasible point so far; also drives the stop
    // rule so the budget ends up tight and not just the bracket narrow.
    let used = Cell::new(0.0);
    let bracket = max_feasible(
        0.0,
        eta_hi,
        MAX_ITERATIONS,
        |eta| match powers(eta) {
            Ok(p) => {
                let total: f64 = p.iter().sum();
                let ok = total <= budget;
                if ok {
                    used.set(total);
                }
                ok
            }
            Err(_) => false,
        },
        |lo, hi| rel_width(lo, hi) >= tol || used.get() < (1.0 - tol) * budget,
    );
    let p_down_w = powers(bracket.lo).expect("lower bracket end was evaluated");
    DownlinkSolution {
        p_down_w,
        eta: bracket.lo,
        iterations: bracket.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::unit_params;
    use crate::model::downlink_rates;

    #[test]
    fn recursion_two_devices() {
        let p = unit_params();
        let pw = recursive_downlink_powers(1.0, &[1.0, 1.0], &[1.0, 2.0], &p).unwrap();
        assert_eq!(pw, vec![1.5, 0.5]);
        assert_eq!(downlink_rates(&pw, &[1.0, 2.0], &p), vec![1.0, 1.0]);
        assert_eq!(
            recursive_downlink_powers(0.0, &[1.0, 1.0], &[1.0, 2.0], &p).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn overflow_is_reported() {
        let p = unit_params();
        assert!(recursive_downlink_powers(2000.0, &[1.0], &[1.0], &p).is_err());
    }

    #[test]
    fn analytic_two_device_optimum() {
        let mut p = unit_params();
        p.bs_power_w = 2.0;
        let s = solve_downlink(&[1.0, 1.0], &[1.0, 2.0], &p, 1e-9);
        assert!((s.eta - 1.0).abs() < 1e-8);
        assert!((s.p_down_w[0] - 1.5).abs() < 1e-7 && (s.p_down_w[1] - 0.5).abs() < 1e-7);
        assert!(s.p_down_w.iter().sum::<f64>() <= 2.0);
        assert!(s.iterations <= MAX_ITERATIONS);
    }

    #[test]
    fn nobody_needs_data() {
        let p = unit_params();
        let s = solve_downlink(&[0.0, 0.0], &[1.0, 2.0], &p, 1e-9);
        assert_eq!(s.p_down_w, vec![0.0, 0.0]);
        assert!(s.eta.is_infinite());
    }

    #[test]
    fn zero_demand_devices_get_no_power() {
        let p = unit_params();
        let s = solve_downlink(&[0.0, 2.0, 1.0], &[1.0, 2.0, 3.0], &p, 1e-9);
        assert_eq!(s.p_down_w[0], 0.0);
        let r = downlink_rates(&s.p_down_w, &[1.0, 2.0, 3.0], &p);
        assert!((r[1] / 2.0 - r[2]).abs() < 1e-8 * r[2]);
    }

    #[test]
    fn fdma_symmetric_devices_share_power_equally() {
        let p = unit_params();
        let s = solve_downlink_with(Access::Fdma, &[1.0, 1.0], &[2.0, 2.0], &p, 1e-9);
        assert!((s.p_down_w[0] - s.p_down_w[1]).abs() < 1e-12);
        assert!((s.p_down_w.iter().sum::<f64>() - p.bs_power_w).abs() < 1e-8);
    }

    #[test]
    fn fdma_matches_noma_for_one_device() {
        let p = unit_params();
        let a = solve_downlink_with(Access::Fdma, &[3.0], &[0.7], &p, 1e-9);
        let b = solve_downlink(&[3.0], &[0.7], &p, 1e-9);
        assert_eq!(a.eta, b.eta);
        assert!((a.p_down_w[0] - b.p_down_w[0]).abs() <= 1e-15 * b.p_down_w[0]);
    }
}
