//! Max-min uplink power allocation with SIC at the base station.
//!
//! Decoding order: strongest received power `g_k q_k^max` first. For a
//! target common rate `θ` the normalized powers `q'_k = q_k / q_k^max`
//! follow from the last-decoded device backwards; `θ` is achievable iff
//! none of them exceeds one.

use serde::{Deserialize, Serialize};

use crate::bisection::{max_feasible, rel_width};
use crate::error::{Error, Result};
use crate::model::{SicOrder, SystemParams};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;
const MAX_EXPONENT: f64 = 1000.0;
/// Largest device count the permutation oracle accepts.
pub const ORACLE_MAX_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkSolution {
    pub q_up_w: Vec<f64>,
    pub sic_order: SicOrder,
    /// Common uplink rate, bits/s.
    pub theta: f64,
    pub iterations: usize,
}

/// Decoding order by descending `g_k q_k^max`, ties by device index.
pub fn sic_order(g: &[f64], q_max: &[f64]) -> SicOrder {
    let mut seq: Vec<usize> = (0..g.len()).collect();
    seq.sort_by(|&a, &b| {
        (g[b] * q_max[b])
            .total_cmp(&(g[a] * q_max[a]))
            .then(a.cmp(&b))
    });
    SicOrder::from_sequence(&seq)
}

/// Normalized powers giving every device the rate `θ` under `order`.
/// Entries above one mean `θ` is not achievable.
pub fn recursive_uplink_fracs(
    theta: f64,
    order: &SicOrder,
    g: &[f64],
    q_max: &[f64],
    params: &SystemParams,
) -> Result<Vec<f64>> {
    let exponent = theta / params.bandwidth_hz;
    if exponent > MAX_EXPONENT {
        return Err(Error::Domain(format!("rate exponent {exponent} overflows")));
    }
    let factor = (exponent * std::f64::consts::LN_2).exp_m1();
    let mut frac = vec![0.0; g.len()];
    let mut tail = params.noise_power_w();
    for dev in order.sequence().into_iter().rev() {
        let peak = g[dev] * q_max[dev];
        frac[dev] = factor * tail / peak;
        tail += peak * frac[dev];
    }
    Ok(frac)
}

fn achievable(
    theta: f64,
    order: &SicOrder,
    g: &[f64],
    q_max: &[f64],
    params: &SystemParams,
) -> bool {
    recursive_uplink_fracs(theta, order, g, q_max, params)
        .is_ok_and(|f| f.iter().all(|&x| x <= 1.0))
}

fn check_caps(q_max: &[f64]) -> Result<()> {
    match q_max.iter().position(|&q| !(q > 0.0 && q.is_finite())) {
        Some(device) => Err(Error::EnergyInfeasible {
            device,
            q_max_w: q_max[device],
        }),
        None => Ok(()),
    }
}

/// Best common rate for a fixed decoding order.
pub fn solve_uplink_with_order(
    order: &SicOrder,
    g: &[f64],
    q_max: &[f64],
    params: &SystemParams,
    tol: f64,
) -> Result<UplinkSolution> {
    check_caps(q_max)?;
    let b = params.bandwidth_hz;
    let weakest = g
        .iter()
        .zip(q_max)
        .map(|(&gk, &q)| gk * q)
        .fold(f64::INFINITY, f64::min);
    let hi =
        b * (1.0 + weakest / params.noise_power_w()).log2() + b * ((g.len() + 1) as f64).log2();
    let bracket = max_feasible(
        0.0,
        hi,
        MAX_ITERATIONS,
        |theta| achievable(theta, order, g, q_max, params),
        |lo, hi| rel_width(lo, hi) >= tol,
    );
    let frac = recursive_uplink_fracs(bracket.lo, order, g, q_max, params)?;
    Ok(UplinkSolution {
        q_up_w: frac
            .iter()
            .zip(q_max)
            .map(|(&f, &q)| (f * q).min(q))
            .collect(),
        sic_order: order.clone(),
        theta: bracket.lo,
        iterations: bracket.iterations,
    })
}

pub fn solve_uplink(
    g: &[f64],
    q_max: &[f64],
    params: &SystemParams,
    tol: f64,
) -> Result<UplinkSolution> {
    check_caps(q_max)?;
    solve_uplink_with_order(&sic_order(g, q_max), g, q_max, params, tol)
}

/// Exhaustive search over all decoding orders; ties go to the
/// lexicographically smallest decoding sequence.
pub fn uplink_oracle_perm(
    g: &[f64],
    q_max: &[f64],
    params: &SystemParams,
    tol: f64,
) -> Result<(f64, SicOrder)> {
    let k = g.len();
    if k > ORACLE_MAX_K {
        return Err(Error::OracleRefused(format!(
            "{k} devices exceed the permutation limit of {ORACLE_MAX_K}"
        )));
    }
    let mut seq: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, SicOrder)> = None;
    loop {
        let order = SicOrder::from_sequence(&seq);
        let theta = solve_uplink_with_order(&order, g, q_max, params, tol)?.theta;
        if best.as_ref().is_none_or(|(t, _)| theta > *t) {
            best = Some((theta, order));
        }
        if !next_permutation(&mut seq) {
            break;
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// Advances to the next lexicographic permutation; false after the last.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v
        .iter()
        .rposition(|&x| x > v[i])
        .expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}
