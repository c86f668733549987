//! Closed-form CPU frequencies, phase durations and uplink power caps.
//!
//! Given the synthetic data split and the link rates, every time share has
//! a unique optimum: downloads, broadcast and uploads take exactly as long
//! as their slowest device needs, and local training absorbs whatever is
//! left of the latency budget.

use serde::{Deserialize, Serialize};

use crate::access::Access;
use crate::error::{Error, Result};
use crate::model::{
    broadcast_time, compute_energy_at_deadline, training_cycles, DeviceProfile, SystemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAllocation {
    pub t_down_s: f64,
    pub t_br_s: f64,
    pub t_loc_s: f64,
    pub t_up_s: f64,
    /// Per-round time left for synthesis, downloading and training once
    /// broadcast and upload are paid for.
    pub t_loc_cap_s: f64,
}

impl TimeAllocation {
    /// Total latency `T^syn + T^down + N (T^br + T^loc + T^up)`.
    pub fn total_latency(&self, d_gen: &[f64], params: &SystemParams) -> f64 {
        crate::model::synthesis_time(d_gen, params)
            + self.t_down_s
            + params.rounds() * (self.t_br_s + self.t_loc_s + self.t_up_s)
    }
}

/// Slowest frequencies that still finish local training in `t_loc_s`.
/// The result may exceed `f_max`; checking that is the caller's job.
pub fn optimal_frequencies(
    d_gen: &[f64],
    t_loc_s: f64,
    devices: &[DeviceProfile],
    tau: f64,
) -> Result<Vec<f64>> {
    if !(t_loc_s > 0.0) {
        return Err(Error::InfeasibleSchedule { t_loc_s });
    }
    Ok(devices
        .iter()
        .zip(d_gen)
        .map(|(dev, &d)| training_cycles(dev, d, tau) / t_loc_s)
        .collect())
}

/// NOMA phase durations.
pub fn time_allocation(
    d_gen: &[f64],
    downlink_rates: &[f64],
    uplink_rates: &[f64],
    params: &SystemParams,
    h: &[f64],
) -> Result<TimeAllocation> {
    time_allocation_with(Access::Noma, d_gen, downlink_rates, uplink_rates, params, h)
}

/// Phase durations under the timing rules of `access`.
pub fn time_allocation_with(
    access: Access,
    d_gen: &[f64],
    downlink_rates: &[f64],
    uplink_rates: &[f64],
    params: &SystemParams,
    h: &[f64],
) -> Result<TimeAllocation> {
    let n = params.rounds();
    if n == 0.0 {
        return Err(Error::InfeasibleSchedule { t_loc_s: f64::NAN });
    }
    let t_down_s = access.download_time(d_gen, downlink_rates, params);
    let t_br_s = broadcast_time(params, h);
    let t_up_s = access.upload_time(uplink_rates, params);
    let t_loc_cap_s = params.t_max_s / n - t_up_s - t_br_s;
    let t_loc_s = t_loc_cap_s - crate::model::synthesis_time(d_gen, params) / n - t_down_s / n;
    if !(t_loc_s > 0.0) || !t_loc_s.is_finite() {
        return Err(Error::InfeasibleSchedule { t_loc_s });
    }
    Ok(TimeAllocation {
        t_down_s,
        t_br_s,
        t_loc_s,
        t_up_s,
        t_loc_cap_s,
    })
}

/// Largest uplink power each device can afford over `T^up` after paying
/// for local training at the deadline frequency.
pub fn q_max_vector(
    d_gen: &[f64],
    time: &TimeAllocation,
    devices: &[DeviceProfile],
    tau: f64,
) -> Result<Vec<f64>> {
    if !(time.t_loc_s > 0.0 && time.t_up_s > 0.0) {
        return Err(Error::InfeasibleSchedule {
            t_loc_s: time.t_loc_s,
        });
    }
    devices
        .iter()
        .zip(d_gen)
        .enumerate()
        .map(|(k, (dev, &d))| {
            let compute = compute_energy_at_deadline(dev, d, tau, time.t_loc_s);
            let cap = dev.q_max_w.min((dev.e_max_j - compute) / time.t_up_s);
            if cap > 0.0 {
                Ok(cap)
            } else {
                Err(Error::EnergyInfeasible {
                    device: k,
                    q_max_w: cap,
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{device, unit_params};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn frequencies_match_deadline() {
        let dev = DeviceProfile {
            w_cycles_per_sample: 2.0,
            d_loc_samples: 10.0,
            ..device()
        };
        assert_eq!(
            optimal_frequencies(&[0.0], 4.0, std::slice::from_ref(&dev), 1.0).unwrap(),
            vec![5.0]
        );
        let f = optimal_frequencies(&[3.0], 1.3, std::slice::from_ref(&dev), 1.0).unwrap();
        assert_eq!(crate::model::local_time(&dev, f[0], 3.0, 1.0).unwrap(), 1.3);
        assert!(matches!(
            optimal_frequencies(&[0.0], 0.0, &[dev], 1.0),
            Err(Error::InfeasibleSchedule { .. })
        ));
    }

    #[test]
    fn worked_time_allocation() {
        let p = unit_params();
        // h_1 P = 3 with unit noise, one device.
        let t = time_allocation(&[2.0], &[2.0], &[1.0], &p, &[1.0]).unwrap();
        assert_eq!(t.t_br_s, 2.0);
        assert_eq!(t.t_up_s, 4.0);
        assert_eq!(t.t_loc_cap_s, 4.0);
        assert_eq!(t.t_down_s, 1.0);
        assert!(close(t.t_loc_s, 3.88, 1e-15));
        assert!(close(t.total_latency(&[2.0], &p), p.t_max_s, 1e-12));
    }

    #[test]
    fn zero_synthetic_data_leaves_full_window() {
        let p = unit_params();
        let t = time_allocation(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 2.0], &p, &[1.0, 2.0]).unwrap();
        assert_eq!(t.t_down_s, 0.0);
        assert_eq!(t.t_loc_s, t.t_loc_cap_s);
    }

    #[test]
    fn model_size_scales_link_times() {
        let mut p = unit_params();
        p.t_max_s = 1000.0;
        let a = time_allocation(&[1.0], &[2.0], &[1.0], &p, &[1.0]).unwrap();
        p.model_size_bits *= 2.0;
        let b = time_allocation(&[1.0], &[2.0], &[1.0], &p, &[1.0]).unwrap();
        assert_eq!(b.t_br_s, 2.0 * a.t_br_s);
        assert_eq!(b.t_up_s, 2.0 * a.t_up_s);
    }

    #[test]
    fn exhausted_window_is_an_error() {
        let mut p = unit_params();
        p.t_max_s = 50.0;
        // T_max / N = 5 < T_br + T_up = 6.
        assert!(matches!(
            time_allocation(&[0.0], &[0.0], &[1.0], &p, &[1.0]),
            Err(Error::InfeasibleSchedule { .. })
        ));
    }

    #[test]
    fn power_caps() {
        let dev = DeviceProfile {
            q_max_w: 1.0,
            e_max_j: 2.0,
            ..device()
        };
        let cycles = training_cycles(&dev, 0.0, 1.0);
        // Pick T_loc so the compute energy is exactly 0.5 J.
        let t_loc = (dev.varpi * cycles.powi(3) / 0.5).sqrt();
        let t = TimeAllocation {
            t_down_s: 0.0,
            t_br_s: 1.0,
            t_loc_s: t_loc,
            t_up_s: 1.0,
            t_loc_cap_s: t_loc,
        };
        let q = q_max_vector(&[0.0], &t, std::slice::from_ref(&dev), 1.0).unwrap();
        assert!(close(q[0], 1.0, 1e-12));

        let tight = TimeAllocation {
            t_loc_s: t_loc / 3.0,
            ..t
        };
        assert!(matches!(
            q_max_vector(&[0.0], &tight, std::slice::from_ref(&dev), 1.0),
            Err(Error::EnergyInfeasible { device: 0, .. })
        ));

        let rich = DeviceProfile {
            e_max_j: 1e9,
            ..dev
        };
        assert_eq!(
            q_max_vector(&[0.0], &t, std::slice::from_ref(&rich), 1.0).unwrap(),
            vec![rich.q_max_w]
        );
    }
}
