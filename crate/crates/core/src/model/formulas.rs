use super::{DeviceProfile, SicOrder, SystemParams};
use crate::error::{Error, Result};

/// `B log2(1 + snr)`, accurate for tiny SNRs.
pub(crate) fn shannon_rate(bandwidth_hz: f64, snr: f64) -> f64 {
    bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2
}

/// Downlink NOMA rate of device `k`. Device `k` cancels the messages of
/// weaker devices `j < k` and sees the stronger ones as interference.
pub fn downlink_rate(k: usize, p_down_w: &[f64], h: &[f64], params: &SystemParams) -> f64 {
    let interference: f64 = p_down_w[k + 1..].iter().sum();
    shannon_rate(
        params.bandwidth_hz,
        h[k] * p_down_w[k] / (params.noise_power_w() + h[k] * interference),
    )
}

pub fn downlink_rates(p_down_w: &[f64], h: &[f64], params: &SystemParams) -> Vec<f64> {
    let k = p_down_w.len();
    let mut rates = vec![0.0; k];
    let mut tail = 0.0;
    for i in (0..k).rev() {
        rates[i] = shannon_rate(
            params.bandwidth_hz,
            h[i] * p_down_w[i] / (params.noise_power_w() + h[i] * tail),
        );
        tail += p_down_w[i];
    }
    rates
}

/// Common broadcast rate, limited by the weakest downlink `h[0]`.
pub fn broadcast_rate(params: &SystemParams, h: &[f64]) -> f64 {
    shannon_rate(
        params.bandwidth_hz,
        h[0] * params.bs_power_w / params.noise_power_w(),
    )
}

/// Global model broadcast time when the deadline is met with equality.
pub fn broadcast_time(params: &SystemParams, h: &[f64]) -> f64 {
    params.model_size_bits / broadcast_rate(params, h)
}

/// Uplink NOMA rate of device `k`: devices decoded after `k` interfere.
pub fn uplink_rate(
    k: usize,
    q_up_w: &[f64],
    g: &[f64],
    order: &SicOrder,
    params: &SystemParams,
) -> f64 {
    let pk = order.position(k);
    let interference: f64 = (0..q_up_w.len())
        .filter(|&j| order.position(j) > pk)
        .map(|j| g[j] * q_up_w[j])
        .sum();
    shannon_rate(
        params.bandwidth_hz,
        g[k] * q_up_w[k] / (params.noise_power_w() + interference),
    )
}

pub fn uplink_rates(
    q_up_w: &[f64],
    g: &[f64],
    order: &SicOrder,
    params: &SystemParams,
) -> Vec<f64> {
    let mut rates = vec![0.0; q_up_w.len()];
    let mut tail = 0.0;
    for dev in order.sequence().into_iter().rev() {
        let rx = g[dev] * q_up_w[dev];
        rates[dev] = shannon_rate(params.bandwidth_hz, rx / (params.noise_power_w() + tail));
        tail += rx;
    }
    rates
}

fn total_samples(d_gen: &[f64], devices: &[DeviceProfile]) -> Result<Vec<f64>> {
    if d_gen.len() != devices.len() {
        return Err(Error::Domain(format!(
            "{} allocations for {} devices",
            d_gen.len(),
            devices.len()
        )));
    }
    d_gen
        .iter()
        .zip(devices)
        .enumerate()
        .map(|(k, (&dg, dev))| {
            let total = dev.d_loc_samples + dg;
            if dg < 0.0 || !(total > 0.0) {
                Err(Error::Domain(format!(
                    "device {k} has {total} training samples"
                )))
            } else {
                Ok(total)
            }
        })
        .collect()
}

/// `Σ_k (D_loc + D_gen)^-β`, the quantity the optimizer actually minimizes.
pub fn equivalent_objective(
    d_gen: &[f64],
    devices: &[DeviceProfile],
    params: &SystemParams,
) -> Result<f64> {
    Ok(total_samples(d_gen, devices)?
        .iter()
        .map(|d| d.powf(-params.beta))
        .sum())
}

/// Global learning error model, a monotone transform of
/// [`equivalent_objective`].
pub fn learning_error(
    d_gen: &[f64],
    devices: &[DeviceProfile],
    params: &SystemParams,
) -> Result<f64> {
    let objective = equivalent_objective(d_gen, devices, params)?;
    Ok(learning_error_from_objective(
        objective,
        devices.len(),
        params,
    ))
}

pub fn learning_error_from_objective(objective: f64, k: usize, params: &SystemParams) -> f64 {
    let n = params.rounds();
    if n == 0.0 {
        return 1.0;
    }
    (n * (params.alpha / k as f64 * objective - params.gamma - 1.0) / params.zeta).exp()
}

/// CPU cycles needed for one round of local training.
pub fn training_cycles(device: &DeviceProfile, d_gen: f64, tau: f64) -> f64 {
    device.w_cycles_per_sample * tau * (device.d_loc_samples + d_gen)
}

pub fn local_time(device: &DeviceProfile, f_hz: f64, d_gen: f64, tau: f64) -> Result<f64> {
    let cycles = training_cycles(device, d_gen, tau);
    if f_hz <= 0.0 {
        if cycles > 0.0 {
            return Err(Error::Domain("zero frequency with data to train".into()));
        }
        return Ok(0.0);
    }
    Ok(cycles / f_hz)
}

pub fn local_energy(device: &DeviceProfile, f_hz: f64, d_gen: f64, tau: f64) -> Result<f64> {
    if f_hz < 0.0 {
        return Err(Error::Domain(format!("negative frequency {f_hz}")));
    }
    Ok(device.varpi * f_hz * f_hz * training_cycles(device, d_gen, tau))
}

/// Local training energy when the device runs exactly fast enough to finish
/// in `t_loc_s`: `ϖ (wτD)^3 / T_loc^2`.
pub fn compute_energy_at_deadline(
    device: &DeviceProfile,
    d_gen: f64,
    tau: f64,
    t_loc_s: f64,
) -> f64 {
    let cycles = training_cycles(device, d_gen, tau);
    device.varpi * cycles.powi(3) / (t_loc_s * t_loc_s)
}

pub fn upload_energy(q_up_w: f64, t_up_s: f64) -> f64 {
    t_up_s * q_up_w
}

pub fn synthesis_time(d_gen: &[f64], params: &SystemParams) -> f64 {
    params.synth_rate_s_per_sample * d_gen.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{device, unit_params};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn downlink_single_user() {
        let p = unit_params();
        assert!(close(downlink_rate(0, &[3.0], &[1.0], &p), 2.0, 1e-15));
    }

    #[test]
    fn downlink_two_users() {
        let p = unit_params();
        let h = [1.0, 2.0];
        let pw = [1.5, 0.5];
        assert!(close(downlink_rate(0, &pw, &h, &p), 1.0, 1e-15));
        assert!(close(downlink_rate(1, &pw, &h, &p), 1.0, 1e-15));
        assert_eq!(
            downlink_rates(&pw, &h, &p),
            vec![downlink_rate(0, &pw, &h, &p), downlink_rate(1, &pw, &h, &p)]
        );
        assert_eq!(downlink_rates(&[0.0, 0.0], &h, &p), vec![0.0, 0.0]);
    }

    #[test]
    fn broadcast_examples() {
        let mut p = unit_params();
        p.bs_power_w = 3.0;
        p.model_size_bits = 4.0;
        assert!(close(broadcast_time(&p, &[1.0, 5.0]), 2.0, 1e-15));
        p.bs_power_w = 0.0;
        assert!(broadcast_time(&p, &[1.0]).is_infinite());
    }

    #[test]
    fn broadcast_time_matches_high_precision_value() {
        let p = SystemParams {
            bandwidth_hz: 1e6,
            noise_psd_w_per_hz: 1e-19,
            bs_power_w: 3.162,
            model_size_bits: 2e6,
            ..unit_params()
        };
        // 40-digit evaluation: 0.18135900193154065917...
        assert!(close(
            broadcast_time(&p, &[6.6e-11]),
            0.181_359_001_931_540_66,
            1e-13
        ));
    }

    #[test]
    fn uplink_examples() {
        let p = unit_params();
        let order = SicOrder::identity(1);
        assert!(close(
            uplink_rate(0, &[1.0], &[1.0], &order, &p),
            1.0,
            1e-15
        ));

        let order = SicOrder::identity(2);
        let q = [1.0, 1.0];
        let g = [1.0, 1.0];
        assert!(close(
            uplink_rate(0, &q, &g, &order, &p),
            1.5f64.log2(),
            1e-15
        ));
        assert!(close(uplink_rate(1, &q, &g, &order, &p), 1.0, 1e-15));
        let rates = uplink_rates(&q, &g, &order, &p);
        assert!(close(rates[0], 1.5f64.log2(), 1e-15) && close(rates[1], 1.0, 1e-15));

        // Last decoded device sees only noise regardless of the others.
        let order = SicOrder::from_sequence(&[1, 0]);
        assert!(close(
            uplink_rate(0, &[1.0, 100.0], &g, &order, &p),
            1.0,
            1e-15
        ));
    }

    #[test]
    fn learning_error_examples() {
        let mut p = unit_params();
        let devs = vec![DeviceProfile {
            d_loc_samples: 1.0,
            ..device()
        }];
        p.rounds_n = 0;
        assert_eq!(learning_error(&[0.0], &devs, &p).unwrap(), 1.0);

        p.rounds_n = 7;
        let expect = (7.0 * (p.alpha - p.gamma - 1.0) / p.zeta).exp();
        assert!(close(
            learning_error(&[0.0], &devs, &p).unwrap(),
            expect,
            1e-14
        ));

        p.rounds_n = 100;
        let devs = vec![DeviceProfile {
            d_loc_samples: 300.0,
            ..device()
        }];
        // 40-digit evaluation: 0.87829929460569951197...
        assert!(close(
            learning_error(&[100.0], &devs, &p).unwrap(),
            0.878_299_294_605_699_5,
            1e-13
        ));
    }

    #[test]
    fn learning_error_rejects_empty_devices() {
        let p = unit_params();
        let devs = vec![DeviceProfile {
            d_loc_samples: 1.0,
            ..device()
        }];
        assert!(matches!(
            learning_error(&[-1.0], &devs, &p),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            learning_error(&[1.0, 1.0], &devs, &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn equivalent_objective_examples() {
        let p = unit_params();
        let devs = vec![
            DeviceProfile {
                d_loc_samples: 1.0,
                ..device()
            };
            2
        ];
        assert_eq!(equivalent_objective(&[0.0, 0.0], &devs, &p).unwrap(), 2.0);
        let base = equivalent_objective(&[3.0, 4.0], &devs, &p).unwrap();
        assert!(equivalent_objective(&[3.5, 4.0], &devs, &p).unwrap() < base);
    }

    #[test]
    fn local_time_and_energy() {
        let dev = DeviceProfile {
            d_loc_samples: 10.0,
            w_cycles_per_sample: 2.0,
            ..device()
        };
        assert_eq!(local_time(&dev, 5.0, 0.0, 1.0).unwrap(), 4.0);
        assert!(local_time(&dev, 0.0, 0.0, 1.0).is_err());

        let dev = DeviceProfile {
            d_loc_samples: 3.0,
            w_cycles_per_sample: 1.0,
            varpi: 1.0,
            ..device()
        };
        assert_eq!(local_energy(&dev, 2.0, 0.0, 1.0).unwrap(), 12.0);

        // Running at the deadline frequency gives the closed-form energy.
        let dev = device();
        let t_loc = 0.7;
        let f = training_cycles(&dev, 4.0, 1.0) / t_loc;
        let e = local_energy(&dev, f, 4.0, 1.0).unwrap();
        assert!(close(
            e,
            compute_energy_at_deadline(&dev, 4.0, 1.0, t_loc),
            1e-14
        ));
    }

    #[test]
    fn upload_and_synthesis() {
        assert!(close(upload_energy(0.1, 2.0), 0.2, 1e-15));
        assert_eq!(upload_energy(0.0, 5.0), 0.0);
        let mut p = unit_params();
        p.synth_rate_s_per_sample = 0.0646;
        assert!(close(synthesis_time(&[60.0, 40.0], &p), 6.46, 1e-14));
        assert_eq!(synthesis_time(&[0.0, 0.0], &p), 0.0);
        assert!(close(synthesis_time(&[120.0, 80.0], &p), 2.0 * 6.46, 1e-14));
    }
}
