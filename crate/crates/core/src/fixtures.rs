//! Small hand-checkable instances shared by unit tests.

use crate::model::{
    canonicalize, CanonicalInstance, ChannelState, DeviceProfile, Instance, SystemParams,
};

/// Unit bandwidth and unit noise power so rates are plain `log2` values.
pub fn unit_params() -> SystemParams {
    SystemParams {
        bandwidth_hz: 1.0,
        noise_psd_w_per_hz: 1.0,
        rounds_n: 10,
        t_max_s: 100.0,
        tau_epochs: 1,
        zeta: 50.0,
        alpha: 3.819,
        beta: 0.198,
        gamma: 0.231,
        bs_power_w: 3.0,
        synth_rate_s_per_sample: 0.1,
        sample_size_bits: 1.0,
        model_size_bits: 4.0,
        dgen_total_samples: 10.0,
    }
}

pub fn device() -> DeviceProfile {
    DeviceProfile {
        d_loc_samples: 10.0,
        f_max_hz: 100.0,
        q_max_w: 1.0,
        e_max_j: 10.0,
        varpi: 1e-5,
        w_cycles_per_sample: 2.0,
        distance_m: 200.0,
    }
}

pub fn canonical(
    params: SystemParams,
    devices: Vec<DeviceProfile>,
    h: Vec<f64>,
    g: Vec<f64>,
) -> CanonicalInstance {
    canonicalize(&Instance {
        params,
        devices,
        channel: ChannelState { h, g },
    })
    .unwrap()
}

/// Scenario with realistic magnitudes (1 MHz, -160 dBm/Hz, 35 dBm BS,
/// 20 dBm devices) and deterministic, spread-out channel gains.
pub fn realistic(k: usize) -> CanonicalInstance {
    let params = SystemParams {
        bandwidth_hz: 1e6,
        noise_psd_w_per_hz: 1e-19,
        rounds_n: 100,
        t_max_s: 900.0,
        tau_epochs: 1,
        zeta: 50.0,
        alpha: 3.819,
        beta: 0.198,
        gamma: 0.231,
        bs_power_w: 10f64.powf(0.5),
        synth_rate_s_per_sample: 0.0646,
        sample_size_bits: 2e4,
        model_size_bits: 2e6,
        dgen_total_samples: 4000.0,
    };
    let devices = (0..k)
        .map(|i| {
            let x = (i as f64 * 0.618_033_988_75).fract();
            DeviceProfile {
                d_loc_samples: 300.0 + 200.0 * x,
                f_max_hz: 1e9 + 1e9 * (1.0 - x),
                q_max_w: 0.1,
                e_max_j: 1.2,
                varpi: 1e-27,
                w_cycles_per_sample: 1e6 + 1e6 * ((i as f64 * 0.414_213_562).fract()),
                distance_m: 150.0 + 150.0 * x,
            }
        })
        .collect::<Vec<_>>();
    let gain = |i: usize, salt: f64| {
        let d_km = devices[i].distance_m / 1000.0;
        let pl_db = 128.1 + 37.6 * d_km.log10();
        let fade = 0.2 + 1.6 * ((i as f64 + salt) * 0.754_877_666).fract();
        10f64.powf(-pl_db / 10.0) * fade
    };
    let h = (0..k).map(|i| gain(i, 0.0)).collect();
    let g = (0..k).map(|i| gain(i, 0.5)).collect();
    canonical(params, devices.clone(), h, g)
}
