#![allow(dead_code)]

use nomafl_core::{
    canonicalize, CanonicalInstance, ChannelState, DeviceProfile, Instance, SystemParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn params(rng: &mut impl Rng) -> SystemParams {
    SystemParams {
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
        model_size_bits: rng.gen_range(1.5e6..2.5e6),
        dgen_total_samples: rng.gen_range(3000.0..5000.0),
    }
}

fn gain(rng: &mut impl Rng, distance_m: f64) -> f64 {
    let pl = 128.1 + 37.6 * (distance_m / 1000.0).log10();
    10f64.powf(-pl / 10.0) * -(1.0 - rng.gen::<f64>()).ln()
}

/// A drop in the default simulation setting.
pub fn instance(seed: u64, k: usize) -> CanonicalInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = params(&mut rng);
    let (mut devices, mut h, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..k {
        let d = rng.gen_range(150f64.powi(2)..300f64.powi(2)).sqrt();
        h.push(gain(&mut rng, d));
        g.push(gain(&mut rng, d));
        devices.push(DeviceProfile {
            d_loc_samples: rng.gen_range(300.0..500.0),
            f_max_hz: rng.gen_range(1e9..2e9),
            q_max_w: 0.1,
            e_max_j: 1.2,
            varpi: 1e-27,
            w_cycles_per_sample: rng.gen_range(1e6..2e6),
            distance_m: d,
        });
    }
    canonicalize(&Instance {
        params,
        devices,
        channel: ChannelState { h, g },
    })
    .unwrap()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}
