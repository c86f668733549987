//! Random drops: device positions, Rayleigh fading and per-device
//! constants.
//!
//! Every drop owns a ChaCha8 generator keyed by `(seed, drop)`; stream 0
//! feeds the system-wide draws and stream `i + 1` feeds device `i`. A drop
//! therefore looks the same at every sweep value (the swept quantity is
//! simply overwritten) and device `i` is the same device whatever `K` is.

use nomafl_core::{
    canonicalize, CanonicalInstance, ChannelState, DeviceProfile, Instance, SystemParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::config::{dbm_to_w, Range, ScenarioConfig, SweepParam};

/// SplitMix64 finalizer, used to spread `(seed, drop)` over the key space.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn drop_seed(seed: u64, drop_index: usize) -> u64 {
    mix(mix(seed) ^ drop_index as u64)
}

fn stream(seed: u64, drop_index: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(drop_seed(seed, drop_index));
    rng.set_stream(stream);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, r: Range) -> f64 {
    if r.min == r.max {
        // Consume a draw anyway so streams stay aligned across configs.
        let _: f64 = rng.gen();
        r.min
    } else {
        rng.gen_range(r.min..=r.max)
    }
}

/// `128.1 + 37.6 log10(d_km)` in dB.
pub fn path_loss_db(distance_m: f64) -> f64 {
    128.1 + 37.6 * (distance_m / 1000.0).log10()
}

pub fn mean_gain(distance_m: f64) -> f64 {
    10f64.powf(-path_loss_db(distance_m) / 10.0)
}

/// Unit-mean exponential fading draw.
pub fn fading(rng: &mut impl Rng) -> f64 {
    rng.sample(Exp1)
}

/// Uniform over the annulus area between the two radii.
fn distance(rng: &mut ChaCha8Rng, r: Range) -> f64 {
    let a = rng.gen_range(r.min * r.min..=r.max * r.max);
    a.sqrt()
}

/// Device count at the given sweep value.
pub fn k_at(config: &ScenarioConfig, sweep_value: f64) -> usize {
    match config.sweep.param {
        SweepParam::KDevices => sweep_value as usize,
        _ => config.k_devices,
    }
}

/// Draws one instance (in input order).
pub fn sample_raw(config: &ScenarioConfig, drop_index: usize, sweep_value: f64) -> Instance {
    let sys = &config.system;
    let dev_cfg = &config.devices;
    let mut global = stream(config.seed, drop_index, 0);
    let mut model_size_bits = uniform(&mut global, sys.model_size_bits);
    let mut dgen_total_samples = uniform(&mut global, sys.dgen_total_samples);

    let mut bs_power_dbm = sys.bs_power_dbm;
    let mut t_max_s = sys.t_max_s;
    let mut e_max_j = dev_cfg.e_max_j;
    match config.sweep.param {
        SweepParam::BsPowerDbm => bs_power_dbm = sweep_value,
        SweepParam::DgenTotalSamples => dgen_total_samples = sweep_value,
        SweepParam::TMaxS => t_max_s = sweep_value,
        SweepParam::ModelSizeBits => model_size_bits = sweep_value,
        SweepParam::EMaxJ => e_max_j = sweep_value,
        SweepParam::KDevices => {}
    }

    let params = SystemParams {
        bandwidth_hz: sys.bandwidth_hz,
        noise_psd_w_per_hz: dbm_to_w(sys.noise_dbm_per_hz),
        rounds_n: sys.rounds_n,
        t_max_s,
        tau_epochs: sys.tau_epochs,
        zeta: sys.zeta,
        alpha: sys.alpha,
        beta: sys.beta,
        gamma: sys.gamma,
        bs_power_w: dbm_to_w(bs_power_dbm),
        synth_rate_s_per_sample: sys.synth_rate_s_per_sample,
        sample_size_bits: sys.sample_size_bits,
        model_size_bits,
        dgen_total_samples,
    };

    let k = k_at(config, sweep_value);
    let mut devices = Vec::with_capacity(k);
    let mut h = Vec::with_capacity(k);
    let mut g = Vec::with_capacity(k);
    for i in 0..k {
        let mut rng = stream(config.seed, drop_index, i as u64 + 1);
        let d = distance(&mut rng, config.distance_range_m);
        let m = mean_gain(d);
        h.push(m * fading(&mut rng));
        g.push(m * fading(&mut rng));
        devices.push(DeviceProfile {
            d_loc_samples: uniform(&mut rng, dev_cfg.d_loc_samples),
            f_max_hz: uniform(&mut rng, dev_cfg.f_max_hz),
            q_max_w: dbm_to_w(dev_cfg.q_max_dbm),
            e_max_j,
            varpi: dev_cfg.varpi,
            w_cycles_per_sample: uniform(&mut rng, dev_cfg.w_cycles_per_sample),
            distance_m: d,
        });
    }
    Instance {
        params,
        devices,
        channel: ChannelState { h, g },
    }
}

/// Draws one instance and puts it in canonical order.
pub fn sample_instance(
    config: &ScenarioConfig,
    drop_index: usize,
    sweep_value: f64,
) -> CanonicalInstance {
    canonicalize(&sample_raw(config, drop_index, sweep_value)).expect("sampled instances are valid")
}
