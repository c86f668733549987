//! Multiple-access conventions shared by the solver, the baselines and the
//! validator.
//!
//! * `Noma`: superposition coding downlink, SIC uplink, everyone on the full
//!   band at the same time.
//! * `Fdma`: equal `B/K` sub-bands with `σ²B/K` noise each, no interference.
//! * `Tdma`: full band, one device at a time. Phase durations are sums of
//!   per-device slots and a device only spends upload energy in its own slot.

use serde::{Deserialize, Serialize};

use crate::model::{self, SicOrder, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Access {
    Noma,
    Fdma,
    Tdma,
}

/// How per-device download times combine into the synthetic data phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DownloadCoupling {
    /// All devices download at once; the slowest one sets the phase length.
    Concurrent,
    /// Devices download one after another.
    Sequential,
}

fn log2_rate(bandwidth: f64, snr: f64) -> f64 {
    crate::model::shannon_rate(bandwidth, snr)
}

impl Access {
    pub fn coupling(self) -> DownloadCoupling {
        match self {
            Access::Noma | Access::Fdma => DownloadCoupling::Concurrent,
            Access::Tdma => DownloadCoupling::Sequential,
        }
    }

    pub fn downlink_rates(self, p_down_w: &[f64], h: &[f64], params: &SystemParams) -> Vec<f64> {
        let k = p_down_w.len() as f64;
        let b = params.bandwidth_hz;
        let noise = params.noise_power_w();
        match self {
            Access::Noma => model::downlink_rates(p_down_w, h, params),
            Access::Fdma => p_down_w
                .iter()
                .zip(h)
                .map(|(&p, &hk)| log2_rate(b / k, hk * p * k / noise))
                .collect(),
            Access::Tdma => p_down_w
                .iter()
                .zip(h)
                .map(|(&p, &hk)| log2_rate(b, hk * p / noise))
                .collect(),
        }
    }

    pub fn uplink_rates(
        self,
        q_up_w: &[f64],
        g: &[f64],
        order: &SicOrder,
        params: &SystemParams,
    ) -> Vec<f64> {
        let k = q_up_w.len() as f64;
        let b = params.bandwidth_hz;
        let noise = params.noise_power_w();
        match self {
            Access::Noma => model::uplink_rates(q_up_w, g, order, params),
            Access::Fdma => q_up_w
                .iter()
                .zip(g)
                .map(|(&q, &gk)| log2_rate(b / k, gk * q * k / noise))
                .collect(),
            Access::Tdma => q_up_w
                .iter()
                .zip(g)
                .map(|(&q, &gk)| log2_rate(b, gk * q / noise))
                .collect(),
        }
    }

    /// Length of the synthetic data phase. Devices without synthetic data
    /// contribute nothing, whatever their rate.
    pub fn download_time(self, d_gen: &[f64], rates: &[f64], params: &SystemParams) -> f64 {
        let per_device = d_gen.iter().zip(rates).map(|(&d, &r)| {
            if d <= 0.0 {
                0.0
            } else if r <= 0.0 {
                f64::INFINITY
            } else {
                params.sample_size_bits * d / r
            }
        });
        match self.coupling() {
            DownloadCoupling::Concurrent => per_device.fold(0.0, f64::max),
            DownloadCoupling::Sequential => per_device.sum(),
        }
    }

    pub fn upload_time(self, rates: &[f64], params: &SystemParams) -> f64 {
        match self {
            Access::Noma | Access::Fdma => {
                let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
                params.model_size_bits / min_rate
            }
            Access::Tdma => rates.iter().map(|&r| params.model_size_bits / r).sum(),
        }
    }

    /// Per-round upload energy of every device.
    pub fn upload_energy(
        self,
        q_up_w: &[f64],
        rates: &[f64],
        t_up_s: f64,
        params: &SystemParams,
    ) -> Vec<f64> {
        match self {
            Access::Noma | Access::Fdma => q_up_w
                .iter()
                .map(|&q| model::upload_energy(q, t_up_s))
                .collect(),
            Access::Tdma => q_up_w
                .iter()
                .zip(rates)
                .map(|(&q, &r)| {
                    if q == 0.0 {
                        0.0
                    } else {
                        q * params.model_size_bits / r
                    }
                })
                .collect(),
        }
    }
}
