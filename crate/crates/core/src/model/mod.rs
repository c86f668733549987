//! Scenario types and the closed-form link, compute and learning formulas.
//!
//! Devices are always handled in canonical order: ascending downlink gain,
//! so device 0 is the weakest downlink user and decodes nobody's message
//! in downlink SIC.

mod feasibility;
mod formulas;

pub use feasibility::{check_feasible, check_feasible_with, Constraint, Violation};
pub use formulas::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative bump applied to a duplicated downlink gain so that the
/// canonical ordering is strict.
pub const TIE_PERTURBATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub bandwidth_hz: f64,
    pub noise_psd_w_per_hz: f64,
    pub rounds_n: u32,
    pub t_max_s: f64,
    pub tau_epochs: u32,
    pub zeta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub bs_power_w: f64,
    pub synth_rate_s_per_sample: f64,
    pub sample_size_bits: f64,
    pub model_size_bits: f64,
    pub dgen_total_samples: f64,
}

impl SystemParams {
    /// Noise power over the full band, `σ²B`.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_psd_w_per_hz * self.bandwidth_hz
    }

    pub fn tau(&self) -> f64 {
        f64::from(self.tau_epochs)
    }

    pub fn rounds(&self) -> f64 {
        f64::from(self.rounds_n)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_psd_w_per_hz", self.noise_psd_w_per_hz),
            ("t_max_s", self.t_max_s),
            ("tau_epochs", self.tau()),
            ("zeta", self.zeta),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("bs_power_w", self.bs_power_w),
            ("synth_rate_s_per_sample", self.synth_rate_s_per_sample),
            ("sample_size_bits", self.sample_size_bits),
            ("model_size_bits", self.model_size_bits),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        // A zero synthesis budget is the "no synthetic data" configuration.
        if !(self.dgen_total_samples.is_finite() && self.dgen_total_samples >= 0.0) {
            return Err(Error::InvalidInstance(format!(
                "dgen_total_samples must be non-negative, got {}",
                self.dgen_total_samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub d_loc_samples: f64,
    pub f_max_hz: f64,
    pub q_max_w: f64,
    pub e_max_j: f64,
    /// Effective switched capacitance of the processor.
    pub varpi: f64,
    pub w_cycles_per_sample: f64,
    pub distance_m: f64,
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("d_loc_samples", self.d_loc_samples),
            ("f_max_hz", self.f_max_hz),
            ("q_max_w", self.q_max_w),
            ("e_max_j", self.e_max_j),
            ("varpi", self.varpi),
            ("w_cycles_per_sample", self.w_cycles_per_sample),
            ("distance_m", self.distance_m),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "device {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Linear power gains, downlink `h` and uplink `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub h: Vec<f64>,
    pub g: Vec<f64>,
}

/// A scenario as read from disk or sampled, in arbitrary device order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub params: SystemParams,
    pub devices: Vec<DeviceProfile>,
    pub channel: ChannelState,
}

/// An instance re-indexed by ascending downlink gain.
///
/// `index_map[i]` is the original index of canonical device `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalInstance {
    pub params: SystemParams,
    pub devices: Vec<DeviceProfile>,
    pub channel: ChannelState,
    pub index_map: Vec<usize>,
}

impl CanonicalInstance {
    pub fn k(&self) -> usize {
        self.devices.len()
    }

    /// Reorders a per-device vector from canonical back to input order.
    pub fn to_original_order<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let mut out: Vec<Option<T>> = vec![None; values.len()];
        for (i, &orig) in self.index_map.iter().enumerate() {
            out[orig] = Some(values[i].clone());
        }
        out.into_iter()
            .map(|v| v.expect("index map is a permutation"))
            .collect()
    }

    /// A copy with a different parameter set (devices and channel untouched).
    pub fn with_params(&self, params: SystemParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }
}

/// Sorts devices by ascending downlink gain and makes the order strict.
pub fn canonicalize(instance: &Instance) -> Result<CanonicalInstance> {
    let k = instance.devices.len();
    if k == 0 {
        return Err(Error::InvalidInstance("empty device list".into()));
    }
    if instance.channel.h.len() != k || instance.channel.g.len() != k {
        return Err(Error::InvalidInstance(format!(
            "channel vectors have lengths {}/{} for {} devices",
            instance.channel.h.len(),
            instance.channel.g.len(),
            k
        )));
    }
    instance.params.validate()?;
    for d in &instance.devices {
        d.validate()?;
    }
    for (&h, &g) in instance.channel.h.iter().zip(&instance.channel.g) {
        if !(h.is_finite() && h > 0.0 && g.is_finite() && g > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "channel gains must be positive, got h={h}, g={g}"
            )));
        }
    }

    let mut index_map: Vec<usize> = (0..k).collect();
    // Stable sort keeps equal gains in input order.
    index_map.sort_by(|&a, &b| instance.channel.h[a].total_cmp(&instance.channel.h[b]));

    let mut h: Vec<f64> = index_map.iter().map(|&i| instance.channel.h[i]).collect();
    for i in 1..k {
        if h[i] <= h[i - 1] {
            h[i] = h[i - 1] * (1.0 + TIE_PERTURBATION);
        }
    }
    let g = index_map.iter().map(|&i| instance.channel.g[i]).collect();
    let devices = index_map
        .iter()
        .map(|&i| instance.devices[i].clone())
        .collect();

    Ok(CanonicalInstance {
        params: instance.params.clone(),
        devices,
        channel: ChannelState { h, g },
        index_map,
    })
}

/// SIC decoding order at the base station: `position(k)` is the decoding
/// position of device `k`, 0 being decoded first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SicOrder(Vec<usize>);

impl SicOrder {
    pub fn identity(k: usize) -> Self {
        Self((0..k).collect())
    }

    /// Builds the order from the sequence of devices in decoding order.
    pub fn from_sequence(sequence: &[usize]) -> Self {
        let mut pos = vec![0; sequence.len()];
        for (p, &dev) in sequence.iter().enumerate() {
            pos[dev] = p;
        }
        Self(pos)
    }

    pub fn from_positions(positions: Vec<usize>) -> Result<Self> {
        let order = Self(positions);
        if !order.is_valid() {
            return Err(Error::InvalidInstance(format!(
                "{:?} is not a permutation",
                order.0
            )));
        }
        Ok(order)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, device: usize) -> usize {
        self.0[device]
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    /// Device indices in decoding order.
    pub fn sequence(&self) -> Vec<usize> {
        let mut seq = vec![0; self.0.len()];
        for (dev, &p) in self.0.iter().enumerate() {
            seq[p] = dev;
        }
        seq
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        for &p in &self.0 {
            if p >= seen.len() || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        true
    }
}

/// The full decision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub d_gen: Vec<f64>,
    pub t_down_s: f64,
    pub t_br_s: f64,
    pub t_loc_s: f64,
    pub t_up_s: f64,
    pub p_down_w: Vec<f64>,
    pub q_up_w: Vec<f64>,
    pub sic_order: SicOrder,
    pub freq_hz: Vec<f64>,
}

impl Allocation {
    pub fn zeros(k: usize) -> Self {
        Self {
            d_gen: vec![0.0; k],
            t_down_s: 0.0,
            t_br_s: 0.0,
            t_loc_s: 0.0,
            t_up_s: 0.0,
            p_down_w: vec![0.0; k],
            q_up_w: vec![0.0; k],
            sic_order: SicOrder::identity(k),
            freq_hz: vec![0.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.d_gen.len()
    }
}

/// Scheme identifiers in the fixed order used for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    NomaAigc,
    FdmaAigc,
    TdmaAigc,
    NomaNoAigc,
    FdmaNoAigc,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::NomaAigc,
        SchemeId::FdmaAigc,
        SchemeId::TdmaAigc,
        SchemeId::NomaNoAigc,
        SchemeId::FdmaNoAigc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::NomaAigc => "noma_aigc",
            SchemeId::FdmaAigc => "fdma_aigc",
            SchemeId::TdmaAigc => "tdma_aigc",
            SchemeId::NomaNoAigc => "noma_no_aigc",
            SchemeId::FdmaNoAigc => "fdma_no_aigc",
        }
    }

    pub fn uses_synthetic_data(self) -> bool {
        matches!(
            self,
            SchemeId::NomaAigc | SchemeId::FdmaAigc | SchemeId::TdmaAigc
        )
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidInstance(format!("unknown scheme '{s}'")))
    }
}

/// Outcome of one scheme on one instance. Per-device vectors are in
/// canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: SchemeId,
    pub feasible: bool,
    pub learning_error: f64,
    /// Sum of `(D_loc + D_gen)^-β`, one entry for the starting point and
    /// one per outer iteration.
    pub objective_trace: Vec<f64>,
    pub allocation: Allocation,
    pub iterations: usize,
    pub per_device_energy_j: Vec<f64>,
    /// Human readable description of how the scheme was built.
    pub construction: String,
}

impl SolveReport {
    pub fn infeasible(scheme: SchemeId, k: usize, construction: &str) -> Self {
        Self {
            scheme,
            feasible: false,
            learning_error: 1.0,
            objective_trace: Vec::new(),
            allocation: Allocation::zeros(k),
            iterations: 0,
            per_device_energy_j: vec![0.0; k],
            construction: construction.to_string(),
        }
    }

    pub fn mean_energy_j(&self) -> f64 {
        if self.per_device_energy_j.is_empty() {
            return 0.0;
        }
        self.per_device_energy_j.iter().sum::<f64>() / self.per_device_energy_j.len() as f64
    }
}
