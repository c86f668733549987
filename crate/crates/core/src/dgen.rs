//! Synthetic data split for fixed link rates.
//!
//! With powers and decoding order fixed, choosing `D^gen` is a small convex
//! program: minimize `Σ (D_loc + D_gen)^-β` subject to the synthesis budget,
//! the CPU frequency cap and the per-round energy budget of every device.
//! The `max_j D_j / R_j` download term is replaced by an epigraph variable
//! `s` (seconds) and the program is solved by a log-barrier interior-point
//! method with damped Newton steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::access::DownloadCoupling;
use crate::error::{Error, Result};
use crate::model::{DeviceProfile, SystemParams};

/// Stop once the barrier's duality-gap bound `m μ` falls below this.
const GAP_TOL: f64 = 1e-8;
/// Stop a centering stage once `λ² / 2` falls below this.
const NEWTON_TOL: f64 = 1e-8;
const MU_START: f64 = 1.0;
const MU_SHRINK: f64 = 10.0;
const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
/// Below this Newton decrement the full step is taken without the Armijo
/// test, which becomes meaningless once `F` stops changing in the last
/// representable digits.
const PURE_NEWTON_LAMBDA: f64 = 0.2;
const MAX_NEWTON_PER_STAGE: usize = 60;
const MIN_STEP: f64 = 1e-14;
/// Largest device count the grid oracle accepts.
pub const ORACLE_MAX_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgenSubproblem {
    /// Current downlink rates; devices with rate zero cannot receive data.
    pub downlink_rates: Vec<f64>,
    /// Per-round upload energy, fixed while this block is optimized.
    pub uplink_energy: Vec<f64>,
    /// `T^max/N − T^up − T^br`.
    pub t_loc_cap_s: f64,
    pub params: SystemParams,
    pub devices: Vec<DeviceProfile>,
    pub coupling: DownloadCoupling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgenSolution {
    pub d_gen: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
}

impl DgenSubproblem {
    pub fn k(&self) -> usize {
        self.devices.len()
    }

    pub fn objective(&self, d_gen: &[f64]) -> f64 {
        self.devices
            .iter()
            .zip(d_gen)
            .map(|(dev, &d)| (dev.d_loc_samples + d).powf(-self.params.beta))
            .sum()
    }

    /// Shortest download phase that delivers `d_gen`.
    pub fn download_time(&self, d_gen: &[f64]) -> f64 {
        let gamma = self.params.sample_size_bits;
        let per = d_gen.iter().zip(&self.downlink_rates).map(|(&d, &r)| {
            if d <= 0.0 {
                0.0
            } else if r <= 0.0 {
                f64::INFINITY
            } else {
                gamma * d / r
            }
        });
        match self.coupling {
            DownloadCoupling::Concurrent => per.fold(0.0, f64::max),
            DownloadCoupling::Sequential => per.sum(),
        }
    }

    fn t_loc_at(&self, sum_d: f64, s: f64) -> f64 {
        let n = self.params.rounds();
        self.t_loc_cap_s - self.params.synth_rate_s_per_sample * sum_d / n - s / n
    }

    /// Local training window left for `d_gen` with the shortest download.
    pub fn t_loc(&self, d_gen: &[f64]) -> f64 {
        self.t_loc_at(d_gen.iter().sum(), self.download_time(d_gen))
    }

    /// `sqrt(ϖ (wτ)^3 / (E^max − E^up))`: the energy budget reads
    /// `c_k (D_loc + D_gen)^1.5 ≤ T^loc`.
    fn energy_coeff(&self, k: usize) -> f64 {
        let dev = &self.devices[k];
        let wt = dev.w_cycles_per_sample * self.params.tau();
        (dev.varpi * wt.powi(3) / (dev.e_max_j - self.uplink_energy[k])).sqrt()
    }

    fn freq_coeff(&self, k: usize) -> f64 {
        let dev = &self.devices[k];
        dev.w_cycles_per_sample * self.params.tau() / dev.f_max_hz
    }

    /// Largest per-device requirement on `T^loc` (frequency or energy).
    fn required_t_loc(&self, k: usize, d: f64) -> f64 {
        let total = self.devices[k].d_loc_samples + d;
        (self.freq_coeff(k) * total).max(self.energy_coeff(k) * total.powf(1.5))
    }

    /// Constraint check with relative slack `tol`.
    pub fn is_feasible(&self, d_gen: &[f64], tol: f64) -> bool {
        if d_gen.len() != self.k() || d_gen.iter().any(|&d| !(d >= 0.0)) {
            return false;
        }
        let budget = self.params.dgen_total_samples;
        if d_gen.iter().sum::<f64>() > budget * (1.0 + tol) + 1e-12 {
            return false;
        }
        let t_loc = self.t_loc(d_gen);
        (0..self.k()).all(|k| self.required_t_loc(k, d_gen[k]) <= t_loc + tol * t_loc.abs())
    }

    fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.downlink_rates.len() != k || self.uplink_energy.len() != k {
            return Err(Error::InvalidInstance(
                "subproblem vector lengths differ".into(),
            ));
        }
        if self.params.rounds_n == 0 {
            return Err(Error::InvalidInstance("no training rounds".into()));
        }
        for (i, (dev, &e)) in self.devices.iter().zip(&self.uplink_energy).enumerate() {
            if !(dev.e_max_j - e > 0.0) {
                return Err(Error::InstanceInfeasible(format!(
                    "device {i} spends its whole energy budget uploading"
                )));
            }
        }
        if !self.is_feasible(&vec![0.0; k], 0.0) {
            return Err(Error::InstanceInfeasible(
                "no synthetic data is already infeasible".into(),
            ));
        }
        Ok(())
    }
}

/// Barrier state over the free devices (positive downlink rate) plus `s`.
struct Barrier<'a> {
    sub: &'a DgenSubproblem,
    free: Vec<usize>,
    /// Position of each device among the free variables.
    slot: Vec<Option<usize>>,
    /// Variable scaling: `x = scale ⊙ y`.
    scale: DVector<f64>,
    inv_rate: Vec<f64>,
    freq: Vec<f64>,
    energy: Vec<f64>,
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl<'a> Barrier<'a> {
    fn new(sub: &'a DgenSubproblem) -> Self {
        let free: Vec<usize> = (0..sub.k())
            .filter(|&k| sub.downlink_rates[k] > 0.0)
            .collect();
        let mut slot = vec![None; sub.k()];
        for (i, &k) in free.iter().enumerate() {
            slot[k] = Some(i);
        }
        let m = free.len();
        let mut scale = DVector::from_element(m + 1, sub.params.dgen_total_samples.max(1.0));
        scale[m] = sub.t_loc_cap_s;
        Self {
            inv_rate: free.iter().map(|&k| 1.0 / sub.downlink_rates[k]).collect(),
            freq: (0..sub.k()).map(|k| sub.freq_coeff(k)).collect(),
            energy: (0..sub.k()).map(|k| sub.energy_coeff(k)).collect(),
            sub,
            free,
            slot,
            scale,
        }
    }

    fn constraint_count(&self) -> usize {
        let m = self.free.len();
        let coupling = match self.sub.coupling {
            DownloadCoupling::Concurrent => m,
            DownloadCoupling::Sequential => 1,
        };
        m + 1 + coupling + 2 * self.sub.k()
    }

    fn to_x(&self, y: &DVector<f64>) -> DVector<f64> {
        y.component_mul(&self.scale)
    }

    /// Value, gradient and Hessian of `t f + φ` in scaled coordinates, or
    /// `None` outside the strict interior.
    fn eval(&self, y: &DVector<f64>, t: f64, derivatives: bool) -> Option<Eval> {
        let sub = self.sub;
        let p = &sub.params;
        let m = self.free.len();
        let n = m + 1;
        let x = self.to_x(y);
        let s = x[m];
        let gamma = p.sample_size_bits;
        let rounds = p.rounds();
        let syn = p.synth_rate_s_per_sample / rounds;

        let mut value = 0.0;
        let mut grad = DVector::zeros(if derivatives { n } else { 0 });
        let mut hess = DMatrix::zeros(
            if derivatives { n } else { 0 },
            if derivatives { n } else { 0 },
        );

        // Objective.
        for (i, &k) in self.free.iter().enumerate() {
            let total = sub.devices[k].d_loc_samples + x[i];
            if !(total > 0.0) {
                return None;
            }
            let b = p.beta;
            value += t * total.powf(-b);
            if derivatives {
                grad[i] += t * -b * total.powf(-b - 1.0);
                hess[(i, i)] += t * b * (b + 1.0) * total.powf(-b - 2.0);
            }
        }

        // Adds -ln(-g) for a constraint given by its value, a sparse
        // gradient and an optional own-diagonal curvature.
        let mut add = |g: f64,
                       dg: &[(usize, f64)],
                       dense_d: f64,
                       ds: f64,
                       curv: Option<(usize, f64)>|
         -> bool {
            if !(g < 0.0) {
                return false;
            }
            value -= (-g).ln();
            if derivatives {
                let mut v = DVector::from_element(n, dense_d);
                v[m] = ds;
                for &(i, a) in dg {
                    v[i] += a;
                }
                grad.axpy(1.0 / -g, &v, 1.0);
                hess.ger(1.0 / (g * g), &v, &v, 1.0);
                if let Some((i, c)) = curv {
                    hess[(i, i)] += c / -g;
                }
            }
            true
        };

        let sum_d: f64 = x.rows(0, m).sum();
        for i in 0..m {
            if !add(-x[i], &[(i, -1.0)], 0.0, 0.0, None) {
                return None;
            }
        }
        if !add(sum_d - p.dgen_total_samples, &[], 1.0, 0.0, None) {
            return None;
        }
        match sub.coupling {
            DownloadCoupling::Concurrent => {
                for i in 0..m {
                    let a = gamma * self.inv_rate[i];
                    if !add(a * x[i] - s, &[(i, a)], 0.0, -1.0, None) {
                        return None;
                    }
                }
            }
            DownloadCoupling::Sequential => {
                let coeffs: Vec<(usize, f64)> =
                    (0..m).map(|i| (i, gamma * self.inv_rate[i])).collect();
                let lhs: f64 = coeffs.iter().map(|&(i, a)| a * x[i]).sum();
                if !add(lhs - s, &coeffs, 0.0, -1.0, None) {
                    return None;
                }
            }
        }
        let t_loc = sub.t_loc_cap_s - syn * sum_d - s / rounds;
        for k in 0..sub.k() {
            let own = self.slot[k];
            let total = sub.devices[k].d_loc_samples + own.map_or(0.0, |i| x[i]);
            let own_grad = |a: f64| own.map(|i| vec![(i, a)]).unwrap_or_default();
            let g_freq = self.freq[k] * total - t_loc;
            if !add(g_freq, &own_grad(self.freq[k]), syn, 1.0 / rounds, None) {
                return None;
            }
            let c = self.energy[k];
            let g_energy = c * total.powf(1.5) - t_loc;
            let curv = own.map(|i| (i, 0.75 * c / total.sqrt()));
            if !add(
                g_energy,
                &own_grad(1.5 * c * total.sqrt()),
                syn,
                1.0 / rounds,
                curv,
            ) {
                return None;
            }
        }

        if derivatives {
            // Chain rule into scaled coordinates.
            grad.component_mul_assign(&self.scale);
            for j in 0..n {
                for i in 0..n {
                    hess[(i, j)] *= self.scale[i] * self.scale[j];
                }
            }
        }
        Some(Eval { value, grad, hess })
    }

    /// Strictly feasible start: a small uniform split with a download slot
    /// twice as long as needed, shrunk until every constraint has slack.
    fn start(&self) -> Option<DVector<f64>> {
        let sub = self.sub;
        let m = self.free.len();
        let mut delta = sub.params.dgen_total_samples / (2.0 * m as f64);
        for _ in 0..80 {
            let mut d = vec![0.0; sub.k()];
            for &k in &self.free {
                d[k] = delta;
            }
            let s = 2.0 * sub.download_time(&d);
            let mut x = DVector::from_element(m + 1, delta);
            x[m] = s;
            let y = x.component_div(&self.scale);
            if self.eval(&y, 1.0, false).is_some() {
                return Some(y);
            }
            delta *= 0.5;
        }
        None
    }
}

fn newton_direction(e: &Eval) -> DVector<f64> {
    let neg = -&e.grad;
    if let Some(ch) = e.hess.clone().cholesky() {
        return ch.solve(&neg);
    }
    // Tiny ridge for a numerically indefinite Hessian.
    let n = e.grad.len();
    let ridge = 1e-12 * e.hess.diagonal().amax().max(1.0);
    let shifted = &e.hess + DMatrix::identity(n, n) * ridge;
    match shifted.cholesky() {
        Some(ch) => ch.solve(&neg),
        None => neg,
    }
}

/// Solves the subproblem to the barrier's duality-gap tolerance.
///
/// `tol` is the relative slack accepted when verifying the answer.
pub fn solve_dgen(sub: &DgenSubproblem, tol: f64) -> Result<DgenSolution> {
    sub.validate()?;
    let k = sub.k();
    let zeros = |steps| DgenSolution {
        d_gen: vec![0.0; k],
        objective: sub.objective(&vec![0.0; k]),
        newton_steps: steps,
    };

    let barrier = Barrier::new(sub);
    if barrier.free.is_empty() || sub.params.dgen_total_samples <= 0.0 {
        return Ok(zeros(0));
    }
    let Some(mut y) = barrier.start() else {
        return Ok(zeros(0));
    };

    let m_constraints = barrier.constraint_count() as f64;
    let mut mu = MU_START;
    let mut steps = 0;
    loop {
        let t = 1.0 / mu;
        for _ in 0..MAX_NEWTON_PER_STAGE {
            let e = barrier.eval(&y, t, true).expect("iterate stays interior");
            let dir = newton_direction(&e);
            let slope = e.grad.dot(&dir);
            let lambda_sq = -slope;
            if !(lambda_sq > 2.0 * NEWTON_TOL) {
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            while step >= MIN_STEP {
                let cand = &y + &dir * step;
                if let Some(c) = barrier.eval(&cand, t, false) {
                    if lambda_sq.sqrt() < PURE_NEWTON_LAMBDA
                        || c.value <= e.value + ARMIJO_C * step * slope
                    {
                        accepted = Some(cand);
                        break;
                    }
                }
                step *= BACKTRACK;
            }
            steps += 1;
            match accepted {
                Some(next) => y = next,
                None => break,
            }
        }
        if m_constraints * mu < GAP_TOL {
            break;
        }
        mu /= MU_SHRINK;
    }

    let x = barrier.to_x(&y);
    let mut d_gen = vec![0.0; k];
    for (i, &dev) in barrier.free.iter().enumerate() {
        d_gen[dev] = x[i].max(0.0);
    }
    // Guard against round-off at the boundary: the segment towards zero is
    // feasible by convexity, so pull back until the check passes.
    let scaled = |a: f64| d_gen.iter().map(|d| d * a).collect::<Vec<_>>();
    let shrink = if sub.is_feasible(&d_gen, tol) {
        1.0
    } else {
        crate::bisection::max_feasible(
            0.0,
            1.0,
            60,
            |a| sub.is_feasible(&scaled(a), tol),
            |_, _| true,
        )
        .lo
    };
    let d_gen = scaled(shrink);
    Ok(DgenSolution {
        objective: sub.objective(&d_gen),
        d_gen,
        newton_steps: steps,
    })
}

/// Exhaustive feasible-grid minimization over `[0, D^gen_total]^K`; a test
/// oracle for [`solve_dgen`].
pub fn dgen_oracle_grid(sub: &DgenSubproblem, grid_points_per_dim: usize) -> Result<DgenSolution> {
    let k = sub.k();
    if k > ORACLE_MAX_K {
        return Err(Error::OracleRefused(format!(
            "{k} devices exceed the grid limit of {ORACLE_MAX_K}"
        )));
    }
    if grid_points_per_dim < 2 {
        return Err(Error::OracleRefused(
            "grid needs at least two points per axis".into(),
        ));
    }
    sub.validate()?;
    let budget = sub.params.dgen_total_samples;
    let step = budget / (grid_points_per_dim - 1) as f64;
    let axis = |dev: usize| {
        if sub.downlink_rates[dev] > 0.0 && budget > 0.0 {
            grid_points_per_dim
        } else {
            1
        }
    };
    let dims: Vec<usize> = (0..k).map(axis).collect();
    let total: usize = dims.iter().product();

    let mut best = (f64::INFINITY, vec![0.0; k]);
    let mut d = vec![0.0; k];
    for mut idx in 0..total {
        for (dev, &len) in dims.iter().enumerate() {
            d[dev] = (idx % len) as f64 * step;
            idx /= len;
        }
        if d.iter().sum::<f64>() > budget || !sub.is_feasible(&d, 0.0) {
            continue;
        }
        let obj = sub.objective(&d);
        if obj < best.0 {
            best = (obj, d.clone());
        }
    }
    Ok(DgenSolution {
        objective: best.0,
        d_gen: best.1,
        newton_steps: 0,
    })
}
