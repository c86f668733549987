//! Block coordinate descent over the two subproblems, plus the baselines.
//!
//! One iteration:
//! 1. synthetic data split for the current rates ([`crate::dgen`]), then
//!    the closed-form time shares;
//! 2. downlink powers for the new split and uplink powers/decoding order
//!    under the new energy caps, then the time shares again.
//!
//! Each block keeps the previous iterate feasible for the next one, so the
//! objective never increases. The FDMA and TDMA baselines run the same loop
//! with their own rate, timing and energy rules; the no-synthetic-data
//! schemes pin `D^gen = 0` and only settle the links.

use serde::{Deserialize, Serialize};

use crate::access::Access;
use crate::bisection::{max_feasible, rel_width};
use crate::dgen::{solve_dgen, DgenSubproblem};
use crate::downlink::solve_downlink_with;
use crate::error::{Error, Result};
use crate::model::{
    check_feasible_with, equivalent_objective, learning_error_from_objective, local_energy,
    shannon_rate, Allocation, CanonicalInstance, SchemeId, SicOrder, SolveReport,
};
use crate::schedule::{optimal_frequencies, q_max_vector, time_allocation_with, TimeAllocation};
use crate::uplink::solve_uplink;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcdOptions {
    /// Relative objective (and upload time) change that ends the loop.
    pub tol: f64,
    pub max_iters: usize,
    /// Relative bracket width of the power bisections.
    pub bisection_tol: f64,
    /// Relative slack of the final feasibility check.
    pub check_tol: f64,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 50,
            bisection_tol: 1e-9,
            check_tol: 1e-6,
        }
    }
}

/// Starting split as a share of the largest feasible uniform one.
const INIT_FRACTION: f64 = 0.5;
const INIT_BISECTIONS: usize = 40;
const INIT_TOL: f64 = 1e-3;
const CAP_FIXED_POINT_ITERS: usize = 200;
const CAP_FIXED_POINT_TOL: f64 = 1e-13;
/// Slack used when accepting an intermediate iterate.
const ITERATE_CHECK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Scheme {
    id: SchemeId,
    access: Access,
    synthetic: bool,
}

impl Scheme {
    fn of(id: SchemeId) -> Self {
        let access = match id {
            SchemeId::NomaAigc | SchemeId::NomaNoAigc => Access::Noma,
            SchemeId::FdmaAigc | SchemeId::FdmaNoAigc => Access::Fdma,
            SchemeId::TdmaAigc => Access::Tdma,
        };
        Self {
            id,
            access,
            synthetic: id.uses_synthetic_data(),
        }
    }

    fn construction(self) -> &'static str {
        match self.id {
            SchemeId::NomaAigc => {
                "NOMA downlink with max-min rate-per-sample superposition powers; SIC uplink in descending \
                 received-power order with equal-rate powers; synthetic data by interior-point method; \
                 block coordinate descent"
            }
            SchemeId::FdmaAigc => {
                "equal B/K sub-bands with noise sigma^2 B/K; downlink powers by max-min rate-per-sample \
                 bisection under the total power budget; uplink at min(Q, energy cap) on own sub-band; \
                 upload time from the slowest device; block coordinate descent"
            }
            SchemeId::TdmaAigc => {
                "full band in consecutive slots; downlink slots at full BS power sized to each device's \
                 synthetic data; uplink slots at the largest power the energy budget allows; phase times \
                 are slot sums; block coordinate descent"
            }
            SchemeId::NomaNoAigc => "no synthetic data; NOMA broadcast and SIC uplink as in the NOMA scheme",
            SchemeId::FdmaNoAigc => "no synthetic data; equal B/K sub-band uplink at min(Q, energy cap)",
        }
    }
}

/// A consistent iterate: rates follow from the powers and the time shares
/// from the rates.
#[derive(Debug, Clone)]
struct State {
    d_gen: Vec<f64>,
    p: Vec<f64>,
    down_rates: Vec<f64>,
    q: Vec<f64>,
    order: SicOrder,
    up_rates: Vec<f64>,
    time: TimeAllocation,
}

impl State {
    fn allocation(&self, inst: &CanonicalInstance) -> Result<Allocation> {
        let freq_hz = optimal_frequencies(
            &self.d_gen,
            self.time.t_loc_s,
            &inst.devices,
            inst.params.tau(),
        )?;
        Ok(Allocation {
            d_gen: self.d_gen.clone(),
            t_down_s: self.time.t_down_s,
            t_br_s: self.time.t_br_s,
            t_loc_s: self.time.t_loc_s,
            t_up_s: self.time.t_up_s,
            p_down_w: self.p.clone(),
            q_up_w: self.q.clone(),
            sic_order: self.order.clone(),
            freq_hz,
        })
    }
}

struct Engine<'a> {
    inst: &'a CanonicalInstance,
    scheme: Scheme,
    opts: BcdOptions,
}

impl<'a> Engine<'a> {
    fn access(&self) -> Access {
        self.scheme.access
    }

    fn downlink(&self, d_gen: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let inst = self.inst;
        let sol = solve_downlink_with(
            self.access(),
            d_gen,
            &inst.channel.h,
            &inst.params,
            self.opts.bisection_tol,
        );
        let rates = self
            .access()
            .downlink_rates(&sol.p_down_w, &inst.channel.h, &inst.params);
        (sol.p_down_w, rates)
    }

    fn times(&self, d_gen: &[f64], down_rates: &[f64], up_rates: &[f64]) -> Result<TimeAllocation> {
        let inst = self.inst;
        time_allocation_with(
            self.access(),
            d_gen,
            down_rates,
            up_rates,
            &inst.params,
            &inst.channel.h,
        )
    }

    fn up_rates(&self, q: &[f64], order: &SicOrder) -> Vec<f64> {
        self.access()
            .uplink_rates(q, &self.inst.channel.g, order, &self.inst.params)
    }

    /// Uplink powers and order given the per-device power caps.
    fn uplink_from_caps(&self, caps: &[f64]) -> Result<(Vec<f64>, SicOrder, Vec<f64>)> {
        let inst = self.inst;
        let k = inst.k();
        match self.access() {
            Access::Noma => {
                let sol =
                    solve_uplink(&inst.channel.g, caps, &inst.params, self.opts.bisection_tol)?;
                let rates = self.up_rates(&sol.q_up_w, &sol.sic_order);
                Ok((sol.q_up_w, sol.sic_order, rates))
            }
            Access::Fdma | Access::Tdma => {
                let order = SicOrder::identity(k);
                let rates = self.up_rates(caps, &order);
                Ok((caps.to_vec(), order, rates))
            }
        }
    }

    /// Power caps implied by the energy budgets at the given time shares.
    fn caps(&self, d_gen: &[f64], time: &TimeAllocation) -> Result<Vec<f64>> {
        let inst = self.inst;
        match self.access() {
            Access::Noma | Access::Fdma => {
                q_max_vector(d_gen, time, &inst.devices, inst.params.tau())
            }
            Access::Tdma => (0..inst.k())
                .map(|k| self.tdma_cap(k, d_gen[k], time))
                .collect(),
        }
    }

    /// Largest TDMA uplink power whose slot energy fits the budget. The slot
    /// energy `q D^mod / R(q)` increases with `q`, so this is a bisection.
    fn tdma_cap(&self, k: usize, d_gen: f64, time: &TimeAllocation) -> Result<f64> {
        let inst = self.inst;
        let dev = &inst.devices[k];
        let params = &inst.params;
        let compute =
            crate::model::compute_energy_at_deadline(dev, d_gen, params.tau(), time.t_loc_s);
        let available = dev.e_max_j - compute;
        let g = inst.channel.g[k];
        let slot_energy = |q: f64| {
            q * params.model_size_bits
                / shannon_rate(params.bandwidth_hz, g * q / params.noise_power_w())
        };
        if slot_energy(dev.q_max_w) <= available {
            return Ok(dev.q_max_w);
        }
        // Energy of an infinitesimal-power slot.
        let floor = params.model_size_bits * params.noise_power_w() * std::f64::consts::LN_2
            / (params.bandwidth_hz * g);
        if !(available > floor) {
            return Err(Error::EnergyInfeasible {
                device: k,
                q_max_w: 0.0,
            });
        }
        let b = crate::bisection::max_feasible(
            0.0,
            dev.q_max_w,
            200,
            |q| slot_energy(q) <= available,
            |lo, hi| crate::bisection::rel_width(lo, hi) >= 1e-13,
        );
        if b.lo > 0.0 {
            Ok(b.lo)
        } else {
            Err(Error::EnergyInfeasible {
                device: k,
                q_max_w: 0.0,
            })
        }
    }

    fn upload_energy(&self, s: &State) -> Vec<f64> {
        self.access()
            .upload_energy(&s.q, &s.up_rates, s.time.t_up_s, &self.inst.params)
    }

    fn check(&self, s: &State, tol: f64) -> Result<Allocation> {
        let alloc = s.allocation(self.inst)?;
        let violations = check_feasible_with(self.inst, &alloc, self.access(), tol);
        match violations.first() {
            None => Ok(alloc),
            Some(v) => Err(Error::InstanceInfeasible(format!(
                "{:?} violated (device {:?}, residual {:.3e})",
                v.constraint, v.device, v.residual
            ))),
        }
    }

    /// Links and times for a fixed split: start from full device power and
    /// iterate the energy caps to a fixed point.
    fn settle(&self, d_gen: &[f64]) -> Result<State> {
        let inst = self.inst;
        let (p, down_rates) = self.downlink(d_gen);
        let mut caps: Vec<f64> = inst.devices.iter().map(|d| d.q_max_w).collect();
        let mut state = None;
        for _ in 0..CAP_FIXED_POINT_ITERS {
            let (q, order, up_rates) = self.uplink_from_caps(&caps)?;
            let time = self.times(d_gen, &down_rates, &up_rates)?;
            let next = self.caps(d_gen, &time)?;
            let settled = state.is_some()
                && next
                    .iter()
                    .zip(&caps)
                    .all(|(a, b)| (a - b).abs() <= CAP_FIXED_POINT_TOL * b.abs());
            state = Some(State {
                d_gen: d_gen.to_vec(),
                p: p.clone(),
                down_rates: down_rates.clone(),
                q,
                order,
                up_rates,
                time,
            });
            if settled {
                break;
            }
            caps = next;
        }
        let state = state.expect("at least one pass");
        self.check(&state, ITERATE_CHECK_TOL)?;
        Ok(state)
    }

    /// Upper end of the uniform starting split: the budget share, or what
    /// the slowest processor could train with the whole per-round window.
    fn initial_ceiling(&self) -> f64 {
        let inst = self.inst;
        let k = inst.k();
        let params = &inst.params;
        if !self.scheme.synthetic || params.dgen_total_samples <= 0.0 {
            return 0.0;
        }
        let caps: Vec<f64> = inst.devices.iter().map(|d| d.q_max_w).collect();
        let window = self
            .uplink_from_caps(&caps)
            .and_then(|(_, _, up)| self.times(&vec![0.0; k], &vec![0.0; k], &up))
            .map(|t| t.t_loc_cap_s)
            .unwrap_or(0.0);
        let frequency_slack = inst
            .devices
            .iter()
            .map(|d| d.f_max_hz * window / (d.w_cycles_per_sample * params.tau()) - d.d_loc_samples)
            .fold(f64::INFINITY, f64::min);
        (params.dgen_total_samples / k as f64)
            .min(frequency_slack)
            .max(0.0)
    }

    /// Starts from `INIT_FRACTION` of the largest feasible uniform split.
    /// The start only grows with the budget, so a larger budget never
    /// begins from a worse point.
    fn initialize(&self) -> Result<State> {
        let inst = self.inst;
        if inst.params.rounds_n == 0 {
            return Err(Error::InstanceInfeasible("no training rounds".into()));
        }
        let k = inst.k();
        let zero = self.settle(&vec![0.0; k])?;
        let ceiling = self.initial_ceiling();
        if ceiling <= 0.0 {
            return Ok(zero);
        }
        let uniform = |d: f64| vec![d; k];
        let largest = if self.settle(&uniform(ceiling)).is_ok() {
            ceiling
        } else {
            max_feasible(
                0.0,
                ceiling,
                INIT_BISECTIONS,
                |d| self.settle(&uniform(d)).is_ok(),
                |lo, hi| rel_width(lo, hi) >= INIT_TOL,
            )
            .lo
        };
        let d = INIT_FRACTION * largest;
        if d <= 0.0 {
            return Ok(zero);
        }
        Ok(self.settle(&uniform(d)).unwrap_or(zero))
    }

    fn objective(&self, d_gen: &[f64]) -> f64 {
        equivalent_objective(d_gen, &self.inst.devices, &self.inst.params)
            .expect("non-negative split")
    }

    /// One outer iteration; `None` when no consistent improvement exists.
    fn step(&self, s: &State, current: f64) -> Option<State> {
        let inst = self.inst;
        let sub = DgenSubproblem {
            downlink_rates: s.down_rates.clone(),
            uplink_energy: self.upload_energy(s),
            t_loc_cap_s: s.time.t_loc_cap_s,
            params: inst.params.clone(),
            devices: inst.devices.clone(),
            coupling: self.access().coupling(),
        };
        let d_gen = match solve_dgen(&sub, ITERATE_CHECK_TOL) {
            Ok(sol) if sol.objective <= current => sol.d_gen,
            _ => s.d_gen.clone(),
        };

        let (p, down_rates) = self.downlink(&d_gen);
        let time = self.times(&d_gen, &down_rates, &s.up_rates).ok()?;
        let caps = self.caps(&d_gen, &time).ok()?;
        let (q, order, up_rates) = self.uplink_from_caps(&caps).ok()?;
        let time = self.times(&d_gen, &down_rates, &up_rates).ok()?;
        let next = State {
            d_gen,
            p,
            down_rates,
            q,
            order,
            up_rates,
            time,
        };
        self.check(&next, ITERATE_CHECK_TOL).ok()?;
        Some(next)
    }

    fn run(&self) -> SolveReport {
        let inst = self.inst;
        let k = inst.k();
        let construction = self.scheme.construction();
        let mut state = match self.initialize() {
            Ok(s) => s,
            Err(e) => {
                return SolveReport::infeasible(
                    self.scheme.id,
                    k,
                    &format!("{construction}; infeasible: {e}"),
                )
            }
        };
        let mut objective = self.objective(&state.d_gen);
        let mut trace = vec![objective];
        let mut iterations = 0;

        if self.scheme.synthetic {
            while iterations < self.opts.max_iters {
                iterations += 1;
                let Some(next) = self.step(&state, objective) else {
                    break;
                };
                let next_objective = self.objective(&next.d_gen);
                let obj_change = (objective - next_objective).abs() / objective.abs();
                let up_change = (state.time.t_up_s - next.time.t_up_s).abs() / state.time.t_up_s;
                objective = next_objective;
                trace.push(objective);
                state = next;
                if obj_change < self.opts.tol && up_change < self.opts.tol {
                    break;
                }
            }
        }

        let alloc = match self.check(&state, self.opts.check_tol) {
            Ok(a) => a,
            Err(e) => {
                return SolveReport::infeasible(
                    self.scheme.id,
                    k,
                    &format!("{construction}; infeasible: {e}"),
                )
            }
        };
        let tau = inst.params.tau();
        let up_energy = self.upload_energy(&state);
        let per_device_energy_j = inst
            .devices
            .iter()
            .enumerate()
            .map(|(i, dev)| {
                local_energy(dev, alloc.freq_hz[i], alloc.d_gen[i], tau).unwrap_or(f64::INFINITY)
                    + up_energy[i]
            })
            .collect();
        SolveReport {
            scheme: self.scheme.id,
            feasible: true,
            learning_error: learning_error_from_objective(objective, k, &inst.params),
            objective_trace: trace,
            allocation: alloc,
            iterations,
            per_device_energy_j,
            construction: construction.to_string(),
        }
    }
}

/// Deterministic starting point of the NOMA scheme.
pub fn initialize(instance: &CanonicalInstance) -> Result<Allocation> {
    let engine = Engine {
        inst: instance,
        scheme: Scheme::of(SchemeId::NomaAigc),
        opts: BcdOptions::default(),
    };
    engine.initialize()?.allocation(instance)
}

/// The proposed NOMA scheme with synthetic data.
pub fn bcd_solve(instance: &CanonicalInstance, opts: BcdOptions) -> SolveReport {
    run_scheme_with(instance, SchemeId::NomaAigc, opts)
}

pub fn run_scheme(instance: &CanonicalInstance, scheme: SchemeId) -> SolveReport {
    run_scheme_with(instance, scheme, BcdOptions::default())
}

pub fn run_scheme_with(
    instance: &CanonicalInstance,
    scheme: SchemeId,
    opts: BcdOptions,
) -> SolveReport {
    Engine {
        inst: instance,
        scheme: Scheme::of(scheme),
        opts,
    }
    .run()
}

pub fn fdma_aigc_solve(instance: &CanonicalInstance) -> SolveReport {
    run_scheme(instance, SchemeId::FdmaAigc)
}

pub fn tdma_aigc_solve(instance: &CanonicalInstance) -> SolveReport {
    run_scheme(instance, SchemeId::TdmaAigc)
}

/// Multiple-access rules a scheme is validated against.
pub fn scheme_access(scheme: SchemeId) -> Access {
    Scheme::of(scheme).access
}
