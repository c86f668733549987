//! Generators for independently derived reference values, also used as
//! random-case factories by the test suites.

use std::fmt::Write as _;

use nomafl_core::dgen::{dgen_oracle_grid, solve_dgen, DgenSubproblem};
use nomafl_core::downlink::{recursive_downlink_powers, solve_downlink};
use nomafl_core::model::{broadcast_time, downlink_rates, learning_error, uplink_rates};
use nomafl_core::orchestrator::initialize;
use nomafl_core::uplink::{recursive_uplink_fracs, sic_order, solve_uplink, uplink_oracle_perm};
use nomafl_core::{Access, CanonicalInstance, DeviceProfile, SicOrder, SystemParams};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ScenarioConfig, SweepParam};
use crate::error::{HarnessError, Result};
use crate::sampling::{mean_gain, path_loss_db, sample_instance};

pub const SUITES: [&str; 5] = ["closed-form", "downlink", "uplink", "dgen", "all"];

/// Default-parameter instance with `k` devices for drop `drop_index`.
pub fn default_instance(seed: u64, drop_index: usize, k: usize) -> CanonicalInstance {
    let mut cfg = ScenarioConfig::with_sweep(seed, SweepParam::KDevices, vec![k as f64]);
    cfg.k_devices = k;
    sample_instance(&cfg, drop_index, k as f64)
}

/// Recursion target for the downlink: demands, gains and a ratio `η`
/// keeping every spectral efficiency below 12 bit/s/Hz.
pub struct DownlinkCase {
    pub params: SystemParams,
    pub h: Vec<f64>,
    pub d_gen: Vec<f64>,
    pub eta: f64,
}

pub fn random_downlink_case(rng: &mut ChaCha8Rng) -> DownlinkCase {
    let k = rng.gen_range(1..=8);
    let inst = default_instance(rng.gen(), 0, k);
    let d_gen: Vec<f64> = (0..k)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(1.0..500.0)
            }
        })
        .collect();
    let d_max = d_gen.iter().copied().fold(0.0, f64::max).max(1.0);
    let eta = rng.gen_range(0.0..12.0) * inst.params.bandwidth_hz / d_max;
    DownlinkCase {
        params: inst.params,
        h: inst.channel.h,
        d_gen,
        eta,
    }
}

/// Largest relative gap between the achieved and the targeted downlink rates.
pub fn downlink_substitution_residual(case: &DownlinkCase) -> f64 {
    let p = recursive_downlink_powers(case.eta, &case.d_gen, &case.h, &case.params)
        .expect("exponent in range");
    let rates = downlink_rates(&p, &case.h, &case.params);
    rates
        .iter()
        .zip(&case.d_gen)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&r, &d)| {
            let target = case.eta * d;
            if target == 0.0 {
                r
            } else {
                (r - target).abs() / target
            }
        })
        .fold(0.0, f64::max)
}

pub struct UplinkCase {
    pub params: SystemParams,
    pub g: Vec<f64>,
    pub q_max: Vec<f64>,
    pub order: SicOrder,
    pub theta: f64,
}

pub fn random_uplink_case(rng: &mut ChaCha8Rng, k: usize) -> UplinkCase {
    let inst = default_instance(rng.gen(), 0, k);
    let q_max: Vec<f64> = (0..k).map(|_| rng.gen_range(0.005..0.1)).collect();
    let mut seq: Vec<usize> = (0..k).collect();
    seq.shuffle(rng);
    let b = inst.params.bandwidth_hz;
    let theta = rng.gen_range(0.0..12.0) * b;
    UplinkCase {
        g: inst.channel.g,
        params: inst.params,
        q_max,
        order: SicOrder::from_sequence(&seq),
        theta,
    }
}

/// Largest relative gap between the achieved uplink rates and `θ`.
pub fn uplink_substitution_residual(case: &UplinkCase) -> f64 {
    let f = recursive_uplink_fracs(case.theta, &case.order, &case.g, &case.q_max, &case.params)
        .expect("exponent in range");
    let q: Vec<f64> = f.iter().zip(&case.q_max).map(|(a, b)| a * b).collect();
    uplink_rates(&q, &case.g, &case.order, &case.params)
        .iter()
        .map(|&r| {
            if case.theta == 0.0 {
                r
            } else {
                (r - case.theta).abs() / case.theta
            }
        })
        .fold(0.0, f64::max)
}

/// Relative shortfall of the descending-power order against the best of
/// all orders.
pub fn sic_order_gap(case: &UplinkCase, tol: f64) -> Result<f64> {
    let ours = solve_uplink(&case.g, &case.q_max, &case.params, tol)?.theta;
    let (best, _) = uplink_oracle_perm(&case.g, &case.q_max, &case.params, tol)?;
    Ok((best - ours) / best)
}

/// The synthetic-data subproblem the NOMA loop faces at its starting point.
pub fn starting_dgen_subproblem(inst: &CanonicalInstance) -> Option<DgenSubproblem> {
    let a = initialize(inst).ok()?;
    let params = inst.params.clone();
    Some(DgenSubproblem {
        downlink_rates: downlink_rates(&a.p_down_w, &inst.channel.h, &params),
        uplink_energy: a.q_up_w.iter().map(|q| q * a.t_up_s).collect(),
        t_loc_cap_s: params.t_max_s / params.rounds() - a.t_up_s - a.t_br_s,
        params,
        devices: inst.devices.clone(),
        coupling: Access::Noma.coupling(),
    })
}

/// Objective change across one grid cell around `d`: the oracle cannot
/// resolve differences below this.
pub fn grid_cell_variation(sub: &DgenSubproblem, d: &[f64], points: usize) -> f64 {
    let cell = sub.params.dgen_total_samples / (points - 1) as f64;
    let beta = sub.params.beta;
    sub.devices
        .iter()
        .zip(d)
        .map(|(dev, &x)| beta * (dev.d_loc_samples + x).powf(-beta - 1.0) * cell)
        .sum()
}

pub struct DgenComparison {
    pub solver: f64,
    pub oracle: f64,
    pub cell_variation: f64,
}

impl DgenComparison {
    pub fn within_tolerance(&self) -> bool {
        (self.solver - self.oracle).abs() <= (5e-3 * self.oracle).max(self.cell_variation)
    }
}

pub fn compare_dgen(sub: &DgenSubproblem, points: usize) -> Result<DgenComparison> {
    let s = solve_dgen(sub, 1e-6)?;
    let o = dgen_oracle_grid(sub, points)?;
    Ok(DgenComparison {
        solver: s.objective,
        oracle: o.objective,
        cell_variation: grid_cell_variation(sub, &o.d_gen, points),
    })
}

fn closed_form(out: &mut String) {
    let p = SystemParams {
        bandwidth_hz: 1e6,
        noise_psd_w_per_hz: 1e-19,
        rounds_n: 100,
        t_max_s: 900.0,
        tau_epochs: 1,
        zeta: 50.0,
        alpha: 3.819,
        beta: 0.198,
        gamma: 0.231,
        bs_power_w: 3.162,
        synth_rate_s_per_sample: 0.0646,
        sample_size_bits: 2e4,
        model_size_bits: 2e6,
        dgen_total_samples: 4000.0,
    };
    let _ = writeln!(
        out,
        "broadcast_time(B=1e6, sigma2=1e-19, P=3.162, h1=6.6e-11, Dmod=2e6) = {:.17e} s",
        broadcast_time(&p, &[6.6e-11])
    );
    let dev = DeviceProfile {
        d_loc_samples: 300.0,
        f_max_hz: 1e9,
        q_max_w: 0.1,
        e_max_j: 1.2,
        varpi: 1e-27,
        w_cycles_per_sample: 1e6,
        distance_m: 200.0,
    };
    let e = learning_error(&[100.0], &[dev], &p).expect("valid");
    let _ = writeln!(out, "learning_error(K=1, D=400, N=100) = {e:.17}");
    let _ = writeln!(
        out,
        "path_loss(200 m) = {:.14} dB, mean gain = {:.15e}",
        path_loss_db(200.0),
        mean_gain(200.0)
    );
}

fn downlink(out: &mut String, rng: &mut ChaCha8Rng) {
    let mut p = default_instance(0, 0, 1).params;
    p.bandwidth_hz = 1.0;
    p.noise_psd_w_per_hz = 1.0;
    p.bs_power_w = 2.0;
    let s = solve_downlink(&[1.0, 1.0], &[1.0, 2.0], &p, 1e-12);
    let _ = writeln!(
        out,
        "two-device downlink (h=[1,2], D=[1,1], P=2): eta = {:.12}, p = {:?}",
        s.eta, s.p_down_w
    );
    let worst = (0..1000)
        .map(|_| downlink_substitution_residual(&random_downlink_case(rng)))
        .fold(0.0, f64::max);
    let _ = writeln!(
        out,
        "downlink recursion substitution, 1000 draws: max relative residual = {worst:.3e}"
    );
}

fn uplink(out: &mut String, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut p = default_instance(0, 0, 1).params;
    p.bandwidth_hz = 1.0;
    p.noise_psd_w_per_hz = 1.0;
    let s = solve_uplink(&[4.0, 2.0], &[1.0, 1.0], &p, 1e-13)?;
    let _ = writeln!(
        out,
        "two-device uplink (g*qmax=[4,2]): theta = {:.12}, order = {:?}",
        s.theta,
        s.sic_order.sequence()
    );
    let worst = (0..1000)
        .map(|_| {
            let k = rng.gen_range(1..=8);
            uplink_substitution_residual(&random_uplink_case(rng, k))
        })
        .fold(0.0, f64::max);
    let _ = writeln!(
        out,
        "uplink recursion substitution, 1000 draws: max relative residual = {worst:.3e}"
    );
    let mut gap: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=4);
        let case = random_uplink_case(rng, k);
        let _ = sic_order(&case.g, &case.q_max);
        gap = gap.max(sic_order_gap(&case, 1e-9)?);
    }
    let _ = writeln!(
        out,
        "descending-power order vs all orders, 200 instances: max relative shortfall = {gap:.3e}"
    );
    Ok(())
}

fn dgen(out: &mut String, seed: u64) -> Result<()> {
    let mut drop_index = 0;
    let mut done = 0;
    while done < 5 && drop_index < 100 {
        let inst = default_instance(seed, drop_index, 2);
        drop_index += 1;
        let Some(sub) = starting_dgen_subproblem(&inst) else {
            continue;
        };
        let c = compare_dgen(&sub, 400)?;
        let _ = writeln!(
            out,
            "K=2 drop {}: interior-point objective {:.10}, grid(400) objective {:.10}, cell variation {:.2e}",
            drop_index - 1,
            c.solver,
            c.oracle,
            c.cell_variation
        );
        done += 1;
    }
    Ok(())
}

/// Runs one suite and returns its report.
pub fn run_suite(name: &str, seed: u64) -> Result<String> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    match name {
        "closed-form" => closed_form(&mut out),
        "downlink" => downlink(&mut out, &mut rng),
        "uplink" => uplink(&mut out, &mut rng)?,
        "dgen" => dgen(&mut out, seed)?,
        "all" => {
            closed_form(&mut out);
            downlink(&mut out, &mut rng);
            uplink(&mut out, &mut rng)?;
            dgen(&mut out, seed)?;
        }
        other => return Err(HarnessError::UnknownSuite(other.to_string())),
    }
    Ok(out)
}
