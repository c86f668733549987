//! End-to-end acceptance suite (own `main`, so the report is never
//! captured). Every criterion is evaluated and reported on its own line;
//! the process exits non-zero afterwards if any of them failed.

use std::time::Instant;

use nomafl_core::model::{broadcast_time, downlink_rates, training_cycles, uplink_rates};
use nomafl_core::{bcd_solve, check_feasible, run_scheme, BcdOptions, SchemeId, SolveReport};
use nomafl_harness::config::{ScenarioConfig, SweepParam};
use nomafl_harness::oracle::{
    compare_dgen, default_instance, downlink_substitution_residual, random_downlink_case,
    random_uplink_case, sic_order_gap, starting_dgen_subproblem, uplink_substitution_residual,
};
use nomafl_harness::sweep::{run_sweep_detailed, ResultRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if v.is_empty() {
        0.0
    } else {
        rel(lo, hi)
    }
}

/// Largest relative deviation from the closed-form optimality conditions.
fn closed_form_residual(inst: &nomafl_core::CanonicalInstance, r: &SolveReport) -> f64 {
    let p = &inst.params;
    let a = &r.allocation;
    let mut worst: f64 = 0.0;

    let rd = downlink_rates(&a.p_down_w, &inst.channel.h, p);
    let active: Vec<usize> = (0..a.k()).filter(|&k| a.d_gen[k] > 0.0).collect();
    if active.is_empty() {
        worst = worst.max(a.t_down_s.abs());
    } else {
        let ratios: Vec<f64> = active.iter().map(|&k| rd[k] / a.d_gen[k]).collect();
        worst = worst.max(spread(&ratios));
        let slowest = active
            .iter()
            .map(|&k| a.d_gen[k] / rd[k])
            .fold(0.0, f64::max);
        worst = worst.max(rel(a.t_down_s, p.sample_size_bits * slowest));
        worst = worst.max(rel(a.p_down_w.iter().sum(), p.bs_power_w));
    }
    worst = worst.max(rel(a.t_br_s, broadcast_time(p, &inst.channel.h)));

    let ru = uplink_rates(&a.q_up_w, &inst.channel.g, &a.sic_order, p);
    worst = worst.max(spread(&ru));
    let min_up = ru.iter().copied().fold(f64::INFINITY, f64::min);
    worst = worst.max(rel(a.t_up_s, p.model_size_bits / min_up));

    let total = p.synth_rate_s_per_sample * a.d_gen.iter().sum::<f64>()
        + a.t_down_s
        + p.rounds() * (a.t_br_s + a.t_loc_s + a.t_up_s);
    worst = worst.max(rel(total, p.t_max_s));

    for (k, dev) in inst.devices.iter().enumerate() {
        let cycles = training_cycles(dev, a.d_gen[k], p.tau());
        worst = worst.max(rel(a.freq_hz[k], cycles / a.t_loc_s));
        let cap = (dev.e_max_j - dev.varpi * cycles.powi(3) / (a.t_loc_s * a.t_loc_s)) / a.t_up_s;
        let excess = (a.q_up_w[k] - cap.min(dev.q_max_w)) / dev.q_max_w;
        worst = worst.max(excess.max(0.0));
    }
    worst
}

fn criterion_1(traces: &mut Vec<Vec<f64>>) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut checked, mut attempts, mut worst, mut violations) = (0, 0, 0.0f64, 0);
    while checked < 1000 && attempts < 20_000 {
        attempts += 1;
        let k = rng.gen_range(1..=8);
        let inst = default_instance(SEED, attempts, k);
        let r = run_scheme(&inst, SchemeId::NomaAigc);
        traces.push(r.objective_trace.clone());
        if !r.feasible {
            continue;
        }
        checked += 1;
        worst = worst.max(closed_form_residual(&inst, &r));
        violations += usize::from(!check_feasible(&inst, &r.allocation, 1e-6).is_empty());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: checked == 1000 && worst <= 1e-6 && violations == 0,
        detail: format!(
            "{checked} feasible instances ({attempts} drawn), max relative residual {worst:.2e}, {violations} constraint violations, {secs:.1} s"
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let down = (0..1000)
        .map(|_| downlink_substitution_residual(&random_downlink_case(&mut rng)))
        .fold(0.0, f64::max);
    let up = (0..1000)
        .map(|_| {
            let k = rng.gen_range(1..=8);
            uplink_substitution_residual(&random_uplink_case(&mut rng, k))
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: down <= 1e-9 && up <= 1e-9,
        detail: format!(
            "max relative rate residual: downlink {down:.2e}, uplink {up:.2e} over 1000 draws each"
        ),
    }
}

fn criterion_3() -> Outcome {
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=4);
        match sic_order_gap(&random_uplink_case(&mut rng, k), tol) {
            Ok(gap) => worst = worst.max(gap),
            Err(_) => errors += 1,
        }
    }
    Outcome {
        pass: errors == 0 && worst <= 2.0 * tol,
        detail: format!("200 instances, max relative shortfall vs best permutation {worst:.2e}, {errors} errors"),
    }
}

fn criterion_4() -> Outcome {
    let (mut done, mut drop_index, mut failures) = (0, 0, 0);
    let mut worst_gap: f64 = 0.0;
    while done < 50 && drop_index < 1000 {
        let inst = default_instance(SEED ^ 4, drop_index, 2);
        drop_index += 1;
        let Some(sub) = starting_dgen_subproblem(&inst) else {
            continue;
        };
        done += 1;
        match compare_dgen(&sub, 400) {
            Ok(c) => {
                worst_gap = worst_gap.max((c.solver - c.oracle) / c.oracle);
                failures += usize::from(!c.within_tolerance());
            }
            Err(_) => failures += 1,
        }
    }
    Outcome {
        pass: done == 50 && failures == 0,
        detail: format!(
            "{done} instances, {failures} outside max(0.5%, one cell); largest relative excess over grid {worst_gap:.2e}"
        ),
    }
}

fn criterion_5(traces: &[Vec<f64>]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for t in traces {
        for w in t.windows(2) {
            let inc = (w[1] - w[0]) / w[0].abs();
            worst = worst.max(inc);
            bad += usize::from(inc > 1e-9);
        }
    }
    Outcome {
        pass: bad == 0,
        detail: format!(
            "{} runs, {bad} increases above 1e-9, largest relative step {worst:.2e}",
            traces.len()
        ),
    }
}

struct Figure {
    param: SweepParam,
    values: Vec<f64>,
    /// +1: non-decreasing, -1: non-increasing.
    direction: f64,
}

fn figures() -> Vec<Figure> {
    vec![
        Figure {
            param: SweepParam::BsPowerDbm,
            values: vec![25.0, 30.0, 35.0, 40.0],
            direction: -1.0,
        },
        Figure {
            param: SweepParam::DgenTotalSamples,
            values: vec![1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0],
            direction: -1.0,
        },
        Figure {
            param: SweepParam::TMaxS,
            values: vec![600.0, 750.0, 900.0, 1050.0, 1200.0],
            direction: -1.0,
        },
        Figure {
            param: SweepParam::ModelSizeBits,
            values: vec![1.0e6, 1.5e6, 2.0e6, 2.5e6, 3.0e6],
            direction: 1.0,
        },
        Figure {
            param: SweepParam::EMaxJ,
            values: vec![0.6, 0.9, 1.2, 1.5, 1.8],
            direction: -1.0,
        },
        Figure {
            param: SweepParam::KDevices,
            values: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            direction: 1.0,
        },
    ]
}

fn series<'a>(rows: &'a [ResultRow], scheme: &'a str) -> impl Iterator<Item = &'a ResultRow> {
    rows.iter().filter(move |r| r.scheme == scheme)
}

fn criterion_6(traces: &mut Vec<Vec<f64>>) -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    for fig in figures() {
        let cfg = ScenarioConfig::with_sweep(SEED, fig.param, fig.values.clone());
        let out = run_sweep_detailed(&cfg).expect("valid sweep");
        traces.extend(
            out.runs
                .iter()
                .flat_map(|d| d.reports.iter().map(|r| r.objective_trace.clone())),
        );
        let name = fig.param.name();

        for &v in &fig.values {
            let at: Vec<&ResultRow> = out.rows.iter().filter(|r| r.sweep_value == v).collect();
            let best = at
                .iter()
                .find(|r| r.scheme == SchemeId::NomaAigc.name())
                .expect("scheme present")
                .mean_error;
            for r in &at {
                if best > r.mean_error + 1e-9 {
                    problems.push(format!(
                        "{name}={v}: {} {:.4} beats noma_aigc {best:.4}",
                        r.scheme, r.mean_error
                    ));
                }
            }
        }
        for scheme in SchemeId::ALL {
            let means: Vec<f64> = series(&out.rows, scheme.name())
                .map(|r| r.mean_error)
                .collect();
            let flat = fig.param == SweepParam::DgenTotalSamples && !scheme.uses_synthetic_data();
            if flat {
                if means.windows(2).any(|w| (w[1] - w[0]).abs() > 1e-9) {
                    problems.push(format!("{name}: {} not flat: {means:.4?}", scheme.name()));
                }
            } else if means
                .windows(2)
                .any(|w| fig.direction * (w[1] - w[0]) < -1e-9)
            {
                problems.push(format!(
                    "{name}: {} trend broken: {means:.4?}",
                    scheme.name()
                ));
            }
        }
        let noma: Vec<f64> = series(&out.rows, SchemeId::NomaAigc.name())
            .map(|r| r.mean_error)
            .collect();
        println!("    {name}: noma_aigc means {noma:.4?}");
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!("6 sweeps, K=15, 100 drops, {secs:.0} s");
    if !problems.is_empty() {
        detail.push_str(&format!(
            "; {} problems: {}",
            problems.len(),
            problems.join("; ")
        ));
    }
    Outcome {
        pass: problems.is_empty(),
        detail,
    }
}

fn criterion_7(traces: &mut Vec<Vec<f64>>) -> Outcome {
    let ks = [5usize, 10, 20, 40];
    let mut points = Vec::new();
    let mut notes = Vec::new();
    for &k in &ks {
        let mut times = Vec::new();
        let mut drop_index = 0;
        while times.len() < 7 && drop_index < 200 {
            let inst = default_instance(SEED ^ 7, drop_index, k);
            drop_index += 1;
            let probe = bcd_solve(&inst, BcdOptions::default());
            traces.push(probe.objective_trace.clone());
            if !probe.feasible {
                continue;
            }
            let reps = 3;
            let t0 = Instant::now();
            for _ in 0..reps {
                std::hint::black_box(bcd_solve(&inst, BcdOptions::default()));
            }
            times.push(t0.elapsed().as_secs_f64() / reps as f64);
        }
        if times.is_empty() {
            notes.push(format!("K={k}: no feasible drop"));
            continue;
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        notes.push(format!("K={k}: {:.2} ms", median * 1e3));
        points.push(((k as f64).ln(), median.ln()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Outcome {
        pass: points.len() == ks.len() && slope <= 3.5,
        detail: format!(
            "median bcd_solve time {}; log-log slope {slope:.2}",
            notes.join(", ")
        ),
    }
}

fn criterion_8(traces: &mut Vec<Vec<f64>>) -> Outcome {
    let mut bad = 0;
    let mut runs = 0;
    for drop_index in 0..50 {
        let k = 1 + drop_index % 15;
        let inst = default_instance(SEED ^ 8, drop_index, k);
        let mut params = inst.params.clone();
        params.t_max_s = 0.95 * params.rounds() * broadcast_time(&params, &inst.channel.h);
        let inst = inst.with_params(params);
        for scheme in SchemeId::ALL {
            let r = run_scheme(&inst, scheme);
            traces.push(r.objective_trace.clone());
            runs += 1;
            bad += usize::from(r.feasible || r.learning_error != 1.0);
        }
    }
    Outcome { pass: bad == 0, detail: format!("{runs} runs on 50 instances with T^max < N T^br, {bad} not reported infeasible with error 1") }
}

fn main() {
    let mut traces = Vec::new();
    let mut results = vec![
        (1, criterion_1(&mut traces)),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
    ];
    let c6 = criterion_6(&mut traces);
    let c7 = criterion_7(&mut traces);
    let c8 = criterion_8(&mut traces);
    results.push((5, criterion_5(&traces)));
    results.push((6, c6));
    results.push((7, c7));
    results.push((8, c8));
    results.sort_by_key(|r| r.0);

    for (n, o) in &results {
        println!(
            "criterion {n}: {} - {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
