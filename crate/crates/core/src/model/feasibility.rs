use serde::{Deserialize, Serialize};

use super::{
    broadcast_rate, local_energy, synthesis_time, training_cycles, Allocation, CanonicalInstance,
};
use crate::access::{Access, DownloadCoupling};

/// Absolute floor under the relative slack used for every comparison.
const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    /// Vector lengths do not match the device count.
    Shape,
    SyntheticBudget,
    Latency,
    MaxFrequency,
    LocalDeadline,
    DownloadDeadline,
    BsPower,
    BroadcastDeadline,
    DevicePower,
    UploadDeadline,
    EnergyBudget,
    DecodingOrder,
    NonNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub device: Option<usize>,
    /// `lhs - rhs` of the violated `lhs <= rhs` form.
    pub residual: f64,
}

struct Checker {
    tol: f64,
    out: Vec<Violation>,
}

impl Checker {
    fn le(&mut self, constraint: Constraint, device: Option<usize>, lhs: f64, rhs: f64) {
        let slack = (self.tol * lhs.abs().max(rhs.abs())).max(ABS_FLOOR);
        let residual = lhs - rhs;
        // NaN compares false, so route it through the negated test.
        if !(residual <= slack) {
            self.out.push(Violation {
                constraint,
                device,
                residual,
            });
        }
    }

    fn non_negative(&mut self, device: Option<usize>, v: f64) {
        self.le(Constraint::NonNegative, device, -v, 0.0);
    }
}

/// Validates a NOMA allocation against every constraint of the joint
/// problem. Never fails; returns the list of violations with residuals.
pub fn check_feasible(
    instance: &CanonicalInstance,
    alloc: &Allocation,
    tol: f64,
) -> Vec<Violation> {
    check_feasible_with(instance, alloc, Access::Noma, tol)
}

/// Same as [`check_feasible`] with the rate, timing and energy conventions
/// of `access`.
pub fn check_feasible_with(
    instance: &CanonicalInstance,
    alloc: &Allocation,
    access: Access,
    tol: f64,
) -> Vec<Violation> {
    let k = instance.k();
    let params = &instance.params;
    let mut c = Checker {
        tol,
        out: Vec::new(),
    };

    let lengths = [
        alloc.d_gen.len(),
        alloc.p_down_w.len(),
        alloc.q_up_w.len(),
        alloc.freq_hz.len(),
        alloc.sic_order.len(),
    ];
    if lengths.iter().any(|&l| l != k) {
        c.out.push(Violation {
            constraint: Constraint::Shape,
            device: None,
            residual: f64::NAN,
        });
        return c.out;
    }
    if !alloc.sic_order.is_valid() {
        c.out.push(Violation {
            constraint: Constraint::DecodingOrder,
            device: None,
            residual: f64::NAN,
        });
        return c.out;
    }

    for t in [alloc.t_down_s, alloc.t_br_s, alloc.t_loc_s, alloc.t_up_s] {
        c.non_negative(None, t);
    }
    for i in 0..k {
        for v in [
            alloc.d_gen[i],
            alloc.p_down_w[i],
            alloc.q_up_w[i],
            alloc.freq_hz[i],
        ] {
            c.non_negative(Some(i), v);
        }
    }

    let n = params.rounds();
    let tau = params.tau();

    c.le(
        Constraint::SyntheticBudget,
        None,
        alloc.d_gen.iter().sum(),
        params.dgen_total_samples,
    );

    let total_time = synthesis_time(&alloc.d_gen, params)
        + alloc.t_down_s
        + n * (alloc.t_br_s + alloc.t_loc_s + alloc.t_up_s);
    c.le(Constraint::Latency, None, total_time, params.t_max_s);

    for (i, dev) in instance.devices.iter().enumerate() {
        c.le(
            Constraint::MaxFrequency,
            Some(i),
            alloc.freq_hz[i],
            dev.f_max_hz,
        );
        // Without rounds there is no local training to finish.
        if n > 0.0 {
            c.le(
                Constraint::LocalDeadline,
                Some(i),
                training_cycles(dev, alloc.d_gen[i], tau),
                alloc.freq_hz[i] * alloc.t_loc_s,
            );
        }
    }

    let down_rates = access.downlink_rates(&alloc.p_down_w, &instance.channel.h, params);
    match access.coupling() {
        DownloadCoupling::Concurrent => {
            for (i, (&d, &r)) in alloc.d_gen.iter().zip(&down_rates).enumerate() {
                c.le(
                    Constraint::DownloadDeadline,
                    Some(i),
                    params.sample_size_bits * d,
                    alloc.t_down_s * r,
                );
            }
        }
        DownloadCoupling::Sequential => {
            let needed = access.download_time(&alloc.d_gen, &down_rates, params);
            c.le(Constraint::DownloadDeadline, None, needed, alloc.t_down_s);
        }
    }

    match access {
        Access::Noma | Access::Fdma => {
            c.le(
                Constraint::BsPower,
                None,
                alloc.p_down_w.iter().sum(),
                params.bs_power_w,
            );
        }
        Access::Tdma => {
            for (i, &p) in alloc.p_down_w.iter().enumerate() {
                c.le(Constraint::BsPower, Some(i), p, params.bs_power_w);
            }
        }
    }

    c.le(
        Constraint::BroadcastDeadline,
        None,
        params.model_size_bits,
        alloc.t_br_s * broadcast_rate(params, &instance.channel.h),
    );

    let up_rates =
        access.uplink_rates(&alloc.q_up_w, &instance.channel.g, &alloc.sic_order, params);
    match access {
        Access::Noma | Access::Fdma => {
            for (i, &r) in up_rates.iter().enumerate() {
                c.le(
                    Constraint::UploadDeadline,
                    Some(i),
                    params.model_size_bits,
                    alloc.t_up_s * r,
                );
            }
        }
        Access::Tdma => {
            let needed = access.upload_time(&up_rates, params);
            c.le(Constraint::UploadDeadline, None, needed, alloc.t_up_s);
        }
    }

    let up_energy = access.upload_energy(&alloc.q_up_w, &up_rates, alloc.t_up_s, params);
    for (i, dev) in instance.devices.iter().enumerate() {
        c.le(
            Constraint::DevicePower,
            Some(i),
            alloc.q_up_w[i],
            dev.q_max_w,
        );
        let e_loc = local_energy(dev, alloc.freq_hz[i].max(0.0), alloc.d_gen[i], tau)
            .unwrap_or(f64::INFINITY);
        c.le(
            Constraint::EnergyBudget,
            Some(i),
            e_loc + up_energy[i],
            dev.e_max_j,
        );
    }

    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{canonical, device, unit_params};
    use crate::model::SicOrder;

    #[test]
    fn zero_allocation_without_rounds_only_misses_link_deadlines() {
        let mut params = unit_params();
        params.rounds_n = 0;
        let inst = canonical(
            params,
            vec![device(), device()],
            vec![1.0, 2.0],
            vec![1.0, 1.0],
        );
        let v = check_feasible(&inst, &Allocation::zeros(2), 1e-6);
        let kinds: Vec<_> = v.iter().map(|x| (x.constraint, x.device)).collect();
        assert_eq!(
            kinds,
            vec![
                (Constraint::BroadcastDeadline, None),
                (Constraint::UploadDeadline, Some(0)),
                (Constraint::UploadDeadline, Some(1)),
            ]
        );
    }

    fn feasible_pair() -> (CanonicalInstance, Allocation) {
        let params = unit_params();
        let inst = canonical(
            params.clone(),
            vec![device(), device()],
            vec![1.0, 2.0],
            vec![4.0, 2.0],
        );
        // Hand-built allocation with slack everywhere; device 0 decoded first.
        let alloc = Allocation {
            d_gen: vec![1.0, 1.0],
            t_down_s: 2.0,
            t_br_s: 2.5,
            t_loc_s: 2.0,
            t_up_s: 5.0,
            p_down_w: vec![1.5, 0.5],
            q_up_w: vec![0.9, 0.4],
            sic_order: SicOrder::identity(2),
            freq_hz: vec![12.0, 12.0],
        };
        (inst, alloc)
    }

    #[test]
    fn hand_built_allocation_is_feasible_and_check_is_pure() {
        let (inst, alloc) = feasible_pair();
        let before = (inst.clone(), alloc.clone());
        assert!(check_feasible(&inst, &alloc, 1e-6).is_empty());
        assert_eq!(
            check_feasible(&inst, &alloc, 1e-6),
            check_feasible(&inst, &alloc, 1e-6)
        );
        assert_eq!((inst, alloc), before);
    }

    #[test]
    fn inflated_device_power_flags_only_that_constraint() {
        let (inst, mut alloc) = feasible_pair();
        // Device 0 is decoded first so it interferes with nobody.
        alloc.q_up_w[0] = inst.devices[0].q_max_w * 1.01;
        let v = check_feasible(&inst, &alloc, 1e-6);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::DevicePower);
        assert_eq!(v[0].device, Some(0));
        assert!(v[0].residual > 0.0);
    }

    #[test]
    fn shape_and_order_errors_are_reported_not_thrown() {
        let (inst, mut alloc) = feasible_pair();
        alloc.d_gen.push(0.0);
        assert_eq!(
            check_feasible(&inst, &alloc, 1e-6)[0].constraint,
            Constraint::Shape
        );
        let (inst, mut alloc) = feasible_pair();
        alloc.sic_order = SicOrder(vec![0, 0]);
        assert_eq!(
            check_feasible(&inst, &alloc, 1e-6)[0].constraint,
            Constraint::DecodingOrder
        );
    }

    #[test]
    fn tolerance_is_relative() {
        let (inst, mut alloc) = feasible_pair();
        alloc.q_up_w[0] = inst.devices[0].q_max_w * (1.0 + 1e-9);
        assert!(check_feasible(&inst, &alloc, 1e-6).is_empty());
        assert!(!check_feasible(&inst, &alloc, 1e-12).is_empty());
    }
}
