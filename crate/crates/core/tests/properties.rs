use proptest::prelude::*;

use sqg_core::diagnostics::{
    fit_decay_rate, gronwall_check, gronwall_ode_instance, ErrorRow, ErrorSeries,
};
use sqg_core::dynamics::{ForcingShape, ForcingSpec, ImexStepper, SqgParams, StepperState};
use sqg_core::observers::{approx_identity_error, spectral_cutoff, InterpolantOperator};
use sqg_core::spectral::{random_field, FourierField, WaveGrid};

fn grid() -> WaveGrid {
    WaveGrid::new(32).unwrap()
}

fn field(seed: u64, kmax: f64) -> FourierField {
    random_field(&grid(), 1.0, kmax, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plancherel(seed in any::<u64>()) {
        let f = field(seed, 10.0);
        let phys = f.to_physical();
        let l2 = phys.values().iter().map(|v| v * v).sum::<f64>() * f.grid().cell_area();
        prop_assert!((l2.sqrt() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn poincare_with_constant_one(seed in any::<u64>(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let f = field(seed, 10.0);
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        prop_assert!(f.sobolev_norm(lo) <= f.sobolev_norm(hi) * (1.0 + 1e-12));
    }

    #[test]
    fn laplacian_semigroup(seed in any::<u64>(), s in -1.0f64..1.5, t in -1.0f64..1.5) {
        let f = field(seed, 10.0);
        let two = f.fractional_laplacian(s).fractional_laplacian(t);
        let one = f.fractional_laplacian(s + t);
        prop_assert!(two.axpy(-1.0, &one).l2_norm() <= 1e-11 * one.l2_norm().max(1.0));
    }

    #[test]
    fn gagliardo_nirenberg_spectral(seed in any::<u64>(), a in 0.0f64..1.0, b in 1.0f64..2.0, w in 0.0f64..1.0) {
        // ‖f‖_{H^s} ≤ ‖f‖_{H^a}^{1−w} ‖f‖_{H^b}^w with s = (1−w)a + wb.
        let f = field(seed, 10.0);
        let s = (1.0 - w) * a + w * b;
        let rhs = f.sobolev_norm(a).powf(1.0 - w) * f.sobolev_norm(b).powf(w);
        prop_assert!(f.sobolev_norm(s) <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_observer_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), c in -5.0f64..5.0) {
        let op = InterpolantOperator::spectral(4, &grid()).unwrap();
        let (f, g) = (field(s1, 10.0), field(s2, 10.0));
        let lhs = op.apply(&f.axpy(c, &g)).unwrap();
        let rhs = op.apply(&f).unwrap().axpy(c, &op.apply(&g).unwrap());
        prop_assert!(lhs.axpy(-1.0, &rhs).l2_norm() <= 1e-12 * (1.0 + lhs.l2_norm()));
    }

    #[test]
    fn spectral_bound_ratio_at_most_one(seed in any::<u64>(), m in 2usize..10, beta in 0.0f64..1.0) {
        let h = 1.0 / m as f64;
        prop_assert_eq!(spectral_cutoff(h), m);
        let op = InterpolantOperator::spectral_for_h(h, &grid()).unwrap();
        let (_, ratio) = approx_identity_error(&op, &field(seed, 15.0), beta).unwrap();
        prop_assert!(ratio <= 1.0 + 1e-10);
    }

    #[test]
    fn decay_fit_is_scale_invariant(lambda in 0.1f64..5.0, scale in 1e-6f64..1e6) {
        let series = |c: f64| {
            let mut s = ErrorSeries::default();
            for i in 0..200 {
                let t = i as f64 * 0.01;
                s.push(ErrorRow { t, k: 0, err_l2: c * (-lambda * t).exp(), err_hsigma: 0.0,
                    err_hneg_half: 0.0, theta_l2: 1.0, eta_l2: 1.0 });
            }
            s
        };
        let a = fit_decay_rate(&series(1.0), 0.0, f64::INFINITY, 0.0).unwrap();
        let b = fit_decay_rate(&series(scale), 0.0, f64::INFINITY, 0.0).unwrap();
        prop_assert!((a.lambda - lambda).abs() < 1e-9);
        prop_assert!((a.lambda - b.lambda).abs() < 1e-9);
    }

    #[test]
    fn classical_gronwall_family(a in 0.2f64..3.0, phi0 in 0.1f64..5.0, f0 in 0.0f64..2.0) {
        // A = B = 0: the condition holds trivially and the conclusion is the
        // classical integrated Gronwall bound.
        let inst = gronwall_ode_instance(a, 1.0, 0.0, 0.0, 0.1, phi0, f0, 1e-4);
        let r = gronwall_check(&inst);
        prop_assert!(r.hypothesis && r.condition);
        prop_assert!(r.counterexample.is_none());
        prop_assert!(r.worst_conclusion_margin >= -1e-6 * r.scale);
    }
}

fn small_stepper(dt: f64) -> ImexStepper {
    let g = grid();
    let forcing = ForcingSpec {
        shape: ForcingShape::Shear { wavenumber: 2 },
        amplitude: 20.0,
        ..ForcingSpec::default()
    }
    .build(&g, 1.0, 1.5);
    ImexStepper::new(SqgParams::new(1.0, 1.5, forcing).unwrap(), dt).unwrap()
}

#[test]
fn heun_is_second_order_on_a_nonlinear_run() {
    let theta0 = field(7, 6.0).scaled(5.0 / field(7, 6.0).l2_norm());
    let finals: Vec<FourierField> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let stepper = small_stepper(dt);
            let mut s = StepperState::new(theta0.clone(), 0.0, dt);
            for _ in 0..(0.5 / dt).round() as usize {
                s = stepper.step(&s, None).unwrap();
                assert_eq!(s.theta.coeff(0, 0).norm(), 0.0);
            }
            s.theta
        })
        .collect();
    let e1 = finals[0].axpy(-1.0, &finals[1]).l2_norm();
    let e2 = finals[1].axpy(-1.0, &finals[2]).l2_norm();
    let order = (e1 / e2).log2();
    assert!(order > 1.9, "order {order}");
}
