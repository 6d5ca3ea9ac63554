use fblab_core::barriers::{barrier_report, theta, theta_eps, vbar_residual, BarrierSpec};
use fblab_core::geometry::{DomainSpec, FieldSpec};
use fblab_core::operator::NFunctionSpec;
use fblab_core::solver::SolverConfig;
use proptest::prelude::*;

fn fields() -> [FieldSpec; 3] {
    [
        FieldSpec::uniform(),
        FieldSpec::shear(),
        FieldSpec::tilted(),
    ]
}

proptest! {
    #[test]
    fn theta_is_increasing_and_concave(p in 1.2f64..4.0, frac in 0.05f64..0.99, f in 0usize..3) {
        let spec = NFunctionSpec::power(p);
        let field = &fields()[f];
        let probe = BarrierSpec::new(field, 0.1, 0.3, (0.2, 0.8));
        let bar = BarrierSpec { epsilon: frac * probe.epsilon_cap(), ..probe };
        let n = 24;
        let vals: Vec<f64> = (0..=n).map(|i| theta(&spec, &bar, (bar.epsilon * i as f64 / n as f64).min(bar.epsilon)).unwrap()).collect();
        prop_assert_eq!(vals[0], 0.0);
        for w in vals.windows(3) {
            prop_assert!(w[1] > w[0] && w[2] > w[1]);
            prop_assert!(w[2] - w[1] <= w[1] - w[0] + 1e-14);
        }
        prop_assert!((vals[n] - theta_eps(&spec, &bar)).abs() <= 1e-15);
        prop_assert!(theta(&spec, &bar, 1.01 * bar.epsilon).is_err());
    }
}

#[test]
fn linear_theta_closed_form() {
    // a(t) = t: θ(t) = 2h̄εt - h̄t²/2, θ(ε) = 3h̄ε²/2
    let h = FieldSpec::uniform();
    let bar = BarrierSpec::new(&h, 0.4, 0.3, (0.2, 0.8));
    let spec = NFunctionSpec::power(2.0);
    for t in [0.0, 0.1, 0.25, 0.4] {
        assert!((theta(&spec, &bar, t).unwrap() - (0.8 * t - 0.5 * t * t)).abs() < 1e-14);
    }
    assert!((theta_eps(&spec, &bar) - 0.24).abs() < 1e-14);
}

#[test]
fn cubic_residual_refines_at_first_order_or_better() {
    let spec = NFunctionSpec::power(3.0);
    let h = FieldSpec::tilted();
    let bar = BarrierSpec::new(&h, 0.8 * 0.5 * h.h_lower / h.h_upper, 0.3, (0.2, 0.8));
    let mut prev = None;
    for n in [65, 129, 257] {
        let r = vbar_residual(&spec, &bar, &DomainSpec::unit_square(n))
            .unwrap()
            .max;
        if let Some(p) = prev {
            assert!(p >= 1.7 * r, "{p} -> {r}");
        }
        prev = Some(r);
    }
}

#[test]
fn reports_pass_on_builtin_cases() {
    let d = DomainSpec::unit_square(65);
    let cfg = SolverConfig::default();
    for spec in [
        NFunctionSpec::power(1.5),
        NFunctionSpec::power(2.0),
        NFunctionSpec::power(3.0),
    ] {
        for h in fields() {
            let bar = BarrierSpec::new(&h, 0.8 * 0.5 * h.h_lower / h.h_upper, 0.3, (0.2, 0.8));
            let r = barrier_report(&spec, &h, &bar, &d, &cfg).unwrap();
            let tol = 5.0 * d.dx2();
            assert!(
                r.min_v >= -10.0 * cfg.inner_tol,
                "{} {}: {}",
                spec.label(),
                h.name,
                r.min_v
            );
            assert!(
                r.max_excess <= 10.0 * cfg.inner_tol,
                "{} {}: {}",
                spec.label(),
                h.name,
                r.max_excess
            );
            assert!(
                r.grad_margin >= -tol && r.flux_sign_min >= -tol,
                "{} {}: {r:?}",
                spec.label(),
                h.name
            );
        }
    }
}
