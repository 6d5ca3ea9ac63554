use fblab_core::geometry::{DomainSpec, FieldSpec};
use fblab_core::grid::GridField;
use fblab_core::operator::NFunctionSpec;
use fblab_core::solver::{
    bump_probes, solve_problem_p, solve_quasilinear_dirichlet, weak_residual, BoundaryData,
    NonlinearMethod, SolverConfig, Source, SourceMode,
};
use proptest::prelude::*;

fn dam_error(p: f64, n: usize) -> f64 {
    let d = DomainSpec::unit_square(n);
    let bc = BoundaryData::dam(&d, 0.4, 1.0, 1.0);
    let s = solve_problem_p(
        &NFunctionSpec::power(p),
        &FieldSpec::uniform(),
        &bc,
        &d,
        &SolverConfig::default(),
    )
    .unwrap();
    s.u.max_abs_diff_fn(|x| (0.4 - x[1]).max(0.0))
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Zero source and nonnegative boundary data never produce a negative
    /// interior value beyond the solver tolerance.
    #[test]
    fn maximum_structure(p in exponent(), c in 0.0f64..1.0, amp in 0.0f64..1.0, freq in 1.0f64..6.0) {
        let d = DomainSpec::unit_square(17);
        let bc = BoundaryData::from_fn(move |x| c + amp * (freq * (x[0] + 2.0 * x[1])).sin().powi(2));
        let cfg = SolverConfig::default();
        let s = solve_quasilinear_dirichlet(&NFunctionSpec::power(p), &Source::Zero, &bc, &d, &cfg, None).unwrap();
        prop_assert!(s.u.min() >= -10.0 * cfg.inner_tol, "min {}", s.u.min());
    }

    /// Two different initial iterates reach the same discrete solution.
    #[test]
    fn uniqueness(p in exponent(), seed in 0u64..1000, newton in any::<bool>()) {
        let d = DomainSpec::unit_square(17);
        let field = FieldSpec::tilted();
        let bc = BoundaryData::from_fn(|x| 0.3 + 0.2 * x[0] * (1.0 - x[1]));
        let cfg = SolverConfig {
            method: if newton { NonlinearMethod::Newton } else { NonlinearMethod::Picard },
            ..SolverConfig::default()
        };
        let src = Source::Field { field: &field, mode: SourceMode::FaceFlux };
        let spec = NFunctionSpec::power(p);
        let a = solve_quasilinear_dirichlet(&spec, &src, &bc, &d, &cfg, None).unwrap();
        let start = GridField::from_fn(d, |x| ((seed as f64 + 17.0 * x[0] + 31.0 * x[1]).sin()).abs());
        let b = solve_quasilinear_dirichlet(&spec, &src, &bc, &d, &cfg, Some(&start)).unwrap();
        let diff = a.u.max_abs_diff(&b.u).unwrap();
        prop_assert!(diff <= 10.0 * cfg.inner_tol, "diff {diff}");
    }

    #[test]
    fn problem_solution_bounds(p in exponent(), u0 in 0.2f64..0.7, tilted in any::<bool>()) {
        let d = DomainSpec::unit_square(25);
        let field = if tilted { FieldSpec::tilted() } else { FieldSpec::uniform() };
        let bc = BoundaryData::dam(&d, u0, 1.0, 1.0);
        let cfg = SolverConfig::default();
        let s = solve_problem_p(&NFunctionSpec::power(p), &field, &bc, &d, &cfg).unwrap();
        let m = bc.max_value(&d);
        prop_assert!(s.u.min() >= -s.tol_u && s.u.max() <= m + s.tol_u);
        for (&u, &chi) in s.u.values().iter().zip(s.chi.values()) {
            prop_assert!((0.0..=1.0).contains(&chi));
            // above the positivity threshold χ is saturated; inside the band
            // χ = u/tol_u, so u(1 - χ) peaks at tol_u/4
            let bound = if u > s.tol_u { m * cfg.tol_chi } else { 0.25 * s.tol_u + m * cfg.tol_chi };
            prop_assert!(u * (1.0 - chi) <= bound, "u {u}, chi {chi}");
        }
    }
}

#[test]
fn dam_error_shrinks_under_refinement() {
    for p in [2.0, 3.0] {
        let coarse = dam_error(p, 33);
        let fine = dam_error(p, 65);
        println!("p = {p}: {coarse:.3e} -> {fine:.3e}");
        assert!(coarse >= 1.7 * fine, "p = {p}: {coarse} -> {fine}");
    }
}

#[test]
fn dam_weak_residual_is_small() {
    let d = DomainSpec::unit_square(33);
    let bc = BoundaryData::dam(&d, 0.4, 1.0, 1.0);
    let spec = NFunctionSpec::power(2.0);
    let field = FieldSpec::uniform();
    let s = solve_problem_p(&spec, &field, &bc, &d, &SolverConfig::default()).unwrap();
    let probes = bump_probes(&d, &bc, 3, 2);
    assert!(!probes.is_empty());
    let r = weak_residual(&s.u, &s.chi, &spec, &field, &probes);
    assert!(r.abs() <= 10.0 * d.dx2(), "{r}");
}
