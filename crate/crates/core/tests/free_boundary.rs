use fblab_core::free_boundary::{
    chi_is_indicator, continuity_report, default_dt, dyadic_radii, extract_phi, fixtures,
    level_structure_violations, pullback,
};
use fblab_core::geometry::{Chart, DomainSpec, FieldSpec, OrbitOptions};
use fblab_core::grid::{GridField, IndicatorField};
use proptest::prelude::*;
use std::sync::OnceLock;

fn domain() -> DomainSpec {
    DomainSpec::unit_square(49)
}

fn chart() -> &'static Chart {
    static CHART: OnceLock<Chart> = OnceLock::new();
    CHART.get_or_init(|| {
        let d = domain();
        Chart::uniform(
            &FieldSpec::tilted(),
            &d,
            0.0,
            64,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Raising the positivity threshold never raises `φ`.
    #[test]
    fn phi_is_monotone_in_tol_u(
        level in 0.2f64..0.8,
        slope in -0.3f64..0.3,
        wiggle in 0.0f64..0.05,
        freq in 1.0f64..20.0,
        lo in 1e-4f64..0.05,
        ratio in 1.0f64..4.0,
    ) {
        let u = GridField::from_fn(domain(), |x| {
            (level + slope * (x[0] - 0.5) - x[1]).max(0.0) + wiggle * (freq * x[0]).sin().powi(2) * x[1] * (1.0 - x[1])
        });
        let dt = default_dt(chart());
        let low = extract_phi(&u, chart(), lo, dt).unwrap();
        let high = extract_phi(&u, chart(), lo * ratio, dt).unwrap();
        for (a, b) in low.phi.iter().zip(&high.phi) {
            prop_assert!(b <= a, "{b} > {a}");
        }
    }
}

#[test]
fn analytic_fixtures_have_no_level_structure_violations() {
    let d = domain();
    let dt = default_dt(chart());
    let fields = [
        GridField::from_fn(d, |x| (0.4 - x[1]).max(0.0)),
        GridField::from_fn(d, |x| (0.3 + 0.2 * x[0] - x[1]).max(0.0).powf(1.5)),
        GridField::zeros(d),
    ];
    for u in &fields {
        let profile = extract_phi(u, chart(), 1e-3, dt).unwrap();
        let pb = pullback(u, chart(), dt).unwrap();
        let ls = level_structure_violations(&pb, &profile).unwrap();
        assert_eq!(ls.violations(), 0);
    }
}

#[test]
fn negative_fixtures_are_caught() {
    let d = domain();
    let dt = default_dt(chart());
    let (island, _) = fixtures::island(&d);
    let profile = extract_phi(&island, chart(), 1e-3, dt).unwrap();
    let ls =
        level_structure_violations(&pullback(&island, chart(), dt).unwrap(), &profile).unwrap();
    assert!(ls.violations() > 0);

    let dv = DomainSpec::unit_square(129);
    let vertical = Chart::uniform(
        &FieldSpec::uniform(),
        &dv,
        0.0,
        128,
        &OrbitOptions::for_domain(&dv),
    )
    .unwrap();
    let (jump, _) = fixtures::jump(&dv);
    let profile = extract_phi(&jump, &vertical, 1e-3, default_dt(&vertical)).unwrap();
    let radii = dyadic_radii(&profile, 5);
    let report = continuity_report(&profile, &[0.5], &radii, 1.0).unwrap();
    assert!(!report.all_decay());
}

#[test]
fn sharp_indicator_matches_exactly() {
    let d = domain();
    let u = GridField::from_fn(d, |x| (0.45 - x[1]).max(0.0));
    let tol = 1e-3;
    let chi = IndicatorField::from_predicate(d, |x| 0.45 - x[1] > tol);
    let m = chi_is_indicator(&u, &chi, tol, &[]).unwrap();
    assert_eq!(m.mismatched, 0);
    assert!(m.counted > 0);
}
