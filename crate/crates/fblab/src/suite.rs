//! The property checks run by `verify`, grouped by module.

use std::f64::consts::PI;
use std::time::Instant;

use fblab_core::barriers::{barrier_report, theta, vbar_residual, BarrierReport};
use fblab_core::free_boundary::{
    chi_is_indicator, chi_monotonicity, continuity_report, default_dt, dyadic_radii, extract_phi,
    level_structure_violations, lower_semicontinuity_violations, pullback, zero_probes,
    zero_propagation, ContinuityReport, FreeBoundaryProfile,
};
use fblab_core::geometry::{
    jacobian_fd, jacobian_formula, lipschitz_certificate, Chart, LevelPair,
};
use fblab_core::grid::{GridField, IndicatorField};
use fblab_core::operator::{
    ellipticity_scan, flux, log_grid, matrix_bounds_check, monotonicity_gap, NFunctionSpec, NKind,
};
use fblab_core::solver::{bump_probes, weak_residual};
use fblab_core::{Error, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{BoundaryKind, Scenario};
use crate::summary::{CheckResult, Status, VerificationSummary};

pub const MODULES: &[&str] = &[
    "a_operator",
    "flow_geometry",
    "pde_solver",
    "barriers",
    "free_boundary",
];

/// Outcome of a single check before timing and filtering are applied.
pub struct Outcome {
    pub ok: bool,
    pub measured: f64,
    pub threshold: f64,
    pub note: String,
}

impl Outcome {
    /// Passes when `measured ≤ threshold`.
    pub fn at_most(measured: f64, threshold: f64) -> Self {
        Self {
            ok: measured <= threshold,
            measured,
            threshold,
            note: String::new(),
        }
    }

    /// Passes when `measured ≥ threshold`.
    pub fn at_least(measured: f64, threshold: f64) -> Self {
        Self {
            ok: measured >= threshold,
            measured,
            threshold,
            note: String::new(),
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Collects check results, honouring `--only` and `verify.disable`.
pub struct Suite<'a> {
    pub scenario: &'a Scenario,
    pub only: Option<&'a str>,
    pub summary: VerificationSummary,
}

impl<'a> Suite<'a> {
    pub fn new(scenario: &'a Scenario, only: Option<&'a str>) -> Self {
        Self {
            scenario,
            only,
            summary: VerificationSummary::new(scenario.name.clone()),
        }
    }

    pub fn module_enabled(&self, module: &str) -> bool {
        self.only.is_none_or(|m| m == module)
    }

    pub fn skip(&mut self, name: &str, module: &'static str, tag: &'static str, note: &str) {
        self.summary.push(CheckResult {
            name: name.into(),
            module,
            tag,
            status: Status::Skip,
            measured: f64::NAN,
            threshold: f64::NAN,
            runtime: Default::default(),
            note: note.into(),
        });
    }

    pub fn run(
        &mut self,
        name: &str,
        module: &'static str,
        tag: &'static str,
        f: impl FnOnce() -> Result<Outcome, Error>,
    ) {
        if !self.module_enabled(module) {
            return self.skip(name, module, tag, "filtered by --only");
        }
        if self.scenario.verify.disabled.contains(name) {
            return self.skip(name, module, tag, "disabled in config");
        }
        let start = Instant::now();
        let result = f();
        let runtime = start.elapsed();
        let row = match result {
            Ok(o) => CheckResult {
                name: name.into(),
                module,
                tag,
                status: Status::from_bool(o.ok),
                measured: o.measured,
                threshold: o.threshold,
                runtime,
                note: o.note,
            },
            Err(e) => CheckResult {
                name: name.into(),
                module,
                tag,
                status: Status::Fail,
                measured: f64::NAN,
                threshold: f64::NAN,
                runtime,
                note: e.to_string(),
            },
        };
        self.summary.push(row);
    }
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vec2 {
    let m = 10f64.powf(rng.gen_range(-3.0..3.0));
    let a = rng.gen_range(0.0..2.0 * PI);
    [m * a.cos(), m * a.sin()]
}

pub fn operator_checks(s: &mut Suite<'_>) {
    const M: &str = "a_operator";
    let spec = s.scenario.spec.clone();
    let (seed, n) = (s.scenario.verify.seed, s.scenario.verify.samples);
    s.run("ellipticity", M, "N-function exponent bounds", || {
        spec.validate()?;
        let (lo, hi) = ellipticity_scan(&spec, &log_grid(1e-6, 1e6, 2001))?;
        let dev = match spec.kind {
            NKind::Power { .. } => (lo - spec.a0).abs().max((hi - spec.a1).abs()),
            _ => (spec.a0 - lo).max(hi - spec.a1).max(0.0),
        };
        Ok(Outcome::at_most(dev, 1e-9).note(format!("ratio range [{lo}, {hi}]")))
    });
    s.run("monotonicity", M, "strict monotonicity of the flux", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::INFINITY;
        let mut bad = 0usize;
        for _ in 0..n {
            let (xi, zeta) = (random_vector(&mut rng), random_vector(&mut rng));
            let gap = monotonicity_gap(&spec, xi, zeta)?;
            let (fx, fz) = (flux(&spec, xi), flux(&spec, zeta));
            let scale =
                (fx[0] - fz[0]).hypot(fx[1] - fz[1]) * (xi[0] - zeta[0]).hypot(xi[1] - zeta[1]);
            if gap.is_nan() || gap <= 0.0 {
                bad += 1;
            }
            if scale > 0.0 {
                worst = worst.min(gap / scale);
            }
        }
        Ok(Outcome {
            ok: bad == 0,
            measured: bad as f64,
            threshold: 0.0,
            note: format!("{n} trials, min normalized gap {worst:.3e}"),
        })
    });
    s.run(
        "matrix-bounds",
        M,
        "eigenvalue bounds of the linearized flux",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let mut bad = 0usize;
            for _ in 0..n {
                if !matrix_bounds_check(&spec, random_vector(&mut rng), random_vector(&mut rng))? {
                    bad += 1;
                }
            }
            Ok(Outcome::at_most(bad as f64, 0.0).note(format!("{n} trials")))
        },
    );
    s.run("inverse-consistency", M, "a(a⁻¹(s)) = s", || {
        let worst = log_grid(1e-8, 1e8, 401)
            .into_iter()
            .map(|v| (spec.a(spec.a_inv(v)) - v).abs() / (1.0 + v))
            .fold(0.0, f64::max);
        Ok(Outcome::at_most(worst, 1e-10))
    });
}

pub fn geometry_checks(s: &mut Suite<'_>, chart: Option<&Chart>) {
    const M: &str = "flow_geometry";
    let sc = s.scenario;
    let field = sc.field.clone();
    if s.module_enabled(M) {
        for c in field.check_conditions(&sc.domain, 65, 1e-4) {
            s.run(c.name, M, "conditions on the transport field", || {
                Ok(Outcome {
                    ok: c.passed,
                    measured: c.measured,
                    threshold: c.threshold,
                    note: String::new(),
                })
            });
        }
    }
    let Some(chart) = chart else {
        for name in [
            "orbit-monotone",
            "jacobian-formula",
            "jacobian-bounds",
            "chart-inverse",
            "crossing-lipschitz",
        ] {
            s.skip(name, M, "chart", "no chart");
        }
        return;
    };
    let v = sc.verify.clone();
    s.run("orbit-monotone", M, "orbits rise in x₂", || {
        let m = chart
            .orbits
            .iter()
            .map(|o| o.min_x2_increment())
            .fold(f64::INFINITY, f64::min);
        Ok(Outcome {
            ok: m > 0.0,
            measured: m,
            threshold: 0.0,
            note: format!("{} orbits", chart.orbits.len()),
        })
    });

    let (lo, hi) = chart.w_span();
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed.wrapping_add(2));
    let points: Vec<(f64, f64)> = (0..v.jacobian_points)
        .map(|_| {
            let w = rng.gen_range(lo..=hi);
            let s = rng.gen_range(0.0..0.9);
            (w, s)
        })
        .collect();
    let jac = || -> Result<Vec<(f64, f64)>, Error> {
        points
            .iter()
            .map(|&(w, frac)| {
                let t = frac * chart.orbit_for(w)?.alpha_plus;
                Ok((
                    jacobian_formula(chart, t, w)?,
                    jacobian_fd(chart, t, w, v.fd_step)?,
                ))
            })
            .collect()
    };
    let values = jac();
    s.run(
        "jacobian-formula",
        M,
        "closed form of the chart Jacobian",
        || {
            let vals = values.clone()?;
            let worst = vals
                .iter()
                .map(|(f, d)| (f / d - 1.0).abs())
                .fold(0.0, f64::max);
            Ok(Outcome::at_most(worst, 1e-3).note(format!(
                "{} points, fd step {}",
                vals.len(),
                v.fd_step
            )))
        },
    );
    s.run(
        "jacobian-bounds",
        M,
        "h̲ ≤ -Y_h ≤ exp(h̄T) h̄",
        || {
            let vals = values.clone()?;
            let c = chart.jacobian_bound_constant();
            let margin = vals
                .iter()
                .map(|(f, _)| (-f - field.h_lower).min(c * field.h_upper + f))
                .fold(f64::INFINITY, f64::min);
            Ok(Outcome::at_least(margin, 0.0).note(format!("C = {c:.6}")))
        },
    );
    s.run("chart-inverse", M, "chart inverse undoes the chart", || {
        let mut rng = ChaCha8Rng::seed_from_u64(v.seed.wrapping_add(3));
        let mut worst = 0.0f64;
        for _ in 0..v.inverse_probes {
            let w = rng.gen_range(lo..=hi);
            let o = chart.orbit_for(w)?;
            let t = o.alpha_minus + rng.gen_range(0.02..0.98) * (o.alpha_plus - o.alpha_minus);
            let (t2, w2) = chart.inverse(chart.forward(t, w)?)?;
            worst = worst.max((t2 - t).abs().max((w2 - w).abs()));
        }
        Ok(Outcome::at_most(worst, 1e-6).note(format!("{} probes", v.inverse_probes)))
    });
    s.run("crossing-lipschitz", M, "Lipschitz crossing time", || {
        let d = &sc.domain;
        let pad = 0.01 * (d.x2_max - d.x2_min);
        let mut rng = ChaCha8Rng::seed_from_u64(v.seed.wrapping_add(4));
        let mut pick = || {
            (
                rng.gen_range(d.x2_min + pad..d.x2_max - pad),
                rng.gen_range(lo..=hi),
            )
        };
        let pairs: Vec<LevelPair> = (0..v.lipschitz_pairs).map(|_| (pick(), pick())).collect();
        let cert = lipschitz_certificate(chart, &pairs);
        let threshold = cert.bound * (1.0 + 1e-6);
        Ok(Outcome {
            ok: cert.pairs_used > 0 && cert.empirical_ratio <= threshold,
            measured: cert.empirical_ratio,
            threshold,
            note: format!(
                "C0 = {:.6}, {} pairs used, {} uncrossed",
                cert.c0, cert.pairs_used, cert.failures
            ),
        })
    });
}

/// A discrete solution pair and how it was obtained.
#[derive(Debug, Clone)]
pub struct Solved {
    pub u: GridField,
    pub chi: IndicatorField,
    pub tol_u: f64,
    /// `None` for fixtures.
    pub stats: Option<SolveStats>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub outer: usize,
    pub inner: usize,
    pub linear: usize,
    pub residual: f64,
    pub undershoot: f64,
    pub seconds: f64,
}

/// The one-dimensional dam solution `a⁻¹(H₂(x₁))(u0 - x₂)⁺`.
#[derive(Clone)]
pub struct ExactDam {
    pub u0: f64,
    spec: NFunctionSpec,
    h2: fblab_core::geometry::VecFn,
}

impl ExactDam {
    /// `-∂₂u` in the wet region.
    pub fn slope(&self, x1: f64) -> f64 {
        self.spec.a_inv((self.h2)([x1, self.u0]))
    }

    pub fn value(&self, x: Vec2) -> f64 {
        self.slope(x[0]) * (self.u0 - x[1]).max(0.0)
    }

    /// Height where the exact solution equals `tol_u`.
    pub fn level_at(&self, x1: f64, tol_u: f64) -> f64 {
        self.u0 - tol_u / self.slope(x1)
    }
}

/// The closed form when one is known: dam data under a vertical field whose
/// strength is constant, or varies with `x₁` under a linear operator.
pub fn exact_dam(sc: &Scenario) -> Option<ExactDam> {
    let BoundaryKind::Dam { u0 } = sc.boundary else {
        return None;
    };
    let linear = matches!(sc.spec.kind, NKind::Power { p } if p == 2.0);
    let vertical_constant = sc.field.name == "uniform" || sc.field.name.starts_with("vertical");
    let shear = sc.field.name == "shear";
    if sc.fixture.is_some() || !(vertical_constant || (shear && linear)) {
        return None;
    }
    Some(ExactDam {
        u0,
        spec: sc.spec.clone(),
        h2: sc.field.h2.clone(),
    })
}

pub fn solver_checks(s: &mut Suite<'_>, solved: Option<&Solved>) {
    const M: &str = "pde_solver";
    let sc = s.scenario;
    let Some(sol) = solved else {
        for name in [
            "solve-convergence",
            "solution-bounds",
            "complementarity",
            "weak-residual",
            "exact-solution",
        ] {
            s.skip(name, M, "solver output", "no solve");
        }
        return;
    };
    let tag = "discrete solution pair";
    match sol.stats {
        Some(st) => s.run("solve-convergence", M, tag, || {
            Ok(
                Outcome::at_most(st.residual, sc.solver.inner_tol).note(format!(
                    "{} outer, {} inner, {} linear iterations, undershoot {:.3e}, {:.2} s",
                    st.outer, st.inner, st.linear, st.undershoot, st.seconds
                )),
            )
        }),
        None => s.skip("solve-convergence", M, tag, "fixture fields"),
    }
    let m = sc.bc.max_value(&sc.domain);
    s.run(
        "solution-bounds",
        M,
        "u ∈ [-tol_u, M + tol_u], χ ∈ [0, 1]",
        || {
            let over = (-sol.u.min() - sol.tol_u).max(sol.u.max() - m - sol.tol_u);
            let chi = sol.chi.field();
            let chi_out = (-chi.min()).max(chi.max() - 1.0);
            Ok(Outcome::at_most(over.max(chi_out), 0.0).note(format!(
                "u in [{:.4}, {:.4}], M = {m}",
                sol.u.min(),
                sol.u.max()
            )))
        },
    );
    s.run("complementarity", M, "χ = 1 where u > tol_u", || {
        let worst = sol
            .u
            .values()
            .iter()
            .zip(sol.chi.values())
            .filter(|(u, _)| **u > sol.tol_u)
            .map(|(_, c)| 1.0 - c)
            .fold(0.0, f64::max);
        Ok(Outcome::at_most(worst, sc.solver.tol_chi))
    });
    s.run(
        "weak-residual",
        M,
        "variational inequality on bump tests",
        || {
            let probes = bump_probes(&sc.domain, &sc.bc, 3, 4);
            let r = weak_residual(&sol.u, &sol.chi, &sc.spec, &sc.field, &probes);
            Ok(Outcome::at_most(r, 10.0 * sc.dx2()).note(format!("{} probes", probes.len())))
        },
    );
    match exact_dam(sc) {
        Some(exact) => s.run("exact-solution", M, "one-dimensional dam solution", || {
            let err = sol.u.max_abs_diff_fn(|x| exact.value(x));
            Ok(Outcome::at_most(err, 5.0 * sc.dx2())
                .note(format!("L∞ error {:.3} cells", err / sc.dx2())))
        }),
        None => s.skip(
            "exact-solution",
            M,
            "one-dimensional dam solution",
            "no closed form",
        ),
    }
}

pub fn barrier_checks(s: &mut Suite<'_>) -> Vec<BarrierReport> {
    const M: &str = "barriers";
    let sc = s.scenario;
    let mut reports = Vec::new();
    if sc.barriers.is_empty() {
        s.skip("barrier", M, "barrier", "no strips configured");
        return reports;
    }
    let many = sc.barriers.len() > 1;
    for (i, bar) in sc.barriers.iter().enumerate() {
        let name = |base: &str| {
            if many {
                format!("{base}-{i}")
            } else {
                base.to_string()
            }
        };
        if !s.module_enabled(M) {
            for base in [
                "theta-shape",
                "barrier-residual",
                "barrier-comparison",
                "barrier-gradient",
                "barrier-flux-sign",
            ] {
                s.skip(&name(base), M, "barrier", "filtered by --only");
            }
            continue;
        }
        let spec = &sc.spec;
        s.run(&name("theta-shape"), M, "θ increasing and concave", || {
            let n = 64;
            let vals = (0..=n)
                .map(|k| {
                    theta(
                        spec,
                        bar,
                        (bar.epsilon * k as f64 / n as f64).min(bar.epsilon),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            let bad = vals
                .windows(3)
                .filter(|w| !(w[1] > w[0] && w[2] > w[1] && w[2] - w[1] <= w[1] - w[0] + 1e-14))
                .count();
            Ok(Outcome::at_most(bad as f64, 0.0).note(format!("θ(ε) = {:.9}", vals[n])))
        });
        let linear = matches!(spec.kind, NKind::Power { p } if p == 2.0);
        s.run(
            &name("barrier-residual"),
            M,
            "Δ_A v̄ = -h̄ in the strip",
            || {
                let coarse = vbar_residual(spec, bar, &sc.domain)?.max;
                if linear {
                    return Ok(Outcome::at_most(coarse, 1e-9));
                }
                let d = &sc.domain;
                let fine =
                    vbar_residual(spec, bar, &d.with_resolution(2 * d.n1 - 1, 2 * d.n2 - 1))?.max;
                Ok(Outcome::at_least(coarse / fine, 1.7).note(format!(
                    "residual {coarse:.3e} -> {fine:.3e} under refinement"
                )))
            },
        );
        let report = barrier_report(spec, &sc.field, bar, &sc.domain, &sc.solver);
        let tol = 10.0 * sc.solver.inner_tol;
        let edge = 5.0 * sc.dx2();
        let r = report.as_ref();
        s.run(
            &name("barrier-comparison"),
            M,
            "comparison 0 ≤ v_ε ≤ v̄_ε",
            || {
                let r = r.map_err(Clone::clone)?;
                Ok(
                    Outcome::at_most((-r.min_v).max(r.max_excess), tol).note(format!(
                        "min v = {:.3e}, max excess = {:.3e}",
                        r.min_v, r.max_excess
                    )),
                )
            },
        );
        s.run(
            &name("barrier-gradient"),
            M,
            "gradient bound on the strip top",
            || {
                let r = r.map_err(Clone::clone)?;
                Ok(Outcome::at_least(r.grad_margin, -edge))
            },
        );
        s.run(
            &name("barrier-flux-sign"),
            M,
            "flux sign on the strip top",
            || {
                let r = r.map_err(Clone::clone)?;
                Ok(Outcome::at_least(r.flux_sign_min, -edge))
            },
        );
        if let Ok(r) = report {
            reports.push(r);
        }
    }
    reports
}

/// Free-boundary artifacts for the output directory.
#[derive(Debug, Clone, Default)]
pub struct FreeBoundaryArtifacts {
    pub profile: Option<FreeBoundaryProfile>,
    pub continuity: Option<ContinuityReport>,
}

/// `χ` increments along orbits above this are reported: `tol_chi` plus two
/// cells of interpolation slack.
pub fn uptick_slack(sc: &Scenario) -> f64 {
    sc.solver.tol_chi + 2.0 * sc.dx2()
}

pub fn free_boundary_checks(
    s: &mut Suite<'_>,
    chart: Option<&Chart>,
    solved: Option<&Solved>,
) -> FreeBoundaryArtifacts {
    const M: &str = "free_boundary";
    let sc = s.scenario;
    let names = [
        "level-structure",
        "chi-monotonicity",
        "zero-propagation",
        "chi-indicator",
        "continuity",
        "lower-semicontinuity",
        "exact-free-boundary",
    ];
    let (Some(chart), Some(sol), true) = (chart, solved, s.module_enabled(M)) else {
        let note = if s.module_enabled(M) {
            "no solve"
        } else {
            "filtered by --only"
        };
        for n in names {
            s.skip(n, M, "free boundary", note);
        }
        return FreeBoundaryArtifacts::default();
    };
    let dt = sc.chart.dt.unwrap_or_else(|| default_dt(chart));
    let profile = extract_phi(&sol.u, chart, sol.tol_u, dt);
    let pb = pullback(&sol.u, chart, dt);
    let polyline = profile.as_ref().map(|p| p.polyline()).unwrap_or_default();

    s.run(
        "level-structure",
        M,
        "{u > 0} = {t < φ(w)} in chart coordinates",
        || {
            let ls = level_structure_violations(
                pb.as_ref().map_err(Clone::clone)?,
                profile.as_ref().map_err(Clone::clone)?,
            )?;
            Ok(Outcome::at_most(ls.fraction(), 0.01).note(format!(
                "{} islands, {} holes in {} samples",
                ls.islands, ls.holes, ls.samples
            )))
        },
    );
    s.run(
        "chi-monotonicity",
        M,
        "χ nonincreasing along orbits",
        || {
            let up = chi_monotonicity(&sol.chi, chart, dt)?;
            let note = if up.worst > 0.0 {
                format!("worst at w = {:.4}, t = {:.4}", up.w, up.t)
            } else {
                "no increase".into()
            };
            Ok(Outcome::at_most(up.worst, uptick_slack(sc)).note(note))
        },
    );
    s.run(
        "zero-propagation",
        M,
        "u vanishes above a dry point",
        || {
            let pb = pb.as_ref().map_err(Clone::clone)?;
            let probes = zero_probes(pb, sol.tol_u);
            let zp = zero_propagation(&sol.u, chart, &probes, sol.tol_u, sol.tol_u, dt)?;
            Ok(Outcome::at_most(zp.violations as f64, 0.0).note(format!(
                "{} probes checked, {} skipped",
                zp.checked, zp.skipped
            )))
        },
    );
    s.run(
        "chi-indicator",
        M,
        "χ = 1 on {u > 0} and 0 elsewhere",
        || {
            let m = chi_is_indicator(&sol.u, &sol.chi, sol.tol_u, &polyline)?;
            Ok(Outcome::at_most(m.fraction(), 0.01).note(format!(
                "{} of {} nodes outside the band",
                m.mismatched, m.counted
            )))
        },
    );
    let c_lip = lipschitz_certificate(chart, &[]).bound;
    let mut continuity = None;
    s.run("continuity", M, "continuity of φ", || {
        let profile = profile.as_ref().map_err(Clone::clone)?;
        let radii = dyadic_radii(profile, sc.verify.levels);
        let (lo, hi) = chart.w_span();
        let ws: Vec<f64> = sc
            .verify
            .probes
            .iter()
            .map(|f| lo + f * (hi - lo))
            .collect();
        let rep = continuity_report(profile, &ws, &radii, c_lip)?;
        let last = rep
            .probes
            .iter()
            .map(|p| *p.osc.last().expect("levels > 0"))
            .fold(0.0, f64::max);
        let failing: Vec<String> = rep
            .probes
            .iter()
            .filter(|p| !p.decay)
            .map(|p| format!("{:.3}", p.w0))
            .collect();
        let out = Outcome {
            ok: rep.all_decay(),
            measured: last,
            threshold: rep.final_bound,
            note: String::new(),
        };
        let note = if failing.is_empty() {
            format!("{} probes, C_lip = {c_lip:.4}", ws.len())
        } else {
            format!("no decay at w0 = {}", failing.join(" "))
        };
        continuity = Some(rep);
        Ok(out.note(note))
    });
    s.run(
        "lower-semicontinuity",
        M,
        "lower semicontinuity of φ",
        || {
            let n = lower_semicontinuity_violations(profile.as_ref().map_err(Clone::clone)?, c_lip);
            Ok(Outcome::at_most(n as f64, 0.0))
        },
    );
    match exact_dam(sc) {
        Some(exact) => s.run(
            "exact-free-boundary",
            M,
            "one-dimensional dam free boundary",
            || {
                // φ is read off {u > tol_u}, so the target is the exact tol_u level
                let p = profile.as_ref().map_err(Clone::clone)?;
                let empty = p.empty.iter().filter(|e| **e).count();
                let worst = p
                    .x_at_phi
                    .iter()
                    .map(|x| (x[1] - exact.level_at(x[0], sol.tol_u)).abs())
                    .fold(0.0, f64::max);
                let threshold = 2.0 * sc.dx2();
                Ok(Outcome {
                    ok: empty == 0 && worst <= threshold,
                    measured: worst,
                    threshold,
                    note: format!("{:.3} cells, {empty} empty orbits", worst / sc.dx2()),
                })
            },
        ),
        None => s.skip(
            "exact-free-boundary",
            M,
            "one-dimensional dam free boundary",
            "no closed form",
        ),
    }
    FreeBoundaryArtifacts {
        profile: profile.ok(),
        continuity,
    }
}
