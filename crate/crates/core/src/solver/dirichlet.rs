use super::laplacian::{a_laplacian_with, face_coefficients, transport_fluxes, Coefficient};
use super::linear::{pcg, FaceOperator};
use super::{BoundaryData, NonlinearMethod, SolverConfig};
use crate::geometry::{DomainSpec, FieldSpec};
use crate::grid::{GridField, IndicatorField};
use crate::operator::NFunctionSpec;
use crate::{par, Error, Result};

/// How `div H` is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceMode {
    /// Finite-volume divergence of face fluxes `χ_face H·n`.
    #[default]
    FaceFlux,
    /// The analytic `div H` sampled at nodes.
    Pointwise,
}

/// The vector field `S` in `Δ_A u = -div S`.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Zero,
    Field {
        field: &'a FieldSpec,
        mode: SourceMode,
    },
    Indicator {
        field: &'a FieldSpec,
        chi: &'a IndicatorField,
    },
}

impl Source<'_> {
    /// Discrete `div S` at interior nodes.
    pub fn divergence(&self, domain: &DomainSpec) -> Vec<f64> {
        let d = *domain;
        match *self {
            Source::Zero => vec![0.0; d.len()],
            Source::Field {
                field,
                mode: SourceMode::FaceFlux,
            } => transport_fluxes(field, None, &d).divergence(),
            Source::Field {
                field,
                mode: SourceMode::Pointwise,
            } => {
                let mut out = vec![0.0; d.len()];
                par::fill(&mut out, |k| {
                    let (i, j) = d.ij(k);
                    if d.is_boundary(i, j) {
                        0.0
                    } else {
                        field.divergence(d.node(k))
                    }
                });
                out
            }
            Source::Indicator { field, chi } => transport_fluxes(field, Some(chi), &d).divergence(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSolution {
    pub u: GridField,
    pub iterations: usize,
    /// Final `‖Δ_A u + div S‖∞` over interior nodes.
    pub residual: f64,
    pub linear_iterations: usize,
}

/// Solves `Δ_A u = -div S` with Dirichlet data `bc`, starting from
/// `initial` (zero if absent).
pub fn solve_quasilinear_dirichlet(
    spec: &NFunctionSpec,
    source: &Source<'_>,
    bc: &BoundaryData,
    domain: &DomainSpec,
    cfg: &SolverConfig,
    initial: Option<&GridField>,
) -> Result<DirichletSolution> {
    cfg.validate()?;
    let mut u = match initial {
        Some(g) => {
            if g.domain() != domain {
                return Err(Error::Shape("initial iterate lives on another grid".into()));
            }
            g.clone()
        }
        None => GridField::zeros(*domain),
    };
    bc.apply(&mut u);
    let div_s = source.divergence(domain);
    iterate(spec, &div_s, u, cfg)
}

/// `Δ_A u + div S` at interior nodes, zero on the boundary.
pub(crate) fn residual(
    spec: &NFunctionSpec,
    eps_reg: f64,
    div_s: &[f64],
    u: &GridField,
) -> Vec<f64> {
    let mut r = a_laplacian_with(spec, eps_reg, u).into_values();
    let d = *u.domain();
    par::for_each_mut(&mut r, |k, v| {
        let (i, j) = d.ij(k);
        *v = if d.is_boundary(i, j) {
            0.0
        } else {
            *v + div_s[k]
        };
    });
    r
}

fn sup(v: &[f64]) -> f64 {
    par::max(v.len(), |k| v[k].abs())
}

/// Nonlinear iteration from an iterate whose boundary values are already set.
pub(crate) fn iterate(
    spec: &NFunctionSpec,
    div_s: &[f64],
    mut u: GridField,
    cfg: &SolverConfig,
) -> Result<DirichletSolution> {
    let eps = cfg.eps_reg;
    let omega = cfg.picard_omega.unwrap_or((1.0 / spec.a1).min(1.0));
    let max_linear = 20 * (u.domain().n1 + u.domain().n2) + 2000;
    let mut r = residual(spec, eps, div_s, &u);
    let mut rn = sup(&r);
    let mut linear_iterations = 0;
    for it in 0..cfg.max_inner {
        if !rn.is_finite() {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: rn,
            });
        }
        if rn <= cfg.inner_tol {
            return Ok(DirichletSolution {
                u,
                iterations: it,
                residual: rn,
                linear_iterations,
            });
        }
        let kind = match cfg.method {
            NonlinearMethod::Picard => Coefficient::Secant,
            NonlinearMethod::Newton => Coefficient::Tangent,
        };
        let op = FaceOperator::new(&face_coefficients(spec, eps, &u, kind));
        let (delta, rep) = pcg(&op, &r, cfg.linear_tol, max_linear, cfg.preconditioner)?;
        linear_iterations += rep.iterations;

        let step = |lambda: f64| {
            let mut next = u.clone();
            par::for_each_mut(next.values_mut(), |k, v| *v += lambda * delta[k]);
            next
        };
        match cfg.method {
            NonlinearMethod::Picard => {
                u = step(omega);
                r = residual(spec, eps, div_s, &u);
                rn = sup(&r);
            }
            NonlinearMethod::Newton => {
                // backtrack on the sup-norm residual, fall back to a damped
                // secant step if no trial decreases it
                let mut accepted = false;
                let mut lambda = 1.0;
                for _ in 0..8 {
                    let trial = step(lambda);
                    let tr = residual(spec, eps, div_s, &trial);
                    let tn = sup(&tr);
                    if tn < rn {
                        (u, r, rn) = (trial, tr, tn);
                        accepted = true;
                        break;
                    }
                    lambda *= 0.5;
                }
                if !accepted {
                    let op =
                        FaceOperator::new(&face_coefficients(spec, eps, &u, Coefficient::Secant));
                    let (delta, rep) =
                        pcg(&op, &r, cfg.linear_tol, max_linear, cfg.preconditioner)?;
                    linear_iterations += rep.iterations;
                    par::for_each_mut(u.values_mut(), |k, v| *v += omega * delta[k]);
                    r = residual(spec, eps, div_s, &u);
                    rn = sup(&r);
                }
            }
        }
    }
    if rn <= cfg.inner_tol {
        return Ok(DirichletSolution {
            u,
            iterations: cfg.max_inner,
            residual: rn,
            linear_iterations,
        });
    }
    Err(Error::SolverFailure {
        iterations: cfg.max_inner,
        residual: rn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::EdgeData;

    fn cfg(method: NonlinearMethod) -> SolverConfig {
        SolverConfig {
            method,
            ..Default::default()
        }
    }

    #[test]
    fn linear_data_is_reproduced() {
        let d = DomainSpec::unit_square(33);
        let bc = BoundaryData::from_fn(|x| x[1]);
        let h = FieldSpec::uniform();
        let src = Source::Field {
            field: &h,
            mode: SourceMode::FaceFlux,
        };
        let sol = solve_quasilinear_dirichlet(
            &NFunctionSpec::power(2.0),
            &src,
            &bc,
            &d,
            &cfg(NonlinearMethod::Picard),
            None,
        )
        .unwrap();
        assert!(sol.u.max_abs_diff_fn(|x| x[1]) < 1e-8);
        for method in [NonlinearMethod::Picard, NonlinearMethod::Newton] {
            let sol = solve_quasilinear_dirichlet(
                &NFunctionSpec::power(3.0),
                &Source::Zero,
                &bc,
                &d,
                &cfg(method),
                None,
            )
            .unwrap();
            assert!(sol.u.max_abs_diff_fn(|x| x[1]) < 1e-8, "{method:?}");
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let d = DomainSpec::unit_square(17);
        let sol = solve_quasilinear_dirichlet(
            &NFunctionSpec::power(3.0),
            &Source::Zero,
            &BoundaryData::zero(),
            &d,
            &SolverConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(sol.u.max(), 0.0);
        assert_eq!(sol.u.min(), 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn nonlinear_solutions_meet_the_residual_target() {
        let d = DomainSpec::unit_square(33);
        let bc = BoundaryData::uniform(EdgeData::Function(std::sync::Arc::new(|x: [f64; 2]| {
            (x[0] * 3.0).sin().abs() + x[1]
        })));
        let h = FieldSpec::tilted();
        let src = Source::Field {
            field: &h,
            mode: SourceMode::FaceFlux,
        };
        for p in [1.5, 2.0, 3.0] {
            for method in [NonlinearMethod::Picard, NonlinearMethod::Newton] {
                let spec = NFunctionSpec::power(p);
                let sol = solve_quasilinear_dirichlet(&spec, &src, &bc, &d, &cfg(method), None)
                    .unwrap_or_else(|e| panic!("p = {p}, {method:?}: {e}"));
                let r = residual(&spec, 1e-8, &src.divergence(&d), &sol.u);
                assert!(sup(&r) <= 1e-8);
            }
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let d = DomainSpec::unit_square(17);
        let bc = BoundaryData::from_fn(|x| x[0] * x[0] + x[1]);
        let c = SolverConfig {
            max_inner: 1,
            picard_omega: Some(0.1),
            ..Default::default()
        };
        let err = solve_quasilinear_dirichlet(
            &NFunctionSpec::power(3.0),
            &Source::Zero,
            &bc,
            &d,
            &c,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolverFailure { iterations: 1, .. }));
    }
}
