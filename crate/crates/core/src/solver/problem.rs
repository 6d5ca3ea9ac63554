use super::anderson::Anderson;
use super::dirichlet::{iterate, Source};
use super::{BoundaryData, SolverConfig};
use crate::geometry::{DomainSpec, FieldSpec};
use crate::grid::{GridField, IndicatorField};
use crate::operator::NFunctionSpec;
use crate::{par, Error, Result};

/// Target of the indicator relaxation `χ ← (1-ω)χ + ω·s(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndicatorUpdate {
    /// `s(u) = clamp(u / tol_u, 0, 1)`.
    #[default]
    Smoothed,
    /// `s(u) = 1` on `{u > tol_u}`, else `0`.
    Sharp,
}

/// `0.5 · dx₂ · a⁻¹(h̄) · max(1, 1/a₀)`: half a cell of the steepest expected
/// slope, widened when `a` is sublinear so the smoothed transport term
/// `div(s(u) H)` keeps a cell Péclet number of at most 2.
pub fn default_tol_u(spec: &NFunctionSpec, field: &FieldSpec, domain: &DomainSpec) -> f64 {
    0.5 * domain.dx2() * spec.a_inv(field.h_upper) * (1.0 / spec.a0).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSolution {
    pub u: GridField,
    pub chi: IndicatorField,
    pub tol_u: f64,
    /// `‖χ_new - χ‖₁/(n1 n2)` per outer iteration.
    pub trace: Vec<f64>,
    pub inner_iterations: usize,
    pub linear_iterations: usize,
    /// Last inner residual.
    pub residual: f64,
    /// Magnitude of the most negative node value before clamping.
    pub undershoot: f64,
}

impl ProblemSolution {
    pub fn outer_iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Fixed point for the pair `(u, χ)`: solve `Δ_A u = -div(χH)` with the
/// Dirichlet data, relax `χ` towards the positivity indicator of `u`,
/// saturate `χ = 1` on `{u > tol_u}`, repeat.
///
/// Negative values of magnitude at most `tol_u` are clamped to zero and
/// reported in [`ProblemSolution::undershoot`]; larger ones are kept.
pub fn solve_problem_p(
    spec: &NFunctionSpec,
    field: &FieldSpec,
    bc: &BoundaryData,
    domain: &DomainSpec,
    cfg: &SolverConfig,
) -> Result<ProblemSolution> {
    cfg.validate()?;
    bc.validate(domain)?;
    let tol_u = cfg
        .tol_u
        .unwrap_or_else(|| default_tol_u(spec, field, domain));
    let n = domain.len();
    let mut chi = IndicatorField::ones(*domain);
    let mut u = GridField::zeros(*domain);
    bc.apply(&mut u);
    let mut trace = Vec::new();
    let (mut inner, mut linear) = (0, 0);
    // While χ still moves, solve only to a fraction of the source change it
    // causes; the final solve against the converged χ meets `inner_tol`.
    let mut inner_cfg = cfg.clone();
    let mut source_change = f64::INFINITY;
    let depth = match cfg.indicator {
        IndicatorUpdate::Smoothed => cfg.anderson,
        IndicatorUpdate::Sharp => 0,
    };
    let mut mixer = Anderson::new(depth, cfg.omega);
    for _ in 0..cfg.max_outer {
        inner_cfg.inner_tol = cfg.inner_tol.max(INEXACT * source_change);
        let div_s = Source::Indicator { field, chi: &chi }.divergence(domain);
        let sol = iterate(spec, &div_s, u, &inner_cfg)?;
        inner += sol.iterations;
        linear += sol.linear_iterations;
        u = sol.u;

        let target = indicator_target(&u, tol_u, cfg.indicator);
        let old = chi.values();
        let mut f = target.clone();
        par::for_each_mut(&mut f, |k, v| *v -= old[k]);
        let change = par::sum(n, |k| f[k].abs()) / n as f64;
        if trace.last().is_some_and(|&prev| change > 2.0 * prev) {
            mixer.reset();
        }
        trace.push(change);
        if change <= cfg.outer_tol {
            chi = IndicatorField::new(GridField::new(*domain, target)?)?;
            let div_s = Source::Indicator { field, chi: &chi }.divergence(domain);
            let sol = iterate(spec, &div_s, u, cfg)?;
            inner += sol.iterations;
            linear += sol.linear_iterations;
            u = sol.u;
            // the final solve moves u by far less than tol_u; re-saturate so
            // complementarity holds exactly for the returned pair
            let uv = u.values();
            let mut cv = chi.into_field();
            par::for_each_mut(cv.values_mut(), |k, c| {
                if uv[k] > tol_u {
                    *c = 1.0;
                }
            });
            chi = IndicatorField::new(cv)?;
            let undershoot = (-u.min()).max(0.0);
            if undershoot <= tol_u {
                par::for_each_mut(u.values_mut(), |_, v| *v = v.max(0.0));
            }
            return Ok(ProblemSolution {
                u,
                chi,
                tol_u,
                trace,
                inner_iterations: inner,
                linear_iterations: linear,
                residual: sol.residual,
                undershoot,
            });
        }

        let mut next = mixer.step(old, &f);
        par::for_each_mut(&mut next, |k, v| {
            *v = if target[k] == 1.0 && cfg.indicator == IndicatorUpdate::Sharp {
                1.0
            } else {
                v.clamp(0.0, 1.0)
            };
        });
        let max_change = par::max(n, |k| (next[k] - old[k]).abs());
        source_change =
            2.0 * field.h_upper * max_change * (1.0 / domain.dx1() + 1.0 / domain.dx2());
        chi = IndicatorField::new(GridField::new(*domain, next)?)?;
    }
    Err(Error::OuterNonConvergence { trace })
}

const INEXACT: f64 = 0.01;

/// `s(u)`, the value `χ` relaxes towards.
fn indicator_target(u: &GridField, tol_u: f64, kind: IndicatorUpdate) -> Vec<f64> {
    let uv = u.values();
    let mut out = vec![0.0; uv.len()];
    par::fill(&mut out, |k| match kind {
        IndicatorUpdate::Smoothed => (uv[k] / tol_u).clamp(0.0, 1.0),
        IndicatorUpdate::Sharp if uv[k] > tol_u => 1.0,
        IndicatorUpdate::Sharp => 0.0,
    });
    out
}
