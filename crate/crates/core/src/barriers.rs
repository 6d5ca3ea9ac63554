//! The explicit barrier `v̄_ε(x) = θ_ε(k + ε - x₂)` on a thin strip below a
//! level `k + ε`, the comparison solution `v_ε` sharing its boundary values,
//! and the checks tying the two together.

use crate::geometry::{DomainSpec, FieldSpec};
use crate::grid::GridField;
use crate::io::Table;
use crate::operator::{flux, NFunctionSpec};
use crate::solver::{
    discrete_a_laplacian, solve_quasilinear_dirichlet, BoundaryData, SolverConfig, Source,
    SourceMode,
};
use crate::{norm, par, Error, Result};

/// Absolute tolerance for the θ quadrature.
pub const THETA_TOL: f64 = 1e-12;

/// A strip `{w1 < x₁ < w2, k < x₂ < k + ε}` with the field bounds it was
/// built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub epsilon: f64,
    pub k: f64,
    pub w1: f64,
    pub w2: f64,
    pub h_upper: f64,
    pub h_lower: f64,
}

impl BarrierSpec {
    pub fn new(field: &FieldSpec, epsilon: f64, k: f64, w: (f64, f64)) -> Self {
        Self {
            epsilon,
            k,
            w1: w.0,
            w2: w.1,
            h_upper: field.h_upper,
            h_lower: field.h_lower,
        }
    }

    /// Largest admissible thickness, `h̲/(2h̄)` (excluded).
    pub fn epsilon_cap(&self) -> f64 {
        self.h_lower / (2.0 * self.h_upper)
    }

    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        if !(self.h_lower > 0.0 && self.h_upper >= self.h_lower) {
            return Err(Error::violation(
                "field bounds",
                format!("h̲ = {}, h̄ = {}", self.h_lower, self.h_upper),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.epsilon_cap()) {
            return Err(Error::violation(
                "strip thickness",
                format!(
                    "ε = {} must lie in (0, {})",
                    self.epsilon,
                    self.epsilon_cap()
                ),
            ));
        }
        let inside = self.w1 > domain.x1_min
            && self.w2 < domain.x1_max
            && self.w1 < self.w2
            && self.k > domain.x2_min
            && self.k + self.epsilon < domain.x2_max;
        if !inside {
            return Err(Error::Domain(format!(
                "strip [{}, {}] x [{}, {}] is not compactly inside the domain",
                self.w1,
                self.w2,
                self.k,
                self.k + self.epsilon
            )));
        }
        Ok(())
    }

    /// Moves `k` and `k + ε` onto grid rows and `w1`, `w2` onto columns,
    /// keeping the strip inside the original one so `ε` stays admissible.
    /// Returns the snapped spec with its node block `(i0, i1, j0, j1)`.
    pub fn snapped(&self, domain: &DomainSpec) -> Result<(Self, [usize; 4])> {
        self.validate(domain)?;
        let up = |x: f64, lo: f64, h: f64| ((x - lo) / h - 1e-9).ceil() as usize;
        let down = |x: f64, lo: f64, h: f64| ((x - lo) / h + 1e-9).floor() as usize;
        let (dx1, dx2) = (domain.dx1(), domain.dx2());
        let i0 = up(self.w1, domain.x1_min, dx1);
        let i1 = down(self.w2, domain.x1_min, dx1);
        let j0 = up(self.k, domain.x2_min, dx2);
        let j1 = down(self.k + self.epsilon, domain.x2_min, dx2);
        if j1 < j0 + 4 || i1 < i0 + 2 {
            return Err(Error::Resolution(format!(
                "strip covers {} rows and {} columns of the grid; need at least 5 and 3",
                (j1 + 1).saturating_sub(j0),
                (i1 + 1).saturating_sub(i0)
            )));
        }
        let (k, top) = (domain.x2(j0), domain.x2(j1));
        let snapped = Self {
            k,
            epsilon: top - k,
            w1: domain.x1(i0),
            w2: domain.x1(i1),
            ..*self
        };
        Ok((snapped, [i0, i1, j0, j1]))
    }
}

/// `θ_ε(t) = ∫₀ᵗ a⁻¹(2h̄ε - h̄s) ds` for `t ∈ [0, ε]`.
pub fn theta(spec: &NFunctionSpec, bar: &BarrierSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= bar.epsilon) {
        return Err(Error::Domain(format!(
            "θ_ε needs t in [0, {}], got {t}",
            bar.epsilon
        )));
    }
    let (h, e) = (bar.h_upper, bar.epsilon);
    Ok(adaptive_simpson(
        |s| spec.a_inv(2.0 * h * e - h * s),
        0.0,
        t,
        THETA_TOL,
    ))
}

/// `θ_ε(ε)`, the smallness threshold paired with the barrier.
pub fn theta_eps(spec: &NFunctionSpec, bar: &BarrierSpec) -> f64 {
    theta(spec, bar, bar.epsilon).unwrap_or(f64::NAN)
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `θ_ε(k + ε - x₂)` by grid row, clamped to `[0, θ_ε(ε)]` outside the strip.
fn vbar_rows(spec: &NFunctionSpec, bar: &BarrierSpec, domain: &DomainSpec) -> Vec<f64> {
    par::map(domain.n2, |j| {
        let t = (bar.k + bar.epsilon - domain.x2(j)).clamp(0.0, bar.epsilon);
        theta(spec, bar, t).expect("argument clamped to [0, ε]")
    })
}

/// `v̄_ε` at the nodes of `domain`: zero above the strip, `θ_ε(ε)` below it.
pub fn vbar_field(spec: &NFunctionSpec, bar: &BarrierSpec, domain: &DomainSpec) -> GridField {
    let rows = vbar_rows(spec, bar, domain);
    let n1 = domain.n1;
    let mut out = GridField::zeros(*domain);
    par::for_rows_mut(out.values_mut(), n1, |j, row| row.fill(rows[j]));
    out
}

/// Result of [`vbar_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierResidual {
    /// `max |Δ_A^h v̄_ε + h̄|` over strip-interior nodes.
    pub max: f64,
    /// `max / dx₂`, the first-order truncation constant.
    pub c_trunc: f64,
    pub rows: usize,
}

/// How far the discrete operator applied to `v̄_ε` is from `-h̄` on nodes
/// whose whole stencil lies in the closed strip.
pub fn vbar_residual(
    spec: &NFunctionSpec,
    bar: &BarrierSpec,
    domain: &DomainSpec,
) -> Result<BarrierResidual> {
    bar.validate(domain)?;
    let d = *domain;
    let slack = 1e-9 * d.dx2();
    let in_strip = |j: usize| d.x2(j) >= bar.k - slack && d.x2(j) <= bar.k + bar.epsilon + slack;
    let rows: Vec<usize> = (1..d.n2 - 1)
        .filter(|&j| in_strip(j - 1) && in_strip(j + 1))
        .collect();
    let cols: Vec<usize> = (1..d.n1 - 1)
        .filter(|&i| d.x1(i) > bar.w1 && d.x1(i) < bar.w2)
        .collect();
    if rows.len() < 3 || cols.is_empty() {
        return Err(Error::Resolution(format!(
            "strip interior has {} rows and {} columns, need at least 3 and 1",
            rows.len(),
            cols.len()
        )));
    }
    let lap = discrete_a_laplacian(spec, &vbar_field(spec, bar, domain));
    let max = rows
        .iter()
        .flat_map(|&j| cols.iter().map(move |&i| (i, j)))
        .map(|(i, j)| (lap.at(i, j) + bar.h_upper).abs())
        .fold(0.0, f64::max);
    Ok(BarrierResidual {
        max,
        c_trunc: max / d.dx2(),
        rows: rows.len(),
    })
}

/// `v_ε` on the snapped strip grid together with `v̄_ε` on the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSolution {
    pub bar: BarrierSpec,
    /// Node block of the strip in the parent grid, `(i0, i1, j0, j1)`.
    pub block: [usize; 4],
    pub v: GridField,
    pub vbar: GridField,
    pub iterations: usize,
    pub residual: f64,
}

impl ComparisonSolution {
    /// `v_ε` on the parent grid, extended by zero outside the strip.
    pub fn extended(&self, parent: &DomainSpec) -> GridField {
        let [i0, i1, j0, j1] = self.block;
        let mut out = GridField::zeros(*parent);
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.set(i, j, self.v.at(i - i0, j - j0));
            }
        }
        out
    }
}

/// Solves `Δ_A v = -div H` on the strip with `v = v̄_ε` on its boundary.
/// The strip is snapped to `domain`'s nodes first.
pub fn solve_v_eps(
    spec: &NFunctionSpec,
    field: &FieldSpec,
    bar: &BarrierSpec,
    domain: &DomainSpec,
    cfg: &SolverConfig,
) -> Result<ComparisonSolution> {
    let (bar, block) = bar.snapped(domain)?;
    let [i0, i1, j0, j1] = block;
    let strip = domain.subgrid(i0, i1, j0, j1)?;
    let vbar = vbar_field(spec, &bar, &strip);
    let rows = vbar_rows(spec, &bar, &strip);
    let (x2_min, dx2, n2) = (strip.x2_min, strip.dx2(), strip.n2);
    let bc = BoundaryData::from_fn(move |x| {
        let j = (((x[1] - x2_min) / dx2).round().max(0.0) as usize).min(n2 - 1);
        rows[j]
    });
    let src = Source::Field {
        field,
        mode: SourceMode::FaceFlux,
    };
    let sol = solve_quasilinear_dirichlet(spec, &src, &bc, &strip, cfg, Some(&vbar))?;
    Ok(ComparisonSolution {
        bar,
        block,
        v: sol.u,
        vbar,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// `(min v_ε, max(v_ε - v̄_ε))`.
pub fn comparison_check(v_eps: &GridField, vbar: &GridField) -> Result<(f64, f64)> {
    v_eps.same_grid(vbar)?;
    let (v, b) = (v_eps.values(), vbar.values());
    let excess = par::max(v.len(), |k| v[k] - b[k]);
    Ok((v_eps.min(), excess))
}

/// Gradient bound and flux sign along the top edge `L = {x₂ = k + ε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopEdge {
    /// `a⁻¹(2h̄ε) - max_L |∇v_ε|`.
    pub grad_margin: f64,
    /// `min_L (a(|∇v|)/|∇v| ∇v · e₂ + H₂)`.
    pub flux_sign_min: f64,
}

/// Evaluates the top-edge bounds on the top row of `v_eps`'s grid, which must
/// be the snapped strip of `bar`. `∂₂` is the one-sided second-order
/// difference, `∂₁` central (one-sided second order at the ends).
pub fn top_edge_checks(
    spec: &NFunctionSpec,
    field: &FieldSpec,
    v_eps: &GridField,
    bar: &BarrierSpec,
) -> Result<TopEdge> {
    let d = *v_eps.domain();
    if d.n2 < 3 || d.n1 < 3 {
        return Err(Error::Resolution(
            "top-edge differences need three rows and columns".into(),
        ));
    }
    if (d.x2_max - (bar.k + bar.epsilon)).abs() > 1e-9 * d.dx2() {
        return Err(Error::Shape(format!(
            "grid top {} is not the strip top {}",
            d.x2_max,
            bar.k + bar.epsilon
        )));
    }
    let j = d.n2 - 1;
    let (h1, h2) = (d.dx1(), d.dx2());
    let v = |i: usize, j: usize| v_eps.at(i, j);
    let samples = par::map(d.n1, |i| {
        let d2 = (3.0 * v(i, j) - 4.0 * v(i, j - 1) + v(i, j - 2)) / (2.0 * h2);
        let d1 = if i == 0 {
            (-3.0 * v(0, j) + 4.0 * v(1, j) - v(2, j)) / (2.0 * h1)
        } else if i + 1 == d.n1 {
            (3.0 * v(i, j) - 4.0 * v(i - 1, j) + v(i - 2, j)) / (2.0 * h1)
        } else {
            (v(i + 1, j) - v(i - 1, j)) / (2.0 * h1)
        };
        let g = [d1, d2];
        let x = [d.x1(i), d.x2(j)];
        (norm(g), flux(spec, g)[1] + field.eval(x)[1])
    });
    let max_grad = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let flux_sign_min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(TopEdge {
        grad_margin: spec.a_inv(2.0 * bar.h_upper * bar.epsilon) - max_grad,
        flux_sign_min,
    })
}

/// One row of the barrier report.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub epsilon: f64,
    pub theta_eps: f64,
    pub vbar_residual: f64,
    pub min_v: f64,
    pub max_excess: f64,
    pub grad_margin: f64,
    pub flux_sign_min: f64,
    pub solution: ComparisonSolution,
}

/// Runs the residual, comparison and top-edge checks for one strip.
pub fn barrier_report(
    spec: &NFunctionSpec,
    field: &FieldSpec,
    bar: &BarrierSpec,
    domain: &DomainSpec,
    cfg: &SolverConfig,
) -> Result<BarrierReport> {
    let solution = solve_v_eps(spec, field, bar, domain, cfg)?;
    let snapped = solution.bar;
    let residual = vbar_residual(spec, &snapped, domain)?;
    let (min_v, max_excess) = comparison_check(&solution.v, &solution.vbar)?;
    let edge = top_edge_checks(spec, field, &solution.v, &snapped)?;
    Ok(BarrierReport {
        epsilon: snapped.epsilon,
        theta_eps: theta_eps(spec, &snapped),
        vbar_residual: residual.max,
        min_v,
        max_excess,
        grad_margin: edge.grad_margin,
        flux_sign_min: edge.flux_sign_min,
        solution,
    })
}

pub fn report_table(reports: &[BarrierReport]) -> Table {
    let mut t = Table::new(&[
        "epsilon",
        "theta_eps",
        "vbar_residual",
        "min_v",
        "max_excess",
        "grad_margin",
        "flux_sign_min",
    ]);
    for r in reports {
        t.push(&[
            r.epsilon,
            r.theta_eps,
            r.vbar_residual,
            r.min_v,
            r.max_excess,
            r.grad_margin,
            r.flux_sign_min,
        ]);
    }
    t
}
