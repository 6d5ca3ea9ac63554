use std::borrow::Cow;

use super::{crossing_time, orbit_integrate, DomainSpec, FieldSpec, Orbit, OrbitOptions};
use crate::{par, Error, Result, Vec2};

/// The map `(t, w) ↦ X(t, w)` for orbits seeded on the level `x₂ = h`.
///
/// Orbits on `w_grid` are integrated once and stored; other values of `w`
/// are integrated on demand with the same options, so forward and inverse
/// evaluations are consistent with each other.
#[derive(Debug, Clone)]
pub struct Chart {
    pub level: f64,
    pub w_grid: Vec<f64>,
    pub orbits: Vec<Orbit>,
    pub field: FieldSpec,
    pub domain: DomainSpec,
    pub options: OrbitOptions,
    /// Smallest horizontal gap between adjacent stored orbits at a common
    /// level (`+inf` for a single orbit).
    pub min_separation: f64,
}

/// One row of a chart dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartProbe {
    pub w: f64,
    pub t: f64,
    pub x: Vec2,
    pub yh_formula: f64,
    pub yh_fd: f64,
}

/// Integrates one orbit per `w` and checks that adjacent orbits never meet.
pub fn chart_build(
    field: &FieldSpec,
    domain: &DomainSpec,
    h: f64,
    w_grid: &[f64],
    opts: &OrbitOptions,
) -> Result<Chart> {
    if w_grid.is_empty() {
        return Err(Error::Domain("a chart needs at least one w value".into()));
    }
    if !(h >= domain.x2_min && h <= domain.x2_max) {
        return Err(Error::Domain(format!(
            "level h = {h} is outside the rectangle"
        )));
    }
    if let Some(w) = w_grid
        .iter()
        .find(|&&w| !(w >= domain.x1_min && w <= domain.x1_max))
    {
        return Err(Error::Domain(format!(
            "w = {w} is outside the slice x2 = {h}"
        )));
    }
    if w_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Domain("w grid must be strictly increasing".into()));
    }
    let orbits = par::map_slice(w_grid, |&w| orbit_integrate(field, domain, [w, h], opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    for (o, w) in orbits.iter().zip(w_grid) {
        if o.points.len() > 1 && !(o.min_x2_increment() > 0.0) {
            return Err(Error::Geometry(format!(
                "orbit from w = {w} is not monotone in x2"
            )));
        }
    }
    let gaps = par::map(orbits.len().saturating_sub(1), |i| {
        adjacent_gap(&orbits[i], &orbits[i + 1])
    });
    let mut min_separation = f64::INFINITY;
    for (i, g) in gaps.into_iter().enumerate() {
        if !(g > 0.0) {
            return Err(Error::Geometry(format!(
                "orbits from w = {} and w = {} touch or cross (gap {g:e})",
                w_grid[i],
                w_grid[i + 1]
            )));
        }
        min_separation = min_separation.min(g);
    }
    Ok(Chart {
        level: h,
        w_grid: w_grid.to_vec(),
        orbits,
        field: field.clone(),
        domain: *domain,
        options: *opts,
        min_separation,
    })
}

/// Minimum of `x₁(right) - x₁(left)` over the left orbit's sample levels
/// that the right orbit also sweeps.
fn adjacent_gap(left: &Orbit, right: &Orbit) -> f64 {
    let (lo, hi) = right.x2_range();
    let mut gap = f64::INFINITY;
    for p in &left.points {
        if p[1] < lo || p[1] > hi {
            continue;
        }
        if let Ok(t) = crossing_time(right, p[1]) {
            gap = gap.min(right.hermite(t)[0] - p[0]);
        }
    }
    gap
}

impl Chart {
    /// A uniform chart: `count` seeds spread over the open slice, avoiding
    /// the lateral walls by half a spacing.
    pub fn uniform(
        field: &FieldSpec,
        domain: &DomainSpec,
        h: f64,
        count: usize,
        opts: &OrbitOptions,
    ) -> Result<Self> {
        let grid = interior_w_grid(domain, count);
        chart_build(field, domain, h, &grid, opts)
    }

    /// The stored orbit for `w` if it is on the grid, otherwise a fresh one.
    pub fn orbit_for(&self, w: f64) -> Result<Cow<'_, Orbit>> {
        if let Ok(i) = self.w_grid.binary_search_by(|v| v.total_cmp(&w)) {
            return Ok(Cow::Borrowed(&self.orbits[i]));
        }
        if !(w >= self.domain.x1_min && w <= self.domain.x1_max) {
            return Err(Error::Domain(format!("w = {w} is outside the chart slice")));
        }
        orbit_integrate(&self.field, &self.domain, [w, self.level], &self.options).map(Cow::Owned)
    }

    pub fn forward(&self, t: f64, w: f64) -> Result<Vec2> {
        self.orbit_for(w)?.point_at(t)
    }

    /// `T⁻¹(x)`: bracket `x` between adjacent stored orbits at the level
    /// `x₂`, then refine `w` by safeguarded secant steps on fresh orbits and
    /// read `t` off the monotone second coordinate.
    pub fn inverse(&self, x: Vec2) -> Result<(f64, f64)> {
        let at_level =
            |o: &Orbit| -> Option<f64> { crossing_time(o, x[1]).ok().map(|t| o.hermite(t)[0]) };
        let xs: Vec<Option<f64>> = self.orbits.iter().map(at_level).collect();
        let mut bracket = None;
        for i in 0..self.orbits.len() {
            if let Some(xi) = xs[i] {
                if xi == x[0] {
                    let t = crossing_time(&self.orbits[i], x[1])?;
                    return Ok((t, self.w_grid[i]));
                }
            }
            if i + 1 < self.orbits.len() {
                if let (Some(a), Some(b)) = (xs[i], xs[i + 1]) {
                    if a < x[0] && x[0] < b {
                        bracket = Some((self.w_grid[i], a, self.w_grid[i + 1], b));
                        break;
                    }
                }
            }
        }
        let (mut wa, mut fa, mut wb, mut fb) = bracket
            .ok_or_else(|| Error::Geometry(format!("point {x:?} is not covered by the chart")))?;
        fa -= x[0];
        fb -= x[0];
        let eval = |w: f64| -> Result<(f64, Orbit)> {
            let o = orbit_integrate(&self.field, &self.domain, [w, self.level], &self.options)?;
            let t = crossing_time(&o, x[1])?;
            Ok((o.hermite(t)[0] - x[0], o))
        };
        // Illinois variant of regula falsi: keeps the bracket, converges
        // superlinearly.
        let mut side = 0i8;
        let mut best = None;
        for _ in 0..100 {
            let w = (wa * fb - wb * fa) / (fb - fa);
            let (fw, o) = eval(w)?;
            best = Some((w, o));
            if fw.abs() <= 1e-13 || (wb - wa).abs() <= 1e-15 {
                break;
            }
            if (fw < 0.0) == (fa < 0.0) {
                wa = w;
                fa = fw;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                wb = w;
                fb = fw;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        let (w, o) = best.expect("at least one secant step");
        Ok((crossing_time(&o, x[1])?, w))
    }

    /// Range of `w` covered by the stored orbits.
    pub fn w_span(&self) -> (f64, f64) {
        (self.w_grid[0], *self.w_grid.last().expect("nonempty grid"))
    }

    /// Upper constant in `h̲ ≤ -Y_h ≤ C h̄`: `C = exp(h̄ T)` with `T` the
    /// longest orbit time span.
    pub fn jacobian_bound_constant(&self) -> f64 {
        let span = self.orbits.iter().map(Orbit::time_span).fold(0.0, f64::max);
        (self.field.h_upper * span).exp()
    }

    pub fn probe(&self, t: f64, w: f64, step: f64) -> Result<ChartProbe> {
        Ok(ChartProbe {
            w,
            t,
            x: self.forward(t, w)?,
            yh_formula: jacobian_formula(self, t, w)?,
            yh_fd: jacobian_fd(self, t, w, step)?,
        })
    }
}

/// `count` values of `w` at the midpoints of a uniform partition of
/// `[x1_min, x1_max]`.
pub(crate) fn interior_w_grid(domain: &DomainSpec, count: usize) -> Vec<f64> {
    let width = domain.x1_max - domain.x1_min;
    (0..count)
        .map(|i| domain.x1_min + width * (i as f64 + 0.5) / count as f64)
        .collect()
}

/// Jacobian determinant from the closed form
/// `Y_h(t, w) = -H₂(w, h) exp(∫₀ᵗ div H(X(s, w)) ds)`.
pub fn jacobian_formula(chart: &Chart, t: f64, w: f64) -> Result<f64> {
    let orbit = chart.orbit_for(w)?;
    let integral = orbit.div_integral_at(t)?;
    Ok(-(chart.field.h2)([w, chart.level]) * integral.exp())
}

/// Central-difference determinant of `∂(x₁, x₂)/∂(t, w)`.
pub fn jacobian_fd(chart: &Chart, t: f64, w: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let d = &chart.domain;
    if w - step < d.x1_min || w + step > d.x1_max {
        return Err(Error::Domain(format!(
            "stencil w = {w} ± {step} leaves the slice"
        )));
    }
    let centre = chart.orbit_for(w)?;
    let left = chart.orbit_for(w - step)?;
    let right = chart.orbit_for(w + step)?;
    for o in [&centre, &left, &right] {
        if !o.contains_time(t - step) || !o.contains_time(t + step) {
            return Err(Error::Domain(format!(
                "stencil t = {t} ± {step} leaves an orbit's interval"
            )));
        }
    }
    let xp = centre.hermite(t + step);
    let xm = centre.hermite(t - step);
    let wp = right.hermite(t);
    let wm = left.hermite(t);
    let inv = 0.5 / step;
    let dt = [(xp[0] - xm[0]) * inv, (xp[1] - xm[1]) * inv];
    let dw = [(wp[0] - wm[0]) * inv, (wp[1] - wm[1]) * inv];
    Ok(dt[0] * dw[1] - dw[0] * dt[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DomainSpec {
        DomainSpec::unit_square(16)
    }

    #[test]
    fn constant_field_chart_is_a_shear_free_translation() {
        let d = unit();
        let grid: Vec<f64> = (0..11).map(|i| 0.05 + 0.09 * i as f64).collect();
        let chart = chart_build(
            &FieldSpec::uniform(),
            &d,
            0.3,
            &grid,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        assert_eq!(chart.orbits.len(), 11);
        assert!((chart.min_separation - 0.09).abs() < 1e-12);
        for &w in &grid {
            assert_eq!(jacobian_formula(&chart, 0.2, w).unwrap(), -1.0);
            let fd = jacobian_fd(&chart, 0.2, w, 1e-3).unwrap();
            assert!((fd + 1.0).abs() < 1e-12, "{fd}");
        }
    }

    #[test]
    fn single_orbit_chart() {
        let d = unit();
        let chart = chart_build(
            &FieldSpec::tilted(),
            &d,
            0.5,
            &[0.5],
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        assert_eq!(chart.orbits.len(), 1);
        assert_eq!(chart.min_separation, f64::INFINITY);
    }

    #[test]
    fn tilted_chart_orbits_do_not_cross() {
        let d = unit();
        let chart = Chart::uniform(
            &FieldSpec::tilted(),
            &d,
            0.2,
            21,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        assert!(chart.min_separation > 0.0);
        for o in &chart.orbits {
            assert!(o.min_x2_increment() > 0.0);
        }
    }

    #[test]
    fn tilted_jacobian_closed_form() {
        let d = unit();
        let chart = Chart::uniform(
            &FieldSpec::tilted(),
            &d,
            0.3,
            9,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        let h2 = 1.0 + 0.1 * 0.3;
        for &w in &chart.w_grid {
            assert!((jacobian_formula(&chart, 0.0, w).unwrap() + h2).abs() < 1e-15);
            for t in [-0.2, 0.1, 0.5] {
                let y = jacobian_formula(&chart, t, w).unwrap();
                assert!((y + h2 * (0.2 * t).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn finite_difference_jacobian_is_second_order() {
        let d = unit();
        let opts = OrbitOptions::for_domain(&d).with_tol(1e-13);
        let chart = Chart::uniform(&FieldSpec::tilted(), &d, 0.3, 5, &opts).unwrap();
        let (t, w) = (0.25, 0.47);
        let exact = jacobian_formula(&chart, t, w).unwrap();
        let e1 = (jacobian_fd(&chart, t, w, 4e-2).unwrap() - exact).abs();
        let e2 = (jacobian_fd(&chart, t, w, 2e-2).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!(
            (3.0..5.0).contains(&ratio),
            "ratio {ratio}, errors {e1:e} {e2:e}"
        );
        let rel = (jacobian_fd(&chart, t, w, 1e-3).unwrap() / exact - 1.0).abs();
        assert!(rel < 1e-3);
    }

    #[test]
    fn inverse_recovers_parameters() {
        let d = unit();
        let chart = Chart::uniform(
            &FieldSpec::tilted(),
            &d,
            0.3,
            17,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        for (t, w) in [(0.1, 0.33), (-0.2, 0.71), (0.45, 0.52)] {
            let x = chart.forward(t, w).unwrap();
            let (ti, wi) = chart.inverse(x).unwrap();
            assert!(
                (ti - t).abs() < 1e-9 && (wi - w).abs() < 1e-9,
                "({ti}, {wi}) vs ({t}, {w})"
            );
        }
    }

    #[test]
    fn stencil_outside_is_a_domain_error() {
        let d = unit();
        let chart = Chart::uniform(
            &FieldSpec::uniform(),
            &d,
            0.5,
            4,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        assert!(matches!(
            jacobian_fd(&chart, 0.0, 0.9995, 1e-3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            jacobian_fd(&chart, 0.4999, 0.5, 1e-3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            jacobian_formula(&chart, 0.9, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_bad_grids() {
        let d = unit();
        let opts = OrbitOptions::for_domain(&d);
        assert!(chart_build(&FieldSpec::uniform(), &d, 0.5, &[], &opts).is_err());
        assert!(chart_build(&FieldSpec::uniform(), &d, 0.5, &[0.5, 0.4], &opts).is_err());
        assert!(chart_build(&FieldSpec::uniform(), &d, 0.5, &[1.2], &opts).is_err());
        assert!(chart_build(&FieldSpec::uniform(), &d, 1.5, &[0.5], &opts).is_err());
    }
}
