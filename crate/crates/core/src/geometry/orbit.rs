use super::{DomainSpec, Dopri5, FieldSpec};
use crate::{Error, Result, Vec2};

/// Exit points are located on the boundary to within this distance.
pub const EXIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    /// Local error bound per accepted step.
    pub tol: f64,
    /// Upper bound on the step length, so stored samples resolve the grid.
    pub max_step: f64,
    pub max_steps: usize,
}

impl OrbitOptions {
    pub fn new(tol: f64, max_step: f64) -> Self {
        Self {
            tol,
            max_step,
            max_steps: 1_000_000,
        }
    }

    /// Tolerance `1e-8` and a step cap of 1/128 of the shorter side.
    pub fn for_domain(domain: &DomainSpec) -> Self {
        let side = (domain.x1_max - domain.x1_min).min(domain.x2_max - domain.x2_min);
        Self::new(1e-8, side / 128.0)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// A maximal solution of `X' = H(X)`, `X(0) = seed`, restricted to the
/// rectangle and sampled at the integrator's accepted steps.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub seed: Vec2,
    /// Increasing sample times, from `alpha_minus` to `alpha_plus`.
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
    /// `H(X(t_i))`.
    pub velocities: Vec<Vec2>,
    /// `div H(X(t_i))`.
    pub divergences: Vec<f64>,
    /// Trapezoid approximation of `∫₀^{t_i} div H(X(s)) ds`.
    pub div_integral: Vec<f64>,
    /// Index of the sample at `t = 0`.
    pub seed_index: usize,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
}

impl Orbit {
    pub fn exit_minus(&self) -> Vec2 {
        self.points[0]
    }

    pub fn exit_plus(&self) -> Vec2 {
        *self.points.last().expect("orbit has samples")
    }

    pub fn time_span(&self) -> f64 {
        self.alpha_plus - self.alpha_minus
    }

    /// Levels swept by the second coordinate.
    pub fn x2_range(&self) -> (f64, f64) {
        (self.points[0][1], self.exit_plus()[1])
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.alpha_minus && t <= self.alpha_plus
    }

    /// Index `i` with `times[i] ≤ t ≤ times[i+1]`.
    fn segment(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(self.times.len().saturating_sub(2))
    }

    /// `X(t)` by cubic Hermite interpolation with the exact slopes `H(X)`.
    pub fn point_at(&self, t: f64) -> Result<Vec2> {
        if !self.contains_time(t) {
            return Err(Error::Domain(format!(
                "t = {t} outside the orbit's interval [{}, {}]",
                self.alpha_minus, self.alpha_plus
            )));
        }
        Ok(self.hermite(t))
    }

    pub(crate) fn hermite(&self, t: f64) -> Vec2 {
        if self.times.len() == 1 {
            return self.points[0];
        }
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let dt = t1 - t0;
        if dt == 0.0 {
            return self.points[i];
        }
        let s = (t - t0) / dt;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (p0, p1) = (self.points[i], self.points[i + 1]);
        let (v0, v1) = (self.velocities[i], self.velocities[i + 1]);
        [
            h00 * p0[0] + h10 * dt * v0[0] + h01 * p1[0] + h11 * dt * v1[0],
            h00 * p0[1] + h10 * dt * v0[1] + h01 * p1[1] + h11 * dt * v1[1],
        ]
    }

    /// `∫₀^t div H(X(s)) ds` by the trapezoid rule on the samples, with the
    /// divergence interpolated linearly inside the last segment.
    pub fn div_integral_at(&self, t: f64) -> Result<f64> {
        if !self.contains_time(t) {
            return Err(Error::Domain(format!(
                "t = {t} outside the orbit's interval"
            )));
        }
        if self.times.len() == 1 {
            return Ok(0.0);
        }
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (d0, d1) = (self.divergences[i], self.divergences[i + 1]);
        let tau = t - t0;
        let slope = if t1 > t0 { (d1 - d0) / (t1 - t0) } else { 0.0 };
        Ok(self.div_integral[i] + tau * (d0 + 0.5 * slope * tau))
    }

    /// Smallest increment of the second coordinate between samples.
    pub fn min_x2_increment(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1][1] - w[0][1])
            .fold(f64::INFINITY, f64::min)
    }
}

struct HalfOrbit {
    times: Vec<f64>,
    points: Vec<Vec2>,
}

/// Integrates in direction `sign` until the orbit leaves the rectangle.
fn integrate_half(
    field: &FieldSpec,
    domain: &DomainSpec,
    seed: Vec2,
    sign: f64,
    opts: &OrbitOptions,
) -> Result<HalfOrbit> {
    let rhs = |y: Vec2| {
        let v = field.eval(y);
        [sign * v[0], sign * v[1]]
    };
    let solver = Dopri5::new(opts.tol);
    let mut times = Vec::new();
    let mut points = Vec::new();
    let (mut t, mut y) = (0.0, seed);
    let mut dy = rhs(y);
    let mut h = opts.max_step;
    for _ in 0..opts.max_steps {
        h = h.min(opts.max_step);
        let out = solver.step(&rhs, y, dy, h);
        if !(out.err.is_finite() && out.y[0].is_finite() && out.y[1].is_finite()) {
            return Err(Error::Integration(format!("non-finite state near {y:?}")));
        }
        if out.err > opts.tol {
            h *= solver.factor(out.err);
            if h < 1e-14 * (1.0 + t) {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {t}"
                )));
            }
            continue;
        }
        if domain.inset(out.y) < 0.0 {
            // The exit lies inside this step: bisect on the step length.
            let (mut lo, mut hi) = (0.0, h);
            let mut exit = (0.0, y);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let p = solver.step(&rhs, y, dy, mid).y;
                let d = domain.inset(p);
                if d >= 0.0 {
                    lo = mid;
                    exit = (mid, p);
                    if d <= EXIT_TOL {
                        break;
                    }
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            if exit.0 > 0.0 {
                times.push(t + exit.0);
                points.push(exit.1);
            }
            return Ok(HalfOrbit { times, points });
        }
        t += h;
        y = out.y;
        dy = out.dy;
        times.push(t);
        points.push(y);
        if domain.inset(y) <= EXIT_TOL {
            return Ok(HalfOrbit { times, points });
        }
        h *= solver.factor(out.err);
    }
    Err(Error::Integration(format!(
        "no exit after {} steps",
        opts.max_steps
    )))
}

/// Integrates the orbit through `seed` forward and backward until it leaves
/// the rectangle.
pub fn orbit_integrate(
    field: &FieldSpec,
    domain: &DomainSpec,
    seed: Vec2,
    opts: &OrbitOptions,
) -> Result<Orbit> {
    if !domain.contains(seed) || !seed[0].is_finite() || !seed[1].is_finite() {
        return Err(Error::Domain(format!(
            "seed {seed:?} lies outside the rectangle"
        )));
    }
    if !(field.h_lower > 0.0) {
        return Err(Error::Domain(
            "orbits need a positive lower bound on H2".into(),
        ));
    }
    let back = integrate_half(field, domain, seed, -1.0, opts)?;
    let fwd = integrate_half(field, domain, seed, 1.0, opts)?;

    let n = back.times.len() + 1 + fwd.times.len();
    let mut times = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    for (t, p) in back.times.iter().zip(&back.points).rev() {
        times.push(-t);
        points.push(*p);
    }
    let seed_index = times.len();
    times.push(0.0);
    points.push(seed);
    times.extend(fwd.times.iter().copied());
    points.extend(fwd.points.iter().copied());

    let velocities: Vec<Vec2> = points.iter().map(|&p| field.eval(p)).collect();
    let divergences: Vec<f64> = points.iter().map(|&p| field.divergence(p)).collect();
    let mut div_integral = vec![0.0; n];
    for i in seed_index + 1..n {
        div_integral[i] = div_integral[i - 1]
            + 0.5 * (divergences[i - 1] + divergences[i]) * (times[i] - times[i - 1]);
    }
    for i in (0..seed_index).rev() {
        div_integral[i] = div_integral[i + 1]
            - 0.5 * (divergences[i] + divergences[i + 1]) * (times[i + 1] - times[i]);
    }
    Ok(Orbit {
        seed,
        alpha_minus: times[0],
        alpha_plus: times[n - 1],
        times,
        points,
        velocities,
        divergences,
        div_integral,
        seed_index,
    })
}
