//! The coefficient function `a`, the A-Laplacian flux `ξ ↦ a(|ξ|)/|ξ| ξ`
//! and its linearization.
//!
//! `a` must be C¹ on `[0, ∞)` with `a(0) = 0` and satisfy the two-sided
//! ellipticity bound `a₀ ≤ t a'(t)/a(t) ≤ a₁` for all `t > 0`.

use std::fmt;
use std::sync::Arc;

use crate::{dot, norm, Error, Result, Vec2};

/// Default gradient floor used when evaluating `a(m)/m`.
pub const DEFAULT_EPS_REG: f64 = 1e-8;

/// Relative tolerance of the bisection used to invert user-supplied `a`.
pub const INVERSE_REL_TOL: f64 = 1e-12;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How `a` is evaluated.
#[derive(Clone)]
pub enum NKind {
    /// `a(t) = t^(p-1)`.
    Power { p: f64 },
    /// `a(t) = t + t²`.
    AffineQuadratic,
    /// Piecewise power law through the knots `(t_i, a_i)`: log-log linear
    /// between knots and extrapolated with the end slopes. Knots must be
    /// strictly increasing in both coordinates.
    Table { knots: Vec<(f64, f64)> },
    /// User-supplied evaluators. Without `inverse`, `a⁻¹` is computed by
    /// bisection.
    Custom {
        a: ScalarFn,
        derivative: ScalarFn,
        inverse: Option<ScalarFn>,
    },
}

impl fmt::Debug for NKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NKind::Power { p } => write!(f, "Power {{ p: {p} }}"),
            NKind::AffineQuadratic => write!(f, "AffineQuadratic"),
            NKind::Table { knots } => write!(f, "Table {{ {} knots }}", knots.len()),
            NKind::Custom { inverse, .. } => {
                write!(f, "Custom {{ inverse: {} }}", inverse.is_some())
            }
        }
    }
}

/// The coefficient function together with its declared ellipticity
/// exponents and the gradient regularization floor.
#[derive(Debug, Clone)]
pub struct NFunctionSpec {
    pub kind: NKind,
    pub a0: f64,
    pub a1: f64,
    pub eps_reg: f64,
}

impl NFunctionSpec {
    /// The p-Laplacian, `a(t) = t^(p-1)`, with `a₀ = a₁ = p - 1`.
    ///
    /// No check is made here: `p = 1` builds a spec that fails
    /// [`NFunctionSpec::validate`].
    pub fn power(p: f64) -> Self {
        Self {
            kind: NKind::Power { p },
            a0: p - 1.0,
            a1: p - 1.0,
            eps_reg: DEFAULT_EPS_REG,
        }
    }

    /// `a(t) = t + t²`. The ratio `t a'/a = (1 + 2t)/(1 + t)` sweeps `[1, 2)`.
    pub fn affine_quadratic() -> Self {
        Self {
            kind: NKind::AffineQuadratic,
            a0: 1.0,
            a1: 2.0,
            eps_reg: DEFAULT_EPS_REG,
        }
    }

    /// Piecewise power law; exponents are the extreme log-log slopes.
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Domain("a table needs at least two knots".into()));
        }
        for w in knots.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if !(t0 > 0.0 && v0 > 0.0 && t1 > t0 && v1 > v0) {
                return Err(Error::Domain(format!(
                    "table knots must be positive and strictly increasing, got ({t0}, {v0}) then ({t1}, {v1})"
                )));
            }
        }
        let slopes = table_slopes(&knots);
        let a0 = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let a1 = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kind: NKind::Table { knots },
            a0,
            a1,
            eps_reg: DEFAULT_EPS_REG,
        })
    }

    pub fn custom(
        a: ScalarFn,
        derivative: ScalarFn,
        inverse: Option<ScalarFn>,
        a0: f64,
        a1: f64,
    ) -> Self {
        Self {
            kind: NKind::Custom {
                a,
                derivative,
                inverse,
            },
            a0,
            a1,
            eps_reg: DEFAULT_EPS_REG,
        }
    }

    pub fn with_eps_reg(mut self, eps_reg: f64) -> Self {
        self.eps_reg = eps_reg;
        self
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match &self.kind {
            NKind::Power { p } => format!("power(p={p})"),
            NKind::AffineQuadratic => "affine_quadratic".into(),
            NKind::Table { knots } => format!("table({} knots)", knots.len()),
            NKind::Custom { .. } => "custom".into(),
        }
    }

    /// `a(t)` without argument checks. Callers guarantee `t ≥ 0`.
    #[inline]
    pub fn a(&self, t: f64) -> f64 {
        match &self.kind {
            NKind::Power { p } => {
                if t == 0.0 && *p > 1.0 {
                    0.0
                } else {
                    t.powf(p - 1.0)
                }
            }
            NKind::AffineQuadratic => t + t * t,
            NKind::Table { knots } => {
                if t == 0.0 {
                    return 0.0;
                }
                let (i, s) = table_segment(knots, t);
                let (ti, ai) = knots[i];
                ai * (t / ti).powf(s)
            }
            NKind::Custom { a, .. } => a(t),
        }
    }

    /// `a'(t)` for `t > 0` (and the right derivative at 0 where finite).
    #[inline]
    pub fn a_prime(&self, t: f64) -> f64 {
        match &self.kind {
            NKind::Power { p } => (p - 1.0) * t.powf(p - 2.0),
            NKind::AffineQuadratic => 1.0 + 2.0 * t,
            NKind::Table { knots } => {
                let (i, s) = table_segment(knots, t);
                let (ti, ai) = knots[i];
                s * ai / ti * (t / ti).powf(s - 1.0)
            }
            NKind::Custom { derivative, .. } => derivative(t),
        }
    }

    /// `a⁻¹(s)` for `s ≥ 0`, without argument checks.
    pub fn a_inv(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        match &self.kind {
            NKind::Power { p } => s.powf(1.0 / (p - 1.0)),
            // positive root of t² + t - s, written to avoid cancellation
            NKind::AffineQuadratic => 2.0 * s / (1.0 + (1.0 + 4.0 * s).sqrt()),
            NKind::Table { knots } => {
                let last = knots.len() - 2;
                let i = knots
                    .partition_point(|&(_, v)| v <= s)
                    .saturating_sub(1)
                    .min(last);
                let s_i = log_slope(knots[i], knots[i + 1]);
                let (ti, ai) = knots[i];
                ti * (s / ai).powf(1.0 / s_i)
            }
            NKind::Custom {
                inverse: Some(inv), ..
            } => inv(s),
            NKind::Custom { inverse: None, .. } => bisect_inverse(|t| self.a(t), s),
        }
    }

    /// Checks `a(0) = 0`, `0 < a₀ ≤ a₁`, `eps_reg > 0` and the ellipticity
    /// ratio on a logarithmic sample grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_reg > 0.0) {
            return Err(Error::Domain(format!(
                "eps_reg must be positive, got {}",
                self.eps_reg
            )));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::violation(
                "ellipticity",
                format!("lower exponent a0 = {} must be positive", self.a0),
            ));
        }
        if self.a0 > self.a1 {
            return Err(Error::violation(
                "ellipticity",
                format!("a0 = {} exceeds a1 = {}", self.a0, self.a1),
            ));
        }
        let at_zero = self.a(0.0);
        if at_zero != 0.0 {
            return Err(Error::violation(
                "ellipticity",
                format!("a(0) = {at_zero}, expected 0"),
            ));
        }
        ellipticity_scan(self, &log_grid(1e-6, 1e6, 121))?;
        Ok(())
    }
}

fn log_slope((t0, v0): (f64, f64), (t1, v1): (f64, f64)) -> f64 {
    (v1 / v0).ln() / (t1 / t0).ln()
}

fn table_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    knots.windows(2).map(|w| log_slope(w[0], w[1])).collect()
}

/// Index of the knot starting the segment containing `t`, and that segment's
/// log-log slope.
fn table_segment(knots: &[(f64, f64)], t: f64) -> (usize, f64) {
    let last = knots.len() - 2;
    let i = knots
        .partition_point(|&(ti, _)| ti <= t)
        .saturating_sub(1)
        .min(last);
    (i, log_slope(knots[i], knots[i + 1]))
}

/// Inverts an increasing function with `f(0) = 0` by bracketing and
/// bisection.
pub fn bisect_inverse(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    let mut hi = 1.0;
    while f(hi) < s {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    // 200 halvings exhaust f64 resolution on any bracket
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= INVERSE_REL_TOL * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `n` points geometrically spaced on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `a(t)` with a domain check.
pub fn eval_a(spec: &NFunctionSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "a is defined on [0, inf), got t = {t}"
        )));
    }
    Ok(spec.a(t))
}

/// Extremes of `t a'(t)/a(t)` over the samples.
///
/// Fails if a sample is not positive, if `a` vanishes at a positive sample,
/// or if an extreme leaves the declared `[a₀, a₁]` (relative slack `1e-9`).
pub fn ellipticity_scan(spec: &NFunctionSpec, t_samples: &[f64]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in t_samples {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "ellipticity samples must be positive, got {t}"
            )));
        }
        let at = spec.a(t);
        if at == 0.0 {
            return Err(Error::violation(
                "ellipticity",
                format!("a({t}) = 0 at a positive argument"),
            ));
        }
        let r = t * spec.a_prime(t) / at;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let slack = 1e-9;
    if lo < spec.a0 - slack * spec.a0.abs().max(1.0)
        || hi > spec.a1 + slack * spec.a1.abs().max(1.0)
    {
        return Err(Error::violation(
            "ellipticity",
            format!(
                "ratio range [{lo}, {hi}] leaves declared [{}, {}]",
                spec.a0, spec.a1
            ),
        ));
    }
    Ok((lo, hi))
}

/// `a(|ξ|)/|ξ|` with `|ξ|` floored at `eps_reg`.
#[inline]
pub fn flux_coefficient(spec: &NFunctionSpec, magnitude: f64) -> f64 {
    let m = magnitude.max(spec.eps_reg);
    spec.a(m) / m
}

/// The regularized flux `a(m)/m · ξ`, `m = max(|ξ|, eps_reg)`.
#[inline]
pub fn flux(spec: &NFunctionSpec, xi: Vec2) -> Vec2 {
    if xi == [0.0, 0.0] {
        return [0.0, 0.0];
    }
    let c = flux_coefficient(spec, norm(xi));
    [c * xi[0], c * xi[1]]
}

/// `(flux(ξ) - flux(ζ)) · (ξ - ζ)`, positive for distinct nonzero vectors.
pub fn monotonicity_gap(spec: &NFunctionSpec, xi: Vec2, zeta: Vec2) -> Result<f64> {
    if xi == zeta {
        return Err(Error::Domain(
            "monotonicity gap needs distinct vectors".into(),
        ));
    }
    if xi == [0.0, 0.0] || zeta == [0.0, 0.0] {
        return Err(Error::Domain(
            "monotonicity gap needs nonzero vectors".into(),
        ));
    }
    let fx = flux(spec, xi);
    let fz = flux(spec, zeta);
    Ok(dot(
        [fx[0] - fz[0], fx[1] - fz[1]],
        [xi[0] - zeta[0], xi[1] - zeta[1]],
    ))
}

/// Jacobian `∂F_i/∂z_j` of the flux `F(z) = a(|z|)/|z| z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCoefficientMatrix {
    pub z: Vec2,
    pub entries: [[f64; 2]; 2],
    /// `a(|z|)/|z|`, the scale of the eigenvalue bounds.
    pub scale: f64,
}

impl FluxCoefficientMatrix {
    pub fn quadratic_form(&self, xi: Vec2) -> f64 {
        let e = &self.entries;
        e[0][0] * xi[0] * xi[0] + 2.0 * e[0][1] * xi[0] * xi[1] + e[1][1] * xi[1] * xi[1]
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let e = &self.entries;
        let mean = 0.5 * (e[0][0] + e[1][1]);
        let half = 0.5 * (e[0][0] - e[1][1]);
        let r = half.hypot(e[0][1]);
        (mean - r, mean + r)
    }
}

/// `A_ij(z) = (a'(|z|)|z| - a(|z|))/|z|³ z_i z_j + a(|z|)/|z| δ_ij`.
pub fn linearized_matrix(spec: &NFunctionSpec, z: Vec2) -> Result<FluxCoefficientMatrix> {
    let m = norm(z);
    if !(m > 0.0) {
        return Err(Error::Singular(
            "the linearized flux is undefined at z = 0".into(),
        ));
    }
    let am = spec.a(m);
    let scale = am / m;
    let rank_one = (spec.a_prime(m) * m - am) / (m * m * m);
    let off = rank_one * z[0] * z[1];
    let entries = [
        [rank_one * z[0] * z[0] + scale, off],
        [off, rank_one * z[1] * z[1] + scale],
    ];
    Ok(FluxCoefficientMatrix { z, entries, scale })
}

/// Relative slack of [`matrix_bounds_check`].
pub const MATRIX_BOUNDS_REL_TOL: f64 = 1e-12;

/// Whether `min(1,a₀) s |ξ|² ≤ ξᵀAξ ≤ max(1,a₁) s |ξ|²` with `s = a(|z|)/|z|`.
pub fn matrix_bounds_check(spec: &NFunctionSpec, z: Vec2, xi: Vec2) -> Result<bool> {
    let m = linearized_matrix(spec, z)?;
    let q = m.quadratic_form(xi);
    let xi2 = dot(xi, xi);
    let lo = spec.a0.min(1.0) * m.scale * xi2;
    let hi = spec.a1.max(1.0) * m.scale * xi2;
    let slack = MATRIX_BOUNDS_REL_TOL * m.scale * xi2;
    Ok(q >= lo - slack && q <= hi + slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::assert_close;

    mod approx_eq {
        macro_rules! assert_close {
            ($a:expr, $b:expr, $tol:expr) => {{
                let (a, b): (f64, f64) = ($a, $b);
                assert!((a - b).abs() <= $tol, "{a} vs {b} (tol {})", $tol);
            }};
        }
        pub(crate) use assert_close;
    }

    #[test]
    fn eval_a_examples() {
        assert_eq!(eval_a(&NFunctionSpec::power(2.0), 0.0).unwrap(), 0.0);
        assert_eq!(eval_a(&NFunctionSpec::power(3.0), 2.0).unwrap(), 4.0);
        assert_close!(eval_a(&NFunctionSpec::power(1.5), 4.0).unwrap(), 2.0, 1e-15);
        assert!(matches!(
            eval_a(&NFunctionSpec::power(2.0), -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ellipticity_examples() {
        let any = [0.1, 1.0, 7.0];
        let (lo, hi) = ellipticity_scan(&NFunctionSpec::power(2.0), &any).unwrap();
        assert_close!(lo, 1.0, 1e-15);
        assert_close!(hi, 1.0, 1e-15);
        let (lo, hi) = ellipticity_scan(&NFunctionSpec::power(3.0), &any).unwrap();
        assert_close!(lo, 2.0, 1e-14);
        assert_close!(hi, 2.0, 1e-14);
        let grid = log_grid(1e-6, 1e6, 49);
        let (lo, hi) = ellipticity_scan(&NFunctionSpec::power(1.5), &grid).unwrap();
        assert_close!(lo, 0.5, 1e-12);
        assert_close!(hi, 0.5, 1e-12);
    }

    #[test]
    fn ellipticity_errors() {
        let spec = NFunctionSpec::power(2.0);
        assert!(matches!(
            ellipticity_scan(&spec, &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
        let vanishing = NFunctionSpec::custom(Arc::new(|_| 0.0), Arc::new(|_| 0.0), None, 1.0, 1.0);
        assert!(matches!(
            ellipticity_scan(&vanishing, &[1.0]),
            Err(Error::SpecViolation {
                check: "ellipticity",
                ..
            })
        ));
        // p = 1: a is constant, ratio 0 and a(0) = 1
        assert!(matches!(
            NFunctionSpec::power(1.0).validate(),
            Err(Error::SpecViolation {
                check: "ellipticity",
                ..
            })
        ));
    }

    #[test]
    fn affine_quadratic_ratio_and_inverse() {
        let spec = NFunctionSpec::affine_quadratic();
        spec.validate().unwrap();
        let (lo, hi) = ellipticity_scan(&spec, &log_grid(1e-6, 1e6, 200)).unwrap();
        assert!(lo >= 1.0 && hi < 2.0);
        assert_close!(lo, 1.0, 1e-5);
        assert_close!(hi, 2.0, 1e-5);
        for s in log_grid(1e-8, 1e8, 50) {
            let t = spec.a_inv(s);
            assert_close!(spec.a(t), s, 1e-10 * (1.0 + s));
        }
    }

    #[test]
    fn bisection_inverse_matches_closed_form() {
        let spec = NFunctionSpec::custom(
            Arc::new(|t: f64| t * t),
            Arc::new(|t: f64| 2.0 * t),
            None,
            2.0,
            2.0,
        );
        spec.validate().unwrap();
        for s in log_grid(1e-6, 1e6, 40) {
            let t = spec.a_inv(s);
            assert_close!(t, s.sqrt(), 1e-11 * s.sqrt());
        }
    }

    #[test]
    fn table_kind_is_piecewise_power() {
        let spec = NFunctionSpec::table(vec![(1.0, 1.0), (2.0, 4.0), (4.0, 8.0)]).unwrap();
        assert_close!(spec.a0, 1.0, 1e-14);
        assert_close!(spec.a1, 2.0, 1e-14);
        spec.validate().unwrap();
        assert_close!(spec.a(0.5), 0.25, 1e-14);
        assert_close!(spec.a(3.0), 6.0, 1e-13);
        assert_close!(spec.a(8.0), 16.0, 1e-13);
        for s in [0.01, 0.5, 2.0, 5.0, 100.0] {
            assert_close!(spec.a(spec.a_inv(s)), s, 1e-12 * s);
        }
        assert!(NFunctionSpec::table(vec![(1.0, 1.0)]).is_err());
        assert!(NFunctionSpec::table(vec![(1.0, 2.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn flux_examples() {
        assert_eq!(flux(&NFunctionSpec::power(2.0), [3.0, 4.0]), [3.0, 4.0]);
        assert_eq!(flux(&NFunctionSpec::power(1.5), [0.0, 0.0]), [0.0, 0.0]);
        let f = flux(&NFunctionSpec::power(3.0), [3.0, 4.0]);
        assert_close!(f[0], 15.0, 1e-13);
        assert_close!(f[1], 20.0, 1e-13);
    }

    #[test]
    fn monotonicity_examples() {
        let lin = NFunctionSpec::power(2.0);
        assert_close!(
            monotonicity_gap(&lin, [1.0, 0.0], [0.0, 1.0]).unwrap(),
            2.0,
            1e-15
        );
        assert_close!(
            monotonicity_gap(&lin, [2.0, 0.0], [1.0, 0.0]).unwrap(),
            1.0,
            1e-15
        );
        let quad = NFunctionSpec::power(3.0);
        assert_close!(
            monotonicity_gap(&quad, [1.0, 0.0], [0.0, 1.0]).unwrap(),
            2.0,
            1e-15
        );
        assert!(monotonicity_gap(&lin, [1.0, 1.0], [1.0, 1.0]).is_err());
        assert!(monotonicity_gap(&lin, [0.0, 0.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn linearized_matrix_examples() {
        let m = linearized_matrix(&NFunctionSpec::power(2.0), [1.0, 1.0]).unwrap();
        assert_eq!(m.entries, [[1.0, 0.0], [0.0, 1.0]]);
        let m = linearized_matrix(&NFunctionSpec::power(3.0), [1.0, 0.0]).unwrap();
        assert_eq!(m.entries, [[2.0, 0.0], [0.0, 1.0]]);
        assert_close!(m.quadratic_form([0.0, 1.0]), 1.0, 1e-15);
        assert!(matrix_bounds_check(&NFunctionSpec::power(3.0), [1.0, 0.0], [0.0, 1.0]).unwrap());
        assert!(matches!(
            linearized_matrix(&NFunctionSpec::power(2.0), [0.0, 0.0]),
            Err(Error::Singular(_))
        ));
        assert!(matrix_bounds_check(&NFunctionSpec::power(2.0), [0.0, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn matrix_bounds_trivial_cases() {
        assert!(matrix_bounds_check(&NFunctionSpec::power(2.0), [1.0, 1.0], [1.0, 0.0]).unwrap());
        assert!(matrix_bounds_check(&NFunctionSpec::power(1.5), [0.3, -2.0], [0.0, 0.0]).unwrap());
    }

    #[test]
    fn linearized_matrix_matches_finite_differences_of_flux() {
        let step = 1e-6;
        for spec in [
            NFunctionSpec::power(1.5),
            NFunctionSpec::power(3.0),
            NFunctionSpec::affine_quadratic(),
        ] {
            for z in [[0.7, -0.2], [2.0, 3.0], [-0.05, 0.01]] {
                let m = linearized_matrix(&spec, z).unwrap();
                for j in 0..2 {
                    let mut zp = z;
                    let mut zm = z;
                    zp[j] += step;
                    zm[j] -= step;
                    let (fp, fm) = (flux(&spec, zp), flux(&spec, zm));
                    for i in 0..2 {
                        let fd = (fp[i] - fm[i]) / (2.0 * step);
                        assert_close!(m.entries[i][j], fd, 1e-6 * (1.0 + fd.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn eigenvalues_sit_inside_the_bounds() {
        for spec in [
            NFunctionSpec::power(1.5),
            NFunctionSpec::power(3.0),
            NFunctionSpec::affine_quadratic(),
        ] {
            let m = linearized_matrix(&spec, [0.4, 1.1]).unwrap();
            let (l0, l1) = m.eigenvalues();
            assert!(l0 >= spec.a0.min(1.0) * m.scale * (1.0 - 1e-12));
            assert!(l1 <= spec.a1.max(1.0) * m.scale * (1.0 + 1e-12));
        }
    }
}
