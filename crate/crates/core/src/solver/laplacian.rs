//! Finite-volume A-Laplacian on the node grid.
//!
//! Each interior node owns a control cell bounded by four faces. A face
//! between two nodes carries the normal difference quotient and a
//! transverse component averaged from the four surrounding node
//! differences; the flux through it is `a(m)/m` times the normal component,
//! `m = max(|∇u|_face, eps_reg)`.

use crate::geometry::{DomainSpec, FieldSpec};
use crate::grid::{GridField, IndicatorField};
use crate::operator::NFunctionSpec;
use crate::{par, Vec2};

/// Which face coefficient to freeze.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    /// `a(m)/m`: flux divided by the normal gradient (Picard).
    Secant,
    /// `∂F_n/∂g_n`, the normal-normal entry of the linearized matrix
    /// (Newton in the normal direction).
    Tangent,
}

/// Per-face data on the two face families.
///
/// `east[j·(n1-1) + i]` lives on the face between nodes `(i, j)` and
/// `(i+1, j)`; `north[j·n1 + i]` between `(i, j)` and `(i, j+1)`. Faces that
/// no interior node uses hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceData {
    pub domain: DomainSpec,
    pub east: Vec<f64>,
    pub north: Vec<f64>,
}

impl FaceData {
    pub fn zeros(domain: DomainSpec) -> Self {
        Self {
            domain,
            east: vec![0.0; (domain.n1 - 1) * domain.n2],
            north: vec![0.0; domain.n1 * (domain.n2 - 1)],
        }
    }

    #[inline]
    pub fn e(&self, i: usize, j: usize) -> f64 {
        self.east[j * (self.domain.n1 - 1) + i]
    }

    #[inline]
    pub fn n(&self, i: usize, j: usize) -> f64 {
        self.north[j * self.domain.n1 + i]
    }

    /// Discrete divergence at interior nodes (zero on the boundary).
    pub fn divergence(&self) -> Vec<f64> {
        let d = self.domain;
        let (dx1, dx2) = (d.dx1(), d.dx2());
        let mut out = vec![0.0; d.len()];
        par::fill(&mut out, |k| {
            let (i, j) = d.ij(k);
            if d.is_boundary(i, j) {
                return 0.0;
            }
            (self.e(i, j) - self.e(i - 1, j)) / dx1 + (self.n(i, j) - self.n(i, j - 1)) / dx2
        });
        out
    }
}

/// Gradient on the face east of `(i, j)`; requires `0 < j < n2-1`.
#[inline]
fn east_gradient(d: &DomainSpec, u: &[f64], i: usize, j: usize) -> Vec2 {
    let at = |i: usize, j: usize| u[d.idx(i, j)];
    [
        (at(i + 1, j) - at(i, j)) / d.dx1(),
        (at(i, j + 1) - at(i, j - 1) + at(i + 1, j + 1) - at(i + 1, j - 1)) / (4.0 * d.dx2()),
    ]
}

/// Gradient on the face north of `(i, j)`; requires `0 < i < n1-1`.
#[inline]
fn north_gradient(d: &DomainSpec, u: &[f64], i: usize, j: usize) -> Vec2 {
    let at = |i: usize, j: usize| u[d.idx(i, j)];
    [
        (at(i + 1, j) - at(i - 1, j) + at(i + 1, j + 1) - at(i - 1, j + 1)) / (4.0 * d.dx1()),
        (at(i, j + 1) - at(i, j)) / d.dx2(),
    ]
}

fn coefficient(
    spec: &NFunctionSpec,
    eps_reg: f64,
    g: Vec2,
    normal: usize,
    kind: Coefficient,
) -> f64 {
    let raw = crate::norm(g);
    let m = raw.max(eps_reg);
    let secant = spec.a(m) / m;
    match kind {
        Coefficient::Secant => secant,
        Coefficient::Tangent if raw <= eps_reg => secant,
        Coefficient::Tangent => {
            let gn = g[normal];
            (spec.a_prime(m) * m - spec.a(m)) / (m * m * m) * gn * gn + secant
        }
    }
}

/// Face coefficients of `u` on every face used by an interior node.
pub fn face_coefficients(
    spec: &NFunctionSpec,
    eps_reg: f64,
    u: &GridField,
    kind: Coefficient,
) -> FaceData {
    let d = *u.domain();
    let v = u.values();
    let mut faces = FaceData::zeros(d);
    let ne = d.n1 - 1;
    par::fill(&mut faces.east, |k| {
        let (i, j) = (k % ne, k / ne);
        if j == 0 || j + 1 == d.n2 {
            return 0.0;
        }
        coefficient(spec, eps_reg, east_gradient(&d, v, i, j), 0, kind)
    });
    par::fill(&mut faces.north, |k| {
        let (i, j) = d.ij(k);
        if i == 0 || i + 1 == d.n1 {
            return 0.0;
        }
        coefficient(spec, eps_reg, north_gradient(&d, v, i, j), 1, kind)
    });
    faces
}

/// Normal fluxes `a(m)/m · ∂_n u` through the faces.
pub fn face_fluxes(spec: &NFunctionSpec, eps_reg: f64, u: &GridField) -> FaceData {
    let d = *u.domain();
    let v = u.values();
    let c = face_coefficients(spec, eps_reg, u, Coefficient::Secant);
    let mut f = c.clone();
    let ne = d.n1 - 1;
    par::for_each_mut(&mut f.east, |k, x| {
        let (i, j) = (k % ne, k / ne);
        *x *= (v[d.idx(i + 1, j)] - v[d.idx(i, j)]) / d.dx1();
    });
    par::for_each_mut(&mut f.north, |k, x| {
        let (i, j) = d.ij(k);
        if j + 1 < d.n2 {
            *x *= (v[d.idx(i, j + 1)] - v[d.idx(i, j)]) / d.dx2();
        }
    });
    f
}

/// `Δ_A u` at interior nodes, zero on the boundary, with the coefficient
/// floor taken from `spec`.
pub fn discrete_a_laplacian(spec: &NFunctionSpec, u: &GridField) -> GridField {
    a_laplacian_with(spec, spec.eps_reg, u)
}

pub(crate) fn a_laplacian_with(spec: &NFunctionSpec, eps_reg: f64, u: &GridField) -> GridField {
    let values = face_fluxes(spec, eps_reg, u).divergence();
    GridField::new(*u.domain(), values).expect("divergence of finite fluxes")
}

/// Face fluxes `χ_face H·n` of the transport term, `χ_face` the mean of the
/// two node values (or `1` without an indicator) and `H` taken at the face
/// midpoint.
pub fn transport_fluxes(
    field: &FieldSpec,
    chi: Option<&IndicatorField>,
    domain: &DomainSpec,
) -> FaceData {
    let d = *domain;
    let mut f = FaceData::zeros(d);
    let ne = d.n1 - 1;
    let c = |a: usize, b: usize| chi.map_or(1.0, |x| 0.5 * (x.values()[a] + x.values()[b]));
    par::fill(&mut f.east, |k| {
        let (i, j) = (k % ne, k / ne);
        let mid = [0.5 * (d.x1(i) + d.x1(i + 1)), d.x2(j)];
        c(d.idx(i, j), d.idx(i + 1, j)) * (field.h1)(mid)
    });
    par::fill(&mut f.north, |k| {
        let (i, j) = d.ij(k);
        if j + 1 == d.n2 {
            return 0.0;
        }
        let mid = [d.x1(i), 0.5 * (d.x2(j) + d.x2(j + 1))];
        c(d.idx(i, j), d.idx(i, j + 1)) * (field.h2)(mid)
    });
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior_max(f: &GridField, g: impl Fn(Vec2) -> f64) -> f64 {
        let d = *f.domain();
        let mut worst = 0.0f64;
        for j in 1..d.n2 - 1 {
            for i in 1..d.n1 - 1 {
                worst = worst.max((f.at(i, j) - g([d.x1(i), d.x2(j)])).abs());
            }
        }
        worst
    }

    #[test]
    fn linear_profiles_are_harmonic() {
        let d = DomainSpec::unit_square(17);
        let u = GridField::from_fn(d, |x| x[1]);
        for spec in [
            NFunctionSpec::power(2.0),
            NFunctionSpec::power(3.0),
            NFunctionSpec::power(1.5),
        ] {
            let lap = discrete_a_laplacian(&spec, &u);
            assert!(interior_max(&lap, |_| 0.0) < 1e-10);
        }
        let u = GridField::from_fn(d, |x| 0.3 * x[0] - 2.0 * x[1]);
        let lap = discrete_a_laplacian(&NFunctionSpec::power(3.0), &u);
        assert!(interior_max(&lap, |_| 0.0) < 1e-10);
    }

    #[test]
    fn stencil_is_exact_on_quadratics() {
        let d = DomainSpec::new((0.0, 1.0), (0.0, 1.0), 21, 33).unwrap();
        let lap = discrete_a_laplacian(
            &NFunctionSpec::power(2.0),
            &GridField::from_fn(d, |x| x[1] * x[1]),
        );
        assert!(interior_max(&lap, |_| 2.0) < 1e-10);
        let lap = discrete_a_laplacian(
            &NFunctionSpec::power(2.0),
            &GridField::from_fn(d, |x| x[0] * x[0] - x[0] * x[1]),
        );
        assert!(interior_max(&lap, |_| 2.0) < 1e-10);
    }

    #[test]
    fn p_laplacian_of_a_one_dimensional_power() {
        // a(t) = t², u = x₂^{3/2}: flux u'|u'| = (9/4) x₂, divergence 9/4
        let d = DomainSpec::new((0.0, 1.0), (1.0, 2.0), 9, 257).unwrap();
        let u = GridField::from_fn(d, |x| x[1].powf(1.5));
        let lap = discrete_a_laplacian(&NFunctionSpec::power(3.0), &u);
        assert!(interior_max(&lap, |_| 2.25) < 1e-5);
    }

    #[test]
    fn tangent_equals_secant_for_the_laplacian() {
        let d = DomainSpec::unit_square(9);
        let u = GridField::from_fn(d, |x| x[0] * x[1] + x[1] * x[1]);
        let s = NFunctionSpec::power(2.0);
        assert_eq!(
            face_coefficients(&s, 1e-8, &u, Coefficient::Secant),
            face_coefficients(&s, 1e-8, &u, Coefficient::Tangent)
        );
        let s = NFunctionSpec::power(3.0);
        let u = GridField::from_fn(d, |x| 2.0 * x[1]);
        let t = face_coefficients(&s, 1e-8, &u, Coefficient::Tangent);
        // vertical faces: c = |g| = 2, tangent = (p-1)c = 4
        assert!((t.n(3, 3) - 4.0).abs() < 1e-12);
        assert!((t.e(3, 3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transport_divergence_is_exact_for_linear_fields() {
        let d = DomainSpec::unit_square(17);
        let div = transport_fluxes(&FieldSpec::tilted(), None, &d).divergence();
        let g = GridField::new(d, div).unwrap();
        assert!(interior_max(&g, |_| 0.2) < 1e-12);
    }
}
