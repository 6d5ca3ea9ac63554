use super::laplacian::{face_fluxes, transport_fluxes};
use super::BoundaryData;
use crate::geometry::{DomainSpec, FieldSpec};
use crate::grid::{GridField, IndicatorField};
use crate::operator::NFunctionSpec;
use crate::par;

/// Tensor-product tent `ζ(i, j) = (1 - |i-ic|/r)⁺ (1 - |j-jc|/r)⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub centre: (usize, usize),
    pub radius: usize,
}

impl Bump {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        let r = self.radius as f64;
        let f = |a: usize, c: usize| (1.0 - (a as f64 - c as f64).abs() / r).max(0.0);
        f(i, self.centre.0) * f(j, self.centre.1)
    }

    /// Node ranges of the support (inclusive).
    fn span(&self, d: &DomainSpec) -> ((usize, usize), (usize, usize)) {
        let (ic, jc) = self.centre;
        let r = self.radius;
        (
            (ic.saturating_sub(r), (ic + r).min(d.n1 - 1)),
            (jc.saturating_sub(r), (jc + r).min(d.n2 - 1)),
        )
    }

    /// Vanishes on every boundary node outside `Γ`.
    pub fn admissible(&self, d: &DomainSpec, bc: &BoundaryData) -> bool {
        let ((i0, i1), (j0, j1)) = self.span(d);
        for j in j0..=j1 {
            for i in i0..=i1 {
                if d.is_boundary(i, j) && self.at(i, j) > 0.0 && !bc.on_gamma(d, [d.x1(i), d.x2(j)])
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Admissible tents of the given radius with centres every `stride` nodes.
pub fn bump_probes(
    domain: &DomainSpec,
    bc: &BoundaryData,
    radius: usize,
    stride: usize,
) -> Vec<Bump> {
    let radius = radius.max(1);
    let stride = stride.max(1);
    let mut out = Vec::new();
    for jc in (radius..domain.n2).step_by(stride) {
        for ic in (radius..domain.n1).step_by(stride) {
            let b = Bump {
                centre: (ic, jc),
                radius,
            };
            if b.admissible(domain, bc) {
                out.push(b);
            }
        }
    }
    out
}

/// `max_ζ ∫ (a(|∇u|)/|∇u| ∇u + χH)·∇ζ` over the probes, with the integral
/// summed over grid faces.
pub fn weak_residual(
    u: &GridField,
    chi: &IndicatorField,
    spec: &NFunctionSpec,
    field: &FieldSpec,
    probes: &[Bump],
) -> f64 {
    let d = *u.domain();
    let flux = face_fluxes(spec, spec.eps_reg, u);
    let transport = transport_fluxes(field, Some(chi), &d);
    let cell = d.dx1() * d.dx2();
    let values = par::map_slice(probes, |b| {
        let ((i0, i1), (j0, j1)) = b.span(&d);
        let mut acc = 0.0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                if i < i1 {
                    let dz = (b.at(i + 1, j) - b.at(i, j)) / d.dx1();
                    acc += (flux.e(i, j) + transport.e(i, j)) * dz;
                }
                if j < j1 {
                    let dz = (b.at(i, j + 1) - b.at(i, j)) / d.dx2();
                    acc += (flux.n(i, j) + transport.n(i, j)) * dz;
                }
            }
        }
        acc * cell
    });
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_problem_p, SolverConfig};

    #[test]
    fn zero_state_has_zero_residual() {
        let d = DomainSpec::unit_square(17);
        let bc = BoundaryData::zero();
        let probes = bump_probes(&d, &bc, 3, 4);
        assert!(!probes.is_empty());
        let r = weak_residual(
            &GridField::zeros(d),
            &IndicatorField::ones(d),
            &NFunctionSpec::power(2.0),
            &FieldSpec::uniform(),
            &probes,
        );
        assert!(r.abs() < 1e-15);
    }

    #[test]
    fn probes_respect_the_boundary() {
        let d = DomainSpec::unit_square(17);
        let bc = BoundaryData {
            gamma: Some((0.0, 1.0)),
            ..BoundaryData::zero()
        };
        let all = bump_probes(&d, &bc, 2, 1);
        assert!(all.iter().any(|b| b.centre.1 + b.radius > 16));
        assert!(all
            .iter()
            .all(|b| b.centre.1 >= 2 && b.centre.0 >= 2 && b.centre.0 <= 14));
    }

    #[test]
    fn weak_form_equals_the_tested_strong_residual() {
        let d = DomainSpec::unit_square(33);
        let spec = NFunctionSpec::power(2.0);
        let h = FieldSpec::uniform();
        let u = GridField::from_fn(d, |x| x[1] * x[1] + 0.1 * x[0]);
        let chi = IndicatorField::ones(d);
        // Δu + div H = 2 everywhere: ∫ ... ·∇ζ = -Σ 2 ζ dx1 dx2
        let b = Bump {
            centre: (16, 16),
            radius: 4,
        };
        let r = weak_residual(&u, &chi, &spec, &h, &[b]);
        let mass: f64 = (0..33)
            .flat_map(|j| (0..33).map(move |i| b.at(i, j)))
            .sum::<f64>()
            * d.dx1()
            * d.dx2();
        assert!((r + 2.0 * mass).abs() < 1e-12, "{r} vs {}", -2.0 * mass);
    }

    #[test]
    fn dam_solution_satisfies_the_weak_form() {
        let d = DomainSpec::unit_square(33);
        let bc = BoundaryData::dam(&d, 0.4, 1.0, 1.0);
        let spec = NFunctionSpec::power(2.0);
        let h = FieldSpec::uniform();
        let s = solve_problem_p(&spec, &h, &bc, &d, &SolverConfig::default()).unwrap();
        let r = weak_residual(&s.u, &s.chi, &spec, &h, &bump_probes(&d, &bc, 3, 2));
        assert!(r.abs() <= 10.0 * d.dx2(), "{r}");
    }
}
