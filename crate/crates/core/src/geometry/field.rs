use std::fmt;
use std::sync::Arc;

use super::DomainSpec;
use crate::{par, Error, Result, Vec2};

pub type VecFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;

/// The transport field `H = (H₁, H₂)` with its divergence and the constants
/// it is required to respect on the closed rectangle:
///
/// * `|H₁| ≤ h̄`, `h̲ ≤ H₂ ≤ h̄`,
/// * `H` Lipschitz with constant `lip_const`,
/// * `0 ≤ div H ≤ h̄`.
#[derive(Clone)]
pub struct FieldSpec {
    pub name: String,
    pub h1: VecFn,
    pub h2: VecFn,
    pub div: VecFn,
    pub h_lower: f64,
    pub h_upper: f64,
    pub lip_const: f64,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("name", &self.name)
            .field("h_lower", &self.h_lower)
            .field("h_upper", &self.h_upper)
            .field("lip_const", &self.lip_const)
            .finish_non_exhaustive()
    }
}

/// Outcome of one sampled field condition.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst sampled value of the checked quantity.
    pub measured: f64,
    pub threshold: f64,
}

impl FieldSpec {
    pub fn new(
        name: impl Into<String>,
        h1: VecFn,
        h2: VecFn,
        div: VecFn,
        h_lower: f64,
        h_upper: f64,
        lip_const: f64,
    ) -> Self {
        Self {
            name: name.into(),
            h1,
            h2,
            div,
            h_lower,
            h_upper,
            lip_const,
        }
    }

    /// `H = (0, 1)`.
    pub fn uniform() -> Self {
        Self::new(
            "uniform",
            Arc::new(|_| 0.0),
            Arc::new(|_| 1.0),
            Arc::new(|_| 0.0),
            1.0,
            1.0,
            0.0,
        )
    }

    /// `H = (0, 1 + x₁/2)`, constants for `x₁ ∈ [0, 1]`.
    pub fn shear() -> Self {
        Self::new(
            "shear",
            Arc::new(|_| 0.0),
            Arc::new(|x: Vec2| 1.0 + 0.5 * x[0]),
            Arc::new(|_| 0.0),
            1.0,
            1.5,
            0.5,
        )
    }

    /// `H = (0.1 x₁, 1 + 0.1 x₂)`, `div H = 0.2`, constants for the unit
    /// square.
    pub fn tilted() -> Self {
        Self::new(
            "tilted",
            Arc::new(|x: Vec2| 0.1 * x[0]),
            Arc::new(|x: Vec2| 1.0 + 0.1 * x[1]),
            Arc::new(|_| 0.2),
            1.0,
            1.1,
            0.1,
        )
    }

    /// `H = (0, c)` for a constant `c > 0`.
    pub fn constant_vertical(c: f64) -> Self {
        Self::new(
            format!("vertical({c})"),
            Arc::new(|_| 0.0),
            Arc::new(move |_| c),
            Arc::new(|_| 0.0),
            c,
            c,
            0.0,
        )
    }

    #[inline]
    pub fn eval(&self, x: Vec2) -> Vec2 {
        [(self.h1)(x), (self.h2)(x)]
    }

    #[inline]
    pub fn divergence(&self, x: Vec2) -> f64 {
        (self.div)(x)
    }

    /// Samples the structural conditions on a `samples × samples` lattice of
    /// the closed rectangle.
    ///
    /// Returned checks: `field-bounds`, `divergence-sign`,
    /// `divergence-bound`, `divergence-consistency` (central differences of
    /// `H` against `div`, step `fd_step`) and `lipschitz`.
    pub fn check_conditions(
        &self,
        domain: &DomainSpec,
        samples: usize,
        fd_step: f64,
    ) -> Vec<FieldCheck> {
        let samples = samples.max(2);
        let lattice = DomainSpec {
            n1: samples,
            n2: samples,
            ..*domain
        };
        let n = lattice.len();
        let pt = |k: usize| lattice.node(k);

        let hb = self.h_upper;
        let bound_excess = par::max(n, |k| {
            let [a, b] = self.eval(pt(k));
            (a.abs() - hb).max(b - hb).max(self.h_lower - b)
        });
        let min_div = par::min(n, |k| self.divergence(pt(k)));
        let max_div = par::max(n, |k| self.divergence(pt(k)));

        // interior points only, so the stencil stays inside
        let h = fd_step;
        let fd_err = par::max(n, |k| {
            let x = pt(k);
            if lattice.inset(x) < h {
                return f64::NEG_INFINITY;
            }
            let d1 = ((self.h1)([x[0] + h, x[1]]) - (self.h1)([x[0] - h, x[1]])) / (2.0 * h);
            let d2 = ((self.h2)([x[0], x[1] + h]) - (self.h2)([x[0], x[1] - h])) / (2.0 * h);
            (d1 + d2 - self.divergence(x)).abs()
        });
        // O(h²) for smooth fields; the tolerance admits Lipschitz fields at O(h)
        let fd_tol = 10.0 * h * (1.0 + self.lip_const);

        let lip_ratio = par::max(n, |k| {
            let x = pt(k);
            let hx = self.eval(x);
            let mut worst = 0.0f64;
            for (di, dj) in [(1usize, 0usize), (0, 1), (1, 1)] {
                let (i, j) = lattice.ij(k);
                if i + di >= lattice.n1 || j + dj >= lattice.n2 {
                    continue;
                }
                let y = lattice.node(lattice.idx(i + di, j + dj));
                let hy = self.eval(y);
                let dist = crate::norm([y[0] - x[0], y[1] - x[1]]);
                let dh = crate::norm([hy[0] - hx[0], hy[1] - hx[1]]);
                worst = worst.max(dh / dist);
            }
            worst
        });

        vec![
            FieldCheck {
                name: "field-bounds",
                passed: self.h_lower > 0.0 && self.h_lower <= self.h_upper && bound_excess <= 1e-12,
                measured: bound_excess,
                threshold: 0.0,
            },
            FieldCheck {
                name: "divergence-sign",
                passed: min_div >= -1e-12,
                measured: min_div,
                threshold: 0.0,
            },
            FieldCheck {
                name: "divergence-bound",
                passed: max_div <= hb + 1e-12,
                measured: max_div,
                threshold: hb,
            },
            FieldCheck {
                name: "divergence-consistency",
                passed: fd_err <= fd_tol,
                measured: fd_err.max(0.0),
                threshold: fd_tol,
            },
            FieldCheck {
                name: "lipschitz",
                passed: lip_ratio <= self.lip_const * (1.0 + 1e-9) + 1e-12,
                measured: lip_ratio,
                threshold: self.lip_const,
            },
        ]
    }

    /// Fails with the first violated condition.
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        for c in self.check_conditions(domain, 33, 1e-4) {
            if !c.passed {
                return Err(Error::violation(
                    c.name,
                    format!(
                        "field `{}`: measured {:e} against {:e}",
                        self.name, c.measured, c.threshold
                    ),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fields_satisfy_their_constants() {
        let d = DomainSpec::unit_square(16);
        for f in [
            FieldSpec::uniform(),
            FieldSpec::shear(),
            FieldSpec::tilted(),
        ] {
            f.validate(&d).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        }
    }

    #[test]
    fn vanishing_vertical_component_is_rejected() {
        let d = DomainSpec::unit_square(16);
        let f = FieldSpec::new(
            "degenerate",
            Arc::new(|_| 0.0),
            Arc::new(|x: Vec2| x[1]),
            Arc::new(|_| 1.0),
            1e-3,
            1.0,
            1.0,
        );
        let err = f.validate(&d).unwrap_err();
        assert!(
            matches!(
                err,
                Error::SpecViolation {
                    check: "field-bounds",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn wrong_divergence_is_caught() {
        let d = DomainSpec::unit_square(16);
        let mut f = FieldSpec::tilted();
        f.div = Arc::new(|_| 0.1);
        let checks = f.check_conditions(&d, 17, 1e-4);
        let c = checks
            .iter()
            .find(|c| c.name == "divergence-consistency")
            .unwrap();
        assert!(!c.passed);
        assert!((c.measured - 0.1).abs() < 1e-6);
    }

    #[test]
    fn negative_divergence_is_caught() {
        let d = DomainSpec::unit_square(16);
        let f = FieldSpec::new(
            "sink",
            Arc::new(|x: Vec2| -0.1 * x[0]),
            Arc::new(|_| 1.0),
            Arc::new(|_| -0.1),
            1.0,
            1.0,
            0.1,
        );
        assert!(matches!(
            f.validate(&d),
            Err(Error::SpecViolation {
                check: "divergence-sign",
                ..
            })
        ));
    }
}
