use std::fmt;
use std::sync::Arc;

use crate::geometry::DomainSpec;
use crate::grid::GridField;
use crate::{par, Error, Result, Vec2};

/// Dirichlet values along one edge.
#[derive(Clone)]
pub enum EdgeData {
    Constant(f64),
    /// Piecewise linear in the edge coordinate (`x₁` on the bottom and top
    /// edges, `x₂` on the sides), constant beyond the end knots.
    Linear(Vec<(f64, f64)>),
    Function(Arc<dyn Fn(Vec2) -> f64 + Send + Sync>),
}

impl fmt::Debug for EdgeData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeData::Constant(c) => write!(f, "Constant({c})"),
            EdgeData::Linear(k) => f.debug_tuple("Linear").field(k).finish(),
            EdgeData::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl EdgeData {
    /// `(c - s·(x₂ - x2_min))⁺`, the side trace of a dam profile.
    pub fn ramp(c: f64, slope: f64, x2_min: f64) -> Self {
        EdgeData::Linear(vec![(x2_min, c), (x2_min + c / slope, 0.0)])
    }

    fn eval(&self, x: Vec2, coord: f64) -> f64 {
        match self {
            EdgeData::Constant(c) => *c,
            EdgeData::Function(f) => f(x),
            EdgeData::Linear(k) => {
                let i = k.partition_point(|&(s, _)| s <= coord);
                if i == 0 {
                    return k[0].1;
                }
                if i == k.len() {
                    return k[k.len() - 1].1;
                }
                let ((s0, v0), (s1, v1)) = (k[i - 1], k[i]);
                v0 + (v1 - v0) * (coord - s0) / (s1 - s0)
            }
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        if let EdgeData::Linear(k) = self {
            if k.is_empty() {
                return Err(Error::Domain(format!("{name} edge: empty knot list")));
            }
            if k.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::Domain(format!("{name} edge: knots must increase")));
            }
        }
        Ok(())
    }
}

/// Dirichlet data on the four edges and the segment `Γ` of the top edge
/// where `u = 0`.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub bottom: EdgeData,
    pub top: EdgeData,
    pub left: EdgeData,
    pub right: EdgeData,
    /// `x₁`-range of `Γ` on the top edge.
    pub gamma: Option<(f64, f64)>,
}

impl BoundaryData {
    pub fn zero() -> Self {
        Self::uniform(EdgeData::Constant(0.0))
    }

    pub fn uniform(e: EdgeData) -> Self {
        Self {
            bottom: e.clone(),
            top: e.clone(),
            left: e.clone(),
            right: e,
            gamma: None,
        }
    }

    /// Values of `g` on all four edges.
    pub fn from_fn(g: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self::uniform(EdgeData::Function(Arc::new(g)))
    }

    /// Dam data: `U0` on the bottom, `Γ` the whole top edge, ramps to zero
    /// with the given slopes on the sides.
    pub fn dam(domain: &DomainSpec, u0: f64, left_slope: f64, right_slope: f64) -> Self {
        Self {
            bottom: EdgeData::Constant(u0),
            top: EdgeData::Constant(0.0),
            left: EdgeData::ramp(u0, left_slope, domain.x2_min),
            right: EdgeData::ramp(u0, right_slope, domain.x2_min),
            gamma: Some((domain.x1_min, domain.x1_max)),
        }
    }

    pub fn on_gamma(&self, domain: &DomainSpec, x: Vec2) -> bool {
        x[1] == domain.x2_max && self.gamma.is_some_and(|(a, b)| x[0] >= a && x[0] <= b)
    }

    /// Value at a boundary node; `None` inside.
    pub fn value(&self, domain: &DomainSpec, i: usize, j: usize) -> Option<f64> {
        if !domain.is_boundary(i, j) {
            return None;
        }
        let x = [domain.x1(i), domain.x2(j)];
        if self.on_gamma(domain, x) {
            return Some(0.0);
        }
        let v = if j == 0 {
            self.bottom.eval(x, x[0])
        } else if j + 1 == domain.n2 {
            self.top.eval(x, x[0])
        } else if i == 0 {
            self.left.eval(x, x[1])
        } else {
            self.right.eval(x, x[1])
        };
        Some(v)
    }

    /// Overwrites the boundary nodes of `u`.
    pub fn apply(&self, u: &mut GridField) {
        let d = *u.domain();
        par::for_each_mut(u.values_mut(), |k, v| {
            let (i, j) = d.ij(k);
            if let Some(b) = self.value(&d, i, j) {
                *v = b;
            }
        });
    }

    /// Largest boundary value (the bound `M`).
    pub fn max_value(&self, domain: &DomainSpec) -> f64 {
        let d = *domain;
        par::max(d.len(), |k| {
            let (i, j) = d.ij(k);
            self.value(&d, i, j).unwrap_or(f64::NEG_INFINITY)
        })
    }

    /// Knots increase, `Γ` sits on the top edge, every boundary value is
    /// finite and nonnegative.
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        for (name, e) in [
            ("bottom", &self.bottom),
            ("top", &self.top),
            ("left", &self.left),
            ("right", &self.right),
        ] {
            e.check(name)?;
        }
        if let Some((a, b)) = self.gamma {
            if !(a < b && a >= domain.x1_min && b <= domain.x1_max) {
                return Err(Error::Domain(format!(
                    "Γ = [{a}, {b}] must be a nondegenerate part of the top edge [{}, {}]",
                    domain.x1_min, domain.x1_max
                )));
            }
        }
        let d = *domain;
        let worst = par::min(d.len(), |k| {
            let (i, j) = d.ij(k);
            match self.value(&d, i, j) {
                Some(v) if v.is_finite() => v,
                Some(_) => f64::NEG_INFINITY,
                None => f64::INFINITY,
            }
        });
        if !(worst >= 0.0) {
            return Err(Error::Domain(format!(
                "boundary data must be finite and nonnegative (min {worst})"
            )));
        }
        Ok(())
    }
}
