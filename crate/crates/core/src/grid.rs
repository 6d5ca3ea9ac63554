//! Node-valued fields on a [`DomainSpec`] grid.

use crate::geometry::DomainSpec;
use crate::{par, Error, Result, Vec2};

/// Scalar node values, row-major (`k = j·n1 + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: DomainSpec,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Shape(format!(
                "{} values for a {}x{} grid",
                values.len(),
                domain.n1,
                domain.n2
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "non-finite value at node {:?}",
                domain.ij(k)
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        Self {
            domain,
            values: vec![0.0; domain.len()],
        }
    }

    pub fn constant(domain: DomainSpec, c: f64) -> Self {
        Self {
            domain,
            values: vec![c; domain.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(domain: DomainSpec, f: impl Fn(Vec2) -> f64 + Sync + Send) -> Self {
        let mut values = vec![0.0; domain.len()];
        par::fill(&mut values, |k| f(domain.node(k)));
        Self { domain, values }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.domain.dx1(), self.domain.dx2())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.domain.idx(i, j);
        self.values[k] = v;
    }

    /// Bilinear interpolation; `None` outside the rectangle.
    pub fn sample(&self, x: Vec2) -> Option<f64> {
        let d = &self.domain;
        if !d.contains(x) {
            return None;
        }
        let s1 = (x[0] - d.x1_min) / d.dx1();
        let s2 = (x[1] - d.x2_min) / d.dx2();
        let i = (s1.floor() as usize).min(d.n1 - 2);
        let j = (s2.floor() as usize).min(d.n2 - 2);
        let (f1, f2) = (
            (s1 - i as f64).clamp(0.0, 1.0),
            (s2 - j as f64).clamp(0.0, 1.0),
        );
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Some((1.0 - f2) * ((1.0 - f1) * v00 + f1 * v10) + f2 * ((1.0 - f1) * v01 + f1 * v11))
    }

    pub fn min(&self) -> f64 {
        par::min(self.values.len(), |k| self.values[k])
    }

    pub fn max(&self) -> f64 {
        par::max(self.values.len(), |k| self.values[k])
    }

    /// `max |self - other|` over nodes.
    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(par::max(self.values.len(), |k| {
            (self.values[k] - other.values[k]).abs()
        }))
    }

    /// `max |self - f|` over nodes.
    pub fn max_abs_diff_fn(&self, f: impl Fn(Vec2) -> f64 + Sync + Send) -> f64 {
        par::max(self.values.len(), |k| {
            (self.values[k] - f(self.domain.node(k))).abs()
        })
    }

    pub fn same_grid(&self, other: &GridField) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::Shape(format!(
                "grids differ: {}x{} on [{}, {}]x[{}, {}] vs {}x{} on [{}, {}]x[{}, {}]",
                self.domain.n1,
                self.domain.n2,
                self.domain.x1_min,
                self.domain.x1_max,
                self.domain.x2_min,
                self.domain.x2_max,
                other.domain.n1,
                other.domain.n2,
                other.domain.x1_min,
                other.domain.x1_max,
                other.domain.x2_min,
                other.domain.x2_max
            )));
        }
        Ok(())
    }

    /// The node block `i0..=i1 × j0..=j1` on its own grid.
    pub fn restrict(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<GridField> {
        let sub = self.domain.subgrid(i0, i1, j0, j1)?;
        let values = (0..sub.len())
            .map(|k| {
                let (i, j) = sub.ij(k);
                self.at(i0 + i, j0 + j)
            })
            .collect();
        Ok(GridField {
            domain: sub,
            values,
        })
    }
}

/// A field with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField(GridField);

impl IndicatorField {
    pub fn new(field: GridField) -> Result<Self> {
        if let Some(k) = field.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Shape(format!(
                "indicator value {} at node {:?} is outside [0, 1]",
                field.values[k],
                field.domain.ij(k)
            )));
        }
        Ok(Self(field))
    }

    pub fn ones(domain: DomainSpec) -> Self {
        Self(GridField::constant(domain, 1.0))
    }

    /// `1` where the predicate holds, else `0`.
    pub fn from_predicate(domain: DomainSpec, f: impl Fn(Vec2) -> bool + Sync + Send) -> Self {
        Self(GridField::from_fn(domain, |x| if f(x) { 1.0 } else { 0.0 }))
    }

    /// Clamps values into `[0, 1]`.
    pub fn clamped(mut field: GridField) -> Self {
        par::for_each_mut(&mut field.values, |_, v| *v = v.clamp(0.0, 1.0));
        Self(field)
    }

    pub fn field(&self) -> &GridField {
        &self.0
    }

    pub fn into_field(self) -> GridField {
        self.0
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.0.domain
    }

    pub fn sample(&self, x: Vec2) -> Option<f64> {
        self.0.sample(x)
    }
}
