use crate::{Error, Result, Vec2};

/// Smallest node count per side: one interior node.
pub const MIN_NODES: usize = 3;

/// An axis-aligned rectangle sampled by an `n1 × n2` node grid, boundary
/// nodes included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl DomainSpec {
    pub fn new(x1: (f64, f64), x2: (f64, f64), n1: usize, n2: usize) -> Result<Self> {
        let d = Self {
            x1_min: x1.0,
            x1_max: x1.1,
            x2_min: x2.0,
            x2_max: x2.1,
            n1,
            n2,
        };
        d.validate()?;
        Ok(d)
    }

    /// The unit square with `n × n` nodes.
    pub fn unit_square(n: usize) -> Self {
        Self {
            x1_min: 0.0,
            x1_max: 1.0,
            x2_min: 0.0,
            x2_max: 1.0,
            n1: n,
            n2: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x1_min, self.x1_max, self.x2_min, self.x2_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.x1_max > self.x1_min) || !(self.x2_max > self.x2_min) {
            return Err(Error::Domain(format!(
                "rectangle [{}, {}] x [{}, {}] needs positive side lengths",
                self.x1_min, self.x1_max, self.x2_min, self.x2_max
            )));
        }
        if self.n1 < MIN_NODES || self.n2 < MIN_NODES {
            return Err(Error::Domain(format!(
                "grid {}x{} is too coarse (need at least {MIN_NODES} nodes per side)",
                self.n1, self.n2
            )));
        }
        Ok(())
    }

    pub fn dx1(&self) -> f64 {
        (self.x1_max - self.x1_min) / (self.n1 - 1) as f64
    }

    pub fn dx2(&self) -> f64 {
        (self.x2_max - self.x2_min) / (self.n2 - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index: rows are x₂ levels.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n1, k / self.n1)
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        if i + 1 == self.n1 {
            self.x1_max
        } else {
            self.x1_min + i as f64 * self.dx1()
        }
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        if j + 1 == self.n2 {
            self.x2_max
        } else {
            self.x2_min + j as f64 * self.dx2()
        }
    }

    #[inline]
    pub fn node(&self, k: usize) -> Vec2 {
        let (i, j) = self.ij(k);
        [self.x1(i), self.x2(j)]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.n1 || j + 1 == self.n2
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p[0] >= self.x1_min && p[0] <= self.x1_max && p[1] >= self.x2_min && p[1] <= self.x2_max
    }

    /// Signed distance to the boundary, negative outside (max-norm sense).
    pub fn inset(&self, p: Vec2) -> f64 {
        (p[0] - self.x1_min)
            .min(self.x1_max - p[0])
            .min(p[1] - self.x2_min)
            .min(self.x2_max - p[1])
    }

    /// Same rectangle with a different resolution.
    pub fn with_resolution(&self, n1: usize, n2: usize) -> Self {
        Self { n1, n2, ..*self }
    }

    /// The node block `i0..=i1 × j0..=j1` as a grid of its own. Node
    /// coordinates agree with the parent's up to round-off.
    pub fn subgrid(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<Self> {
        if i1 >= self.n1 || j1 >= self.n2 || i0 >= i1 || j0 >= j1 {
            return Err(Error::Shape(format!(
                "block [{i0}, {i1}] x [{j0}, {j1}] does not fit a {}x{} grid",
                self.n1, self.n2
            )));
        }
        Self::new(
            (self.x1(i0), self.x1(i1)),
            (self.x2(j0), self.x2(j1)),
            i1 - i0 + 1,
            j1 - j0 + 1,
        )
    }

    /// Nearest row index to level `x2`, clamped to the grid.
    pub fn row_of(&self, x2: f64) -> usize {
        let r = ((x2 - self.x2_min) / self.dx2()).round();
        (r.max(0.0) as usize).min(self.n2 - 1)
    }

    /// Nearest column index to `x1`, clamped to the grid.
    pub fn col_of(&self, x1: f64) -> usize {
        let r = ((x1 - self.x1_min) / self.dx1()).round();
        (r.max(0.0) as usize).min(self.n1 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_rectangles() {
        assert!(DomainSpec::new((0.0, 0.0), (0.0, 1.0), 16, 16).is_err());
        assert!(DomainSpec::new((0.0, 1.0), (0.0, 1.0), 2, 16).is_err());
        assert!(DomainSpec::new((0.0, 1.0), (0.0, 2.0), 3, 3).is_ok());
    }

    #[test]
    fn subgrid_shares_parent_nodes() {
        let d = DomainSpec::unit_square(33);
        let s = d.subgrid(4, 20, 8, 12).unwrap();
        assert_eq!((s.n1, s.n2), (17, 5));
        for j in 0..s.n2 {
            assert!((s.x2(j) - d.x2(j + 8)).abs() < 1e-15);
        }
        assert!(d.subgrid(4, 4, 0, 3).is_err());
        assert!(d.subgrid(0, 33, 0, 3).is_err());
    }

    #[test]
    fn node_coordinates_hit_the_corners() {
        let d = DomainSpec::new((-1.0, 2.0), (0.5, 1.5), 13, 9).unwrap();
        assert_eq!(d.node(0), [-1.0, 0.5]);
        assert_eq!(d.node(d.len() - 1), [2.0, 1.5]);
        assert_eq!(d.ij(d.idx(4, 7)), (4, 7));
        assert_eq!(d.row_of(1.0), 4);
    }
}
