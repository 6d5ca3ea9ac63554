//! Dirichlet problems for the A-Laplacian and the fixed point for `(u, χ)`.

mod anderson;
mod boundary;
mod dirichlet;
mod laplacian;
mod linear;
mod problem;
mod weak;

pub use boundary::{BoundaryData, EdgeData};
pub use dirichlet::{solve_quasilinear_dirichlet, DirichletSolution, Source, SourceMode};
pub use laplacian::{
    discrete_a_laplacian, face_coefficients, face_fluxes, transport_fluxes, Coefficient, FaceData,
};
pub use linear::{pcg, FaceOperator, PcgReport, Preconditioner};
pub use problem::{default_tol_u, solve_problem_p, IndicatorUpdate, ProblemSolution};
pub use weak::{bump_probes, weak_residual, Bump};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearMethod {
    #[default]
    Picard,
    Newton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop the indicator loop when `‖χ_new - χ‖₁ / (n1 n2)` drops below this.
    pub outer_tol: f64,
    /// Target for `‖Δ_A u + div S‖∞` at interior nodes.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Indicator relaxation.
    pub omega: f64,
    /// Anderson history length for the smoothed indicator loop; 0 gives
    /// plain relaxation.
    pub anderson: usize,
    /// Picard damping; `None` picks `min(1, 1/a₁)`.
    pub picard_omega: Option<f64>,
    /// Positivity threshold; `None` uses [`default_tol_u`].
    pub tol_u: Option<f64>,
    pub tol_chi: f64,
    pub eps_reg: f64,
    pub linear_tol: f64,
    pub method: NonlinearMethod,
    pub preconditioner: Preconditioner,
    pub indicator: IndicatorUpdate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-8,
            inner_tol: 1e-8,
            max_outer: 400,
            max_inner: 400,
            omega: 0.5,
            anderson: 5,
            picard_omega: None,
            tol_u: None,
            tol_chi: 1e-6,
            eps_reg: crate::operator::DEFAULT_EPS_REG,
            linear_tol: 1e-10,
            method: NonlinearMethod::Picard,
            preconditioner: Preconditioner::ColumnLines,
            indicator: IndicatorUpdate::Smoothed,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("outer_tol", self.outer_tol),
            ("inner_tol", self.inner_tol),
            ("tol_chi", self.tol_chi),
            ("eps_reg", self.eps_reg),
            ("linear_tol", self.linear_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, w) in [
            ("omega", Some(self.omega)),
            ("picard_omega", self.picard_omega),
        ] {
            if let Some(w) = w {
                if !(w > 0.0 && w <= 1.0) {
                    return Err(Error::Domain(format!("{name} must lie in (0, 1], got {w}")));
                }
            }
        }
        if let Some(t) = self.tol_u {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("tol_u must be positive, got {t}")));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Domain("iteration caps must be positive".into()));
        }
        Ok(())
    }
}
