//! Orbits of the transport field and the curvilinear chart they define.
//!
//! For a level `h`, the chart sends `(t, w)` to `X(t, w)`, the solution of
//! `X' = H(X)` started at `(w, h)`. Because `H₂ ≥ h̲ > 0` every orbit
//! crosses each horizontal line at most once and leaves the rectangle in
//! finite time in both directions.

mod chart;
mod crossing;
mod domain;
mod field;
mod ode;
mod orbit;

pub use chart::{chart_build, jacobian_fd, jacobian_formula, Chart, ChartProbe};
pub use crossing::{crossing_time, lipschitz_certificate, LevelPair, LipschitzCertificate};
pub use domain::{DomainSpec, MIN_NODES};
pub use field::{FieldCheck, FieldSpec, VecFn};
pub use ode::{Dopri5, StepOutcome};
pub use orbit::{orbit_integrate, Orbit, OrbitOptions, EXIT_TOL};
