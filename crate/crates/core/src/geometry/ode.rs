//! Dormand–Prince 5(4) for the planar autonomous system `y' = f(y)`.

use crate::Vec2;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub y: Vec2,
    /// Derivative at the new point (first-same-as-last stage).
    pub dy: Vec2,
    /// Max-norm local error estimate.
    pub err: f64,
}

/// Step-size controlled integrator state.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    /// Local error allowed per step (absolute, max-norm).
    pub tol: f64,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 5.0,
        }
    }

    /// One step of signed length `h` from `y` with `dy = f(y)`.
    pub fn step(&self, f: &impl Fn(Vec2) -> Vec2, y: Vec2, dy: Vec2, h: f64) -> StepOutcome {
        let k1 = dy;
        let at = |c: [f64; 5], ks: [&Vec2; 5]| -> Vec2 {
            let mut out = y;
            for (ci, k) in c.iter().zip(ks) {
                out[0] += h * ci * k[0];
                out[1] += h * ci * k[1];
            }
            out
        };
        let z = [0.0; 2];
        let k2 = f(at([A21, 0.0, 0.0, 0.0, 0.0], [&k1, &z, &z, &z, &z]));
        let k3 = f(at([A31, A32, 0.0, 0.0, 0.0], [&k1, &k2, &z, &z, &z]));
        let k4 = f(at([A41, A42, A43, 0.0, 0.0], [&k1, &k2, &k3, &z, &z]));
        let k5 = f(at([A51, A52, A53, A54, 0.0], [&k1, &k2, &k3, &k4, &z]));
        let k6 = f(at([A61, A62, A63, A64, A65], [&k1, &k2, &k3, &k4, &k5]));
        let mut y5 = y;
        for d in 0..2 {
            y5[d] += h * (B1 * k1[d] + B3 * k3[d] + B4 * k4[d] + B5 * k5[d] + B6 * k6[d]);
        }
        let k7 = f(y5);
        let mut err = 0.0f64;
        for d in 0..2 {
            let e =
                h * (E1 * k1[d] + E3 * k3[d] + E4 * k4[d] + E5 * k5[d] + E6 * k6[d] + E7 * k7[d]);
            err = err.max(e.abs());
        }
        StepOutcome { y: y5, dy: k7, err }
    }

    /// Factor by which to scale the step after an error estimate `err`.
    pub fn factor(&self, err: f64) -> f64 {
        if err == 0.0 {
            return self.max_factor;
        }
        (self.safety * (self.tol / err).powf(0.2)).clamp(self.min_factor, self.max_factor)
    }
}
