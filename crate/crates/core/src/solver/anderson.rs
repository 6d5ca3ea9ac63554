//! Anderson mixing for fixed points `x = g(x)` on large vectors.

use crate::par;

#[derive(Debug, Clone)]
pub(crate) struct Anderson {
    depth: usize,
    beta: f64,
    last: Option<(Vec<f64>, Vec<f64>)>,
    /// `(Δx, Δf)` pairs, oldest first.
    history: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    pub(crate) fn new(depth: usize, beta: f64) -> Self {
        Self {
            depth,
            beta,
            last: None,
            history: Vec::new(),
        }
    }

    pub(crate) fn reset(&mut self) {
        self.last = None;
        self.history.clear();
    }

    /// Next iterate from `x` and its residual `f = g(x) - x`.
    pub(crate) fn step(&mut self, x: &[f64], f: &[f64]) -> Vec<f64> {
        let n = x.len();
        if let Some((px, pf)) = self.last.take() {
            let mut dx = px;
            let mut df = pf;
            par::for_each_mut(&mut dx, |k, v| *v = x[k] - *v);
            par::for_each_mut(&mut df, |k, v| *v = f[k] - *v);
            self.history.push((dx, df));
            if self.history.len() > self.depth {
                self.history.remove(0);
            }
        }
        if self.depth > 0 {
            self.last = Some((x.to_vec(), f.to_vec()));
        }
        let beta = self.beta;
        let mut next = vec![0.0; n];
        par::fill(&mut next, |k| x[k] + beta * f[k]);
        let gamma = self.coefficients(f);
        for ((dx, df), g) in self.history.iter().zip(&gamma) {
            par::for_each_mut(&mut next, |k, v| *v -= g * (dx[k] + beta * df[k]));
        }
        next
    }

    /// Least squares `min ‖f - ΔF γ‖₂` through the regularized normal
    /// equations; the history is short, so the Gram matrix is tiny.
    fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        let m = self.history.len();
        if m == 0 {
            return Vec::new();
        }
        let mut gram = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            rhs[i] = par::dot(&self.history[i].1, f);
            for j in 0..=i {
                let g = par::dot(&self.history[i].1, &self.history[j].1);
                gram[i * m + j] = g;
                gram[j * m + i] = g;
            }
        }
        let trace: f64 = (0..m).map(|i| gram[i * m + i]).sum();
        if !(trace > 0.0) {
            return vec![0.0; m];
        }
        for i in 0..m {
            gram[i * m + i] += 1e-10 * trace / m as f64;
        }
        solve_dense(&mut gram, &mut rhs, m).unwrap_or_else(|| vec![0.0; m])
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(a: &mut [f64], b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    for c in 0..m {
        let piv = (c..m).max_by(|&r, &s| a[r * m + c].abs().total_cmp(&a[s * m + c].abs()))?;
        if a[piv * m + c] == 0.0 {
            return None;
        }
        if piv != c {
            for k in 0..m {
                a.swap(c * m + k, piv * m + k);
            }
            b.swap(c, piv);
        }
        for r in c + 1..m {
            let l = a[r * m + c] / a[c * m + c];
            for k in c..m {
                a[r * m + k] -= l * a[c * m + k];
            }
            b[r] -= l * b[c];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| a[r * m + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * m + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `g(x) = M x + c` with a contraction whose spectrum sits close to 1.
    fn run(depth: usize) -> usize {
        let n = 40;
        let c: Vec<f64> = (0..n).map(|k| (k as f64 * 0.3).sin()).collect();
        let g = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let lam = 0.99 - 1.9 * k as f64 / n as f64;
                    lam * x[k] + 0.01 * x[(k + 1) % n] + c[k]
                })
                .collect()
        };
        let mut mix = Anderson::new(depth, 0.5);
        let mut x = vec![0.0; n];
        for it in 0..5000 {
            let gx = g(&x);
            let f: Vec<f64> = gx.iter().zip(&x).map(|(a, b)| a - b).collect();
            if f.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-10 {
                return it;
            }
            x = mix.step(&x, &f);
        }
        usize::MAX
    }

    #[test]
    fn mixing_beats_plain_relaxation() {
        let plain = run(0);
        let mixed = run(5);
        assert!(plain < usize::MAX);
        assert!(mixed * 5 < plain, "plain {plain}, mixed {mixed}");
    }

    #[test]
    fn dense_solve() {
        let mut a = vec![0.0, 2.0, 1.0, 1.0];
        let mut b = vec![4.0, 3.0];
        assert_eq!(solve_dense(&mut a, &mut b, 2).unwrap(), vec![1.0, 2.0]);
        assert!(solve_dense(&mut [1.0, 1.0, 1.0, 1.0], &mut [1.0, 2.0], 2).is_none());
    }
}
