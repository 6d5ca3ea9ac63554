use super::{orbit_integrate, Chart, Orbit};
use crate::{par, Error, Result};

/// `(k, w)` and `(k₀, w₀)`: two arguments of the crossing-time function.
pub type LevelPair = ((f64, f64), (f64, f64));

/// The unique `t` with `X(t)·e₂ = k`, to within `1e-13` in `t`.
pub fn crossing_time(orbit: &Orbit, k: f64) -> Result<f64> {
    let (lo, hi) = orbit.x2_range();
    if !(k >= lo && k <= hi) {
        return Err(Error::NoCrossing { level: k, lo, hi });
    }
    let i = orbit.points.partition_point(|p| p[1] < k);
    if i < orbit.points.len() && orbit.points[i][1] == k {
        return Ok(orbit.times[i]);
    }
    // points[i-1][1] < k < points[i][1]
    let (mut a, mut b) = (orbit.times[i - 1], orbit.times[i]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if orbit.hermite(m)[1] < k {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-13 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCertificate {
    /// `max |S(k,w) - S(k₀,w₀)| / (|k-k₀| + |w-w₀|)` over usable pairs.
    pub empirical_ratio: f64,
    /// Measured constant for `|∫ (H₂(X(t,w)) - H₂(X(t,w₀))) dt| ≤ C₀ |w - w₀|`.
    pub c0: f64,
    /// `max(1, C₀) / h̲`.
    pub bound: f64,
    pub pairs_used: usize,
    /// Pairs dropped because one level is not crossed.
    pub failures: usize,
    pub passed: bool,
}

/// Pairs closer than this (in `|Δk| + |Δw|`) carry no information.
const DEGENERATE_PAIR: f64 = 1e-9;

/// Compares the crossing-time difference quotient over `pairs` with the
/// constant `max(1, C₀)/h̲`, `C₀` measured on adjacent chart orbits.
pub fn lipschitz_certificate(chart: &Chart, pairs: &[LevelPair]) -> LipschitzCertificate {
    let c0 = measure_c0(chart);
    let bound = c0.max(1.0) / chart.field.h_lower;

    let s = |k: f64, w: f64| -> Result<f64> {
        let orbit = orbit_integrate(
            &chart.field,
            &chart.domain,
            [w, chart.level],
            &chart.options,
        )?;
        crossing_time(&orbit, k)
    };
    let ratios = par::map_slice(pairs, |&((k, w), (k0, w0))| {
        let sep = (k - k0).abs() + (w - w0).abs();
        if sep < DEGENERATE_PAIR {
            return Ok(None);
        }
        Ok(Some((s(k, w)? - s(k0, w0)?).abs() / sep))
    });
    let mut empirical_ratio = 0.0f64;
    let (mut used, mut failures) = (0, 0);
    for r in ratios {
        match r {
            Ok(Some(r)) => {
                empirical_ratio = empirical_ratio.max(r);
                used += 1;
            }
            Ok(None) => {}
            Err::<_, Error>(_) => failures += 1,
        }
    }
    LipschitzCertificate {
        empirical_ratio,
        c0,
        bound,
        pairs_used: used,
        failures,
        passed: empirical_ratio <= bound * (1.0 + 1e-6),
    }
}

/// Largest `|∫₀^τ (H₂(X(t,w_i)) - H₂(X(t,w_{i+1}))) dt| / |w_i - w_{i+1}|`
/// over adjacent chart orbits and `τ` in their common time interval.
fn measure_c0(chart: &Chart) -> f64 {
    const NODES: usize = 400;
    let h2 = &chart.field.h2;
    let per_pair = par::map(chart.orbits.len().saturating_sub(1), |i| {
        let (a, b) = (&chart.orbits[i], &chart.orbits[i + 1]);
        let dw = chart.w_grid[i + 1] - chart.w_grid[i];
        let lo = a.alpha_minus.max(b.alpha_minus);
        let hi = a.alpha_plus.min(b.alpha_plus);
        let diff = |t: f64| (h2(a.hermite(t)) - h2(b.hermite(t))).abs();
        let mut worst = 0.0f64;
        for (end, sign) in [(hi, 1.0), (lo, -1.0)] {
            if sign * end <= 0.0 {
                continue;
            }
            let dt = end / NODES as f64;
            let mut acc = 0.0;
            let mut prev = diff(0.0);
            for j in 1..=NODES {
                let cur = diff(dt * j as f64);
                acc += 0.5 * (prev + cur) * dt.abs();
                prev = cur;
                worst = worst.max(acc);
            }
        }
        worst / dw
    });
    per_pair.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, FieldSpec, OrbitOptions};

    #[test]
    fn crossing_examples() {
        let d = DomainSpec::unit_square(16);
        let opts = OrbitOptions::for_domain(&d);
        let o = orbit_integrate(&FieldSpec::uniform(), &d, [0.4, 0.3], &opts).unwrap();
        assert!((crossing_time(&o, 0.75).unwrap() - 0.45).abs() < 1e-12);
        assert_eq!(crossing_time(&o, 0.3).unwrap(), 0.0);
        let w = 0.6;
        let o = orbit_integrate(&FieldSpec::shear(), &d, [w, 0.3], &opts).unwrap();
        assert!((crossing_time(&o, 0.9).unwrap() - 0.6 / (1.0 + w / 2.0)).abs() < 1e-12);
        assert!(matches!(
            crossing_time(&o, 1.2),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn uniform_certificate_is_tight() {
        let d = DomainSpec::unit_square(16);
        let chart = Chart::uniform(
            &FieldSpec::uniform(),
            &d,
            0.2,
            9,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        let pairs = [
            ((0.8, 0.3), (0.5, 0.3)),
            ((0.4, 0.2), (0.4, 0.6)),
            ((0.5, 0.5), (0.5, 0.5)),
        ];
        let cert = lipschitz_certificate(&chart, &pairs);
        assert!((cert.empirical_ratio - 1.0).abs() < 1e-9);
        assert_eq!(cert.bound, 1.0);
        assert_eq!(cert.pairs_used, 2);
        assert!(cert.passed);
    }

    #[test]
    fn uncrossed_levels_are_counted() {
        let d = DomainSpec::unit_square(16);
        let chart = Chart::uniform(
            &FieldSpec::uniform(),
            &d,
            0.2,
            4,
            &OrbitOptions::for_domain(&d),
        )
        .unwrap();
        let cert = lipschitz_certificate(&chart, &[((1.5, 0.3), (0.5, 0.3))]);
        assert_eq!(cert.failures, 1);
        assert_eq!(cert.pairs_used, 0);
    }
}
