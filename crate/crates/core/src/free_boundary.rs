//! Fields pulled back along the chart orbits, the free-boundary graph
//! `t = φ(w)` read off them, and the structural checks on both.

use crate::geometry::{Chart, Orbit};
use crate::grid::{GridField, IndicatorField};
use crate::io::Table;
use crate::{par, Error, Result, Vec2};

/// Values of a grid field along each stored orbit of a chart, at times
/// `α₋, α₋ + dt, …` and the exit time `α₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pullback {
    pub dt: f64,
    pub w: Vec<f64>,
    pub t: Vec<Vec<f64>>,
    /// `None` where the orbit point falls outside the grid.
    pub values: Vec<Vec<Option<f64>>>,
}

impl Pullback {
    pub fn samples(&self) -> usize {
        self.values
            .iter()
            .map(|v| v.iter().filter(|x| x.is_some()).count())
            .sum()
    }
}

fn sample_times(o: &Orbit, dt: f64) -> Vec<f64> {
    let n = ((o.alpha_plus - o.alpha_minus) / dt).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|i| o.alpha_minus + i as f64 * dt).collect();
    if o.alpha_plus - t[n] > 1e-12 * dt {
        t.push(o.alpha_plus);
    } else {
        t[n] = o.alpha_plus;
    }
    t
}

/// `f ∘ T_h` on a uniform time grid of step `dt`, bilinear in space.
pub fn pullback(f: &GridField, chart: &Chart, dt: f64) -> Result<Pullback> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let rows = par::map_slice(&chart.orbits, |o| {
        let t = sample_times(o, dt);
        let v = t
            .iter()
            .map(|&s| f.sample(o.hermite(s)))
            .collect::<Vec<_>>();
        (t, v)
    });
    let (t, values) = rows.into_iter().unzip();
    Ok(Pullback {
        dt,
        w: chart.w_grid.clone(),
        t,
        values,
    })
}

/// A time step of half a cell at the top speed.
pub fn default_dt(chart: &Chart) -> f64 {
    0.5 * chart.domain.dx1().min(chart.domain.dx2()) / chart.field.h_upper
}

/// `φ(w) = sup{t : u ∘ T_h(t, w) > tol_u}` per stored orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundaryProfile {
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    /// No sample above `tol_u`; `φ` is then `α₋`.
    pub empty: Vec<bool>,
    /// `T_h(φ(w), w)`.
    pub x_at_phi: Vec<Vec2>,
    pub alpha_minus: Vec<f64>,
    pub alpha_plus: Vec<f64>,
    pub tol_u: f64,
    pub dt: f64,
}

impl FreeBoundaryProfile {
    /// The free boundary crosses orbit `i` strictly inside its time interval,
    /// so orbit `i` lies in the range of `w` where `φ` is a graph.
    pub fn interior(&self, i: usize) -> bool {
        !self.empty[i] && self.phi[i] < self.alpha_plus[i]
    }

    /// Points of the free boundary, skipping empty orbits.
    pub fn polyline(&self) -> Vec<Vec2> {
        self.x_at_phi
            .iter()
            .zip(&self.empty)
            .filter(|(_, &e)| !e)
            .map(|(x, _)| *x)
            .collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["w", "phi", "empty_flag", "x1_at_phi", "x2_at_phi"]);
        for i in 0..self.w.len() {
            let x = self.x_at_phi[i];
            t.push(&[
                self.w[i],
                self.phi[i],
                f64::from(u8::from(self.empty[i])),
                x[0],
                x[1],
            ]);
        }
        t
    }
}

/// Extracts `φ` from the samples at step `dt`, refining the last crossing
/// by bisection down to `dt/10`.
pub fn extract_phi(
    u: &GridField,
    chart: &Chart,
    tol_u: f64,
    dt: f64,
) -> Result<FreeBoundaryProfile> {
    let pb = pullback(u, chart, dt)?;
    let rows = par::map(chart.orbits.len(), |n| {
        let o = &chart.orbits[n];
        let (t, v) = (&pb.t[n], &pb.values[n]);
        let positive = |x: Option<f64>| x.is_some_and(|x| x > tol_u);
        let Some(i) = (0..t.len()).rev().find(|&i| positive(v[i])) else {
            return (o.alpha_minus, true);
        };
        if i + 1 == t.len() || v[i + 1].is_none() {
            return (t[i], false);
        }
        let (mut lo, mut hi) = (t[i], t[i + 1]);
        while hi - lo > 0.1 * dt {
            let mid = 0.5 * (lo + hi);
            if positive(u.sample(o.hermite(mid))) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi), false)
    });
    let (phi, empty): (Vec<f64>, Vec<bool>) = rows.into_iter().unzip();
    let x_at_phi = chart
        .orbits
        .iter()
        .zip(&phi)
        .map(|(o, &p)| o.hermite(p))
        .collect();
    Ok(FreeBoundaryProfile {
        w: chart.w_grid.clone(),
        phi,
        empty,
        x_at_phi,
        alpha_minus: chart.orbits.iter().map(|o| o.alpha_minus).collect(),
        alpha_plus: chart.orbits.iter().map(|o| o.alpha_plus).collect(),
        tol_u,
        dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStructure {
    /// Samples above `φ + dt` with `u > tol_u`.
    pub islands: usize,
    /// Samples below `φ - dt` with `u ≤ tol_u`.
    pub holes: usize,
    pub samples: usize,
    /// Largest `|t - φ(w)|` among the offending samples.
    pub worst_gap: f64,
}

impl LevelStructure {
    pub fn violations(&self) -> usize {
        self.islands + self.holes
    }

    pub fn fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.violations() as f64 / self.samples as f64
        }
    }
}

/// Checks `{u ∘ T_h > 0} = {t < φ(w)}` on the pulled-back samples of `u`.
pub fn level_structure_violations(
    pb: &Pullback,
    profile: &FreeBoundaryProfile,
) -> Result<LevelStructure> {
    if pb.w.len() != profile.w.len() {
        return Err(Error::Shape(
            "pullback and profile come from different charts".into(),
        ));
    }
    let dt = pb.dt;
    let tol = profile.tol_u;
    let rows = par::map(pb.w.len(), |n| {
        let phi = profile.phi[n];
        let mut acc = (0, 0, 0.0f64);
        for (&t, v) in pb.t[n].iter().zip(&pb.values[n]) {
            let Some(v) = *v else { continue };
            if t > phi + dt && v > tol {
                acc.0 += 1;
                acc.2 = acc.2.max(t - phi);
            } else if t < phi - dt && v <= tol {
                acc.1 += 1;
                acc.2 = acc.2.max(phi - t);
            }
        }
        acc
    });
    let (islands, holes, worst_gap) = rows.into_iter().fold((0, 0, 0.0), |a, r| {
        (a.0 + r.0, a.1 + r.1, f64::max(a.2, r.2))
    });
    Ok(LevelStructure {
        islands,
        holes,
        samples: pb.samples(),
        worst_gap,
    })
}

/// Largest increase of `χ ∘ T_h` between consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uptick {
    pub worst: f64,
    pub w: f64,
    pub t: f64,
}

pub fn chi_monotonicity(chi: &IndicatorField, chart: &Chart, dt: f64) -> Result<Uptick> {
    let pb = pullback(chi.field(), chart, dt)?;
    let rows = par::map(pb.w.len(), |n| {
        let (t, v) = (&pb.t[n], &pb.values[n]);
        let mut best = Uptick {
            worst: 0.0,
            w: pb.w[n],
            t: t[0],
        };
        for i in 0..t.len() - 1 {
            if let (Some(a), Some(b)) = (v[i], v[i + 1]) {
                if b - a > best.worst {
                    best = Uptick {
                        worst: b - a,
                        w: pb.w[n],
                        t: t[i + 1],
                    };
                }
            }
        }
        best
    });
    Ok(rows.into_iter().fold(
        Uptick {
            worst: 0.0,
            w: f64::NAN,
            t: f64::NAN,
        },
        |a, b| if b.worst > a.worst { b } else { a },
    ))
}

/// The first sample per orbit at which `u ∘ T_h ≤ tol_u`, as `(t₀, w₀)`.
pub fn zero_probes(pb: &Pullback, tol_u: f64) -> Vec<(f64, f64)> {
    (0..pb.w.len())
        .filter_map(|n| {
            let i = pb.values[n]
                .iter()
                .position(|v| v.is_some_and(|v| v <= tol_u))?;
            Some((pb.t[n][i], pb.w[n]))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroPropagation {
    pub checked: usize,
    /// Probes where `u ∘ T_h(t₀, w₀) > tol_u`.
    pub skipped: usize,
    pub violations: usize,
}

/// For each probe with `u ∘ T_h(t₀, w₀) ≤ tol_u`, checks that the pullback
/// stays below `tol_u + slack` for all later sample times.
pub fn zero_propagation(
    u: &GridField,
    chart: &Chart,
    probes: &[(f64, f64)],
    tol_u: f64,
    slack: f64,
    dt: f64,
) -> Result<ZeroPropagation> {
    let rows = par::map_slice(probes, |&(t0, w0)| -> Result<(bool, bool)> {
        let o = chart.orbit_for(w0)?;
        if !o.contains_time(t0) {
            return Err(Error::Domain(format!(
                "probe t = {t0} is outside the orbit through w = {w0}"
            )));
        }
        let at = |t: f64| u.sample(o.hermite(t));
        if at(t0).is_none_or(|v| v > tol_u) {
            return Ok((false, false));
        }
        let n = ((o.alpha_plus - t0) / dt).floor() as usize;
        let later = (1..=n)
            .map(|i| t0 + i as f64 * dt)
            .chain(std::iter::once(o.alpha_plus));
        let bad = later.filter_map(at).any(|v| v > tol_u + slack);
        Ok((true, bad))
    });
    let mut out = ZeroPropagation {
        checked: 0,
        skipped: 0,
        violations: 0,
    };
    for r in rows {
        let (checked, bad) = r?;
        if checked {
            out.checked += 1;
            out.violations += usize::from(bad);
        } else {
            out.skipped += 1;
        }
    }
    Ok(out)
}

/// Dyadic radii `span/4, span/8, …` (`levels` of them).
pub fn dyadic_radii(profile: &FreeBoundaryProfile, levels: usize) -> Vec<f64> {
    let span = profile.w.last().copied().unwrap_or(0.0) - profile.w.first().copied().unwrap_or(0.0);
    (0..levels)
        .map(|j| 0.25 * span / f64::powi(2.0, j as i32))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityProbe {
    pub w0: f64,
    /// `max φ - min φ` over `|w - w0| ≤ r_j`.
    pub osc: Vec<f64>,
    pub decay: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub radii: Vec<f64>,
    pub probes: Vec<ContinuityProbe>,
    /// `max(2 dt, C_lip r_min)`, the bound on the last oscillation.
    pub final_bound: f64,
}

impl ContinuityReport {
    pub fn all_decay(&self) -> bool {
        self.probes.iter().all(|p| p.decay)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["w0", "r", "osc", "decay_flag"]);
        for p in &self.probes {
            for (r, o) in self.radii.iter().zip(&p.osc) {
                t.push(&[p.w0, *r, *o, f64::from(u8::from(p.decay))]);
            }
        }
        t
    }
}

/// Oscillation of `φ` over shrinking windows around each probe, counting
/// only interior orbits. A probe decays when the oscillations never grow
/// and the last one is at most `max(2 dt, c_lip · r_min)`.
pub fn continuity_report(
    profile: &FreeBoundaryProfile,
    probe_ws: &[f64],
    radii: &[f64],
    c_lip: f64,
) -> Result<ContinuityReport> {
    if radii.is_empty()
        || radii.windows(2).any(|r| !(r[1] < r[0]))
        || !(radii[radii.len() - 1] > 0.0)
    {
        return Err(Error::Domain(
            "radii must be positive and strictly decreasing".into(),
        ));
    }
    let (lo, hi) = (profile.w[0], profile.w[profile.w.len() - 1]);
    if radii[0] > hi - lo {
        return Err(Error::Domain(format!(
            "radius {} exceeds the w-span {}",
            radii[0],
            hi - lo
        )));
    }
    let gap = profile
        .w
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    if radii[radii.len() - 1] < gap {
        return Err(Error::Resolution(format!(
            "smallest radius {} is below the orbit spacing {gap}",
            radii[radii.len() - 1]
        )));
    }
    let final_bound = (2.0 * profile.dt).max(c_lip * radii[radii.len() - 1]);
    let probes = par::map_slice(probe_ws, |&w0| {
        let osc: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let window = (0..profile.w.len())
                    .filter(|&i| profile.interior(i) && (profile.w[i] - w0).abs() <= r);
                let (mn, mx) = window.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), i| {
                    (a.min(profile.phi[i]), b.max(profile.phi[i]))
                });
                if mx >= mn {
                    mx - mn
                } else {
                    0.0
                }
            })
            .collect();
        let monotone = osc.windows(2).all(|o| o[1] <= o[0] + 1e-12);
        let decay = monotone && osc[osc.len() - 1] <= final_bound;
        ContinuityProbe { w0, osc, decay }
    });
    Ok(ContinuityReport {
        radii: radii.to_vec(),
        probes,
        final_bound,
    })
}

/// Orbits where `φ(w_i) > min(φ(w_{i-1}), φ(w_{i+1})) + c_lip dw + 2 dt`,
/// among those whose neighbours are also [interior](FreeBoundaryProfile::interior).
pub fn lower_semicontinuity_violations(profile: &FreeBoundaryProfile, c_lip: f64) -> usize {
    let (w, phi) = (&profile.w, &profile.phi);
    (1..w.len().saturating_sub(1))
        .filter(|&i| (i - 1..=i + 1).all(|k| profile.interior(k)))
        .filter(|&i| {
            let dw = (w[i + 1] - w[i]).max(w[i] - w[i - 1]);
            phi[i] > phi[i - 1].min(phi[i + 1]) + c_lip * dw + 2.0 * profile.dt
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorMismatch {
    pub mismatched: usize,
    /// Nodes outside the band.
    pub counted: usize,
}

impl IndicatorMismatch {
    pub fn fraction(&self) -> f64 {
        if self.counted == 0 {
            0.0
        } else {
            self.mismatched as f64 / self.counted as f64
        }
    }
}

/// Nodes where `|χ - 1_{u > tol_u}| > 1/2`, ignoring those within
/// `2 dx₂` of the free-boundary polyline.
pub fn chi_is_indicator(
    u: &GridField,
    chi: &IndicatorField,
    tol_u: f64,
    boundary: &[Vec2],
) -> Result<IndicatorMismatch> {
    u.same_grid(chi.field())?;
    let d = *u.domain();
    let band = 2.0 * d.dx2();
    let (uv, cv) = (u.values(), chi.values());
    let rows = par::map(d.len(), |k| {
        let x = d.node(k);
        if near_polyline(x, boundary, band) {
            return (0, 0);
        }
        let ind = if uv[k] > tol_u { 1.0 } else { 0.0 };
        (usize::from((cv[k] - ind).abs() > 0.5), 1)
    });
    let (mismatched, counted) = rows.into_iter().fold((0, 0), |a, r| (a.0 + r.0, a.1 + r.1));
    Ok(IndicatorMismatch {
        mismatched,
        counted,
    })
}

fn near_polyline(x: Vec2, pts: &[Vec2], r: f64) -> bool {
    let seg = |a: Vec2, b: Vec2| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let s = if len2 > 0.0 {
            (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (x[0] - a[0] - s * dx).hypot(x[1] - a[1] - s * dy)
    };
    match pts {
        [] => false,
        [p] => seg(*p, *p) <= r,
        _ => pts.windows(2).any(|w| seg(w[0], w[1]) <= r),
    }
}

/// Hand-built fields on which the checks must fail.
pub mod fixtures {
    use crate::geometry::DomainSpec;
    use crate::grid::{GridField, IndicatorField};

    /// The dam profile `(0.4 - x₂)⁺` plus a detached positive cap centred at
    /// `(0.5, 0.75)` with radius 0.15.
    pub fn island(domain: &DomainSpec) -> (GridField, IndicatorField) {
        let u = GridField::from_fn(*domain, |x| {
            let r = (x[0] - 0.5).hypot(x[1] - 0.75);
            (0.4 - x[1]).max(0.0) + 0.05 * (1.0 - (r / 0.15).powi(2)).max(0.0)
        });
        let chi = indicator_of(&u);
        (u, chi)
    }

    /// A dam whose water level jumps from 0.4 to 0.7 at `x₁ = 0.5`.
    pub fn jump(domain: &DomainSpec) -> (GridField, IndicatorField) {
        let u = GridField::from_fn(*domain, |x| {
            let level = if x[0] < 0.5 { 0.4 } else { 0.7 };
            (level - x[1]).max(0.0)
        });
        let chi = indicator_of(&u);
        (u, chi)
    }

    fn indicator_of(u: &GridField) -> IndicatorField {
        let mut c = u.clone();
        c.values_mut()
            .iter_mut()
            .for_each(|v| *v = if *v > 0.0 { 1.0 } else { 0.0 });
        IndicatorField::new(c).expect("values are 0 or 1")
    }
}
