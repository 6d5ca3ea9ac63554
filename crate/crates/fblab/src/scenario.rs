//! Scenarios: everything one solve-and-verify run needs, built from a
//! configuration file or taken from the built-in registry.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use fblab_core::barriers::BarrierSpec;
use fblab_core::geometry::{DomainSpec, FieldSpec, OrbitOptions};
use fblab_core::operator::NFunctionSpec;
use fblab_core::solver::{
    BoundaryData, EdgeData, IndicatorUpdate, NonlinearMethod, Preconditioner, SolverConfig,
};
use fblab_core::Vec2;

use crate::config::{error_for, Config, ConfigError};
use crate::HarnessError;

/// Built-in scenario names with their configuration text.
pub const BUILTINS: &[(&str, &str)] = &[
    ("dam-p2", include_str!("../scenarios/dam-p2.cfg")),
    ("dam-p3", include_str!("../scenarios/dam-p3.cfg")),
    ("dam-p1.5", include_str!("../scenarios/dam-p1.5.cfg")),
    (
        "tilted-field",
        include_str!("../scenarios/tilted-field.cfg"),
    ),
    ("shear-field", include_str!("../scenarios/shear-field.cfg")),
    ("island", include_str!("../scenarios/island.cfg")),
    ("jump", include_str!("../scenarios/jump.cfg")),
];

/// Built-in scenarios whose fields come from the solver.
pub const SOLVED_BUILTINS: &[&str] = &[
    "dam-p2",
    "dam-p3",
    "dam-p1.5",
    "tilted-field",
    "shear-field",
];

pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Synthetic `(u, χ)` pairs that replace the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    Island,
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    /// Water level `u0`: `a⁻¹(H₂)(u0 - x₂)⁺` on the sides and bottom, `Γ`
    /// the whole top edge.
    Dam { u0: f64 },
    /// Zero everywhere, `Γ` the whole top edge.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartParams {
    pub level: f64,
    pub orbits: usize,
    pub tol: f64,
    /// Pullback step; `None` uses half a cell over `h̄`.
    pub dt: Option<f64>,
}

impl ChartParams {
    pub fn options(&self, domain: &DomainSpec) -> OrbitOptions {
        OrbitOptions::for_domain(domain).with_tol(self.tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyParams {
    pub seed: u64,
    /// Random trials per operator check.
    pub samples: usize,
    pub jacobian_points: usize,
    pub fd_step: f64,
    pub inverse_probes: usize,
    pub lipschitz_pairs: usize,
    /// Continuity probes as fractions of the chart's w-span.
    pub probes: Vec<f64>,
    pub levels: usize,
    pub disabled: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: NFunctionSpec,
    pub field: FieldSpec,
    pub domain: DomainSpec,
    pub boundary: BoundaryKind,
    pub bc: BoundaryData,
    pub solver: SolverConfig,
    pub chart: ChartParams,
    pub barriers: Vec<BarrierSpec>,
    pub fixture: Option<Fixture>,
    pub verify: VerifyParams,
    /// The merged configuration, used to recognise earlier artifacts.
    pub canonical: String,
}

impl Scenario {
    /// A file path, or the name of a built-in scenario.
    pub fn load(arg: &str) -> Result<Self, HarnessError> {
        let path = Path::new(arg);
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(ConfigError::general(format!("{arg}: {e}"))))?;
            return Self::from_text(&text).map_err(|e| HarnessError::Config(e.in_file(arg)));
        }
        match builtin_text(arg) {
            Some(text) => Self::from_text(text).map_err(HarnessError::Config),
            None => Err(HarnessError::Config(ConfigError::general(format!(
                "`{arg}` is neither a readable file nor a built-in scenario ({})",
                BUILTINS
                    .iter()
                    .map(|(n, _)| *n)
                    .collect::<Vec<_>>()
                    .join(", ")
            )))),
        }
    }

    pub fn builtin(name: &str) -> Result<Self, HarnessError> {
        let text = builtin_text(name).ok_or_else(|| {
            HarnessError::Config(ConfigError::general(format!(
                "no built-in scenario `{name}`"
            )))
        })?;
        Self::from_text(text).map_err(HarnessError::Config)
    }

    /// Parses a configuration; `extends = <builtin>` starts from that
    /// built-in and overrides its keys.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let own = Config::parse(text)?;
        let mut cfg = if own.contains("extends") {
            let mut own = own;
            let line = own.line_of("extends");
            let base = own.take_str("extends").expect("checked");
            let base_text = builtin_text(&base).ok_or_else(|| {
                error_for(line, format!("`extends`: no built-in scenario `{base}`"))
            })?;
            Config::parse(base_text)?.overlay(own)
        } else {
            own
        };
        let canonical = format!("{cfg:?}");
        let s = build(&mut cfg, canonical)?;
        cfg.finish()?;
        Ok(s)
    }

    pub fn dx2(&self) -> f64 {
        self.domain.dx2()
    }
}

fn build(c: &mut Config, canonical: String) -> Result<Scenario, ConfigError> {
    let name = c.take_str("name").unwrap_or_else(|| "custom".into());
    let fixture = match c.take("fixture") {
        None => None,
        Some((v, line)) => Some(match v.as_str() {
            "island" => Fixture::Island,
            "jump" => Fixture::Jump,
            other => {
                return Err(error_for(
                    Some(line),
                    format!("`fixture`: unknown fixture `{other}` (island, jump)"),
                ))
            }
        }),
    };
    let domain = domain(c)?;
    let spec = operator(c)?;
    let field = field(c, &domain)?;
    let (boundary, bc) = boundary(c, &domain, &spec, &field)?;
    let solver = solver(c)?;
    let chart = ChartParams {
        level: c.value_or("chart.level", domain.x2_min)?,
        orbits: c.value_or("chart.orbits", domain.n1)?,
        tol: c.value_or("chart.tol", 1e-8)?,
        dt: c.parse_value("chart.dt")?,
    };
    let barriers = barriers(c, &field)?;
    let verify = VerifyParams {
        seed: c.value_or("verify.seed", 1)?,
        samples: c.value_or("verify.samples", 100_000)?,
        jacobian_points: c.value_or("verify.jacobian_points", 100)?,
        fd_step: c.value_or("verify.fd_step", 1e-3)?,
        inverse_probes: c.value_or("verify.inverse_probes", 100)?,
        lipschitz_pairs: c.value_or("verify.lipschitz_pairs", 10_000)?,
        probes: c
            .list("verify.probes")?
            .unwrap_or_else(|| vec![0.3, 0.5, 0.7]),
        levels: c.value_or("verify.levels", 5)?,
        disabled: c
            .take_str("verify.disable")
            .map(|s| {
                s.split(|ch: char| ch == ',' || ch.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default(),
    };
    Ok(Scenario {
        name,
        spec,
        field,
        domain,
        boundary,
        bc,
        solver,
        chart,
        barriers,
        fixture,
        verify,
        canonical,
    })
}

fn domain(c: &mut Config) -> Result<DomainSpec, ConfigError> {
    let line = c.line_of("domain.n").or(c.line_of("domain.n1"));
    let n: Option<usize> = c.parse_value("domain.n")?;
    let n1 = c.parse_value("domain.n1")?.or(n).unwrap_or(128);
    let n2 = c.parse_value("domain.n2")?.or(n).unwrap_or(n1);
    let x1 = c
        .fixed_list("domain.x1", 2)?
        .unwrap_or_else(|| vec![0.0, 1.0]);
    let x2 = c
        .fixed_list("domain.x2", 2)?
        .unwrap_or_else(|| vec![0.0, 1.0]);
    DomainSpec::new((x1[0], x1[1]), (x2[0], x2[1]), n1, n2)
        .map_err(|e| error_for(line, e.to_string()))
}

fn operator(c: &mut Config) -> Result<NFunctionSpec, ConfigError> {
    let line = c.line_of("a.kind");
    let kind = c.take_str("a.kind").unwrap_or_else(|| "power".into());
    let spec = match kind.as_str() {
        "power" => {
            let p_line = c.line_of("a.p");
            let p: f64 = c
                .parse_value("a.p")?
                .ok_or_else(|| error_for(line, "`a.kind = power` needs `a.p`"))?;
            if !p.is_finite() {
                return Err(error_for(p_line, "`a.p` must be finite"));
            }
            NFunctionSpec::power(p)
        }
        "affine_quadratic" => NFunctionSpec::affine_quadratic(),
        "table" => {
            let k_line = c.line_of("a.knots");
            let flat = c
                .list("a.knots")?
                .ok_or_else(|| error_for(line, "`a.kind = table` needs `a.knots`"))?;
            if flat.len() % 2 != 0 {
                return Err(error_for(k_line, "`a.knots` holds pairs `t a(t)`"));
            }
            let knots = flat.chunks(2).map(|p| (p[0], p[1])).collect();
            NFunctionSpec::table(knots).map_err(|e| error_for(k_line, e.to_string()))?
        }
        other => {
            return Err(error_for(
                line,
                format!("`a.kind`: unknown kind `{other}` (power, affine_quadratic, table)"),
            ))
        }
    };
    Ok(match c.parse_value("a.eps_reg")? {
        Some(e) => spec.with_eps_reg(e),
        None => spec,
    })
}

fn field(c: &mut Config, d: &DomainSpec) -> Result<FieldSpec, ConfigError> {
    let line = c.line_of("field.kind");
    let kind = c.take_str("field.kind").unwrap_or_else(|| "uniform".into());
    let mut f = match kind.as_str() {
        "uniform" => FieldSpec::uniform(),
        "shear" => FieldSpec::shear(),
        "tilted" => FieldSpec::tilted(),
        "vertical" => FieldSpec::constant_vertical(c.value_or("field.c", 1.0)?),
        "affine" => {
            let h1 = c.fixed_list("field.h1", 3)?.unwrap_or_else(|| vec![0.0; 3]);
            let h2 = c
                .fixed_list("field.h2", 3)?
                .ok_or_else(|| error_for(line, "`field.kind = affine` needs `field.h2`"))?;
            affine_field(d, [h1[0], h1[1], h1[2]], [h2[0], h2[1], h2[2]])
        }
        other => return Err(error_for(
            line,
            format!(
                "`field.kind`: unknown kind `{other}` (uniform, shear, tilted, vertical, affine)"
            ),
        )),
    };
    if let Some(v) = c.parse_value("field.h_lower")? {
        f.h_lower = v;
    }
    if let Some(v) = c.parse_value("field.h_upper")? {
        f.h_upper = v;
    }
    if let Some(v) = c.parse_value("field.lip")? {
        f.lip_const = v;
    }
    Ok(f)
}

/// `H₁ = a₀ + a₁x₁ + a₂x₂`, `H₂ = b₀ + b₁x₁ + b₂x₂`, with bounds taken at
/// the corners of the rectangle and the spectral norm of the gradient as
/// Lipschitz constant.
pub fn affine_field(d: &DomainSpec, a: [f64; 3], b: [f64; 3]) -> FieldSpec {
    let corners = [
        [d.x1_min, d.x2_min],
        [d.x1_max, d.x2_min],
        [d.x1_min, d.x2_max],
        [d.x1_max, d.x2_max],
    ];
    let h1 = move |x: Vec2| a[0] + a[1] * x[0] + a[2] * x[1];
    let h2 = move |x: Vec2| b[0] + b[1] * x[0] + b[2] * x[1];
    let div = a[1] + b[2];
    let h_lower = corners.iter().map(|&x| h2(x)).fold(f64::INFINITY, f64::min);
    let h_upper = corners
        .iter()
        .map(|&x| h1(x).abs().max(h2(x)))
        .fold(div, f64::max);
    // largest singular value of [[a1, a2], [b1, b2]]
    let (p, q, r, s) = (a[1], a[2], b[1], b[2]);
    let fro = p * p + q * q + r * r + s * s;
    let det = p * s - q * r;
    let lip = (0.5 * (fro + (fro * fro - 4.0 * det * det).max(0.0).sqrt())).sqrt();
    FieldSpec::new(
        "affine",
        Arc::new(h1),
        Arc::new(h2),
        Arc::new(move |_| div),
        h_lower,
        h_upper,
        lip,
    )
}

fn boundary(
    c: &mut Config,
    d: &DomainSpec,
    spec: &NFunctionSpec,
    field: &FieldSpec,
) -> Result<(BoundaryKind, BoundaryData), ConfigError> {
    let line = c.line_of("bc.kind");
    let kind = c.take_str("bc.kind").unwrap_or_else(|| "dam".into());
    match kind.as_str() {
        "dam" => {
            let u0: f64 = c.value_or("bc.u0", 0.4)?;
            Ok((BoundaryKind::Dam { u0 }, dam_boundary(d, spec, field, u0)))
        }
        "zero" => {
            let bc = BoundaryData {
                gamma: Some((d.x1_min, d.x1_max)),
                ..BoundaryData::zero()
            };
            Ok((BoundaryKind::Zero, bc))
        }
        other => Err(error_for(
            line,
            format!("`bc.kind`: unknown kind `{other}` (dam, zero)"),
        )),
    }
}

/// `a⁻¹(H₂(x₁, x2_min)) (u0 - x₂)⁺` on the bottom and sides, zero on the
/// top. For fields with `H₁ = 0` and `H₂` independent of `x₂` this is the
/// trace of a one-dimensional solution when `a` is linear, and of the
/// exact dam solution whenever `H₂` is constant.
pub fn dam_boundary(
    d: &DomainSpec,
    spec: &NFunctionSpec,
    field: &FieldSpec,
    u0: f64,
) -> BoundaryData {
    let depth = u0 - d.x2_min;
    let slope_at = |x1: f64| spec.a_inv((field.h2)([x1, d.x2_min]));
    let bottom = {
        let (h2, spec) = (field.h2.clone(), spec.clone());
        let y0 = d.x2_min;
        EdgeData::Function(Arc::new(move |x: Vec2| {
            spec.a_inv(h2([x[0], y0])) * depth.max(0.0)
        }))
    };
    let side = |x1: f64| {
        let s = slope_at(x1);
        if depth > 0.0 {
            EdgeData::ramp(s * depth, s, d.x2_min)
        } else {
            EdgeData::Constant(0.0)
        }
    };
    BoundaryData {
        bottom,
        top: EdgeData::Constant(0.0),
        left: side(d.x1_min),
        right: side(d.x1_max),
        gamma: Some((d.x1_min, d.x1_max)),
    }
}

fn solver(c: &mut Config) -> Result<SolverConfig, ConfigError> {
    let d = SolverConfig::default();
    let method = match c.take("solver.method") {
        None => d.method,
        Some((v, line)) => match v.as_str() {
            "picard" => NonlinearMethod::Picard,
            "newton" => NonlinearMethod::Newton,
            other => {
                return Err(error_for(
                    Some(line),
                    format!("`solver.method`: unknown method `{other}` (picard, newton)"),
                ))
            }
        },
    };
    let preconditioner = match c.take("solver.preconditioner") {
        None => d.preconditioner,
        Some((v, line)) => match v.as_str() {
            "column-lines" => Preconditioner::ColumnLines,
            "jacobi" => Preconditioner::Jacobi,
            other => {
                return Err(error_for(
                    Some(line),
                    format!("`solver.preconditioner`: unknown `{other}` (column-lines, jacobi)"),
                ))
            }
        },
    };
    let indicator = match c.take("solver.indicator") {
        None => d.indicator,
        Some((v, line)) => match v.as_str() {
            "smoothed" => IndicatorUpdate::Smoothed,
            "sharp" => IndicatorUpdate::Sharp,
            other => {
                return Err(error_for(
                    Some(line),
                    format!("`solver.indicator`: unknown `{other}` (smoothed, sharp)"),
                ))
            }
        },
    };
    let line = c.line_of("solver.omega");
    let cfg = SolverConfig {
        outer_tol: c.value_or("solver.outer_tol", d.outer_tol)?,
        inner_tol: c.value_or("solver.inner_tol", d.inner_tol)?,
        max_outer: c.value_or("solver.max_outer", d.max_outer)?,
        max_inner: c.value_or("solver.max_inner", d.max_inner)?,
        omega: c.value_or("solver.omega", d.omega)?,
        anderson: c.value_or("solver.anderson", d.anderson)?,
        picard_omega: c.parse_value("solver.picard_omega")?,
        tol_u: c.parse_value("solver.tol_u")?,
        tol_chi: c.value_or("solver.tol_chi", d.tol_chi)?,
        eps_reg: c.value_or("solver.eps_reg", d.eps_reg)?,
        linear_tol: c.value_or("solver.linear_tol", d.linear_tol)?,
        method,
        preconditioner,
        indicator,
    };
    cfg.validate().map_err(|e| error_for(line, e.to_string()))?;
    Ok(cfg)
}

fn barriers(c: &mut Config, field: &FieldSpec) -> Result<Vec<BarrierSpec>, ConfigError> {
    let frac: f64 = c.value_or("barrier.epsilon_frac", 0.8)?;
    let ks = c.list("barrier.k")?.unwrap_or_default();
    let w = c
        .fixed_list("barrier.w", 2)?
        .unwrap_or_else(|| vec![0.2, 0.8]);
    let cap = field.h_lower / (2.0 * field.h_upper);
    Ok(ks
        .into_iter()
        .map(|k| BarrierSpec::new(field, frac * cap, k, (w[0], w[1])))
        .collect())
}
