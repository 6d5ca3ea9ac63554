//! Scenario harness for `fblab-core`: configuration files, the verification
//! suite, artifact output and the command implementations behind the
//! `fblab` binary.

pub mod config;
pub mod scenario;
pub mod suite;
pub mod summary;
pub mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fblab_core::barriers::{report_table, BarrierReport};
use fblab_core::free_boundary::{default_dt, extract_phi, fixtures};
use fblab_core::geometry::Chart;
use fblab_core::grid::{GridField, IndicatorField};
use fblab_core::io::{load_field, save_field, Table};
use fblab_core::solver::{default_tol_u, solve_problem_p};
use thiserror::Error;

pub use config::ConfigError;
pub use scenario::Scenario;
pub use suite::{SolveStats, Solved};
pub use summary::{CheckResult, Status, VerificationSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    /// The configuration parsed but describes an inadmissible problem.
    #[error("invalid scenario: {0}")]
    Invalid(fblab_core::Error),
    #[error("solver failure: {0}")]
    Solver(fblab_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{failed} verification check(s) failed")]
    Verification { failed: usize },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Verification { .. } => 1,
            HarnessError::Solver(_) | HarnessError::Io { .. } => 2,
            HarnessError::Config(_) | HarnessError::Invalid(_) => 3,
        }
    }

    fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| HarnessError::Io { context, source }
    }
}

fn core_io(path: &Path) -> impl FnOnce(fblab_core::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        context: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// Human-readable admissibility report; fails on the first violated
/// condition.
pub fn run_validate(sc: &Scenario) -> Result<Vec<String>, HarnessError> {
    let inv = HarnessError::Invalid;
    let d = &sc.domain;
    d.validate().map_err(inv)?;
    sc.spec.validate().map_err(inv)?;
    sc.field.validate(d).map_err(inv)?;
    sc.bc.validate(d).map_err(inv)?;
    sc.solver.validate().map_err(inv)?;
    for b in &sc.barriers {
        b.validate(d).map_err(inv)?;
    }
    let mut lines = vec![
        format!("scenario {}", sc.name),
        format!(
            "grid {} x {} on [{}, {}] x [{}, {}]",
            d.n1, d.n2, d.x1_min, d.x1_max, d.x2_min, d.x2_max
        ),
        format!(
            "operator {} with exponent bounds [{}, {}]",
            sc.spec.label(),
            sc.spec.a0,
            sc.spec.a1
        ),
        format!(
            "field {}: h_lower {}, h_upper {}, Lipschitz {}",
            sc.field.name, sc.field.h_lower, sc.field.h_upper, sc.field.lip_const
        ),
        format!(
            "chart level {} with {} orbits",
            sc.chart.level, sc.chart.orbits
        ),
    ];
    for b in &sc.barriers {
        lines.push(format!(
            "strip [{}, {}] x [{}, {}]",
            b.w1,
            b.w2,
            b.k,
            b.k + b.epsilon
        ));
    }
    if let Some(f) = sc.fixture {
        lines.push(format!("fixture {f:?} replaces the solve"));
    }
    lines.push("ok".into());
    Ok(lines)
}

pub fn build_chart(sc: &Scenario) -> Result<Chart, HarnessError> {
    Chart::uniform(
        &sc.field,
        &sc.domain,
        sc.chart.level,
        sc.chart.orbits,
        &sc.chart.options(&sc.domain),
    )
    .map_err(HarnessError::Solver)
}

/// Solves the scenario, or builds its fixture fields.
pub fn solve(sc: &Scenario) -> Result<Solved, HarnessError> {
    let tol_u = sc
        .solver
        .tol_u
        .unwrap_or_else(|| default_tol_u(&sc.spec, &sc.field, &sc.domain));
    if let Some(f) = sc.fixture {
        let (u, chi) = match f {
            scenario::Fixture::Island => fixtures::island(&sc.domain),
            scenario::Fixture::Jump => fixtures::jump(&sc.domain),
        };
        return Ok(Solved {
            u,
            chi,
            tol_u,
            stats: None,
        });
    }
    let start = Instant::now();
    let sol = solve_problem_p(&sc.spec, &sc.field, &sc.bc, &sc.domain, &sc.solver)
        .map_err(HarnessError::Solver)?;
    let stats = SolveStats {
        outer: sol.outer_iterations(),
        inner: sol.inner_iterations,
        linear: sol.linear_iterations,
        residual: sol.residual,
        undershoot: sol.undershoot,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Solved {
        u: sol.u,
        chi: sol.chi,
        tol_u: sol.tol_u,
        stats: Some(stats),
    })
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir.display().to_string()))
}

fn write(path: PathBuf, contents: &str) -> Result<(), HarnessError> {
    fs::write(&path, contents).map_err(HarnessError::io(path.display().to_string()))
}

fn save_table(dir: &Path, name: &str, t: &Table) -> Result<(), HarnessError> {
    write(dir.join(name), &t.to_csv())
}

fn stats_table(sc: &Scenario, s: &Solved) -> Table {
    let mut t = Table::new(&["key", "value"]);
    let mut row = |k: &str, v: String| t.push_cells(vec![k.into(), v]);
    row("scenario", sc.name.clone());
    row("tol_u", s.tol_u.to_string());
    if let Some(st) = s.stats {
        row("outer_iterations", st.outer.to_string());
        row("inner_iterations", st.inner.to_string());
        row("linear_iterations", st.linear.to_string());
        row("residual", st.residual.to_string());
        row("undershoot", st.undershoot.to_string());
        row("runtime_s", st.seconds.to_string());
    }
    t
}

fn read_stats(path: &Path) -> Option<(f64, Option<SolveStats>)> {
    let text = fs::read_to_string(path).ok()?;
    let kv: BTreeMap<&str, &str> = text
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once(','))
        .collect();
    let num = |k: &str| kv.get(k)?.parse::<f64>().ok();
    let tol_u = num("tol_u")?;
    let stats = kv
        .contains_key("outer_iterations")
        .then(|| -> Option<SolveStats> {
            Some(SolveStats {
                outer: num("outer_iterations")? as usize,
                inner: num("inner_iterations")? as usize,
                linear: num("linear_iterations")? as usize,
                residual: num("residual")?,
                undershoot: num("undershoot")?,
                seconds: num("runtime_s")?,
            })
        });
    match stats {
        Some(None) => None,
        Some(s) => Some((tol_u, s)),
        None => Some((tol_u, None)),
    }
}

/// Artifacts of an earlier `solve` of the same configuration in `dir`.
fn reuse(sc: &Scenario, dir: &Path) -> Option<Solved> {
    if fs::read_to_string(dir.join("config.cfg")).ok()? != sc.canonical {
        return None;
    }
    let u = load_field(dir.join("u.field")).ok()?;
    let chi = IndicatorField::new(load_field(dir.join("chi.field")).ok()?).ok()?;
    let (tol_u, stats) = read_stats(&dir.join("solve.csv"))?;
    (u.domain() == &sc.domain).then_some(Solved {
        u,
        chi,
        tol_u,
        stats,
    })
}

/// Writes fields, tables and plots for a solved scenario.
pub fn write_solution(
    sc: &Scenario,
    chart: &Chart,
    s: &Solved,
    dir: &Path,
) -> Result<(), HarnessError> {
    ensure_dir(dir)?;
    write(dir.join("config.cfg"), &sc.canonical)?;
    for (name, f) in [("u.field", &s.u), ("chi.field", s.chi.field())] {
        let path = dir.join(name);
        save_field(&path, f).map_err(core_io(&path))?;
    }
    save_table(dir, "solve.csv", &stats_table(sc, s))?;

    let dt = sc.chart.dt.unwrap_or_else(|| default_dt(chart));
    let boundary = match extract_phi(&s.u, chart, s.tol_u, dt) {
        Ok(p) => {
            save_table(dir, "profile.csv", &p.table())?;
            p.polyline()
        }
        Err(_) => Vec::new(),
    };
    save_table(dir, "chart.csv", &chart_table(sc, chart))?;
    write(
        dir.join("u.svg"),
        &svg::contour_plot(&s.u, 12, &boundary, &format!("{}: contours of u", sc.name)),
    )?;
    let stride = (chart.orbits.len() / 24).max(1);
    write(
        dir.join("orbits.svg"),
        &svg::orbit_fan(
            chart,
            stride,
            &boundary,
            &format!("{}: chart orbits", sc.name),
        ),
    )?;
    Ok(())
}

/// Chart samples on every eighth orbit at ten times above the seed level.
fn chart_table(sc: &Scenario, chart: &Chart) -> Table {
    let mut t = Table::new(&["w", "t", "x1", "x2", "yh_formula", "yh_fd"]);
    let step = sc.verify.fd_step;
    for o in chart.orbits.iter().step_by(8) {
        let w = o.seed[0];
        for k in 0..10 {
            let time = o.alpha_plus * k as f64 / 10.0;
            if let Ok(p) = chart.probe(time, w, step) {
                t.push(&[p.w, p.t, p.x[0], p.x[1], p.yh_formula, p.yh_fd]);
            }
        }
    }
    t
}

pub struct SolveOutput {
    pub solved: Solved,
    pub chart: Chart,
}

pub fn run_solve(sc: &Scenario, out: Option<&Path>) -> Result<SolveOutput, HarnessError> {
    run_validate(sc)?;
    let chart = build_chart(sc)?;
    let solved = solve(sc)?;
    if let Some(dir) = out {
        write_solution(sc, &chart, &solved, dir)?;
    }
    Ok(SolveOutput { solved, chart })
}

fn needs(only: Option<&str>, modules: &[&str]) -> bool {
    only.is_none_or(|m| modules.contains(&m))
}

/// Everything a verification pass produces.
pub struct Checked {
    pub summary: VerificationSummary,
    pub reports: Vec<BarrierReport>,
    pub free_boundary: suite::FreeBoundaryArtifacts,
}

/// Runs every check on an already built chart and solution. Checks whose
/// inputs are missing are reported as skipped.
pub fn check_all(
    sc: &Scenario,
    only: Option<&str>,
    chart: Option<&Chart>,
    solved: Option<&Solved>,
) -> Checked {
    let mut suite = suite::Suite::new(sc, only);
    suite::operator_checks(&mut suite);
    suite::geometry_checks(&mut suite, chart);
    suite::solver_checks(&mut suite, solved);
    let reports = suite::barrier_checks(&mut suite);
    let free_boundary = suite::free_boundary_checks(&mut suite, chart, solved);
    Checked {
        summary: suite.summary,
        reports,
        free_boundary,
    }
}

/// Runs the verification suite. With `out`, a solve of the same
/// configuration already stored there is reused, and every artifact of the
/// run is written next to it.
pub fn run_verify(
    sc: &Scenario,
    only: Option<&str>,
    out: Option<&Path>,
) -> Result<VerificationSummary, HarnessError> {
    if let Some(m) = only {
        if !suite::MODULES.contains(&m) {
            return Err(HarnessError::Config(ConfigError::general(format!(
                "unknown module `{m}` ({})",
                suite::MODULES.join(", ")
            ))));
        }
    }
    run_validate(sc)?;
    let chart = if needs(only, &["flow_geometry", "free_boundary"]) {
        Some(build_chart(sc)?)
    } else {
        None
    };
    let solved = if needs(only, &["pde_solver", "free_boundary"]) {
        match out.and_then(|d| reuse(sc, d)) {
            Some(s) => Some(s),
            None => {
                let s = solve(sc)?;
                if let (Some(dir), Some(chart)) = (out, chart.as_ref()) {
                    write_solution(sc, chart, &s, dir)?;
                }
                Some(s)
            }
        }
    } else {
        None
    };

    let Checked {
        summary,
        reports,
        free_boundary: fb,
    } = check_all(sc, only, chart.as_ref(), solved.as_ref());

    if let Some(dir) = out {
        ensure_dir(dir)?;
        save_table(dir, "summary.csv", &summary.table())?;
        if !reports.is_empty() {
            save_table(dir, "barriers.csv", &report_table(&reports))?;
            for (i, r) in reports.iter().enumerate() {
                let name = if reports.len() > 1 {
                    format!("v_eps-{i}.field")
                } else {
                    "v_eps.field".into()
                };
                let path = dir.join(name);
                save_field(&path, &r.solution.v).map_err(core_io(&path))?;
            }
        }
        if let Some(c) = &fb.continuity {
            save_table(dir, "continuity.csv", &c.table())?;
        }
        if let Some(p) = &fb.profile {
            save_table(dir, "profile.csv", &p.table())?;
        }
    }
    Ok(summary)
}

/// Rows of a stored `summary.csv`.
pub fn run_report(dir: &Path) -> Result<Vec<(String, Status, String)>, HarnessError> {
    let path = dir.join("summary.csv");
    let text = fs::read_to_string(&path).map_err(|e| {
        HarnessError::Config(ConfigError::general(format!("{}: {e}", path.display())))
    })?;
    let bad = |line: usize, msg: &str| {
        HarnessError::Config(config::error_for(
            Some(line),
            format!("{}: {msg}", path.display()),
        ))
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.starts_with("check,module,tag,status") => {}
        _ => return Err(bad(1, "not a verification summary")),
    }
    lines
        .map(|(i, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != 8 {
                return Err(bad(i + 1, "expected 8 columns"));
            }
            let status = Status::parse(cells[3]).ok_or_else(|| bad(i + 1, "unknown status"))?;
            Ok((cells[0].to_string(), status, l.to_string()))
        })
        .collect()
}

/// Loads a field dump written by `solve` or `verify`.
pub fn load_dump(path: &Path) -> Result<GridField, HarnessError> {
    load_field(path).map_err(core_io(path))
}
