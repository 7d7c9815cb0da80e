//! The `states`, `solve`, `sweep` and `oracle` commands. Each takes the
//! validated configuration plus command-line overrides, writes its
//! artifacts and prints a short report to `stdout`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{failed_conditions, RunConfig};
use super::csv::{convergence_csv, profile_csv};
use super::svg::{line_plot, Series};
use super::Failure;
use crate::alpha::{select_root, solve_alpha, AlphaRoot, Branch};
use crate::asymptotics::{
    default_branch, limit_alpha, limit_location, run_sweep, LimitAlpha, LimitShock, SweepEntry,
};
use crate::gas::{AdmissibilityReport, FlowState};
use crate::model::{ModelKind, ReducedModel};
use crate::profile::{linf_gap, reconstruct, shoot_ivp_oracle, Profile, ORACLE_PARAM_CUTOFF};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_OUT_DIR: &str = "out";

/// Tripwires of `cmd_oracle`.
pub const ORACLE_ALPHA_GAP: f64 = 1e-6;
pub const ORACLE_PROFILE_GAP: f64 = 1e-5;
pub const ORACLE_INTEGRATOR_TOL: f64 = 1e-12;

/// Command-line overrides of configuration keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub param: Option<f64>,
    pub branch: Option<Branch>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    fn optional_out_dir(&self, cfg: &RunConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.out_dir.clone())
    }

    fn branch(&self, cfg: &RunConfig) -> Branch {
        self.branch.or(cfg.branch).unwrap_or_else(|| default_branch(cfg.model))
    }

    fn param(&self, cfg: &RunConfig) -> Result<f64, Failure> {
        match self.param {
            Some(p) if p > 0.0 && p.is_finite() => Ok(p),
            Some(p) => Err(Failure::Config(format!("parameter must be positive, got {p}"))),
            None => Ok(cfg.resolved_params()?[0]),
        }
    }
}

fn param_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Hb | ModelKind::Hp => "kappa",
        ModelKind::Vb | ModelKind::Vp => "mu",
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct StatesReport {
    pub model: ModelKind,
    pub gamma: f64,
    pub upstream: FlowState,
    pub downstream: FlowState,
    pub m0_sq: f64,
    pub m1_sq: f64,
    /// `A = P0 = rho u^2 + p`.
    pub momentum: f64,
    /// `Phi0`.
    pub bernoulli: f64,
    pub admissibility: AdmissibilityReport,
    pub limit: Option<LimitShock>,
    pub limit_alpha: Option<LimitAlpha>,
}

/// Print the upstream/downstream states, jump invariants and admissibility.
pub fn cmd_states(cfg: &RunConfig, ov: &Overrides, stdout: &mut dyn Write) -> Result<StatesReport, Failure> {
    let (pair, adm) = cfg.pair()?;
    let model = adm
        .admissible
        .then(|| ReducedModel::new(cfg.model, pair, cfg.delta.unwrap_or(0.0)).ok())
        .flatten();
    let limit = match (&model, cfg.model) {
        (Some(m), ModelKind::Hp | ModelKind::Vb | ModelKind::Vp) => {
            limit_location(m.kind, &m.pair, m.delta).ok()
        }
        _ => None,
    };
    let report = StatesReport {
        model: cfg.model,
        gamma: cfg.gamma,
        upstream: pair.upstream,
        downstream: pair.downstream,
        m0_sq: pair.m0_sq(),
        m1_sq: pair.m1_sq(),
        momentum: pair.momentum,
        bernoulli: pair.bernoulli,
        admissibility: adm,
        limit,
        limit_alpha: model.as_ref().map(|m| limit_alpha(m, ov.branch(cfg))),
    };

    let mut t = String::new();
    let mut row = |k: &str, v: String| t.push_str(&format!("{k:<22}{v}\n"));
    let f = |v: f64| format!("{v:.12}");
    row("model", format!("{} ({:?} jump)", cfg.model, cfg.model.jump()));
    row("gamma", f(cfg.gamma));
    for (side, s) in [("0", &pair.upstream), ("1", &pair.downstream)] {
        row(&format!("u{side}"), f(s.u));
        row(&format!("rho{side}"), f(s.rho));
        row(&format!("p{side}"), f(s.p));
        row(&format!("M{side}"), f(s.mach));
    }
    row("A = P0", f(pair.momentum));
    row("Phi0", f(pair.bernoulli));
    row("supersonic", adm.supersonic.to_string());
    row("subsonic_downstream", adm.subsonic_downstream.to_string());
    row("entropy", adm.entropy.to_string());
    match cfg.model {
        ModelKind::Hp => {
            row("hp1", adm.hp1.to_string());
            row("hp2", adm.hp2.to_string());
            row("hp_weight_margin", f(adm.hp_weight_margin));
        }
        ModelKind::Vp => {
            row("vp_mach_bound", adm.vp_mach_bound.to_string());
            row("vp_g1_at_q1", f(adm.vp_g1_at_q1));
        }
        _ => {}
    }
    row("admissible", adm.admissible.to_string());
    if let Some(l) = &report.limit {
        row("limit x_s", format!("{:.4} ({})", l.x_s, f(l.x_s)));
    }
    if let (Some(m), ModelKind::Hb) = (&model, cfg.model) {
        let cp = m.critical_point();
        row("v*", f(cp.w_star));
        row("limit alpha -f(v*)", f(m.alpha_anchor()));
    }
    stdout.write_all(t.as_bytes())?;
    if let Some(dir) = ov.optional_out_dir(cfg) {
        write_file(&dir, "states.json", &to_json(&report))?;
    }
    if !adm.admissible {
        return Err(Failure::Inadmissible(format!(
            "inadmissible {} configuration: {}",
            cfg.model,
            failed_conditions(&adm).join(", ")
        )));
    }
    Ok(report)
}

fn profile_plot(profile: &Profile, title: &str) -> String {
    let series = |name: &str, get: &dyn Fn(usize) -> f64| {
        Series::new(name, (0..profile.physical.len()).map(|k| (profile.physical[k].x, get(k))).collect())
    };
    let ph = &profile.physical;
    let mut all = vec![
        series("u", &|k| ph[k].u),
        series("rho", &|k| ph[k].rho),
        series("p", &|k| ph[k].p),
    ];
    if profile.model == ModelKind::Vp {
        all.push(series("T", &|k| ph[k].temperature.unwrap_or(f64::NAN)));
    }
    line_plot(title, "x", &all, false)
}

fn footer(profile: &Profile, branch: Branch) -> Vec<(&'static str, f64)> {
    if profile.model == ModelKind::Vp && branch == Branch::Divergent {
        vec![("max_pressure", profile.max_pressure())]
    } else {
        Vec::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub model: ModelKind,
    pub param: f64,
    pub root: AlphaRoot,
    pub roots_found: usize,
    pub midpoint_x: f64,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

/// Solve at one parameter and write `profile.csv` and `profile.svg`.
pub fn cmd_solve(cfg: &RunConfig, ov: &Overrides, stdout: &mut dyn Write) -> Result<SolveReport, Failure> {
    let setup = cfg.setup()?;
    let param = ov.param(cfg)?;
    let branch = ov.branch(cfg);
    let roots = solve_alpha(&setup.model, param, &setup.spec)?;
    let root = select_root(&roots, branch)?;
    let profile = reconstruct(&setup.model, param, &root, cfg.grid_n, &setup.spec)?;
    let dir = ov.out_dir(cfg);
    let title = format!("{} {}={param:e} ({})", cfg.model, param_name(cfg.model), branch.label());
    write_file(&dir, "profile.csv", &profile_csv(&profile, &footer(&profile, branch)))?;
    write_file(&dir, "profile.svg", &profile_plot(&profile, &title))?;
    let report = SolveReport {
        model: cfg.model,
        param,
        root,
        roots_found: roots.len(),
        midpoint_x: profile.midpoint_x,
        csv: dir.join("profile.csv"),
        svg: dir.join("profile.svg"),
    };
    writeln!(
        stdout,
        "{} {}={param:e} branch={} alpha={:.16e} ln|alpha-anchor|={:.12} residual={:.3e} midpoint_x={:.12}",
        cfg.model,
        param_name(cfg.model),
        branch.label(),
        root.alpha,
        root.ln_offset,
        root.residual,
        profile.midpoint_x
    )?;
    writeln!(stdout, "wrote {} and {}", report.csv.display(), report.svg.display())?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
struct ManifestEntry<'a> {
    #[serde(flatten)]
    entry: &'a SweepEntry,
    csv: Option<String>,
    svg: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: RunConfig,
    parameter: &'static str,
    params: Vec<f64>,
    branch: Branch,
    limit: &'a Option<LimitShock>,
    limit_alpha: LimitAlpha,
    entries: Vec<ManifestEntry<'a>>,
    succeeded: usize,
    convergence_csv: &'static str,
    convergence_svg: &'static str,
    timings: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct Timings {
    sweep_seconds: f64,
    total_seconds: f64,
}

/// Sweep the configured parameters; writes one profile CSV/SVG per
/// parameter, `convergence.csv`/`.svg`, `timings.json` and, last,
/// `manifest.json`. Fails only when no parameter succeeded.
pub fn cmd_sweep(
    cfg: &RunConfig,
    ov: &Overrides,
    stdout: &mut dyn Write,
) -> Result<crate::asymptotics::SweepResult, Failure> {
    let start = Instant::now();
    let setup = cfg.setup()?;
    let params = cfg.resolved_params()?;
    let branch = ov.branch(cfg);
    let dir = ov.out_dir(cfg);
    let sweep_start = Instant::now();
    let result = run_sweep(&setup.model, &params, Some(branch), cfg.grid_n, &setup.spec)?;
    let sweep_seconds = sweep_start.elapsed().as_secs_f64();
    let name = param_name(cfg.model);

    let mut entries = Vec::with_capacity(result.entries.len());
    for (k, e) in result.entries.iter().enumerate() {
        let (csv, svg) = match &e.profile {
            Some(profile) => {
                let csv = format!("profile_{k:03}.csv");
                let svg = format!("profile_{k:03}.svg");
                let title = format!("{} {name}={:e} ({})", cfg.model, e.param, branch.label());
                write_file(&dir, &csv, &profile_csv(profile, &footer(profile, branch)))?;
                write_file(&dir, &svg, &profile_plot(profile, &title))?;
                (Some(csv), Some(svg))
            }
            None => (None, None),
        };
        entries.push(ManifestEntry { entry: e, csv, svg });
    }

    write_file(&dir, "convergence.csv", &convergence_csv(&result))?;
    let metric = |label: &str, get: fn(&SweepEntry) -> Option<f64>| {
        let pts: Vec<(f64, f64)> =
            result.entries.iter().filter_map(|e| get(e).map(|v| (e.param, v))).collect();
        (!pts.is_empty()).then(|| Series::new(label, pts))
    };
    let series: Vec<Series> = [
        metric("l1_to_limit", |e| e.l1_to_limit),
        metric("midpoint_x", |e| e.midpoint_x),
        metric("plateau_measure", |e| e.plateau_measure),
        metric("step_family_l1", |e| e.step_family_l1),
        metric("max_pressure", |e| e.max_pressure),
        metric("ln_alpha_offset", |e| e.ln_alpha_offset),
    ]
    .into_iter()
    .flatten()
    .collect();
    let title = format!("{} sweep ({})", cfg.model, branch.label());
    write_file(&dir, "convergence.svg", &line_plot(&title, name, &series, true))?;

    let timings = Timings { sweep_seconds, total_seconds: start.elapsed().as_secs_f64() };
    write_file(&dir, "timings.json", &to_json(&timings))?;
    let mut echo = cfg.clone();
    echo.out_dir = None;
    let manifest = Manifest {
        tool: "nozzle-shocks",
        version: VERSION,
        command: "sweep",
        config: echo,
        parameter: name,
        params: result.entries.iter().map(|e| e.param).collect(),
        branch,
        limit: &result.limit,
        limit_alpha: result.limit_alpha,
        entries,
        succeeded: result.succeeded(),
        convergence_csv: "convergence.csv",
        convergence_svg: "convergence.svg",
        timings: "timings.json",
    };
    write_file(&dir, "manifest.json", &to_json(&manifest))?;

    for e in &result.entries {
        match &e.error {
            None => writeln!(
                stdout,
                "{name}={:e} alpha={:.12e} midpoint_x={:.8}{}",
                e.param,
                e.alpha.unwrap_or(f64::NAN),
                e.midpoint_x.unwrap_or(f64::NAN),
                e.l1_to_limit.map(|v| format!(" l1_to_limit={v:.6e}")).unwrap_or_default()
            )?,
            Some(err) => writeln!(stdout, "{name}={:e} FAILED {err}", e.param)?,
        }
    }
    writeln!(stdout, "wrote {}", dir.join("manifest.json").display())?;
    if result.succeeded() == 0 {
        let first = result.entries.iter().find_map(|e| e.error.clone()).unwrap_or_default();
        return Err(Failure::AllFailed(first));
    }
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub model: ModelKind,
    pub param: f64,
    pub branch: Branch,
    pub skipped: bool,
    pub quadrature_ln_offset: Option<f64>,
    pub shooting_ln_offset: Option<f64>,
    /// `|alpha_q - alpha_s| / |alpha_q - anchor|`, an upper bound for the
    /// relative gap in `alpha` itself.
    pub alpha_rel_gap: Option<f64>,
    pub profile_linf_gap: Option<f64>,
    pub shots: Option<usize>,
    pub pass: bool,
}

/// Compare the quadrature solution with the shooting solution.
pub fn cmd_oracle(cfg: &RunConfig, ov: &Overrides, stdout: &mut dyn Write) -> Result<OracleReport, Failure> {
    let setup = cfg.setup()?;
    let param = ov.param(cfg)?;
    let branch = ov.branch(cfg);
    let mut report = OracleReport {
        model: cfg.model,
        param,
        branch,
        skipped: false,
        quadrature_ln_offset: None,
        shooting_ln_offset: None,
        alpha_rel_gap: None,
        profile_linf_gap: None,
        shots: None,
        pass: true,
    };
    if param < ORACLE_PARAM_CUTOFF {
        report.skipped = true;
        writeln!(
            stdout,
            "SKIPPED {} {}={param:e}: below the shooting cutoff {ORACLE_PARAM_CUTOFF:e}",
            cfg.model,
            param_name(cfg.model)
        )?;
        return Ok(report);
    }
    let root = select_root(&solve_alpha(&setup.model, param, &setup.spec)?, branch)?;
    let profile = reconstruct(&setup.model, param, &root, cfg.grid_n, &setup.spec)?;
    let shot = shoot_ivp_oracle(
        &setup.model,
        param,
        root.ln_offset + 0.1,
        branch,
        ORACLE_INTEGRATOR_TOL,
        cfg.grid_n,
    )?;
    let alpha_gap = (shot.ln_offset - root.ln_offset).exp_m1().abs();
    let linf = linf_gap(&profile, &shot.profile)?;
    report.quadrature_ln_offset = Some(root.ln_offset);
    report.shooting_ln_offset = Some(shot.ln_offset);
    report.alpha_rel_gap = Some(alpha_gap);
    report.profile_linf_gap = Some(linf);
    report.shots = Some(shot.shots);
    report.pass = alpha_gap < ORACLE_ALPHA_GAP && linf < ORACLE_PROFILE_GAP;
    writeln!(
        stdout,
        "{} {} {}={param:e} alpha_rel_gap={alpha_gap:.3e} (< {ORACLE_ALPHA_GAP:e}) profile_linf_gap={linf:.3e} (< {ORACLE_PROFILE_GAP:e}) shots={}",
        if report.pass { "PASS" } else { "FAIL" },
        cfg.model,
        param_name(cfg.model),
        shot.shots
    )?;
    if let Some(dir) = ov.optional_out_dir(cfg) {
        write_file(&dir, "oracle.json", &to_json(&report))?;
    }
    if !report.pass {
        return Err(Failure::Oracle(format!(
            "alpha gap {alpha_gap:.3e}, profile gap {linf:.3e}"
        )));
    }
    Ok(report)
}
