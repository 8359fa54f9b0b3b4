//! Routes a validated config to the matching solver and persists the results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use frontspread::analysis::{
    classify, coexistence_limit, criteria_check, iterate_bounds, mu_threshold, stop_rule, verify_limit, AnalysisError,
    IterationSequences, MuSweep, Verdict,
};
use frontspread::evolver::{initialize_profiles, Problem, Simulation, SolverConfig, Trajectory};
use frontspread::field::{FieldState, Grid};
use frontspread::growth::GrowthModel;
use frontspread::kernel::Kernel;
use frontspread::spectral::{
    critical_length, principal_eigenvalue_with, CriticalLengthOptions, EigenOptions, Potential, SpectralError,
    SpectralProblem,
};

use crate::config::{ExperimentConfig, Format, Kind};
use crate::suite::{self, Level};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Nodes allowed on an automatically sized grid.
const MAX_AUTO_NODES: usize = 4_000_001;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
    ConfigError,
    NumericAbort,
    Undetermined,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::ConfigError => 2,
            Status::NumericAbort => 3,
            Status::Undetermined => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub kind: Kind,
    pub config_sha256: String,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub status: Status,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub outputs: Vec<ManifestEntry>,
    pub summary: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Float formatting for CSV: 17 significant digits.
pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

struct Outputs {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Outputs {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), DispatchError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| DispatchError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        std::fs::write(&path, bytes).map_err(|source| DispatchError::Io { path, source })?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<(), DispatchError> {
        let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

/// Outcome of one experiment before persistence.
struct Outcome {
    status: Status,
    message: Option<String>,
    summary: Value,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Outcome {
            status: Status::Ok,
            message: None,
            summary,
        }
    }

    fn fail(status: Status, message: impl Into<String>, summary: Value) -> Self {
        Outcome {
            status,
            message: Some(message.into()),
            summary,
        }
    }
}

/// Runs `kind` on `cfg`, writing every output below `out_dir` and the
/// record itself to `out_dir/run.json`.
pub fn dispatch(cfg: &ExperimentConfig, kind: Kind, out_dir: &Path, level: Level) -> Result<RunRecord, DispatchError> {
    let start = Instant::now();
    let echo = cfg.echo();
    let mut out = Outputs {
        dir: out_dir.to_path_buf(),
        entries: Vec::new(),
    };
    out.write("config.toml", echo.as_bytes())?;
    let outcome = match kind {
        Kind::Simulate => simulate(cfg, &mut out)?,
        Kind::Eigen => eigen(cfg, &mut out)?,
        Kind::CriticalLength => critical(cfg, &mut out)?,
        Kind::MuSweep => sweep(cfg, &mut out)?,
        Kind::Asymptotics => asymptotics(cfg, &mut out)?,
        Kind::Verify => verify(cfg, level, &mut out)?,
    };
    let record = RunRecord {
        kind,
        config_sha256: sha256_hex(echo.as_bytes()),
        version: VERSION.to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        status: outcome.status,
        exit_code: outcome.status.exit_code(),
        message: outcome.message,
        outputs: out.entries,
        summary: outcome.summary,
    };
    let path = out_dir.join("run.json");
    let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| DispatchError::Io { path, source })?;
    Ok(record)
}

fn wants(cfg: &ExperimentConfig, fmt: Format) -> bool {
    cfg.outputs.formats.contains(&fmt)
}

/// `∫₀^R T(z) dz`, the largest flux a unit density can push across a boundary.
fn tail_moment(k: &Kernel) -> f64 {
    let r = k.support_radius();
    let n = 4000;
    let h = r / n as f64;
    let mut s = 0.5 * (k.tail_mass(0.0) + k.tail_mass(r));
    for i in 1..n {
        s += k.tail_mass(i as f64 * h);
    }
    s * h
}

struct Setup {
    model: GrowthModel,
    kernels: [Kernel; 2],
    problem: Problem,
    initial: FieldState,
}

fn setup(cfg: &ExperimentConfig, half_width: Option<f64>) -> Result<Setup, String> {
    let model = cfg.growth_model()?;
    let kernels = cfg.kernels()?;
    let profiles = cfg.profiles()?;
    let dx = cfg.grid.dx;
    let h0 = cfg.initial.h0;
    let reach = kernels[0].support_radius().max(kernels[1].support_radius());
    let width = match cfg.grid.half_width.or(half_width) {
        Some(w) => w,
        None => {
            let probe = Grid::symmetric(h0 + reach + 4.0 * dx, dx);
            let state = initialize_profiles(&probe, h0, &profiles[0], &profiles[1]).map_err(|e| e.to_string())?;
            let (a1, a2) = model.a_priori_bounds(state.max1(), state.max2());
            let speed =
                cfg.model.mu[0] * a1 * tail_moment(&kernels[0]) + cfg.model.mu[1] * a2 * tail_moment(&kernels[1]);
            let w = h0 + speed * cfg.solver.t_final + reach + 4.0 * dx;
            if (2.0 * w / dx) as usize > MAX_AUTO_NODES {
                return Err(format!(
                    "automatic ambient grid of half-width {w} at dx = {dx} is too large; set grid.half_width"
                ));
            }
            w
        }
    };
    let grid = Grid::symmetric(width, dx);
    let initial = initialize_profiles(&grid, h0, &profiles[0], &profiles[1]).map_err(|e| e.to_string())?;
    let problem = Problem {
        grid,
        model: model.clone(),
        kernels: kernels.clone(),
        d: cfg.model.d,
        mu: cfg.model.mu,
    };
    Ok(Setup {
        model,
        kernels,
        problem,
        initial,
    })
}

fn critical_opts(cfg: &ExperimentConfig) -> CriticalLengthOptions {
    CriticalLengthOptions {
        tol: cfg.critical.tol,
        lambda_tol: cfg.critical.lambda_tol,
        n_eig: cfg.critical.n_eig,
        ..Default::default()
    }
}

/// Per-species critical lengths; `None` where `a_i ≥ d_i`.
fn lengths(cfg: &ExperimentConfig, kernels: &[Kernel; 2]) -> Result<[Option<f64>; 2], SpectralError> {
    let opts = critical_opts(cfg);
    let one = |i: usize| match critical_length(cfg.model.d[i], cfg.model.a[i], &kernels[i], &opts) {
        Ok(l) => Ok(Some(l)),
        Err(SpectralError::AlwaysPositive { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let l1 = one(0)?;
    let same =
        cfg.model.a[0] == cfg.model.a[1] && cfg.model.d[0] == cfg.model.d[1] && kernels[0].spec() == kernels[1].spec();
    let l2 = if same { l1 } else { one(1)? };
    Ok([l1, l2])
}

/// `ℓ* = min(ℓ₁, ℓ₂)`, undefined once either species spreads unconditionally.
fn ell_star_of(l: [Option<f64>; 2]) -> Option<f64> {
    match l {
        [Some(a), Some(b)] => Some(a.min(b)),
        _ => None,
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,g,h,gprime,hprime,mass1,mass2,max1,max2\n");
    for p in &traj.points {
        let row = [p.t, p.g, p.h, p.gprime, p.hprime, p.mass1, p.mass2, p.max1, p.max2];
        let cells: Vec<String> = row.iter().map(|&v| f(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn snapshot_csv(traj: &Trajectory, k: usize) -> String {
    let snap = &traj.snapshots[k];
    let mut s = String::from("x,u1,u2\n");
    for (j, (a, b)) in snap.u1.iter().zip(&snap.u2).enumerate() {
        let x = traj.grid.x(snap.start + j);
        let _ = writeln!(s, "{},{},{}", f(x), f(*a), f(*b));
    }
    s
}

fn persist_trajectory(cfg: &ExperimentConfig, traj: &Trajectory, out: &mut Outputs) -> Result<(), DispatchError> {
    if wants(cfg, Format::Csv) {
        out.write("trajectory.csv", trajectory_csv(traj).as_bytes())?;
        for k in 0..traj.snapshots.len() {
            let name = format!("snapshots/step_{:08}.csv", traj.snapshots[k].step);
            out.write(&name, snapshot_csv(traj, k).as_bytes())?;
        }
    }
    Ok(())
}

fn trajectory_summary(traj: &Trajectory) -> Value {
    let (dh, dg) = traj.monotonicity();
    json!({
        "dt": traj.dt,
        "steps": traj.steps.len(),
        "stop": traj.stop,
        "final": traj.last(),
        "bounds": [traj.bounds.0, traj.bounds.1],
        "peak": [traj.peak().0, traj.peak().1],
        "min_dh": dh,
        "max_dg": dg,
        "growth_ratio": traj.growth_ratio(),
        "max_contraction_ratio": traj.max_contraction_ratio(),
    })
}

fn solver_config(cfg: &ExperimentConfig) -> SolverConfig {
    SolverConfig {
        dt: cfg.solver.dt,
        picard_tol: cfg.solver.picard_tol,
        picard_max_iters: cfg.solver.picard_max_iters,
        t_final: cfg.solver.t_final,
        snapshot_every: cfg.outputs.snapshot_every,
        convolution: cfg.solver.convolution,
        stop: Default::default(),
    }
}

fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, DispatchError> {
    let s = match setup(cfg, None) {
        Ok(s) => s,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e, Value::Null)),
    };
    let lens = match lengths(cfg, &s.kernels) {
        Ok(l) => l,
        Err(e) => return Ok(Outcome::fail(Status::NumericAbort, e.to_string(), Value::Null)),
    };
    let ell = ell_star_of(lens);
    let tol = cfg.classify.tolerances();
    let mut solver = solver_config(cfg);
    if cfg.solver.early_stop {
        solver.stop = stop_rule(ell, &tol);
    }
    let sim = match Simulation::new(s.problem, solver, s.initial) {
        Ok(sim) => sim,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e.to_string(), Value::Null)),
    };
    let prediction = criteria_check(&s.model, cfg.model.d, cfg.initial.h0, ell).ok();
    let (traj, failure) = match sim.run() {
        Ok(t) => (t, None),
        Err(fail) => (*fail.partial, Some(fail.error)),
    };
    persist_trajectory(cfg, &traj, out)?;
    let c = classify(&traj, ell, &tol);
    let limit = if c.verdict == Verdict::Spreading {
        verify_limit(&traj, &c, &s.model, tol.window, None).ok()
    } else {
        None
    };
    let summary = json!({
        "critical_lengths": lens,
        "ell_star": ell,
        "prediction": prediction,
        "classification": c,
        "trajectory": trajectory_summary(&traj),
        "limit": limit,
    });
    if wants(cfg, Format::Json) {
        out.json("summary.json", &summary)?;
    }
    Ok(match failure {
        Some(e) => Outcome::fail(Status::NumericAbort, e.to_string(), summary),
        None => Outcome::ok(summary),
    })
}

fn eigen(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, DispatchError> {
    let kernels = match cfg.kernels() {
        Ok(k) => k,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e, Value::Null)),
    };
    let i = cfg.eigen.species - 1;
    let theta = cfg.eigen.theta.unwrap_or(cfg.model.a[i]);
    let [a, b] = cfg.eigen.interval;
    let problem = match SpectralProblem::new(
        cfg.model.d[i],
        kernels[i].clone(),
        (a, b),
        Potential::Constant(theta),
        cfg.eigen.n_eig,
    ) {
        Ok(p) => p,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e.to_string(), Value::Null)),
    };
    let opts = EigenOptions {
        tol: cfg.eigen.tol,
        ..Default::default()
    };
    match principal_eigenvalue_with(&problem, &opts) {
        Ok(pair) => {
            let summary = json!({
                "species": cfg.eigen.species,
                "interval": [a, b],
                "d": cfg.model.d[i],
                "theta": theta,
                "n_eig": cfg.eigen.n_eig,
                "lambda": pair.lambda,
                "iterations": pair.iterations,
                "residual": pair.residual,
            });
            if wants(cfg, Format::Json) {
                out.json("eigen.json", &summary)?;
            }
            if wants(cfg, Format::Csv) {
                let mut s = String::from("x,phi\n");
                for (x, v) in pair.nodes.iter().zip(&pair.vector) {
                    let _ = writeln!(s, "{},{}", f(*x), f(*v));
                }
                out.write("eigenfunction.csv", s.as_bytes())?;
            }
            Ok(Outcome::ok(summary))
        }
        Err(e) => Ok(Outcome::fail(Status::NumericAbort, e.to_string(), Value::Null)),
    }
}

fn critical(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, DispatchError> {
    let kernels = match cfg.kernels() {
        Ok(k) => k,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e, Value::Null)),
    };
    let lens = match lengths(cfg, &kernels) {
        Ok(l) => l,
        Err(e) => return Ok(Outcome::fail(Status::NumericAbort, e.to_string(), Value::Null)),
    };
    let status = |l: Option<f64>| if l.is_some() { "FINITE" } else { "ALWAYS_POSITIVE" };
    let summary = json!({
        "l1": lens[0],
        "l2": lens[1],
        "status1": status(lens[0]),
        "status2": status(lens[1]),
        "ell_star": ell_star_of(lens),
        "status": if ell_star_of(lens).is_some() { "FINITE" } else { "ALWAYS_POSITIVE" },
    });
    if wants(cfg, Format::Json) {
        out.json("critical_length.json", &summary)?;
    }
    Ok(Outcome::ok(summary))
}

fn sweep(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, DispatchError> {
    let kernels = match cfg.kernels() {
        Ok(k) => k,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e, Value::Null)),
    };
    let ell = match lengths(cfg, &kernels) {
        Ok(l) => ell_star_of(l),
        Err(e) => return Ok(Outcome::fail(Status::NumericAbort, e.to_string(), Value::Null)),
    };
    let Some(ell) = ell else {
        let summary = json!({ "ell_star": null });
        return Ok(Outcome::fail(
            Status::ConfigError,
            "a_i >= d_i for some species: spreading for every mu, nothing to sweep",
            summary,
        ));
    };
    let reach = kernels[0].support_radius().max(kernels[1].support_radius());
    let s = match setup(cfg, Some(cfg.initial.h0 + ell + 10.0 * reach)) {
        Ok(s) => s,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e, Value::Null)),
    };
    let mut solver = solver_config(cfg);
    solver.snapshot_every = usize::MAX;
    let mut ms = MuSweep::new(s.problem, solver, s.initial, ell);
    ms.tolerances = cfg.classify.tolerances();
    ms.bracket = (cfg.sweep.bracket[0], cfg.sweep.bracket[1]);
    ms.budget = cfg.sweep.budget;
    ms.ratio_tol = cfg.sweep.ratio_tol;
    ms.parallelism = if cfg.sweep.parallelism == 0 {
        threads()
    } else {
        cfg.sweep.parallelism
    };
    let (bracket, status, message) = match mu_threshold(&ms) {
        Ok(b) => (b, Status::Ok, None),
        Err(AnalysisError::SweepUndetermined { partial }) => (
            *partial,
            Status::Undetermined,
            Some("sweep left undetermined runs".to_string()),
        ),
        Err(e @ AnalysisError::Run { .. }) => {
            return Ok(Outcome::fail(Status::NumericAbort, e.to_string(), Value::Null));
        }
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e.to_string(), Value::Null)),
    };
    let summary = json!({
        "ell_star": ell,
        "bracket": [bracket.lo, bracket.hi],
        "ratio": bracket.ratio(),
        "rounds": bracket.rounds,
        "order_violation": bracket.order_violation,
        "runs": bracket.runs,
    });
    if wants(cfg, Format::Json) {
        out.json("mu_sweep.json", &summary)?;
    }
    if wants(cfg, Format::Csv) {
        let mut s = String::from("mu,verdict,t_final,t_end,range,max1,max2\n");
        for r in &bracket.runs {
            let _ = writeln!(
                s,
                "{},{:?},{},{},{},{},{}",
                f(r.mu),
                r.verdict,
                f(r.t_final),
                f(r.t_end),
                f(r.range),
                f(r.max1),
                f(r.max2)
            );
        }
        out.write("mu_runs.csv", s.as_bytes())?;
    }
    Ok(Outcome {
        status,
        message,
        summary,
    })
}

fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn asymptotics(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, DispatchError> {
    let model = match cfg.growth_model() {
        Ok(m) => m,
        Err(e) => return Ok(Outcome::fail(Status::ConfigError, e, Value::Null)),
    };
    let (seq, limit) = match (
        iterate_bounds(&model, cfg.asymptotics.n_iters),
        coexistence_limit(&model),
    ) {
        (Ok(s), Ok(l)) => (s, l),
        (Err(e), _) | (_, Err(e)) => return Ok(Outcome::fail(Status::ConfigError, e.to_string(), Value::Null)),
    };
    let (la, lb) = seq.limits();
    let summary = json!({
        "regime": model.regime(),
        "coexistence_limit": [limit.0, limit.1],
        "sequence_limits": [la, lb],
        "limit_error": (la - limit.0).abs().max((lb - limit.1).abs()),
        "monotone": seq.monotone(1e-14),
        "sequences": seq,
    });
    if wants(cfg, Format::Json) {
        out.json("asymptotics.json", &summary)?;
    }
    if wants(cfg, Format::Csv) {
        let mut s = String::new();
        match &seq {
            IterationSequences::Competition { upper_a, lower_b, .. } => {
                s.push_str("i,upper_a,lower_b\n");
                for (i, (a, b)) in upper_a.iter().zip(lower_b).enumerate() {
                    let _ = writeln!(s, "{i},{},{}", f(*a), f(*b));
                }
            }
            IterationSequences::Predation {
                upper_a,
                lower_a,
                upper_b,
                lower_b,
                ..
            } => {
                s.push_str("i,upper_a,lower_a,upper_b,lower_b\n");
                for i in 0..upper_a.len() {
                    let _ = writeln!(
                        s,
                        "{i},{},{},{},{}",
                        f(upper_a[i]),
                        f(lower_a[i]),
                        f(upper_b[i]),
                        f(lower_b[i])
                    );
                }
            }
        }
        out.write("sequences.csv", s.as_bytes())?;
    }
    Ok(Outcome::ok(summary))
}

fn verify(_cfg: &ExperimentConfig, level: Level, out: &mut Outputs) -> Result<Outcome, DispatchError> {
    let report = suite::run(level, |c| println!("{}", c.line()));
    let summary = serde_json::to_value(&report).expect("report serializes");
    out.json("verify.json", &summary)?;
    Ok(if report.passed() {
        Outcome::ok(summary)
    } else {
        Outcome::fail(Status::Failed, format!("{} checks failed", report.failures()), summary)
    })
}
