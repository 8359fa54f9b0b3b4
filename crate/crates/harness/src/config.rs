//! Experiment configuration files.
//!
//! A config is TOML with an explicit `schema_version`. Unknown keys are
//! errors. Every block is optional except `[model]`; missing keys take the
//! defaults below, and the fully populated config is echoed next to the
//! outputs of every run.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use frontspread::analysis::ClassifyTolerances;
use frontspread::evolver::{contraction_product, max_dt, Profile};
use frontspread::field::ConvolutionMethod;
use frontspread::growth::{GrowthModel, LvParams};
use frontspread::kernel::{Kernel, KernelSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Eigen,
    CriticalLength,
    MuSweep,
    Asymptotics,
    Verify,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Eigen => "eigen",
            Kind::CriticalLength => "critical-length",
            Kind::MuSweep => "mu-sweep",
            Kind::Asymptotics => "asymptotics",
            Kind::Verify => "verify",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Competition,
    PredatorPrey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    #[serde(default = "ones")]
    pub d: [f64; 2],
    #[serde(default = "ones")]
    pub mu: [f64; 2],
}

fn ones() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelBlock {
    Triangular {
        sigma: f64,
    },
    Gaussian {
        sigma: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
    Tabulated {
        path: PathBuf,
    },
}

fn default_cutoff() -> f64 {
    6.0
}

impl Default for KernelBlock {
    fn default() -> Self {
        KernelBlock::Triangular { sigma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    pub dx: f64,
    /// Ambient half-width; sized from the boundary growth bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            dx: 0.05,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileFamily {
    Cosine,
    Parabola,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialBlock {
    pub h0: f64,
    pub profile: ProfileFamily,
    pub amplitude: [f64; 2],
    /// CSV files of `(x, u)` pairs, one per species, for `profile = "csv"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<[PathBuf; 2]>,
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock {
            h0: 1.0,
            profile: ProfileFamily::Cosine,
            amplitude: [0.5, 0.5],
            paths: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub t_final: f64,
    pub convolution: ConvolutionMethod,
    /// Stop a simulation once its classification is settled.
    pub early_stop: bool,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            dt: None,
            picard_tol: 1e-12,
            picard_max_iters: 200,
            t_final: 10.0,
            convolution: ConvolutionMethod::Auto,
            early_stop: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsBlock {
    pub dir: PathBuf,
    pub snapshot_every: usize,
    pub formats: Vec<Format>,
}

impl Default for OutputsBlock {
    fn default() -> Self {
        OutputsBlock {
            dir: PathBuf::from("out"),
            snapshot_every: 100,
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyBlock {
    pub window: f64,
    pub vanish_tol: f64,
    pub speed_tol: f64,
    pub range_tol: f64,
}

impl Default for ClassifyBlock {
    fn default() -> Self {
        let t = ClassifyTolerances::default();
        ClassifyBlock {
            window: t.window,
            vanish_tol: t.vanish_tol,
            speed_tol: t.speed_tol,
            range_tol: t.range_tol,
        }
    }
}

impl ClassifyBlock {
    pub fn tolerances(&self) -> ClassifyTolerances {
        ClassifyTolerances {
            window: self.window,
            vanish_tol: self.vanish_tol,
            speed_tol: self.speed_tol,
            range_tol: self.range_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenBlock {
    /// 1 or 2: which species supplies `d`, the kernel and the default `θ`.
    pub species: usize,
    pub interval: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub n_eig: usize,
    pub tol: f64,
}

impl Default for EigenBlock {
    fn default() -> Self {
        EigenBlock {
            species: 1,
            interval: [0.0, 1.0],
            theta: None,
            n_eig: 512,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalBlock {
    pub tol: f64,
    pub lambda_tol: f64,
    pub n_eig: usize,
}

impl Default for CriticalBlock {
    fn default() -> Self {
        CriticalBlock {
            tol: 1e-3,
            lambda_tol: 1e-7,
            n_eig: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub bracket: [f64; 2],
    pub budget: usize,
    pub ratio_tol: f64,
    /// Runs per round; 0 uses the thread count.
    pub parallelism: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            bracket: [1e-3, 1e3],
            budget: 12,
            ratio_tol: 1.1,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsBlock {
    pub n_iters: usize,
}

impl Default for AsymptoticsBlock {
    fn default() -> Self {
        AsymptoticsBlock { n_iters: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub model: ModelBlock,
    /// Kernel of species 1, and of species 2 unless `kernel2` is given.
    #[serde(default)]
    pub kernel: KernelBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel2: Option<KernelBlock>,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub outputs: OutputsBlock,
    #[serde(default)]
    pub classify: ClassifyBlock,
    #[serde(default)]
    pub eigen: EigenBlock,
    #[serde(default)]
    pub critical: CriticalBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub asymptotics: AsymptoticsBlock,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Parses and validates config text; relative paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<config>"),
        message: e.to_string(),
    })?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// TOML echo with every default filled in.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn growth_model(&self) -> Result<GrowthModel, String> {
        let m = &self.model;
        let p = LvParams::new((m.a[0], m.a[1]), (m.b[0], m.b[1]), (m.c[0], m.c[1]));
        match m.kind {
            ModelKind::Competition => GrowthModel::competition(p),
            ModelKind::PredatorPrey => GrowthModel::predator_prey(p),
        }
        .map_err(|e| e.to_string())
    }

    fn kernel_spec(&self, block: &KernelBlock) -> Result<KernelSpec, String> {
        Ok(match block {
            KernelBlock::Triangular { sigma } => KernelSpec::triangular(*sigma),
            KernelBlock::Gaussian { sigma, cutoff } => KernelSpec::gaussian(*sigma, *cutoff),
            KernelBlock::Tabulated { path } => KernelSpec::from_csv(&self.resolve(path)).map_err(|e| e.to_string())?,
        })
    }

    /// Kernels of both species, with tail tables on the simulation grid spacing.
    pub fn kernels(&self) -> Result<[Kernel; 2], String> {
        let tol = Default::default();
        let dx = Some(self.grid.dx);
        let k1 = Kernel::with_table_spacing(self.kernel_spec(&self.kernel)?, dx, &tol)
            .map_err(|e| format!("kernel: {e}"))?;
        let k2 = match &self.kernel2 {
            Some(b) => {
                Kernel::with_table_spacing(self.kernel_spec(b)?, dx, &tol).map_err(|e| format!("kernel2: {e}"))?
            }
            None => k1.clone(),
        };
        Ok([k1, k2])
    }

    pub fn profiles(&self) -> Result<[Profile; 2], String> {
        let i = &self.initial;
        match i.profile {
            ProfileFamily::Cosine => Ok([
                Profile::Cosine {
                    amplitude: i.amplitude[0],
                },
                Profile::Cosine {
                    amplitude: i.amplitude[1],
                },
            ]),
            ProfileFamily::Parabola => Ok([
                Profile::Parabola {
                    amplitude: i.amplitude[0],
                },
                Profile::Parabola {
                    amplitude: i.amplitude[1],
                },
            ]),
            ProfileFamily::Csv => {
                let paths = i
                    .paths
                    .as_ref()
                    .ok_or("initial.paths is required for profile = \"csv\"")?;
                let read = |p: &Path| -> Result<Profile, String> {
                    let text = std::fs::read_to_string(self.resolve(p)).map_err(|e| format!("{}: {e}", p.display()))?;
                    let mut pts = Vec::new();
                    for (n, line) in text.lines().enumerate() {
                        let line = line.trim();
                        if line.is_empty() || line.starts_with('#') {
                            continue;
                        }
                        let mut it = line.split(',').map(|s| s.trim().parse::<f64>());
                        match (it.next(), it.next()) {
                            (Some(Ok(x)), Some(Ok(u))) => pts.push((x, u)),
                            _ if n == 0 => continue,
                            _ => return Err(format!("{}:{}: expected x,u", p.display(), n + 1)),
                        }
                    }
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Ok(Profile::Samples(pts))
                };
                Ok([read(&paths[0])?, read(&paths[1])?])
            }
        }
    }

    /// Largest initial value over both profiles' samples or amplitudes.
    fn initial_max(&self, profiles: &[Profile; 2]) -> (f64, f64) {
        let m = |p: &Profile| match p {
            Profile::Cosine { amplitude } | Profile::Parabola { amplitude } => *amplitude,
            Profile::Samples(s) => s.iter().map(|q| q.1).fold(0.0, f64::max),
        };
        (m(&profiles[0]), m(&profiles[1]))
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            bad.push(format!(
                "schema_version = {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        };
        for i in 0..2 {
            positive(&format!("model.d[{i}]"), self.model.d[i]);
            positive(&format!("model.mu[{i}]"), self.model.mu[i]);
            positive(&format!("initial.amplitude[{i}]"), self.initial.amplitude[i]);
        }
        for i in 0..2 {
            positive(&format!("model.a{} (a[{i}])", i + 1), self.model.a[i]);
            positive(&format!("model.b{} (b[{i}])", i + 1), self.model.b[i]);
        }
        positive("grid.dx", self.grid.dx);
        if let Some(w) = self.grid.half_width {
            positive("grid.half_width", w);
        }
        positive("initial.h0", self.initial.h0);
        positive("solver.picard_tol", self.solver.picard_tol);
        positive("solver.t_final", self.solver.t_final);
        if let Some(dt) = self.solver.dt {
            positive("solver.dt", dt);
        }
        positive("classify.window", self.classify.window);
        positive("classify.vanish_tol", self.classify.vanish_tol);
        positive("classify.speed_tol", self.classify.speed_tol);
        positive("classify.range_tol", self.classify.range_tol);
        positive("eigen.tol", self.eigen.tol);
        positive("critical.tol", self.critical.tol);
        positive("critical.lambda_tol", self.critical.lambda_tol);
        positive("sweep.bracket[0]", self.sweep.bracket[0]);
        positive("sweep.bracket[1]", self.sweep.bracket[1]);
        positive("sweep.ratio_tol - 1", self.sweep.ratio_tol - 1.0);
        if self.solver.picard_max_iters == 0 {
            bad.push("solver.picard_max_iters must be positive".into());
        }
        if self.outputs.snapshot_every == 0 {
            bad.push("outputs.snapshot_every must be positive".into());
        }
        if self.sweep.bracket[0] >= self.sweep.bracket[1] {
            bad.push("sweep.bracket must be increasing".into());
        }
        if self.sweep.budget == 0 {
            bad.push("sweep.budget must be positive".into());
        }
        if self.asymptotics.n_iters == 0 {
            bad.push("asymptotics.n_iters must be positive".into());
        }
        if !(self.eigen.species == 1 || self.eigen.species == 2) {
            bad.push(format!("eigen.species must be 1 or 2, got {}", self.eigen.species));
        }
        if !(self.eigen.interval[0] < self.eigen.interval[1]) {
            bad.push("eigen.interval must satisfy a < b".into());
        }
        for (name, n) in [
            ("eigen.n_eig", self.eigen.n_eig),
            ("critical.n_eig", self.critical.n_eig),
        ] {
            if n < frontspread::spectral::MIN_N_EIG {
                bad.push(format!("{name} must be at least {}", frontspread::spectral::MIN_N_EIG));
            }
        }
        for block in std::iter::once(&self.kernel).chain(self.kernel2.as_ref()) {
            if let KernelBlock::Tabulated { path } = block {
                if !self.resolve(path).exists() {
                    bad.push(format!("kernel file {} does not exist", path.display()));
                }
            }
        }
        if let Some(paths) = &self.initial.paths {
            for p in paths {
                if !self.resolve(p).exists() {
                    bad.push(format!("initial profile file {} does not exist", p.display()));
                }
            }
        }
        for i in 0..2 {
            let c = self.model.c[i];
            if !(c >= 0.0 && c.is_finite()) {
                bad.push(format!("model.c{} (c[{i}]) must be nonnegative, got {c}", i + 1));
            }
        }
        let model_ok = !bad.iter().any(|b| b.starts_with("model."));
        let model = if model_ok {
            self.growth_model().map_err(|e| bad.push(e)).ok()
        } else {
            None
        };
        if !bad.iter().any(|b| b.starts_with("kernel file")) {
            if let Err(e) = self.kernels() {
                bad.push(e);
            }
        }
        let profiles = self.profiles().map_err(|e| bad.push(e)).ok();
        if let (Some(model), Some(profiles), Some(dt)) = (&model, &profiles, self.solver.dt) {
            let (m1, m2) = self.initial_max(profiles);
            let (a1, a2) = model.a_priori_bounds(m1, m2);
            let lambda = self.model.d[0].max(self.model.d[1]) + model.lipschitz_constant(a1, a2);
            let p = contraction_product(dt, lambda);
            if p > 0.5 {
                bad.push(format!(
                    "solver.dt = {dt} violates dt·Λ·exp(2Λ·dt) <= 1/2 (value {p:.6} with Λ = \
                     max(d) + L(A1, A2) = {lambda:.6}); use dt <= {:.6}",
                    max_dt(lambda)
                ));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[model]
type = "competition"
a = [1.0, 1.0]
b = [1.0, 1.0]
c = [0.5, 0.5]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.model.d, [1.0, 1.0]);
        assert_eq!(cfg.kernel, KernelBlock::Triangular { sigma: 1.0 });
        assert_eq!(cfg.solver.picard_tol, 1e-12);
        let echo = cfg.echo();
        assert!(echo.contains("picard_max_iters = 200"));
        let again = parse_config(&echo, Path::new(".")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\n[solver]\nt_finl = 3.0\n");
        let err = parse_config(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("t_finl"), "{err}");
    }

    #[test]
    fn every_violation_listed() {
        let text = MINIMAL.replace("b = [1.0, 1.0]", "b = [-1.0, 1.0]") + "[grid]\ndx = -0.1\n";
        let err = parse_config(&text, Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("grid.dx") && msg.contains("b1"), "{msg}");
    }

    #[test]
    fn dt_bound_cited() {
        let text = format!("{MINIMAL}\n[solver]\ndt = 0.5\n");
        let msg = parse_config(&text, Path::new(".")).unwrap_err().to_string();
        assert!(msg.contains("dt·Λ·exp(2Λ·dt) <= 1/2"), "{msg}");
    }
}
