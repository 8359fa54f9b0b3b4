//! Time stepping of the coupled density / free-boundary system.
//!
//! One step of size `dt` has two stages:
//!
//! 1. with `g`, `h` frozen, the densities solve the implicit update
//!    `uᵢ = uᵢⁿ + dt·[dᵢ(Jᵢ∗uᵢ) − dᵢuᵢ + fᵢ(u)]` by Picard iteration, the
//!    convolution being re-evaluated at every inner iterate;
//! 2. the boundaries move by `dt` times the outward fluxes of the updated
//!    densities, `h' = Σ μᵢ ∫ uᵢ Tᵢ(h−x)`, `g' = −Σ μᵢ ∫ uᵢ Tᵢ(x−g)`.
//!
//! Nodes swept by a boundary during a step enter with density zero and pick
//! up mass through the convolution term from the next step on.
//!
//! The step size must satisfy `dt·Λ·e^{2Λ·dt} ≤ 1/2` with
//! `Λ = max(d₁,d₂) + L(A₁,A₂)`, which keeps the inner map a contraction; the
//! default step is 0.9 of the largest admissible one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{domain_integral, flux_pair, ConvolutionMethod, Convolver, FieldState, Grid};
use crate::growth::GrowthModel;
use crate::kernel::Kernel;

/// Largest undershoot below zero that is clipped instead of reported.
pub const UNDERSHOOT_TOL: f64 = 1e-12;
/// Inner differences below this are too close to roundoff to give a ratio.
pub const RATIO_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("invalid initial data: {0}")]
    Initial(String),
    #[error(
        "Picard iteration did not converge at step {step} (t = {t}): difference {diff:e} \
         after {iters} iterations; reduce dt"
    )]
    Picard {
        step: usize,
        t: f64,
        iters: usize,
        diff: f64,
    },
    #[error(
        "boundary reached the ambient margin at step {step} (g = {g}, h = {h}, grid \
         [{x_min}, {x_max}]); enlarge the ambient interval or shorten t_final"
    )]
    Margin {
        step: usize,
        g: f64,
        h: f64,
        x_min: f64,
        x_max: f64,
    },
    #[error("density undershoot {value:e} at step {step}, node {node}")]
    Undershoot { step: usize, node: usize, value: f64 },
}

/// The model being solved: grid, reaction terms, kernels and rates.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub model: GrowthModel,
    pub kernels: [Kernel; 2],
    pub d: [f64; 2],
    pub mu: [f64; 2],
}

impl Problem {
    fn validate(&self) -> Result<(), EvolveError> {
        for (name, v) in [
            ("d1", self.d[0]),
            ("d2", self.d[1]),
            ("mu1", self.mu[0]),
            ("mu2", self.mu[1]),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EvolveError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Early termination once the outcome is settled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop when `h − g` exceeds this range.
    pub range_above: Option<f64>,
    /// Stop when both maxima are below `max_below` and both speeds below `speed_below`.
    pub max_below: Option<f64>,
    pub speed_below: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// `None` selects 0.9 of the contraction limit.
    pub dt: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub t_final: f64,
    pub snapshot_every: usize,
    pub convolution: ConvolutionMethod,
    pub stop: StopRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: None,
            picard_tol: 1e-12,
            picard_max_iters: 200,
            t_final: 10.0,
            snapshot_every: 100,
            convolution: ConvolutionMethod::Auto,
            stop: StopRule::default(),
        }
    }
}

/// Root of `x·e^{2x} = 1/2`.
pub fn contraction_limit() -> f64 {
    let mut x: f64 = 0.25;
    for _ in 0..50 {
        let e = (2.0 * x).exp();
        let f = x * e - 0.5;
        let df = e * (1.0 + 2.0 * x);
        x -= f / df;
    }
    x
}

/// Largest step allowed by the contraction condition for rate `Λ`.
pub fn max_dt(lambda: f64) -> f64 {
    contraction_limit() / lambda
}

pub fn default_dt(lambda: f64) -> f64 {
    0.9 * max_dt(lambda)
}

/// `dt·Λ·e^{2Λ·dt}`, which must not exceed 1/2.
pub fn contraction_product(dt: f64, lambda: f64) -> f64 {
    dt * lambda * (2.0 * lambda * dt).exp()
}

/// Initial profile given by an analytic family or tabulated samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `A·cos(πx/(2h₀))`.
    Cosine { amplitude: f64 },
    /// `A·(1 − x²/h₀²)`.
    Parabola { amplitude: f64 },
    /// Linear interpolation of `(x, u)` pairs, zero outside their span.
    Samples(Vec<(f64, f64)>),
}

impl Profile {
    pub fn eval(&self, x: f64, h0: f64) -> f64 {
        match self {
            Profile::Cosine { amplitude } => {
                if x.abs() >= h0 {
                    0.0
                } else {
                    amplitude * (std::f64::consts::FRAC_PI_2 * x / h0).cos()
                }
            }
            Profile::Parabola { amplitude } => {
                if x.abs() >= h0 {
                    0.0
                } else {
                    amplitude * (1.0 - (x / h0).powi(2))
                }
            }
            Profile::Samples(pts) => {
                if pts.is_empty() || x < pts[0].0 || x > pts[pts.len() - 1].0 {
                    return 0.0;
                }
                let k = pts.partition_point(|p| p.0 <= x);
                if k == 0 {
                    return pts[0].1;
                }
                if k >= pts.len() {
                    return pts[pts.len() - 1].1;
                }
                let (x0, y0) = pts[k - 1];
                let (x1, y1) = pts[k];
                if x1 == x0 {
                    y1
                } else {
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Value at `±h₀` as given by the family itself, for the endpoint check.
    fn endpoint(&self, x: f64, h0: f64) -> f64 {
        match self {
            Profile::Cosine { amplitude } => amplitude * (std::f64::consts::FRAC_PI_2 * x / h0).cos(),
            Profile::Parabola { amplitude } => amplitude * (1.0 - (x / h0).powi(2)),
            Profile::Samples(_) => self.eval(x, h0),
        }
    }
}

const ENDPOINT_TOL: f64 = 1e-10;

/// State at `t = 0` with `g = −h₀`, `h = h₀`. Each profile must be positive
/// at every node inside `(−h₀, h₀)` and vanish at `±h₀`.
pub fn initialize(
    grid: &Grid,
    h0: f64,
    u10: &dyn Fn(f64) -> f64,
    u20: &dyn Fn(f64) -> f64,
) -> Result<FieldState, EvolveError> {
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(EvolveError::Initial(format!("h0 must be positive, got {h0}")));
    }
    if grid.x_min() >= -h0 || grid.x_max() <= h0 {
        return Err(EvolveError::Initial(format!(
            "grid [{}, {}] does not contain [-{h0}, {h0}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let Some((lo, hi)) = grid.interior(-h0, h0) else {
        return Err(EvolveError::Initial(format!(
            "no grid node inside (-{h0}, {h0}); refine dx"
        )));
    };
    let mut u1 = vec![0.0; grid.len()];
    let mut u2 = vec![0.0; grid.len()];
    for (name, f, u) in [("u10", u10, &mut u1), ("u20", u20, &mut u2)] {
        for end in [-h0, h0] {
            let v = f(end);
            if v.abs() > ENDPOINT_TOL {
                return Err(EvolveError::Initial(format!(
                    "{name}({end}) = {v} but the profile must vanish at the boundary"
                )));
            }
        }
        for i in lo..=hi {
            let v = f(grid.x(i));
            if !(v > 0.0 && v.is_finite()) {
                return Err(EvolveError::Initial(format!(
                    "{name}({}) = {v} but the profile must be positive inside (-h0, h0)",
                    grid.x(i)
                )));
            }
            u[i] = v;
        }
    }
    Ok(FieldState {
        t: 0.0,
        g: -h0,
        h: h0,
        u1,
        u2,
    })
}

/// [`initialize`] from two [`Profile`]s.
pub fn initialize_profiles(grid: &Grid, h0: f64, p1: &Profile, p2: &Profile) -> Result<FieldState, EvolveError> {
    for (name, p) in [("u10", p1), ("u20", p2)] {
        for end in [-h0, h0] {
            let v = p.endpoint(end, h0);
            if v.abs() > ENDPOINT_TOL {
                return Err(EvolveError::Initial(format!(
                    "{name}({end}) = {v} but the profile must vanish at the boundary"
                )));
            }
        }
    }
    initialize(grid, h0, &|x| p1.eval(x, h0), &|x| p2.eval(x, h0))
}

/// Per-step record of the boundary motion and densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub gprime: f64,
    pub hprime: f64,
    pub mass1: f64,
    pub mass2: f64,
    pub max1: f64,
    pub max2: f64,
}

/// Inner-iteration diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub picard_iters: usize,
    /// Largest ratio of successive inner differences, when measurable.
    pub max_ratio: Option<f64>,
    /// Smallest density before clipping.
    pub min_before_clip: f64,
    pub gprime: f64,
    pub hprime: f64,
}

/// Densities on the occupied window at one recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub g: f64,
    pub h: f64,
    /// Grid index of `u1[0]` / `u2[0]`.
    pub start: usize,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl Snapshot {
    fn capture(step: usize, state: &FieldState, grid: &Grid) -> Self {
        let (start, end) = grid
            .interior(state.g, state.h)
            .map(|(lo, hi)| (lo, hi + 1))
            .unwrap_or((0, 0));
        Snapshot {
            step,
            t: state.t,
            g: state.g,
            h: state.h,
            start,
            u1: state.u1[start..end].to_vec(),
            u2: state.u2[start..end].to_vec(),
        }
    }

    /// Density of species `species` (0 or 1) at grid node `i`.
    pub fn value(&self, species: usize, i: usize) -> f64 {
        let u = if species == 0 { &self.u1 } else { &self.u2 };
        if i < self.start || i >= self.start + u.len() {
            0.0
        } else {
            u[i - self.start]
        }
    }

    /// Linear interpolation between nodes.
    pub fn value_at(&self, species: usize, grid: &Grid, x: f64) -> f64 {
        let pos = x / grid.dx() - grid.x(0) / grid.dx();
        let k = pos.floor().max(0.0) as usize;
        let frac = pos - k as f64;
        (1.0 - frac) * self.value(species, k) + frac * self.value(species, k + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    FinalTime,
    RangeExceeded,
    Extinct,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub dt: f64,
    pub h0: f64,
    pub mu: [f64; 2],
    /// A-priori bounds `(A₁, A₂)`.
    pub bounds: (f64, f64),
    pub points: Vec<TrajectoryPoint>,
    pub steps: Vec<StepReport>,
    pub snapshots: Vec<Snapshot>,
    pub stop: StopReason,
    /// Whether both kernels are positive on the whole line.
    pub strictly_positive_kernels: bool,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has its initial point")
    }

    pub fn t_end(&self) -> f64 {
        self.last().t
    }

    /// Smallest `h_{k+1} − h_k` and largest `g_{k+1} − g_k` over all steps.
    pub fn monotonicity(&self) -> (f64, f64) {
        let mut dh = f64::INFINITY;
        let mut dg = f64::NEG_INFINITY;
        for w in self.points.windows(2) {
            dh = dh.min(w[1].h - w[0].h);
            dg = dg.max(w[1].g - w[0].g);
        }
        (dh, dg)
    }

    /// Largest `(h − g) / (2h₀·e^{(μ₁A₁+μ₂A₂)t})` along the trajectory.
    pub fn growth_ratio(&self) -> f64 {
        let v = self.mu[0] * self.bounds.0 + self.mu[1] * self.bounds.1;
        self.points
            .iter()
            .map(|p| (p.h - p.g) / (2.0 * self.h0 * (v * p.t).exp()))
            .fold(0.0, f64::max)
    }

    /// Largest maxima `(max₁, max₂)` over all recorded times.
    pub fn peak(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), p| (a.max(p.max1), b.max(p.max2)))
    }

    /// Largest measured inner contraction ratio.
    pub fn max_contraction_ratio(&self) -> Option<f64> {
        self.steps
            .iter()
            .filter_map(|s| s.max_ratio)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    /// Points whose time lies in the final `fraction` of the run.
    pub fn window(&self, fraction: f64) -> &[TrajectoryPoint] {
        let t0 = self.t_end() * (1.0 - fraction);
        let k = self.points.partition_point(|p| p.t < t0);
        &self.points[k.min(self.points.len() - 1)..]
    }

    pub fn snapshots_in_window(&self, fraction: f64) -> impl Iterator<Item = &Snapshot> {
        let t0 = self.t_end() * (1.0 - fraction);
        self.snapshots.iter().filter(move |s| s.t >= t0)
    }
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: EvolveError,
    pub partial: Box<Trajectory>,
}

/// Stepper for one problem. Owns its state; a sweep creates one per run.
#[derive(Debug)]
pub struct Simulation {
    problem: Problem,
    config: SolverConfig,
    dt: f64,
    n_steps: usize,
    convolvers: [Convolver; 2],
    state: FieldState,
    step: usize,
    bounds: (f64, f64),
    lambda: f64,
    h0: f64,
}

impl Simulation {
    pub fn new(problem: Problem, config: SolverConfig, state: FieldState) -> Result<Self, EvolveError> {
        problem.validate()?;
        if state.u1.len() != problem.grid.len() || state.u2.len() != problem.grid.len() {
            return Err(EvolveError::Config("state does not match the grid".into()));
        }
        if !(config.t_final > 0.0) || config.picard_max_iters == 0 || !(config.picard_tol > 0.0) {
            return Err(EvolveError::Config(
                "t_final, picard_tol and picard_max_iters must be positive".into(),
            ));
        }
        let bounds = problem.model.a_priori_bounds(state.max1(), state.max2());
        let lip = problem.model.lipschitz_constant(bounds.0, bounds.1);
        let lambda = problem.d[0].max(problem.d[1]) + lip;
        let dt = match config.dt {
            Some(dt) => {
                let p = contraction_product(dt, lambda);
                if !(dt > 0.0) || p > 0.5 {
                    return Err(EvolveError::Config(format!(
                        "dt = {dt} violates dt·Λ·exp(2Λ·dt) <= 1/2 (value {p:.6}, Λ = {lambda}); \
                         largest admissible dt is {:.6}",
                        max_dt(lambda)
                    )));
                }
                dt
            }
            None => {
                let n = (config.t_final / default_dt(lambda)).ceil();
                config.t_final / n
            }
        };
        let n_steps = (config.t_final / dt - 1e-9).ceil() as usize;
        let dx = problem.grid.dx();
        let convolvers = [
            Convolver::new(&problem.kernels[0], dx),
            Convolver::new(&problem.kernels[1], dx),
        ];
        let h0 = 0.5 * state.range();
        Ok(Simulation {
            problem,
            config,
            dt,
            n_steps,
            convolvers,
            state,
            step: 0,
            bounds,
            lambda,
            h0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// `max(d₁,d₂) + L(A₁,A₂)`.
    pub fn rate(&self) -> f64 {
        self.lambda
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    fn check_margin(&self) -> Result<(), EvolveError> {
        let grid = &self.problem.grid;
        let reach = self.problem.kernels[0]
            .support_radius()
            .max(self.problem.kernels[1].support_radius());
        let s = &self.state;
        if s.h + reach >= grid.x_max() || s.g - reach <= grid.x_min() {
            return Err(EvolveError::Margin {
                step: self.step,
                g: s.g,
                h: s.h,
                x_min: grid.x_min(),
                x_max: grid.x_max(),
            });
        }
        Ok(())
    }

    /// Outward fluxes of the current densities: `(g', h')`.
    pub fn speeds(&self) -> (f64, f64) {
        let s = &self.state;
        let grid = &self.problem.grid;
        let Some((lo, w)) = grid.weights(s.g, s.h) else {
            return (0.0, 0.0);
        };
        let mut gp = 0.0;
        let mut hp = 0.0;
        for (sp, u) in [&s.u1, &s.u2].into_iter().enumerate() {
            let (l, r) = flux_pair(grid, &self.problem.kernels[sp], s.g, s.h, lo, &w, u);
            gp -= self.problem.mu[sp] * l;
            hp += self.problem.mu[sp] * r;
        }
        (gp, hp)
    }

    /// Advances the state by one step of size `dt`.
    pub fn step(&mut self) -> Result<StepReport, EvolveError> {
        self.check_margin()?;
        let grid = self.problem.grid;
        let dt = self.dt;
        let d = self.problem.d;
        let step_no = self.step + 1;
        let t_next = step_no as f64 * dt;

        let mut report = StepReport {
            step: step_no,
            picard_iters: 0,
            max_ratio: None,
            min_before_clip: 0.0,
            gprime: 0.0,
            hprime: 0.0,
        };

        if let Some((lo, w)) = grid.weights(self.state.g, self.state.h) {
            let n = w.len();
            let base = [self.state.u1[lo..lo + n].to_vec(), self.state.u2[lo..lo + n].to_vec()];
            let mut cur = base.clone();
            let mut next = [vec![0.0; n], vec![0.0; n]];
            let mut weighted = vec![0.0; n];
            let mut conv = [vec![0.0; n], vec![0.0; n]];
            let mut prev_diff = f64::NAN;
            let mut converged = false;
            for iter in 1..=self.config.picard_max_iters {
                for sp in 0..2 {
                    for j in 0..n {
                        weighted[j] = w[j] * cur[sp][j];
                    }
                    self.convolvers[sp].apply(&weighted, &mut conv[sp], self.config.convolution);
                }
                let mut diff: f64 = 0.0;
                for j in 0..n {
                    // Reaction evaluated at the nonnegative part of the iterate.
                    let (v1, v2) = (cur[0][j], cur[1][j]);
                    let (f1, f2) = self.problem.model.react(v1.max(0.0), v2.max(0.0));
                    let n1 = base[0][j] + dt * (d[0] * (conv[0][j] - v1) + f1);
                    let n2 = base[1][j] + dt * (d[1] * (conv[1][j] - v2) + f2);
                    diff = diff.max((n1 - v1).abs()).max((n2 - v2).abs());
                    next[0][j] = n1;
                    next[1][j] = n2;
                }
                std::mem::swap(&mut cur, &mut next);
                if prev_diff > RATIO_FLOOR {
                    let r = diff / prev_diff;
                    report.max_ratio = Some(report.max_ratio.map_or(r, |m: f64| m.max(r)));
                }
                prev_diff = diff;
                report.picard_iters = iter;
                if diff < self.config.picard_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(EvolveError::Picard {
                    step: step_no,
                    t: t_next,
                    iters: self.config.picard_max_iters,
                    diff: prev_diff,
                });
            }
            let mut min_val = f64::INFINITY;
            for sp in 0..2 {
                let target = if sp == 0 {
                    &mut self.state.u1
                } else {
                    &mut self.state.u2
                };
                for j in 0..n {
                    let mut v = cur[sp][j];
                    min_val = min_val.min(v);
                    if v < 0.0 {
                        if v < -UNDERSHOOT_TOL {
                            return Err(EvolveError::Undershoot {
                                step: step_no,
                                node: lo + j,
                                value: v,
                            });
                        }
                        v = 0.0;
                    }
                    target[lo + j] = v;
                }
            }
            report.min_before_clip = min_val;
        }

        let (gp, hp) = self.speeds();
        report.gprime = gp;
        report.hprime = hp;
        self.state.g += dt * gp;
        self.state.h += dt * hp;
        self.state.t = t_next;
        self.step = step_no;
        // Boundaries only expand, so nodes outside (g, h) were already zero.
        self.check_margin()?;
        Ok(report)
    }

    fn point(&self, gprime: f64, hprime: f64) -> TrajectoryPoint {
        let s = &self.state;
        let grid = &self.problem.grid;
        TrajectoryPoint {
            t: s.t,
            g: s.g,
            h: s.h,
            gprime,
            hprime,
            mass1: domain_integral(grid, s.g, s.h, &s.u1),
            mass2: domain_integral(grid, s.g, s.h, &s.u2),
            max1: s.max1(),
            max2: s.max2(),
        }
    }

    fn should_stop(&self, p: &TrajectoryPoint) -> Option<StopReason> {
        let rule = &self.config.stop;
        if rule.range_above.is_some_and(|r| p.h - p.g > r) {
            return Some(StopReason::RangeExceeded);
        }
        if let (Some(m), Some(v)) = (rule.max_below, rule.speed_below) {
            if p.max1 < m && p.max2 < m && p.hprime < v && -p.gprime < v {
                return Some(StopReason::Extinct);
            }
        }
        None
    }

    /// Steps to `t_final` (or an early stop), recording every step and a
    /// snapshot every `snapshot_every` steps plus the first and last state.
    pub fn run(mut self) -> Result<Trajectory, RunFailure> {
        let (gp, hp) = self.speeds();
        let mut traj = Trajectory {
            grid: self.problem.grid,
            dt: self.dt,
            h0: self.h0,
            mu: self.problem.mu,
            bounds: self.bounds,
            points: vec![self.point(gp, hp)],
            steps: Vec::with_capacity(self.n_steps),
            snapshots: vec![Snapshot::capture(0, &self.state, &self.problem.grid)],
            stop: StopReason::FinalTime,
            strictly_positive_kernels: self.problem.kernels.iter().all(Kernel::strictly_positive),
        };
        let every = self.config.snapshot_every.max(1);
        while self.step < self.n_steps {
            match self.step() {
                Ok(rep) => {
                    let p = self.point(rep.gprime, rep.hprime);
                    traj.points.push(p);
                    traj.steps.push(rep);
                    let stop = self.should_stop(&p);
                    let last = self.step == self.n_steps || stop.is_some();
                    if self.step.is_multiple_of(every) || last {
                        traj.snapshots
                            .push(Snapshot::capture(self.step, &self.state, &self.problem.grid));
                    }
                    if let Some(reason) = stop {
                        traj.stop = reason;
                        break;
                    }
                }
                Err(error) => {
                    return Err(RunFailure {
                        error,
                        partial: Box::new(traj),
                    })
                }
            }
        }
        Ok(traj)
    }
}

/// Largest ordering violations between a lower and an upper run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `max (u₁ − ū₁)₊` over common snapshot times and nodes.
    pub u1: f64,
    pub u2: f64,
    /// `max (ḡ − g)₊`, i.e. how far the lower run's left boundary lies outside.
    pub g: f64,
    /// `max (h − h̄)₊`.
    pub h: f64,
    pub times_compared: usize,
    pub snapshots_compared: usize,
}

impl ComparisonReport {
    pub fn worst(&self) -> f64 {
        self.u1.max(self.u2).max(self.g).max(self.h)
    }
}

/// Checks `u ≤ ū`, `g ≥ ḡ`, `h ≤ h̄` at every time both runs recorded.
pub fn compare_runs(lower: &Trajectory, upper: &Trajectory) -> Result<ComparisonReport, EvolveError> {
    if lower.grid != upper.grid {
        return Err(EvolveError::Config("runs use different grids".into()));
    }
    let same_t = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    let mut rep = ComparisonReport {
        u1: 0.0,
        u2: 0.0,
        g: 0.0,
        h: 0.0,
        times_compared: 0,
        snapshots_compared: 0,
    };
    let mut j = 0;
    for p in &lower.points {
        while j < upper.points.len() && upper.points[j].t < p.t && !same_t(upper.points[j].t, p.t) {
            j += 1;
        }
        if j < upper.points.len() && same_t(upper.points[j].t, p.t) {
            let q = &upper.points[j];
            rep.g = rep.g.max(q.g - p.g);
            rep.h = rep.h.max(p.h - q.h);
            rep.times_compared += 1;
        }
    }
    let mut j = 0;
    for s in &lower.snapshots {
        while j < upper.snapshots.len() && upper.snapshots[j].t < s.t && !same_t(upper.snapshots[j].t, s.t) {
            j += 1;
        }
        if j < upper.snapshots.len() && same_t(upper.snapshots[j].t, s.t) {
            let o = &upper.snapshots[j];
            for k in 0..s.u1.len() {
                let i = s.start + k;
                rep.u1 = rep.u1.max(s.u1[k] - o.value(0, i));
                rep.u2 = rep.u2.max(s.u2[k] - o.value(1, i));
            }
            rep.snapshots_compared += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::LvParams;
    use crate::kernel::KernelSpec;

    fn problem(grid: Grid) -> Problem {
        let k = Kernel::with_table_spacing(KernelSpec::triangular(1.0), Some(grid.dx()), &Default::default()).unwrap();
        Problem {
            grid,
            model: GrowthModel::competition(LvParams::new((1.0, 1.0), (1.0, 1.0), (0.5, 0.5))).unwrap(),
            kernels: [k.clone(), k],
            d: [1.0, 1.0],
            mu: [1.0, 1.0],
        }
    }

    #[test]
    fn contraction_root() {
        let x = contraction_limit();
        assert!((x * (2.0 * x).exp() - 0.5).abs() < 1e-15);
        assert!((contraction_product(default_dt(4.5), 4.5)) < 0.5);
    }

    #[test]
    fn initial_state() {
        let grid = Grid::symmetric(10.0, 0.05);
        let p = Profile::Cosine { amplitude: 0.8 };
        let s = initialize_profiles(&grid, 1.0, &p, &p).unwrap();
        assert_eq!((s.g, s.h, s.t), (-1.0, 1.0, 0.0));
        assert_eq!(s.max1(), 0.8);
        assert_eq!(s.max2(), 0.8);
        assert!(s.zero_outside(&grid));
    }

    #[test]
    fn initial_state_rejections() {
        let grid = Grid::symmetric(10.0, 0.05);
        let ok = |x: f64| 0.8 * (std::f64::consts::FRAC_PI_2 * x).cos();
        let bad_end = |x: f64| 0.1 + 0.7 * (1.0 - x * x);
        assert!(matches!(
            initialize(&grid, 1.0, &bad_end, &ok),
            Err(EvolveError::Initial(_))
        ));
        let zero = |_: f64| 0.0;
        assert!(initialize(&grid, 1.0, &ok, &zero).is_err());
    }

    #[test]
    fn zero_state_is_stationary() {
        let grid = Grid::symmetric(10.0, 0.05);
        let state = FieldState {
            t: 0.0,
            g: -1.0,
            h: 1.0,
            u1: vec![0.0; grid.len()],
            u2: vec![0.0; grid.len()],
        };
        let mut sim = Simulation::new(problem(grid), SolverConfig::default(), state.clone()).unwrap();
        let rep = sim.step().unwrap();
        assert_eq!(rep.gprime, 0.0);
        assert_eq!(rep.hprime, 0.0);
        let s = sim.state();
        assert_eq!((s.g, s.h), (state.g, state.h));
        assert_eq!(s.t, sim.dt());
        assert_eq!(s.u1, state.u1);
    }

    #[test]
    fn bad_dt_rejected() {
        let grid = Grid::symmetric(10.0, 0.05);
        let p = Profile::Cosine { amplitude: 0.8 };
        let s = initialize_profiles(&grid, 1.0, &p, &p).unwrap();
        let cfg = SolverConfig {
            dt: Some(0.5),
            ..Default::default()
        };
        let err = Simulation::new(problem(grid), cfg, s).unwrap_err();
        assert!(err.to_string().contains("dt·Λ·exp"), "{err}");
    }

    #[test]
    fn short_run_invariants() {
        let grid = Grid::symmetric(8.0, 0.05);
        let p = Profile::Cosine { amplitude: 0.8 };
        let s = initialize_profiles(&grid, 1.0, &p, &p).unwrap();
        let cfg = SolverConfig {
            t_final: 3.0,
            snapshot_every: 10,
            ..Default::default()
        };
        let traj = Simulation::new(problem(grid), cfg, s).unwrap().run().unwrap();
        let (dh, dg) = traj.monotonicity();
        assert!(dh >= 0.0 && dg <= 0.0);
        assert!(traj.growth_ratio() <= 1.0);
        let (m1, m2) = traj.peak();
        assert!(m1 <= traj.bounds.0 + 1e-8 && m2 <= traj.bounds.1 + 1e-8);
        assert!(traj.max_contraction_ratio().unwrap() <= 0.55);
        let last = traj.last();
        assert!((last.g + last.h).abs() < 1e-8);
        assert_eq!(traj.stop, StopReason::FinalTime);
    }

    #[test]
    fn margin_abort_keeps_partial() {
        let grid = Grid::symmetric(2.2, 0.05);
        let p = Profile::Cosine { amplitude: 0.8 };
        let s = initialize_profiles(&grid, 1.0, &p, &p).unwrap();
        let mut prob = problem(grid);
        prob.mu = [50.0, 50.0];
        let cfg = SolverConfig {
            t_final: 50.0,
            ..Default::default()
        };
        let fail = Simulation::new(prob, cfg, s).unwrap().run().unwrap_err();
        assert!(matches!(fail.error, EvolveError::Margin { .. }));
        assert!(!fail.partial.points.is_empty());
    }

    #[test]
    fn self_comparison_is_clean() {
        let grid = Grid::symmetric(6.0, 0.05);
        let p = Profile::Cosine { amplitude: 0.8 };
        let s = initialize_profiles(&grid, 1.0, &p, &p).unwrap();
        let cfg = SolverConfig {
            t_final: 1.0,
            snapshot_every: 1,
            ..Default::default()
        };
        let traj = Simulation::new(problem(grid), cfg, s).unwrap().run().unwrap();
        let rep = compare_runs(&traj, &traj).unwrap();
        assert_eq!(rep.worst(), 0.0);
        assert_eq!(rep.times_compared, traj.points.len());
        let other = Grid::symmetric(7.0, 0.05);
        let mut moved = traj.clone();
        moved.grid = other;
        assert!(compare_runs(&traj, &moved).is_err());
    }
}
