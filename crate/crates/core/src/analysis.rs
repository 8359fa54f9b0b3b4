//! Long-time behaviour: spreading/vanishing classification, the sufficient
//! spreading criteria, μ-threshold brackets, and coexistence limits with the
//! monotone iteration schemes that produce them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::evolver::{EvolveError, Problem, Simulation, SolverConfig, StopReason, StopRule, Trajectory};
use crate::field::FieldState;
use crate::growth::{GrowthModel, Regime};

#[derive(Debug, Clone, Error)]
pub enum AnalysisError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("simulation failed at mu = {mu}: {source}")]
    Run { mu: f64, source: EvolveError },
    #[error(
        "mu sweep left inconclusive runs (last bracket [{}, {}]); increase t_final",
        partial.lo, partial.hi
    )]
    SweepUndetermined { partial: Box<MuBracket> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// Fraction of the run, counted from the end, that the rules look at.
    pub window: f64,
    pub vanish_tol: f64,
    pub speed_tol: f64,
    /// Range slack, as a fraction of `ℓ*`.
    pub range_tol: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            window: 0.1,
            vanish_tol: 1e-3,
            speed_tol: 1e-4,
            range_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub range: f64,
    pub max1: f64,
    pub max2: f64,
    pub gprime: f64,
    pub hprime: f64,
    /// Smallest of `h′` and `−g′` over the window.
    pub min_speed: f64,
    /// Largest of `h′` and `−g′` over the window.
    pub max_speed: f64,
    pub ell_star: Option<f64>,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
    pub notes: Vec<String>,
}

/// Spreading needs the range beyond `ℓ*` and both boundary speeds above
/// `speed_tol` throughout the final window. Vanishing needs both maxima below
/// `vanish_tol`, final speeds below `speed_tol` and range at most
/// `ℓ*(1 + range_tol)`.
pub fn classify(traj: &Trajectory, ell_star: Option<f64>, tol: &ClassifyTolerances) -> Classification {
    let window = traj.window(tol.window);
    let last = traj.last();
    let min_speed = window
        .iter()
        .map(|p| p.hprime.min(-p.gprime))
        .fold(f64::INFINITY, f64::min);
    let max_speed = window.iter().map(|p| p.hprime.max(-p.gprime)).fold(0.0, f64::max);
    let evidence = Evidence {
        range: last.h - last.g,
        max1: last.max1,
        max2: last.max2,
        gprime: last.gprime,
        hprime: last.hprime,
        min_speed,
        max_speed,
        ell_star,
        t_end: last.t,
    };
    let mut notes = Vec::new();
    if !traj.strictly_positive_kernels {
        notes.push(
            "kernels are compactly supported; the dichotomy is proved for kernels positive on \
             the whole line"
                .to_string(),
        );
    }
    let spreading = ell_star.is_none_or(|l| evidence.range > l) && min_speed > tol.speed_tol;
    let range_ok = match ell_star {
        Some(l) => evidence.range <= l * (1.0 + tol.range_tol),
        None => true,
    };
    let vanishing = evidence.max1 < tol.vanish_tol
        && evidence.max2 < tol.vanish_tol
        && evidence.hprime.max(-evidence.gprime) < tol.speed_tol
        && range_ok;
    let verdict = if spreading {
        Verdict::Spreading
    } else if vanishing {
        Verdict::Vanishing
    } else {
        notes.push(format!(
            "neither rule set holds at t = {}; extend t_final",
            evidence.t_end
        ));
        Verdict::Undetermined
    };
    Classification {
        verdict,
        evidence,
        notes,
    }
}

/// Stop rule that ends a run as soon as [`classify`] could decide it.
pub fn stop_rule(ell_star: Option<f64>, tol: &ClassifyTolerances) -> StopRule {
    StopRule {
        range_above: ell_star.map(|l| l * (1.0 + tol.range_tol)),
        max_below: Some(tol.vanish_tol),
        speed_below: Some(tol.speed_tol),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    MustSpread { reason: String },
    DependsOnMu { ell_star: f64 },
}

/// Sufficient conditions for spreading that hold for every `μ`.
pub fn criteria_check(
    model: &GrowthModel,
    d: [f64; 2],
    h0: f64,
    ell_star: Option<f64>,
) -> Result<Prediction, AnalysisError> {
    let p = model
        .params()
        .ok_or_else(|| AnalysisError::Unsupported("criteria need Lotka-Volterra parameters".into()))?;
    if p.a1 >= d[0] {
        return Ok(Prediction::MustSpread {
            reason: format!("a1 = {} >= d1 = {}", p.a1, d[0]),
        });
    }
    if p.a2 >= d[1] {
        return Ok(Prediction::MustSpread {
            reason: format!("a2 = {} >= d2 = {}", p.a2, d[1]),
        });
    }
    let l = ell_star
        .ok_or_else(|| AnalysisError::Precondition("a_i < d_i for both species but no critical length given".into()))?;
    if h0 >= 0.5 * l {
        Ok(Prediction::MustSpread {
            reason: format!("h0 = {h0} >= ell*/2 = {}", 0.5 * l),
        })
    } else {
        Ok(Prediction::DependsOnMu { ell_star: l })
    }
}

/// Inputs of a threshold sweep over total `μ = μ₁ + μ₂`, split evenly.
#[derive(Debug, Clone)]
pub struct MuSweep {
    pub problem: Problem,
    pub solver: SolverConfig,
    pub initial: FieldState,
    pub ell_star: f64,
    pub tolerances: ClassifyTolerances,
    pub bracket: (f64, f64),
    /// Number of refinement rounds.
    pub budget: usize,
    /// Stop once `μ_hi / μ_lo` is at most this.
    pub ratio_tol: f64,
    /// Runs per round; with `k` runs a round shrinks the log-width by `k + 1`.
    pub parallelism: usize,
}

impl MuSweep {
    pub fn new(problem: Problem, solver: SolverConfig, initial: FieldState, ell_star: f64) -> Self {
        MuSweep {
            problem,
            solver,
            initial,
            ell_star,
            tolerances: ClassifyTolerances::default(),
            bracket: (1e-3, 1e3),
            budget: 12,
            ratio_tol: 1.1,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRun {
    pub mu: f64,
    pub verdict: Verdict,
    pub t_final: f64,
    pub t_end: f64,
    pub range: f64,
    pub max1: f64,
    pub max2: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuBracket {
    /// Largest total `μ` observed to vanish.
    pub lo: f64,
    /// Smallest total `μ` observed to spread.
    pub hi: f64,
    pub rounds: usize,
    pub runs: Vec<MuRun>,
    /// Set when a vanishing run lies above a spreading one.
    pub order_violation: bool,
}

impl MuBracket {
    pub fn ratio(&self) -> f64 {
        self.hi / self.lo
    }
}

fn sweep_point(s: &MuSweep, mu: f64) -> Result<MuRun, AnalysisError> {
    let mut t_final = s.solver.t_final;
    let mut notes = Vec::new();
    for attempt in 0..2 {
        let mut problem = s.problem.clone();
        problem.mu = [0.5 * mu, 0.5 * mu];
        let mut solver = s.solver.clone();
        solver.t_final = t_final;
        solver.stop = stop_rule(Some(s.ell_star), &s.tolerances);
        let sim =
            Simulation::new(problem, solver, s.initial.clone()).map_err(|source| AnalysisError::Run { mu, source })?;
        let traj = match sim.run() {
            Ok(t) => t,
            Err(fail) => {
                let last = fail.partial.last();
                if matches!(fail.error, EvolveError::Margin { .. })
                    && last.h - last.g > s.ell_star * (1.0 + s.tolerances.range_tol)
                {
                    notes.push(format!("{}; range already beyond ell*", fail.error));
                    return Ok(MuRun {
                        mu,
                        verdict: Verdict::Spreading,
                        t_final,
                        t_end: last.t,
                        range: last.h - last.g,
                        max1: last.max1,
                        max2: last.max2,
                        notes,
                    });
                }
                return Err(AnalysisError::Run { mu, source: fail.error });
            }
        };
        let mut c = classify(&traj, Some(s.ell_star), &s.tolerances);
        if c.verdict == Verdict::Spreading && traj.stop == StopReason::RangeExceeded {
            c.notes.push("stopped once the range exceeded ell*".into());
        }
        if c.verdict != Verdict::Undetermined || attempt == 1 {
            notes.extend(c.notes);
            return Ok(MuRun {
                mu,
                verdict: c.verdict,
                t_final,
                t_end: c.evidence.t_end,
                range: c.evidence.range,
                max1: c.evidence.max1,
                max2: c.evidence.max2,
                notes,
            });
        }
        notes.push(format!(
            "undetermined at t_final = {t_final}, retried with twice the time"
        ));
        t_final *= 2.0;
    }
    unreachable!("the second attempt always returns")
}

fn run_points(s: &MuSweep, mus: &[f64]) -> Vec<Result<MuRun, AnalysisError>> {
    #[cfg(feature = "parallel")]
    {
        if mus.len() > 1 {
            return mus.par_iter().map(|&m| sweep_point(s, m)).collect();
        }
    }
    mus.iter().map(|&m| sweep_point(s, m)).collect()
}

/// Geometric bisection on total `μ`. Returns `[μ_lo, μ_hi]` with a vanishing
/// run at `μ_lo` and a spreading run at `μ_hi`.
pub fn mu_threshold(s: &MuSweep) -> Result<MuBracket, AnalysisError> {
    let (mut lo, mut hi) = s.bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(AnalysisError::Precondition(format!(
            "bracket [{lo}, {hi}] must satisfy 0 < lo < hi"
        )));
    }
    let mut out = MuBracket {
        lo,
        hi,
        rounds: 0,
        runs: Vec::new(),
        order_violation: false,
    };
    let ends = run_points(s, &[lo, hi]);
    for r in ends {
        out.runs.push(r?);
    }
    if out.runs[0].verdict != Verdict::Vanishing || out.runs[1].verdict != Verdict::Spreading {
        let v = (out.runs[0].verdict, out.runs[1].verdict);
        if v.0 == Verdict::Undetermined || v.1 == Verdict::Undetermined {
            return Err(AnalysisError::SweepUndetermined { partial: Box::new(out) });
        }
        return Err(AnalysisError::Precondition(format!(
            "bracket ends classify as {:?} and {:?}; need Vanishing below and Spreading above",
            v.0, v.1
        )));
    }
    let k = s.parallelism.max(1);
    for _ in 0..s.budget {
        if hi / lo <= s.ratio_tol {
            break;
        }
        let step = (hi / lo).ln() / (k + 1) as f64;
        let mus: Vec<f64> = (1..=k).map(|j| lo * (step * j as f64).exp()).collect();
        let results = run_points(s, &mus);
        out.rounds += 1;
        let mut undetermined = false;
        let mut new_lo = lo;
        let mut new_hi = hi;
        for r in results {
            let run = r?;
            match run.verdict {
                Verdict::Vanishing => {
                    if run.mu > new_lo && run.mu < new_hi {
                        new_lo = run.mu;
                    }
                }
                Verdict::Spreading => {
                    if run.mu < new_hi {
                        new_hi = run.mu;
                    }
                }
                Verdict::Undetermined => undetermined = true,
            }
            out.runs.push(run);
        }
        if out
            .runs
            .iter()
            .filter(|r| r.verdict == Verdict::Vanishing)
            .any(|r| r.mu > new_hi)
        {
            out.order_violation = true;
        }
        lo = new_lo;
        hi = new_hi;
        out.lo = lo;
        out.hi = hi;
        if undetermined {
            return Err(AnalysisError::SweepUndetermined { partial: Box::new(out) });
        }
    }
    Ok(out)
}

fn weak_params(model: &GrowthModel) -> Result<(Regime, crate::growth::LvParams), AnalysisError> {
    let p = *model
        .params()
        .ok_or_else(|| AnalysisError::Unsupported("long-time limits need Lotka-Volterra parameters".into()))?;
    match model.regime() {
        Regime::Other => Err(AnalysisError::Unsupported(
            "long-time limits are only known in the weak competition and weak predation regimes".into(),
        )),
        r => Ok((r, p)),
    }
}

/// Limit of `(u₁, u₂)` under spreading in the weak regimes.
pub fn coexistence_limit(model: &GrowthModel) -> Result<(f64, f64), AnalysisError> {
    let (regime, p) = weak_params(model)?;
    Ok(match regime {
        Regime::WeakCompetition => {
            let den = p.b1 * p.b2 - p.c1 * p.c2;
            ((p.a1 * p.b2 - p.a2 * p.c1) / den, (p.a2 * p.b1 - p.a1 * p.c2) / den)
        }
        _ => {
            let den = p.b1 * p.b2 + p.c1 * p.c2;
            ((p.a1 * p.b2 - p.a2 * p.c1) / den, (p.a1 * p.c2 + p.a2 * p.b1) / den)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IterationSequences {
    /// `Ā₁ = a₁/b₁`, `B̲ᵢ = (a₂ − c₂Āᵢ)/b₂`, `Āᵢ₊₁ = (a₁ − c₁B̲ᵢ)/b₁ = p + qĀᵢ`.
    Competition {
        upper_a: Vec<f64>,
        lower_b: Vec<f64>,
        p: f64,
        q: f64,
    },
    /// `B̄ᵢ = (a₂ + c₂Āᵢ)/b₂`, `A̲ᵢ = (a₁ − c₁B̄ᵢ)/b₁`, `B̲ᵢ = (a₂ + c₂A̲ᵢ)/b₂`,
    /// `Āᵢ₊₁ = (a₁ − c₁B̲ᵢ)/b₁`; both `B` sequences obey `Bᵢ₊₁ = a(1 − q) + q²Bᵢ`.
    Predation {
        upper_a: Vec<f64>,
        lower_a: Vec<f64>,
        upper_b: Vec<f64>,
        lower_b: Vec<f64>,
        a: f64,
        q: f64,
    },
}

impl IterationSequences {
    /// Final `(A, B)` values; the upper and lower sequences share these limits.
    pub fn limits(&self) -> (f64, f64) {
        match self {
            IterationSequences::Competition { upper_a, lower_b, .. } => {
                (*upper_a.last().unwrap(), *lower_b.last().unwrap())
            }
            IterationSequences::Predation { upper_a, upper_b, .. } => {
                (*upper_a.last().unwrap(), *upper_b.last().unwrap())
            }
        }
    }

    /// Checks the monotonicity pattern of every sequence: upper ones strictly
    /// decrease and lower ones strictly increase while they stay above the
    /// roundoff floor `eps`, and all terms are positive.
    pub fn monotone(&self, eps: f64) -> bool {
        let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0] || (w[0] - w[1]).abs() <= eps);
        let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0] || (w[0] - w[1]).abs() <= eps);
        let pos = |v: &[f64]| v.iter().all(|&x| x > 0.0);
        match self {
            IterationSequences::Competition { upper_a, lower_b, .. } => {
                dec(upper_a) && inc(lower_b) && pos(upper_a) && pos(lower_b)
            }
            IterationSequences::Predation {
                upper_a,
                lower_a,
                upper_b,
                lower_b,
                ..
            } => {
                dec(upper_a)
                    && inc(lower_a)
                    && dec(upper_b)
                    && inc(lower_b)
                    && [upper_a, lower_a, upper_b, lower_b].iter().all(|v| pos(v))
            }
        }
    }
}

/// The monotone bound sequences from the long-time limit argument.
pub fn iterate_bounds(model: &GrowthModel, n_iters: usize) -> Result<IterationSequences, AnalysisError> {
    if n_iters == 0 {
        return Err(AnalysisError::Precondition("n_iters must be at least 1".into()));
    }
    let (regime, p) = weak_params(model)?;
    let q = p.c1 * p.c2 / (p.b1 * p.b2);
    match regime {
        Regime::WeakCompetition => {
            let mut upper_a = vec![p.a1 / p.b1];
            let mut lower_b = Vec::with_capacity(n_iters);
            for i in 0..n_iters {
                let b = (p.a2 - p.c2 * upper_a[i]) / p.b2;
                lower_b.push(b);
                if i + 1 < n_iters {
                    upper_a.push((p.a1 - p.c1 * b) / p.b1);
                }
            }
            Ok(IterationSequences::Competition {
                upper_a,
                lower_b,
                p: p.a1 / p.b1 - p.a2 * p.c1 / (p.b1 * p.b2),
                q,
            })
        }
        _ => {
            let mut upper_a = vec![p.a1 / p.b1];
            let mut lower_a = Vec::with_capacity(n_iters);
            let mut upper_b = Vec::with_capacity(n_iters);
            let mut lower_b = Vec::with_capacity(n_iters);
            for i in 0..n_iters {
                let bu = (p.a2 + p.c2 * upper_a[i]) / p.b2;
                let al = (p.a1 - p.c1 * bu) / p.b1;
                let bl = (p.a2 + p.c2 * al) / p.b2;
                upper_b.push(bu);
                lower_a.push(al);
                lower_b.push(bl);
                if i + 1 < n_iters {
                    upper_a.push((p.a1 - p.c1 * bl) / p.b1);
                }
            }
            Ok(IterationSequences::Predation {
                upper_a,
                lower_a,
                upper_b,
                lower_b,
                a: (p.a2 * p.b1 + p.a1 * p.c2) / (p.b1 * p.b2),
                q,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeError {
    pub x: f64,
    /// `max |uᵢ − uᵢ*|` over the window.
    pub max1: f64,
    pub max2: f64,
    /// Window average of `|uᵢ − uᵢ*|`.
    pub mean1: f64,
    pub mean2: f64,
    /// Window averages of `uᵢ`.
    pub avg1: f64,
    pub avg2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub target: (f64, f64),
    pub snapshots: usize,
    pub probes: Vec<ProbeError>,
}

impl LimitReport {
    /// Largest window-averaged error relative to the target, over probes and species.
    pub fn worst_mean_relative(&self) -> f64 {
        self.probes
            .iter()
            .map(|p| (p.mean1 / self.target.0).max(p.mean2 / self.target.1))
            .fold(0.0, f64::max)
    }

    pub fn worst_max_relative(&self) -> f64 {
        self.probes
            .iter()
            .map(|p| (p.max1 / self.target.0).max(p.max2 / self.target.1))
            .fold(0.0, f64::max)
    }
}

/// Compares snapshot densities over the final window with the coexistence
/// limit at each probe point (default `{0, ±h₀}`).
pub fn verify_limit(
    traj: &Trajectory,
    classification: &Classification,
    model: &GrowthModel,
    window: f64,
    probes: Option<&[f64]>,
) -> Result<LimitReport, AnalysisError> {
    if classification.verdict != Verdict::Spreading {
        return Err(AnalysisError::Precondition(format!(
            "limit check needs a spreading run, got {:?}",
            classification.verdict
        )));
    }
    let target = coexistence_limit(model)?;
    let default = [0.0, -traj.h0, traj.h0];
    let xs = probes.unwrap_or(&default);
    let snaps: Vec<_> = traj.snapshots_in_window(window).collect();
    let Some(first) = snaps.first() else {
        return Err(AnalysisError::Precondition(
            "no snapshots in the final window; lower snapshot_every".into(),
        ));
    };
    for &x in xs {
        if x <= first.g || x >= first.h {
            return Err(AnalysisError::Precondition(format!(
                "probe {x} lies outside [{}, {}] at the window start",
                first.g, first.h
            )));
        }
    }
    let n = snaps.len() as f64;
    let probes = xs
        .iter()
        .map(|&x| {
            let mut e = ProbeError {
                x,
                max1: 0.0,
                max2: 0.0,
                mean1: 0.0,
                mean2: 0.0,
                avg1: 0.0,
                avg2: 0.0,
            };
            for s in &snaps {
                let u1 = s.value_at(0, &traj.grid, x);
                let u2 = s.value_at(1, &traj.grid, x);
                let (e1, e2) = ((u1 - target.0).abs(), (u2 - target.1).abs());
                e.max1 = e.max1.max(e1);
                e.max2 = e.max2.max(e2);
                e.mean1 += e1 / n;
                e.mean2 += e2 / n;
                e.avg1 += u1 / n;
                e.avg2 += u2 / n;
            }
            e
        })
        .collect();
    Ok(LimitReport {
        target,
        snapshots: snaps.len(),
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::LvParams;

    fn comp(c: (f64, f64)) -> GrowthModel {
        GrowthModel::competition(LvParams::new((1.0, 1.0), (1.0, 1.0), c)).unwrap()
    }

    fn pred() -> GrowthModel {
        GrowthModel::predator_prey(LvParams::new((1.0, 0.5), (1.0, 1.0), (0.5, 0.25))).unwrap()
    }

    #[test]
    fn limits() {
        let (u, v) = coexistence_limit(&comp((0.5, 0.5))).unwrap();
        assert!((u - 2.0 / 3.0).abs() < 1e-15 && (v - 2.0 / 3.0).abs() < 1e-15);
        let (u, v) = coexistence_limit(&pred()).unwrap();
        assert!((u - 0.75 / 1.125).abs() < 1e-15);
        assert!((v - 0.75 / 1.125).abs() < 1e-15);
        assert_eq!(coexistence_limit(&comp((0.0, 0.0))).unwrap(), (1.0, 1.0));
        assert!(coexistence_limit(&comp((2.0, 2.0))).is_err());
    }

    #[test]
    fn competition_sequences() {
        let s = iterate_bounds(&comp((0.5, 0.5)), 50).unwrap();
        let IterationSequences::Competition { upper_a, p, q, .. } = &s else {
            panic!()
        };
        assert_eq!((*p, *q), (0.5, 0.25));
        assert!((upper_a[49] - 2.0 / 3.0).abs() < 1e-12);
        for w in upper_a.windows(2) {
            assert!((w[1] - (p + q * w[0])).abs() < 1e-15);
        }
        assert!(s.monotone(1e-15));
        let one = iterate_bounds(&comp((0.5, 0.5)), 1).unwrap();
        let IterationSequences::Competition { upper_a, .. } = &one else {
            panic!()
        };
        assert_eq!(upper_a, &vec![1.0]);
    }

    #[test]
    fn predation_sequences() {
        let s = iterate_bounds(&pred(), 50).unwrap();
        let IterationSequences::Predation {
            upper_b, lower_b, a, q, ..
        } = &s
        else {
            panic!()
        };
        let lim = (1.0 * 0.25 + 0.5 * 1.0) / (1.0 + 0.125);
        assert!((upper_b[49] - lim).abs() < 1e-10);
        assert!((lower_b[49] - lim).abs() < 1e-10);
        for v in [upper_b, lower_b] {
            for w in v.windows(2) {
                assert!((w[1] - (a * (1.0 - q) + q * q * w[0])).abs() < 1e-14);
            }
        }
        assert!(s.monotone(1e-15));
    }

    #[test]
    fn criteria() {
        let m = GrowthModel::competition(LvParams::new((1.0, 0.5), (1.0, 1.0), (0.5, 0.5))).unwrap();
        assert!(matches!(
            criteria_check(&m, [1.0, 1.0], 0.1, None).unwrap(),
            Prediction::MustSpread { .. }
        ));
        let m = GrowthModel::competition(LvParams::new((0.5, 0.5), (1.0, 1.0), (0.5, 0.5))).unwrap();
        assert!(matches!(
            criteria_check(&m, [1.0, 1.0], 1.0, Some(2.0)).unwrap(),
            Prediction::MustSpread { .. }
        ));
        assert_eq!(
            criteria_check(&m, [1.0, 1.0], 0.6, Some(2.0)).unwrap(),
            Prediction::DependsOnMu { ell_star: 2.0 }
        );
        assert!(criteria_check(&m, [1.0, 1.0], 0.6, None).is_err());
    }
}
