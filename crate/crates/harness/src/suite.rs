//! Self-verification suite.
//!
//! Each check runs a desk-scale experiment, compares the measured quantity
//! with its threshold and names the mathematical statement it exercises.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use frontspread::analysis::{
    classify, coexistence_limit, iterate_bounds, mu_threshold, stop_rule, verify_limit, ClassifyTolerances, MuSweep,
    Verdict,
};
use frontspread::evolver::{
    compare_runs, initialize_profiles, Problem, Profile, Simulation, SolverConfig, StopRule, Trajectory,
};
use frontspread::field::{Convolver, FieldState, Grid};
use frontspread::growth::{GrowthModel, LvParams};
use frontspread::kernel::{Kernel, KernelSpec};
use frontspread::spectral::{
    critical_length, ell_star, principal_eigenvalue_with, CriticalLengthOptions, EigenOptions, Potential,
    SpectralError, SpectralProblem,
};
use frontspread_oracle::{dense_lambda, scalar_logistic, upper_fixture, FixtureSpec};

use crate::config::{parse_config, Kind};
use crate::dispatch::{dispatch, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub title: String,
    pub anchor: String,
    pub passed: bool,
    pub measured: String,
    pub threshold: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>3} {}: measured {} vs {} ({:.1} s) -- {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.measured,
            self.threshold,
            self.seconds,
            self.anchor
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub level: Level,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

pub type Check = fn() -> CheckResult;

/// Checks run at each level; `quick` keeps to the cheap static ones.
pub fn checks(level: Level) -> Vec<Check> {
    let quick: Vec<Check> = vec![
        kernel_validation,
        growth_contract,
        spectral_oracle,
        critical_length_check,
        recurrences,
    ];
    match level {
        Level::Quick => quick,
        Level::Full => vec![
            kernel_validation,
            growth_contract,
            solution_bounds,
            boundary_monotonicity,
            picard_contraction,
            spectral_oracle,
            critical_length_check,
            dichotomy,
            mu_bracket,
            long_time_limits,
            recurrences,
            comparison,
            numerics_hygiene,
        ],
    }
}

/// Runs every check of `level`, reporting each result as it completes.
pub fn run(level: Level, mut on_result: impl FnMut(&CheckResult)) -> Report {
    let mut out = Vec::new();
    for c in checks(level) {
        let r = c();
        on_result(&r);
        out.push(r);
    }
    Report { level, checks: out }
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Timer(Instant::now())
    }

    fn finish(
        self,
        id: &str,
        title: &str,
        anchor: &str,
        passed: bool,
        measured: String,
        threshold: &str,
    ) -> CheckResult {
        CheckResult {
            id: id.into(),
            title: title.into(),
            anchor: anchor.into(),
            passed,
            measured,
            threshold: threshold.into(),
            seconds: self.0.elapsed().as_secs_f64(),
        }
    }
}

fn tri(dx: f64) -> Kernel {
    Kernel::with_table_spacing(KernelSpec::triangular(1.0), Some(dx), &Default::default()).expect("valid kernel")
}

fn lv(a: (f64, f64), b: (f64, f64), c: (f64, f64), predation: bool) -> GrowthModel {
    let p = LvParams::new(a, b, c);
    if predation {
        GrowthModel::predator_prey(p)
    } else {
        GrowthModel::competition(p)
    }
    .expect("valid parameters")
}

fn weak_competition() -> GrowthModel {
    lv((1.0, 1.0), (1.0, 1.0), (0.5, 0.5), false)
}

fn weak_predation() -> GrowthModel {
    lv((1.0, 0.5), (1.0, 1.0), (0.5, 0.25), true)
}

fn simulate(problem: Problem, state: FieldState, cfg: SolverConfig) -> Result<Trajectory, String> {
    Simulation::new(problem, cfg, state)
        .map_err(|e| e.to_string())?
        .run()
        .map_err(|e| e.to_string())
}

pub fn kernel_validation() -> CheckResult {
    let t = Timer::start();
    let specs = [
        KernelSpec::triangular(1.0),
        KernelSpec::triangular(0.3),
        KernelSpec::gaussian(1.0, 8.0),
        KernelSpec::gaussian(0.5, 6.0),
    ];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for s in specs {
        let k = Kernel::new(s).expect("valid kernel");
        ok &= k.report().passed();
        worst = worst.max((k.report().mass - 1.0).abs());
        for i in 0..=40 {
            let z = k.support_radius() * i as f64 / 40.0;
            worst = worst.max((k.tail_mass(z) + k.tail_mass(-z) - 1.0).abs());
        }
        worst = worst.max((k.tail_mass(0.0) - 0.5).abs());
    }
    t.finish(
        "K",
        "kernel validation",
        "J continuous, even, nonnegative, J(0) > 0, unit mass; T(z) + T(-z) = 1",
        ok && worst <= 1e-8,
        format!("{worst:.3e}"),
        "<= 1e-8",
    )
}

pub fn growth_contract() -> CheckResult {
    let t = Timer::start();
    let mut failures = Vec::new();
    for m in [
        weak_competition(),
        weak_predation(),
        lv((0.5, 0.5), (1.0, 1.0), (0.5, 0.5), false),
    ] {
        let (a1, a2) = m.a_priori_bounds(2.0, 2.0);
        if let Err(e) = m.check_contract(a1, a2, 41) {
            failures.push(e.to_string());
        }
    }
    t.finish(
        "G",
        "growth contract",
        "f1(0,u2) = f2(u1,0) = 0, f1 <= r u1, f1 < 0 above k, f2 < 0 above Theta(u1)",
        failures.is_empty(),
        format!("{} violations", failures.len()),
        "0 violations",
    )
}

/// Random Lotka-Volterra problems on generously sized grids.
fn random_runs() -> Vec<Result<Trajectory, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let dx = 0.05;
    (0..20)
        .map(|_| {
            let predation = rng.gen_bool(0.5);
            let mut r = |lo: f64, hi: f64| rng.gen_range(lo..hi);
            let a = (r(0.2, 1.5), r(0.2, 1.5));
            let b = (r(0.5, 1.5), r(0.5, 1.5));
            let c = (r(0.0, 0.8), r(0.0, 0.8));
            let d = [r(0.3, 1.5), r(0.3, 1.5)];
            let mu = [r(0.1, 2.0), r(0.1, 2.0)];
            let amp = [r(0.1, 2.0), r(0.1, 2.0)];
            let h0 = r(0.5, 2.0);
            let spec = if r(0.0, 1.0) < 0.5 {
                KernelSpec::triangular(r(0.5, 1.5))
            } else {
                KernelSpec::gaussian(r(0.3, 0.8), 6.0)
            };
            let parabola = r(0.0, 1.0) < 0.5;
            let model = lv(a, b, c, predation);
            let k = Kernel::with_table_spacing(spec, Some(dx), &Default::default()).expect("valid kernel");
            let prof = |amplitude: f64| {
                if parabola {
                    Profile::Parabola { amplitude }
                } else {
                    Profile::Cosine { amplitude }
                }
            };
            let t_final = 4.0;
            let (a1, a2) = model.a_priori_bounds(amp[0], amp[1]);
            let reach = k.support_radius();
            let width = h0 + (mu[0] * a1 + mu[1] * a2) * 0.5 * reach * t_final + reach + 1.0;
            let grid = Grid::symmetric(width, dx);
            let state = initialize_profiles(&grid, h0, &prof(amp[0]), &prof(amp[1])).map_err(|e| e.to_string())?;
            let problem = Problem {
                grid,
                model,
                kernels: [k.clone(), k],
                d,
                mu,
            };
            let cfg = SolverConfig {
                t_final,
                snapshot_every: 1,
                ..Default::default()
            };
            simulate(problem, state, cfg)
        })
        .collect()
}

pub fn solution_bounds() -> CheckResult {
    let t = Timer::start();
    let mut worst = f64::NEG_INFINITY;
    let mut errors = 0;
    for r in random_runs() {
        match r {
            Ok(tr) => {
                let (m1, m2) = tr.peak();
                worst = worst.max(m1 - tr.bounds.0).max(m2 - tr.bounds.1);
            }
            Err(_) => errors += 1,
        }
    }
    t.finish(
        "1",
        "solution bounds on 20 random configs",
        "0 < u1 <= A1 = max{|u10|, k}, 0 < u2 <= A2 = max{|u20|, Theta(A1)}",
        errors == 0 && worst <= 1e-8,
        format!("max(u - A) = {worst:.3e}, {errors} failed runs"),
        "<= 1e-8",
    )
}

pub fn boundary_monotonicity() -> CheckResult {
    let t = Timer::start();
    let mut min_dh = f64::INFINITY;
    let mut max_dg = f64::NEG_INFINITY;
    let mut ratio: f64 = 0.0;
    let mut errors = 0;
    for r in random_runs() {
        match r {
            Ok(tr) => {
                let (dh, dg) = tr.monotonicity();
                min_dh = min_dh.min(dh);
                max_dg = max_dg.max(dg);
                ratio = ratio.max(tr.growth_ratio());
            }
            Err(_) => errors += 1,
        }
    }
    t.finish(
        "2",
        "boundary monotonicity and growth bound",
        "h' >= 0 >= g', h - g <= 2 h0 exp((mu1 A1 + mu2 A2) t)",
        errors == 0 && min_dh >= 0.0 && max_dg <= 0.0 && ratio <= 1.01,
        format!("min dh = {min_dh:.3e}, max dg = {max_dg:.3e}, ratio = {ratio:.4}"),
        "dh >= 0, dg <= 0, ratio <= 1.01",
    )
}

pub fn picard_contraction() -> CheckResult {
    let t = Timer::start();
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    let mut runs = random_runs();
    let dx = 0.05;
    let k = tri(dx);
    for (model, d) in [(weak_competition(), [1.0, 1.0]), (weak_predation(), [1.0, 0.7])] {
        let grid = Grid::symmetric(20.0, dx);
        let p = Profile::Cosine { amplitude: 0.5 };
        let state = initialize_profiles(&grid, 2.0, &p, &p).expect("valid profile");
        let problem = Problem {
            grid,
            model,
            kernels: [k.clone(), k.clone()],
            d,
            mu: [1.0, 1.0],
        };
        let cfg = SolverConfig {
            t_final: 20.0,
            snapshot_every: usize::MAX,
            ..Default::default()
        };
        runs.push(simulate(problem, state, cfg));
    }
    for r in runs {
        match r.map(|tr| tr.max_contraction_ratio()) {
            Ok(Some(q)) => worst = worst.max(q),
            Ok(None) => {}
            Err(_) => errors += 1,
        }
    }
    t.finish(
        "3",
        "Picard contraction at the default step",
        "dt L exp(2 L dt) <= 1/2 makes the frozen-boundary map a contraction",
        errors == 0 && worst <= 0.55,
        format!("max ratio = {worst:.4}"),
        "<= 0.55",
    )
}

pub fn spectral_oracle() -> CheckResult {
    let t = Timer::start();
    let mut rng = ChaCha8Rng::seed_from_u64(7_310);
    let opts = EigenOptions {
        tol: 1e-12,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut bound_ok = true;
    let mut mono_ok = true;
    for _ in 0..50 {
        let d = rng.gen_range(0.2..2.0);
        let len = rng.gen_range(0.2..6.0);
        let a = rng.gen_range(-2.0..2.0);
        let n: usize = rng.gen_range(128..=256);
        let kernel = if rng.gen_bool(0.5) {
            Kernel::new(KernelSpec::triangular(rng.gen_range(0.3..1.5)))
        } else {
            Kernel::new(KernelSpec::gaussian(rng.gen_range(0.2..1.0), 6.0))
        }
        .expect("valid kernel");
        let theta = if rng.gen_bool(0.5) {
            Potential::Constant(rng.gen_range(-1.0..1.0))
        } else {
            let pts: Vec<(f64, f64)> = (0..5)
                .map(|i| (a + len * i as f64 / 4.0, rng.gen_range(-1.0..1.0)))
                .collect();
            Potential::Sampled(pts)
        };
        let p = SpectralProblem::new(d, kernel.clone(), (a, a + len), theta.clone(), n).expect("valid problem");
        let th = p.theta_values();
        let e = match principal_eigenvalue_with(&p, &opts) {
            Ok(e) => e,
            Err(_) => {
                worst = f64::INFINITY;
                continue;
            }
        };
        let dense = dense_lambda(d, &kernel, a, a + len, &th);
        worst = worst.max((e.lambda - dense).abs());
        let (tmin, tmax) = th
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        bound_ok &= e.lambda >= tmin - d - 1e-12 && e.lambda <= tmax + 1e-12;

        let shift = rng.gen_range(0.01..0.3);
        let raised = match &theta {
            Potential::Constant(c) => Potential::Constant(c + shift),
            Potential::Sampled(s) => Potential::Sampled(s.iter().map(|&(x, v)| (x, v + shift)).collect()),
        };
        let up = SpectralProblem::new(d, kernel.clone(), (a, a + len), raised, n).expect("valid problem");
        // The sub-interval reuses the outer nodes so both discretizations nest.
        let m = (rng.gen_range(0.5..0.9) * (n - 1) as f64).round() as usize;
        let inner_len = len * m as f64 / (n - 1) as f64;
        let inner = SpectralProblem::new(d, kernel.clone(), (a, a + inner_len), theta, m + 1).expect("valid problem");
        match (
            principal_eigenvalue_with(&up, &opts),
            principal_eigenvalue_with(&inner, &opts),
        ) {
            (Ok(u), Ok(i)) => mono_ok &= u.lambda > e.lambda && i.lambda < e.lambda,
            _ => mono_ok = false,
        }
    }
    t.finish(
        "4",
        "principal eigenvalue vs dense eigendecomposition",
        "lambda_p in [min theta - d, max theta], strictly increasing in theta and in the interval",
        worst <= 1e-8 && bound_ok && mono_ok,
        format!("max |diff| = {worst:.3e}, bounds {bound_ok}, monotone {mono_ok}"),
        "<= 1e-8",
    )
}

pub fn critical_length_check() -> CheckResult {
    let t = Timer::start();
    let k = Kernel::new(KernelSpec::triangular(1.0)).expect("valid kernel");
    let base = CriticalLengthOptions::default();
    let doubled = CriticalLengthOptions {
        n_eig: 2 * base.n_eig,
        ..base
    };
    let (l1, l2) = match (
        critical_length(1.0, 0.5, &k, &base),
        critical_length(1.0, 0.5, &k, &doubled),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        _ => (f64::NAN, f64::NAN),
    };
    let lambda = SpectralProblem::on_length(1.0, k.clone(), l1, 0.5)
        .ok()
        .and_then(|p| principal_eigenvalue_with(&p, &base.eigen).ok())
        .map_or(f64::INFINITY, |e| e.lambda);
    let always = [(1.0, 1.0), (1.0, 1.5), (0.4, 0.7)].iter().all(|&(d, a)| {
        matches!(
            critical_length(d, a, &k, &base),
            Err(SpectralError::AlwaysPositive { .. })
        )
    });
    t.finish(
        "5",
        "critical length for d = 1, a = 0.5",
        "lambda_p vanishes at l1; a >= d forces h_inf - g_inf = infinity",
        lambda.abs() <= 1e-6 && (l1 - l2).abs() <= 1e-3 && always,
        format!(
            "l1 = {l1:.9}, |lambda| = {:.3e}, doubling shift = {:.3e}, ALWAYS_POSITIVE {always}",
            lambda.abs(),
            (l1 - l2).abs()
        ),
        "|lambda| <= 1e-6, shift <= 1e-3",
    )
}

/// Case geometry for the dichotomy checks: `a = (0.5, 0.5)`, `d = 1`.
struct Geometry {
    model: GrowthModel,
    kernel: Kernel,
    grid: Grid,
    ell: f64,
}

fn geometry() -> Geometry {
    let dx = 0.01;
    let kernel = tri(dx);
    let model = lv((0.5, 0.5), (1.0, 1.0), (0.5, 0.5), false);
    let ell = ell_star(&model, [1.0, 1.0], [&kernel, &kernel], &Default::default())
        .expect("finite critical length")
        .value;
    Geometry {
        model,
        kernel,
        grid: Grid::symmetric(12.0, dx),
        ell,
    }
}

impl Geometry {
    fn problem(&self, mu_total: f64) -> Problem {
        Problem {
            grid: self.grid,
            model: self.model.clone(),
            kernels: [self.kernel.clone(), self.kernel.clone()],
            d: [1.0, 1.0],
            mu: [0.5 * mu_total, 0.5 * mu_total],
        }
    }

    fn initial(&self, h0: f64) -> FieldState {
        let p = Profile::Cosine { amplitude: 0.5 };
        initialize_profiles(&self.grid, h0, &p, &p).expect("valid profile")
    }

    fn classify(&self, mu_total: f64, h0: f64, t_final: f64, early: bool) -> Option<(Verdict, f64, f64)> {
        let tol = ClassifyTolerances::default();
        let cfg = SolverConfig {
            t_final,
            snapshot_every: usize::MAX,
            stop: if early {
                stop_rule(Some(self.ell), &tol)
            } else {
                StopRule::default()
            },
            ..Default::default()
        };
        let tr = simulate(self.problem(mu_total), self.initial(h0), cfg).ok()?;
        let c = classify(&tr, Some(self.ell), &tol);
        Some((c.verdict, c.evidence.range, c.evidence.max1.max(c.evidence.max2)))
    }
}

pub fn dichotomy() -> CheckResult {
    let t = Timer::start();
    let tol = ClassifyTolerances::default();
    // (i) a1 = d1: no critical length.
    let dx = 0.05;
    let k = tri(dx);
    let grid = Grid::symmetric(30.0, dx);
    let p = Profile::Cosine { amplitude: 0.5 };
    let case1 = simulate(
        Problem {
            grid,
            model: lv((1.0, 0.5), (1.0, 1.0), (0.5, 0.5), false),
            kernels: [k.clone(), k],
            d: [1.0, 1.0],
            mu: [1.0, 1.0],
        },
        initialize_profiles(&grid, 1.0, &p, &p).expect("valid profile"),
        SolverConfig {
            t_final: 30.0,
            snapshot_every: usize::MAX,
            ..Default::default()
        },
    )
    .map(|tr| classify(&tr, None, &tol).verdict);
    let ok1 = matches!(case1, Ok(Verdict::Spreading));

    let g = geometry();
    let case2 = g.classify(2.0, 0.6 * g.ell, 30.0, false);
    let ok2 = matches!(case2, Some((Verdict::Spreading, ..)));
    let case3 = g.classify(1e-3, 0.3 * g.ell, 100.0, false);
    let ok3 = matches!(case3, Some((Verdict::Vanishing, range, m)) if range <= 1.05 * g.ell && m < 1e-3);
    let case4 = g.classify(1e3, 0.3 * g.ell, 50.0, true);
    let ok4 = matches!(case4, Some((Verdict::Spreading, ..)));
    let (r3, m3) = case3.map_or((f64::NAN, f64::NAN), |c| (c.1, c.2));
    t.finish(
        "6",
        "spreading-vanishing criteria",
        "a_i >= d_i or h0 >= l*/2 spreads; small mu vanishes with h_inf - g_inf <= l*; large mu spreads",
        ok1 && ok2 && ok3 && ok4,
        format!(
            "(i) {:?} (ii) {:?} (iii) {:?} range/l* = {:.4} max = {m3:.2e} (iv) {:?}",
            case1.ok(),
            case2.map(|c| c.0),
            case3.map(|c| c.0),
            r3 / g.ell,
            case4.map(|c| c.0)
        ),
        "S, S, V with range <= 1.05 l* and max < 1e-3, S",
    )
}

pub fn mu_bracket() -> CheckResult {
    let t = Timer::start();
    let g = geometry();
    let cfg = SolverConfig {
        t_final: 100.0,
        snapshot_every: usize::MAX,
        ..Default::default()
    };
    let mut s = MuSweep::new(g.problem(1.0), cfg, g.initial(0.3 * g.ell), g.ell);
    s.budget = 12;
    let (passed, measured) = match mu_threshold(&s) {
        Ok(b) => {
            let verdict = |mu: f64| b.runs.iter().find(|r| r.mu == mu).map(|r| r.verdict);
            let ends = verdict(b.lo) == Some(Verdict::Vanishing) && verdict(b.hi) == Some(Verdict::Spreading);
            (
                b.lo < b.hi && ends && b.ratio() <= 2.0 && b.rounds <= 12 && !b.order_violation,
                format!(
                    "[{:.5}, {:.5}] ratio {:.4} in {} rounds, endpoints {ends}",
                    b.lo,
                    b.hi,
                    b.ratio(),
                    b.rounds
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    t.finish(
        "7",
        "mu threshold bracket",
        "vanishing for mu <= mu*, spreading for mu > mu*",
        passed,
        measured,
        "ratio <= 2 within 12 rounds",
    )
}

pub fn long_time_limits() -> CheckResult {
    let t = Timer::start();
    let dx = 0.05;
    let k = tri(dx);
    let grid = Grid::symmetric(60.0, dx);
    let p = Profile::Cosine { amplitude: 0.5 };
    let tol = ClassifyTolerances::default();
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, model) in [("competition", weak_competition()), ("predation", weak_predation())] {
        let state = initialize_profiles(&grid, 2.0, &p, &p).expect("valid profile");
        let problem = Problem {
            grid,
            model: model.clone(),
            kernels: [k.clone(), k.clone()],
            d: [1.0, 1.0],
            mu: [1.0, 1.0],
        };
        let cfg = SolverConfig {
            t_final: 200.0,
            snapshot_every: 10,
            ..Default::default()
        };
        let rel = simulate(problem, state, cfg).and_then(|tr| {
            let c = classify(&tr, None, &tol);
            verify_limit(&tr, &c, &model, tol.window, Some(&[0.0]))
                .map(|r| r.worst_mean_relative())
                .map_err(|e| e.to_string())
        });
        match rel {
            Ok(e) => {
                passed &= e < 0.02;
                parts.push(format!("{name} {e:.3e}"));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    t.finish(
        "8",
        "long-time limits at x = 0, final 10% window",
        "spreading solutions converge to the coexistence state locally uniformly",
        passed,
        parts.join(", "),
        "relative < 0.02",
    )
}

pub fn recurrences() -> CheckResult {
    let t = Timer::start();
    let mut worst: f64 = 0.0;
    let mut mono = true;
    for m in [
        weak_competition(),
        weak_predation(),
        lv((0.9, 0.6), (1.2, 0.8), (0.3, 0.7), true),
    ] {
        match (iterate_bounds(&m, 100), coexistence_limit(&m)) {
            (Ok(seq), Ok(lim)) => {
                let (a, b) = seq.limits();
                worst = worst.max((a - lim.0).abs()).max((b - lim.1).abs());
                mono &= seq.monotone(1e-14);
            }
            _ => worst = f64::INFINITY,
        }
    }
    t.finish(
        "9",
        "bound recurrences",
        "0 < A_{i+1} < A_i and B_i increasing, both converging to the coexistence state",
        worst <= 1e-10 && mono,
        format!("max |limit diff| = {worst:.3e}, monotone {mono}"),
        "<= 1e-10",
    )
}

pub fn comparison() -> CheckResult {
    let t = Timer::start();
    let tol = ClassifyTolerances::default();
    // Upper-solution fixture around a vanishing run.
    let g = geometry();
    let (h0, h1) = (0.3 * g.ell, 0.4 * g.ell);
    let grid = Grid::symmetric(4.0, g.grid.dx());
    let p = Profile::Cosine { amplitude: 0.5 };
    let state = initialize_profiles(&grid, h0, &p, &p).expect("valid profile");
    let spec = |mu: f64, dt: f64, n: usize| FixtureSpec {
        grid,
        kernels: [&g.kernel, &g.kernel],
        d: [1.0, 1.0],
        a: [0.5, 0.5],
        mu_total: mu,
        h0,
        h1,
        u0: [&state.u1, &state.u2],
        dt,
        n_steps: n,
        snapshot_every: 10,
        tol: 1e-13,
    };
    let mu = 0.5 * upper_fixture(&spec(1.0, 0.05, 1)).mu_bound;
    let mut problem = g.problem(mu);
    problem.grid = grid;
    let cfg = SolverConfig {
        t_final: 40.0,
        snapshot_every: 10,
        ..Default::default()
    };
    let fixture_worst = Simulation::new(problem, cfg, state.clone())
        .ok()
        .and_then(|sim| {
            let (dt, n) = (sim.dt(), sim.n_steps());
            let tr = sim.run().ok()?;
            let f = upper_fixture(&spec(mu, dt, n));
            let rep = compare_runs(&tr, &f.trajectory).ok()?;
            let vanishes = classify(&tr, Some(g.ell), &tol).verdict == Verdict::Vanishing;
            (f.envelope_excess <= 0.0 && vanishes).then(|| rep.worst())
        })
        .unwrap_or(f64::INFINITY);

    // Second species absent: the system reduces to the scalar problem.
    let dx = 0.02;
    let grid = Grid::symmetric(8.0, dx);
    let k = tri(dx);
    let mut state = initialize_profiles(&grid, 1.0, &p, &p).expect("valid profile");
    state.u2.iter_mut().for_each(|v| *v = 0.0);
    let problem = Problem {
        grid,
        model: lv((0.8, 0.6), (1.0, 1.0), (0.0, 0.0), false),
        kernels: [k.clone(), k.clone()],
        d: [1.0, 1.0],
        mu: [2.0, 2.0],
    };
    let cfg = SolverConfig {
        t_final: 4.0,
        snapshot_every: 1,
        ..Default::default()
    };
    let scalar_worst = Simulation::new(problem, cfg, state.clone())
        .ok()
        .and_then(|sim| {
            let (dt, n) = (sim.dt(), sim.n_steps());
            let tr = sim.run().ok()?;
            let s = scalar_logistic(&grid, &k, (1.0, 0.8, 1.0, 2.0), 1.0, &state.u1, dt, n, 1e-13);
            let mut worst: f64 = 0.0;
            for (snap, pt) in tr.snapshots.iter().zip(&tr.points) {
                let j = snap.step;
                worst = worst.max((pt.h - s.h[j]).abs()).max((pt.g - s.g[j]).abs());
                for i in 0..grid.len() {
                    worst = worst.max((snap.value(0, i) - s.u[j][i]).abs());
                }
            }
            Some(worst)
        })
        .unwrap_or(f64::INFINITY);
    t.finish(
        "10",
        "comparison principle",
        "u_i <= upper solution and [g, h] inside [-r, r]; scalar reduction when u2 = 0",
        fixture_worst <= 1e-6 && scalar_worst <= 1e-10,
        format!("upper violation {fixture_worst:.3e}, scalar sup diff {scalar_worst:.3e}"),
        "<= 1e-6, <= 1e-10",
    )
}

/// Final right boundary of the smooth benchmark.
fn benchmark_h(dx: f64, dt: f64) -> f64 {
    let t_final = 2.0;
    let grid = Grid::symmetric(9.0, dx);
    let k = tri(dx);
    let p = Profile::Cosine { amplitude: 0.5 };
    let state = initialize_profiles(&grid, 2.0, &p, &p).expect("valid profile");
    let problem = Problem {
        grid,
        model: weak_competition(),
        kernels: [k.clone(), k],
        d: [1.0, 1.0],
        mu: [1.0, 1.0],
    };
    let cfg = SolverConfig {
        dt: Some(dt),
        t_final,
        snapshot_every: usize::MAX,
        ..Default::default()
    };
    simulate(problem, state, cfg).map_or(f64::NAN, |tr| tr.last().h)
}

fn rerun_manifest(dir: &std::path::Path) -> Option<Vec<(String, String)>> {
    let text = r#"
schema_version = 1
[model]
type = "competition"
a = [1.0, 1.0]
b = [1.0, 1.0]
c = [0.5, 0.5]
[grid]
dx = 0.05
[initial]
h0 = 1.0
profile = "cosine"
amplitude = [0.5, 0.5]
[solver]
t_final = 2.0
[outputs]
dir = "out"
snapshot_every = 10
formats = ["csv", "json"]
"#;
    let cfg = parse_config(text, dir).ok()?;
    let rec = dispatch(&cfg, Kind::Simulate, dir, Level::Quick).ok()?;
    (rec.status == Status::Ok).then(|| rec.outputs.into_iter().map(|e| (e.path, e.sha256)).collect())
}

pub fn numerics_hygiene() -> CheckResult {
    let t = Timer::start();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut fft_worst: f64 = 0.0;
    for (spec, dx, n) in [
        (KernelSpec::triangular(1.0), 0.01, 5000),
        (KernelSpec::gaussian(1.0, 8.0), 0.01, 20000),
        (KernelSpec::gaussian(0.5, 6.0), 0.05, 3000),
    ] {
        let k = Kernel::new(spec).expect("valid kernel");
        let conv = Convolver::new(&k, dx);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0) * dx).collect();
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        conv.direct_seq(&v, &mut a);
        conv.fft(&v, &mut b);
        fft_worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(fft_worst, f64::max);
    }
    let ratio = |h: [f64; 3]| (h[0] - h[1]) / (h[1] - h[2]);
    let dt_ratio = ratio([
        benchmark_h(0.01, 0.01),
        benchmark_h(0.01, 0.005),
        benchmark_h(0.01, 0.0025),
    ]);
    let dx_ratio = ratio([
        benchmark_h(0.04, 0.0025),
        benchmark_h(0.02, 0.0025),
        benchmark_h(0.01, 0.0025),
    ]);

    let base = std::env::temp_dir().join(format!("frontspread-rerun-{}", std::process::id()));
    let identical = match (rerun_manifest(&base.join("a")), rerun_manifest(&base.join("b"))) {
        (Some(a), Some(b)) => !a.is_empty() && a == b,
        _ => false,
    };
    let _ = std::fs::remove_dir_all(&base);
    t.finish(
        "11",
        "numerics hygiene",
        "fast convolution agrees with direct; first order in dt, second order in dx; reruns reproduce",
        fft_worst <= 1e-10 && (1.7..=2.3).contains(&dt_ratio) && (3.4..=4.6).contains(&dx_ratio) && identical,
        format!("fft {fft_worst:.3e}, dt ratio {dt_ratio:.3}, dx ratio {dx_ratio:.3}, identical reruns {identical}"),
        "<= 1e-10, [1.7, 2.3], [3.4, 4.6], true",
    )
}
