//! Acceptance run: every criterion at its stated tolerance, one line each.

use std::process::ExitCode;
use std::thread;

use frontspread::analysis::coexistence_limit;
use frontspread::growth::{GrowthModel, LvParams};
use frontspread::kernel::{Kernel, KernelSpec};
use frontspread::spectral::{critical_length, CriticalLengthOptions};
use frontspread_harness::suite::{self, CheckResult, Level};

/// Dense-matrix root for d = 1, a = 0.5, unit triangular kernel, 512 nodes.
const GOLDEN_L1: f64 = 0.630813070779681;

fn frozen_values() -> CheckResult {
    let start = std::time::Instant::now();
    let k = Kernel::new(KernelSpec::triangular(1.0)).unwrap();
    let l1 = critical_length(1.0, 0.5, &k, &CriticalLengthOptions::default()).unwrap();
    let comp = GrowthModel::competition(LvParams::new((1.0, 1.0), (1.0, 1.0), (0.5, 0.5))).unwrap();
    let pred = GrowthModel::predator_prey(LvParams::new((1.0, 0.5), (1.0, 1.0), (0.5, 0.25))).unwrap();
    let (c, p) = (coexistence_limit(&comp).unwrap(), coexistence_limit(&pred).unwrap());
    let third = 2.0 / 3.0;
    let lim = [c.0, c.1, p.0, p.1]
        .iter()
        .map(|v| (v - third).abs())
        .fold(0.0, f64::max);
    CheckResult {
        id: "F".into(),
        title: "frozen reference values".into(),
        anchor: "critical length and coexistence states of the benchmarks".into(),
        passed: (l1 - GOLDEN_L1).abs() <= 1e-3 && lim <= 1e-15,
        measured: format!(
            "|l1 - golden| = {:.3e}, |limit - 2/3| = {lim:.3e}",
            (l1 - GOLDEN_L1).abs()
        ),
        threshold: "<= 1e-3, <= 1e-15".into(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut checks = suite::checks(Level::Full);
    checks.push(frozen_values);
    let handles: Vec<_> = checks.into_iter().map(thread::spawn).collect();
    let results: Vec<CheckResult> = handles.into_iter().map(|h| h.join().expect("check panicked")).collect();
    println!();
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("\nacceptance: {} passed, {failed} failed\n", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
