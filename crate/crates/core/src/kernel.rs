//! Dispersal kernels.
//!
//! A [`Kernel`] is an even, nonnegative, bounded probability density with
//! `J(0) > 0`. Besides pointwise evaluation it carries a table of the tail
//! mass `T(z) = ∫_z^∞ J(s) ds`, which turns the double boundary-flux
//! integrals into single weighted integrals over the occupied interval.
//!
//! Three families are supported:
//!
//! * triangular `J(x) = (1 - |x|/σ)₊ / σ`, compactly supported on `[-σ, σ]`;
//! * Gaussian with scale `σ`, truncated at `R = cutoff·σ` and renormalized;
//! * tabulated samples on a symmetric uniform grid, linearly interpolated.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel parameter `{name}` must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("kernel has a negative sample {value} at x = {x}")]
    Negative { x: f64, value: f64 },
    #[error("kernel vanishes at the origin")]
    ZeroAtOrigin,
    #[error("kernel is not even: J({x}) and J(-{x}) differ by {diff:e}")]
    NotEven { x: f64, diff: f64 },
    #[error("kernel mass {mass} deviates from 1 by more than {window}")]
    Mass { mass: f64, window: f64 },
    #[error("tabulated kernel grid is not uniform and symmetric: {0}")]
    Grid(String),
    #[error("cannot read tabulated kernel {path}: {reason}")]
    Read { path: String, reason: String },
}

/// Raw kernel description, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Triangular {
        sigma: f64,
    },
    /// `cutoff` is the truncation radius in units of `sigma`.
    Gaussian {
        sigma: f64,
        cutoff: f64,
    },
    /// `samples[k]` is `J(k·spacing)` for `k = -n..=n`, stored from `-n`.
    Tabulated {
        spacing: f64,
        samples: Vec<f64>,
    },
}

impl KernelSpec {
    pub fn triangular(sigma: f64) -> Self {
        KernelSpec::Triangular { sigma }
    }

    pub fn gaussian(sigma: f64, cutoff: f64) -> Self {
        KernelSpec::Gaussian { sigma, cutoff }
    }

    /// Reads a CSV of `(x, J(x))` pairs. A header line is allowed.
    pub fn from_csv(path: &Path) -> Result<Self, KernelError> {
        let read_err = |reason: String| KernelError::Read {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(read_err(format!("line {}: expected two columns", lineno + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(j)) => pairs.push((x, j)),
                _ if pairs.is_empty() => continue, // header
                _ => return Err(read_err(format!("line {}: not numeric", lineno + 1))),
            }
        }
        Self::from_pairs(&pairs)
    }

    /// Builds a tabulated spec from `(x, J(x))` pairs on a symmetric uniform grid.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, KernelError> {
        if pairs.len() < 3 || pairs.len().is_multiple_of(2) {
            return Err(KernelError::Grid(format!(
                "need an odd number (>= 3) of points, got {}",
                pairs.len()
            )));
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len() / 2;
        let spacing = (sorted[sorted.len() - 1].0 - sorted[0].0) / (sorted.len() - 1) as f64;
        if !(spacing > 0.0) {
            return Err(KernelError::Grid("zero spacing".into()));
        }
        for (k, &(x, _)) in sorted.iter().enumerate() {
            let expect = (k as f64 - n as f64) * spacing;
            if (x - expect).abs() > 1e-9 * spacing.max(1.0) {
                return Err(KernelError::Grid(format!("node {x} expected at {expect}")));
            }
        }
        Ok(KernelSpec::Tabulated {
            spacing,
            samples: sorted.into_iter().map(|p| p.1).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KernelTolerances {
    /// Allowed deviation of the final quadrature mass from 1.
    pub mass: f64,
    /// Tabulated kernels within this relative mass error are renormalized.
    pub renormalize_window: f64,
    pub evenness: f64,
}

impl Default for KernelTolerances {
    fn default() -> Self {
        KernelTolerances {
            mass: 1e-8,
            renormalize_window: 0.01,
            evenness: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub even: bool,
    pub nonnegative: bool,
    pub positive_at_origin: bool,
    pub unit_mass: bool,
    pub bounded: bool,
    pub tail_consistent: bool,
    /// `J > 0` on all of ℝ for the underlying family (before truncation).
    pub strict_positivity: bool,
    /// Quadrature mass after renormalization.
    pub mass: f64,
    pub sup: f64,
    /// Relative mass removed by truncation or by renormalizing samples.
    pub mass_correction: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.even
            && self.nonnegative
            && self.positive_at_origin
            && self.unit_mass
            && self.bounded
            && self.tail_consistent
    }
}

#[derive(Debug, Clone)]
enum Family {
    Triangular {
        sigma: f64,
    },
    Gaussian {
        sigma: f64,
        radius: f64,
        norm: f64,
    },
    /// Nonnegative half: `half[k] = J(k·spacing)`.
    Tabulated {
        spacing: f64,
        half: Vec<f64>,
    },
}

/// Cubic Hermite table of `T(z)` for `z ≥ 0`, using `T' = -J`.
#[derive(Debug, Clone)]
struct TailTable {
    spacing: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// A validated dispersal kernel. Immutable once built.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    family: Family,
    radius: f64,
    tail: TailTable,
    report: ValidationReport,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Triangular { sigma } => write!(f, "triangular(σ={sigma})"),
            Family::Gaussian { sigma, radius, .. } => {
                write!(f, "gaussian(σ={sigma}, R={radius})")
            }
            Family::Tabulated { spacing, half } => {
                write!(f, "tabulated(δ={spacing}, n={})", half.len())
            }
        }
    }
}

const DEFAULT_TABLE_NODES: usize = 2048;

fn check_param(name: &'static str, value: f64) -> Result<(), KernelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(KernelError::BadParameter { name, value })
    }
}

impl Kernel {
    /// Validates `spec` with default tolerances and a tail table of 2048 cells.
    pub fn new(spec: KernelSpec) -> Result<Self, KernelError> {
        Self::with_table_spacing(spec, None, &KernelTolerances::default())
    }

    /// Validates `spec`; the tail table uses `table_spacing` when given
    /// (simulations pass the grid spacing).
    pub fn with_table_spacing(
        spec: KernelSpec,
        table_spacing: Option<f64>,
        tol: &KernelTolerances,
    ) -> Result<Self, KernelError> {
        let (family, radius, strict, correction) = match &spec {
            KernelSpec::Triangular { sigma } => {
                check_param("sigma", *sigma)?;
                (Family::Triangular { sigma: *sigma }, *sigma, false, 0.0)
            }
            KernelSpec::Gaussian { sigma, cutoff } => {
                check_param("sigma", *sigma)?;
                check_param("cutoff", *cutoff)?;
                let radius = sigma * cutoff;
                let kept = libm::erf(cutoff / std::f64::consts::SQRT_2);
                let norm = sigma * (2.0 * std::f64::consts::PI).sqrt() * kept;
                (
                    Family::Gaussian {
                        sigma: *sigma,
                        radius,
                        norm,
                    },
                    radius,
                    true,
                    1.0 - kept,
                )
            }
            KernelSpec::Tabulated { spacing, samples } => {
                check_param("spacing", *spacing)?;
                let (half, correction) = validate_samples(*spacing, samples, tol)?;
                let last = half.iter().rposition(|&v| v > 0.0).unwrap_or(0);
                let radius = ((last + 1).min(half.len() - 1)) as f64 * spacing;
                (
                    Family::Tabulated {
                        spacing: *spacing,
                        half,
                    },
                    radius,
                    false,
                    correction,
                )
            }
        };

        let spacing = match (table_spacing, &family) {
            (Some(s), _) => {
                check_param("table_spacing", s)?;
                s
            }
            (None, Family::Tabulated { spacing, .. }) => *spacing,
            (None, _) => radius / DEFAULT_TABLE_NODES as f64,
        };

        let mut kernel = Kernel {
            spec,
            family,
            radius,
            tail: TailTable {
                spacing,
                values: Vec::new(),
                slopes: Vec::new(),
            },
            report: ValidationReport {
                even: true,
                nonnegative: true,
                positive_at_origin: true,
                unit_mass: true,
                bounded: true,
                tail_consistent: true,
                strict_positivity: strict,
                mass: 1.0,
                sup: 0.0,
                mass_correction: correction,
            },
        };
        kernel.tail = kernel.build_tail(spacing);
        kernel.report = kernel.check(tol)?;
        Ok(kernel)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    /// True when the underlying family is positive on all of ℝ.
    pub fn strictly_positive(&self) -> bool {
        self.report.strict_positivity
    }

    pub fn table_spacing(&self) -> f64 {
        self.tail.spacing
    }

    /// Kernel density `J(x)`; zero outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax > self.radius {
            return 0.0;
        }
        match &self.family {
            Family::Triangular { sigma } => (1.0 - ax / sigma).max(0.0) / sigma,
            Family::Gaussian { sigma, norm, .. } => {
                let r = ax / sigma;
                (-0.5 * r * r).exp() / norm
            }
            Family::Tabulated { spacing, half } => {
                let pos = ax / spacing;
                let k = pos.floor() as usize;
                if k + 1 >= half.len() {
                    return if k + 1 == half.len() { half[k] } else { 0.0 };
                }
                let frac = pos - k as f64;
                half[k] * (1.0 - frac) + half[k + 1] * frac
            }
        }
    }

    /// Tail mass `T(z) = ∫_z^∞ J(s) ds`.
    pub fn tail_mass(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0 - self.tail_nonneg(-z);
        }
        self.tail_nonneg(z)
    }

    fn tail_nonneg(&self, z: f64) -> f64 {
        if z >= self.radius {
            return 0.0;
        }
        let t = &self.tail;
        let pos = z / t.spacing;
        let k = pos.floor() as usize;
        if k + 1 >= t.values.len() {
            return 0.0;
        }
        let s = pos - k as f64;
        let h = t.spacing;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * t.values[k] + h10 * h * t.slopes[k] + h01 * t.values[k + 1] + h11 * h * t.slopes[k + 1];
        v.clamp(0.0, 0.5)
    }

    /// Exact tail mass for `z ≥ 0`, used only to build the table.
    fn tail_exact(&self, z: f64) -> f64 {
        if z >= self.radius {
            return 0.0;
        }
        match &self.family {
            Family::Triangular { sigma } => {
                let r = 1.0 - z / sigma;
                0.5 * r * r
            }
            Family::Gaussian { sigma, radius, .. } => {
                let s = sigma * std::f64::consts::SQRT_2;
                let kept = libm::erf(radius / s);
                0.5 * (kept - libm::erf(z / s)) / kept
            }
            Family::Tabulated { spacing, half } => {
                // Integral of the linear interpolant from z to the last node.
                let pos = z / spacing;
                let k = pos.floor() as usize;
                let frac = pos - k as f64;
                let jz = half[k] * (1.0 - frac) + half.get(k + 1).copied().unwrap_or(0.0) * frac;
                let mut acc = 0.5 * (jz + half.get(k + 1).copied().unwrap_or(0.0)) * (1.0 - frac) * spacing;
                for m in (k + 1)..half.len().saturating_sub(1) {
                    acc += 0.5 * (half[m] + half[m + 1]) * spacing;
                }
                acc
            }
        }
    }

    fn build_tail(&self, spacing: f64) -> TailTable {
        let n = (self.radius / spacing).ceil() as usize + 1;
        let mut values = Vec::with_capacity(n + 1);
        let mut slopes = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let z = k as f64 * spacing;
            values.push(if k == 0 { 0.5 } else { self.tail_exact(z) });
            slopes.push(-self.eval(z));
        }
        TailTable {
            spacing,
            values,
            slopes,
        }
    }

    /// Samples `J(m·dx)` for `m = 0..=⌈R/dx⌉`; the kernel is even, so this
    /// half determines the full stencil.
    pub fn half_samples(&self, dx: f64) -> Vec<f64> {
        let m = (self.radius / dx).ceil() as usize;
        (0..=m).map(|k| self.eval(k as f64 * dx)).collect()
    }

    fn check(&self, tol: &KernelTolerances) -> Result<ValidationReport, KernelError> {
        let mut report = self.report.clone();
        // Composite Simpson on [0, R]; kinks of the analytic families sit on nodes.
        let panels = 4096;
        let h = self.radius / panels as f64;
        let mut half_mass = self.eval(0.0) + self.eval(self.radius);
        let mut sup: f64 = 0.0;
        let mut even = true;
        let mut nonneg = true;
        for k in 0..=panels {
            let x = k as f64 * h;
            let v = self.eval(x);
            sup = sup.max(v);
            nonneg &= v >= 0.0;
            even &= (v - self.eval(-x)).abs() <= tol.evenness;
            if k > 0 && k < panels {
                half_mass += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
        }
        let mass = match &self.family {
            Family::Tabulated { spacing, half } => {
                // Linear interpolant: trapezoid on its own nodes is exact.
                let n = half.len() - 1;
                spacing * (2.0 * half[1..].iter().sum::<f64>() + half[0] - half[n])
            }
            _ => 2.0 * half_mass * h / 3.0,
        };
        if self.eval(0.0) <= 0.0 {
            return Err(KernelError::ZeroAtOrigin);
        }
        report.even = even;
        report.nonnegative = nonneg;
        report.positive_at_origin = true;
        report.mass = mass;
        report.unit_mass = (mass - 1.0).abs() <= tol.mass;
        report.sup = sup;
        report.bounded = sup.is_finite();

        let mut consistent = (self.tail_mass(0.0) - 0.5).abs() <= 1e-12
            && self.tail_mass(-self.radius) == 1.0
            && self.tail_mass(self.radius) == 0.0;
        let probes = 257;
        let mut prev = f64::INFINITY;
        for k in 0..probes {
            let z = -self.radius + 2.0 * self.radius * k as f64 / (probes - 1) as f64;
            let t = self.tail_mass(z);
            consistent &= t <= prev + 1e-15;
            consistent &= (t + self.tail_mass(-z) - 1.0).abs() <= 1e-10;
            prev = t;
        }
        report.tail_consistent = consistent;
        Ok(report)
    }
}

/// Checks tabulated samples and returns the (renormalized) nonnegative half
/// together with the relative mass correction that was applied.
fn validate_samples(spacing: f64, samples: &[f64], tol: &KernelTolerances) -> Result<(Vec<f64>, f64), KernelError> {
    if samples.len() < 3 || samples.len().is_multiple_of(2) {
        return Err(KernelError::Grid(format!(
            "need an odd number (>= 3) of samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() / 2;
    for (k, &v) in samples.iter().enumerate() {
        let x = (k as f64 - n as f64) * spacing;
        if !v.is_finite() || v < 0.0 {
            return Err(KernelError::Negative { x, value: v });
        }
    }
    if samples[n] <= 0.0 {
        return Err(KernelError::ZeroAtOrigin);
    }
    for k in 1..=n {
        let diff = (samples[n + k] - samples[n - k]).abs();
        if diff > tol.evenness.max(1e-12 * samples[n]) {
            return Err(KernelError::NotEven {
                x: k as f64 * spacing,
                diff,
            });
        }
    }
    let half: Vec<f64> = samples[n..].to_vec();
    let mass = spacing * (2.0 * half.iter().sum::<f64>() - half[0] - half[n]);
    if (mass - 1.0).abs() > tol.renormalize_window {
        return Err(KernelError::Mass {
            mass,
            window: tol.renormalize_window,
        });
    }
    let scaled = half.iter().map(|v| v / mass).collect();
    Ok((scaled, (1.0 - mass).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Kernel {
        Kernel::new(KernelSpec::triangular(1.0)).unwrap()
    }

    #[test]
    fn triangular_values() {
        let k = tri();
        assert_eq!(k.eval(0.0), 1.0);
        assert_eq!(k.eval(-0.5), k.eval(0.5));
        assert_eq!(k.eval(1.5), 0.0);
        assert_eq!(k.eval(-7.0), 0.0);
    }

    #[test]
    fn triangular_tail() {
        let k = tri();
        assert_eq!(k.tail_mass(0.0), 0.5);
        assert!((k.tail_mass(0.5) - 0.125).abs() < 1e-15);
        assert_eq!(k.tail_mass(2.0), 0.0);
        assert_eq!(k.tail_mass(-2.0), 1.0);
        assert_eq!(k.tail_mass(1.0), 0.0);
        assert_eq!(k.tail_mass(-1.0), 1.0);
    }

    #[test]
    fn triangular_report() {
        let r = tri().report().clone();
        assert!(r.passed());
        assert!(!r.strict_positivity);
        assert!((r.mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_report() {
        let k = Kernel::new(KernelSpec::gaussian(1.0, 6.0)).unwrap();
        let r = k.report();
        assert!(r.passed(), "{r:?}");
        assert!(r.strict_positivity);
        assert!(r.mass_correction < 1e-8 && r.mass_correction > 0.0);
        assert_eq!(k.support_radius(), 6.0);
        // Tail against the closed form at an off-table point.
        let z = 0.731_234;
        let exact = k.tail_exact(z);
        assert!((k.tail_mass(z) - exact).abs() < 1e-12);
    }

    #[test]
    fn tabulated_roundtrip() {
        // Triangle sampled at 0.25 with a 0.5% mass error, should renormalize.
        let pairs: Vec<(f64, f64)> = (-4..=4)
            .map(|k| {
                let x = k as f64 * 0.25;
                (x, 1.005 * (1.0 - x.abs()).max(0.0))
            })
            .collect();
        let spec = KernelSpec::from_pairs(&pairs).unwrap();
        let k = Kernel::new(spec).unwrap();
        assert!(k.report().passed());
        assert!((k.report().mass_correction - 0.005).abs() < 1e-12);
        assert!((k.eval(0.1) - 0.9).abs() < 1e-12);
        assert!((k.tail_mass(0.5) - 0.125).abs() < 1e-12);
        assert_eq!(k.support_radius(), 1.0);
    }

    #[test]
    fn tabulated_zero_at_origin() {
        let spec = KernelSpec::Tabulated {
            spacing: 0.5,
            samples: vec![1.0, 0.0, 1.0],
        };
        assert!(matches!(Kernel::new(spec), Err(KernelError::ZeroAtOrigin)));
    }

    #[test]
    fn tabulated_rejections() {
        let neg = KernelSpec::Tabulated {
            spacing: 0.5,
            samples: vec![-0.1, 1.0, 0.0, 1.0, -0.1],
        };
        assert!(matches!(Kernel::new(neg), Err(KernelError::Negative { .. })));
        let heavy = KernelSpec::Tabulated {
            spacing: 0.5,
            samples: vec![0.0, 3.0, 0.0],
        };
        assert!(matches!(Kernel::new(heavy), Err(KernelError::Mass { .. })));
        let odd = KernelSpec::Tabulated {
            spacing: 0.5,
            samples: vec![0.0, 0.9, 1.0, 0.5, 0.0],
        };
        assert!(Kernel::new(odd).is_err());
    }

    #[test]
    fn bad_parameters() {
        assert!(Kernel::new(KernelSpec::triangular(0.0)).is_err());
        assert!(Kernel::new(KernelSpec::gaussian(1.0, -1.0)).is_err());
    }
}
