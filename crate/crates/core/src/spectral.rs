//! Principal eigenvalue of `φ ↦ d(∫_a^b J(x−y)φ(y)dy − φ) + θφ` and the
//! critical lengths it defines.
//!
//! The operator is discretized by the trapezoid rule on `n_eig` equispaced
//! nodes. The resulting matrix `M` is self-adjoint in the weighted inner
//! product `⟨x, y⟩_W = Σ wᵢxᵢyᵢ`, so the Rayleigh quotient taken in that
//! product converges at twice the rate of the iterates themselves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::growth::GrowthModel;
use crate::kernel::Kernel;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("invalid spectral problem: {0}")]
    Invalid(String),
    #[error("power iteration did not converge in {iters} iterations (last change {change:e})")]
    NoConvergence { iters: usize, change: f64 },
    /// `a ≥ d`: the principal eigenvalue is positive on every interval, so
    /// there is no critical length and spreading is unconditional.
    #[error("ALWAYS_POSITIVE: a = {a} >= d = {d}, no critical length exists")]
    AlwaysPositive { d: f64, a: f64 },
    #[error("no sign change of the principal eigenvalue on (0, {cap}]")]
    BracketCap { cap: f64 },
}

/// The zeroth-order coefficient `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Constant(f64),
    /// Linear interpolation of `(x, θ)` pairs, held constant beyond the ends.
    Sampled(Vec<(f64, f64)>),
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Sampled(pts) => {
                let k = pts.partition_point(|p| p.0 <= x);
                if k == 0 {
                    return pts[0].1;
                }
                if k == pts.len() {
                    return pts[k - 1].1;
                }
                let (x0, y0) = pts[k - 1];
                let (x1, y1) = pts[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

pub const DEFAULT_N_EIG: usize = 512;
pub const MIN_N_EIG: usize = 64;

#[derive(Debug, Clone)]
pub struct SpectralProblem {
    pub d: f64,
    pub kernel: Kernel,
    pub a: f64,
    pub b: f64,
    pub theta: Potential,
    pub n_eig: usize,
}

impl SpectralProblem {
    pub fn new(
        d: f64,
        kernel: Kernel,
        (a, b): (f64, f64),
        theta: Potential,
        n_eig: usize,
    ) -> Result<Self, SpectralError> {
        let p = SpectralProblem {
            d,
            kernel,
            a,
            b,
            theta,
            n_eig,
        };
        p.validate()?;
        Ok(p)
    }

    /// Constant `θ` on `(0, ℓ)` with the default node count.
    pub fn on_length(d: f64, kernel: Kernel, length: f64, theta: f64) -> Result<Self, SpectralError> {
        Self::new(d, kernel, (0.0, length), Potential::Constant(theta), DEFAULT_N_EIG)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let mut bad = Vec::new();
        if !(self.d >= 0.0 && self.d.is_finite()) {
            bad.push(format!("d must be nonnegative and finite, got {}", self.d));
        }
        if !(self.a < self.b && self.a.is_finite() && self.b.is_finite()) {
            bad.push(format!("interval ({}, {}) must satisfy a < b", self.a, self.b));
        }
        if self.n_eig < MIN_N_EIG {
            bad.push(format!("n_eig must be at least {MIN_N_EIG}, got {}", self.n_eig));
        }
        match &self.theta {
            Potential::Constant(c) if !c.is_finite() => bad.push("theta must be finite".into()),
            Potential::Sampled(pts) => {
                if pts.is_empty() || pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                    bad.push("theta samples must be finite and nonempty".into());
                }
                if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
                    bad.push("theta sample abscissae must increase".into());
                }
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SpectralError::Invalid(bad.join("; ")))
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = (self.b - self.a) / (self.n_eig - 1) as f64;
        (0..self.n_eig).map(|i| self.a + i as f64 * h).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let h = (self.b - self.a) / (self.n_eig - 1) as f64;
        let mut w = vec![h; self.n_eig];
        w[0] = 0.5 * h;
        w[self.n_eig - 1] = 0.5 * h;
        w
    }

    pub fn theta_values(&self) -> Vec<f64> {
        self.nodes().iter().map(|&x| self.theta.eval(x)).collect()
    }
}

/// Row-major dense discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub entries: Vec<f64>,
}

impl DenseOperator {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// `y = (M + shift·I)x`.
    pub fn apply_shifted(&self, x: &[f64], shift: f64, y: &mut [f64]) {
        let row = |i: usize| -> f64 {
            let r = self.row(i);
            let mut s = 0.0;
            for j in 0..self.n {
                s += r[j] * x[j];
            }
            s + shift * x[i]
        };
        #[cfg(feature = "parallel")]
        {
            if self.n >= 128 {
                y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
                return;
            }
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = row(i);
        }
    }
}

/// `M[i][j] = d·w_j·J(x_i − x_j)` off the diagonal, `M[i][i] = d·w_i·J(0) − d + θ(x_i)`.
pub fn assemble(problem: &SpectralProblem) -> DenseOperator {
    let nodes = problem.nodes();
    let weights = problem.weights();
    let theta = problem.theta_values();
    let n = problem.n_eig;
    let h = (problem.b - problem.a) / (n - 1) as f64;
    // J depends only on |i − j|.
    let jvals: Vec<f64> = (0..n).map(|k| problem.kernel.eval(k as f64 * h)).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = i.abs_diff(j);
            entries[i * n + j] = problem.d * weights[j] * jvals[k];
        }
        entries[i * n + i] += theta[i] - problem.d;
    }
    DenseOperator {
        n,
        nodes,
        weights,
        entries,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Stop when successive Rayleigh quotients differ by less than this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iters: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub lambda: f64,
    pub nodes: Vec<f64>,
    /// Positive eigenfunction, normalized to maximum 1.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `max |Mφ − λφ|`.
    pub residual: f64,
}

pub fn principal_eigenvalue(problem: &SpectralProblem) -> Result<Eigenpair, SpectralError> {
    principal_eigenvalue_with(problem, &EigenOptions::default())
}

/// Power iteration on `M + cI`, `c = d + max|θ| + 1`, from the all-ones vector.
pub fn principal_eigenvalue_with(problem: &SpectralProblem, opts: &EigenOptions) -> Result<Eigenpair, SpectralError> {
    problem.validate()?;
    let op = assemble(problem);
    let theta_max = problem.theta_values().iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let shift = problem.d + theta_max + 1.0;
    let n = op.n;
    let w = &op.weights;
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut prev_change = f64::NAN;
    for iter in 1..=opts.max_iters {
        op.apply_shifted(&x, shift, &mut y);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            num += w[j] * x[j] * y[j];
            den += w[j] * x[j] * x[j];
        }
        let rq = num / den - shift;
        let top = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            x[j] = y[j] / top;
        }
        let change = (rq - prev).abs();
        // With geometric convergence at rate ρ the remaining error is about
        // change·ρ/(1 − ρ); slow problems need that below tol as well.
        let rho = change / prev_change;
        let remaining = if rho.is_finite() && rho < 1.0 {
            change * rho / (1.0 - rho)
        } else {
            f64::INFINITY
        };
        if change < opts.tol && (remaining < opts.tol || change == 0.0) {
            let lambda = rq;
            op.apply_shifted(&x, 0.0, &mut y);
            let residual = (0..n).fold(0.0f64, |m, j| m.max((y[j] - lambda * x[j]).abs()));
            return Ok(Eigenpair {
                lambda,
                nodes: op.nodes,
                vector: x,
                iterations: iter,
                residual,
            });
        }
        prev = rq;
        if change > 0.0 {
            prev_change = change;
        }
    }
    Err(SpectralError::NoConvergence {
        iters: opts.max_iters,
        change: prev_change,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLengthOptions {
    /// Bracket width at which bisection may stop.
    pub tol: f64,
    /// Bisection also continues until `|λ_p| ≤ lambda_tol` at the returned length.
    pub lambda_tol: f64,
    pub n_eig: usize,
    /// Lower end of the initial bracket.
    pub start: f64,
    /// Largest length tried while growing the bracket.
    pub cap: f64,
    pub eigen: EigenOptions,
}

impl Default for CriticalLengthOptions {
    fn default() -> Self {
        CriticalLengthOptions {
            tol: 1e-3,
            lambda_tol: 1e-7,
            n_eig: DEFAULT_N_EIG,
            start: 1e-3,
            cap: 1e4,
            eigen: EigenOptions::default(),
        }
    }
}

fn lambda_on(d: f64, a: f64, kernel: &Kernel, len: f64, opts: &CriticalLengthOptions) -> Result<f64, SpectralError> {
    let p = SpectralProblem::new(d, kernel.clone(), (0.0, len), Potential::Constant(a), opts.n_eig)?;
    Ok(principal_eigenvalue_with(&p, &opts.eigen)?.lambda)
}

/// Length `ℓ` with `λ_p(𝓛^d_{(0,ℓ)} + a) = 0`.
pub fn critical_length(d: f64, a: f64, kernel: &Kernel, opts: &CriticalLengthOptions) -> Result<f64, SpectralError> {
    if !(a > 0.0 && d > 0.0) {
        return Err(SpectralError::Invalid(format!(
            "critical length needs a > 0 and d > 0 (a = {a}, d = {d})"
        )));
    }
    if a >= d {
        return Err(SpectralError::AlwaysPositive { d, a });
    }
    let mut lo = opts.start;
    let mut hi = 1.0f64.max(2.0 * lo);
    let mut f_lo = lambda_on(d, a, kernel, lo, opts)?;
    if f_lo >= 0.0 {
        return Err(SpectralError::Invalid(format!(
            "principal eigenvalue already nonnegative at the bracket start {lo}"
        )));
    }
    let mut f_hi = lambda_on(d, a, kernel, hi, opts)?;
    while f_hi < 0.0 {
        if hi >= opts.cap {
            return Err(SpectralError::BracketCap { cap: opts.cap });
        }
        lo = hi;
        f_lo = f_hi;
        hi = (2.0 * hi).min(opts.cap);
        f_hi = lambda_on(d, a, kernel, hi, opts)?;
    }
    let mut best = if f_hi.abs() < f_lo.abs() {
        (hi, f_hi)
    } else {
        (lo, f_lo)
    };
    for _ in 0..200 {
        if hi - lo < opts.tol && best.1.abs() <= opts.lambda_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = lambda_on(d, a, kernel, mid, opts)?;
        if f.abs() <= best.1.abs() {
            best = (mid, f);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllStar {
    pub l1: f64,
    pub l2: f64,
    pub value: f64,
}

/// `ℓ* = min(ℓ₁, ℓ₂)` with `ℓᵢ` the critical length of species `i`.
pub fn ell_star(
    model: &GrowthModel,
    d: [f64; 2],
    kernels: [&Kernel; 2],
    opts: &CriticalLengthOptions,
) -> Result<EllStar, SpectralError> {
    let (a1, a2) = match model.params() {
        Some(p) => (p.a1, p.a2),
        None => {
            return Err(SpectralError::Invalid(
                "ell_star needs Lotka-Volterra parameters".into(),
            ))
        }
    };
    let l1 = critical_length(d[0], a1, kernels[0], opts)?;
    let l2 = if a2 == a1 && d[1] == d[0] && kernels[1].spec() == kernels[0].spec() {
        l1
    } else {
        critical_length(d[1], a2, kernels[1], opts)?
    };
    Ok(EllStar {
        l1,
        l2,
        value: l1.min(l2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;

    fn tri() -> Kernel {
        Kernel::new(KernelSpec::triangular(1.0)).unwrap()
    }

    #[test]
    fn zero_diffusion_is_diagonal() {
        let p = SpectralProblem::new(0.0, tri(), (0.0, 2.0), Potential::Constant(0.7), 64).unwrap();
        let m = assemble(&p);
        for i in 0..m.n {
            for j in 0..m.n {
                let want = if i == j { 0.7 } else { 0.0 };
                assert_eq!(m.get(i, j), want);
            }
        }
        let e = principal_eigenvalue(&p).unwrap();
        assert!((e.lambda - 0.7).abs() < 1e-12);
    }

    #[test]
    fn row_sums_nonpositive() {
        let p = SpectralProblem::new(1.0, tri(), (0.0, 3.0), Potential::Constant(0.0), 128).unwrap();
        let m = assemble(&p);
        // Trapezoid error at the kernel's kinks is O(h²).
        let h = 3.0 / 127.0;
        for i in 0..m.n {
            let s: f64 = m.row(i).iter().sum();
            assert!(s <= h * h, "row {i}: {s}");
        }
    }

    #[test]
    fn tiny_interval() {
        let p = SpectralProblem::new(1.0, tri(), (0.0, 0.001), Potential::Constant(0.5), 512).unwrap();
        let e = principal_eigenvalue(&p).unwrap();
        assert!((e.lambda + 0.5).abs() < 2e-3, "{}", e.lambda);
        assert!(e.vector.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn always_positive() {
        let err = critical_length(1.0, 1.0, &tri(), &Default::default()).unwrap_err();
        assert_eq!(err, SpectralError::AlwaysPositive { d: 1.0, a: 1.0 });
        assert!(err.to_string().starts_with("ALWAYS_POSITIVE"));
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(SpectralProblem::new(1.0, tri(), (1.0, 0.0), Potential::Constant(0.5), 64).is_err());
        assert!(SpectralProblem::new(1.0, tri(), (0.0, 1.0), Potential::Constant(0.5), 32).is_err());
    }
}
