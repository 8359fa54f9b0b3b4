//! Reference computations used to check `frontspread`.
//!
//! Everything here favours obviously-correct code over speed: dense
//! eigendecompositions, nested quadrature, direct double loops, and a
//! separately written single-species solver.

use nalgebra::{DMatrix, SymmetricEigen};

use frontspread::evolver::{Snapshot, StopReason, Trajectory, TrajectoryPoint};
use frontspread::field::Grid;
use frontspread::kernel::Kernel;

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Composite five-point Gauss-Legendre rule on `[a, b]` with `panels` panels.
pub fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for k in 0..5 {
            s += GL_WEIGHTS[k] * f(c + 0.5 * h * GL_NODES[k]);
        }
    }
    0.5 * h * s
}

/// `Σ_j ω_j J(x_i − x_j) u_j` over the whole grid with trapezoid weights and
/// no stencil renormalization.
pub fn brute_convolution(grid: &Grid, kernel: &Kernel, u: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                s += w * grid.dx() * kernel.eval(grid.x(i) - grid.x(j)) * u[j];
            }
            s
        })
        .collect()
}

/// Outward fluxes `(∫_g^h ∫_{-∞}^g J(x−y)u(x) dy dx, ∫_g^h ∫_h^∞ J(x−y)u(x) dy dx)`
/// by nested quadrature over the (finite) kernel support.
pub fn flux_double_integral(kernel: &Kernel, g: f64, h: f64, u: &dyn Fn(f64) -> f64, panels: usize) -> (f64, f64) {
    let r = kernel.support_radius();
    let inner_right = |x: f64| gauss_legendre(&|y| kernel.eval(x - y), h, h + r, panels);
    let inner_left = |x: f64| gauss_legendre(&|y| kernel.eval(x - y), g - r, g, panels);
    let right = gauss_legendre(&|x| u(x) * inner_right(x), g, h, panels);
    let left = gauss_legendre(&|x| u(x) * inner_left(x), g, h, panels);
    (left, right)
}

/// Dense principal eigenpair `(λ, φ)` of the discretized operator
/// `d(Σ_j w_j J(x_i−x_j)φ_j − φ_i) + θ_i φ_i` on the given nodes and weights,
/// via the symmetric similarity transform `W^{1/2} M W^{-1/2}`.
/// `φ` is positive with maximum 1.
pub fn dense_principal(
    d: f64,
    jfun: &dyn Fn(f64) -> f64,
    nodes: &[f64],
    weights: &[f64],
    theta: &[f64],
) -> (f64, Vec<f64>) {
    let n = nodes.len();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let mut v = d * (weights[i] * weights[j]).sqrt() * jfun(nodes[i] - nodes[j]);
        if i == j {
            v += theta[i] - d;
        }
        v
    });
    let eig = SymmetricEigen::new(s);
    let (k, lambda) =
        eig.eigenvalues.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let col = eig.eigenvectors.column(k);
    let sign = if col.sum() < 0.0 { -1.0 } else { 1.0 };
    let mut phi: Vec<f64> = (0..n).map(|i| sign * col[i] / weights[i].sqrt()).collect();
    let top = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for v in &mut phi {
        *v /= top;
    }
    (lambda, phi)
}

/// All eigenvalues of the nonsymmetric trapezoid matrix, as complex pairs.
pub fn dense_spectrum(d: f64, kernel: &Kernel, a: f64, b: f64, theta: &[f64]) -> Vec<(f64, f64)> {
    let n = theta.len();
    let h = (b - a) / (n - 1) as f64;
    let w = |j: usize| if j == 0 || j == n - 1 { 0.5 * h } else { h };
    let m = DMatrix::from_fn(n, n, |i, j| {
        let mut v = d * w(j) * kernel.eval((i as f64 - j as f64) * h);
        if i == j {
            v += theta[i] - d;
        }
        v
    });
    m.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
}

/// Principal eigenvalue of the trapezoid matrix on `(a, b)` with `θ` sampled
/// at its `n = theta.len()` nodes, from the symmetric form.
pub fn dense_lambda(d: f64, kernel: &Kernel, a: f64, b: f64, theta: &[f64]) -> f64 {
    let n = theta.len();
    let h = (b - a) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
    let weights: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    dense_principal(d, &|x| kernel.eval(x), &nodes, &weights, theta).0
}

/// Root of `ℓ ↦ λ(𝓛^d_{(0,ℓ)} + a)` by bisection on the dense eigenvalue,
/// within `[lo, hi]` which must bracket a sign change.
pub fn dense_critical_length(d: f64, a: f64, kernel: &Kernel, n: usize, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let lam = |l: f64| {
        let h = l / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let weights: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
        dense_principal(d, &|x| kernel.eval(x), &nodes, &weights, &vec![a; n]).0
    };
    assert!(lam(lo) < 0.0 && lam(hi) > 0.0, "bracket does not straddle the root");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if lam(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stencil `J(m·dx)` for `m = 0..`, scaled so that `dx(s₀ + 2Σ_{m≥1} s_m) = 1`.
fn unit_stencil(kernel: &Kernel, dx: f64) -> Vec<f64> {
    let k = (kernel.support_radius() / dx).ceil() as usize;
    let mut s: Vec<f64> = (0..=k).map(|m| kernel.eval(m as f64 * dx)).collect();
    let mass = dx * (s[0] + 2.0 * s[1..].iter().sum::<f64>());
    for v in &mut s {
        *v /= mass;
    }
    s
}

/// Trapezoid weights on nodes strictly inside `(g, h)` with zero end values.
fn end_cell_weights(grid: &Grid, g: f64, h: f64) -> Option<(usize, Vec<f64>)> {
    let inside: Vec<usize> = (0..grid.len()).filter(|&i| grid.x(i) > g && grid.x(i) < h).collect();
    let (&lo, &hi) = (inside.first()?, inside.last()?);
    let dx = grid.dx();
    let mut w = vec![dx; hi - lo + 1];
    let (l, r) = (grid.x(lo) - g, h - grid.x(hi));
    if lo == hi {
        w[0] = 0.5 * (l + r);
    } else {
        w[0] = 0.5 * (dx + l);
        w[hi - lo] = 0.5 * (dx + r);
    }
    Some((lo, w))
}

fn convolve_window(s: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let k = s.len() - 1;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in i.saturating_sub(k)..=(i + k).min(n - 1) {
                acc += s[i.abs_diff(j)] * v[j];
            }
            acc
        })
        .collect()
}

/// Output of [`scalar_logistic`].
#[derive(Debug, Clone)]
pub struct ScalarRun {
    pub t: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    /// Full-grid densities after each step.
    pub u: Vec<Vec<f64>>,
}

/// Single-species free-boundary problem `u_t = d(J∗u − u) + u(a − bu)`,
/// `h' = μ∫u T(h−x)`, `g' = −μ∫u T(x−g)`, stepped with the same frozen-boundary
/// implicit update as the two-species solver.
#[allow(clippy::too_many_arguments)]
pub fn scalar_logistic(
    grid: &Grid,
    kernel: &Kernel,
    (d, a, b, mu): (f64, f64, f64, f64),
    h0: f64,
    u0: &[f64],
    dt: f64,
    n_steps: usize,
    tol: f64,
) -> ScalarRun {
    let s = unit_stencil(kernel, grid.dx());
    let (mut g, mut h) = (-h0, h0);
    let mut u = u0.to_vec();
    let mut out = ScalarRun {
        t: vec![0.0],
        g: vec![g],
        h: vec![h],
        u: vec![u.clone()],
    };
    for step in 1..=n_steps {
        if let Some((lo, w)) = end_cell_weights(grid, g, h) {
            let old: Vec<f64> = u[lo..lo + w.len()].to_vec();
            let mut v = old.clone();
            for _ in 0..500 {
                let wv: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x * y).collect();
                let c = convolve_window(&s, &wv);
                let next: Vec<f64> = (0..v.len())
                    .map(|j| old[j] + dt * (d * (c[j] - v[j]) + v[j] * (a - b * v[j])))
                    .collect();
                let diff = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                v = next;
                if diff < tol {
                    break;
                }
            }
            for (j, x) in v.into_iter().enumerate() {
                u[lo + j] = x.max(0.0);
            }
            let mut fl = 0.0;
            let mut fr = 0.0;
            for (j, wj) in w.iter().enumerate() {
                let x = grid.x(lo + j);
                fl += wj * u[lo + j] * kernel.tail_mass(x - g);
                fr += wj * u[lo + j] * kernel.tail_mass(h - x);
            }
            g -= dt * mu * fl;
            h += dt * mu * fr;
        }
        out.t.push(step as f64 * dt);
        out.g.push(g);
        out.h.push(h);
        out.u.push(u.clone());
    }
    out
}

/// Upper solution built from the decoupled linear problems on a frozen
/// interval `(−h₁, h₁)` together with boundaries `∓r(t)`, where
/// `r(t) = h₀ − (4(μ₁+μ₂)C h₁/λ)(1 − e^{λt/2})`.
#[derive(Debug, Clone)]
pub struct UpperFixture {
    pub trajectory: Trajectory,
    /// `λ = max(λ₁, λ₂) < 0`, principal eigenvalues on `(−h₁, h₁)`.
    pub lambda: f64,
    /// `C` with `Cφᵢ > uᵢ₀`.
    pub c: f64,
    /// Largest `μ₁ + μ₂` for which the construction is valid.
    pub mu_bound: f64,
    /// Largest `max_x wᵢ(t,x) − C e^{λᵢt/2} φᵢ(x)` seen; should be ≤ 0.
    pub envelope_excess: f64,
}

/// Inputs for [`upper_fixture`].
#[derive(Debug, Clone)]
pub struct FixtureSpec<'a> {
    pub grid: Grid,
    pub kernels: [&'a Kernel; 2],
    pub d: [f64; 2],
    pub a: [f64; 2],
    pub mu_total: f64,
    pub h0: f64,
    pub h1: f64,
    pub u0: [&'a [f64]; 2],
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_every: usize,
    pub tol: f64,
}

pub fn upper_fixture(spec: &FixtureSpec) -> UpperFixture {
    let grid = spec.grid;
    let (lo, w) = end_cell_weights(&grid, -spec.h1, spec.h1).expect("nodes inside (-h1, h1)");
    let n = w.len();
    let nodes: Vec<f64> = (0..n).map(|j| grid.x(lo + j)).collect();

    let mut lambdas = [0.0; 2];
    let mut phis = [Vec::new(), Vec::new()];
    let mut stencils = [Vec::new(), Vec::new()];
    for sp in 0..2 {
        let st = unit_stencil(spec.kernels[sp], grid.dx());
        let k = st.len() - 1;
        let jfun = |x: f64| {
            let m = (x.abs() / grid.dx()).round() as usize;
            if m <= k {
                st[m]
            } else {
                0.0
            }
        };
        let (lam, phi) = dense_principal(spec.d[sp], &jfun, &nodes, &w, &vec![spec.a[sp]; n]);
        lambdas[sp] = lam;
        phis[sp] = phi;
        stencils[sp] = st;
    }
    let lambda = lambdas[0].max(lambdas[1]);
    assert!(lambda < 0.0, "principal eigenvalue on (-h1, h1) must be negative");
    let mut c: f64 = 0.0;
    for sp in 0..2 {
        for j in 0..n {
            c = c.max(spec.u0[sp][lo + j] / phis[sp][j]);
        }
    }
    c *= 1.01;
    let mu_bound = -lambda * (spec.h1 - spec.h0) / (4.0 * c * spec.h1);
    let kcoef = 4.0 * spec.mu_total * c * spec.h1 / lambda;
    let r = |t: f64| spec.h0 - kcoef * (1.0 - (0.5 * lambda * t).exp());

    let mut wv = [spec.u0[0][lo..lo + n].to_vec(), spec.u0[1][lo..lo + n].to_vec()];
    let mut points = Vec::with_capacity(spec.n_steps + 1);
    let mut snapshots = Vec::new();
    let mut excess = f64::NEG_INFINITY;
    let record =
        |step: usize, t: f64, wv: &[Vec<f64>; 2], points: &mut Vec<TrajectoryPoint>, snaps: &mut Vec<Snapshot>| {
            let rt = r(t);
            points.push(TrajectoryPoint {
                t,
                g: -rt,
                h: rt,
                gprime: 0.0,
                hprime: 0.0,
                mass1: 0.0,
                mass2: 0.0,
                max1: wv[0].iter().cloned().fold(0.0, f64::max),
                max2: wv[1].iter().cloned().fold(0.0, f64::max),
            });
            if step % spec.snapshot_every == 0 || step == spec.n_steps {
                snaps.push(Snapshot {
                    step,
                    t,
                    g: -rt,
                    h: rt,
                    start: lo,
                    u1: wv[0].clone(),
                    u2: wv[1].clone(),
                });
            }
        };
    record(0, 0.0, &wv, &mut points, &mut snapshots);
    for step in 1..=spec.n_steps {
        let t = step as f64 * spec.dt;
        for sp in 0..2 {
            let old = wv[sp].clone();
            let mut v = old.clone();
            for _ in 0..500 {
                let weighted: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x * y).collect();
                let cv = convolve_window(&stencils[sp], &weighted);
                let next: Vec<f64> = (0..n)
                    .map(|j| old[j] + spec.dt * (spec.d[sp] * (cv[j] - v[j]) + spec.a[sp] * v[j]))
                    .collect();
                let diff = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                v = next;
                if diff < spec.tol {
                    break;
                }
            }
            let env = c * (0.5 * lambdas[sp] * t).exp();
            for j in 0..n {
                excess = excess.max(v[j] - env * phis[sp][j]);
            }
            wv[sp] = v;
        }
        record(step, t, &wv, &mut points, &mut snapshots);
    }
    UpperFixture {
        trajectory: Trajectory {
            grid,
            dt: spec.dt,
            h0: spec.h0,
            mu: [0.5 * spec.mu_total, 0.5 * spec.mu_total],
            bounds: (c, c),
            points,
            steps: Vec::new(),
            snapshots,
            stop: StopReason::FinalTime,
            strictly_positive_kernels: false,
        },
        lambda,
        c,
        mu_bound,
        envelope_excess: excess,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use frontspread::kernel::KernelSpec;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let v = gauss_legendre(&|x| x.powi(9) + 3.0 * x * x, -1.0, 2.0, 1);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn dense_principal_matches_nonsymmetric_spectrum() {
        let k = Kernel::new(KernelSpec::triangular(1.0)).unwrap();
        let n = 65;
        let h = 2.0 / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let weights: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
        let theta = vec![0.5; n];
        let (lam, phi) = dense_principal(1.0, &|x| k.eval(x), &nodes, &weights, &theta);
        let lam2 = dense_spectrum(1.0, &k, 0.0, 2.0, &theta)
            .into_iter()
            .map(|c| c.0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((lam - lam2).abs() < 1e-12);
        assert!((dense_lambda(1.0, &k, 0.0, 2.0, &theta) - lam).abs() < 1e-15);
        assert!(phi.iter().all(|&v| v > 0.0));
    }
}
