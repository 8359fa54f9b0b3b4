//! Spatial discretization on a fixed ambient grid.
//!
//! Densities live on a uniform grid and are extended by zero outside the
//! occupied interval `(g, h)`. The boundaries themselves are continuous
//! scalars, so integrals over `[g, h]` use composite trapezoid weights with
//! fractional end cells: the integrand is taken linear between the last
//! interior node and the boundary, where the density vanishes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::kernel::Kernel;

/// Uniform grid `x_i = (first + i)·dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dx: f64,
    first: i64,
    n: usize,
}

impl Grid {
    /// Grid on `[-L, L]` with `L` rounded up to a multiple of `dx`; node 0 of
    /// the coordinate axis is always a grid node, so the grid is exactly symmetric.
    pub fn symmetric(half_width: f64, dx: f64) -> Self {
        assert!(dx > 0.0 && half_width > 0.0, "bad grid ({half_width}, {dx})");
        let m = (half_width / dx - 1e-9).ceil() as i64;
        Grid {
            dx,
            first: -m,
            n: (2 * m + 1) as usize,
        }
    }

    /// Grid whose first node is `first·dx`.
    pub fn from_index(first: i64, n: usize, dx: f64) -> Self {
        assert!(dx > 0.0 && n >= 2);
        Grid { dx, first, n }
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Index of the node nearest to `x`, clamped into the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let k = (x / self.dx).round() as i64 - self.first;
        k.clamp(0, self.n as i64 - 1) as usize
    }

    /// Inclusive index range of nodes strictly inside `(g, h)`.
    pub fn interior(&self, g: f64, h: f64) -> Option<(usize, usize)> {
        if !(g < h) {
            return None;
        }
        let mut lo = ((g / self.dx).floor() as i64 - self.first).max(0);
        while lo < self.n as i64 && self.x(lo as usize) <= g {
            lo += 1;
        }
        while lo > 0 && self.x(lo as usize - 1) > g {
            lo -= 1;
        }
        let mut hi = ((h / self.dx).ceil() as i64 - self.first).min(self.n as i64 - 1);
        while hi >= 0 && self.x(hi as usize) >= h {
            hi -= 1;
        }
        while hi + 1 < self.n as i64 && self.x(hi as usize + 1) < h {
            hi += 1;
        }
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    /// Trapezoid weights on the interior nodes of `(g, h)`, with fractional end
    /// cells whose outer value is zero. Returns the first interior index and the weights.
    pub fn weights(&self, g: f64, h: f64) -> Option<(usize, Vec<f64>)> {
        let (lo, hi) = self.interior(g, h)?;
        let mut w = vec![self.dx; hi - lo + 1];
        let left = self.x(lo) - g;
        let right = h - self.x(hi);
        if lo == hi {
            w[0] = 0.5 * (left + right);
        } else {
            w[0] = 0.5 * (self.dx + left);
            w[hi - lo] = 0.5 * (self.dx + right);
        }
        Some((lo, w))
    }
}

/// Sampled densities and boundary positions at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl FieldState {
    pub fn range(&self) -> f64 {
        self.h - self.g
    }

    pub fn max1(&self) -> f64 {
        self.u1.iter().copied().fold(0.0, f64::max)
    }

    pub fn max2(&self) -> f64 {
        self.u2.iter().copied().fold(0.0, f64::max)
    }

    /// True when both densities vanish at every node outside `(g, h)`.
    pub fn zero_outside(&self, grid: &Grid) -> bool {
        let inside = grid.interior(self.g, self.h);
        (0..grid.len()).all(|i| {
            let inner = inside.is_some_and(|(lo, hi)| i >= lo && i <= hi);
            inner || (self.u1[i] == 0.0 && self.u2[i] == 0.0)
        })
    }
}

/// Convolution evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolutionMethod {
    Direct,
    Fft,
    /// Direct for short stencils or short windows, transform otherwise.
    #[default]
    Auto,
}

type Spectrum = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>, Arc<Vec<Complex<f64>>>);

/// Discrete convolution with a kernel sampled at the grid spacing.
///
/// The stencil is `s[m] = J(m·dx)`, rescaled so that `dx·Σ_m s[|m|] = 1`;
/// applied to trapezoid-weighted samples `v_j = w_j·u_j` it gives
/// `(J∗u)(x_i) ≈ Σ_j s[|i−j|]·v_j`.
pub struct Convolver {
    half: Vec<f64>,
    dx: f64,
    plans: Mutex<HashMap<usize, Spectrum>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("taps", &self.half.len())
            .field("dx", &self.dx)
            .finish()
    }
}

impl Clone for Convolver {
    fn clone(&self) -> Self {
        Convolver {
            half: self.half.clone(),
            dx: self.dx,
            plans: Mutex::new(HashMap::new()),
        }
    }
}

#[cfg(feature = "parallel")]
const PAR_CHUNK: usize = 256;

impl Convolver {
    pub fn new(kernel: &Kernel, dx: f64) -> Self {
        let mut half = kernel.half_samples(dx);
        while half.len() > 1 && *half.last().unwrap() == 0.0 {
            half.pop();
        }
        let mass = dx * (half[0] + 2.0 * half[1..].iter().sum::<f64>());
        for s in &mut half {
            *s /= mass;
        }
        Convolver {
            half,
            dx,
            plans: Mutex::new(HashMap::new()),
        }
    }

    /// `s[m]` for `m = 0..=K`.
    pub fn stencil(&self) -> &[f64] {
        &self.half
    }

    /// Stencil half-width `K` in nodes.
    pub fn reach(&self) -> usize {
        self.half.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    fn row(&self, v: &[f64], i: usize) -> f64 {
        let k = self.reach();
        let lo = i.saturating_sub(k);
        let hi = (i + k).min(v.len() - 1);
        let mut acc = 0.0;
        for (j, &vj) in v.iter().enumerate().take(hi + 1).skip(lo) {
            acc += self.half[i.abs_diff(j)] * vj;
        }
        acc
    }

    /// Direct summation on one thread; `out` has the length of `v`.
    pub fn direct_seq(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), out.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(v, i);
        }
    }

    /// Direct summation split over rayon workers. Each output row is summed by
    /// one worker in a fixed order, so results match [`Self::direct_seq`] bit for bit.
    #[cfg(feature = "parallel")]
    pub fn direct_par(&self, v: &[f64], out: &mut [f64]) {
        use rayon::prelude::*;
        assert_eq!(v.len(), out.len());
        out.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(c, chunk)| {
            for (r, o) in chunk.iter_mut().enumerate() {
                *o = self.row(v, c * PAR_CHUNK + r);
            }
        });
    }

    /// Direct summation, parallel when the `parallel` feature is on.
    pub fn direct(&self, v: &[f64], out: &mut [f64]) {
        #[cfg(feature = "parallel")]
        {
            if v.len() * self.half.len() > 1 << 15 {
                return self.direct_par(v, out);
            }
        }
        self.direct_seq(v, out)
    }

    fn spectrum(&self, size: usize) -> Spectrum {
        let mut plans = self.plans.lock().expect("fft plan cache poisoned");
        plans
            .entry(size)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let fwd = planner.plan_fft_forward(size);
                let inv = planner.plan_fft_inverse(size);
                let mut b = vec![Complex::new(0.0, 0.0); size];
                for (m, &s) in self.half.iter().enumerate() {
                    b[m].re = s;
                    if m > 0 {
                        b[size - m].re = s;
                    }
                }
                fwd.process(&mut b);
                (fwd, inv, Arc::new(b))
            })
            .clone()
    }

    /// Circular transform with zero padding to a power of two `≥ n + K`.
    pub fn fft(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), out.len());
        let n = v.len();
        let size = (n + self.reach() + 1).next_power_of_two();
        let (fwd, inv, spec) = self.spectrum(size);
        let mut a: Vec<Complex<f64>> = v
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(size)
            .collect();
        fwd.process(&mut a);
        for (x, y) in a.iter_mut().zip(spec.iter()) {
            *x *= *y;
        }
        inv.process(&mut a);
        let scale = 1.0 / size as f64;
        for (o, x) in out.iter_mut().zip(a.iter()) {
            *o = x.re * scale;
        }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64], method: ConvolutionMethod) {
        match method {
            ConvolutionMethod::Direct => self.direct(v, out),
            ConvolutionMethod::Fft => self.fft(v, out),
            ConvolutionMethod::Auto => {
                if self.half.len() > 96 && v.len() > 512 {
                    self.fft(v, out)
                } else {
                    self.direct(v, out)
                }
            }
        }
    }
}

/// `(J∗u)(x_i)` on every node of the grid, with trapezoid weights over the
/// whole ambient interval (half weights at its two ends).
pub fn convolve(grid: &Grid, kernel: &Kernel, u: &[f64], method: ConvolutionMethod) -> Vec<f64> {
    assert_eq!(u.len(), grid.len());
    let conv = Convolver::new(kernel, grid.dx());
    let mut v: Vec<f64> = u.iter().map(|x| x * grid.dx()).collect();
    let n = v.len();
    v[0] *= 0.5;
    v[n - 1] *= 0.5;
    let mut out = vec![0.0; n];
    conv.apply(&v, &mut out, method);
    out
}

/// Trapezoid integral of `u` over `[g, h]`, taking `u(g) = u(h) = 0`.
pub fn domain_integral(grid: &Grid, g: f64, h: f64, u: &[f64]) -> f64 {
    domain_integral_with_ends(grid, g, h, u, (0.0, 0.0))
}

/// Trapezoid integral of `u` over `[g, h]` with explicit boundary values.
pub fn domain_integral_with_ends(grid: &Grid, g: f64, h: f64, u: &[f64], ends: (f64, f64)) -> f64 {
    weighted_integral(grid, g, h, |i| u[i], ends)
}

fn weighted_integral(grid: &Grid, g: f64, h: f64, f: impl Fn(usize) -> f64, ends: (f64, f64)) -> f64 {
    let Some((lo, hi)) = grid.interior(g, h) else {
        return 0.5 * (h - g).max(0.0) * (ends.0 + ends.1);
    };
    let (_, w) = grid.weights(g, h).expect("interior exists");
    let mut acc = 0.0;
    for (k, i) in (lo..=hi).enumerate() {
        acc += w[k] * f(i);
    }
    acc + 0.5 * (grid.x(lo) - g) * ends.0 + 0.5 * (h - grid.x(hi)) * ends.1
}

/// Outward kernel fluxes `(∫ u(x)·T(x−g) dx, ∫ u(x)·T(h−x) dx)` over `[g, h]`,
/// which equal `∫∫ J(x−y)u(x)` over `y < g` and `y > h` respectively.
pub fn boundary_flux(grid: &Grid, kernel: &Kernel, g: f64, h: f64, u: &[f64]) -> (f64, f64) {
    boundary_flux_with_ends(grid, kernel, g, h, u, (0.0, 0.0))
}

pub fn boundary_flux_with_ends(
    grid: &Grid,
    kernel: &Kernel,
    g: f64,
    h: f64,
    u: &[f64],
    ends: (f64, f64),
) -> (f64, f64) {
    let left_ends = (ends.0 * kernel.tail_mass(0.0), ends.1 * kernel.tail_mass(h - g));
    let right_ends = (ends.0 * kernel.tail_mass(h - g), ends.1 * kernel.tail_mass(0.0));
    let left = weighted_integral(grid, g, h, |i| u[i] * kernel.tail_mass(grid.x(i) - g), left_ends);
    let right = weighted_integral(grid, g, h, |i| u[i] * kernel.tail_mass(h - grid.x(i)), right_ends);
    (left, right)
}

/// Both fluxes, skipping nodes farther than the kernel support from the
/// boundary (their tail mass is exactly zero). Weights as in [`Grid::weights`].
pub(crate) fn flux_pair(grid: &Grid, kernel: &Kernel, g: f64, h: f64, lo: usize, w: &[f64], u: &[f64]) -> (f64, f64) {
    let r = kernel.support_radius();
    let hi = lo + w.len() - 1;
    let mut left = 0.0;
    let mut i = lo;
    while i <= hi && grid.x(i) - g < r {
        left += w[i - lo] * u[i] * kernel.tail_mass(grid.x(i) - g);
        i += 1;
    }
    let mut right = 0.0;
    let mut i = hi as i64;
    while i >= lo as i64 && h - grid.x(i as usize) < r {
        let iu = i as usize;
        right += w[iu - lo] * u[iu] * kernel.tail_mass(h - grid.x(iu));
        i -= 1;
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;

    fn tri() -> Kernel {
        Kernel::new(KernelSpec::triangular(1.0)).unwrap()
    }

    #[test]
    fn grid_is_symmetric() {
        let g = Grid::symmetric(3.0, 0.1);
        assert_eq!(g.len(), 61);
        for i in 0..g.len() {
            assert_eq!(g.x(i), -g.x(g.len() - 1 - i));
        }
        assert_eq!(g.x(30), 0.0);
    }

    #[test]
    fn interior_and_weights() {
        let grid = Grid::symmetric(2.0, 0.5);
        // nodes: -2,-1.5,...,2
        assert_eq!(grid.interior(-1.0, 1.0), Some((3, 5)));
        assert_eq!(grid.interior(-1.2, 0.9), Some((2, 5)));
        assert_eq!(grid.interior(0.1, 0.2), None);
        let (lo, w) = grid.weights(-1.2, 0.9).unwrap();
        assert_eq!(lo, 2);
        assert!((w[0] - 0.5 * (0.5 + 0.2)).abs() < 1e-15);
        assert!((w[3] - 0.5 * (0.5 + 0.4)).abs() < 1e-15);
        assert_eq!(&w[1..3], &[0.5, 0.5]);
        let (_, single) = grid.weights(-0.3, 0.2).unwrap();
        assert!((single[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_convolution_is_one() {
        let grid = Grid::symmetric(4.0, 0.05);
        let u = vec![1.0; grid.len()];
        for method in [ConvolutionMethod::Direct, ConvolutionMethod::Fft] {
            let c = convolve(&grid, &tri(), &u, method);
            let mid = grid.nearest(0.0);
            assert!((c[mid] - 1.0).abs() < 1e-8);
            assert!((c[grid.nearest(2.5)] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn unit_node_gives_kernel_column() {
        let grid = Grid::symmetric(3.0, 0.1);
        let mut u = vec![0.0; grid.len()];
        let mid = grid.nearest(0.0);
        u[mid] = 1.0;
        let c = convolve(&grid, &tri(), &u, ConvolutionMethod::Direct);
        // Direct summation oracle: dx·J(x_i)/(dx·Σ J(m dx)).
        let stencil_mass: f64 = (-10..=10).map(|m| 0.1 * (1.0 - (m as f64 * 0.1).abs())).sum();
        for i in 0..grid.len() {
            let expect = 0.1 * tri().eval(grid.x(i)) / stencil_mass;
            assert!((c[i] - expect).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn integral_examples() {
        let grid = Grid::symmetric(3.0, 0.01);
        let zero = vec![0.0; grid.len()];
        assert_eq!(domain_integral(&grid, -1.0, 1.0, &zero), 0.0);
        let ones = vec![1.0; grid.len()];
        let v = domain_integral_with_ends(&grid, -1.0, 1.0, &ones, (1.0, 1.0));
        assert!((v - 2.0).abs() < 1e-12);
        let v = domain_integral_with_ends(&grid, -1.0037, 0.9921, &ones, (1.0, 1.0));
        assert!((v - (0.9921 + 1.0037)).abs() < 1e-12);
    }

    #[test]
    fn bump_integral_converges_at_second_order() {
        // Off-grid boundaries, bump vanishing linearly at both ends.
        let (g, h) = (-1.013, 0.987);
        let f = |x: f64| ((x - g) * (h - x)).max(0.0) * (1.0 + 0.3 * x).exp();
        // Exact value by high-order Gauss-Legendre on [g, h] (classic 5-point, 200 panels).
        let nodes = [
            (0.0, 128.0 / 225.0),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let panels = 200;
        let ph = (h - g) / panels as f64;
        let mut exact = 0.0;
        for p in 0..panels {
            let c = g + (p as f64 + 0.5) * ph;
            for (t, w) in nodes {
                exact += 0.5 * ph * w * f(c + 0.5 * ph * t);
            }
        }
        let err = |dx: f64| {
            let grid = Grid::symmetric(2.0, dx);
            let u: Vec<f64> = grid.nodes().map(f).collect();
            (domain_integral(&grid, g, h, &u) - exact).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn flux_examples() {
        let grid = Grid::symmetric(3.0, 0.01);
        let k = tri();
        let zero = vec![0.0; grid.len()];
        assert_eq!(boundary_flux(&grid, &k, -1.0, 1.0, &zero), (0.0, 0.0));
        let even: Vec<f64> = grid.nodes().map(|x| (1.0 - x * x).max(0.0)).collect();
        let (l, r) = boundary_flux(&grid, &k, -1.0, 1.0, &even);
        assert!((l - r).abs() < 1e-10);
        let ones = vec![1.0; grid.len()];
        let (_, r) = boundary_flux_with_ends(&grid, &k, -1.0, 1.0, &ones, (1.0, 1.0));
        assert!((r - 1.0 / 6.0).abs() < 1e-5, "{r}");
    }

    #[test]
    fn flux_pair_matches_full_quadrature() {
        let grid = Grid::symmetric(6.0, 0.05);
        let k = tri();
        let (g, h) = (-3.21, 2.87);
        let u: Vec<f64> = grid
            .nodes()
            .map(|x| {
                if x > g && x < h {
                    1.0 + 0.5 * (2.0 * x).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let (lo, w) = grid.weights(g, h).unwrap();
        let fast = flux_pair(&grid, &k, g, h, lo, &w, &u);
        let full = boundary_flux(&grid, &k, g, h, &u);
        assert!((fast.0 - full.0).abs() < 1e-14 && (fast.1 - full.1).abs() < 1e-14);
    }
}
