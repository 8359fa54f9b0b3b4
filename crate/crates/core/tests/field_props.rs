use frontspread::field::{boundary_flux, convolve, domain_integral, ConvolutionMethod, Convolver, Grid};
use frontspread::kernel::{Kernel, KernelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_obeys_max_principle(seed in any::<u64>(), sigma in 0.3f64..2.0) {
        let grid = Grid::symmetric(6.0, 0.05);
        let k = Kernel::new(KernelSpec::triangular(sigma)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let top = u.iter().cloned().fold(0.0, f64::max);
        for method in [ConvolutionMethod::Direct, ConvolutionMethod::Fft] {
            let c = convolve(&grid, &k, &u, method);
            prop_assert!(c.iter().all(|&v| v <= top + 1e-12 && v >= -1e-14));
        }
    }

    #[test]
    fn integral_is_monotone(seed in any::<u64>(), g in -3.0f64..-0.5, h in 0.5f64..3.0) {
        let grid = Grid::symmetric(5.0, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let v: Vec<f64> = u.iter().map(|x| x + rng.gen_range(0.0..0.5)).collect();
        prop_assert!(domain_integral(&grid, g, h, &u) <= domain_integral(&grid, g, h, &v));
        let (l1, r1) = boundary_flux(&grid, &Kernel::new(KernelSpec::triangular(1.0)).unwrap(), g, h, &u);
        let (l2, r2) = boundary_flux(&grid, &Kernel::new(KernelSpec::triangular(1.0)).unwrap(), g, h, &v);
        prop_assert!(l1 <= l2 && r1 <= r2);
    }
}

#[test]
fn fft_matches_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (sigma, dx) in [(1.0, 0.01), (2.5, 0.005), (0.3, 0.05)] {
        let k = Kernel::new(KernelSpec::gaussian(sigma, 8.0)).unwrap();
        let conv = Convolver::new(&k, dx);
        let v: Vec<f64> = (0..3000).map(|_| rng.gen_range(0.0..1.0) * dx).collect();
        let mut a = vec![0.0; v.len()];
        let mut b = vec![0.0; v.len()];
        conv.apply(&v, &mut a, ConvolutionMethod::Direct);
        conv.apply(&v, &mut b, ConvolutionMethod::Fft);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-10, "sigma {sigma}, dx {dx}: {diff:e}");
    }
}

#[test]
fn direct_paths_are_bitwise_equal() {
    let k = Kernel::new(KernelSpec::triangular(1.0)).unwrap();
    let conv = Convolver::new(&k, 0.01);
    let v: Vec<f64> = (0..5000).map(|i| ((i as f64) * 0.37).sin().abs() * 0.01).collect();
    let mut a = vec![0.0; v.len()];
    let mut b = vec![0.0; v.len()];
    conv.direct_seq(&v, &mut a);
    conv.direct(&v, &mut b);
    assert_eq!(a, b);
}

#[test]
fn convolution_matches_brute_force() {
    let grid = Grid::symmetric(4.0, 0.02);
    let k = Kernel::new(KernelSpec::triangular(1.0)).unwrap();
    let u: Vec<f64> = grid.nodes().map(|x| (-x * x).exp()).collect();
    let fast = convolve(&grid, &k, &u, ConvolutionMethod::Auto);
    let slow = frontspread_oracle::brute_convolution(&grid, &k, &u);
    let diff = fast.iter().zip(&slow).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff:e}");
}

#[test]
fn flux_matches_double_integral() {
    let k = Kernel::new(KernelSpec::triangular(1.0)).unwrap();
    let (g, h) = (-1.3, 0.9);
    let u = |x: f64| (x - g) * (h - x);
    let exact = frontspread_oracle::flux_double_integral(&k, g, h, &u, 200);
    let mut prev = f64::INFINITY;
    for dx in [0.02, 0.01, 0.005] {
        let grid = Grid::symmetric(4.0, dx);
        let samples: Vec<f64> = grid.nodes().map(|x| if x > g && x < h { u(x) } else { 0.0 }).collect();
        let kk = Kernel::with_table_spacing(KernelSpec::triangular(1.0), Some(dx), &Default::default()).unwrap();
        let (l, r) = boundary_flux(&grid, &kk, g, h, &samples);
        let err = (l - exact.0).abs().max((r - exact.1).abs());
        assert!(err < 4e-4 * dx / 0.02 * dx / 0.02 + 1e-9, "dx {dx}: {err:e}");
        assert!(err < prev);
        prev = err;
    }
}
