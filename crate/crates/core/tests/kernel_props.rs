use frontspread::kernel::{Kernel, KernelSpec};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.2f64..3.0).prop_map(KernelSpec::triangular),
        (0.2f64..2.0, 4.0f64..9.0).prop_map(|(s, c)| KernelSpec::gaussian(s, c)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_is_symmetric_and_monotone(spec in family(), z in 0.0f64..5.0, dz in 0.0f64..1.0) {
        let k = Kernel::new(spec).unwrap();
        prop_assert!((k.tail_mass(z) + k.tail_mass(-z) - 1.0).abs() < 1e-12);
        prop_assert!(k.tail_mass(z + dz) <= k.tail_mass(z) + 1e-15);
        prop_assert!(k.tail_mass(z) >= 0.0 && k.tail_mass(z) <= 0.5 + 1e-15);
    }

    #[test]
    fn kernel_is_even_and_nonnegative(spec in family(), x in -6.0f64..6.0) {
        let k = Kernel::new(spec).unwrap();
        prop_assert_eq!(k.eval(x), k.eval(-x));
        prop_assert!(k.eval(x) >= 0.0);
        prop_assert!(k.eval(x) <= k.eval(0.0));
    }
}

#[test]
fn tail_matches_quadrature_of_density() {
    for spec in [KernelSpec::triangular(1.3), KernelSpec::gaussian(0.7, 8.0)] {
        let k = Kernel::new(spec).unwrap();
        let r = k.support_radius();
        for z in [0.0, 0.1, 0.37, 0.9, 1.2] {
            let q = frontspread_oracle::gauss_legendre(&|s| k.eval(s), z, r.max(z), 400);
            assert!((k.tail_mass(z) - q).abs() < 1e-9, "z = {z}: {} vs {q}", k.tail_mass(z));
        }
    }
}

#[test]
fn csv_kernel_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let mut text = String::from("x,J\n");
    for m in -10..=10 {
        let x = m as f64 * 0.1;
        text.push_str(&format!("{x},{}\n", 1.0 - x.abs()));
    }
    std::fs::write(&path, text).unwrap();
    let k = Kernel::new(KernelSpec::from_csv(&path).unwrap()).unwrap();
    assert!(k.report().passed());
    assert!((k.eval(0.25) - 0.75).abs() < 1e-12);
    assert!((k.tail_mass(0.5) - 0.125).abs() < 1e-9);
}
