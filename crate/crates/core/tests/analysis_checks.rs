use frontspread::analysis::{classify, coexistence_limit, verify_limit, ClassifyTolerances, Verdict};
use frontspread::evolver::{initialize_profiles, Problem, Profile, Simulation, SolverConfig};
use frontspread::field::Grid;
use frontspread::growth::{GrowthModel, LvParams, Regime};
use frontspread::kernel::{Kernel, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn coexistence_positive_iff_weak_regime() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let a = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        let b = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        let c = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let p = LvParams::new(a, b, c);
        let comp = GrowthModel::competition(p).unwrap();
        let pos = |m: &GrowthModel| coexistence_limit(m).map(|(u, v)| u > 0.0 && v > 0.0);
        // Weak competition is exactly positivity of both numerators with a positive denominator.
        let num_pos = a.0 * b.1 > a.1 * c.0 && a.1 * b.0 > a.0 * c.1;
        assert_eq!(comp.regime() == Regime::WeakCompetition, num_pos);
        if num_pos {
            assert!(pos(&comp).unwrap());
        } else {
            assert!(coexistence_limit(&comp).is_err());
        }
        let pred = GrowthModel::predator_prey(p).unwrap();
        let weak = a.0 * b.0 * b.1 > a.1 * b.0 * c.0 + a.0 * c.0 * c.1;
        assert_eq!(pred.regime() == Regime::WeakPredation, weak);
        if weak {
            assert!(pos(&pred).unwrap());
        }
    }
}

#[test]
fn truncated_run_is_undetermined_and_limit_check_refuses() {
    let dx = 0.01;
    let k = Kernel::with_table_spacing(KernelSpec::triangular(1.0), Some(dx), &Default::default()).unwrap();
    let model = GrowthModel::competition(LvParams::new((0.5, 0.5), (1.0, 1.0), (0.5, 0.5))).unwrap();
    let grid = Grid::symmetric(4.0, dx);
    let p = Profile::Cosine { amplitude: 0.5 };
    let state = initialize_profiles(&grid, 0.2, &p, &p).unwrap();
    let problem = Problem {
        grid,
        model: model.clone(),
        kernels: [k.clone(), k],
        d: [1.0, 1.0],
        mu: [0.01, 0.01],
    };
    let cfg = SolverConfig {
        t_final: 1.0,
        ..Default::default()
    };
    let traj = Simulation::new(problem, cfg, state).unwrap().run().unwrap();
    let c = classify(&traj, Some(0.63), &ClassifyTolerances::default());
    assert_eq!(c.verdict, Verdict::Undetermined);
    assert!(c.notes.iter().any(|n| n.contains("extend t_final")));
    assert!(verify_limit(&traj, &c, &model, 0.1, None).is_err());
}

#[test]
fn limit_probe_outside_is_rejected() {
    let dx = 0.05;
    let k = Kernel::with_table_spacing(KernelSpec::triangular(1.0), Some(dx), &Default::default()).unwrap();
    let model = GrowthModel::competition(LvParams::new((1.0, 1.0), (1.0, 1.0), (0.5, 0.5))).unwrap();
    let grid = Grid::symmetric(12.0, dx);
    let p = Profile::Cosine { amplitude: 0.5 };
    let state = initialize_profiles(&grid, 2.0, &p, &p).unwrap();
    let problem = Problem {
        grid,
        model: model.clone(),
        kernels: [k.clone(), k],
        d: [1.0, 1.0],
        mu: [1.0, 1.0],
    };
    let cfg = SolverConfig {
        t_final: 20.0,
        snapshot_every: 10,
        ..Default::default()
    };
    let traj = Simulation::new(problem, cfg, state).unwrap().run().unwrap();
    let c = classify(&traj, None, &ClassifyTolerances::default());
    assert_eq!(c.verdict, Verdict::Spreading);
    assert!(verify_limit(&traj, &c, &model, 0.1, Some(&[50.0])).is_err());
    let rep = verify_limit(&traj, &c, &model, 0.1, None).unwrap();
    assert_eq!(rep.probes.len(), 3);
}
