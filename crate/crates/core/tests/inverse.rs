use gibbs_inverse::estimators::{pair_correlation_estimate, rdf, Binning, RdfCurve};
use gibbs_inverse::gcmc::{run_replicas, ChainSpec};
use gibbs_inverse::inverse::{invert, pmf_initial_guess, uniqueness_experiment, SolverConfig};
use gibbs_inverse::{BoxSpec, Energy, PairPotential};

fn base(u: PairPotential, steps: u64, seed: u64) -> ChainSpec {
    let mut s = ChainSpec::new(BoxSpec::periodic_1d(4.0), 1.0, 0.0, u, steps, steps / 20, 20, seed);
    s.max_displacement = 0.5;
    s
}

fn target(u: &PairPotential, binning: Binning) -> RdfCurve {
    let samples = run_replicas(&base(u.clone(), 400_000, 99), 2, 2).unwrap();
    rdf(&pair_correlation_estimate(&samples, binning, u.hard_core_radius()).unwrap()).unwrap()
}

#[test]
fn square_well_target_is_recovered_roughly() {
    let truth = PairPotential::square_well(0.5, 0.5, 1.0).unwrap();
    let binning = Binning::new(20, 2.0).unwrap();
    let g = target(&truth, binning);
    let solver = SolverConfig { max_iters: 15, alpha: 0.5, ..SolverConfig::default() };
    let inv = invert(&g, &base(PairPotential::ideal(), 200_000, 0), &solver, 5, 2).unwrap();
    assert!(inv.best_linf < inv.history[0].linf || inv.best_iteration == 0);
    let u = inv.best.to_potential().unwrap();
    assert!((u.hard_core_radius() - 0.5).abs() < 1e-12, "core {}", u.hard_core_radius());
    assert_eq!(u.energy(0.3), Energy::Infinite);
    let well = u.energy(0.75).finite().unwrap();
    assert!(well < -0.2, "well depth {well}");
    let beyond = u.energy(1.6).finite().unwrap();
    assert!(beyond.abs() < 0.2, "tail {beyond}");
}

#[test]
fn same_master_seed_gives_identical_iterates() {
    let truth = PairPotential::hard_core(0.5, None).unwrap();
    let binning = Binning::new(20, 2.0).unwrap();
    let g = target(&truth, binning);
    let solver = SolverConfig { max_iters: 3, tolerance: Some(1e-9), ..SolverConfig::default() };
    let b = base(PairPotential::ideal(), 40_000, 0);
    let a = invert(&g, &b, &solver, 17, 1).unwrap();
    let c = invert(&g, &b, &solver, 17, 1).unwrap();
    assert_eq!(a, c);
    assert_eq!(a.history.len(), 3);
    let d = invert(&g, &b, &solver, 18, 1).unwrap();
    assert_ne!(a.history[0].seed, d.history[0].seed);
}

#[test]
fn inverted_potential_round_trips_through_csv() {
    let truth = PairPotential::hard_core(0.5, None).unwrap();
    let g = target(&truth, Binning::new(20, 2.0).unwrap());
    let s = pmf_initial_guess(&g, 1.0).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,u,frozen_flag"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1], "inf");
    assert_eq!(first[2], "1");
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn rods_of_different_diameter_are_told_apart() {
    let u = PairPotential::hard_core(0.5, None).unwrap();
    let v = PairPotential::hard_core(1.0, None).unwrap();
    let rep = uniqueness_experiment(&u, &v, &base(u.clone(), 200_000, 4), Binning::new(20, 2.0).unwrap(), 2, 2).unwrap();
    assert!(rep.max_significance > 5.0);
    assert!(!rep.inconclusive);
    // u samples pairs inside v's core, so the four-term sum is undefined
    assert!(rep.henderson.is_none() && rep.henderson_note.is_some());
}
