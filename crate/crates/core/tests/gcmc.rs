use gibbs_inverse::gcmc::{run, run_replicas, ChainSpec};
use gibbs_inverse::oracle::{Oracle, QuadratureSpec};
use gibbs_inverse::{BoxSpec, PairPotential};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

fn ideal(steps: u64, thin: u64, seed: u64) -> ChainSpec {
    ChainSpec::new(BoxSpec::free_1d(2.0), 1.0, 0.0, PairPotential::ideal(), steps, steps / 20, thin, seed)
}

#[test]
fn ideal_count_histogram_is_poisson() {
    let s = run(&ideal(6_000_000, 50, 11)).unwrap();
    assert!(s.len() >= 100_000);
    let counts = s.counts();
    let nmax = 12;
    let mut hist = vec![0.0; nmax + 1];
    for c in counts {
        hist[(c as usize).min(nmax)] += 1.0;
    }
    let law = Poisson::new(4.0).unwrap();
    let total = s.len() as f64;
    let mut chi2 = 0.0;
    for (n, &obs) in hist.iter().enumerate() {
        let p = if n < nmax { law.pmf(n as u64) } else { 1.0 - (0..nmax as u64).map(|k| law.pmf(k)).sum::<f64>() };
        let exp = p * total;
        chi2 += (obs - exp).powi(2) / exp;
    }
    let p_value = 1.0 - ChiSquared::new(nmax as f64).unwrap().cdf(chi2);
    assert!(p_value > 0.01, "χ² = {chi2}, p = {p_value}");
}

#[test]
fn insertion_acceptance_matches_formula_per_count() {
    let s = run(&ideal(2_000_000, 10, 3)).unwrap();
    let zv = 4.0;
    let mut checked = 0;
    for (n, t) in s.meta.insert_by_n.iter().enumerate() {
        if t.attempted < 2000 {
            continue;
        }
        let p = (zv / (n as f64 + 1.0)).min(1.0);
        let sigma = (p * (1.0 - p) / t.attempted as f64).sqrt().max(1e-12);
        assert!((t.rate() - p).abs() <= 4.0 * sigma + 1e-12, "N = {n}: {} vs {p}", t.rate());
        checked += 1;
    }
    assert!(checked >= 6);
}

#[test]
fn free_walls_leave_ideal_density_flat() {
    let s = run(&ideal(2_000_000, 20, 5)).unwrap();
    let bins = 10;
    let width = 4.0 / bins as f64;
    for b in 0..bins {
        let lo = -2.0 + b as f64 * width;
        let est = s.block_estimate(|i| s.frames[i].iter().filter(|p| p[0] >= lo && p[0] < lo + width).count() as f64 / width);
        assert!((est.mean - 1.0).abs() <= 3.0 * est.sigma, "bin {b}: {} ± {}", est.mean, est.sigma);
    }
}

#[test]
fn hard_rods_match_oracle_mean_count() {
    let rods = PairPotential::hard_core(1.0, None).unwrap();
    let spec = ChainSpec::new(BoxSpec::free_1d(2.0), 1.0, 0.0, rods.clone(), 1_000_000, 50_000, 10, 21);
    let s = run(&spec).unwrap();
    let est = s.mean_count();
    let o = Oracle::new(BoxSpec::free_1d(2.0), 1.0, 0.0, rods, QuadratureSpec::default()).unwrap();
    let n = o.mean_count_fd(1e-4).unwrap();
    assert!((est.mean - n.value).abs() <= 3.0 * est.sigma + n.error, "{} ± {} vs {}", est.mean, est.sigma, n.value);
    assert!(s.meta.max_resync_drift < 1e-8);
}

#[test]
fn steps_equal_burn_in_gives_empty_set() {
    let mut spec = ideal(1000, 1, 1);
    spec.burn_in = 1000;
    let s = run(&spec).unwrap();
    assert!(s.is_empty());
    assert_eq!(s.meta.generator, "ChaCha8Rng");
    assert_eq!(s.meta.seed, 1);
}

#[test]
fn replicas_do_not_depend_on_worker_count() {
    let spec = ChainSpec::new(
        BoxSpec::periodic_1d(3.0),
        1.0,
        0.2,
        PairPotential::square_well(0.5, 0.5, 0.8).unwrap(),
        50_000,
        5_000,
        10,
        77,
    );
    let a = run_replicas(&spec, 4, 1).unwrap();
    let b = run_replicas(&spec, 4, 4).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.energies, b.energies);
    assert_eq!(a.block_ends.len(), 4 * spec.blocks);
    assert_eq!(a.meta.streams, vec![0, 1, 2, 3]);
}
