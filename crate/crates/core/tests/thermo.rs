use gibbs_inverse::estimators::{pair_correlation_estimate, Binning, CorrelationEstimate};
use gibbs_inverse::gcmc::{run, ChainSpec};
use gibbs_inverse::oracle::{Oracle, QuadratureSpec};
use gibbs_inverse::thermo::{
    henderson_cross_check, oracle_report, specific_energy, specific_energy_finite_volume, variational_gap,
};
use gibbs_inverse::{BoxSpec, PairPotential};

fn oracle(half: f64, beta: f64, mu: f64, u: PairPotential) -> Oracle {
    Oracle::new(BoxSpec::free_1d(half), beta, mu, u, QuadratureSpec { points_per_axis: 800, ..QuadratureSpec::default() })
        .unwrap()
}

fn sampled(u: &PairPotential, seed: u64) -> CorrelationEstimate {
    let spec = ChainSpec::new(BoxSpec::periodic_1d(3.0), 1.0, 0.0, u.clone(), 400_000, 20_000, 10, seed);
    pair_correlation_estimate(&run(&spec).unwrap(), Binning::new(30, 1.5).unwrap(), u.hard_core_radius()).unwrap()
}

#[test]
fn ideal_grand_potential_is_z_over_beta() {
    for (beta, mu, half) in [(1.0, 0.0, 1.0), (2.0, -0.3, 0.75), (0.5, 1.0, 0.5)] {
        let o = oracle(half, beta, mu, PairPotential::ideal());
        let r = oracle_report(&o, None).unwrap();
        let expect = o.activity() / beta;
        assert!((r.omega - expect).abs() <= r.omega_err.max(1e-9), "β = {beta}: Ω = {} ± {}", r.omega, r.omega_err);
        let p = r.pressure.unwrap();
        assert!((p - expect).abs() <= r.pressure_err.unwrap().max(1e-9));
        assert!(r.identity_defect() < 1e-14);
        assert!(r.finite_volume_proxy);
    }
}

#[test]
fn own_measure_has_zero_gap_and_foreign_ones_do_not() {
    let beta = 1.0;
    let mu = 0.0;
    let u = PairPotential::hard_core(0.5, None).unwrap();
    let v = PairPotential::hard_core(0.8, None).unwrap();
    let ou = oracle(1.25, beta, mu, u.clone());
    let p_u = ou.pressure().unwrap();
    let own = oracle_report(&ou, None).unwrap();
    let g = variational_gap((p_u.value, p_u.error), &own, beta, mu).unwrap();
    assert!(g.gap.abs() <= 3.0 * g.sigma, "{g:?}");

    let trial = oracle_report(&oracle(1.25, beta, mu, v), Some(&u)).unwrap();
    let g = variational_gap((p_u.value, p_u.error), &trial, beta, mu).unwrap();
    assert!(g.significance() > 3.0, "{g:?}");

    assert!(variational_gap((p_u.value, p_u.error), &trial, beta, mu + 0.1).is_err());
}

#[test]
fn henderson_sum_cancels_for_identical_tables_and_equal_potentials() {
    let u = PairPotential::square_well(0.5, 1.0, 0.9).unwrap();
    let v = PairPotential::square_well(0.5, 0.5, 1.2).unwrap();
    let t = sampled(&u, 1);
    let t2 = sampled(&u, 2);
    let h = henderson_cross_check(&u, &v, &t, &t).unwrap();
    assert!(h.relative() <= 1e-12, "{h:?}");
    let h = henderson_cross_check(&u, &u, &t, &t2).unwrap();
    assert!(h.relative() <= 1e-12, "{h:?}");
    let tv = sampled(&v, 3);
    let h = henderson_cross_check(&u, &v, &t, &tv).unwrap();
    assert!(h.sum.abs() > 3.0 * h.sigma, "{h:?}");
    let other = pair_correlation_estimate(
        &run(&ChainSpec::new(BoxSpec::periodic_1d(3.0), 1.0, 0.0, u.clone(), 20_000, 2_000, 10, 4)).unwrap(),
        Binning::new(10, 1.5).unwrap(),
        0.5,
    )
    .unwrap();
    assert!(henderson_cross_check(&u, &v, &t, &other).is_err());
}

#[test]
fn pair_table_energy_matches_direct_average() {
    let u = PairPotential::square_well(0.5, 1.0, 0.9).unwrap();
    let spec = ChainSpec::new(BoxSpec::periodic_1d(3.0), 1.0, 0.0, u.clone(), 1_000_000, 50_000, 10, 9);
    let s = run(&spec).unwrap();
    // bins aligned with the well edges so the midpoint rule is exact
    let est = pair_correlation_estimate(&s, Binning::new(30, 1.5).unwrap(), 0.5).unwrap();
    let table = specific_energy(&u, &est, None, 0.0).unwrap();
    let (direct, sigma) = specific_energy_finite_volume(&s, &u, None).unwrap();
    assert!(table.value < 0.0);
    assert!((table.value - direct).abs() <= 3.0 * (sigma.powi(2) + table.sigma.powi(2)).sqrt(), "{table:?} vs {direct} ± {sigma}");
}
