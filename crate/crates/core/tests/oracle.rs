use gibbs_inverse::oracle::{janossy_series, Oracle, QuadratureSpec};
use gibbs_inverse::{BoxSpec, Error, PairPotential};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Σ_N z^N (L - (N-1)a)_+^N / N!
fn tonks_xi(z: f64, side: f64, a: f64) -> f64 {
    let mut s = 1.0;
    for n in 1..200 {
        let free = side - (n as f64 - 1.0) * a;
        if free <= 0.0 {
            break;
        }
        s += z.powi(n as i32) * free.powi(n as i32) / factorial(n);
    }
    s
}

fn rods(a: f64, half: f64, mu: f64) -> Oracle {
    let quad = QuadratureSpec { points_per_axis: 800, ..QuadratureSpec::default() };
    Oracle::new(BoxSpec::free_1d(half), 1.0, mu, PairPotential::hard_core(a, None).unwrap(), quad).unwrap()
}

#[test]
fn tonks_closed_form_for_several_diameters() {
    for (a, half, mu) in [(1.0, 2.0, 0.0), (0.7, 1.5, 0.3), (0.45, 1.0, -0.5)] {
        let o = rods(a, half, mu);
        let gp = o.grand_partition().unwrap();
        let exact = tonks_xi(o.activity(), 2.0 * half, a);
        assert!((gp.xi - exact).abs() <= gp.error_bound, "a = {a}: {} vs {exact} ± {}", gp.xi, gp.error_bound);
        assert!(gp.error_bound < 1e-3 * exact);
    }
}

#[test]
fn single_particle_density_integrates_to_mean_count() {
    let o = rods(1.0, 2.0, 0.0);
    let gp = o.grand_partition().unwrap();
    let n = 16;
    let h = 4.0 / n as f64;
    let integral: f64 = (0..n)
        .map(|i| {
            let x = -2.0 + (i as f64 + 0.5) * h;
            o.correlation(&[[x, 0.0, 0.0]]).unwrap().value * h
        })
        .sum();
    // midpoint rule on a smooth-by-parts profile; loose on purpose
    assert!((integral - gp.mean_count()).abs() < 0.05 * gp.mean_count(), "{integral} vs {}", gp.mean_count());
}

#[test]
fn pair_correlation_is_symmetric_and_vanishes_in_core() {
    let o = rods(1.0, 2.0, 0.0);
    let x = [-0.8, 0.0, 0.0];
    let y = [0.6, 0.0, 0.0];
    let a = o.correlation(&[x, y]).unwrap();
    let b = o.correlation(&[y, x]).unwrap();
    assert_eq!(a.value, b.value);
    assert!(a.value > 0.0);
    let inside = o.correlation(&[x, [-0.3, 0.0, 0.0]]).unwrap();
    assert_eq!(inside.value, 0.0);
}

#[test]
fn janossy_series_agrees_with_direct_formula_for_rods() {
    let o = rods(1.0, 2.0, 0.0);
    let gp = o.grand_partition().unwrap();
    let xi = o.ruelle_fit(20).unwrap();
    for pts in [vec![[0.1, 0.0, 0.0]], vec![[-1.5, 0.0, 0.0], [0.2, 0.0, 0.0]], vec![[-1.9, 0.0, 0.0], [-0.5, 0.0, 0.0], [1.2, 0.0, 0.0]]] {
        let bounded = o.correlation_moments(&pts).unwrap();
        let moments: Vec<f64> = bounded.iter().map(|b| b.value).collect();
        let series = janossy_series(pts.len(), &moments, xi, o.volume(), 1e-8, moments.len() - 1).unwrap();
        let direct = o.janossy_direct(&pts).unwrap();
        let tol = 1e-6 + direct.error + bounded.iter().map(|m| m.error).sum::<f64>();
        assert!((series.value - direct.value).abs() <= tol, "{pts:?}: {} vs {}", series.value, direct.value);
    }
    let table = o.janossy_table().unwrap();
    assert!(table.normalization_defect() < 1e-6);
    assert!(gp.truncation.tail_bound == 0.0, "rods fit at most five per box");
}

#[test]
fn periodic_box_is_refused() {
    let e = Oracle::new(BoxSpec::periodic_1d(2.0), 1.0, 0.0, PairPotential::ideal(), QuadratureSpec::default());
    assert!(matches!(e, Err(Error::Precondition(_))));
}

#[test]
fn error_bound_shrinks_with_resolution() {
    let sw = PairPotential::square_well(0.5, 1.0, 0.9).unwrap();
    let mut last = f64::INFINITY;
    for pts in [100, 200, 400] {
        let quad = QuadratureSpec { points_per_axis: pts, ..QuadratureSpec::default() };
        let o = Oracle::new(BoxSpec::free_1d(1.0), 1.0, 0.0, sw.clone(), quad).unwrap();
        let gp = o.grand_partition().unwrap();
        assert!(gp.quadrature_error < last);
        last = gp.quadrature_error;
    }
}
