use fermi_lab::ensembles::{
    canonical_log_z, canonical_log_z_bruteforce, grand_canonical_consistency_check, grand_log_xi, ThermoParams,
};
use fermi_lab::spectrum::{compute_spectrum, compute_spectrum_on, TOL_EIG};
use fermi_lab::{Grid, PotentialSpec, Spectrum};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn potential() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        Just(PotentialSpec::Zero),
        (-3.0..3.0f64).prop_map(|a| PotentialSpec::Constant { amplitude: a }),
        (0.0..3.0f64, 0.2..4.0f64).prop_map(|(a, p)| PotentialSpec::cosine(a, p)),
        (-3.0..3.0f64, 0.0..0.5f64, 0.5..1.0f64).prop_map(|(a, lo, hi)| PotentialSpec::square_well(a, lo, hi)),
        prop::collection::vec(-2.0..2.0f64, 2..8).prop_map(|vals| {
            let last = (vals.len() - 1) as f64;
            PotentialSpec::tabulated(vals.iter().enumerate().map(|(i, &v)| (i as f64 / last, v)).collect()).unwrap()
        }),
    ]
}

fn sorted_levels(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..15.0f64, 1..=max_len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_bounded_by_sup_norm(spec in potential(), lambda in 0.5..50.0f64, u in 0.0..=1.0f64) {
        let v = spec.evaluate(u * lambda, lambda).unwrap();
        prop_assert!(v.abs() <= spec.sup_norm());
    }

    #[test]
    fn dp_matches_bruteforce(levels in sorted_levels(12), beta in 0.05..4.0f64, n_pick in 0usize..6) {
        let n = 1 + n_pick % levels.len().min(6);
        let s = Spectrum::from_levels(levels.clone()).unwrap();
        let dp = canonical_log_z(&s, n, &ThermoParams::new(beta, 0.0).unwrap()).unwrap().log_z;
        let brute = canonical_log_z_bruteforce(&levels, n, beta).unwrap();
        prop_assert!((dp - brute).abs() <= 1e-12 * brute.abs().max(1.0), "{dp} vs {brute}");
    }

    #[test]
    fn cross_ensemble_identity(levels in sorted_levels(20), beta in 0.1..3.0f64, mu in -5.0..20.0f64) {
        let s = Spectrum::from_levels(levels).unwrap();
        let d = grand_canonical_consistency_check(&s, &ThermoParams::new(beta, mu).unwrap()).unwrap();
        prop_assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn log_xi_convex_in_mu(levels in sorted_levels(20), beta in 0.1..3.0f64, mu in -5.0..20.0f64, h in 0.01..2.0f64) {
        let s = Spectrum::from_levels(levels).unwrap();
        let f = |m: f64| grand_log_xi(&s, &ThermoParams::new(beta, m).unwrap()).unwrap().log_xi;
        let (a, b, c) = (f(mu - h), f(mu), f(mu + h));
        prop_assert!(a + c - 2.0 * b >= -1e-12 * b.abs().max(1.0));
        prop_assert!(a <= b && b <= c);
    }

    #[test]
    fn levels_monotone_in_potential(a in 0.0..2.0f64, extra in 0.0..1.0f64, lambda in 1.0..8.0f64) {
        // pointwise V1 ≤ V2 lifts every level
        let low = PotentialSpec::square_well(a, 0.2, 0.6);
        let high = PotentialSpec::square_well(a + extra, 0.2, 0.6);
        let s1 = compute_spectrum(&low, lambda, 400, 20).unwrap();
        let s2 = compute_spectrum(&high, lambda, 400, 20).unwrap();
        for (e1, e2) in s1.eigenvalues().iter().zip(s2.eigenvalues()) {
            prop_assert!(*e1 <= e2 + 2.0 * TOL_EIG);
        }
        let p = ThermoParams::new(1.0, 0.0).unwrap();
        let z1 = canonical_log_z(&s1, 5, &p).unwrap().log_z;
        let z2 = canonical_log_z(&s2, 5, &p).unwrap().log_z;
        prop_assert!(z1 >= z2 - 1e-9);
    }

    #[test]
    fn grand_sandwich(spec in potential(), lambda in 1.0..8.0f64, mu in 5.0..60.0f64, beta in 0.2..2.0f64) {
        let grid = Grid::new(lambda, 300).unwrap();
        let sv = compute_spectrum_on(&spec, &grid, 60, Default::default()).unwrap();
        let s0 = compute_spectrum_on(&PotentialSpec::Zero, &grid, 60, Default::default()).unwrap();
        let c = spec.sup_norm() + 2.0 * TOL_EIG;
        let p = ThermoParams::new(beta, mu).unwrap();
        let xi = |s: &Spectrum, m: f64| grand_log_xi(s, &p.with_mu(m).unwrap()).unwrap().log_xi;
        let v = xi(&sv, mu);
        prop_assert!(xi(&s0, mu - c) <= v + 1e-12 && v <= xi(&s0, mu + c) + 1e-12);
    }

    #[test]
    fn eigenvalues_shift_by_constant(c in -3.0..3.0f64, lambda in 1.0..10.0f64) {
        let s0 = compute_spectrum(&PotentialSpec::Zero, lambda, 300, 30).unwrap();
        let sc = compute_spectrum(&PotentialSpec::Constant { amplitude: c }, lambda, 300, 30).unwrap();
        for (a, b) in s0.eigenvalues().iter().zip(sc.eigenvalues()) {
            prop_assert!((b - a - c).abs() <= 2.0 * TOL_EIG + 1e-12 * b.abs());
        }
    }
}

#[test]
fn random_spectra_dp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.gen_range(1..=12);
        let n = rng.gen_range(1..=m.min(6));
        let beta = rng.gen_range(0.1..3.0);
        let mut levels: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..10.0)).collect();
        levels.sort_by(f64::total_cmp);
        let s = Spectrum::from_levels(levels.clone()).unwrap();
        let dp = canonical_log_z(&s, n, &ThermoParams::new(beta, 0.0).unwrap())
            .unwrap()
            .log_z;
        let brute = canonical_log_z_bruteforce(&levels, n, beta).unwrap();
        worst = worst.max((dp - brute).abs() / brute.abs().max(1e-300));
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn free_log_z_per_particle_decreases_with_density() {
    let p = ThermoParams::new(1.0, 0.0).unwrap();
    let mut prev = f64::INFINITY;
    for m in 4..=8usize {
        let lambda = m as f64;
        let n = m * m;
        let s = compute_spectrum(&PotentialSpec::Zero, lambda, 4000, n + 40).unwrap();
        let r = canonical_log_z(&s, n, &p).unwrap();
        let per_n = r.log_z / n as f64;
        assert!(per_n < prev, "m={m}");
        prev = per_n;
    }
}
