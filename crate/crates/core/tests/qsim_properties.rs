use pnbm_core::qsim::{
    gates, haar_random_on, haar_random_pure, measure_computational, outcome_probabilities, CMatrix,
    GateOp, PureState, RandomSource,
};
use proptest::prelude::*;

fn random_unitary(dim: usize, rng: &mut RandomSource) -> CMatrix {
    let m = CMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column phases so the result is Haar distributed
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        let d = r[(i, i)];
        d / d.norm()
    }));
    q * phases
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unitaries_preserve_norm(seed in any::<u64>(), n in 1usize..=5, two in any::<bool>()) {
        let mut rng = RandomSource::new(seed);
        let state = haar_random_pure(n, &mut rng).unwrap();
        let names = labels(n);
        let k = if two && n >= 2 { 2 } else { 1 };
        let first = (rng.uniform() * n as f64) as usize % n;
        let targets: Vec<&str> = (0..k).map(|j| names[(first + j) % n].as_str()).collect();
        let gate = GateOp::new("u", random_unitary(1 << k, &mut rng), &targets).unwrap();
        let out = state.apply(&gate).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), n1 in 1usize..=2, n2 in 1usize..=3) {
        let mut rng = RandomSource::new(seed);
        let l1: Vec<String> = (0..n1).map(|i| format!("s{i}")).collect();
        let l2: Vec<String> = (0..n2).map(|i| format!("t{i}")).collect();
        let s1 = haar_random_on(&l1, &mut rng).unwrap();
        let s2 = haar_random_on(&l2, &mut rng).unwrap();
        let rho = s1.tensor(&s2).unwrap().partial_trace(&l1).unwrap();
        let want = s1.to_density();
        let diff = (rho.matrix() - want.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn branch_probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..=5, k in 1usize..=5) {
        let mut rng = RandomSource::new(seed);
        let state = haar_random_pure(n, &mut rng).unwrap();
        let names = labels(n);
        let qubits: Vec<&str> = names.iter().take(k.min(n)).map(String::as_str).collect();
        let total: f64 = outcome_probabilities(&state, &qubits).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reorder_round_trip(seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let s = haar_random_on(&["x", "y", "z"], &mut rng).unwrap();
        let back = s.reorder(&["z", "x", "y"]).unwrap().reorder(&["x", "y", "z"]).unwrap();
        prop_assert_eq!(s, back);
    }
}

#[test]
fn sampled_frequencies_match_probabilities() {
    let mut rng = RandomSource::new(3);
    let state = haar_random_pure(3, &mut rng).unwrap();
    let probs = outcome_probabilities(&state, &["q0", "q2"]).unwrap();
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        let m = measure_computational(&state, &["q0", "q2"], None, &mut rng).unwrap();
        counts[(m.bits[0] * 2 + m.bits[1]) as usize] += 1;
    }
    for (c, p) in counts.iter().zip(&probs) {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((*c as f64 / n as f64 - p).abs() < 4.0 * sigma + 1e-12);
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[test]
fn haar_fidelity_distribution_is_unitarily_invariant() {
    let n = 10_000;
    let mut rng = RandomSource::new(17);
    let u = GateOp::new("u", random_unitary(4, &mut rng), &["q0", "q1"]).unwrap();
    let reference = PureState::basis(&["q0", "q1"], 0).unwrap();
    let fid = |s: &PureState| s.overlap(&reference).unwrap().powi(2);
    let mut plain_rng = rng.derive(1);
    let mut rotated_rng = rng.derive(2);
    let plain: Vec<f64> = (0..n)
        .map(|_| fid(&haar_random_pure(2, &mut plain_rng).unwrap()))
        .collect();
    let rotated: Vec<f64> = (0..n)
        .map(|_| {
            fid(&haar_random_pure(2, &mut rotated_rng)
                .unwrap()
                .apply(&u)
                .unwrap())
        })
        .collect();
    let d = ks_statistic(plain, rotated);
    // 1% critical value
    let crit = 1.628 * ((2 * n) as f64 / (n * n) as f64).sqrt();
    assert!(d < crit, "KS statistic {d} vs {crit}");
}

#[test]
fn ks_statistic_detects_a_shift() {
    let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
    let b: Vec<f64> = a.iter().map(|x| x + 0.2).collect();
    assert!((ks_statistic(a.clone(), b) - 0.2).abs() < 0.01);
    assert_eq!(ks_statistic(a.clone(), a), 0.0);
}

#[test]
fn gate_library_is_unitary() {
    for g in [
        gates::hadamard("q"),
        gates::pauli_x("q"),
        gates::pauli_y("q"),
        gates::pauli_z("q"),
    ] {
        assert!(pnbm_core::qsim::unitarity_residual(g.matrix()) < 1e-15);
    }
}
