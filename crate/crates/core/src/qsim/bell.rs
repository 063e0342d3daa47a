use std::f64::consts::FRAC_1_SQRT_2;

use super::{PureState, RandomSource, C64};
use crate::{Error, Result};

/// Bell state `index` (1..=4) on qubits `first`, `second`:
/// `Φ₁,₂ = (|00⟩ ± |11⟩)/√2`, `Φ₃,₄ = (|01⟩ ± |10⟩)/√2`. `Φ₄` is the singlet.
pub fn bell_state_on(index: usize, first: &str, second: &str) -> Result<PureState> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    let amps = match index {
        1 => vec![h, z, z, h],
        2 => vec![h, z, z, -h],
        3 => vec![z, h, h, z],
        4 => vec![z, h, -h, z],
        _ => return Err(Error::BellIndex(index)),
    };
    PureState::new(&[first, second], amps)
}

/// [`bell_state_on`] with labels `q0`, `q1`.
pub fn bell_state(index: usize) -> Result<PureState> {
    bell_state_on(index, "q0", "q1")
}

/// `|Ψ₋⟩ = (|01⟩ − |10⟩)/√2`.
pub fn singlet_on(first: &str, second: &str) -> PureState {
    bell_state_on(4, first, second).expect("index 4 is valid")
}

/// Haar-random state: independent standard complex Gaussians, normalized.
pub fn haar_random_on<S: AsRef<str>>(labels: &[S], rng: &mut RandomSource) -> Result<PureState> {
    let dim = 1usize << labels.len().min(super::MAX_QUBITS + 1);
    let amps: Vec<C64> = (0..dim).map(|_| rng.complex_normal()).collect();
    PureState::normalized(labels, amps)
}

/// Haar-random state on qubits `q0 .. q{n-1}`.
pub fn haar_random_pure(n_qubits: usize, rng: &mut RandomSource) -> Result<PureState> {
    if n_qubits == 0 || n_qubits > super::MAX_QUBITS {
        return Err(Error::QubitCount(n_qubits));
    }
    let labels: Vec<String> = (0..n_qubits).map(|i| format!("q{i}")).collect();
    haar_random_on(&labels, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnbm::{correction_unitaries, OutcomeLabel};
    use crate::qsim::{kron, CMatrix};

    #[test]
    fn bell_one_amplitudes() {
        let b = bell_state(1).unwrap();
        assert!((b.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b.amplitude(3).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(bell_state(0), Err(Error::BellIndex(0))));
        assert!(matches!(bell_state(5), Err(Error::BellIndex(5))));
    }

    #[test]
    fn bell_basis_orthonormal() {
        for i in 1..=4 {
            for j in 1..=4 {
                let ip = bell_state(i)
                    .unwrap()
                    .inner(&bell_state(j).unwrap())
                    .unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn corrections_flip_singlet_sign() {
        let s = singlet_on("a", "B");
        let v = nalgebra::DVector::from_column_slice(s.amplitudes());
        for o in OutcomeLabel::all() {
            let (ua, ub) = correction_unitaries(o);
            let u: CMatrix = kron(&ua, &ub);
            let out = &u * &v;
            for k in 0..4 {
                assert!((out[k] + v[k]).norm() < 1e-15, "outcome {o}");
            }
        }
    }

    #[test]
    fn haar_is_normalized_and_seeded() {
        let mut a = RandomSource::new(5);
        let mut b = RandomSource::new(5);
        for n in 1..=5 {
            let s = haar_random_pure(n, &mut a).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            assert_eq!(s, haar_random_pure(n, &mut b).unwrap());
        }
        assert!(haar_random_pure(6, &mut a).is_err());
    }

    #[test]
    fn haar_first_moment() {
        // E|<φ|ψ>|² = 1/2^n; n = 2 gives 1/4.
        let mut rng = RandomSource::new(2024);
        let phi = PureState::basis(&["q0", "q1"], 2).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                phi.inner(&haar_random_pure(2, &mut rng).unwrap())
                    .unwrap()
                    .norm_sqr()
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.25).abs() < 3.0 * se, "mean {mean} se {se}");
    }
}
