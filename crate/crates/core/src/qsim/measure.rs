use super::{position_of, qubit_mask, PureState, RandomSource, C64};
use crate::{Error, Result};

/// Smallest probability an outcome may have and still be forced.
const FORCE_FLOOR: f64 = 1e-14;

/// Result of a computational-basis readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// One bit per measured qubit, in the order they were requested.
    pub bits: Vec<u8>,
    pub probability: f64,
    /// Renormalized state of the unmeasured qubits, `None` if nothing is left.
    pub collapsed: Option<PureState>,
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter()
        .map(|b| if *b == 0 { '0' } else { '1' })
        .collect()
}

fn outcome_bits(index: usize, k: usize) -> Vec<u8> {
    (0..k).map(|t| ((index >> (k - 1 - t)) & 1) as u8).collect()
}

fn resolve(state: &PureState, qubits: &[&str]) -> Result<Vec<usize>> {
    let mut pos = Vec::with_capacity(qubits.len());
    for q in qubits {
        let p = position_of(state.labels(), q)?;
        if pos.contains(&p) {
            return Err(Error::DuplicateLabel(q.to_string()));
        }
        pos.push(p);
    }
    if pos.is_empty() {
        return Err(Error::TooFew {
            what: "measured qubits",
            min: 1,
            got: 0,
        });
    }
    Ok(pos)
}

/// Local outcome index (first listed qubit = MSB) of a full-register index.
fn local_index(n: usize, positions: &[usize], full: usize) -> usize {
    positions.iter().fold(0, |acc, &q| {
        (acc << 1) | usize::from(full & qubit_mask(n, q) != 0)
    })
}

/// Exact outcome distribution, indexed by the measured bit string read as a
/// binary number.
pub fn outcome_probabilities(state: &PureState, qubits: &[&str]) -> Result<Vec<f64>> {
    let pos = resolve(state, qubits)?;
    let n = state.n_qubits();
    let mut p = vec![0.0; 1 << pos.len()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        p[local_index(n, &pos, i)] += a.norm_sqr();
    }
    Ok(p)
}

/// Projective measurement of `qubits` in the computational basis. Measured
/// qubits are removed from the returned state. With `forced` the given bits
/// are post-selected; otherwise the outcome is drawn from `rng`.
pub fn measure_computational(
    state: &PureState,
    qubits: &[&str],
    forced: Option<&[u8]>,
    rng: &mut RandomSource,
) -> Result<Measurement> {
    let pos = resolve(state, qubits)?;
    let probs = outcome_probabilities(state, qubits)?;
    let k = pos.len();
    let outcome = match forced {
        Some(bits) => {
            if bits.len() != k || bits.iter().any(|b| *b > 1) {
                return Err(Error::InvalidOutcome(format!("{bits:?}")));
            }
            let idx = bits.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize);
            if probs[idx] <= FORCE_FLOOR {
                return Err(Error::ImpossibleOutcome {
                    outcome: bits_to_string(bits),
                    probability: probs[idx],
                });
            }
            idx
        }
        None => sample(&probs, rng.uniform()),
    };
    let probability = probs[outcome];

    let n = state.n_qubits();
    let rest: Vec<usize> = (0..n).filter(|q| !pos.contains(q)).collect();
    let collapsed = if rest.is_empty() {
        None
    } else {
        let norm = probability.sqrt();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << rest.len()];
        for (i, a) in state.amplitudes().iter().enumerate() {
            if local_index(n, &pos, i) == outcome {
                amps[local_index(n, &rest, i)] = a / norm;
            }
        }
        let labels = rest.iter().map(|&q| state.labels()[q].clone()).collect();
        Some(PureState::from_parts(labels, amps))
    };
    Ok(Measurement {
        bits: outcome_bits(outcome, k),
        probability,
        collapsed,
    })
}

/// Inverse-CDF draw; never returns a zero-probability index.
fn sample(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        last = i;
        acc += p;
        if target < acc {
            return i;
        }
    }
    last
}
