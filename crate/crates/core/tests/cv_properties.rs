use pnbm_core::cv::{build_cv_protocol, qnd_gate, CvConfig, Mode, Outcome, QuadFrame};
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(Mode::ALL.to_vec())
}

proptest! {
    #[test]
    fn random_qnd_sequences_keep_commutators(
        steps in prop::collection::vec((mode(), mode(), -3.0f64..3.0), 1..12)
    ) {
        let mut frame = QuadFrame::identity();
        for (c, t, k) in steps {
            if c == t {
                prop_assert!(qnd_gate(&frame, c, t, k).is_err());
                continue;
            }
            frame = qnd_gate(&frame, c, t, k).unwrap();
        }
        prop_assert!(frame.commutator_residual() < 1e-12);
    }

    #[test]
    fn outputs_carry_no_outcome_terms(kappa in 0.05f64..20.0, r in 0.0f64..5.0) {
        let p = build_cv_protocol(CvConfig::new(kappa, r).unwrap()).unwrap();
        for m in [Mode::Input, Mode::Pair, Mode::Bob] {
            let (x, q) = p.output(m).unwrap();
            for o in [Outcome::XU, Outcome::PV] {
                prop_assert!(x.offset(o).abs() < 1e-15 && q.offset(o).abs() < 1e-15);
            }
        }
    }
}
