//! Qubit and mode names used throughout the protocol code.

/// Input qubit whose state is teleported.
pub const INPUT: &str = "A";
/// Alice's half of the shared singlet.
pub const PAIR: &str = "a";
/// Bob's half of the shared singlet.
pub const BOB: &str = "B";
pub const ANC1: &str = "anc1";
pub const ANC2: &str = "anc2";

/// Canonical global ordering.
pub const ALL: [&str; 5] = [INPUT, PAIR, BOB, ANC1, ANC2];
