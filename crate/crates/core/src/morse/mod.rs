//! Exact combinatorics of the Poincaré polynomial of the collision-free
//! sphere, the lower bounds derived from it and a Morse-inequality check
//! for computed censuses.

mod bounds;
mod coeffs;
mod integral;

pub use bounds::{
    betti_quotient, bounds_general, bounds_main1, morse_inequality_check, morse_remainder, BettiReport, BoundEntry,
    BoundsReport, MorseCheck, Regime,
};
pub use coeffs::{
    coefficient_identity_suite, factorial, h, harmonic, poincare_coeffs, xi_coeffs, IdentityReport, IdentityRow,
    PoincareTable, RatioSequence, XiTable, EULER_GAMMA,
};
pub use integral::{a_sequence, iterated_log_integral, iterated_log_integral_with, LogIntegral};

/// Big integers are written as decimal strings so that JSON consumers never round them.
pub(crate) mod big {
    use num_bigint::BigInt;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn one<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn opt<S: Serializer>(x: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn vec<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }
}
