//! Descent to block shape: eigenvalue-one projectors, reduction of
//! topologically semisimple elements to the shape with trivial middle row
//! and column, norms inside the unitary group, conjugator lifting, and the
//! matching of the two descent sets.
//!
//! Vectors are columns in the standard basis `e_{-n}, ..., e_n` of `E^N`
//! (index `i` is `e_{i-n}`); on the second copy `V'` index `i` is
//! `f_{n-i}`. With that indexing the pairing `<a, b>` of `a in V` with
//! `b in V'` is `b^* J a`, and the hermitian form of the unitary group is
//! `<a, b> = b^* J a` on `V` itself.

mod group;
mod lift;
mod matching;
mod reduce;

pub use group::{
    embed_outer, find_norm_in_h, find_residue_conjugator, in_residue_group, lift_to_kmh, outer_block,
    outer_unitary_residues, prime_to_p, random_block_residues, residue_conjugacy_suite, residue_group,
    ResidueSuiteReport, NORM_SEARCH_CAP, NORM_SEARCH_SEED,
};
pub use lift::{conjugator_lift, plain_start, twisted_start, ConjugacyPair, LiftOutcome};
pub use matching::{
    match_classes, IWitness, JWitness, MatchOptions, Probes, Relations, WitnessReport, REPORT_SCHEMA_VERSION,
};
pub(crate) use reduce::conjugate_level;
pub use reduce::{block_reduce_h, block_reduce_twisted, eigen_projector, RhoSpace, TwistedReduction};
