//! Zero-knowledge identification over the general linear group GL(d, F_p).
//!
//! Security rests on the generalized symmetric decomposition problem: given
//! `x`, `y` and `(m, n)`, find `z` in a commutative subgroup with
//! `y = z^m * x * z^n`. Private keys are conjugated diagonals `P D P^-1`
//! sharing one public `P`, so any two keys commute.
//!
//! Modules, bottom-up:
//!
//! - [`field`]: prime-field arithmetic
//! - [`poly`], [`matrix`]: polynomials and dense matrices over F_p
//! - [`keys`]: parameters, key pairs, keyspace estimates, key files
//! - [`protocol`]: rounds, sessions, the simulator, forgery experiments
//! - [`gsdp`]: exhaustive GSDP solver for toy parameters
//! - [`wire`]: bit-exact matrix and frame encodings
//! - [`netauth`]: TCP verifier server and prover client (feature `net`)
//!
//! This is a research prototype. Arithmetic is not constant-time, and the
//! seeded RNG paths used by tests and demos are not suitable for real keys.

pub mod field;
pub mod gsdp;
pub mod keys;
pub mod matrix;
#[cfg(feature = "net")]
pub mod netauth;
pub mod poly;
pub mod protocol;
pub mod wire;

pub use field::{FieldElement, FieldError, PrimeModulus};
pub use gsdp::{attack_recover_key, gsdp_solve_bruteforce, GsdpError, GsdpInstance, GsdpSolutionSet};
pub use keys::{
    derive_public, gen_keypair, gen_params, keyspace_cardinality, Fingerprint, KeyError, KeyspaceReport, ParamSet,
    PrivateKey, PublicKey,
};
pub use matrix::{DiagonalSpec, Matrix, MatrixError};
pub use poly::Polynomial;
pub use protocol::{
    mallory_forge, session_run, simulate_transcript, ChallengeBit, ProtocolError, Prover, RoundRecord, SessionConfig,
    SessionVerdict, Verifier,
};
pub use wire::{Message, MessageType, WireError};
