//! The interactive identification protocol.
//!
//! One round between a prover holding `A` and a verifier holding `B`:
//!
//! 1. witness:   `S = A^k * G_B * A^-m` for a fresh `k`
//! 2. challenge: bit `b`; `Q = B^m * H * B^n` for random `H` when `b = 0`,
//!    `Q = B^m * S * G_A * B^n` when `b = 1`
//! 3. response:  `R = S^-m * Q * S^-n` when `b = 0`,
//!    `R = A^-k * Q * A^-n` when `b = 1`
//! 4. verify:    `Q == S^m * R * S^n` when `b = 0`,
//!    `G_B * G == B^-m * R * B^-n` when `b = 1`
//!
//! The `b = 0` branch can be answered by anyone; only the `b = 1` branch needs
//! the private key, so a cheating prover survives each round with probability
//! one half. A session repeats the round `t` times and accepts only if every
//! round verifies.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keys::{check_fingerprint, derive_public, KeyError, ParamSet, PrivateKey, PublicKey};
use crate::matrix::{sample_invertible, Matrix, MatrixError};
use crate::wire::{matrix_from_hex, matrix_to_hex, WireError};

pub const DEFAULT_ROUNDS: usize = 20;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("witness matrix is singular")]
    SingularWitness,
    #[error("challenge matrix is singular")]
    SingularChallenge,
    #[error("response matrix is singular")]
    SingularResponse,
    #[error("challenge bit 0 requires a mask matrix")]
    MissingMask,
    #[error("session needs at least one round")]
    NoRounds,
    #[error("invalid transcript: {0}")]
    BadTranscript(String),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<serde_json::Error> for ProtocolError {
    fn from(e: serde_json::Error) -> Self {
        Self::BadTranscript(e.to_string())
    }
}

/// The verifier's challenge bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChallengeBit {
    /// Consistency check against the witness; answerable without the key.
    Zero,
    /// Forces use of the private key.
    One,
}

impl ChallengeBit {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.gen::<bool>() {
            Self::One
        } else {
            Self::Zero
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Self::Zero => 0,
            Self::One => 1,
        }
    }

    pub fn from_u8(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Zero),
            1 => Some(Self::One),
            _ => None,
        }
    }
}

/// Prover-side state kept between sending a witness and answering its challenge.
#[derive(Debug, Clone)]
pub struct ProverRoundState {
    k: u64,
    witness: Matrix,
    witness_inv: Matrix,
    a_neg_k: Matrix,
    s_neg_m: Matrix,
    s_neg_n: Matrix,
}

impl ProverRoundState {
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn witness(&self) -> &Matrix {
        &self.witness
    }

    pub fn witness_inverse(&self) -> &Matrix {
        &self.witness_inv
    }
}

/// A prover bound to one verifier's public key.
#[derive(Debug, Clone)]
pub struct Prover {
    params: ParamSet,
    key: PrivateKey,
    verifier_public: Matrix,
    a_neg_m: Matrix,
    a_neg_n: Matrix,
}

impl Prover {
    pub fn new(params: &ParamSet, key: &PrivateKey, verifier_pub: &PublicKey) -> Result<Self, ProtocolError> {
        check_fingerprint(params.fingerprint(), key.params_fingerprint())?;
        check_fingerprint(params.fingerprint(), verifier_pub.params_fingerprint())?;
        Ok(Self {
            a_neg_m: key.pow(-params.m_signed()),
            a_neg_n: key.pow(-params.n_signed()),
            params: params.clone(),
            key: key.clone(),
            verifier_public: verifier_pub.matrix().clone(),
        })
    }

    /// Fresh witness with `k` drawn uniformly from `[1, exponent_bound]`.
    pub fn witness<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(ProverRoundState, Matrix), ProtocolError> {
        let k = rng.gen_range(1..=self.params.exponent_bound());
        self.witness_with_exponent(k)
    }

    /// Deterministic witness for a caller-chosen `k`.
    pub fn witness_with_exponent(&self, k: u64) -> Result<(ProverRoundState, Matrix), ProtocolError> {
        let k = k.min(i64::MAX as u64);
        let s = self.key.pow(k as i64).mul(&self.verifier_public)?.mul(&self.a_neg_m)?;
        let s_inv = s.inv().map_err(|_| ProtocolError::SingularWitness)?;
        let state = ProverRoundState {
            k,
            a_neg_k: self.key.pow(-(k as i64)),
            s_neg_m: s_inv.pow_unsigned(self.params.m()),
            s_neg_n: s_inv.pow_unsigned(self.params.n()),
            witness_inv: s_inv,
            witness: s.clone(),
        };
        Ok((state, s))
    }

    /// Answers a challenge; the branch depends only on the received bit.
    pub fn respond(
        &self,
        state: &ProverRoundState,
        bit: ChallengeBit,
        question: &Matrix,
    ) -> Result<Matrix, ProtocolError> {
        if !question.is_invertible() {
            return Err(ProtocolError::SingularChallenge);
        }
        let r = match bit {
            ChallengeBit::Zero => state.s_neg_m.mul(question)?.mul(&state.s_neg_n)?,
            ChallengeBit::One => state.a_neg_k.mul(question)?.mul(&self.a_neg_n)?,
        };
        Ok(r)
    }
}

/// Verifier-side state for one round.
#[derive(Debug, Clone)]
pub struct VerifierRoundState {
    bit: ChallengeBit,
    question: Matrix,
    h_mask: Option<Matrix>,
    witness: Matrix,
    target: Matrix,
}

impl VerifierRoundState {
    pub fn bit(&self) -> ChallengeBit {
        self.bit
    }

    pub fn question(&self) -> &Matrix {
        &self.question
    }

    /// The mask `H` behind a `b = 0` question, when it was retained.
    pub fn h_mask(&self) -> Option<&Matrix> {
        self.h_mask.as_ref()
    }

    pub fn witness(&self) -> &Matrix {
        &self.witness
    }

    /// `G_B * G`.
    pub fn target(&self) -> &Matrix {
        &self.target
    }
}

/// A verifier bound to one prover's public key.
#[derive(Debug, Clone)]
pub struct Verifier {
    params: ParamSet,
    prover_public: Matrix,
    b_m: Matrix,
    b_n: Matrix,
    b_neg_m: Matrix,
    b_neg_n: Matrix,
    target: Matrix,
}

impl Verifier {
    pub fn new(params: &ParamSet, key: &PrivateKey, prover_pub: &PublicKey) -> Result<Self, ProtocolError> {
        check_fingerprint(params.fingerprint(), prover_pub.params_fingerprint())?;
        let own_public = derive_public(params, key)?;
        Ok(Self {
            params: params.clone(),
            prover_public: prover_pub.matrix().clone(),
            b_m: key.pow(params.m_signed()),
            b_n: key.pow(params.n_signed()),
            b_neg_m: key.pow(-params.m_signed()),
            b_neg_n: key.pow(-params.n_signed()),
            target: own_public.matrix().mul(params.base())?,
        })
    }

    /// `G_B * G`, the value every honest `b = 1` response maps to.
    pub fn target(&self) -> &Matrix {
        &self.target
    }

    pub fn challenge<R: Rng + ?Sized>(
        &self,
        witness: &Matrix,
        rng: &mut R,
    ) -> Result<VerifierRoundState, ProtocolError> {
        let bit = ChallengeBit::random(rng);
        self.challenge_inner(witness, bit, None, false, rng)
    }

    /// Like [`Verifier::challenge`] but keeps the `b = 0` mask for auditing.
    pub fn challenge_audited<R: Rng + ?Sized>(
        &self,
        witness: &Matrix,
        rng: &mut R,
    ) -> Result<VerifierRoundState, ProtocolError> {
        let bit = ChallengeBit::random(rng);
        self.challenge_inner(witness, bit, None, true, rng)
    }

    /// Challenge with a forced bit and optionally a forced mask `H`.
    pub fn challenge_fixed<R: Rng + ?Sized>(
        &self,
        witness: &Matrix,
        bit: ChallengeBit,
        mask: Option<&Matrix>,
        rng: &mut R,
    ) -> Result<VerifierRoundState, ProtocolError> {
        self.challenge_inner(witness, bit, mask.cloned(), true, rng)
    }

    fn challenge_inner<R: Rng + ?Sized>(
        &self,
        witness: &Matrix,
        bit: ChallengeBit,
        mask: Option<Matrix>,
        audit: bool,
        rng: &mut R,
    ) -> Result<VerifierRoundState, ProtocolError> {
        if witness.dim() != self.params.dim() || witness.modulus() != self.params.modulus() || !witness.is_invertible()
        {
            return Err(ProtocolError::SingularWitness);
        }
        let (question, h_mask) = match bit {
            ChallengeBit::Zero => {
                let h = match mask {
                    Some(h) => h,
                    None => sample_invertible(self.params.modulus(), self.params.dim(), rng),
                };
                let q = self.b_m.mul(&h)?.mul(&self.b_n)?;
                (q, audit.then_some(h))
            }
            ChallengeBit::One => {
                let q = Matrix::product([&self.b_m, witness, &self.prover_public, &self.b_n])?;
                (q, None)
            }
        };
        if !question.is_invertible() {
            return Err(ProtocolError::SingularChallenge);
        }
        Ok(VerifierRoundState {
            bit,
            question,
            h_mask,
            witness: witness.clone(),
            target: self.target.clone(),
        })
    }

    /// `B^-m * R * B^-n`.
    pub fn residual(&self, response: &Matrix) -> Result<Matrix, ProtocolError> {
        Ok(Matrix::product([&self.b_neg_m, response, &self.b_neg_n])?)
    }

    /// The per-round acceptance predicate on a raw `(S, Q, b, R)` tuple.
    pub fn check(
        &self,
        bit: ChallengeBit,
        witness: &Matrix,
        question: &Matrix,
        response: &Matrix,
    ) -> Result<bool, ProtocolError> {
        if response.dim() != self.params.dim()
            || response.modulus() != self.params.modulus()
            || !response.is_invertible()
        {
            return Err(ProtocolError::SingularResponse);
        }
        Ok(match bit {
            ChallengeBit::Zero => {
                let s_m = witness.pow_unsigned(self.params.m());
                let s_n = witness.pow_unsigned(self.params.n());
                *question == Matrix::product([&s_m, response, &s_n])?
            }
            ChallengeBit::One => self.target == self.residual(response)?,
        })
    }

    pub fn verify(&self, state: &VerifierRoundState, response: &Matrix) -> Result<bool, ProtocolError> {
        self.check(state.bit, &state.witness, &state.question, response)
    }

    /// Re-checks a recorded round; singular matrices count as a failure.
    pub fn check_record(&self, record: &RoundRecord) -> bool {
        self.check(record.bit, &record.witness, &record.question, &record.response)
            .unwrap_or(false)
    }
}

/// One round's `(S, Q, b, R)` tuple plus the verifier's verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub round_index: usize,
    pub witness: Matrix,
    pub question: Matrix,
    pub bit: ChallengeBit,
    pub response: Matrix,
    pub verdict: bool,
}

/// On-disk transcript line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub round: usize,
    #[serde(rename = "S")]
    pub witness: String,
    pub b: u8,
    #[serde(rename = "Q")]
    pub question: String,
    #[serde(rename = "R")]
    pub response: String,
    pub verdict: bool,
}

impl RoundRecord {
    pub fn to_line(&self) -> TranscriptLine {
        TranscriptLine {
            round: self.round_index,
            witness: matrix_to_hex(&self.witness),
            b: self.bit.as_u8(),
            question: matrix_to_hex(&self.question),
            response: matrix_to_hex(&self.response),
            verdict: self.verdict,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_line()).expect("transcript line serializes")
    }

    pub fn from_line(params: &ParamSet, line: &TranscriptLine) -> Result<Self, ProtocolError> {
        let decode = |s: &str| matrix_from_hex(s, params.dim(), params.modulus());
        Ok(Self {
            round_index: line.round,
            witness: decode(&line.witness)?,
            bit: ChallengeBit::from_u8(line.b)
                .ok_or_else(|| ProtocolError::BadTranscript(format!("bit {}", line.b)))?,
            question: decode(&line.question)?,
            response: decode(&line.response)?,
            verdict: line.verdict,
        })
    }
}

pub fn write_transcript<W: Write>(mut out: W, records: &[RoundRecord]) -> io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json_line())?;
    }
    Ok(())
}

pub fn save_transcript(path: &Path, records: &[RoundRecord]) -> Result<(), ProtocolError> {
    let mut buf = Vec::new();
    write_transcript(&mut buf, records)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_transcript<R: BufRead>(params: &ParamSet, input: R) -> Result<Vec<RoundRecord>, ProtocolError> {
    input
        .lines()
        .filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true))
        .map(|line| {
            let line: TranscriptLine = serde_json::from_str(&line?)?;
            RoundRecord::from_line(params, &line)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    pub rounds: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self { rounds: DEFAULT_ROUNDS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionVerdict {
    pub accepted: bool,
    pub rounds_passed: usize,
    pub records: Vec<RoundRecord>,
}

impl SessionVerdict {
    pub fn from_records(records: Vec<RoundRecord>) -> Self {
        let rounds_passed = records.iter().filter(|r| r.verdict).count();
        Self {
            accepted: !records.is_empty() && rounds_passed == records.len(),
            rounds_passed,
            records,
        }
    }
}

/// Generates a witness for one round. See [`Prover::witness`].
pub fn witness_create<R: Rng + ?Sized>(
    key: &PrivateKey,
    verifier_pub: &PublicKey,
    params: &ParamSet,
    rng: &mut R,
) -> Result<(ProverRoundState, Matrix), ProtocolError> {
    Prover::new(params, key, verifier_pub)?.witness(rng)
}

pub fn challenge_create<R: Rng + ?Sized>(
    verifier_key: &PrivateKey,
    witness: &Matrix,
    prover_pub: &PublicKey,
    params: &ParamSet,
    rng: &mut R,
) -> Result<VerifierRoundState, ProtocolError> {
    Verifier::new(params, verifier_key, prover_pub)?.challenge(witness, rng)
}

pub fn response_create(
    state: &ProverRoundState,
    bit: ChallengeBit,
    question: &Matrix,
    key: &PrivateKey,
    params: &ParamSet,
) -> Result<Matrix, ProtocolError> {
    check_fingerprint(params.fingerprint(), key.params_fingerprint())?;
    if !question.is_invertible() {
        return Err(ProtocolError::SingularChallenge);
    }
    Ok(match bit {
        ChallengeBit::Zero => state.s_neg_m.mul(question)?.mul(&state.s_neg_n)?,
        ChallengeBit::One => state.a_neg_k.mul(question)?.mul(&key.pow(-params.n_signed()))?,
    })
}

pub fn round_verify(
    state: &VerifierRoundState,
    response: &Matrix,
    verifier_key: &PrivateKey,
    params: &ParamSet,
) -> Result<bool, ProtocolError> {
    check_fingerprint(params.fingerprint(), verifier_key.params_fingerprint())?;
    if !response.is_invertible() {
        return Err(ProtocolError::SingularResponse);
    }
    Ok(match state.bit {
        ChallengeBit::Zero => {
            let s_m = state.witness.pow_unsigned(params.m());
            let s_n = state.witness.pow_unsigned(params.n());
            state.question == Matrix::product([&s_m, response, &s_n])?
        }
        ChallengeBit::One => {
            let lhs = Matrix::product([
                &verifier_key.pow(-params.m_signed()),
                response,
                &verifier_key.pow(-params.n_signed()),
            ])?;
            state.target == lhs
        }
    })
}

/// Runs `cfg.rounds` complete rounds in-process.
///
/// The prover answers with `prover_key`; pairing it with someone else's
/// `prover_pub` models an impersonation attempt.
pub fn session_run<R: Rng + ?Sized>(
    prover_key: &PrivateKey,
    prover_pub: &PublicKey,
    verifier_key: &PrivateKey,
    verifier_pub: &PublicKey,
    params: &ParamSet,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<SessionVerdict, ProtocolError> {
    if cfg.rounds == 0 {
        return Err(ProtocolError::NoRounds);
    }
    let prover = Prover::new(params, prover_key, verifier_pub)?;
    let verifier = Verifier::new(params, verifier_key, prover_pub)?;
    let mut records = Vec::with_capacity(cfg.rounds);
    for round_index in 0..cfg.rounds {
        let (state, witness) = prover.witness(rng)?;
        let challenge = verifier.challenge(&witness, rng)?;
        let response = prover.respond(&state, challenge.bit, &challenge.question)?;
        let verdict = verifier.verify(&challenge, &response).unwrap_or(false);
        records.push(RoundRecord {
            round_index,
            witness,
            question: challenge.question,
            bit: challenge.bit,
            response,
            verdict,
        });
    }
    Ok(SessionVerdict::from_records(records))
}

/// A forged `b = 1` round and the matrix the verifier compared against `G_B * G`.
#[derive(Debug, Clone)]
pub struct ForgeryOutcome {
    pub record: RoundRecord,
    pub residual: Matrix,
}

/// Plays one `b = 1` round as an impostor holding `fake_key` but claiming
/// `true_pub`. The residual is `G_B * (A*^-m A^m) * G * (A^n A*^-n)`, which
/// equals `G_B * G` only when the fake key is equivalent to the real one.
pub fn mallory_forge<R: Rng + ?Sized>(
    fake_key: &PrivateKey,
    true_pub: &PublicKey,
    verifier_key: &PrivateKey,
    params: &ParamSet,
    rng: &mut R,
) -> Result<ForgeryOutcome, ProtocolError> {
    let k = rng.gen_range(1..=params.exponent_bound());
    mallory_forge_with_exponent(fake_key, true_pub, verifier_key, params, k, rng)
}

pub fn mallory_forge_with_exponent<R: Rng + ?Sized>(
    fake_key: &PrivateKey,
    true_pub: &PublicKey,
    verifier_key: &PrivateKey,
    params: &ParamSet,
    k: u64,
    rng: &mut R,
) -> Result<ForgeryOutcome, ProtocolError> {
    let verifier_pub = derive_public(params, verifier_key)?;
    let impostor = Prover::new(params, fake_key, &verifier_pub)?;
    let verifier = Verifier::new(params, verifier_key, true_pub)?;
    let (state, witness) = impostor.witness_with_exponent(k)?;
    let challenge = verifier.challenge_fixed(&witness, ChallengeBit::One, None, rng)?;
    let response = impostor.respond(&state, ChallengeBit::One, &challenge.question)?;
    let residual = verifier.residual(&response)?;
    let verdict = residual == *verifier.target();
    Ok(ForgeryOutcome {
        record: RoundRecord {
            round_index: 0,
            witness,
            question: challenge.question,
            bit: ChallengeBit::One,
            response,
            verdict,
        },
        residual,
    })
}

/// Produces valid-looking transcripts without the prover's private key.
///
/// The `b = 1` branch computes `Q = B^m * S * G_A * B^n`, so the simulator is
/// given the verifier's key: this is an honest-verifier simulation.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: ParamSet,
    verifier: Verifier,
    prover_public: Matrix,
    verifier_public: Matrix,
    b_m: Matrix,
    b_n: Matrix,
}

impl Simulator {
    pub fn new(
        params: &ParamSet,
        prover_pub: &PublicKey,
        verifier_key: &PrivateKey,
        verifier_pub: &PublicKey,
    ) -> Result<Self, ProtocolError> {
        check_fingerprint(params.fingerprint(), verifier_pub.params_fingerprint())?;
        Ok(Self {
            verifier: Verifier::new(params, verifier_key, prover_pub)?,
            params: params.clone(),
            prover_public: prover_pub.matrix().clone(),
            verifier_public: verifier_pub.matrix().clone(),
            b_m: verifier_key.pow(params.m_signed()),
            b_n: verifier_key.pow(params.n_signed()),
        })
    }

    pub fn round<R: Rng + ?Sized>(&self, round_index: usize, rng: &mut R) -> Result<RoundRecord, ProtocolError> {
        let bit = ChallengeBit::random(rng);
        self.round_with_bit(round_index, bit, rng)
    }

    pub fn round_with_bit<R: Rng + ?Sized>(
        &self,
        round_index: usize,
        bit: ChallengeBit,
        rng: &mut R,
    ) -> Result<RoundRecord, ProtocolError> {
        let (modulus, dim) = (self.params.modulus(), self.params.dim());
        let (witness, question, response) = match bit {
            ChallengeBit::Zero => {
                let s = sample_invertible(modulus, dim, rng);
                let q = sample_invertible(modulus, dim, rng);
                let s_inv = s.inv()?;
                let r = Matrix::product([
                    &s_inv.pow_unsigned(self.params.m()),
                    &q,
                    &s_inv.pow_unsigned(self.params.n()),
                ])?;
                (s, q, r)
            }
            ChallengeBit::One => {
                let s = Matrix::product([&self.verifier_public, self.params.base(), &self.prover_public.inv()?])?;
                let q = Matrix::product([&self.b_m, &s, &self.prover_public, &self.b_n])?;
                (s, q.clone(), q)
            }
        };
        let verdict = self
            .verifier
            .check(bit, &witness, &question, &response)
            .unwrap_or(false);
        Ok(RoundRecord {
            round_index,
            witness,
            question,
            bit,
            response,
            verdict,
        })
    }
}

pub fn simulate_transcript<R: Rng + ?Sized>(
    params: &ParamSet,
    prover_pub: &PublicKey,
    verifier_key: &PrivateKey,
    verifier_pub: &PublicKey,
    rounds: usize,
    rng: &mut R,
) -> Result<Vec<RoundRecord>, ProtocolError> {
    if rounds == 0 {
        return Err(ProtocolError::NoRounds);
    }
    let sim = Simulator::new(params, prover_pub, verifier_key, verifier_pub)?;
    (0..rounds).map(|i| sim.round(i, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeModulus;
    use crate::matrix::DiagonalSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Toy {
        params: ParamSet,
        alice: PrivateKey,
        alice_pub: PublicKey,
        bob: PrivateKey,
        bob_pub: PublicKey,
    }

    fn diag(v: &[u64]) -> Matrix {
        Matrix::diagonal(PrimeModulus::new(7).unwrap(), v).unwrap()
    }

    fn toy_key(params: &ParamSet, id: &str, l: &[u64]) -> PrivateKey {
        let spec = DiagonalSpec::new(params.modulus(), l.to_vec()).unwrap();
        PrivateKey::from_lambdas(params, id, spec).unwrap()
    }

    fn toy() -> Toy {
        let m = PrimeModulus::new(7).unwrap();
        let i = Matrix::identity(m, 2);
        let params = ParamSet::new(m, 2, i.clone(), i, 1, 1, 10, false).unwrap();
        let alice = toy_key(&params, "alice", &[2, 3]);
        let bob = toy_key(&params, "bob", &[3, 5]);
        Toy {
            alice_pub: derive_public(&params, &alice).unwrap(),
            bob_pub: derive_public(&params, &bob).unwrap(),
            params,
            alice,
            bob,
        }
    }

    #[test]
    fn toy_round_b1() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let prover = Prover::new(&t.params, &t.alice, &t.bob_pub).unwrap();
        let verifier = Verifier::new(&t.params, &t.bob, &t.alice_pub).unwrap();
        let (state, s) = prover.witness_with_exponent(1).unwrap();
        assert_eq!(s, diag(&[2, 4]));
        let ch = verifier.challenge_fixed(&s, ChallengeBit::One, None, &mut rng).unwrap();
        assert_eq!(ch.question(), &diag(&[2, 4]));
        let r = prover.respond(&state, ChallengeBit::One, ch.question()).unwrap();
        assert_eq!(r, diag(&[4, 2]));
        assert_eq!(verifier.residual(&r).unwrap(), diag(&[2, 4]));
        assert_eq!(verifier.target(), &diag(&[2, 4]));
        assert!(verifier.verify(&ch, &r).unwrap());
        assert!(!verifier.verify(&ch, &Matrix::identity(t.params.modulus(), 2)).unwrap());
        assert_eq!(
            verifier.residual(&Matrix::identity(t.params.modulus(), 2)).unwrap(),
            diag(&[4, 2])
        );
    }

    #[test]
    fn toy_round_b0() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let prover = Prover::new(&t.params, &t.alice, &t.bob_pub).unwrap();
        let verifier = Verifier::new(&t.params, &t.bob, &t.alice_pub).unwrap();
        let (state, s) = prover.witness_with_exponent(1).unwrap();
        let h = Matrix::identity(t.params.modulus(), 2);
        let ch = verifier
            .challenge_fixed(&s, ChallengeBit::Zero, Some(&h), &mut rng)
            .unwrap();
        assert_eq!(ch.question(), &diag(&[2, 4]));
        assert_eq!(ch.h_mask(), Some(&h));
        let r = prover.respond(&state, ChallengeBit::Zero, ch.question()).unwrap();
        assert_eq!(r, diag(&[4, 2]));
        assert!(verifier.verify(&ch, &r).unwrap());
    }

    #[test]
    fn free_functions_agree_with_contexts() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (state, s) = witness_create(&t.alice, &t.bob_pub, &t.params, &mut rng).unwrap();
        assert!(s.is_invertible());
        let ch = challenge_create(&t.bob, &s, &t.alice_pub, &t.params, &mut rng).unwrap();
        assert!(ch.question().is_invertible());
        assert!(ch.h_mask().is_none());
        let r = response_create(&state, ch.bit(), ch.question(), &t.alice, &t.params).unwrap();
        assert!(round_verify(&ch, &r, &t.bob, &t.params).unwrap());
    }

    #[test]
    fn singular_inputs_rejected() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let zero = Matrix::zero(t.params.modulus(), 2);
        let verifier = Verifier::new(&t.params, &t.bob, &t.alice_pub).unwrap();
        assert!(matches!(
            verifier.challenge(&zero, &mut rng),
            Err(ProtocolError::SingularWitness)
        ));
        let prover = Prover::new(&t.params, &t.alice, &t.bob_pub).unwrap();
        let (state, s) = prover.witness(&mut rng).unwrap();
        assert!(matches!(
            prover.respond(&state, ChallengeBit::One, &zero),
            Err(ProtocolError::SingularChallenge)
        ));
        let ch = verifier.challenge(&s, &mut rng).unwrap();
        assert!(matches!(
            verifier.verify(&ch, &zero),
            Err(ProtocolError::SingularResponse)
        ));
    }

    #[test]
    fn forged_witness_passes_forced_b0() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let verifier = Verifier::new(&t.params, &t.bob, &t.alice_pub).unwrap();
        let forged = sample_invertible(t.params.modulus(), 2, &mut rng);
        let ch = verifier
            .challenge_fixed(&forged, ChallengeBit::Zero, None, &mut rng)
            .unwrap();
        let s_inv = forged.inv().unwrap();
        let r = Matrix::product([&s_inv, ch.question(), &s_inv]).unwrap();
        let verdict = SessionVerdict::from_records(vec![RoundRecord {
            round_index: 0,
            witness: forged,
            question: ch.question().clone(),
            bit: ch.bit(),
            response: r.clone(),
            verdict: verifier.verify(&ch, &r).unwrap(),
        }]);
        assert!(verdict.accepted);
    }

    #[test]
    fn toy_forgeries() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let fake = toy_key(&t.params, "mallory", &[3, 2]);
        let out = mallory_forge(&fake, &t.alice_pub, &t.bob, &t.params, &mut rng).unwrap();
        assert_eq!(out.residual, diag(&[4, 2]));
        assert!(!out.record.verdict);

        let same = mallory_forge(&t.alice, &t.alice_pub, &t.bob, &t.params, &mut rng).unwrap();
        assert_eq!(same.residual, diag(&[2, 4]));
        assert!(same.record.verdict);

        // A* = diag(5, 3) squares to A^2 over F_7
        let twin = toy_key(&t.params, "twin", &[5, 3]);
        assert_eq!(twin.matrix().pow(2).unwrap(), t.alice.matrix().pow(2).unwrap());
        let out = mallory_forge(&twin, &t.alice_pub, &t.bob, &t.params, &mut rng).unwrap();
        assert!(out.record.verdict);
    }

    #[test]
    fn sessions() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let honest = session_run(
            &t.alice,
            &t.alice_pub,
            &t.bob,
            &t.bob_pub,
            &t.params,
            &SessionConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert!(honest.accepted);
        assert_eq!(honest.rounds_passed, DEFAULT_ROUNDS);

        let fake = toy_key(&t.params, "mallory", &[3, 2]);
        let forged = session_run(
            &fake,
            &t.alice_pub,
            &t.bob,
            &t.bob_pub,
            &t.params,
            &SessionConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert!(!forged.accepted);
        for r in &forged.records {
            assert_eq!(r.verdict, r.bit == ChallengeBit::Zero);
        }
        assert!(matches!(
            session_run(
                &t.alice,
                &t.alice_pub,
                &t.bob,
                &t.bob_pub,
                &t.params,
                &SessionConfig { rounds: 0 },
                &mut rng
            ),
            Err(ProtocolError::NoRounds)
        ));
    }

    #[test]
    fn simulator_b1_reduces_to_target() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let sim = Simulator::new(&t.params, &t.alice_pub, &t.bob, &t.bob_pub).unwrap();
        let rec = sim.round_with_bit(0, ChallengeBit::One, &mut rng).unwrap();
        assert_eq!(rec.question, rec.response);
        let verifier = Verifier::new(&t.params, &t.bob, &t.alice_pub).unwrap();
        assert_eq!(verifier.residual(&rec.response).unwrap(), *verifier.target());
        assert!(rec.verdict);
        let all = simulate_transcript(&t.params, &t.alice_pub, &t.bob, &t.bob_pub, 50, &mut rng).unwrap();
        assert!(all.iter().all(|r| r.verdict && verifier.check_record(r)));
        assert!(all.iter().enumerate().all(|(i, r)| r.round_index == i));
    }

    #[test]
    fn transcript_lines_round_trip() {
        let t = toy();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let v = session_run(
            &t.alice,
            &t.alice_pub,
            &t.bob,
            &t.bob_pub,
            &t.params,
            &SessionConfig { rounds: 3 },
            &mut rng,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_transcript(&mut buf, &v.records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("{\"round\":0,\"S\":\""), "{first}");
        assert_eq!(read_transcript(&t.params, &buf[..]).unwrap(), v.records);
    }
}
