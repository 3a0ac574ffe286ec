//! Community parameters, key pairs, and keyspace size estimates.
//!
//! A community shares a [`ParamSet`]: the field, the dimension, a conjugating
//! matrix `P`, a base matrix `G`, and the exponents `(m, n)`. A private key is
//! a diagonal of distinct nonzero eigenvalues `D`, expanded to
//! `A = P * D * P^-1`; its public key is `G_A = A^m * G * A^n`.
//!
//! `P` is public, so every private key lives in the commutative subgroup
//! `{P D P^-1}` that anyone can enumerate. Brute force over that subgroup is
//! the attack the keyspace estimate measures.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{FieldError, PrimeModulus};
use crate::matrix::{conjugate, sample_distinct_diagonal, sample_invertible, DiagonalSpec, Matrix, MatrixError};
use crate::wire::{encode_matrix, matrix_from_hex, matrix_to_hex, WireError};

pub const DEFAULT_EXPONENT_BOUND: u64 = 65_536;

#[derive(Debug, Error)]
pub enum KeyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("field F_{p} has fewer than {d} nonzero elements")]
    FieldTooSmall { p: u64, d: usize },
    #[error("modulus {p} is too small for dimension {d} (need p > d + 1)")]
    ModulusTooSmall { p: u64, d: usize },
    #[error("invalid exponent setting: {0}")]
    InvalidExponent(String),
    #[error("{0} matrix is not invertible")]
    NotInvertible(&'static str),
    #[error("characteristic polynomial of {0} is reducible")]
    Reducible(&'static str),
    #[error("parameter fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: Fingerprint, found: Fingerprint },
    #[error("invalid key file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// First 8 bytes of a SHA-256 over the canonical parameter encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub [u8; 8]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, KeyError> {
        let bytes = hex::decode(s).map_err(WireError::from)?;
        let arr: [u8; 8] = bytes
            .try_into()
            .map_err(|_| KeyError::BadFile(format!("fingerprint {s:?} is not 8 bytes")))?;
        Ok(Self(arr))
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.to_hex())
    }
}

pub(crate) fn check_fingerprint(expected: Fingerprint, found: Fingerprint) -> Result<(), KeyError> {
    if expected != found {
        return Err(KeyError::FingerprintMismatch { expected, found });
    }
    Ok(())
}

/// Public parameters agreed by the whole community.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSet {
    modulus: PrimeModulus,
    dim: usize,
    conjugator: Matrix,
    base: Matrix,
    m: u64,
    n: u64,
    exponent_bound: u64,
    strict_order: bool,
    fingerprint: Fingerprint,
}

fn check_field_size(modulus: PrimeModulus, dim: usize) -> Result<(), KeyError> {
    let p = modulus.value();
    if dim == 0 || dim > u16::MAX as usize {
        return Err(MatrixError::ZeroDimension.into());
    }
    if p - 1 < dim as u64 {
        return Err(KeyError::FieldTooSmall { p, d: dim });
    }
    if p <= dim as u64 + 1 {
        return Err(KeyError::ModulusTooSmall { p, d: dim });
    }
    Ok(())
}

fn check_order(which: &'static str, m: &Matrix) -> Result<(), KeyError> {
    if !m.char_poly()?.is_irreducible() {
        return Err(KeyError::Reducible(which));
    }
    Ok(())
}

impl ParamSet {
    /// Assembles and validates a parameter set from explicit values.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        modulus: PrimeModulus,
        dim: usize,
        conjugator: Matrix,
        base: Matrix,
        m: u64,
        n: u64,
        exponent_bound: u64,
        strict_order: bool,
    ) -> Result<Self, KeyError> {
        check_field_size(modulus, dim)?;
        if exponent_bound == 0 || exponent_bound > i64::MAX as u64 {
            return Err(KeyError::InvalidExponent(format!(
                "bound {exponent_bound} outside [1, 2^63)"
            )));
        }
        for (name, e) in [("m", m), ("n", n)] {
            if e == 0 || e > exponent_bound {
                return Err(KeyError::InvalidExponent(format!(
                    "{name} = {e} outside [1, {exponent_bound}]"
                )));
            }
        }
        for (name, mat) in [("P", &conjugator), ("G", &base)] {
            if mat.dim() != dim || mat.modulus() != modulus {
                return Err(MatrixError::DimensionMismatch {
                    left: dim,
                    right: mat.dim(),
                }
                .into());
            }
            if !mat.is_invertible() {
                return Err(KeyError::NotInvertible(name));
            }
        }
        if strict_order {
            check_order("P", &conjugator)?;
            check_order("G", &base)?;
        }
        let fingerprint = compute_fingerprint(modulus, dim, m, n, &conjugator, &base);
        Ok(Self {
            modulus,
            dim,
            conjugator,
            base,
            m,
            n,
            exponent_bound,
            strict_order,
            fingerprint,
        })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The shared conjugating matrix `P`.
    pub fn conjugator(&self) -> &Matrix {
        &self.conjugator
    }

    /// The shared base matrix `G`.
    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn exponent_bound(&self) -> u64 {
        self.exponent_bound
    }

    pub fn strict_order(&self) -> bool {
        self.strict_order
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub(crate) fn m_signed(&self) -> i64 {
        self.m as i64
    }

    pub(crate) fn n_signed(&self) -> i64 {
        self.n as i64
    }

    pub fn to_file(&self) -> ParamsFile {
        ParamsFile {
            p: self.modulus.value(),
            d: self.dim,
            m: self.m,
            n: self.n,
            exponent_bound: self.exponent_bound,
            strict_order: self.strict_order,
            conjugator: matrix_to_hex(&self.conjugator),
            base: matrix_to_hex(&self.base),
            fingerprint: self.fingerprint.to_hex(),
        }
    }

    pub fn from_file(file: &ParamsFile) -> Result<Self, KeyError> {
        let modulus = PrimeModulus::new(file.p)?;
        check_field_size(modulus, file.d)?;
        let conjugator = matrix_from_hex(&file.conjugator, file.d, modulus)?;
        let base = matrix_from_hex(&file.base, file.d, modulus)?;
        let params = Self::new(
            modulus,
            file.d,
            conjugator,
            base,
            file.m,
            file.n,
            file.exponent_bound,
            file.strict_order,
        )?;
        check_fingerprint(Fingerprint::from_hex(&file.fingerprint)?, params.fingerprint)?;
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, KeyError> {
        Self::from_file(&serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, KeyError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), KeyError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

pub fn compute_fingerprint(
    modulus: PrimeModulus,
    dim: usize,
    m: u64,
    n: u64,
    conjugator: &Matrix,
    base: &Matrix,
) -> Fingerprint {
    let mut h = Sha256::new();
    h.update(modulus.value().to_le_bytes());
    h.update((dim as u16).to_le_bytes());
    h.update(m.to_le_bytes());
    h.update(n.to_le_bytes());
    h.update(encode_matrix(conjugator));
    h.update(encode_matrix(base));
    let digest = h.finalize();
    Fingerprint(digest[..8].try_into().expect("8 bytes"))
}

/// Samples a fresh parameter set.
///
/// With `strict_order`, `P` and `G` are resampled until both characteristic
/// polynomials are irreducible.
pub fn gen_params<R: Rng + ?Sized>(
    p: u64,
    dim: usize,
    exponent_bound: u64,
    strict_order: bool,
    rng: &mut R,
) -> Result<ParamSet, KeyError> {
    let modulus = PrimeModulus::new(p)?;
    check_field_size(modulus, dim)?;
    if exponent_bound == 0 || exponent_bound > i64::MAX as u64 {
        return Err(KeyError::InvalidExponent(format!(
            "bound {exponent_bound} outside [1, 2^63)"
        )));
    }
    let draw = |rng: &mut R| loop {
        let candidate = sample_invertible(modulus, dim, rng);
        if !strict_order || candidate.char_poly().map(|f| f.is_irreducible()).unwrap_or(false) {
            return candidate;
        }
    };
    let conjugator = draw(rng);
    let base = draw(rng);
    let m = rng.gen_range(1..=exponent_bound);
    let n = rng.gen_range(1..=exponent_bound);
    ParamSet::new(modulus, dim, conjugator, base, m, n, exponent_bound, strict_order)
}

/// A private key: the secret eigenvalues and the expanded matrix `A`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    owner_id: String,
    lambdas: DiagonalSpec,
    a: Matrix,
    a_inv: Matrix,
    params_fingerprint: Fingerprint,
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrivateKey")
            .field("owner_id", &self.owner_id)
            .field("params_fingerprint", &self.params_fingerprint)
            .finish_non_exhaustive()
    }
}

impl PrivateKey {
    pub fn from_lambdas(
        params: &ParamSet,
        owner_id: impl Into<String>,
        lambdas: DiagonalSpec,
    ) -> Result<Self, KeyError> {
        if lambdas.dim() != params.dim {
            return Err(MatrixError::DimensionMismatch {
                left: params.dim,
                right: lambdas.dim(),
            }
            .into());
        }
        let a = conjugate(&params.conjugator, &lambdas)?;
        let a_inv = a.inv()?;
        Ok(Self {
            owner_id: owner_id.into(),
            lambdas,
            a,
            a_inv,
            params_fingerprint: params.fingerprint,
        })
    }

    pub fn owner_id(&self) -> &str {
        &self.owner_id
    }

    pub fn lambdas(&self) -> &DiagonalSpec {
        &self.lambdas
    }

    /// The expanded key `A = P * D * P^-1`.
    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn inverse(&self) -> &Matrix {
        &self.a_inv
    }

    pub fn params_fingerprint(&self) -> Fingerprint {
        self.params_fingerprint
    }

    /// Signed power of `A`, using the cached inverse for negative exponents.
    pub fn pow(&self, exp: i64) -> Matrix {
        if exp >= 0 {
            self.a.pow_unsigned(exp as u64)
        } else {
            self.a_inv.pow_unsigned(exp.unsigned_abs())
        }
    }

    pub fn to_file(&self) -> PrivateKeyFile {
        PrivateKeyFile {
            owner_id: self.owner_id.clone(),
            lambdas: self.lambdas.lambdas().to_vec(),
            params_fingerprint: self.params_fingerprint.to_hex(),
        }
    }

    pub fn from_file(params: &ParamSet, file: &PrivateKeyFile) -> Result<Self, KeyError> {
        check_fingerprint(params.fingerprint, Fingerprint::from_hex(&file.params_fingerprint)?)?;
        let lambdas = DiagonalSpec::new(params.modulus, file.lambdas.clone())?;
        Self::from_lambdas(params, file.owner_id.clone(), lambdas)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("key serialize")
    }

    pub fn from_json(params: &ParamSet, s: &str) -> Result<Self, KeyError> {
        Self::from_file(params, &serde_json::from_str(s)?)
    }

    pub fn load(params: &ParamSet, path: &Path) -> Result<Self, KeyError> {
        Self::from_json(params, &fs::read_to_string(path)?)
    }

    /// Writes the key file, readable by the owner only on Unix.
    pub fn save(&self, path: &Path) -> Result<(), KeyError> {
        let body = self.to_json() + "\n";
        #[cfg(unix)]
        {
            use std::io::Write;
            use std::os::unix::fs::{OpenOptionsExt, PermissionsExt};
            let mut f = fs::OpenOptions::new()
                .write(true)
                .create(true)
                .truncate(true)
                .mode(0o600)
                .open(path)?;
            // mode() only applies on creation
            f.set_permissions(fs::Permissions::from_mode(0o600))?;
            f.write_all(body.as_bytes())?;
        }
        #[cfg(not(unix))]
        fs::write(path, body)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    owner_id: String,
    g_x: Matrix,
    params_fingerprint: Fingerprint,
}

impl PublicKey {
    /// Wraps an existing matrix; rejects singular ones.
    pub fn new(params: &ParamSet, owner_id: impl Into<String>, g_x: Matrix) -> Result<Self, KeyError> {
        if g_x.dim() != params.dim || g_x.modulus() != params.modulus {
            return Err(MatrixError::DimensionMismatch {
                left: params.dim,
                right: g_x.dim(),
            }
            .into());
        }
        if !g_x.is_invertible() {
            return Err(KeyError::NotInvertible("public key"));
        }
        Ok(Self {
            owner_id: owner_id.into(),
            g_x,
            params_fingerprint: params.fingerprint,
        })
    }

    pub fn owner_id(&self) -> &str {
        &self.owner_id
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g_x
    }

    pub fn params_fingerprint(&self) -> Fingerprint {
        self.params_fingerprint
    }

    pub fn to_file(&self) -> PublicKeyFile {
        PublicKeyFile {
            owner_id: self.owner_id.clone(),
            g_x: matrix_to_hex(&self.g_x),
            params_fingerprint: self.params_fingerprint.to_hex(),
        }
    }

    pub fn from_file(params: &ParamSet, file: &PublicKeyFile) -> Result<Self, KeyError> {
        check_fingerprint(params.fingerprint, Fingerprint::from_hex(&file.params_fingerprint)?)?;
        let g_x = matrix_from_hex(&file.g_x, params.dim, params.modulus)?;
        Self::new(params, file.owner_id.clone(), g_x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("key serialize")
    }

    pub fn from_json(params: &ParamSet, s: &str) -> Result<Self, KeyError> {
        Self::from_file(params, &serde_json::from_str(s)?)
    }

    pub fn load(params: &ParamSet, path: &Path) -> Result<Self, KeyError> {
        Self::from_json(params, &fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), KeyError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// `G_X = X^m * G * X^n` for the holder of `private`.
pub fn derive_public(params: &ParamSet, private: &PrivateKey) -> Result<PublicKey, KeyError> {
    check_fingerprint(params.fingerprint, private.params_fingerprint)?;
    let g_x = private
        .pow(params.m_signed())
        .mul(&params.base)?
        .mul(&private.pow(params.n_signed()))?;
    Ok(PublicKey {
        owner_id: private.owner_id.clone(),
        g_x,
        params_fingerprint: params.fingerprint,
    })
}

pub fn gen_keypair<R: Rng + ?Sized>(
    params: &ParamSet,
    owner_id: impl Into<String>,
    rng: &mut R,
) -> Result<(PrivateKey, PublicKey), KeyError> {
    let lambdas = sample_distinct_diagonal(params.modulus, params.dim, rng)?;
    let private = PrivateKey::from_lambdas(params, owner_id, lambdas)?;
    let public = derive_public(params, &private)?;
    Ok((private, public))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub p: u64,
    pub d: usize,
    pub m: u64,
    pub n: u64,
    pub exponent_bound: u64,
    pub strict_order: bool,
    #[serde(rename = "P")]
    pub conjugator: String,
    #[serde(rename = "G")]
    pub base: String,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateKeyFile {
    pub owner_id: String,
    pub lambdas: Vec<u64>,
    pub params_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicKeyFile {
    pub owner_id: String,
    pub g_x: String,
    pub params_fingerprint: String,
}

/// Private-key count for `(p, d)` under two conventions.
///
/// `cardinality_paper` is `prod_{i=2}^{d+1} (p - i)`, the product as
/// historically published for this scheme (249 * ... * 242 at p = 251, d = 8).
/// `cardinality_derived` counts ordered draws of `d` distinct values from the
/// `p - 1` nonzero residues: `prod_{i=1}^{d} (p - i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyspaceReport {
    pub p: u64,
    pub d: usize,
    #[serde(serialize_with = "big_as_string")]
    pub cardinality_paper: BigUint,
    #[serde(serialize_with = "big_as_string")]
    pub cardinality_derived: BigUint,
    pub bits_paper: f64,
    pub bits_derived: f64,
}

fn big_as_string<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn keyspace_cardinality(p: u64, d: usize) -> Result<KeyspaceReport, KeyError> {
    let modulus = PrimeModulus::new(p)?;
    if d == 0 || p - 1 < d as u64 {
        return Err(KeyError::FieldTooSmall { p: modulus.value(), d });
    }
    let falling = |start: u64| -> (BigUint, f64) {
        (start..start + d as u64).fold((BigUint::from(1u32), 0.0), |(acc, bits), i| {
            let factor = p - i;
            let log = if factor == 0 {
                f64::NEG_INFINITY
            } else {
                (factor as f64).log2()
            };
            (acc * factor, bits + log)
        })
    };
    let (cardinality_paper, bits_paper) = falling(2);
    let (cardinality_derived, bits_derived) = falling(1);
    Ok(KeyspaceReport {
        p,
        d,
        cardinality_paper,
        cardinality_derived,
        bits_paper,
        bits_derived,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy_params() -> ParamSet {
        let m = PrimeModulus::new(7).unwrap();
        let i = Matrix::identity(m, 2);
        ParamSet::new(m, 2, i.clone(), i, 1, 1, 10, false).unwrap()
    }

    fn diag(v: &[u64]) -> Matrix {
        Matrix::diagonal(PrimeModulus::new(7).unwrap(), v).unwrap()
    }

    fn toy_key(params: &ParamSet, id: &str, l: &[u64]) -> PrivateKey {
        let spec = DiagonalSpec::new(params.modulus(), l.to_vec()).unwrap();
        PrivateKey::from_lambdas(params, id, spec).unwrap()
    }

    #[test]
    fn toy_keypairs() {
        let params = toy_params();
        let alice = toy_key(&params, "alice", &[2, 3]);
        assert_eq!(alice.matrix(), &diag(&[2, 3]));
        assert_eq!(derive_public(&params, &alice).unwrap().matrix(), &diag(&[4, 2]));
        let bob = toy_key(&params, "bob", &[3, 5]);
        assert_eq!(bob.matrix(), &diag(&[3, 5]));
        assert_eq!(derive_public(&params, &bob).unwrap().matrix(), &diag(&[2, 4]));
        assert!(alice.matrix().commutes(bob.matrix()).unwrap());
        // m = n = 1 and G = I give A^2
        assert_eq!(
            derive_public(&params, &alice).unwrap().matrix(),
            &alice.matrix().pow(2).unwrap()
        );
    }

    #[test]
    fn derive_public_is_deterministic() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let params = gen_params(251, 4, 1000, false, &mut rng).unwrap();
        let (private, public) = gen_keypair(&params, "carol", &mut rng).unwrap();
        let again = derive_public(&params, &private).unwrap();
        assert_eq!(again.to_json(), public.to_json());
        let other = gen_params(251, 4, 1000, false, &mut rng).unwrap();
        assert!(matches!(
            derive_public(&other, &private),
            Err(KeyError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn param_generation_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(
            gen_params(6, 8, 10, false, &mut rng),
            Err(KeyError::Field(FieldError::NotPrime(6)))
        ));
        assert!(matches!(
            gen_params(7, 8, 10, false, &mut rng),
            Err(KeyError::FieldTooSmall { p: 7, d: 8 })
        ));
        assert!(matches!(
            gen_params(7, 6, 10, false, &mut rng),
            Err(KeyError::ModulusTooSmall { p: 7, d: 6 })
        ));
        assert!(matches!(
            gen_params(7, 2, 0, false, &mut rng),
            Err(KeyError::InvalidExponent(_))
        ));
        let m = PrimeModulus::new(7).unwrap();
        let i = Matrix::identity(m, 2);
        assert!(matches!(
            ParamSet::new(m, 2, i.clone(), i.clone(), 0, 0, 10, false),
            Err(KeyError::InvalidExponent(_))
        ));
        let singular = Matrix::zero(m, 2);
        assert!(matches!(
            ParamSet::new(m, 2, singular, i.clone(), 1, 1, 10, false),
            Err(KeyError::NotInvertible("P"))
        ));
        assert!(matches!(
            ParamSet::new(m, 2, i.clone(), i, 1, 1, 10, true),
            Err(KeyError::Reducible("P"))
        ));
    }

    #[test]
    fn toy_and_full_size_params() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let toy = gen_params(7, 2, 10, false, &mut rng).unwrap();
        assert!((1..=10).contains(&toy.m()) && (1..=10).contains(&toy.n()));
        let full = gen_params(251, 8, DEFAULT_EXPONENT_BOUND, true, &mut rng).unwrap();
        assert_eq!(full.modulus().elem_width(), 1);
        assert!(full.conjugator().char_poly().unwrap().is_irreducible());
        assert!(full.base().char_poly().unwrap().is_irreducible());
    }

    #[test]
    fn files_round_trip_and_detect_tampering() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let params = gen_params(251, 3, 500, true, &mut rng).unwrap();
        let reloaded = ParamSet::from_json(&params.to_json()).unwrap();
        assert_eq!(reloaded, params);

        let (private, public) = gen_keypair(&params, "dave", &mut rng).unwrap();
        assert_eq!(PrivateKey::from_json(&params, &private.to_json()).unwrap(), private);
        assert_eq!(PublicKey::from_json(&params, &public.to_json()).unwrap(), public);

        let mut file = params.to_file();
        file.m = if file.m == 1 { 2 } else { 1 };
        assert!(matches!(
            ParamSet::from_file(&file),
            Err(KeyError::FingerprintMismatch { .. })
        ));

        let json: serde_json::Value = serde_json::from_str(&params.to_json()).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        for k in [
            "p",
            "d",
            "m",
            "n",
            "exponent_bound",
            "strict_order",
            "P",
            "G",
            "fingerprint",
        ] {
            assert!(keys.contains(&k.to_string()), "missing {k}");
        }
        assert_eq!(json["fingerprint"].as_str().unwrap().len(), 16);
        assert!(!public.to_json().contains("lambdas"));
    }

    #[cfg(unix)]
    #[test]
    fn private_key_file_is_owner_only() {
        use std::os::unix::fs::PermissionsExt;
        let params = toy_params();
        let key = toy_key(&params, "alice", &[2, 3]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("alice.key");
        key.save(&path).unwrap();
        let mode = fs::metadata(&path).unwrap().permissions().mode() & 0o777;
        assert_eq!(mode, 0o600);
        assert_eq!(PrivateKey::load(&params, &path).unwrap(), key);
    }

    #[test]
    fn private_key_debug_hides_secret() {
        let params = toy_params();
        let key = toy_key(&params, "alice", &[2, 3]);
        let dbg = format!("{key:?}");
        assert!(dbg.contains("alice") && !dbg.contains("lambdas"));
    }

    #[test]
    fn keyspace_values() {
        let r = keyspace_cardinality(251, 8).unwrap();
        assert_eq!(r.cardinality_paper.to_string(), "13190481178699144320");
        let derived: BigUint = (243u64..=250).map(BigUint::from).product();
        assert_eq!(r.cardinality_derived, derived);
        assert_eq!(r.bits_paper.floor(), 63.0);
        assert_eq!(r.bits_paper.round(), 64.0);
        let r16 = keyspace_cardinality(251, 16).unwrap();
        assert_eq!(r16.bits_derived.round(), 127.0);
        assert!(matches!(
            keyspace_cardinality(5, 5),
            Err(KeyError::FieldTooSmall { .. })
        ));
    }
}
