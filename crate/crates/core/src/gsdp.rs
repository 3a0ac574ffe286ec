//! Exhaustive GSDP solver over the conjugated-diagonal subgroup.
//!
//! Given `x`, `y`, `(m, n)` and the public conjugator `P`, find every
//! `z = P D P^-1` with distinct nonzero diagonal `D` such that
//! `y = z^m * x * z^n`. Only usable at toy sizes; the candidate count is the
//! falling factorial `(p-1)(p-2)...(p-d)`.

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::field::PrimeModulus;
use crate::keys::{check_fingerprint, KeyError, ParamSet, PublicKey};
use crate::matrix::{conjugate, DiagonalSpec, Matrix, MatrixError};

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

// below this many residues, eigenvalue powers are tabulated once
const POWER_TABLE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum GsdpError {
    #[error("subgroup has {count} candidates, above the cap of {cap}")]
    EnumerationTooLarge { count: BigUint, cap: u64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Key(#[from] KeyError),
}

/// Number of ordered `d`-tuples of distinct nonzero residues.
pub fn subgroup_size(modulus: PrimeModulus, dim: usize) -> BigUint {
    let p = modulus.value();
    (1..=dim as u64).map(|i| BigUint::from(p.saturating_sub(i))).product()
}

/// Lexicographic iterator over ordered tuples of distinct values in `1..p`.
#[derive(Debug, Clone)]
pub struct SubgroupIter {
    p: u64,
    current: Vec<u64>,
    used: Vec<bool>,
    done: bool,
}

impl SubgroupIter {
    fn new(p: u64, dim: usize) -> Self {
        let mut used = vec![false; p as usize];
        let current: Vec<u64> = (1..=dim as u64).collect();
        for &v in &current {
            used[v as usize] = true;
        }
        Self {
            p,
            current,
            used,
            done: dim as u64 > p - 1,
        }
    }

    fn advance(&mut self) -> bool {
        let d = self.current.len();
        for pos in (0..d).rev() {
            let old = self.current[pos];
            // positions after `pos` were already released by earlier iterations
            self.used[old as usize] = false;
            if let Some(next) = (old + 1..self.p).find(|&v| !self.used[v as usize]) {
                self.current[pos] = next;
                self.used[next as usize] = true;
                let mut fill = 1;
                for slot in pos + 1..d {
                    while self.used[fill as usize] {
                        fill += 1;
                    }
                    self.current[slot] = fill;
                    self.used[fill as usize] = true;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SubgroupIter {
    type Item = DiagonalSpec;

    fn next(&mut self) -> Option<DiagonalSpec> {
        if self.done {
            return None;
        }
        let out = DiagonalSpec::from_trusted(self.current.clone());
        self.done = !self.advance();
        Some(out)
    }
}

/// All candidate diagonals, in lexicographic order.
pub fn enumerate_subgroup(modulus: PrimeModulus, dim: usize, cap: u64) -> Result<SubgroupIter, GsdpError> {
    let count = subgroup_size(modulus, dim);
    if dim == 0 || count > BigUint::from(cap) {
        return Err(GsdpError::EnumerationTooLarge { count, cap });
    }
    Ok(SubgroupIter::new(modulus.value(), dim))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GsdpInstance {
    pub conjugator: Matrix,
    pub x: Matrix,
    pub y: Matrix,
    pub m: u64,
    pub n: u64,
}

impl GsdpInstance {
    pub fn new(conjugator: Matrix, x: Matrix, y: Matrix, m: u64, n: u64) -> Result<Self, GsdpError> {
        for mat in [&x, &y] {
            if mat.dim() != conjugator.dim() || mat.modulus() != conjugator.modulus() {
                return Err(MatrixError::DimensionMismatch {
                    left: conjugator.dim(),
                    right: mat.dim(),
                }
                .into());
            }
        }
        if !x.is_invertible() || !y.is_invertible() || !conjugator.is_invertible() {
            return Err(MatrixError::Singular.into());
        }
        Ok(Self { conjugator, x, y, m, n })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.x.modulus()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Direct check of `y == z^m * x * z^n` with `z = P D P^-1`.
    pub fn is_solution(&self, candidate: &DiagonalSpec) -> Result<bool, GsdpError> {
        let z = conjugate(&self.conjugator, candidate)?;
        let lhs = Matrix::product([&z.pow_unsigned(self.m), &self.x, &z.pow_unsigned(self.n)])?;
        Ok(lhs == self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GsdpSolutionSet {
    pub candidates_tested: u64,
    #[serde(serialize_with = "lambdas_only")]
    pub solutions: Vec<DiagonalSpec>,
}

fn lambdas_only<S: serde::Serializer>(v: &[DiagonalSpec], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for d in v {
        seq.serialize_element(d.lambdas())?;
    }
    seq.end()
}

impl GsdpSolutionSet {
    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn contains(&self, lambdas: &[u64]) -> bool {
        self.solutions.iter().any(|d| d.lambdas() == lambdas)
    }
}

/// Tests every subgroup element and returns all solutions, sorted.
///
/// Candidates are screened in the eigenbasis, where the equation reads
/// `y'_ij = l_i^m * x'_ij * l_j^n` with `x' = P^-1 x P`, `y' = P^-1 y P`.
/// Each survivor is then re-verified with full matrix powers. An empty
/// solution set is a normal result.
pub fn gsdp_solve_bruteforce(inst: &GsdpInstance, cap: u64) -> Result<GsdpSolutionSet, GsdpError> {
    let modulus = inst.modulus();
    let dim = inst.dim();
    let iter = enumerate_subgroup(modulus, dim, cap)?;

    let p_inv = inst.conjugator.inv()?;
    let x_eig = Matrix::product([&p_inv, &inst.x, &inst.conjugator])?;
    let y_eig = Matrix::product([&p_inv, &inst.y, &inst.conjugator])?;
    let p = modulus.value();

    let table =
        |e: u64| -> Option<Vec<u64>> { (p <= POWER_TABLE_LIMIT).then(|| (0..p).map(|v| modulus.pow(v, e)).collect()) };
    let (pow_m_table, pow_n_table) = (table(inst.m), table(inst.n));
    let pow_m = |v: u64| {
        pow_m_table
            .as_ref()
            .map_or_else(|| modulus.pow(v, inst.m), |t| t[v as usize])
    };
    let pow_n = |v: u64| {
        pow_n_table
            .as_ref()
            .map_or_else(|| modulus.pow(v, inst.n), |t| t[v as usize])
    };

    let mut tested = 0u64;
    let mut solutions = Vec::new();
    let mut lm = vec![0u64; dim];
    let mut ln = vec![0u64; dim];
    for candidate in iter {
        tested += 1;
        for (i, &l) in candidate.lambdas().iter().enumerate() {
            lm[i] = pow_m(l);
            ln[i] = pow_n(l);
        }
        let matches = (0..dim)
            .all(|i| (0..dim).all(|j| modulus.mul(modulus.mul(lm[i], x_eig.get(i, j)), ln[j]) == y_eig.get(i, j)));
        if matches && inst.is_solution(&candidate)? {
            solutions.push(candidate);
        }
    }
    solutions.sort();
    Ok(GsdpSolutionSet {
        candidates_tested: tested,
        solutions,
    })
}

/// Recovers every private key consistent with a public key by exhaustion.
pub fn attack_recover_key(params: &ParamSet, victim_pub: &PublicKey, cap: u64) -> Result<GsdpSolutionSet, GsdpError> {
    check_fingerprint(params.fingerprint(), victim_pub.params_fingerprint())?;
    let inst = GsdpInstance::new(
        params.conjugator().clone(),
        params.base().clone(),
        victim_pub.matrix().clone(),
        params.m(),
        params.n(),
    )?;
    gsdp_solve_bruteforce(&inst, cap)
}
