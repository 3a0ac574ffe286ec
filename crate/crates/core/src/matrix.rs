//! Dense square matrices over a prime field.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeModulus};
use crate::poly::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("matrix is singular")]
    Singular,
    #[error("expected {expected} entries for a square matrix, got {got}")]
    BadShape { expected: usize, got: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("modulus {p} is too small for dimension {d} (need p > d + 1)")]
    ModulusTooSmall { p: u64, d: usize },
    #[error("field F_{p} has fewer than {d} nonzero elements")]
    FieldTooSmall { p: u64, d: usize },
    #[error("invalid diagonal: {0}")]
    InvalidDiagonal(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Row-major `d x d` matrix of canonical residues.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    dim: usize,
    modulus: PrimeModulus,
    entries: Vec<u64>,
}

impl Matrix {
    pub fn zero(modulus: PrimeModulus, dim: usize) -> Self {
        Self {
            dim,
            modulus,
            entries: vec![0; dim * dim],
        }
    }

    pub fn identity(modulus: PrimeModulus, dim: usize) -> Self {
        let mut m = Self::zero(modulus, dim);
        for i in 0..dim {
            m.entries[i * dim + i] = 1;
        }
        m
    }

    /// Takes ownership of row-major entries; every entry must already be `< p`.
    pub fn from_entries(modulus: PrimeModulus, dim: usize, entries: Vec<u64>) -> Result<Self, MatrixError> {
        if dim == 0 {
            return Err(MatrixError::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(MatrixError::BadShape {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if let Some(&value) = entries.iter().find(|&&v| v >= modulus.value()) {
            return Err(FieldError::OutOfRange {
                value,
                p: modulus.value(),
            }
            .into());
        }
        Ok(Self { dim, modulus, entries })
    }

    pub fn from_rows<R: AsRef<[u64]>>(modulus: PrimeModulus, rows: &[R]) -> Result<Self, MatrixError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(MatrixError::BadShape {
                    expected: dim * dim,
                    got: dim * row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(modulus, dim, entries)
    }

    pub fn diagonal(modulus: PrimeModulus, values: &[u64]) -> Result<Self, MatrixError> {
        let dim = values.len();
        let mut entries = vec![0; dim * dim];
        for (i, &v) in values.iter().enumerate() {
            entries[i * dim + i] = v;
        }
        Self::from_entries(modulus, dim, entries)
    }

    /// Uniformly random matrix (not necessarily invertible).
    pub fn random<R: Rng + ?Sized>(modulus: PrimeModulus, dim: usize, rng: &mut R) -> Self {
        let p = modulus.value();
        Self {
            dim,
            modulus,
            entries: (0..dim * dim).map(|_| rng.gen_range(0..p)).collect(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    #[inline]
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.dim + col]
    }

    pub fn element(&self, row: usize, col: usize) -> FieldElement {
        self.modulus.reduce(self.get(row, col))
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.dim).map(<[u64]>::to_vec).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.modulus, self.dim)
    }

    fn check_compatible(&self, other: &Self) -> Result<(), MatrixError> {
        if self.dim != other.dim {
            return Err(MatrixError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.modulus != other.modulus {
            return Err(MatrixError::ModulusMismatch {
                left: self.modulus.value(),
                right: other.modulus.value(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let d = self.dim;
        let p = self.modulus.value() as u128;
        // below 2^32 a product fits in 64 bits, so a row sum never overflows u128
        let small = p < (1u128 << 32);
        let mut out = vec![0u64; d * d];
        for i in 0..d {
            let row = &self.entries[i * d..(i + 1) * d];
            for j in 0..d {
                let mut acc: u128 = 0;
                for (k, &a) in row.iter().enumerate() {
                    let prod = a as u128 * other.entries[k * d + j] as u128;
                    if small {
                        acc += prod;
                    } else {
                        acc = (acc + prod % p) % p;
                    }
                }
                out[i * d + j] = (acc % p) as u64;
            }
        }
        Self {
            dim: d,
            modulus: self.modulus,
            entries: out,
        }
    }

    /// Multiplies a chain of matrices left to right.
    pub fn product<'a, I>(factors: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = &'a Matrix>,
    {
        let mut iter = factors.into_iter();
        let first = iter.next().ok_or(MatrixError::ZeroDimension)?.clone();
        iter.try_fold(first, |acc, m| acc.mul(m))
    }

    /// Determinant by Gaussian elimination with row pivoting.
    pub fn det(&self) -> FieldElement {
        let m = self.modulus;
        let d = self.dim;
        let mut a = self.entries.clone();
        let mut det = 1u64;
        for col in 0..d {
            let Some(pivot) = (col..d).find(|&r| a[r * d + col] != 0) else {
                return FieldElement::zero(m);
            };
            if pivot != col {
                for c in 0..d {
                    a.swap(pivot * d + c, col * d + c);
                }
                det = m.neg(det);
            }
            let pv = a[col * d + col];
            det = m.mul(det, pv);
            let pv_inv = m.inv(pv).expect("pivot is nonzero");
            for r in col + 1..d {
                let factor = m.mul(a[r * d + col], pv_inv);
                if factor == 0 {
                    continue;
                }
                for c in col..d {
                    a[r * d + c] = m.sub(a[r * d + c], m.mul(factor, a[col * d + c]));
                }
            }
        }
        m.reduce(det)
    }

    pub fn is_invertible(&self) -> bool {
        self.det().value() != 0
    }

    /// Gauss-Jordan inverse.
    pub fn inv(&self) -> Result<Self, MatrixError> {
        let m = self.modulus;
        let d = self.dim;
        let mut a = self.entries.clone();
        let mut inv = Self::identity(m, d).entries;
        for col in 0..d {
            let pivot = (col..d).find(|&r| a[r * d + col] != 0).ok_or(MatrixError::Singular)?;
            if pivot != col {
                for c in 0..d {
                    a.swap(pivot * d + c, col * d + c);
                    inv.swap(pivot * d + c, col * d + c);
                }
            }
            let pv_inv = m.inv(a[col * d + col])?;
            for c in 0..d {
                a[col * d + c] = m.mul(a[col * d + c], pv_inv);
                inv[col * d + c] = m.mul(inv[col * d + c], pv_inv);
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let factor = a[r * d + col];
                if factor == 0 {
                    continue;
                }
                for c in 0..d {
                    a[r * d + c] = m.sub(a[r * d + c], m.mul(factor, a[col * d + c]));
                    inv[r * d + c] = m.sub(inv[r * d + c], m.mul(factor, inv[col * d + c]));
                }
            }
        }
        Ok(Self {
            dim: d,
            modulus: m,
            entries: inv,
        })
    }

    /// Non-negative power by square-and-multiply.
    pub fn pow_unsigned(&self, mut exp: u64) -> Self {
        let mut acc = Self::identity(self.modulus, self.dim);
        let mut sq = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul_unchecked(&sq);
            }
            exp >>= 1;
            if exp > 0 {
                sq = sq.mul_unchecked(&sq);
            }
        }
        acc
    }

    /// Signed power; negative exponents go through the inverse.
    pub fn pow(&self, exp: i64) -> Result<Self, MatrixError> {
        if exp >= 0 {
            Ok(self.pow_unsigned(exp as u64))
        } else {
            Ok(self.inv()?.pow_unsigned(exp.unsigned_abs()))
        }
    }

    pub fn commutes(&self, other: &Self) -> Result<bool, MatrixError> {
        Ok(self.mul(other)? == other.mul(self)?)
    }

    /// `det(xI - M)`, by evaluating at `0..=d` and Lagrange interpolation.
    pub fn char_poly(&self) -> Result<Polynomial, MatrixError> {
        let m = self.modulus;
        let d = self.dim;
        if m.value() <= d as u64 + 1 {
            return Err(MatrixError::ModulusTooSmall { p: m.value(), d });
        }
        let points: Vec<u64> = (0..=d as u64).collect();
        let values: Vec<u64> = points
            .iter()
            .map(|&x| {
                let mut shifted = self.clone();
                for e in shifted.entries.iter_mut() {
                    *e = m.neg(*e);
                }
                for i in 0..d {
                    shifted.entries[i * d + i] = m.add(shifted.entries[i * d + i], x);
                }
                shifted.det().value()
            })
            .collect();

        let mut result = Polynomial::zero(m);
        for (j, &xj) in points.iter().enumerate() {
            let mut basis = Polynomial::one(m);
            let mut denom = 1u64;
            for (k, &xk) in points.iter().enumerate() {
                if k == j {
                    continue;
                }
                basis = basis.mul(&Polynomial::new(m, vec![m.neg(xk), 1]));
                denom = m.mul(denom, m.sub(xj, xk));
            }
            let coeff = m.mul(values[j], m.inv(denom)?);
            result = result.add(&basis.scale(coeff));
        }
        Ok(result)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix<{}>{:?}", self.modulus, self.rows())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.modulus.value().saturating_sub(1).to_string().len();
        for row in self.entries.chunks(self.dim) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>width$}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Distinct nonzero eigenvalues of a diagonal private key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagonalSpec {
    lambdas: Vec<u64>,
}

impl DiagonalSpec {
    pub fn new(modulus: PrimeModulus, lambdas: Vec<u64>) -> Result<Self, MatrixError> {
        if lambdas.is_empty() {
            return Err(MatrixError::ZeroDimension);
        }
        let mut seen = HashSet::with_capacity(lambdas.len());
        for &l in &lambdas {
            if l == 0 {
                return Err(MatrixError::InvalidDiagonal("zero entry".into()));
            }
            if l >= modulus.value() {
                return Err(FieldError::OutOfRange {
                    value: l,
                    p: modulus.value(),
                }
                .into());
            }
            if !seen.insert(l) {
                return Err(MatrixError::InvalidDiagonal(format!("repeated value {l}")));
            }
        }
        Ok(Self { lambdas })
    }

    /// Skips validation; used by enumeration where the invariant holds by construction.
    pub(crate) fn from_trusted(lambdas: Vec<u64>) -> Self {
        Self { lambdas }
    }

    pub fn lambdas(&self) -> &[u64] {
        &self.lambdas
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn to_matrix(&self, modulus: PrimeModulus) -> Matrix {
        Matrix::diagonal(modulus, &self.lambdas).expect("validated diagonal")
    }

    /// Each eigenvalue raised to a signed power.
    pub fn pow(&self, modulus: PrimeModulus, exp: i64) -> Vec<u64> {
        self.lambdas
            .iter()
            .map(|&l| {
                let base = if exp < 0 {
                    modulus.inv(l).expect("nonzero eigenvalue")
                } else {
                    l
                };
                modulus.pow(base, exp.unsigned_abs())
            })
            .collect()
    }
}

/// `P * diag(lambdas) * P^-1`.
pub fn conjugate(p_mat: &Matrix, diag: &DiagonalSpec) -> Result<Matrix, MatrixError> {
    if diag.dim() != p_mat.dim() {
        return Err(MatrixError::DimensionMismatch {
            left: p_mat.dim(),
            right: diag.dim(),
        });
    }
    let d = diag.to_matrix(p_mat.modulus());
    let p_inv = p_mat.inv()?;
    p_mat.mul(&d)?.mul(&p_inv)
}

/// Rejection-samples a uniform element of GL(d, F_p).
pub fn sample_invertible<R: Rng + ?Sized>(modulus: PrimeModulus, dim: usize, rng: &mut R) -> Matrix {
    sample_invertible_counted(modulus, dim, rng).0
}

/// As [`sample_invertible`], also returning how many draws were needed.
pub fn sample_invertible_counted<R: Rng + ?Sized>(modulus: PrimeModulus, dim: usize, rng: &mut R) -> (Matrix, u64) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let m = Matrix::random(modulus, dim, rng);
        if m.is_invertible() {
            return (m, attempts);
        }
    }
}

/// Draws `dim` distinct values from `1..p` without replacement.
pub fn sample_distinct_diagonal<R: Rng + ?Sized>(
    modulus: PrimeModulus,
    dim: usize,
    rng: &mut R,
) -> Result<DiagonalSpec, MatrixError> {
    let p = modulus.value();
    if dim == 0 {
        return Err(MatrixError::ZeroDimension);
    }
    if p - 1 < dim as u64 {
        return Err(MatrixError::FieldTooSmall { p, d: dim });
    }
    let mut seen = HashSet::with_capacity(dim);
    let mut lambdas = Vec::with_capacity(dim);
    while lambdas.len() < dim {
        let v = rng.gen_range(1..p);
        if seen.insert(v) {
            lambdas.push(v);
        }
    }
    Ok(DiagonalSpec::from_trusted(lambdas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fp(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    fn mat(p: u64, rows: &[[u64; 2]]) -> Matrix {
        Matrix::from_rows(fp(p), rows).unwrap()
    }

    fn diag(p: u64, v: &[u64]) -> Matrix {
        Matrix::diagonal(fp(p), v).unwrap()
    }

    #[test]
    fn multiplication_examples() {
        let m = mat(5, &[[1, 3], [4, 2]]);
        assert_eq!(Matrix::identity(fp(5), 2).mul(&m).unwrap(), m);
        assert_eq!(diag(7, &[2, 3]).mul(&diag(7, &[3, 5])).unwrap(), diag(7, &[6, 1]));
        let u = mat(5, &[[1, 1], [0, 1]]);
        assert_eq!(u.mul(&u).unwrap(), mat(5, &[[1, 2], [0, 1]]));
    }

    #[test]
    fn mismatched_operands() {
        let a = Matrix::identity(fp(5), 2);
        assert!(matches!(
            a.mul(&Matrix::identity(fp(5), 3)),
            Err(MatrixError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            a.mul(&Matrix::identity(fp(7), 2)),
            Err(MatrixError::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(Matrix::identity(fp(251), 4).det().value(), 1);
        assert_eq!(diag(7, &[2, 3]).det().value(), 6);
        assert_eq!(mat(5, &[[1, 2], [2, 4]]).det().value(), 0);
        // row swap flips the sign
        assert_eq!(mat(7, &[[0, 1], [1, 0]]).det().value(), 6);
    }

    #[test]
    fn inverse_examples() {
        let i = Matrix::identity(fp(7), 3);
        assert_eq!(i.inv().unwrap(), i);
        assert_eq!(diag(7, &[2, 3]).inv().unwrap(), diag(7, &[4, 5]));
        assert_eq!(mat(5, &[[1, 2], [2, 4]]).inv(), Err(MatrixError::Singular));
    }

    #[test]
    fn power_examples() {
        let u = mat(5, &[[1, 1], [0, 1]]);
        assert!(u.pow(0).unwrap().is_identity());
        assert!(u.pow(5).unwrap().is_identity());
        assert_eq!(diag(7, &[2, 3]).pow(3).unwrap(), diag(7, &[1, 6]));
        assert_eq!(diag(7, &[2, 3]).pow(-1).unwrap(), diag(7, &[4, 5]));
        assert_eq!(mat(5, &[[1, 2], [2, 4]]).pow(-2), Err(MatrixError::Singular));
    }

    #[test]
    fn conjugation_examples() {
        let d = DiagonalSpec::new(fp(7), vec![2, 3]).unwrap();
        assert_eq!(conjugate(&Matrix::identity(fp(7), 2), &d).unwrap(), diag(7, &[2, 3]));
        let p = mat(5, &[[1, 1], [0, 1]]);
        let d = DiagonalSpec::new(fp(5), vec![1, 2]).unwrap();
        assert_eq!(conjugate(&p, &d).unwrap(), mat(5, &[[1, 1], [0, 2]]));
    }

    #[test]
    fn commutation_examples() {
        let u = mat(5, &[[1, 1], [0, 1]]);
        assert!(u.commutes(&Matrix::identity(fp(5), 2)).unwrap());
        assert!(!u.commutes(&diag(5, &[1, 2])).unwrap());
    }

    #[test]
    fn characteristic_polynomials() {
        assert_eq!(diag(7, &[2, 3]).char_poly().unwrap().coefficients(), &[6, 2, 1]);
        assert_eq!(
            Matrix::identity(fp(5), 2).char_poly().unwrap().coefficients(),
            &[1, 3, 1]
        );
        assert_eq!(
            diag(11, &[1, 4, 9]).char_poly().unwrap(),
            Polynomial::from_roots(fp(11), &[1, 4, 9])
        );
        assert_eq!(
            Matrix::identity(fp(3), 2).char_poly(),
            Err(MatrixError::ModulusTooSmall { p: 3, d: 2 })
        );
    }

    #[test]
    fn diagonal_validation() {
        let m = fp(7);
        assert!(DiagonalSpec::new(m, vec![1, 2, 3]).is_ok());
        assert!(matches!(
            DiagonalSpec::new(m, vec![0, 2]),
            Err(MatrixError::InvalidDiagonal(_))
        ));
        assert!(matches!(
            DiagonalSpec::new(m, vec![2, 2]),
            Err(MatrixError::InvalidDiagonal(_))
        ));
        assert!(matches!(DiagonalSpec::new(m, vec![7, 2]), Err(MatrixError::Field(_))));
    }

    #[test]
    fn sampling_contracts() {
        let m = fp(251);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert!(sample_invertible(m, 4, &mut rng).is_invertible());
        }
        let a = sample_invertible(m, 8, &mut ChaCha20Rng::seed_from_u64(9));
        let b = sample_invertible(m, 8, &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(a, b);

        let forced = sample_distinct_diagonal(fp(5), 4, &mut rng).unwrap();
        let mut sorted = forced.lambdas().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2, 3, 4]);
        assert_eq!(
            sample_distinct_diagonal(fp(5), 5, &mut rng),
            Err(MatrixError::FieldTooSmall { p: 5, d: 5 })
        );
    }

    #[test]
    fn distinct_diagonals_at_full_size() {
        let m = fp(251);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let d = sample_distinct_diagonal(m, 8, &mut rng).unwrap();
            let set: HashSet<_> = d.lambdas().iter().collect();
            assert_eq!(set.len(), 8);
            assert!(d.lambdas().iter().all(|&l| l != 0 && l < 251));
        }
    }

    #[test]
    fn rejection_rate_matches_gl23_count() {
        // exhaustive: |GL(2,3)| = 48 of 81 matrices
        let m = fp(3);
        let invertible = (0..81u64)
            .filter(|&code| {
                let e = (0..4).map(|i| code / 3u64.pow(i) % 3).collect();
                Matrix::from_entries(m, 2, e).unwrap().is_invertible()
            })
            .count();
        assert_eq!(invertible, 48);

        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let trials = 20_000;
        let draws: u64 = (0..trials).map(|_| sample_invertible_counted(m, 2, &mut rng).1).sum();
        let ratio = trials as f64 / draws as f64;
        assert!((ratio - 48.0 / 81.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn large_modulus_products() {
        let m = fp(9_223_372_036_854_775_783);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let a = sample_invertible(m, 3, &mut rng);
        assert!(a.mul(&a.inv().unwrap()).unwrap().is_identity());
    }
}
