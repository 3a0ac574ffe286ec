//! Prime-field arithmetic for a modulus chosen at runtime.
//!
//! Elements are always stored as canonical residues in `[0, p)`. The modulus
//! is limited to `p < 2^63` so that every product fits in a `u128`.

use std::fmt;

use thiserror::Error;

/// Largest modulus accepted (exclusive).
pub const MAX_MODULUS: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too small (need p >= 3)")]
    TooSmall(u64),
    #[error("modulus {0} is too large (need p < 2^63)")]
    TooLarge(u64),
    #[error("operands belong to different fields (p = {left} vs p = {right})")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value {value} is not a canonical residue mod {p}")]
    OutOfRange { value: u64, p: u64 },
}

/// A validated prime modulus together with its serialized element width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeModulus {
    p: u64,
    elem_width: usize,
}

impl PrimeModulus {
    /// Validates `p` with a deterministic Miller-Rabin test.
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p < 3 {
            return Err(FieldError::TooSmall(p));
        }
        if p >= MAX_MODULUS {
            return Err(FieldError::TooLarge(p));
        }
        if !is_prime_u64(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Self {
            p,
            elem_width: byte_width(p),
        })
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.p
    }

    /// Bytes per serialized element: the smallest `w` with `256^w >= p`.
    #[inline]
    pub fn elem_width(&self) -> usize {
        self.elem_width
    }

    pub fn element(&self, value: u64) -> Result<FieldElement, FieldError> {
        if value >= self.p {
            return Err(FieldError::OutOfRange { value, p: self.p });
        }
        Ok(FieldElement { value, modulus: *self })
    }

    /// Reduces an arbitrary integer into the field.
    pub fn reduce(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.p,
            modulus: *self,
        }
    }

    pub fn reduce_signed(&self, value: i64) -> u64 {
        value.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        let mut sq = base % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, sq);
            }
            sq = self.mul(sq, sq);
            exp >>= 1;
        }
        acc
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Result<u64, FieldError> {
        let a = a % self.p;
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.p as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.p as i128) as u64)
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

fn byte_width(p: u64) -> usize {
    // largest representable value is p - 1
    let bits = 64 - (p - 1).leading_zeros() as usize;
    bits.div_ceil(8).max(1)
}

/// Deterministic Miller-Rabin; this witness set is exact for all 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'outer: for &a in &WITNESSES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// A canonical residue tagged with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: PrimeModulus,
}

/// Binary operation selector for [`FieldElement::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
}

// fallible, so the operator traits do not fit
#[allow(clippy::should_implement_trait)]
impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn zero(modulus: PrimeModulus) -> Self {
        Self { value: 0, modulus }
    }

    pub fn one(modulus: PrimeModulus) -> Self {
        Self { value: 1, modulus }
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch {
                left: self.modulus.p,
                right: other.modulus.p,
            });
        }
        Ok(())
    }

    pub fn apply(self, op: FieldOp, rhs: Self) -> Result<Self, FieldError> {
        self.check(&rhs)?;
        let m = self.modulus;
        let value = match op {
            FieldOp::Add => m.add(self.value, rhs.value),
            FieldOp::Sub => m.sub(self.value, rhs.value),
            FieldOp::Mul => m.mul(self.value, rhs.value),
        };
        Ok(Self { value, modulus: m })
    }

    pub fn add(self, rhs: Self) -> Result<Self, FieldError> {
        self.apply(FieldOp::Add, rhs)
    }

    pub fn sub(self, rhs: Self) -> Result<Self, FieldError> {
        self.apply(FieldOp::Sub, rhs)
    }

    pub fn mul(self, rhs: Self) -> Result<Self, FieldError> {
        self.apply(FieldOp::Mul, rhs)
    }

    pub fn neg(self) -> Self {
        Self {
            value: self.modulus.neg(self.value),
            modulus: self.modulus,
        }
    }

    pub fn inv(self) -> Result<Self, FieldError> {
        Ok(Self {
            value: self.modulus.inv(self.value)?,
            modulus: self.modulus,
        })
    }

    pub fn pow(self, exp: u64) -> Self {
        Self {
            value: self.modulus.pow(self.value, exp),
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
