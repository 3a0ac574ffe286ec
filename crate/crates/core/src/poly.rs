//! Dense univariate polynomials over a prime field.

use std::fmt;

use num_bigint::BigUint;

use crate::field::PrimeModulus;

/// Coefficients in ascending degree order with no trailing zeros.
/// The zero polynomial has an empty coefficient list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    modulus: PrimeModulus,
    coeffs: Vec<u64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, reducing each mod p.
    pub fn new(modulus: PrimeModulus, coeffs: Vec<u64>) -> Self {
        let p = modulus.value();
        let mut poly = Self {
            modulus,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        };
        poly.trim();
        poly
    }

    pub fn zero(modulus: PrimeModulus) -> Self {
        Self {
            modulus,
            coeffs: Vec::new(),
        }
    }

    pub fn one(modulus: PrimeModulus) -> Self {
        Self::new(modulus, vec![1])
    }

    /// The monomial `x`.
    pub fn x(modulus: PrimeModulus) -> Self {
        Self::new(modulus, vec![0, 1])
    }

    /// `prod (x - r)` over the given roots.
    pub fn from_roots(modulus: PrimeModulus, roots: &[u64]) -> Self {
        roots.iter().fold(Self::one(modulus), |acc, &r| {
            acc.mul(&Self::new(modulus, vec![modulus.neg(r % modulus.value()), 1]))
        })
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coeffs
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&1)
    }

    pub fn leading(&self) -> u64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn eval(&self, x: u64) -> u64 {
        let m = self.modulus;
        self.coeffs.iter().rev().fold(0, |acc, &c| m.add(m.mul(acc, x), c))
    }

    pub fn add(&self, other: &Self) -> Self {
        let m = self.modulus;
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                m.add(
                    self.coeffs.get(i).copied().unwrap_or(0),
                    other.coeffs.get(i).copied().unwrap_or(0),
                )
            })
            .collect();
        Self::new(m, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let m = self.modulus;
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                m.sub(
                    self.coeffs.get(i).copied().unwrap_or(0),
                    other.coeffs.get(i).copied().unwrap_or(0),
                )
            })
            .collect();
        Self::new(m, coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.modulus);
        }
        let m = self.modulus;
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = m.add(out[i + j], m.mul(a, b));
            }
        }
        Self::new(m, out)
    }

    pub fn scale(&self, k: u64) -> Self {
        let m = self.modulus;
        Self::new(m, self.coeffs.iter().map(|&c| m.mul(c, k)).collect())
    }

    /// Quotient and remainder. Panics if `divisor` is zero.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let m = self.modulus;
        let dd = divisor.coeffs.len() - 1;
        let lead_inv = m.inv(divisor.leading()).expect("leading coefficient is nonzero");
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(m), self.clone());
        }
        let mut quot = vec![0u64; rem.len() - dd];
        for shift in (0..quot.len()).rev() {
            let c = m.mul(rem[shift + dd], lead_inv);
            quot[shift] = c;
            if c == 0 {
                continue;
            }
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[shift + j] = m.sub(rem[shift + j], m.mul(c, dc));
            }
        }
        rem.truncate(dd);
        (Self::new(m, quot), Self::new(m, rem))
    }

    pub fn rem(&self, divisor: &Self) -> Self {
        self.div_rem(divisor).1
    }

    /// Monic greatest common divisor (zero if both inputs are zero).
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let inv = self.modulus.inv(a.leading()).expect("nonzero leading");
        a.scale(inv)
    }

    /// `self^exp mod modulus_poly` by square-and-multiply.
    pub fn pow_mod(&self, exp: &BigUint, modulus_poly: &Self) -> Self {
        let mut acc = Self::one(self.modulus).rem(modulus_poly);
        let base = self.rem(modulus_poly);
        for i in (0..exp.bits()).rev() {
            acc = acc.mul(&acc).rem(modulus_poly);
            if exp.bit(i) {
                acc = acc.mul(&base).rem(modulus_poly);
            }
        }
        acc
    }

    /// `x^(p^times) mod f`, computed by `times` successive p-th powerings.
    fn frobenius_iterate(&self, times: usize) -> Self {
        let p = BigUint::from(self.modulus.value());
        let mut g = Self::x(self.modulus).rem(self);
        for _ in 0..times {
            g = g.pow_mod(&p, self);
        }
        g
    }

    /// Rabin's irreducibility test for a monic polynomial of degree `d >= 1`:
    /// `x^(p^d) = x (mod f)` and `gcd(x^(p^(d/q)) - x, f) = 1` for every
    /// prime `q | d`.
    pub fn is_irreducible(&self) -> bool {
        let d = match self.degree() {
            None | Some(0) => return false,
            Some(1) => return true,
            Some(d) => d,
        };
        let x = Self::x(self.modulus);
        if self.frobenius_iterate(d) != x.rem(self) {
            return false;
        }
        prime_factors(d as u64).into_iter().all(|q| {
            let h = self.frobenius_iterate(d / q as usize).sub(&x);
            self.gcd(&h).degree() == Some(0)
        })
    }

    /// Primitivity check given the distinct prime factors of `p^d - 1`.
    ///
    /// The factorization is trusted, not verified; a wrong list gives a wrong
    /// answer. `f` must be monic of degree `d`.
    pub fn is_primitive(&self, order_prime_factors: &[BigUint]) -> bool {
        if !self.is_irreducible() || self.eval(0) == 0 {
            return false;
        }
        let d = self.degree().unwrap_or(0) as u32;
        let order = BigUint::from(self.modulus.value()).pow(d) - 1u32;
        let x = Self::x(self.modulus);
        let one = Self::one(self.modulus);
        if x.pow_mod(&order, self) != one {
            return false;
        }
        order_prime_factors
            .iter()
            .all(|r| x.pow_mod(&(&order / r), self) != one)
    }
}

/// Distinct prime factors by trial division.
pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "x")?,
                (1, c) => write!(f, "{c}x")?,
                (i, 1) => write!(f, "x^{i}")?,
                (i, c) => write!(f, "{c}x^{i}")?,
            }
        }
        Ok(())
    }
}
