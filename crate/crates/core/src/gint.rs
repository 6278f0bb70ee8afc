//! Exact arithmetic in the Gaussian integers ℤ[i].
//!
//! [`GaussInt`] is the ring every other module works over. Division uses
//! coordinate-wise rounding of the exact quotient (ties to even), which gives
//! the Euclidean bound `N(r) <= N(b)/2`. The [`EuclideanDomain`] trait is the
//! interface the matrix code is generic over, so a different PID (for
//! example the Eisenstein integers) can be slotted in later.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest norm [`GaussInt::factor`] will attempt.
pub const FACTOR_NORM_BOUND: u128 = 1_000_000;

/// Operations a Euclidean domain must supply to the matrix algorithms.
pub trait EuclideanDomain:
    Copy
    + Eq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Euclidean size; zero only for zero.
    fn norm(&self) -> u128;
    /// `(q, r)` with `self = q·d + r` and `norm(r) < norm(d)`.
    fn div_rem(&self, d: &Self) -> Result<(Self, Self)>;
    /// `(c, u)` with `self = u·c`, `u` a unit and `c` the canonical associate.
    fn canonical(&self) -> (Self, Self);
    /// Inverse of a unit, `None` for non-units.
    fn unit_inverse(&self) -> Option<Self>;
    /// Ring involution used for inner products (identity for real rings).
    fn conjugate(&self) -> Self;
    fn try_add(&self, o: &Self) -> Option<Self>;
    fn try_sub(&self, o: &Self) -> Option<Self>;
    fn try_mul(&self, o: &Self) -> Option<Self>;
    /// Approximate complex value, for heuristics such as size reduction.
    fn approx(&self) -> (f64, f64);
    /// Ring element nearest to an approximate value, if representable.
    fn nearest(re: f64, im: f64) -> Option<Self>;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    /// `true` when `d` divides `self` exactly.
    fn divides(d: &Self, x: &Self) -> bool {
        if d.is_zero() {
            return x.is_zero();
        }
        matches!(x.div_rem(d), Ok((_, r)) if r.is_zero())
    }
}

/// An element `re + im·i` of ℤ[i].
///
/// Serializes as the pair `[re, im]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

impl From<[i64; 2]> for GaussInt {
    fn from(v: [i64; 2]) -> Self {
        GaussInt::new(v[0], v[1])
    }
}

impl From<GaussInt> for [i64; 2] {
    fn from(g: GaussInt) -> Self {
        [g.re, g.im]
    }
}

impl From<i64> for GaussInt {
    fn from(re: i64) -> Self {
        GaussInt::new(re, 0)
    }
}

fn narrow(v: i128, what: &'static str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(what))
}

/// Nearest integer to `num/den` (den > 0), ties to even.
fn round_half_even(num: i128, den: i128) -> i128 {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };
    pub const ONE: GaussInt = GaussInt { re: 1, im: 0 };
    pub const I: GaussInt = GaussInt { re: 0, im: 1 };
    /// The four units `1, i, -1, -i`.
    pub const UNITS: [GaussInt; 4] = [
        GaussInt { re: 1, im: 0 },
        GaussInt { re: 0, im: 1 },
        GaussInt { re: -1, im: 0 },
        GaussInt { re: 0, im: -1 },
    ];

    pub const fn new(re: i64, im: i64) -> Self {
        GaussInt { re, im }
    }

    pub fn conj(self) -> Self {
        GaussInt::new(self.re, -self.im)
    }

    /// `re² + im²`, exact for every representable element.
    pub fn norm(self) -> u128 {
        let re = self.re.unsigned_abs() as u128;
        let im = self.im.unsigned_abs() as u128;
        re * re + im * im
    }

    /// Norm as `u64`, failing when it does not fit.
    pub fn norm_u64(self) -> Result<u64> {
        u64::try_from(self.norm()).map_err(|_| Error::Overflow("norm"))
    }

    pub fn is_zero(self) -> bool {
        self == Self::ZERO
    }

    pub fn is_unit(self) -> bool {
        self.norm() == 1
    }

    pub fn checked_add(self, o: Self) -> Option<Self> {
        Some(GaussInt::new(
            self.re.checked_add(o.re)?,
            self.im.checked_add(o.im)?,
        ))
    }

    pub fn checked_sub(self, o: Self) -> Option<Self> {
        Some(GaussInt::new(
            self.re.checked_sub(o.re)?,
            self.im.checked_sub(o.im)?,
        ))
    }

    pub fn checked_mul(self, o: Self) -> Option<Self> {
        let (a, b, c, d) = (self.re as i128, self.im as i128, o.re as i128, o.im as i128);
        let re = a.checked_mul(c)?.checked_sub(b.checked_mul(d)?)?;
        let im = a.checked_mul(d)?.checked_add(b.checked_mul(c)?)?;
        Some(GaussInt::new(
            i64::try_from(re).ok()?,
            i64::try_from(im).ok()?,
        ))
    }

    pub fn pow(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }

    /// Euclidean division: `a = q·b + r` with `N(r) <= N(b)/2`.
    ///
    /// `q` rounds each coordinate of `a/b` to the nearest integer, halves to
    /// even.
    pub fn divmod(self, b: Self) -> Result<(Self, Self)> {
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (ar, ai, br, bi) = (self.re as i128, self.im as i128, b.re as i128, b.im as i128);
        // a·conj(b); products of i64 fit i128, the sums need checking.
        let num_re = (ar * br)
            .checked_add(ai * bi)
            .ok_or(Error::Overflow("divmod"))?;
        let num_im = (ai * br)
            .checked_sub(ar * bi)
            .ok_or(Error::Overflow("divmod"))?;
        let den = i128::try_from(b.norm()).map_err(|_| Error::Overflow("divmod"))?;
        let q = GaussInt::new(
            narrow(round_half_even(num_re, den), "divmod")?,
            narrow(round_half_even(num_im, den), "divmod")?,
        );
        let qb = q.checked_mul(b).ok_or(Error::Overflow("divmod"))?;
        let r = self.checked_sub(qb).ok_or(Error::Overflow("divmod"))?;
        Ok((q, r))
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn exact_div(self, d: Self) -> Option<Self> {
        match self.divmod(d) {
            Ok((q, r)) if r.is_zero() => Some(q),
            _ => None,
        }
    }

    /// The associate in the first quadrant (`re > 0, im >= 0`); zero maps to
    /// zero.
    pub fn canonical_associate(self) -> Self {
        self.split_unit().0
    }

    /// `(c, u)` with `self = u·c`, `c` canonical.
    pub fn split_unit(self) -> (Self, Self) {
        if self.is_zero() {
            return (Self::ZERO, Self::ONE);
        }
        // self·v lands in the first quadrant for exactly one unit v; then u = v⁻¹.
        for v in Self::UNITS {
            let c = self * v;
            if c.re > 0 && c.im >= 0 {
                return (c, v.conj());
            }
        }
        unreachable!("every nonzero Gaussian integer has a first-quadrant associate")
    }

    /// Greatest common divisor, canonical associate.
    pub fn gcd(self, other: Self) -> Result<Self> {
        if self.is_zero() && other.is_zero() {
            return Err(Error::InvalidArgument("gcd(0, 0) is undefined".into()));
        }
        let (mut a, mut b) = (self, other);
        while !b.is_zero() {
            let (_, r) = a.divmod(b)?;
            a = b;
            b = r;
        }
        Ok(a.canonical_associate())
    }

    /// Whether `self` is a Gaussian prime.
    pub fn is_prime(self) -> bool {
        if self.re == 0 || self.im == 0 {
            // Associate of a rational integer m: prime iff m is a rational
            // prime that stays inert, m ≡ 3 (mod 4).
            let m = (self.re.unsigned_abs() + self.im.unsigned_abs()) as u128;
            return m % 4 == 3 && is_rational_prime(m);
        }
        is_rational_prime(self.norm())
    }

    /// Factorization into a unit and canonical prime powers, ordered by norm.
    pub fn factor(self) -> Result<Factorization> {
        if self.is_zero() {
            return Err(Error::InvalidArgument("cannot factor zero".into()));
        }
        let n = self.norm();
        if n > FACTOR_NORM_BOUND {
            return Err(Error::Capacity {
                what: "norm",
                value: n,
                bound: FACTOR_NORM_BOUND,
            });
        }
        let mut rest = self;
        let mut factors = Vec::new();
        for p in rational_prime_divisors(n as u64) {
            for pi in primes_over(p) {
                let mut e = 0u32;
                while let Some(q) = rest.exact_div(pi) {
                    rest = q;
                    e += 1;
                }
                if e > 0 {
                    factors.push((pi, e));
                }
            }
        }
        debug_assert!(rest.is_unit());
        factors.sort_by_key(|(pi, _)| (pi.norm(), pi.re, pi.im));
        Ok(Factorization {
            unit: rest,
            factors,
        })
    }

    /// The Gaussian integer nearest to a complex point, ties rounding away
    /// from zero.
    pub fn round_from(re: f64, im: f64) -> Self {
        GaussInt::new(re.round() as i64, im.round() as i64)
    }
}

/// Canonical Gaussian primes lying over the rational prime `p`.
fn primes_over(p: u64) -> Vec<GaussInt> {
    if p == 2 {
        return vec![GaussInt::new(1, 1)];
    }
    if p % 4 == 3 {
        return vec![GaussInt::new(p as i64, 0)];
    }
    let mut a = 1u64;
    while a * a < p {
        let b2 = p - a * a;
        let b = isqrt(b2);
        if b * b == b2 {
            let pi = GaussInt::new(a as i64, b as i64);
            let mut out = vec![pi.canonical_associate(), pi.conj().canonical_associate()];
            out.sort();
            return out;
        }
        a += 1;
    }
    unreachable!("p ≡ 1 (mod 4) is a sum of two squares")
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn rational_prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    if m <= u64::MAX as u128 {
        return a * b % m;
    }
    let (mut a, mut b, mut acc) = (a % m, b, 0u128);
    while b > 0 {
        if b & 1 == 1 {
            acc = if acc >= m - a { acc - (m - a) } else { acc + a };
        }
        a = if a >= m - a { a - (m - a) } else { a + a };
        b >>= 1;
    }
    acc
}

fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Miller–Rabin with the first twelve prime bases; deterministic below 3.3·10²⁴.
pub fn is_rational_prime(n: u128) -> bool {
    const BASES: [u128; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `unit · Π prime^exponent`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub unit: GaussInt,
    pub factors: Vec<(GaussInt, u32)>,
}

impl Factorization {
    pub fn product(&self) -> GaussInt {
        self.factors
            .iter()
            .fold(self.unit, |acc, &(p, e)| acc * p.pow(e))
    }

    /// Squarefree with every prime of the same norm: the condition under
    /// which `ℤ[i]/(r)` is a vector space over a single field.
    pub fn common_prime_norm(&self) -> Option<u128> {
        let first = self.factors.first()?.0.norm();
        self.factors
            .iter()
            .all(|&(p, e)| e == 1 && p.norm() == first)
            .then_some(first)
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.unit)?;
        for (p, e) in &self.factors {
            if *e == 1 {
                write!(f, "·({p})")?;
            } else {
                write!(f, "·({p})^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0 {
            write!(f, "{}-{}i", self.re, self.im.unsigned_abs())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl fmt::Debug for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for GaussInt {
    type Output = GaussInt;
    fn add(self, o: Self) -> Self {
        self.checked_add(o)
            .expect("Gaussian integer overflow in add")
    }
}

impl Sub for GaussInt {
    type Output = GaussInt;
    fn sub(self, o: Self) -> Self {
        self.checked_sub(o)
            .expect("Gaussian integer overflow in sub")
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;
    fn mul(self, o: Self) -> Self {
        self.checked_mul(o)
            .expect("Gaussian integer overflow in mul")
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> Self {
        GaussInt::new(-self.re, -self.im)
    }
}

impl AddAssign for GaussInt {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for GaussInt {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign for GaussInt {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl EuclideanDomain for GaussInt {
    fn zero() -> Self {
        GaussInt::ZERO
    }

    fn one() -> Self {
        GaussInt::ONE
    }

    fn norm(&self) -> u128 {
        GaussInt::norm(*self)
    }

    fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        self.divmod(*d)
    }

    fn canonical(&self) -> (Self, Self) {
        let (c, u) = self.split_unit();
        (c, u)
    }

    fn unit_inverse(&self) -> Option<Self> {
        self.is_unit().then(|| self.conj())
    }

    fn conjugate(&self) -> Self {
        self.conj()
    }

    fn try_add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }

    fn try_sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }

    fn try_mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }

    fn approx(&self) -> (f64, f64) {
        (self.re as f64, self.im as f64)
    }

    fn nearest(re: f64, im: f64) -> Option<Self> {
        let limit = i64::MAX as f64 / 2.0;
        (re.is_finite() && im.is_finite() && re.abs() < limit && im.abs() < limit)
            .then(|| GaussInt::round_from(re, im))
    }
}
