//! The finite field `F_q = ℤ[i]/(π)` for a Gaussian prime `π`.
//!
//! Elements are stored as their canonical residue in ℤ[i], so the reduction
//! map σ is a plain reduction and its lift σ⁻¹ returns the stored
//! representative.
//!
//! * `π = p` with `p ≡ 3 (mod 4)`: `q = p²`, residues have both coordinates
//!   in `[-(p-1)/2, (p-1)/2]`.
//! * `π` over a split prime `p ≡ 1 (mod 4)`: `q = p`, the residue is the
//!   minimal-norm element of its class, ties going to the smaller `(re, im)`.
//!
//! The ramified prime `1+i` is rejected.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::gint::GaussInt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Kind {
    Inert { p: i64 },
    Split,
}

/// The field `ℤ[i]/(π)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pi: GaussInt,
    q: u64,
    kind: Kind,
}

/// Vector over `F_q`.
pub type FieldVec = Vec<FieldElem>;

impl FieldSpec {
    /// Field for the Gaussian prime `pi` (any associate).
    pub fn new(pi: GaussInt) -> Result<Self> {
        if !pi.is_prime() {
            return Err(Error::UnsupportedModulus(pi, "not a Gaussian prime"));
        }
        let pi = pi.canonical_associate();
        if pi.norm() == 2 {
            return Err(Error::UnsupportedModulus(pi, "ramified prime 1+i"));
        }
        let q = pi.norm_u64()?;
        if q > u32::MAX as u64 {
            return Err(Error::UnsupportedModulus(pi, "field too large"));
        }
        let kind = if pi.im == 0 {
            Kind::Inert { p: pi.re }
        } else {
            Kind::Split
        };
        Ok(FieldSpec { pi, q, kind })
    }

    /// `F_{p²}` from a rational prime `p ≡ 3 (mod 4)`.
    pub fn inert(p: i64) -> Result<Self> {
        if p.rem_euclid(4) != 3 {
            return Err(Error::UnsupportedModulus(
                GaussInt::from(p),
                "rational modulus must be ≡ 3 mod 4",
            ));
        }
        Self::new(GaussInt::from(p))
    }

    pub fn modulus(&self) -> GaussInt {
        self.pi
    }

    /// Field size.
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Canonical residue of `g` modulo π.
    pub fn reduce(&self, g: GaussInt) -> GaussInt {
        match self.kind {
            Kind::Inert { p } => {
                let half = (p - 1) / 2;
                let c = |x: i64| (x + half).rem_euclid(p) - half;
                GaussInt::new(c(g.re), c(g.im))
            }
            Kind::Split => {
                let (_, r) = g.divmod(self.pi).expect("modulus is nonzero");
                // Minimal-norm elements of the class lie within one step of r.
                let mut best = r;
                for dr in -1..=1 {
                    for di in -1..=1 {
                        let c = r - GaussInt::new(dr, di) * self.pi;
                        if (c.norm(), c.re, c.im) < (best.norm(), best.re, best.im) {
                            best = c;
                        }
                    }
                }
                best
            }
        }
    }

    /// The ring homomorphism σ: ℤ[i] → F_q.
    pub fn sigma(&self, g: GaussInt) -> FieldElem {
        FieldElem {
            rep: self.reduce(g),
            spec: *self,
        }
    }

    pub fn zero(&self) -> FieldElem {
        self.sigma(GaussInt::ZERO)
    }

    pub fn one(&self) -> FieldElem {
        self.sigma(GaussInt::ONE)
    }

    /// All `q` elements, in a fixed order.
    pub fn elements(&self) -> Vec<FieldElem> {
        (0..self.q).map(|i| self.element(i)).collect()
    }

    /// The `i`-th element of [`FieldSpec::elements`], `0 <= i < q`.
    pub fn element(&self, i: u64) -> FieldElem {
        match self.kind {
            Kind::Inert { p } => {
                let half = (p - 1) / 2;
                let p = p as u64;
                let re = (i / p) as i64 - half;
                let im = (i % p) as i64 - half;
                FieldElem {
                    rep: GaussInt::new(re, im),
                    spec: *self,
                }
            }
            // ℤ → ℤ[i]/(π) is onto when π lies over a split prime.
            Kind::Split => self.sigma(GaussInt::from(i as i64)),
        }
    }

    /// Uniformly random element.
    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElem {
        self.element(uniform_below(rng, self.q))
    }

    pub fn random_vec<R: RngCore + ?Sized>(&self, len: usize, rng: &mut R) -> FieldVec {
        (0..len).map(|_| self.random(rng)).collect()
    }
}

/// Unbiased integer in `[0, n)`.
pub(crate) fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0);
    let zone = u64::MAX - (u64::MAX - n + 1) % n;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % n;
        }
    }
}

/// Element of `F_q`, stored as its canonical residue.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElem {
    rep: GaussInt,
    spec: FieldSpec,
}

impl FieldElem {
    /// The lift σ⁻¹: the canonical residue, with σ(σ⁻¹(w)) = w.
    pub fn lift(&self) -> GaussInt {
        self.rep
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.rep.is_zero()
    }

    pub fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = self.spec.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, `x^(q-2)`.
    pub fn inv(self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(self.spec.q - 2))
    }
}

/// σ⁻¹ as a free function.
pub fn sigma_inv(w: &FieldElem) -> GaussInt {
    w.lift()
}

/// σ as a free function.
pub fn sigma(g: GaussInt, spec: &FieldSpec) -> FieldElem {
    spec.sigma(g)
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rep)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rep)
    }
}

impl Add for FieldElem {
    type Output = FieldElem;
    fn add(self, o: Self) -> Self {
        debug_assert_eq!(self.spec, o.spec);
        self.spec.sigma(self.rep + o.rep)
    }
}

impl Sub for FieldElem {
    type Output = FieldElem;
    fn sub(self, o: Self) -> Self {
        debug_assert_eq!(self.spec, o.spec);
        self.spec.sigma(self.rep - o.rep)
    }
}

impl Mul for FieldElem {
    type Output = FieldElem;
    fn mul(self, o: Self) -> Self {
        debug_assert_eq!(self.spec, o.spec);
        self.spec.sigma(self.rep * o.rep)
    }
}

impl Neg for FieldElem {
    type Output = FieldElem;
    fn neg(self) -> Self {
        self.spec.sigma(-self.rep)
    }
}

/// `Σ coeffs[i]·vecs[i]` elementwise.
pub fn linear_combination(coeffs: &[FieldElem], vecs: &[FieldVec]) -> Result<FieldVec> {
    if coeffs.len() != vecs.len() || coeffs.is_empty() {
        return Err(Error::Dimension("coefficient/vector count mismatch".into()));
    }
    let len = vecs[0].len();
    if vecs.iter().any(|v| v.len() != len) {
        return Err(Error::Dimension("vectors of unequal length".into()));
    }
    let spec = *coeffs[0].spec();
    let mut out = vec![spec.zero(); len];
    for (c, v) in coeffs.iter().zip(vecs) {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o = *o + *c * *x;
        }
    }
    Ok(out)
}

/// Solves `A·X = B` where `A` is `L×L` over `F_q` and each row of `B` is a
/// message vector.
///
/// Fails with [`Error::Singular`] when `A` is not invertible.
pub fn solve_linear(a: &[Vec<FieldElem>], b: &[FieldVec]) -> Result<Vec<FieldVec>> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("coefficient matrix must be square".into()));
    }
    if b.len() != n {
        return Err(Error::Dimension(
            "right-hand side has wrong row count".into(),
        ));
    }
    let mut a: Vec<Vec<FieldElem>> = a.to_vec();
    let mut x: Vec<FieldVec> = b.to_vec();
    for c in 0..n {
        let pr = (c..n)
            .find(|&r| !a[r][c].is_zero())
            .ok_or(Error::Singular)?;
        a.swap(pr, c);
        x.swap(pr, c);
        let inv = a[c][c].inv()?;
        for v in a[c].iter_mut() {
            *v = *v * inv;
        }
        for v in x[c].iter_mut() {
            *v = *v * inv;
        }
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c];
            let (pivot_row, pivot_rhs) = (a[c].clone(), x[c].clone());
            for (v, p) in a[r].iter_mut().zip(&pivot_row) {
                *v = *v - f * *p;
            }
            for (v, p) in x[r].iter_mut().zip(&pivot_rhs) {
                *v = *v - f * *p;
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;
    use std::collections::HashSet;

    fn g(re: i64, im: i64) -> GaussInt {
        GaussInt::new(re, im)
    }

    fn f9() -> FieldSpec {
        FieldSpec::inert(3).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(f9().q(), 9);
        assert_eq!(FieldSpec::new(g(0, -3)).unwrap(), f9());
        assert_eq!(FieldSpec::new(g(2, 1)).unwrap().q(), 5);
        assert_eq!(FieldSpec::inert(7).unwrap().q(), 49);
        assert!(FieldSpec::new(g(1, 1)).is_err());
        assert!(FieldSpec::new(g(5, 0)).is_err());
        assert!(FieldSpec::inert(5).is_err());
    }

    #[test]
    fn sigma_examples() {
        let f = f9();
        assert!(f.sigma(g(3, 0)).is_zero());
        assert_eq!(f.sigma(g(4, 3)), f.one());
        assert_eq!(f.sigma(g(0, 1)) * f.sigma(g(0, 1)), f.sigma(g(-1, 0)));
        assert_eq!(sigma_inv(&f.zero()), GaussInt::ZERO);
    }

    #[test]
    fn residues_of_f9() {
        let f = f9();
        let reps: HashSet<GaussInt> = f.elements().iter().map(FieldElem::lift).collect();
        let expected: HashSet<GaussInt> = (-1..=1)
            .flat_map(|a| (-1..=1).map(move |b| g(a, b)))
            .collect();
        assert_eq!(reps, expected);
        for x in f.elements() {
            assert_eq!(f.sigma(sigma_inv(&x)), x);
            assert_eq!(x + (-x), f.zero());
        }
    }

    #[test]
    fn multiplication_matches_brute_force_table() {
        // Oracle: reduce products coordinate-wise mod 3 independently.
        let f = f9();
        let reduce = |g: GaussInt| (g.re.rem_euclid(3), g.im.rem_euclid(3));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let x = g(
                (rng.next_u32() % 41) as i64 - 20,
                (rng.next_u32() % 41) as i64 - 20,
            );
            let y = g(
                (rng.next_u32() % 41) as i64 - 20,
                (rng.next_u32() % 41) as i64 - 20,
            );
            let prod = f.sigma(x * y);
            assert_eq!(prod, f.sigma(x) * f.sigma(y));
            assert_eq!(reduce(prod.lift()), reduce(x * y));
            assert_eq!(f.sigma(x + y), f.sigma(x) + f.sigma(y));
        }
    }

    #[test]
    fn inverses_exhaustive() {
        for spec in [
            f9(),
            FieldSpec::new(g(2, 1)).unwrap(),
            FieldSpec::inert(7).unwrap(),
        ] {
            assert_eq!(spec.zero().inv(), Err(Error::DivisionByZero));
            for x in spec.elements().into_iter().filter(|x| !x.is_zero()) {
                assert_eq!(x * x.inv().unwrap(), spec.one(), "{spec:?} {x:?}");
            }
        }
    }

    #[test]
    fn split_field_is_surjective_and_kernel_is_ideal() {
        for pi in [g(2, 1), g(1, 2), g(3, 2), g(1, 4)] {
            let spec = FieldSpec::new(pi).unwrap();
            let elems = spec.elements();
            let distinct: HashSet<_> = elems.iter().copied().collect();
            assert_eq!(distinct.len() as u64, spec.q());
            for e in &elems {
                assert!(e.lift().norm() * 2 <= spec.q() as u128);
            }
            for a in -6..=6 {
                for b in -6..=6 {
                    let x = g(a, b);
                    assert_eq!(
                        spec.sigma(x).is_zero(),
                        <GaussInt as crate::gint::EuclideanDomain>::divides(&spec.modulus(), &x)
                    );
                    assert!(spec.sigma(x * spec.modulus()).is_zero());
                }
            }
        }
    }

    #[test]
    fn solve_examples() {
        let f = f9();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = vec![f.random_vec(5, &mut rng), f.random_vec(5, &mut rng)];
        let id = vec![vec![f.one(), f.zero()], vec![f.zero(), f.one()]];
        assert_eq!(solve_linear(&id, &b).unwrap(), b);

        let mut solved = 0;
        while solved < 50 {
            let a: Vec<Vec<FieldElem>> = (0..2).map(|_| f.random_vec(2, &mut rng)).collect();
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            match solve_linear(&a, &b) {
                Ok(x) => {
                    assert!(!det.is_zero());
                    for r in 0..2 {
                        let back = linear_combination(&a[r], &x).unwrap();
                        assert_eq!(back, b[r]);
                    }
                    solved += 1;
                }
                Err(e) => {
                    assert_eq!(e, Error::Singular);
                    assert!(det.is_zero());
                }
            }
        }
        let row = f.random_vec(2, &mut rng);
        assert_eq!(solve_linear(&[row.clone(), row], &b), Err(Error::Singular));
    }
}
