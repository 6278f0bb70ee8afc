//! ℤ[i] with 128-bit components, the working ring of the elimination.
//!
//! Intermediate entries of the transforms can pass `i64` on dense inputs
//! even when the final `P`, `Q` fit; results are narrowed at the end.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::gint::{EuclideanDomain, GaussInt};

const OVERFLOW: Error = Error::Overflow("wide Gaussian integer");

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub(crate) struct Wide {
    re: i128,
    im: i128,
}

impl Wide {
    const fn new(re: i128, im: i128) -> Self {
        Wide { re, im }
    }

    pub(crate) fn narrow(self) -> Result<GaussInt> {
        match (i64::try_from(self.re), i64::try_from(self.im)) {
            (Ok(re), Ok(im)) => Ok(GaussInt::new(re, im)),
            _ => Err(Error::Overflow("Smith transform entry exceeds i64")),
        }
    }
}

impl From<GaussInt> for Wide {
    fn from(g: GaussInt) -> Self {
        Wide::new(g.re.into(), g.im.into())
    }
}

// The elimination only uses the checked `try_*` forms; these panic on
// overflow like the primitive operators in debug builds.
impl Add for Wide {
    type Output = Wide;
    fn add(self, o: Wide) -> Wide {
        self.try_add(&o)
            .expect("wide Gaussian integer overflow in add")
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, o: Wide) -> Wide {
        self.try_sub(&o)
            .expect("wide Gaussian integer overflow in sub")
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, o: Wide) -> Wide {
        self.try_mul(&o)
            .expect("wide Gaussian integer overflow in mul")
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide::new(-self.re, -self.im)
    }
}

const UNITS: [Wide; 4] = [
    Wide::new(1, 0),
    Wide::new(0, 1),
    Wide::new(-1, 0),
    Wide::new(0, -1),
];

impl EuclideanDomain for Wide {
    fn zero() -> Self {
        Wide::new(0, 0)
    }

    fn one() -> Self {
        Wide::new(1, 0)
    }

    /// Saturates at `u128::MAX`; exact whenever it matters for division.
    fn norm(&self) -> u128 {
        let (a, b) = (self.re.unsigned_abs(), self.im.unsigned_abs());
        a.checked_mul(a)
            .and_then(|x| b.checked_mul(b).and_then(|y| x.checked_add(y)))
            .unwrap_or(u128::MAX)
    }

    /// Quotient from a floating-point estimate, corrected until the
    /// remainder is strictly smaller than `d`; the remainder is exact.
    fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let nd = d.norm();
        if nd == u128::MAX {
            return Err(OVERFLOW);
        }
        let mut q = Wide::zero();
        let mut r = *self;
        for _ in 0..8 {
            if r.norm() < nd {
                return Ok((q, r));
            }
            let (rr, ri) = r.approx();
            let (dr, di) = d.approx();
            let den = dr * dr + di * di;
            let step = Wide::nearest((rr * dr + ri * di) / den, (ri * dr - rr * di) / den)
                .ok_or(OVERFLOW)?;
            q = q.try_add(&step).ok_or(OVERFLOW)?;
            r = r
                .try_sub(&step.try_mul(d).ok_or(OVERFLOW)?)
                .ok_or(OVERFLOW)?;
        }
        Err(OVERFLOW)
    }

    fn canonical(&self) -> (Self, Self) {
        if self.is_zero() {
            return (Wide::zero(), Wide::one());
        }
        for v in UNITS {
            let c = self
                .try_mul(&v)
                .expect("unit multiples cannot overflow past negation");
            if c.re > 0 && c.im >= 0 {
                return (c, v.conjugate());
            }
        }
        unreachable!("every nonzero Gaussian integer has a first-quadrant associate")
    }

    fn unit_inverse(&self) -> Option<Self> {
        self.is_unit().then(|| self.conjugate())
    }

    fn conjugate(&self) -> Self {
        Wide::new(self.re, -self.im)
    }

    fn try_add(&self, o: &Self) -> Option<Self> {
        Some(Wide::new(
            self.re.checked_add(o.re)?,
            self.im.checked_add(o.im)?,
        ))
    }

    fn try_sub(&self, o: &Self) -> Option<Self> {
        Some(Wide::new(
            self.re.checked_sub(o.re)?,
            self.im.checked_sub(o.im)?,
        ))
    }

    fn try_mul(&self, o: &Self) -> Option<Self> {
        let re = self
            .re
            .checked_mul(o.re)?
            .checked_sub(self.im.checked_mul(o.im)?)?;
        let im = self
            .re
            .checked_mul(o.im)?
            .checked_add(self.im.checked_mul(o.re)?)?;
        Some(Wide::new(re, im))
    }

    fn approx(&self) -> (f64, f64) {
        (self.re as f64, self.im as f64)
    }

    fn nearest(re: f64, im: f64) -> Option<Self> {
        let limit = i128::MAX as f64 / 2.0;
        (re.is_finite() && im.is_finite() && re.abs() < limit && im.abs() < limit)
            .then(|| Wide::new(re.round() as i128, im.round() as i128))
    }
}
