//! Exact arithmetic over rational functions of the formal dimension `n`.
//!
//! Every scalar the engine manipulates is a ratio of integer-coefficient
//! polynomials in `n`, kept reduced (gcd 1) with the denominator's leading
//! coefficient positive. This gives a unique representative per rational
//! function, so values can serve as map keys and compare by `==`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoeffError {
    #[error("division by the zero rational function")]
    DivisionByZeroPoly,
    #[error("denominator vanishes at n = {0}")]
    PoleAtDimension(i64),
}

/// Integer-coefficient polynomial in `n`, stored by ascending degree with a
/// nonzero trailing (highest-degree) coefficient unless zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyInN {
    coeffs: Vec<BigInt>,
}

impl PolyInN {
    pub fn zero() -> Self {
        PolyInN { coeffs: vec![] }
    }

    pub fn one() -> Self {
        PolyInN::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        PolyInN::from_coeffs(vec![BigInt::from(c)])
    }

    pub fn constant_big(c: BigInt) -> Self {
        PolyInN::from_coeffs(vec![c])
    }

    /// The polynomial `n`.
    pub fn n() -> Self {
        PolyInN::from_coeffs(vec![BigInt::zero(), BigInt::one()])
    }

    /// `n + c`.
    pub fn n_plus(c: i64) -> Self {
        PolyInN::from_coeffs(vec![BigInt::from(c), BigInt::one()])
    }

    pub fn from_coeffs(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        PolyInN { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn eval(&self, n0: i64) -> BigInt {
        let x = BigInt::from(n0);
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * &x + c;
        }
        acc
    }

    fn add_ref(&self, other: &PolyInN) -> PolyInN {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let a = self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero);
            let b = other.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero);
            out.push(a + b);
        }
        PolyInN::from_coeffs(out)
    }

    fn neg_ref(&self) -> PolyInN {
        PolyInN::from_coeffs(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    fn mul_ref(&self, other: &PolyInN) -> PolyInN {
        if self.is_zero() || other.is_zero() {
            return PolyInN::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyInN::from_coeffs(out)
    }

    /// Content: gcd of all coefficients, with the sign of the leading one.
    fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
        }
        if self.leading().is_negative() {
            -g
        } else {
            g
        }
    }

    fn primitive(&self) -> PolyInN {
        if self.is_zero() {
            return PolyInN::zero();
        }
        let c = self.content();
        self.exact_div_scalar(&c)
    }

    fn exact_div_scalar(&self, d: &BigInt) -> PolyInN {
        assert!(!d.is_zero());
        PolyInN::from_coeffs(
            self.coeffs
                .iter()
                .map(|c| {
                    let (q, r) = c.div_rem(d);
                    assert!(r.is_zero(), "inexact scalar division in PolyInN");
                    q
                })
                .collect(),
        )
    }

    /// Exact polynomial division; panics if `self` is not a multiple of `d`.
    /// Valid because exact divisibility over Z[n] makes every leading-term
    /// division land in Z.
    pub fn exact_div(&self, d: &PolyInN) -> PolyInN {
        assert!(!d.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return PolyInN::zero();
        }
        assert!(self.degree() >= d.degree(), "inexact polynomial division");
        let mut rem = self.coeffs.clone();
        let dn = d.degree();
        let dl = d.leading();
        let qdeg = self.degree() - dn;
        let mut q = vec![BigInt::zero(); qdeg + 1];
        for k in (0..=qdeg).rev() {
            let lead = rem[k + dn].clone();
            if lead.is_zero() {
                continue;
            }
            let (c, r) = lead.div_rem(&dl);
            assert!(r.is_zero(), "inexact polynomial division");
            q[k] = c.clone();
            for (i, dc) in d.coeffs.iter().enumerate() {
                rem[k + i] -= &c * dc;
            }
        }
        assert!(rem.iter().all(|c| c.is_zero()), "inexact polynomial division");
        PolyInN::from_coeffs(q)
    }

    /// Pseudo-remainder of self by d (both nonzero, deg(self) >= deg(d)).
    fn pseudo_rem(&self, d: &PolyInN) -> PolyInN {
        let mut r = self.clone();
        let dl = d.leading();
        while !r.is_zero() && r.degree() >= d.degree() {
            let shift = r.degree() - d.degree();
            let rl = r.leading();
            let mut new = vec![BigInt::zero(); r.coeffs.len()];
            for (i, c) in r.coeffs.iter().enumerate() {
                new[i] = c * &dl;
            }
            for (i, c) in d.coeffs.iter().enumerate() {
                new[i + shift] -= &rl * c;
            }
            r = PolyInN::from_coeffs(new);
        }
        r
    }

    pub fn gcd(&self, other: &PolyInN) -> PolyInN {
        if self.is_zero() {
            return normalize_gcd(other.clone());
        }
        if other.is_zero() {
            return normalize_gcd(self.clone());
        }
        let ca = self.content().abs();
        let cb = other.content().abs();
        let cg = ca.gcd(&cb);
        let mut a = self.primitive();
        let mut b = other.primitive();
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive();
            a = b;
            b = r;
        }
        let mut g = a.primitive();
        g = g.mul_ref(&PolyInN::constant_big(cg));
        normalize_gcd(g)
    }
}

fn normalize_gcd(p: PolyInN) -> PolyInN {
    if p.leading().is_negative() {
        p.neg_ref()
    } else {
        p
    }
}

impl fmt::Display for PolyInN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (deg, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit = mag.is_one();
            match (deg, unit) {
                (0, _) => write!(f, "{}", mag)?,
                (1, true) => write!(f, "n")?,
                (1, false) => write!(f, "{}*n", mag)?,
                (_, true) => write!(f, "n^{}", deg)?,
                (_, false) => write!(f, "{}*n^{}", mag, deg)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PolyInN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Reduced ratio of integer polynomials in `n`; the engine's scalar type.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalInN {
    num: PolyInN,
    den: PolyInN,
}

impl RationalInN {
    pub fn zero() -> Self {
        RationalInN { num: PolyInN::zero(), den: PolyInN::one() }
    }

    pub fn one() -> Self {
        RationalInN::int(1)
    }

    pub fn int(k: i64) -> Self {
        RationalInN { num: PolyInN::constant(k), den: PolyInN::one() }
    }

    pub fn frac(a: i64, b: i64) -> Self {
        RationalInN::new(PolyInN::constant(a), PolyInN::constant(b)).unwrap()
    }

    /// The rational function `n`.
    pub fn n() -> Self {
        RationalInN::from_poly(PolyInN::n())
    }

    pub fn from_poly(p: PolyInN) -> Self {
        RationalInN { num: p, den: PolyInN::one() }
    }

    /// Binomial coefficient C(t, k) as a constant.
    pub fn binom(t: u64, k: u64) -> Self {
        if k > t {
            return RationalInN::zero();
        }
        let mut v = BigInt::one();
        for i in 0..k {
            v = v * BigInt::from(t - i) / BigInt::from(i + 1);
        }
        RationalInN::from_poly(PolyInN::constant_big(v))
    }

    pub fn new(num: PolyInN, den: PolyInN) -> Result<Self, CoeffError> {
        if den.is_zero() {
            return Err(CoeffError::DivisionByZeroPoly);
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: PolyInN, den: PolyInN) -> Self {
        if num.is_zero() {
            return RationalInN::zero();
        }
        let g = num.gcd(&den);
        let mut num = num.exact_div(&g);
        let mut den = den.exact_div(&g);
        if den.leading().is_negative() {
            num = num.neg_ref();
            den = den.neg_ref();
        }
        RationalInN { num, den }
    }

    pub fn num(&self) -> &PolyInN {
        &self.num
    }

    pub fn den(&self) -> &PolyInN {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == PolyInN::one() && self.den == PolyInN::one()
    }

    pub fn inv(&self) -> Result<Self, CoeffError> {
        if self.is_zero() {
            return Err(CoeffError::DivisionByZeroPoly);
        }
        Ok(Self::reduced(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, CoeffError> {
        Ok(self.clone() * other.inv()?)
    }

    /// Exact evaluation at an integer dimension; error on a pole.
    pub fn eval(&self, n0: i64) -> Result<(BigInt, BigInt), CoeffError> {
        let d = self.den.eval(n0);
        if d.is_zero() {
            return Err(CoeffError::PoleAtDimension(n0));
        }
        let n = self.num.eval(n0);
        let g = n.gcd(&d);
        if g.is_zero() {
            return Ok((BigInt::zero(), BigInt::one()));
        }
        let (mut n, mut d) = (n / &g, d / &g);
        if d.is_negative() {
            n = -n;
            d = -d;
        }
        Ok((n, d))
    }
}

impl Add for RationalInN {
    type Output = RationalInN;
    fn add(self, rhs: RationalInN) -> RationalInN {
        let num = self
            .num
            .mul_ref(&rhs.den)
            .add_ref(&rhs.num.mul_ref(&self.den));
        RationalInN::reduced(num, self.den.mul_ref(&rhs.den))
    }
}

impl Sub for RationalInN {
    type Output = RationalInN;
    fn sub(self, rhs: RationalInN) -> RationalInN {
        self + (-rhs)
    }
}

impl Neg for RationalInN {
    type Output = RationalInN;
    fn neg(self) -> RationalInN {
        RationalInN { num: self.num.neg_ref(), den: self.den }
    }
}

impl Mul for RationalInN {
    type Output = RationalInN;
    fn mul(self, rhs: RationalInN) -> RationalInN {
        RationalInN::reduced(self.num.mul_ref(&rhs.num), self.den.mul_ref(&rhs.den))
    }
}

impl Div for RationalInN {
    type Output = RationalInN;
    fn div(self, rhs: RationalInN) -> RationalInN {
        self.checked_div(&rhs).expect("division by zero rational function")
    }
}

impl fmt::Display for RationalInN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num_simple = self.num.coeffs.iter().filter(|c| !c.is_zero()).count() <= 1;
        if self.den == PolyInN::one() {
            if num_simple {
                write!(f, "{}", self.num)
            } else {
                write!(f, "({})", self.num)
            }
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalInN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nm(c: i64) -> RationalInN {
        RationalInN::from_poly(PolyInN::n_plus(c))
    }

    #[test]
    fn additive_identity() {
        let a = RationalInN::one().checked_div(&nm(-3)).unwrap();
        assert_eq!(a.clone() + RationalInN::zero(), a);
    }

    #[test]
    fn gcd_cancellation_in_mul() {
        // (n-4)/(n-3) * (n-3)/(n-2) = (n-4)/(n-2)
        let lhs = nm(-4).checked_div(&nm(-3)).unwrap() * nm(-3).checked_div(&nm(-2)).unwrap();
        let rhs = nm(-4).checked_div(&nm(-2)).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn aggregate_constant_simplifies() {
        // ((n-4)(n-3) - 2(n-4)^2 + (n-4)^2 - 2(n-4) + 2) / ((n-3)(n-4)) = (-n+6)/((n-3)(n-4))
        let m4 = nm(-4);
        let m3 = nm(-3);
        let num = m4.clone() * m3.clone() - RationalInN::int(2) * m4.clone() * m4.clone()
            + m4.clone() * m4.clone()
            - RationalInN::int(2) * m4.clone()
            + RationalInN::int(2);
        let c = num.checked_div(&(m3.clone() * m4.clone())).unwrap();
        let expected = (RationalInN::int(6) - RationalInN::n())
            .checked_div(&(m3 * m4))
            .unwrap();
        assert_eq!(c, expected);
        assert!(!c.is_zero());
        // vanishes at n = 6
        let (num6, _) = c.eval(6).unwrap();
        assert!(num6.is_zero());
    }

    #[test]
    fn eval_and_poles() {
        let p = nm(-3);
        assert!(p.eval(3).unwrap().0.is_zero());
        let inv = RationalInN::one().checked_div(&p).unwrap();
        assert_eq!(inv.eval(3), Err(CoeffError::PoleAtDimension(3)));
        let c = (RationalInN::int(6) - RationalInN::n())
            .checked_div(&(nm(-3) * nm(-4)))
            .unwrap();
        assert_eq!(c.eval(6).unwrap().0, BigInt::zero());
    }

    #[test]
    fn display_forms() {
        let p = PolyInN::from_coeffs(vec![12.into(), (-7).into(), 1.into()]);
        assert_eq!(p.to_string(), "n^2 - 7*n + 12");
        let r = RationalInN::new(PolyInN::n_plus(-4), PolyInN::n_plus(-3)).unwrap();
        assert_eq!(r.to_string(), "(n - 4) / (n - 3)");
    }

    #[test]
    fn binom_values() {
        assert_eq!(RationalInN::binom(3, 2), RationalInN::int(3));
        assert_eq!(RationalInN::binom(1, 2), RationalInN::zero());
        assert_eq!(RationalInN::binom(4, 2), RationalInN::int(6));
    }
}
