//! Truncated Laurent/power series with an explicit truncation order.
//!
//! A series knows the variable it lives in and the order `N` below which its
//! coefficients are certified; arithmetic never widens `N` silently.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed};

use crate::error::{Error, Result};
use crate::param::{Param, ParamRational};

/// Coefficient ring interface shared by the series carriers.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn mul_rat(&self, c: &BigRational) -> Self;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

impl Coeff for ParamRational {
    fn zero() -> Self {
        ParamRational::zero()
    }
    fn one() -> Self {
        ParamRational::one()
    }
    fn is_zero(&self) -> bool {
        ParamRational::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        ParamRational::add(self, other)
    }
    fn neg(&self) -> Self {
        ParamRational::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        ParamRational::mul(self, other)
    }
    fn mul_rat(&self, c: &BigRational) -> Self {
        ParamRational::mul_rat(self, c)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SeriesVar {
    Z,
    H,
    X,
}

impl SeriesVar {
    pub fn name(self) -> &'static str {
        match self {
            SeriesVar::Z => "z",
            SeriesVar::H => "h",
            SeriesVar::X => "x",
        }
    }
}

/// A truncated series: coefficients are certified for exponents `< trunc`.
#[derive(Clone, PartialEq, Debug)]
pub struct Series<C: Coeff> {
    var: SeriesVar,
    trunc: i64,
    coeffs: BTreeMap<i64, C>,
}

impl<C: Coeff> Series<C> {
    pub fn zero(var: SeriesVar, trunc: i64) -> Self {
        Series {
            var,
            trunc,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(var: SeriesVar, trunc: i64) -> Self {
        Series::monomial(var, trunc, 0, C::one())
    }

    pub fn constant(var: SeriesVar, trunc: i64, c: C) -> Self {
        Series::monomial(var, trunc, 0, c)
    }

    pub fn monomial(var: SeriesVar, trunc: i64, exp: i64, c: C) -> Self {
        let mut s = Series::zero(var, trunc);
        s.set(exp, c);
        s
    }

    pub fn from_coeffs(var: SeriesVar, trunc: i64, coeffs: Vec<(i64, C)>) -> Self {
        let mut s = Series::zero(var, trunc);
        for (e, c) in coeffs {
            s.add_to(e, c);
        }
        s
    }

    pub fn var(&self) -> SeriesVar {
        self.var
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn coeff(&self, exp: i64) -> C {
        assert!(exp < self.trunc, "coefficient beyond truncation order");
        self.coeffs.get(&exp).cloned().unwrap_or_else(C::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &C)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest stored exponent.
    pub fn order(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    fn set(&mut self, exp: i64, c: C) {
        if exp >= self.trunc {
            return;
        }
        if c.is_zero() {
            self.coeffs.remove(&exp);
        } else {
            self.coeffs.insert(exp, c);
        }
    }

    fn add_to(&mut self, exp: i64, c: C) {
        if exp >= self.trunc || c.is_zero() {
            return;
        }
        let cur = self.coeffs.remove(&exp);
        let s = match cur {
            Some(v) => v.add(&c),
            None => c,
        };
        if !s.is_zero() {
            self.coeffs.insert(exp, s);
        }
    }

    pub fn truncate(&self, trunc: i64) -> Self {
        let mut s = Series::zero(self.var, trunc.min(self.trunc));
        for (&e, c) in &self.coeffs {
            if e < s.trunc {
                s.coeffs.insert(e, c.clone());
            }
        }
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.var, other.var);
        let trunc = self.trunc.min(other.trunc);
        let mut s = self.truncate(trunc);
        for (&e, c) in &other.coeffs {
            s.add_to(e, c.clone());
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Series {
            var: self.var,
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Series::zero(self.var, self.trunc);
        }
        let mut s = Series::zero(self.var, self.trunc);
        for (&e, v) in &self.coeffs {
            s.set(e, v.mul(c));
        }
        s
    }

    pub fn scale_rat(&self, c: &BigRational) -> Self {
        let mut s = Series::zero(self.var, self.trunc);
        for (&e, v) in &self.coeffs {
            s.set(e, v.mul_rat(c));
        }
        s
    }

    /// Multiply by the variable to an integer power.
    pub fn shift(&self, k: i64) -> Self {
        let mut s = Series::zero(self.var, self.trunc + k);
        for (&e, c) in &self.coeffs {
            s.coeffs.insert(e + k, c.clone());
        }
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.var, other.var);
        // The unknown tail of one factor multiplies the lowest order of the
        // other, which is where certification stops.
        let ord_a = self.order().unwrap_or(0);
        let ord_b = other.order().unwrap_or(0);
        let trunc = (self.trunc + ord_b).min(other.trunc + ord_a);
        let mut s = Series::zero(self.var, trunc);
        for (&e1, c1) in &self.coeffs {
            for (&e2, c2) in &other.coeffs {
                if e1 + e2 < trunc {
                    s.add_to(e1 + e2, c1.mul(c2));
                }
            }
        }
        s
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = Series::one(self.var, self.trunc);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        r
    }

    /// d/dx.
    pub fn derivative(&self) -> Self {
        let mut s = Series::zero(self.var, self.trunc - 1);
        for (&e, c) in &self.coeffs {
            if e != 0 {
                s.set(e - 1, c.mul_rat(&BigRational::from_integer(BigInt::from(e))));
            }
        }
        s
    }

    /// exp of a series with zero constant term and no negative orders.
    pub fn exp(&self) -> Result<Self> {
        if self.order().map(|o| o <= 0).unwrap_or(false) {
            return Err(Error::NonzeroConstantTerm(format!(
                "lowest order {} in exp argument",
                self.order().unwrap()
            )));
        }
        let mut r = Series::one(self.var, self.trunc);
        if self.is_zero() {
            return Ok(r);
        }
        let ord = self.order().unwrap().max(1);
        let kmax = ((self.trunc - 1) / ord).max(0) as u64;
        let mut term = Series::one(self.var, self.trunc);
        let mut fact = BigRational::one();
        for k in 1..=kmax {
            term = term.mul(self).truncate(self.trunc);
            fact *= BigRational::from_integer(BigInt::from(k));
            r = r.add(&term.scale_rat(&(BigRational::one() / fact.clone())));
        }
        Ok(r)
    }

    /// Compose self with phi (substitute x -> phi), requiring ord(phi) >= 1.
    pub fn compose(&self, phi: &Self) -> Result<Self> {
        if phi.order().map(|o| o <= 0).unwrap_or(false) {
            return Err(Error::NonzeroConstantTerm(
                "composition argument must vanish at the origin".into(),
            ));
        }
        if self.coeffs.keys().any(|&e| e < 0) {
            return Err(Error::Unsupported(
                "composition of a series with negative orders".into(),
            ));
        }
        let trunc = self.trunc.min(phi.trunc);
        let mut r = Series::zero(self.var, trunc);
        // Horner from the top exponent down.
        let top = match self.coeffs.keys().next_back() {
            Some(&t) => t,
            None => return Ok(r),
        };
        for e in (0..=top).rev() {
            r = r.mul(phi).truncate(trunc);
            let c = self.coeffs.get(&e).cloned().unwrap_or_else(C::zero);
            if !c.is_zero() {
                r.add_to(0, c);
            }
        }
        Ok(r)
    }
}

impl Series<ParamRational> {
    /// Invert a series whose lowest term is an invertible coefficient.
    pub fn invert(&self) -> Result<Self> {
        let ord = self.order().ok_or(Error::DivisionByZero)?;
        let lead = self.coeff(ord);
        let lead_inv = lead.inv()?;
        // self = lead*x^ord * (1 + n) with ord(n) >= 1
        let normalized = self.shift(-ord).scale(&lead_inv);
        let depth = normalized.trunc;
        let mut tail = normalized.clone();
        tail.coeffs.remove(&0);
        let mut geo = Series::one(self.var, depth);
        let mut power = Series::one(self.var, depth);
        if !tail.is_zero() {
            let tail_ord = tail.order().unwrap();
            let kmax = ((depth - 1) / tail_ord.max(1)).max(0);
            for _ in 0..kmax {
                power = power.mul(&tail).neg().truncate(depth);
                geo = geo.add(&power);
            }
        }
        Ok(geo.scale(&lead_inv).shift(-ord))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.invert()?))
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for Series<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0 + O({}^{})", self.var.name(), self.trunc);
        }
        let mut first = true;
        for (&e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if e == 0 {
                write!(f, "{}", c)?;
            } else if e == 1 {
                write!(f, "{}*{}", c, self.var.name())?;
            } else {
                write!(f, "{}*{}^{}", c, self.var.name(), e)?;
            }
        }
        write!(f, " + O({}^{})", self.var.name(), self.trunc)
    }
}

/// A Laurent monomial c * z^k with c a monomial (or constant) in q, t.
#[derive(Clone, Debug)]
pub struct ZMonomial {
    pub z_exp: i64,
    pub scalar: ParamRational,
}

impl ZMonomial {
    pub fn new(z_exp: i64, scalar: ParamRational) -> Self {
        ZMonomial { z_exp, scalar }
    }

    pub fn zero() -> Self {
        ZMonomial {
            z_exp: 0,
            scalar: ParamRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero()
    }

    fn mul(&self, other: &ZMonomial) -> ZMonomial {
        ZMonomial {
            z_exp: self.z_exp + other.z_exp,
            scalar: self.scalar.mul(&other.scalar),
        }
    }
}

/// Truncated expansion of the infinite product (a; b)_inf = prod_{n>=0} (1 - a b^n)
/// with `a`, `b` Laurent monomials in z, q, t.
///
/// Truncation happens in one of two ways: either `b` carries a positive power
/// of z (finitely many factors contribute below the order), or `b` is a
/// positive monomial in q, t alone, in which case Euler's expansion
/// (a;b)_inf = sum_k (-1)^k b^{k(k-1)/2} a^k / (b;b)_k collapses each z-order
/// to a single exact coefficient.
pub fn q_pochhammer_series(a: &ZMonomial, b: &ZMonomial, order: i64) -> Result<Series<ParamRational>> {
    if a.is_zero() {
        return Ok(Series::one(SeriesVar::Z, order));
    }
    if b.is_zero() {
        let mut s = Series::one(SeriesVar::Z, order);
        s.add_to(a.z_exp, a.scalar.neg());
        return Ok(s);
    }
    if a.z_exp <= 0 {
        return Err(Error::NonTruncating(
            "first parameter must carry a positive power of z".into(),
        ));
    }
    if b.z_exp > 0 {
        // Finitely many factors matter below the truncation order.
        let mut s = Series::one(SeriesVar::Z, order);
        let mut ab = a.clone();
        while ab.z_exp < order {
            let mut factor = Series::one(SeriesVar::Z, order);
            factor.add_to(ab.z_exp, ab.scalar.neg());
            s = s.mul(&factor).truncate(order);
            ab = ab.mul(b);
        }
        return Ok(s);
    }
    if b.z_exp < 0 {
        return Err(Error::NonTruncating(
            "second parameter may not carry a negative power of z".into(),
        ));
    }
    // b is a pure q,t monomial; demand a genuinely positive one so that the
    // factors 1 - b^j in Euler's expansion are invertible.
    let is_positive_qt_monomial = b.scalar.den().is_one()
        && b.scalar.num().num_terms() == 1
        && b.scalar
            .num()
            .terms()
            .all(|(m, c)| c.is_one() && m.total_degree() > 0 && m.exp(Param::H) == 0);
    if !is_positive_qt_monomial {
        return Err(Error::NonTruncating(format!(
            "parameter {} is not a positive q,t monomial",
            b.scalar
        )));
    }
    let mut s = Series::zero(SeriesVar::Z, order);
    s.add_to(0, ParamRational::one());
    let mut b_pochhammer = ParamRational::one(); // (b;b)_k
    let mut b_power = ParamRational::one(); // b^k
    let mut b_triangle = ParamRational::one(); // b^{k(k-1)/2}
    let mut a_power = ZMonomial::new(0, ParamRational::one());
    let mut k: u32 = 0;
    loop {
        k += 1;
        a_power = a_power.mul(a);
        if a_power.z_exp >= order {
            break;
        }
        b_power = b_power.mul(&b.scalar);
        b_pochhammer = b_pochhammer.mul(&ParamRational::one().sub(&b_power));
        if k >= 2 {
            b_triangle = b_triangle.mul(&b.scalar.pow((k - 1) as i64).unwrap());
        }
        let sign = if k % 2 == 1 {
            BigRational::from_integer(BigInt::from(-1))
        } else {
            BigRational::one()
        };
        let coeff = b_triangle
            .mul(&a_power.scalar)
            .div(&b_pochhammer)?
            .mul_rat(&sign);
        s.add_to(a_power.z_exp, coeff);
    }
    Ok(s)
}

pub fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn big_ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn is_negative(c: &BigRational) -> bool {
    c.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::Param;

    fn pr(n: i64) -> ParamRational {
        ParamRational::from_int(n)
    }

    #[test]
    fn exp_of_zero_is_one() {
        let s: Series<ParamRational> = Series::zero(SeriesVar::H, 6);
        assert_eq!(s.exp().unwrap(), Series::one(SeriesVar::H, 6));
    }

    #[test]
    fn exp_taylor_coefficients() {
        // exp(h*w) to order h^3 with w a formal parameter: use w = t.
        let hw = Series::monomial(
            SeriesVar::H,
            4,
            1,
            ParamRational::var(Param::T),
        );
        let e = hw.exp().unwrap();
        assert_eq!(e.coeff(0), ParamRational::one());
        assert_eq!(e.coeff(1), ParamRational::var(Param::T));
        let t2 = ParamRational::var(Param::T).pow(2).unwrap();
        assert_eq!(e.coeff(2), t2.mul_rat(&big_ratio(1, 2)));
        let t3 = ParamRational::var(Param::T).pow(3).unwrap();
        assert_eq!(e.coeff(3), t3.mul_rat(&big_ratio(1, 6)));
    }

    #[test]
    fn exp_inverse_multiplies_to_one() {
        // s = h*z + h^2*z^2 as a series in z with h-coefficients.
        let h = ParamRational::var(Param::H);
        let s = Series::from_coeffs(
            SeriesVar::Z,
            8,
            vec![(1, h.clone()), (2, h.pow(2).unwrap())],
        );
        let product = s.exp().unwrap().mul(&s.neg().exp().unwrap());
        assert_eq!(product, Series::one(SeriesVar::Z, 8));
    }

    #[test]
    fn exp_is_a_homomorphism() {
        let h = ParamRational::var(Param::H);
        let s = Series::from_coeffs(SeriesVar::Z, 7, vec![(1, h.clone()), (3, pr(2))]);
        let t = Series::from_coeffs(SeriesVar::Z, 7, vec![(2, h), (1, pr(-1))]);
        let lhs = s.add(&t).exp().unwrap();
        let rhs = s.exp().unwrap().mul(&t.exp().unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn exp_rejects_constant_terms() {
        let s = Series::from_coeffs(SeriesVar::Z, 5, vec![(0, pr(1)), (1, pr(1))]);
        assert!(s.exp().is_err());
    }

    #[test]
    fn pochhammer_single_factor() {
        // (z; 0)_inf = 1 - z
        let a = ZMonomial::new(1, ParamRational::one());
        let s = q_pochhammer_series(&a, &ZMonomial::zero(), 6).unwrap();
        let mut expect = Series::one(SeriesVar::Z, 6);
        expect.add_to(1, pr(-1));
        assert_eq!(s, expect);
    }

    #[test]
    fn pochhammer_with_zero_first_argument() {
        let s = q_pochhammer_series(&ZMonomial::zero(), &ZMonomial::zero(), 4).unwrap();
        assert_eq!(s, Series::one(SeriesVar::Z, 4));
    }

    #[test]
    fn pochhammer_euler_matches_partial_product() {
        // (z q^2; q^4 t^4)_inf to order z^3: the Euler expansion must agree with
        // multiplying out enough explicit factors (independent oracle).
        let q2 = ParamRational::param_pow(Param::Q, 2);
        let b_scalar = ParamRational::param_pow(Param::Q, 4)
            .mul(&ParamRational::param_pow(Param::T, 4));
        let a = ZMonomial::new(1, q2.clone());
        let b = ZMonomial::new(0, b_scalar.clone());
        let order = 4;
        let s = q_pochhammer_series(&a, &b, order).unwrap();
        // The z^1 coefficient is the geometric sum -sum_n q^2 (q^4 t^4)^n,
        // i.e. -q^2/(1 - q^4 t^4):
        let c1 = s.coeff(1);
        let expect1 = q2
            .neg()
            .div(&ParamRational::one().sub(&b_scalar))
            .unwrap();
        assert_eq!(c1, expect1);
        // Functional equation check (a;b) = (1-a)(ab;b):
        let ab = a.mul(&b);
        let rhs = {
            let mut one_minus_a = Series::one(SeriesVar::Z, order);
            one_minus_a.add_to(a.z_exp, a.scalar.neg());
            one_minus_a.mul(&q_pochhammer_series(&ab, &b, order).unwrap())
        };
        assert_eq!(s, rhs.truncate(s.trunc()));
    }

    #[test]
    fn pochhammer_rejects_non_truncating_parameters() {
        let a = ZMonomial::new(1, ParamRational::one());
        let b = ZMonomial::new(0, ParamRational::from_int(1));
        assert!(q_pochhammer_series(&a, &b, 5).is_err());
        let b2 = ZMonomial::new(-1, ParamRational::one());
        assert!(q_pochhammer_series(&a, &b2, 5).is_err());
    }

    #[test]
    fn series_inversion() {
        // 1/(1-z) = 1 + z + z^2 + ...
        let mut s = Series::one(SeriesVar::Z, 6);
        s.add_to(1, pr(-1));
        let inv = s.invert().unwrap();
        for k in 0..6 {
            assert_eq!(inv.coeff(k), pr(1));
        }
        assert_eq!(s.mul(&inv), Series::one(SeriesVar::Z, 6));
    }

    #[test]
    fn truncation_is_the_min_of_operands() {
        let a: Series<ParamRational> = Series::one(SeriesVar::Z, 9);
        let b: Series<ParamRational> = Series::one(SeriesVar::Z, 5);
        assert_eq!(a.add(&b).trunc(), 5);
        assert_eq!(a.mul(&b).trunc(), 5);
    }
}
