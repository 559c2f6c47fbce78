//! The structure function of the deformed Virasoro exchange relation:
//! f(z) = 1/(1-z) * (zq^2; Q)_inf (zt^2; Q)_inf / ((zq^4t^2; Q)_inf (zq^2t^4; Q)_inf)
//! with Q = q^4 t^4, together with its degenerations (the constant series at
//! t = 1, the first-order t-expansion reproducing the odd q-kernel) and the
//! relation prefactor (q - q^{-1})(t - t^{-1}).
//!
//! Every z^k coefficient in the computation is carried as a polynomial
//! numerator over the implicit denominator (Q; Q)_k. Products and inversions
//! stay in that form through Gaussian-binomial cofactors, so no polynomial
//! gcd is ever taken inside the series arithmetic; the only divisions happen
//! coefficient-by-coefficient at the very end, against known binomial factors.

use std::collections::BTreeMap;

use num::rational::BigRational;

use crate::error::Result;
use crate::param::{poly_gcd, Mono, Param, ParamPoly, ParamRational};
use crate::series::{Coeff, Series, SeriesVar};

/// A rational function num / prod_i f_i^{e_i} with the denominator kept as a
/// multiset of canonical polynomial factors.
#[derive(Clone, PartialEq, Debug)]
pub struct FactoredRational {
    num: ParamPoly,
    den: BTreeMap<ParamPoly, u32>,
}

impl FactoredRational {
    pub fn zero() -> Self {
        FactoredRational {
            num: ParamPoly::zero(),
            den: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        FactoredRational {
            num: ParamPoly::one(),
            den: BTreeMap::new(),
        }
    }

    pub fn from_poly(p: ParamPoly) -> Self {
        FactoredRational {
            num: p,
            den: BTreeMap::new(),
        }
    }

    pub fn with_denominator_factor(mut self, f: ParamPoly, e: u32) -> Self {
        assert!(!f.is_zero());
        if e > 0 && !f.is_one() {
            *self.den.entry(f).or_insert(0) += e;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn denominator_factors(&self) -> impl Iterator<Item = (&ParamPoly, &u32)> {
        self.den.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut union: BTreeMap<ParamPoly, u32> = self.den.clone();
        for (f, e) in &other.den {
            let slot = union.entry(f.clone()).or_insert(0);
            *slot = (*slot).max(*e);
        }
        let scale_up = |num: &ParamPoly, own: &BTreeMap<ParamPoly, u32>| {
            let mut n = num.clone();
            for (f, e) in &union {
                let have = own.get(f).copied().unwrap_or(0);
                for _ in have..*e {
                    n = n.mul(f);
                }
            }
            n
        };
        let num = scale_up(&self.num, &self.den).add(&scale_up(&other.num, &other.den));
        if num.is_zero() {
            return FactoredRational::zero();
        }
        FactoredRational { num, den: union }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        FactoredRational {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut den = self.den.clone();
        for (f, e) in &other.den {
            *den.entry(f.clone()).or_insert(0) += e;
        }
        let num = self.num.mul(&other.num);
        if num.is_zero() {
            return FactoredRational::zero();
        }
        FactoredRational { num, den }
    }

    /// Substitute t = 1 (factors must survive as non-zero polynomials).
    pub fn subst_t_one(&self) -> Self {
        let num = self.num.subst_one(Param::T);
        let mut den = BTreeMap::new();
        for (f, e) in &self.den {
            let f1 = f.subst_one(Param::T);
            assert!(!f1.is_zero(), "denominator factor vanished at t = 1");
            if !f1.is_one() {
                *den.entry(f1).or_insert(0) += e;
            }
        }
        FactoredRational { num, den }
    }

    /// d/dt via the quotient rule, keeping the denominator factored.
    pub fn deriv_t(&self) -> Self {
        let mut out = FactoredRational {
            num: self.num.deriv(Param::T),
            den: self.den.clone(),
        };
        for (f, e) in &self.den {
            let fprime = f.deriv(Param::T);
            if fprime.is_zero() {
                continue;
            }
            let mut den = self.den.clone();
            *den.get_mut(f).unwrap() += 1;
            let term = FactoredRational {
                num: self
                    .num
                    .mul(&fprime)
                    .mul_rat(&BigRational::from_integer((*e).into()))
                    .neg(),
                den,
            };
            out = out.add(&term);
        }
        out
    }

    /// Exact reduced form. Each remaining gcd is taken against one small
    /// factor polynomial at a time.
    pub fn to_param_rational(&self) -> Result<ParamRational> {
        let mut num = self.num.clone();
        let mut den = ParamPoly::one();
        for (f, e) in &self.den {
            for _ in 0..*e {
                let g = poly_gcd(&num, f);
                if g.is_one() {
                    den = den.mul(f);
                } else {
                    num = num.exact_div(&g).unwrap();
                    let rest = f.exact_div(&g).unwrap();
                    den = den.mul(&rest);
                }
            }
        }
        ParamRational::new(num, den)
    }
}

impl Coeff for FactoredRational {
    fn zero() -> Self {
        FactoredRational::zero()
    }
    fn one() -> Self {
        FactoredRational::one()
    }
    fn is_zero(&self) -> bool {
        FactoredRational::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        FactoredRational::add(self, other)
    }
    fn neg(&self) -> Self {
        FactoredRational::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        FactoredRational::mul(self, other)
    }
    fn mul_rat(&self, c: &BigRational) -> Self {
        FactoredRational {
            num: self.num.mul_rat(c),
            den: self.den.clone(),
        }
    }
}

/// q^a t^b as a polynomial monomial.
fn qt_mono(a: u32, b: u32) -> ParamPoly {
    ParamPoly::monomial(Mono::new(a, b, 0), BigRational::from_integer(1.into()))
}

/// Series in z whose k-th coefficient is coeffs[k] / (base; base)_k, the
/// canonical common-denominator form for products of Pochhammer expansions.
struct PochSeries {
    base: ParamPoly,
    coeffs: Vec<ParamPoly>,
}

/// Gaussian binomial cofactors g[k][j] = (b;b)_k / ((b;b)_j (b;b)_{k-j}),
/// computed by the Pascal-type recurrence g[k][j] = g[k-1][j-1] + b^j g[k-1][j].
struct GaussTable {
    rows: Vec<Vec<ParamPoly>>,
}

impl GaussTable {
    fn new(base: &ParamPoly, order: usize) -> Self {
        let mut rows: Vec<Vec<ParamPoly>> = Vec::with_capacity(order + 1);
        let mut base_pow: Vec<ParamPoly> = Vec::with_capacity(order + 1);
        base_pow.push(ParamPoly::one());
        for k in 1..=order {
            base_pow.push(base_pow[k - 1].mul(base));
        }
        for k in 0..=order {
            let mut row = vec![ParamPoly::one(); k + 1];
            for j in 1..k {
                row[j] = rows[k - 1][j - 1].add(&base_pow[j].mul(&rows[k - 1][j]));
            }
            rows.push(row);
        }
        GaussTable { rows }
    }

    fn get(&self, k: usize, j: usize) -> &ParamPoly {
        &self.rows[k][j]
    }
}

impl PochSeries {
    fn one(base: ParamPoly, order: usize) -> Self {
        let mut coeffs = vec![ParamPoly::zero(); order];
        if order > 0 {
            coeffs[0] = ParamPoly::one();
        }
        PochSeries { base, coeffs }
    }

    /// (z a; base)_inf: coefficient k is (-1)^k base^{k(k-1)/2} a^k / (b;b)_k.
    fn pochhammer(a: &ParamPoly, base: ParamPoly, order: usize) -> Self {
        let mut coeffs = vec![ParamPoly::zero(); order];
        let mut a_pow = ParamPoly::one();
        let mut tri = ParamPoly::one();
        for (k, c) in coeffs.iter_mut().enumerate() {
            if k > 0 {
                a_pow = a_pow.mul(a);
                if k >= 2 {
                    tri = tri.mul(&base.pow((k - 1) as u32));
                }
            }
            let sign = if k % 2 == 1 {
                BigRational::from_integer((-1).into())
            } else {
                BigRational::from_integer(1.into())
            };
            *c = a_pow.mul(&tri).mul_rat(&sign);
        }
        PochSeries { base, coeffs }
    }

    /// 1/(1-z): every plain coefficient is 1, i.e. numerator (b;b)_k.
    fn geometric(base: ParamPoly, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order);
        let mut poch = ParamPoly::one();
        let mut base_pow = ParamPoly::one();
        for k in 0..order {
            if k > 0 {
                base_pow = base_pow.mul(&base);
                poch = poch.mul(&ParamPoly::one().sub(&base_pow));
            }
            coeffs.push(poch.clone());
        }
        PochSeries { base, coeffs }
    }

    fn mul(&self, other: &Self, gauss: &GaussTable) -> Self {
        assert_eq!(self.base, other.base);
        let order = self.coeffs.len().min(other.coeffs.len());
        let mut coeffs = vec![ParamPoly::zero(); order];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = ParamPoly::zero();
            for j in 0..=k {
                let a = &self.coeffs[j];
                let b = &other.coeffs[k - j];
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(b).mul(gauss.get(k, j)));
            }
            *ck = acc;
        }
        PochSeries {
            base: self.base.clone(),
            coeffs,
        }
    }

    /// Inverse of a series with constant coefficient 1.
    fn invert(&self, gauss: &GaussTable) -> Self {
        assert!(self.coeffs[0].is_one());
        let order = self.coeffs.len();
        let mut inv = vec![ParamPoly::zero(); order];
        inv[0] = ParamPoly::one();
        for k in 1..order {
            let mut acc = ParamPoly::zero();
            for j in 1..=k {
                if self.coeffs[j].is_zero() || inv[k - j].is_zero() {
                    continue;
                }
                acc = acc.add(&self.coeffs[j].mul(&inv[k - j]).mul(gauss.get(k, j)));
            }
            inv[k] = acc.neg();
        }
        PochSeries {
            base: self.base.clone(),
            coeffs: inv,
        }
    }

    /// Package as factored-denominator coefficients.
    fn into_series(self) -> Series<FactoredRational> {
        let order = self.coeffs.len() as i64;
        let mut out = Series::zero(SeriesVar::Z, order);
        let mut base_pow = ParamPoly::one();
        let mut den: BTreeMap<ParamPoly, u32> = BTreeMap::new();
        for (k, c) in self.coeffs.into_iter().enumerate() {
            if k > 0 {
                base_pow = base_pow.mul(&self.base);
                *den.entry(ParamPoly::one().sub(&base_pow)).or_insert(0) += 1;
            }
            if c.is_zero() {
                continue;
            }
            out = out.add(&Series::monomial(
                SeriesVar::Z,
                order,
                k as i64,
                FactoredRational {
                    num: c,
                    den: den.clone(),
                },
            ));
        }
        out
    }
}

/// The four Pochhammer parameters of the structure function, optionally
/// specialized at t = 1.
fn assemble(order: usize, at_t_one: bool) -> PochSeries {
    let spec = |a: u32, b: u32| {
        if at_t_one {
            qt_mono(a, 0)
        } else {
            qt_mono(a, b)
        }
    };
    let base = spec(4, 4);
    let gauss = GaussTable::new(&base, order);
    let num = PochSeries::pochhammer(&spec(2, 0), base.clone(), order).mul(
        &PochSeries::pochhammer(&spec(0, 2), base.clone(), order),
        &gauss,
    );
    let den = PochSeries::pochhammer(&spec(4, 2), base.clone(), order).mul(
        &PochSeries::pochhammer(&spec(2, 4), base.clone(), order),
        &gauss,
    );
    let geo = PochSeries::geometric(base.clone(), order);
    num.mul(&den.invert(&gauss), &gauss).mul(&geo, &gauss)
}

/// The structure function to the requested order with factored coefficients.
pub fn structure_function_factored(order: i64) -> Series<FactoredRational> {
    assemble(order as usize, false).into_series()
}

/// The structure function as a reduced-coefficient series.
pub fn deformed_structure_function(order: i64) -> Result<Series<ParamRational>> {
    let factored = structure_function_factored(order);
    let mut out = Series::zero(SeriesVar::Z, order);
    for (&k, c) in factored.iter() {
        out = out.add(&Series::monomial(
            SeriesVar::Z,
            order,
            k,
            c.to_param_rational()?,
        ));
    }
    Ok(out)
}

/// At t = 1 the factors cancel against 1/(1-z): the series collapses to 1.
pub fn structure_function_at_t_one(order: i64) -> Result<Series<ParamRational>> {
    let factored = assemble(order as usize, true).into_series();
    let mut out = Series::zero(SeriesVar::Z, order);
    for (&k, c) in factored.iter() {
        out = out.add(&Series::monomial(
            SeriesVar::Z,
            order,
            k,
            c.to_param_rational()?,
        ));
    }
    Ok(out)
}

/// d/dt at t = 1 of one coefficient of the factored series.
pub fn t_expansion_coefficient(
    factored: &Series<FactoredRational>,
    n: i64,
) -> Result<ParamRational> {
    factored
        .coeff(n)
        .deriv_t()
        .subst_t_one()
        .to_param_rational()
}

/// The frozen global constant relating the first-order t-expansion of the
/// structure function to the kernel (q^n - q^{-n})/(q^n + q^{-n}).
pub const T_EXPANSION_SCALE: i64 = 2;

/// The prefactor of the deformed exchange relation, (q - q^{-1})(t - t^{-1});
/// it vanishes at t = 1, where the relation degenerates to commutativity.
pub fn relation_prefactor() -> ParamRational {
    let q = ParamRational::param_pow(Param::Q, 1).sub(&ParamRational::param_pow(Param::Q, -1));
    let t = ParamRational::param_pow(Param::T, 1).sub(&ParamRational::param_pow(Param::T, -1));
    q.mul(&t)
}

/// Rendered template of the deformed exchange relation.
pub fn relation_template(latex: bool) -> String {
    if latex {
        "f(w/z)\\,T(z)T(w) - f(z/w)\\,T(w)T(z) = (q-q^{-1})(t-t^{-1})\\left(\\delta\\!\\left(\\frac{w}{zq^2t^2}\\right) - \\delta\\!\\left(\\frac{wq^2t^2}{z}\\right)\\right)".to_string()
    } else {
        "f(w/z) T(z)T(w) - f(z/w) T(w)T(z) = (q - q^-1)(t - t^-1) (delta(w/(z q^2 t^2)) - delta(w q^2 t^2 / z))"
            .to_string()
    }
}
