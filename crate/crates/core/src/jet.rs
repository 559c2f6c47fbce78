//! Differential polynomial algebra in fields u_1, ..., u_m and their
//! derivatives, with the total derivative D, the variational (Euler)
//! derivative and substitution with automatic prolongation.
//!
//! Monomials may also carry integer powers of the independent-variable symbol
//! z, which satisfies D(z) = 1.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;


use crate::error::{Error, Result};
use crate::param::ParamRational;
use crate::series::Coeff;

/// The k-th derivative of the i-th field.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct JetVar {
    pub field: u8,
    pub order: u16,
}

impl JetVar {
    pub fn new(field: u8, order: u16) -> Self {
        JetVar { field, order }
    }
}

/// z^k * prod u_{i,j}^e, vars sorted and exponents positive.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct JetMono {
    pub z_exp: i64,
    vars: Vec<(JetVar, u32)>,
}

impl JetMono {
    pub fn one() -> Self {
        JetMono {
            z_exp: 0,
            vars: Vec::new(),
        }
    }

    pub fn var(v: JetVar) -> Self {
        JetMono {
            z_exp: 0,
            vars: vec![(v, 1)],
        }
    }

    pub fn z(k: i64) -> Self {
        JetMono {
            z_exp: k,
            vars: Vec::new(),
        }
    }

    pub fn vars(&self) -> &[(JetVar, u32)] {
        &self.vars
    }

    pub fn degree(&self) -> u64 {
        self.vars.iter().map(|(_, e)| *e as u64).sum()
    }

    pub fn is_one(&self) -> bool {
        self.z_exp == 0 && self.vars.is_empty()
    }

    fn mul(&self, other: &JetMono) -> JetMono {
        let mut vars = self.vars.clone();
        for (v, e) in &other.vars {
            match vars.binary_search_by_key(v, |(w, _)| *w) {
                Ok(i) => vars[i].1 += e,
                Err(i) => vars.insert(i, (*v, *e)),
            }
        }
        JetMono {
            z_exp: self.z_exp + other.z_exp,
            vars,
        }
    }

    fn exp_of(&self, v: JetVar) -> u32 {
        self.vars
            .binary_search_by_key(&v, |(w, _)| *w)
            .map(|i| self.vars[i].1)
            .unwrap_or(0)
    }

    fn with_exp(&self, v: JetVar, e: u32) -> JetMono {
        let mut vars = self.vars.clone();
        match vars.binary_search_by_key(&v, |(w, _)| *w) {
            Ok(i) => {
                if e == 0 {
                    vars.remove(i);
                } else {
                    vars[i].1 = e;
                }
            }
            Err(i) => {
                if e > 0 {
                    vars.insert(i, (v, e));
                }
            }
        }
        JetMono {
            z_exp: self.z_exp,
            vars,
        }
    }
}

// Degree-lexicographic on the jet part, z-power last.
impl Ord for JetMono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.vars.cmp(&other.vars))
            .then_with(|| self.z_exp.cmp(&other.z_exp))
    }
}

impl PartialOrd for JetMono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact differential polynomial with ParamRational coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct JetPoly {
    terms: BTreeMap<JetMono, ParamRational>,
}

impl JetPoly {
    pub fn zero() -> Self {
        JetPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        JetPoly::constant(ParamRational::one())
    }

    pub fn constant(c: ParamRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(JetMono::one(), c);
        }
        JetPoly { terms }
    }

    pub fn from_int(n: i64) -> Self {
        JetPoly::constant(ParamRational::from_int(n))
    }

    /// The field u_i itself (derivative order 0).
    pub fn field(i: u8) -> Self {
        JetPoly::var(JetVar::new(i, 0))
    }

    pub fn var(v: JetVar) -> Self {
        JetPoly::monomial(JetMono::var(v), ParamRational::one())
    }

    pub fn z() -> Self {
        JetPoly::monomial(JetMono::z(1), ParamRational::one())
    }

    pub fn z_pow(k: i64) -> Self {
        JetPoly::monomial(JetMono::z(k), ParamRational::one())
    }

    pub fn monomial(m: JetMono, c: ParamRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        JetPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&JetMono::one())
                .map(|c| c.is_one())
                .unwrap_or(false)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&JetMono, &ParamRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn as_constant(&self) -> Option<ParamRational> {
        if self.is_zero() {
            return Some(ParamRational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&JetMono::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    fn insert(&mut self, m: JetMono, c: ParamRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &JetPoly) -> JetPoly {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, other: &JetPoly) -> JetPoly {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert(m.clone(), c.neg());
        }
        r
    }

    pub fn neg(&self) -> JetPoly {
        JetPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &JetPoly) -> JetPoly {
        let mut r = JetPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                r.insert(m1.mul(m2), c1.mul(c2));
            }
        }
        r
    }

    pub fn mul_param(&self, c: &ParamRational) -> JetPoly {
        if c.is_zero() {
            return JetPoly::zero();
        }
        JetPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.mul(c)))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> JetPoly {
        let mut r = JetPoly::one();
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

    /// Fields occurring in this polynomial.
    pub fn fields(&self) -> BTreeSet<u8> {
        self.terms
            .keys()
            .flat_map(|m| m.vars().iter().map(|(v, _)| v.field))
            .collect()
    }

    /// Highest derivative order of a field, if present.
    pub fn max_order(&self, field: u8) -> Option<u16> {
        self.terms
            .keys()
            .flat_map(|m| m.vars().iter())
            .filter(|(v, _)| v.field == field)
            .map(|(v, _)| v.order)
            .max()
    }

    /// Total derivative: D(u_{i,k}) = u_{i,k+1}, D(z) = 1, Leibniz rule.
    pub fn total_derivative(&self) -> JetPoly {
        let mut r = JetPoly::zero();
        for (m, c) in &self.terms {
            // z-part
            if m.z_exp != 0 {
                let mut m2 = m.clone();
                m2.z_exp -= 1;
                r.insert(
                    m2,
                    c.mul_rat(&BigRational::from_integer(BigInt::from(m.z_exp))),
                );
            }
            // jet part
            for (v, e) in m.vars() {
                let bumped = JetVar::new(v.field, v.order + 1);
                let lowered = m.with_exp(*v, e - 1);
                let raised = lowered.mul(&JetMono::var(bumped));
                r.insert(
                    raised,
                    c.mul_rat(&BigRational::from_integer(BigInt::from(*e))),
                );
            }
        }
        r
    }

    pub fn total_derivative_n(&self, n: u32) -> JetPoly {
        let mut r = self.clone();
        for _ in 0..n {
            r = r.total_derivative();
        }
        r
    }

    /// Partial derivative with respect to one jet variable.
    pub fn partial(&self, v: JetVar) -> JetPoly {
        let mut r = JetPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exp_of(v);
            if e == 0 {
                continue;
            }
            r.insert(
                m.with_exp(v, e - 1),
                c.mul_rat(&BigRational::from_integer(BigInt::from(e))),
            );
        }
        r
    }

    /// Euler (variational) derivative: sum_k (-D)^k d/du_{i,k}.
    pub fn euler_derivative(&self, field: u8) -> JetPoly {
        let max_order = match self.max_order(field) {
            Some(k) => k,
            None => return JetPoly::zero(),
        };
        let mut r = JetPoly::zero();
        for k in 0..=max_order {
            let mut term = self.partial(JetVar::new(field, k)).total_derivative_n(k as u32);
            if k % 2 == 1 {
                term = term.neg();
            }
            r = r.add(&term);
        }
        r
    }

    /// Substitution with automatic prolongation: u_{i,k} receives the k-th
    /// total derivative of `assignments[i]`. Every field present must be
    /// assigned.
    pub fn substitute(&self, assignments: &BTreeMap<u8, JetPoly>) -> Result<JetPoly> {
        for f in self.fields() {
            if !assignments.contains_key(&f) {
                return Err(Error::MissingAssignment(f));
            }
        }
        // Cache prolongations per (field, order).
        let mut cache: BTreeMap<JetVar, JetPoly> = BTreeMap::new();
        let mut prolong = |v: JetVar| -> JetPoly {
            if let Some(p) = cache.get(&v) {
                return p.clone();
            }
            let base = assignments.get(&v.field).unwrap().clone();
            let p = base.total_derivative_n(v.order as u32);
            cache.insert(v, p.clone());
            p
        };
        let mut r = JetPoly::zero();
        for (m, c) in &self.terms {
            let mut term = JetPoly::monomial(JetMono::z(m.z_exp), c.clone());
            for (v, e) in m.vars() {
                let image = prolong(*v);
                term = term.mul(&image.pow(*e));
            }
            r = r.add(&term);
        }
        Ok(r)
    }

    /// Scaling weight with u_{i,k} of weight w_i + k, z of weight `z_weight`.
    /// Returns None if the polynomial is not homogeneous.
    pub fn weight(&self, field_weight: &dyn Fn(u8) -> i64, z_weight: i64) -> Option<i64> {
        let mut found = None;
        for m in self.terms.keys() {
            let mut w = m.z_exp * z_weight;
            for (v, e) in m.vars() {
                w += (*e as i64) * (field_weight(v.field) + v.order as i64);
            }
            match found {
                None => found = Some(w),
                Some(prev) if prev != w => return None,
                _ => {}
            }
        }
        found
    }

    pub fn render(&self, names: &dyn Fn(u8) -> String, latex: bool) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let mut factors: Vec<String> = Vec::new();
            if m.z_exp != 0 {
                if m.z_exp == 1 {
                    factors.push("z".into());
                } else if latex {
                    factors.push(format!("z^{{{}}}", m.z_exp));
                } else {
                    factors.push(format!("z^{}", m.z_exp));
                }
            }
            for (v, e) in m.vars() {
                let name = names(v.field);
                let base = if latex {
                    match v.order {
                        0 => name,
                        1 => format!("{}'", name),
                        2 => format!("{}''", name),
                        3 => format!("{}'''", name),
                        k => format!("{}^{{({})}}", name, k),
                    }
                } else {
                    format!("{}{}", name, "'".repeat(v.order as usize))
                };
                if *e == 1 {
                    factors.push(base);
                } else if latex {
                    factors.push(format!("({})^{{{}}}", base, e));
                } else {
                    factors.push(format!("{}^{}", base, e));
                }
            }
            let coeff_str = format!("{}", c);
            let body = if factors.is_empty() {
                coeff_str.clone()
            } else if c.is_one() {
                factors.join(if latex { " " } else { "*" })
            } else if c.neg().is_one() {
                format!("-{}", factors.join(if latex { " " } else { "*" }))
            } else {
                format!(
                    "{}{}{}",
                    coeff_str,
                    if latex { " " } else { "*" },
                    factors.join(if latex { " " } else { "*" })
                )
            };
            if first {
                out.push_str(&body);
                first = false;
            } else if let Some(rest) = body.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(&body);
            }
        }
        out
    }
}

impl fmt::Display for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|i| format!("u{}", i + 1), false))
    }
}

impl Coeff for JetPoly {
    fn zero() -> Self {
        JetPoly::zero()
    }
    fn one() -> Self {
        JetPoly::one()
    }
    fn is_zero(&self) -> bool {
        JetPoly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        JetPoly::add(self, other)
    }
    fn neg(&self) -> Self {
        JetPoly::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        JetPoly::mul(self, other)
    }
    fn mul_rat(&self, c: &BigRational) -> Self {
        self.mul_param(&ParamRational::from_big(c.clone()))
    }
}

/// Convenience: u (field 0), u', u'' etc.
pub fn u(order: u16) -> JetPoly {
    JetPoly::var(JetVar::new(0, order))
}

pub fn uf(field: u8, order: u16) -> JetPoly {
    JetPoly::var(JetVar::new(field, order))
}

#[cfg(test)]
pub(crate) fn random_jet_poly(
    rng: &mut impl rand::Rng,
    fields: u8,
    max_order: u16,
    max_terms: usize,
    max_degree: u32,
) -> JetPoly {
    let mut p = JetPoly::zero();
    let nterms = rng.gen_range(1..=max_terms);
    for _ in 0..nterms {
        let deg = rng.gen_range(0..=max_degree);
        let mut m = JetMono::one();
        for _ in 0..deg {
            let v = JetVar::new(rng.gen_range(0..fields), rng.gen_range(0..=max_order));
            m = m.mul(&JetMono::var(v));
        }
        let c = ParamRational::from_int(rng.gen_range(-4..=4i64));
        p = p.add(&JetPoly::monomial(m, c));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn total_derivative_leibniz() {
        // D(u^2) = 2 u u'
        let p = u(0).pow(2);
        let expect = u(0).mul(&u(1)).mul_param(&ParamRational::from_int(2));
        assert_eq!(p.total_derivative(), expect);
        // D(5) = 0
        assert!(JetPoly::from_int(5).total_derivative().is_zero());
        // D(u^2 - u') = 2uu' - u''
        let q = u(0).pow(2).sub(&u(1));
        let expect2 = u(0)
            .mul(&u(1))
            .mul_param(&ParamRational::from_int(2))
            .sub(&u(2));
        assert_eq!(q.total_derivative(), expect2);
        // D(z) = 1
        assert_eq!(JetPoly::z().total_derivative(), JetPoly::one());
    }

    #[test]
    fn euler_derivative_examples() {
        // Oracle: by the definition sum_k (-D)^k d/du_k applied by hand,
        // euler(u u'') = u'' - D^2(u) = u'' + u'' = 2u''... computed manually:
        // d/du = u'', d/du'' = u, so euler = u'' + D^2(u) = u'' + u'' = 2u''.
        let p = u(0).mul(&u(2));
        let expect = u(2).mul_param(&ParamRational::from_int(2));
        assert_eq!(p.euler_derivative(0), expect);
        // euler(u') = 0
        assert!(u(1).euler_derivative(0).is_zero());
        // euler(u^3) = 3u^2
        assert_eq!(
            u(0).pow(3).euler_derivative(0),
            u(0).pow(2).mul_param(&ParamRational::from_int(3))
        );
    }

    #[test]
    fn euler_annihilates_total_derivatives() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..30 {
            let p = random_jet_poly(&mut rng, 2, 3, 4, 3);
            let d = p.total_derivative();
            for f in 0..2 {
                assert!(
                    d.euler_derivative(f).is_zero(),
                    "euler of exact density must vanish: {}",
                    d
                );
            }
        }
    }

    #[test]
    fn substitution_with_prolongation() {
        // v = u^2 - u' (v is field 0 of the target side, u field 0 of source)
        let miura = u(0).pow(2).sub(&u(1));
        let mut assign = BTreeMap::new();
        assign.insert(0u8, miura.clone());
        // substitute(v', {v -> u^2 - u'}) = 2uu' - u''
        let vprime = u(1);
        let expect = u(0)
            .mul(&u(1))
            .mul_param(&ParamRational::from_int(2))
            .sub(&u(2));
        assert_eq!(vprime.substitute(&assign).unwrap(), expect);
        // identity substitution
        let mut id = BTreeMap::new();
        id.insert(0u8, u(0));
        assert_eq!(u(0).substitute(&id).unwrap(), u(0));
        // substitute(v^2) = u^4 - 2u^2 u' + u'^2
        let v2 = u(0).pow(2);
        let expect2 = u(0)
            .pow(4)
            .sub(&u(0).pow(2).mul(&u(1)).mul_param(&ParamRational::from_int(2)))
            .add(&u(1).pow(2));
        assert_eq!(v2.substitute(&assign).unwrap(), expect2);
    }

    #[test]
    fn substitution_requires_all_fields() {
        let p = u(0).mul(&uf(1, 0));
        let mut assign = BTreeMap::new();
        assign.insert(0u8, u(0));
        assert!(matches!(
            p.substitute(&assign),
            Err(Error::MissingAssignment(1))
        ));
    }

    #[test]
    fn prolongation_commutes_with_total_derivative() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let p = random_jet_poly(&mut rng, 1, 2, 3, 2);
            let sigma = random_jet_poly(&mut rng, 1, 1, 3, 2);
            let mut assign = BTreeMap::new();
            assign.insert(0u8, sigma);
            let lhs = p.substitute(&assign).unwrap().total_derivative();
            let rhs = p.total_derivative().substitute(&assign).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
