//! Polynomials in formal Fourier modes w_{i,n} (n in Z) with exact
//! rational-function coefficients. Shared by the mode-bracket tables and the
//! free-field module, where mode coefficients act as scalars.

use std::collections::BTreeMap;
use std::fmt;

use num::rational::BigRational;

use crate::param::ParamRational;
use crate::series::Coeff;

/// The n-th mode of field i.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ModeVar {
    pub field: u8,
    pub index: i64,
}

impl ModeVar {
    pub fn new(field: u8, index: i64) -> Self {
        ModeVar { field, index }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ModeMono {
    vars: Vec<(ModeVar, u32)>,
}

impl ModeMono {
    pub fn one() -> Self {
        ModeMono { vars: Vec::new() }
    }

    pub fn var(v: ModeVar) -> Self {
        ModeMono { vars: vec![(v, 1)] }
    }

    pub fn is_one(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.vars.iter().map(|(_, e)| e).sum()
    }

    pub fn vars(&self) -> &[(ModeVar, u32)] {
        &self.vars
    }

    fn mul(&self, other: &ModeMono) -> ModeMono {
        let mut vars = self.vars.clone();
        for (v, e) in &other.vars {
            match vars.binary_search_by_key(v, |(w, _)| *w) {
                Ok(i) => vars[i].1 += e,
                Err(i) => vars.insert(i, (*v, *e)),
            }
        }
        ModeMono { vars }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct ModePoly {
    terms: BTreeMap<ModeMono, ParamRational>,
}

impl ModePoly {
    pub fn zero() -> Self {
        ModePoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        ModePoly::constant(ParamRational::one())
    }

    pub fn constant(c: ParamRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(ModeMono::one(), c);
        }
        ModePoly { terms }
    }

    pub fn from_int(n: i64) -> Self {
        ModePoly::constant(ParamRational::from_int(n))
    }

    pub fn var(v: ModeVar) -> Self {
        ModePoly::monomial(ModeMono::var(v), ParamRational::one())
    }

    pub fn mode(field: u8, index: i64) -> Self {
        ModePoly::var(ModeVar::new(field, index))
    }

    pub fn monomial(m: ModeMono, c: ParamRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        ModePoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ModeMono, &ParamRational)> {
        self.terms.iter()
    }

    /// The coefficient of the empty monomial (the central part).
    pub fn constant_part(&self) -> ParamRational {
        self.terms
            .get(&ModeMono::one())
            .cloned()
            .unwrap_or_else(ParamRational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    fn insert(&mut self, m: ModeMono, c: ParamRational) {
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

    pub fn add(&self, other: &ModePoly) -> ModePoly {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, other: &ModePoly) -> ModePoly {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert(m.clone(), c.neg());
        }
        r
    }

    pub fn neg(&self) -> ModePoly {
        ModePoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &ModePoly) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                r.insert(m1.mul(m2), c1.mul(c2));
            }
        }
        r
    }

    pub fn mul_param(&self, c: &ParamRational) -> ModePoly {
        if c.is_zero() {
            return ModePoly::zero();
        }
        ModePoly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.mul(c)))
                .collect(),
        }
    }

    pub fn render(&self, names: &dyn Fn(u8, i64) -> String) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            for (v, e) in m.vars() {
                let base = names(v.field, v.index);
                if *e == 1 {
                    factors.push(base);
                } else {
                    factors.push(format!("{}^{}", base, e));
                }
            }
            if factors.is_empty() {
                parts.push(format!("{}", c));
            } else if c.is_one() {
                parts.push(factors.join("*"));
            } else {
                parts.push(format!("{}*{}", c, factors.join("*")));
            }
        }
        parts.join(" + ")
    }
}

impl fmt::Display for ModePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|i, n| format!("w{}[{}]", i + 1, n)))
    }
}

impl Coeff for ModePoly {
    fn zero() -> Self {
        ModePoly::zero()
    }
    fn one() -> Self {
        ModePoly::one()
    }
    fn is_zero(&self) -> bool {
        ModePoly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        ModePoly::add(self, other)
    }
    fn neg(&self) -> Self {
        ModePoly::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        ModePoly::mul(self, other)
    }
    fn mul_rat(&self, c: &BigRational) -> Self {
        self.mul_param(&ParamRational::from_big(c.clone()))
    }
}
