//! The q-character ring: integer Laurent polynomials in the variables
//! Y_{i, a q^k}, the substitution sending Lambda-symbols into them, and the
//! forgetful homomorphism onto ordinary characters.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::qdiff::{SymExpr, SymKind};

/// Y_{i, a q^k}: fundamental index i (1-based) and integer q-shift k against
/// the formal base point a.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct YVar {
    pub index: u8,
    pub shift: i64,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct YMono {
    factors: Vec<(YVar, i64)>,
}

impl YMono {
    pub fn one() -> Self {
        YMono {
            factors: Vec::new(),
        }
    }

    pub fn var(v: YVar, e: i64) -> Self {
        if e == 0 {
            YMono::one()
        } else {
            YMono {
                factors: vec![(v, e)],
            }
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(YVar, i64)] {
        &self.factors
    }

    pub fn mul(&self, other: &YMono) -> YMono {
        let mut factors = self.factors.clone();
        for (v, e) in &other.factors {
            match factors.binary_search_by_key(v, |(w, _)| *w) {
                Ok(i) => {
                    factors[i].1 += e;
                    if factors[i].1 == 0 {
                        factors.remove(i);
                    }
                }
                Err(i) => factors.insert(i, (*v, *e)),
            }
        }
        YMono { factors }
    }

    /// Shift every spectral point by q^k.
    pub fn shifted(&self, k: i64) -> YMono {
        let mut factors: Vec<(YVar, i64)> = self
            .factors
            .iter()
            .map(|(v, e)| {
                (
                    YVar {
                        index: v.index,
                        shift: v.shift + k,
                    },
                    *e,
                )
            })
            .collect();
        factors.sort_by_key(|(v, _)| *v);
        YMono { factors }
    }
}

/// Integer Laurent polynomial in the Y variables.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct YPolynomial {
    terms: BTreeMap<YMono, BigInt>,
}

impl YPolynomial {
    pub fn zero() -> Self {
        YPolynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        YPolynomial::monomial(YMono::one(), BigInt::one())
    }

    pub fn monomial(m: YMono, c: BigInt) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        YPolynomial { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&YMono, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn insert(&mut self, m: YMono, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + &c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &YPolynomial) -> YPolynomial {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert(m.clone(), c.clone());
        }
        r
    }

    pub fn mul(&self, other: &YPolynomial) -> YPolynomial {
        let mut r = YPolynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                r.insert(m1.mul(m2), c1 * c2);
            }
        }
        r
    }

    /// Shift the base point a -> a q^k: relabels every spectral index.
    pub fn shifted(&self, k: i64) -> YPolynomial {
        YPolynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.shifted(k), c.clone()))
                .collect(),
        }
    }

    pub fn render(&self, latex: bool) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            for (v, e) in m.factors() {
                let point = match v.shift {
                    0 => "a".to_string(),
                    1 => "aq".to_string(),
                    k => {
                        if latex {
                            format!("aq^{{{}}}", k)
                        } else {
                            format!("aq^{}", k)
                        }
                    }
                };
                let base = if latex {
                    format!("Y_{{{},{}}}", v.index, point)
                } else {
                    format!("Y{}[{}]", v.index, point)
                };
                match e {
                    1 => factors.push(base),
                    -1 => factors.push(format!("{}^{}", base, if latex { "{-1}" } else { "-1" })),
                    k => factors.push(if latex {
                        format!("{}^{{{}}}", base, k)
                    } else {
                        format!("{}^{}", base, k)
                    }),
                }
            }
            let body = if factors.is_empty() {
                format!("{}", c)
            } else if c.is_one() {
                factors.join(if latex { " " } else { "*" })
            } else if (-c.clone()).is_one() {
                format!("-{}", factors.join(if latex { " " } else { "*" }))
            } else {
                format!("{}{}{}", c, if latex { " " } else { "*" }, factors.join("*"))
            };
            parts.push(body);
        }
        let mut out = String::new();
        for (i, p) in parts.iter().enumerate() {
            if i == 0 {
                out.push_str(p);
            } else if let Some(rest) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        out
    }
}

impl fmt::Display for YPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(false))
    }
}

/// Ordinary-character Laurent polynomial in y_1..y_l.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CharPolynomial {
    terms: BTreeMap<Vec<(u8, i64)>, BigInt>,
}

impl CharPolynomial {
    pub fn zero() -> Self {
        CharPolynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), BigInt::one());
        CharPolynomial { terms }
    }

    pub fn monomial(vars: Vec<(u8, i64)>, c: BigInt) -> Self {
        let mut sorted = vars;
        sorted.retain(|(_, e)| *e != 0);
        sorted.sort();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(sorted, c);
        }
        CharPolynomial { terms }
    }

    pub fn add(&self, other: &CharPolynomial) -> CharPolynomial {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            let entry = r.terms.entry(m.clone()).or_insert_with(BigInt::zero);
            *entry += c;
            if entry.is_zero() {
                r.terms.remove(m);
            }
        }
        r
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn render(&self, latex: bool) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            for (i, e) in m {
                let base = if latex {
                    format!("y_{{{}}}", i)
                } else {
                    format!("y{}", i)
                };
                match e {
                    1 => factors.push(base),
                    -1 => factors.push(format!("{}^{}", base, if latex { "{-1}" } else { "-1" })),
                    k => factors.push(if latex {
                        format!("{}^{{{}}}", base, k)
                    } else {
                        format!("{}^{}", base, k)
                    }),
                }
            }
            let body = if factors.is_empty() {
                format!("{}", c)
            } else if c.is_one() {
                factors.join(if latex { " " } else { "*" })
            } else {
                format!("{}{}{}", c, if latex { " " } else { "*" }, factors.join("*"))
            };
            parts.push(body);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for CharPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(false))
    }
}

/// The substitution Lambda_i(z a q^{2k}) -> Y_{i, a q^{2k - i + 1}}
/// Y_{i-1, a q^{2k - i + 2}}^{-1} with Y_0 = Y_n = 1, applied to a polynomial
/// in the Lambda symbols.
pub fn substitute_lambda(expr: &SymExpr, n: usize) -> Result<YPolynomial> {
    let mut out = YPolynomial::zero();
    for (mono, coeff) in expr.terms() {
        let c = coeff
            .as_big_rational()
            .filter(|c| c.is_integer())
            .ok_or_else(|| {
                Error::Unsupported("q-character coefficients must be integers".into())
            })?;
        let mut term = YPolynomial::monomial(YMono::one(), c.to_integer());
        for (sym, e) in mono.factors() {
            let SymKind::Lambda(i) = sym.kind else {
                return Err(Error::Unsupported(
                    "q-character substitution applies to Lambda symbols".into(),
                ));
            };
            let i = i as usize;
            if i == 0 || i > n {
                return Err(Error::IndexRange(format!(
                    "Lambda index {} outside 1..={}",
                    i, n
                )));
            }
            let shift = 2 * sym.shift;
            let mut image = YPolynomial::one();
            if i < n {
                image = image.mul(&YPolynomial::monomial(
                    YMono::var(
                        YVar {
                            index: i as u8,
                            shift: shift - i as i64 + 1,
                        },
                        *e,
                    ),
                    BigInt::one(),
                ));
            }
            if i > 1 {
                image = image.mul(&YPolynomial::monomial(
                    YMono::var(
                        YVar {
                            index: (i - 1) as u8,
                            shift: shift - i as i64 + 2,
                        },
                        -e,
                    ),
                    BigInt::one(),
                ));
            }
            term = term.mul(&image);
        }
        out = out.add(&term);
    }
    Ok(out)
}

/// Forgetful homomorphism Y_{i,a} -> y_i.
pub fn forgetful(p: &YPolynomial) -> CharPolynomial {
    let mut out = CharPolynomial::zero();
    for (m, c) in p.terms() {
        let mut vars: BTreeMap<u8, i64> = BTreeMap::new();
        for (v, e) in m.factors() {
            *vars.entry(v.index).or_insert(0) += e;
        }
        out = out.add(&CharPolynomial::monomial(
            vars.into_iter().collect(),
            c.clone(),
        ));
    }
    out
}

/// The q-character of the two-dimensional evaluation module of quantum affine
/// sl_2: Y_a + Y_{a q^2}^{-1}, with the base point shifted by q^k.
pub fn qchar_eval_sl2(base_shift: i64) -> YPolynomial {
    let y = |shift: i64, e: i64| {
        YPolynomial::monomial(
            YMono::var(
                YVar {
                    index: 1,
                    shift,
                },
                e,
            ),
            BigInt::one(),
        )
    };
    y(base_shift, 1).add(&y(base_shift + 2, -1))
}

/// The first-fundamental character of sl_n: y_1 + y_2 y_1^{-1} + ... + y_{n-1}^{-1}.
pub fn first_fundamental_character(n: usize) -> CharPolynomial {
    let mut out = CharPolynomial::zero();
    for i in 0..n {
        let mut vars = Vec::new();
        if i < n - 1 {
            vars.push(((i + 1) as u8, 1));
        }
        if i > 0 {
            vars.push((i as u8, -1));
        }
        out = out.add(&CharPolynomial::monomial(vars, BigInt::one()));
    }
    out
}
