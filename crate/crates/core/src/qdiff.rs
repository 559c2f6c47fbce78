//! q-difference operator calculus: shifted-symbol coefficients, composition
//! via the shift rule (Df)(z) = f(zq^2), q-Miura factorization into
//! first-order factors, and the Lax flows of the q-hierarchy computed through
//! root coefficients living in an extended symbol ring.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::param::ParamRational;

/// Which formal series a symbol refers to.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SymKind {
    /// Lambda_i(.) of the q-Miura factorization (1-based index).
    Lambda(u8),
    /// Baxter polynomial Q(.)
    Baxter,
    /// Root coefficient family rho_j(.) introduced while extracting q-roots.
    Root(u8),
}

/// Argument base of a symbol: the z or w picture.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ArgVar {
    Z,
    W,
}

/// A series symbol evaluated at (base variable) * q^{2 shift}.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ShiftedSymbol {
    pub kind: SymKind,
    pub base: ArgVar,
    pub shift: i64,
}

impl ShiftedSymbol {
    pub fn lambda(i: u8, base: ArgVar, shift: i64) -> Self {
        ShiftedSymbol {
            kind: SymKind::Lambda(i),
            base,
            shift,
        }
    }

    fn shifted(&self, k: i64) -> Self {
        ShiftedSymbol {
            kind: self.kind,
            base: self.base,
            shift: self.shift + k,
        }
    }

    pub fn render(&self, latex: bool) -> String {
        let name = match self.kind {
            SymKind::Lambda(i) => {
                if latex {
                    format!("\\Lambda_{{{}}}", i)
                } else {
                    format!("L{}", i)
                }
            }
            SymKind::Baxter => "Q".to_string(),
            SymKind::Root(j) => {
                if latex {
                    format!("r_{{{}}}", j)
                } else {
                    format!("r{}", j)
                }
            }
        };
        let base = match self.base {
            ArgVar::Z => "z",
            ArgVar::W => "w",
        };
        let arg = match self.shift {
            0 => base.to_string(),
            1 => format!("{}q^2", base),
            k => {
                if latex {
                    format!("{}q^{{{}}}", base, 2 * k)
                } else {
                    format!("{}q^{}", base, 2 * k)
                }
            }
        };
        format!("{}({})", name, arg)
    }
}

/// Product of shifted symbols with integer exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SymMono {
    factors: Vec<(ShiftedSymbol, i64)>,
}

impl SymMono {
    pub fn one() -> Self {
        SymMono {
            factors: Vec::new(),
        }
    }

    pub fn var(s: ShiftedSymbol) -> Self {
        SymMono {
            factors: vec![(s, 1)],
        }
    }

    pub fn var_pow(s: ShiftedSymbol, e: i64) -> Self {
        if e == 0 {
            SymMono::one()
        } else {
            SymMono {
                factors: vec![(s, e)],
            }
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(ShiftedSymbol, i64)] {
        &self.factors
    }

    pub fn mul(&self, other: &SymMono) -> SymMono {
        let mut factors = self.factors.clone();
        for (s, e) in &other.factors {
            match factors.binary_search_by_key(s, |(t, _)| *t) {
                Ok(i) => {
                    factors[i].1 += e;
                    if factors[i].1 == 0 {
                        factors.remove(i);
                    }
                }
                Err(i) => factors.insert(i, (*s, *e)),
            }
        }
        SymMono { factors }
    }

    pub fn inv(&self) -> SymMono {
        SymMono {
            factors: self.factors.iter().map(|(s, e)| (*s, -e)).collect(),
        }
    }

    fn shifted(&self, k: i64) -> SymMono {
        let mut factors: Vec<(ShiftedSymbol, i64)> = self
            .factors
            .iter()
            .map(|(s, e)| (s.shifted(k), *e))
            .collect();
        factors.sort_by_key(|(s, _)| *s);
        SymMono { factors }
    }

    /// Substitute w := z q^{2k} in every w-based symbol.
    pub fn collapse_w_to_z(&self, k: i64) -> SymMono {
        let mut factors: Vec<(ShiftedSymbol, i64)> = Vec::new();
        for (s, e) in &self.factors {
            let ns = if s.base == ArgVar::W {
                ShiftedSymbol {
                    kind: s.kind,
                    base: ArgVar::Z,
                    shift: s.shift + k,
                }
            } else {
                *s
            };
            match factors.binary_search_by_key(&ns, |(t, _)| *t) {
                Ok(i) => {
                    factors[i].1 += e;
                    if factors[i].1 == 0 {
                        factors.remove(i);
                    }
                }
                Err(i) => factors.insert(i, (ns, *e)),
            }
        }
        SymMono { factors }
    }
}

/// Laurent polynomial in shifted symbols with exact parameter coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct SymExpr {
    terms: BTreeMap<SymMono, ParamRational>,
}

impl SymExpr {
    pub fn zero() -> Self {
        SymExpr {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        SymExpr::constant(ParamRational::one())
    }

    pub fn constant(c: ParamRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(SymMono::one(), c);
        }
        SymExpr { terms }
    }

    pub fn var(s: ShiftedSymbol) -> Self {
        SymExpr::monomial(SymMono::var(s), ParamRational::one())
    }

    pub fn monomial(m: SymMono, c: ParamRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        SymExpr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymMono, &ParamRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn insert(&mut self, m: SymMono, c: ParamRational) {
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

    pub fn add(&self, other: &SymExpr) -> SymExpr {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, other: &SymExpr) -> SymExpr {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert(m.clone(), c.neg());
        }
        r
    }

    pub fn neg(&self) -> SymExpr {
        SymExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &SymExpr) -> SymExpr {
        let mut r = SymExpr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                r.insert(m1.mul(m2), c1.mul(c2));
            }
        }
        r
    }

    pub fn mul_param(&self, c: &ParamRational) -> SymExpr {
        if c.is_zero() {
            return SymExpr::zero();
        }
        SymExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.mul(c)))
                .collect(),
        }
    }

    /// The shift operator sigma^k: every symbol argument gains q^{2k}.
    pub fn shifted(&self, k: i64) -> SymExpr {
        SymExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.shifted(k), c.clone()))
                .collect(),
        }
    }

    /// Substitute a symbol family: each occurrence of `kind` at shift s is
    /// replaced by `image` shifted by s. Exponents must be non-negative for
    /// composite images; inverses are allowed when the image is a monomial.
    pub fn substitute_kind(&self, kind: SymKind, image: &SymExpr) -> Result<SymExpr> {
        let mut out = SymExpr::zero();
        for (m, c) in &self.terms {
            let mut acc = SymExpr::constant(c.clone());
            for (s, e) in m.factors() {
                if s.kind != kind {
                    acc = acc.mul(&SymExpr::monomial(SymMono::var_pow(*s, *e), ParamRational::one()));
                    continue;
                }
                let mut img = image.shifted(s.shift);
                if s.base == ArgVar::W {
                    img = img.rebase_w();
                }
                if *e >= 0 {
                    for _ in 0..*e {
                        acc = acc.mul(&img);
                    }
                } else {
                    // Inverse of a single-monomial image.
                    if img.terms.len() != 1 {
                        return Err(Error::Unsupported(
                            "cannot invert a multi-term substitution image".into(),
                        ));
                    }
                    let (mono, coeff) = img.terms.iter().next().unwrap();
                    let inv = SymExpr::monomial(mono.inv(), coeff.inv()?);
                    for _ in 0..(-e) {
                        acc = acc.mul(&inv);
                    }
                }
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    fn rebase_w(&self) -> SymExpr {
        SymExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let factors = m
                        .factors()
                        .iter()
                        .map(|(s, e)| {
                            (
                                ShiftedSymbol {
                                    kind: s.kind,
                                    base: ArgVar::W,
                                    shift: s.shift,
                                },
                                *e,
                            )
                        })
                        .collect::<Vec<_>>();
                    let mut sorted = factors;
                    sorted.sort_by_key(|(s, _)| *s);
                    (SymMono { factors: sorted }, c.clone())
                })
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
            for (s, e) in m.factors() {
                let base = s.render(latex);
                match e {
                    1 => factors.push(base),
                    -1 => factors.push(format!("{}^{{-1}}", base).replace("{-1}", if latex { "{-1}" } else { "-1" })),
                    k => {
                        if latex {
                            factors.push(format!("{}^{{{}}}", base, k));
                        } else {
                            factors.push(format!("{}^{}", base, k));
                        }
                    }
                }
            }
            let body = if factors.is_empty() {
                format!("{}", c)
            } else if c.is_one() {
                factors.join(if latex { " " } else { "*" })
            } else if c.neg().is_one() {
                format!("-{}", factors.join(if latex { " " } else { "*" }))
            } else {
                format!("{}{}{}", c, if latex { " " } else { "*" }, factors.join(if latex { " " } else { "*" }))
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

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(false))
    }
}

/// q-difference operator: Laurent polynomial in the shift D with SymExpr
/// coefficients. Composition is exact (the shift rule has no tail), so floors
/// only enter when a root truncates an infinite expansion.
#[derive(Clone, PartialEq, Debug)]
pub struct QDiffOp {
    coeffs: BTreeMap<i64, SymExpr>,
    floor: Option<i64>,
}

impl QDiffOp {
    pub fn zero() -> Self {
        QDiffOp {
            coeffs: BTreeMap::new(),
            floor: None,
        }
    }

    pub fn identity() -> Self {
        QDiffOp::monomial(0, SymExpr::one())
    }

    pub fn shift() -> Self {
        QDiffOp::monomial(1, SymExpr::one())
    }

    pub fn monomial(order: i64, c: SymExpr) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(order, c);
        }
        QDiffOp {
            coeffs,
            floor: None,
        }
    }

    pub fn from_coeffs(pairs: Vec<(i64, SymExpr)>) -> Self {
        let mut r = QDiffOp::zero();
        for (k, c) in pairs {
            r.insert(k, c);
        }
        r
    }

    pub fn with_floor(mut self, floor: i64) -> Self {
        self.coeffs.retain(|k, _| *k >= floor);
        self.floor = Some(floor);
        self
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    pub fn top_order(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, order: i64) -> SymExpr {
        if let Some(f) = self.floor {
            assert!(order >= f, "coefficient below certified floor");
        }
        self.coeffs.get(&order).cloned().unwrap_or_else(SymExpr::zero)
    }

    pub fn orders(&self) -> impl Iterator<Item = (&i64, &SymExpr)> {
        self.coeffs.iter()
    }

    fn insert(&mut self, order: i64, c: SymExpr) {
        if let Some(f) = self.floor {
            if order < f {
                return;
            }
        }
        if c.is_zero() {
            return;
        }
        match self.coeffs.entry(order) {
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

    pub fn add(&self, other: &Self) -> Self {
        let floor = match (self.floor, other.floor) {
            (None, None) => None,
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        let mut r = QDiffOp {
            coeffs: BTreeMap::new(),
            floor,
        };
        for (k, c) in &self.coeffs {
            r.insert(*k, c.clone());
        }
        for (k, c) in &other.coeffs {
            r.insert(*k, c.clone());
        }
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        QDiffOp {
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, c.neg())).collect(),
            floor: self.floor,
        }
    }

    /// Composition via D^i . c = sigma^i(c) D^i; exact in every order.
    pub fn compose(&self, other: &Self) -> Self {
        let floor = {
            let mut cands = Vec::new();
            if let Some(fa) = self.floor {
                cands.push(fa + other.top_order().unwrap_or(0));
            }
            if let Some(fb) = other.floor {
                cands.push(fb + self.top_order().unwrap_or(0));
            }
            cands.into_iter().max()
        };
        let mut r = QDiffOp {
            coeffs: BTreeMap::new(),
            floor,
        };
        for (&i, a) in &self.coeffs {
            for (&j, b) in &other.coeffs {
                r.insert(i + j, a.mul(&b.shifted(i)));
            }
        }
        r
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn render(&self, latex: bool) -> String {
        if self.coeffs.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (&k, c) in self.coeffs.iter().rev() {
            let dpart = match k {
                0 => String::new(),
                1 => "D".to_string(),
                _ => {
                    if latex {
                        format!("D^{{{}}}", k)
                    } else {
                        format!("D^{}", k)
                    }
                }
            };
            let piece = if dpart.is_empty() {
                c.render(latex)
            } else if c.num_terms() == 1 && c.render(false) == "1" {
                dpart
            } else if c.num_terms() == 1 {
                format!("{}{}{}", c.render(latex), if latex { " " } else { "*" }, dpart)
            } else {
                format!("({}){}{}", c.render(latex), if latex { " " } else { "*" }, dpart)
            };
            parts.push(piece);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for QDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(false))
    }
}

/// Expansion of (D + Lambda_1(z)) ... (D + Lambda_n(z)).
pub struct QMiura {
    /// t_1 .. t_{n-1}
    pub coefficients: Vec<SymExpr>,
    /// The constant term, equal to the product of all Lambda_i(z).
    pub constant_term: SymExpr,
}

pub fn q_miura_expand(n: usize) -> QMiura {
    assert!(n >= 2);
    let mut product = QDiffOp::identity();
    for i in 1..=n {
        let factor = QDiffOp::shift().add(&QDiffOp::monomial(
            0,
            SymExpr::var(ShiftedSymbol::lambda(i as u8, ArgVar::Z, 0)),
        ));
        product = product.compose(&factor);
    }
    let coefficients = (1..n).map(|i| product.coeff((n - i) as i64)).collect();
    QMiura {
        coefficients,
        constant_term: product.coeff(0),
    }
}

/// For sl_2: substitute Lambda_2 = Lambda_1^{-1} to impose the unit constant
/// term, giving t(z) = Lambda(z) + Lambda(z q^2)^{-1}.
pub fn q_miura_sl2() -> Result<SymExpr> {
    let miura = q_miura_expand(2);
    let inverse = SymExpr::monomial(
        SymMono::var_pow(ShiftedSymbol::lambda(1, ArgVar::Z, 0), -1),
        ParamRational::one(),
    );
    miura.coefficients[0].substitute_kind(SymKind::Lambda(2), &inverse)
}

/// Rewrite context for the extended symbol ring of root coefficients.
///
/// Family j either is free (it parameterizes a generic t coefficient) or
/// carries the defining relation (sigma^{n-1} + ... + sigma + 1) rho_j = rhs;
/// constrained families have every shift confined to [0, n-2] by rewriting.
#[derive(Clone, Debug)]
pub struct RootRing {
    n: usize,
    relations: Vec<Option<SymExpr>>,
}

impl RootRing {
    fn new(n: usize) -> Self {
        RootRing {
            n,
            relations: Vec::new(),
        }
    }

    pub fn relation_rhs(&self, family: usize) -> Option<&SymExpr> {
        self.relations.get(family).and_then(|r| r.as_ref())
    }

    fn has_relation(&self, family: u8) -> bool {
        self.relation_rhs(family as usize).is_some()
    }

    /// Reduce an expression so every constrained root symbol has shift in
    /// [0, n-2]; shifts outside the window are eliminated via the relations.
    pub fn normalize(&self, e: &SymExpr) -> SymExpr {
        let window_hi = self.n as i64 - 2;
        let mut current = e.clone();
        loop {
            let mut offender: Option<ShiftedSymbol> = None;
            'scan: for (m, _) in current.terms() {
                for (s, _) in m.factors() {
                    if let SymKind::Root(j) = s.kind {
                        if (s.shift < 0 || s.shift > window_hi) && self.has_relation(j) {
                            offender = Some(*s);
                            break 'scan;
                        }
                    }
                }
            }
            let Some(sym) = offender else {
                return current;
            };
            let SymKind::Root(j) = sym.kind else { unreachable!() };
            let rhs = self.relation_rhs(j as usize).unwrap();
            let image = if sym.shift > window_hi {
                // rho(shift) = sigma^{shift-(n-1)} rhs
                //              - sum_{k=0}^{n-2} rho(shift-(n-1)+k)
                let base = sym.shift - (self.n as i64 - 1);
                let mut img = rhs.shifted(base);
                for k in 0..(self.n as i64 - 1) {
                    img = img.sub(&SymExpr::var(ShiftedSymbol {
                        kind: sym.kind,
                        base: sym.base,
                        shift: base + k,
                    }));
                }
                img
            } else {
                // rho(shift) = sigma^{shift} rhs - sum_{k=1}^{n-1} rho(shift+k)
                let mut img = rhs.shifted(sym.shift);
                for k in 1..self.n as i64 {
                    img = img.sub(&SymExpr::var(ShiftedSymbol {
                        kind: sym.kind,
                        base: sym.base,
                        shift: sym.shift + k,
                    }));
                }
                img
            };
            current = substitute_symbol(&current, sym, &image);
        }
    }
}

/// Replace one exact shifted symbol by an expression (positive powers only;
/// root symbols never occur inverted).
fn substitute_symbol(e: &SymExpr, sym: ShiftedSymbol, image: &SymExpr) -> SymExpr {
    let mut out = SymExpr::zero();
    for (m, c) in e.terms() {
        let mut rest = SymMono::one();
        let mut count = 0i64;
        for (s, e2) in m.factors() {
            if *s == sym {
                count = *e2;
            } else {
                rest = rest.mul(&SymMono::var_pow(*s, *e2));
            }
        }
        let mut term = SymExpr::monomial(rest, c.clone());
        assert!(count >= 0, "root symbols are never inverted");
        for _ in 0..count {
            term = term.mul(image);
        }
        out = out.add(&term);
    }
    out
}

/// Result of a q-Lax flow computation.
pub struct QLaxFlow {
    /// d/dt_m of t_1..t_{n-1}, normalized in the extended root ring.
    pub flows: Vec<SymExpr>,
    /// The ring carrying the defining relations of the root coefficients.
    pub ring: RootRing,
    /// Shape checks: the commutator's order-n and order-0 coefficients vanish.
    pub leading_preserved: bool,
    pub constant_preserved: bool,
}

/// Compute the n-th root of the generic q-oper
/// L = D^n + t_1 D^{n-1} + ... + t_{n-1} D + 1, the positive part of its m-th
/// power, and the Lax commutator. Root coefficients are abstract symbol
/// families rho_j with defining relations (sum_k sigma^k) rho_j = (known),
/// and the t_i are eliminated in their favor, which makes every step exact.
pub fn q_root_lax(n: usize, m: usize, depth: usize) -> Result<QLaxFlow> {
    if n < 2 || m == 0 || m % n == 0 {
        return Err(Error::Constraint(format!(
            "need m > 0 not divisible by n, got n={}, m={}",
            n, m
        )));
    }
    if depth < m + 2 || depth < n {
        return Err(Error::DepthExhausted(format!(
            "depth {} too small for the (n={}, m={}) q-flow",
            depth, n, m
        )));
    }
    let mut ring = RootRing::new(n);
    // Build the root R = D + rho_0 + rho_1 D^{-1} + ... step by step. The
    // equation matching order n-1-j of R^n reads
    //   known_j + (sum_{k<n} sigma^k rho_j) = (coefficient of L).
    // For positive orders the L coefficient is the generic t, so rho_j stays a
    // free family and the equation *defines* t. From order 0 downward the L
    // coefficients are fixed (1, then 0), and each equation becomes the
    // defining relation of the fresh family rho_j, solved by rewriting.
    let mut root = QDiffOp::shift();
    for j in 0..depth {
        let mut power = QDiffOp::identity();
        for _ in 0..n {
            power = power.compose(&root);
        }
        let target_order = n as i64 - 1 - j as i64;
        if target_order > 0 {
            ring.relations.push(None);
        } else {
            let known = power.coeff(target_order);
            let l_coeff = if target_order == 0 {
                SymExpr::one()
            } else {
                SymExpr::zero()
            };
            let rhs = ring.normalize(&l_coeff.sub(&known));
            ring.relations.push(Some(rhs));
        }
        root = root.add(&QDiffOp::monomial(
            -(j as i64),
            SymExpr::var(ShiftedSymbol {
                kind: SymKind::Root(j as u8),
                base: ArgVar::Z,
                shift: 0,
            }),
        ));
    }
    // Reconstruct L = D^n + t_1 D^{n-1} + ... + 1 through the root: the
    // positive-order coefficients of R^n are the defined t's, the constant
    // term normalizes to 1, and everything below vanishes modulo relations.
    let mut l = QDiffOp::identity();
    for _ in 0..n {
        l = l.compose(&root);
    }
    let l = QDiffOp {
        coeffs: l
            .coeffs
            .iter()
            .filter(|(k, _)| **k >= 0)
            .map(|(k, c)| (*k, ring.normalize(c)))
            .filter(|(_, c)| !c.is_zero())
            .collect(),
        floor: None,
    };
    // m-th power of the root and its differential part.
    let mut power = QDiffOp::identity();
    for _ in 0..m {
        power = power.compose(&root);
    }
    let pos = QDiffOp {
        coeffs: power
            .coeffs
            .iter()
            .filter(|(k, _)| **k >= 0)
            .map(|(k, c)| (*k, c.clone()))
            .collect(),
        floor: None,
    };
    let comm = pos.commutator(&l);
    let normalized: BTreeMap<i64, SymExpr> = comm
        .coeffs
        .iter()
        .map(|(k, c)| (*k, ring.normalize(c)))
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let leading_preserved = !normalized.contains_key(&(n as i64));
    let constant_preserved = !normalized.contains_key(&0);
    let flows = (1..n)
        .map(|i| {
            normalized
                .get(&((n - i) as i64))
                .cloned()
                .unwrap_or_else(SymExpr::zero)
        })
        .collect();
    Ok(QLaxFlow {
        flows,
        ring,
        leading_preserved,
        constant_preserved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(i: u8, shift: i64) -> SymExpr {
        SymExpr::var(ShiftedSymbol::lambda(i, ArgVar::Z, shift))
    }

    #[test]
    fn shift_rule() {
        // D . Lambda(z) = Lambda(zq^2) D
        let d = QDiffOp::shift();
        let a = QDiffOp::monomial(0, lam(1, 0));
        let prod = d.compose(&a);
        assert_eq!(prod.coeff(1), lam(1, 1));
        assert!(prod.coeff(0).is_zero());
        // identity . A = A
        assert_eq!(QDiffOp::identity().compose(&a), a);
    }

    #[test]
    fn one_step_expansion() {
        // (D + L1(z))(D + L2(z)) = D^2 + (L1(z) + L2(zq^2)) D + L1(z) L2(z)
        let f1 = QDiffOp::shift().add(&QDiffOp::monomial(0, lam(1, 0)));
        let f2 = QDiffOp::shift().add(&QDiffOp::monomial(0, lam(2, 0)));
        let prod = f1.compose(&f2);
        assert_eq!(prod.coeff(2), SymExpr::one());
        assert_eq!(prod.coeff(1), lam(1, 0).add(&lam(2, 1)));
        assert_eq!(prod.coeff(0), lam(1, 0).mul(&lam(2, 0)));
    }

    #[test]
    fn q_compose_is_associative() {
        let ops = [
            QDiffOp::from_coeffs(vec![(1, lam(1, 0)), (0, lam(2, -1))]),
            QDiffOp::from_coeffs(vec![(2, SymExpr::one()), (0, lam(1, 2))]),
            QDiffOp::from_coeffs(vec![(-1, lam(3, 0)), (1, lam(2, 0))]),
        ];
        for a in &ops {
            for b in &ops {
                for c in &ops {
                    let left = a.compose(b).compose(c);
                    let right = a.compose(&b.compose(c));
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn q_miura_sl2_is_baxter_form() {
        // t(z) = Lambda(z) + Lambda(zq^2)^{-1}
        let t = q_miura_sl2().unwrap();
        let expect = lam(1, 0).add(&SymExpr::monomial(
            SymMono::var_pow(ShiftedSymbol::lambda(1, ArgVar::Z, 1), -1),
            ParamRational::one(),
        ));
        assert_eq!(t, expect);
    }

    #[test]
    fn q_miura_coefficients_for_sl3() {
        let miura = q_miura_expand(3);
        // t1(z) = L1(z) + L2(zq^2) + L3(zq^4)
        assert_eq!(
            miura.coefficients[0],
            lam(1, 0).add(&lam(2, 1)).add(&lam(3, 2))
        );
        // t2(z) = L1 L2 + (s L1)(s^... ) derived: L1(z)L2(z) + L1(z)L3(zq^2) + L2(zq^2)L3(zq^2)?
        // Verified instead through the product of explicit factors:
        let f = |i: u8| QDiffOp::shift().add(&QDiffOp::monomial(0, lam(i, 0)));
        let prod = f(1).compose(&f(2)).compose(&f(3));
        assert_eq!(miura.coefficients[1], prod.coeff(1));
        // Constant term is the product of all Lambda_i(z).
        assert_eq!(
            miura.constant_term,
            lam(1, 0).mul(&lam(2, 0)).mul(&lam(3, 0))
        );
    }

    #[test]
    fn q_miura_constant_terms_to_rank_four() {
        for n in 2..=4usize {
            let m = q_miura_expand(n);
            let mut expect = SymExpr::one();
            for i in 1..=n {
                expect = expect.mul(&lam(i as u8, 0));
            }
            assert_eq!(m.constant_term, expect, "n = {}", n);
        }
    }

    #[test]
    fn root_relation_confines_shifts() {
        let mut ring = RootRing::new(2);
        ring.relations.push(Some(lam(1, 0)));
        // rho(zq^2) reduces to rhs - rho(z).
        let shifted = SymExpr::var(ShiftedSymbol {
            kind: SymKind::Root(0),
            base: ArgVar::Z,
            shift: 1,
        });
        let reduced = ring.normalize(&shifted);
        let expect = lam(1, 0).sub(&SymExpr::var(ShiftedSymbol {
            kind: SymKind::Root(0),
            base: ArgVar::Z,
            shift: 0,
        }));
        assert_eq!(reduced, expect);
        // Idempotent.
        assert_eq!(ring.normalize(&reduced), reduced);
    }

    fn root_sym(family: u8, shift: i64) -> SymExpr {
        SymExpr::var(ShiftedSymbol {
            kind: SymKind::Root(family),
            base: ArgVar::Z,
            shift,
        })
    }

    #[test]
    fn q_lax_flow_m1_regression() {
        // n=2, m=1: with t(z) = r(z) + r(zq^2) the first flow is
        // d t/dt_1 = r(z)^2 - r(zq^2)^2 (frozen regression value).
        let flow = q_root_lax(2, 1, 4).unwrap();
        assert!(flow.leading_preserved, "D^2 coefficient must vanish");
        assert!(flow.constant_preserved, "constant term must stay 1");
        let expect = root_sym(0, 0)
            .mul(&root_sym(0, 0))
            .sub(&root_sym(0, 1).mul(&root_sym(0, 1)));
        assert_eq!(flow.flows[0], expect);
        // rho_0 parameterizes the generic t, so it carries no relation; the
        // constant-term family does.
        assert!(flow.ring.relation_rhs(0).is_none());
        assert!(flow.ring.relation_rhs(1).is_some());
    }

    #[test]
    fn q_lax_flow_vanishes_at_zero_t() {
        // t = 0 corresponds to rho_0 = 0: the m=1 flow degenerates to zero.
        let flow = q_root_lax(2, 1, 4).unwrap();
        let mut value = flow.flows[0].clone();
        for shift in [0i64, 1] {
            value = substitute_symbol(
                &value,
                ShiftedSymbol {
                    kind: SymKind::Root(0),
                    base: ArgVar::Z,
                    shift,
                },
                &SymExpr::zero(),
            );
        }
        assert!(value.is_zero());
    }

    #[test]
    fn q_root_defining_property() {
        // R^2 agrees with L = D^2 + t D + 1 on every solved order for n=2:
        // leading 1, order 1 equal to the defined t, constant 1, and zero on
        // the solved negative orders.
        let n = 2usize;
        let depth = 5usize;
        let mut ring = RootRing::new(n);
        let mut root = QDiffOp::shift();
        let mut defined_t = SymExpr::zero();
        for j in 0..depth {
            let mut power = QDiffOp::identity();
            for _ in 0..n {
                power = power.compose(&root);
            }
            let target = n as i64 - 1 - j as i64;
            if target > 0 {
                ring.relations.push(None);
            } else {
                let known = power.coeff(target);
                let l_coeff = if target == 0 {
                    SymExpr::one()
                } else {
                    SymExpr::zero()
                };
                ring.relations.push(Some(ring.normalize(&l_coeff.sub(&known))));
            }
            root = root.add(&QDiffOp::monomial(-(j as i64), root_sym(j as u8, 0)));
        }
        let mut sq = QDiffOp::identity();
        for _ in 0..n {
            sq = sq.compose(&root);
        }
        defined_t = defined_t.add(&root_sym(0, 0)).add(&root_sym(0, 1));
        assert_eq!(sq.coeff(2), SymExpr::one());
        assert_eq!(sq.coeff(1), defined_t);
        assert_eq!(ring.normalize(&sq.coeff(0)), SymExpr::one());
        // Solved negative orders: families 2..depth-1 handle orders -1 down.
        for k in (-(depth as i64) + n as i64)..0 {
            let ck = ring.normalize(&sq.coeff(k));
            assert!(ck.is_zero(), "order {} of R^2 must vanish, got {}", k, ck);
        }
    }
}
