//! Algebraic expressions with square roots, in canonical form.
//!
//! The coaction entries are built from rational numbers, named symbols, field
//! operations, and square roots. Values may be complex (radicands go negative
//! off the Euclidean sheet), so no simplification rule used here may depend on
//! a branch choice beyond the principal one:
//!
//! - exponents are half-integers: a factor (base, p) means base^(p/2), with
//!   x^(k + 1/2) defined as x^k * sqrt(x). Merging exponents of the SAME base
//!   under multiplication is branch-safe (sqrt(x)*sqrt(x) = x holds for every
//!   branch); distributing sqrt over a product or collapsing sqrt(x^2) to x is
//!   not, and is never done (except for positive rational constants).
//! - sums pull an overall sign when their canonically-first term is negative,
//!   so (-sqrt(X) - U)/(-sqrt(X) + U) and (sqrt(X) + U)/(sqrt(X) - U) meet in
//!   one form. This is what makes "negate the square root" act as f -> 1/f on
//!   the coaction arguments, structurally.
//!
//! Canonical equality is sufficient, not complete: products of sums are not
//! expanded, so two expressions can be equal as functions yet differ as trees.
//! Identities proved here structurally are exact; everything else is checked
//! numerically downstream.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::poly::{KCoeff, KSym};
use crate::rat::{rat, rat_str, Rat};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Num(Rat),
    Sym(String),
    /// Canonical sum: >= 2 terms, none a Sum, at most one Num, sorted.
    /// The first term has a positive leading coefficient whenever one of
    /// the two orientations allows it; otherwise the lexicographically
    /// smaller orientation is kept. Either way exactly one of S, -S is a
    /// bare Sum.
    Sum(Vec<Expr>),
    /// coeff * prod base_i^(p_i/2); bases canonical non-Product non-Num,
    /// sorted, p_i != 0; never empty, coeff never 0; not the shape
    /// (coeff 1, single p = 2), which unwraps to the base itself.
    Product(Rat, Vec<(Expr, i64)>),
    Abs(Box<Expr>),
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("division by a structurally zero expression")]
    DivisionByZero,
    #[error("derivative of |.| is not defined here")]
    NonDifferentiable,
}

pub fn num(r: Rat) -> Expr {
    Expr::Num(r)
}

pub fn int(n: i64) -> Expr {
    Expr::Num(crate::rat::rat_i(n))
}

pub fn sym(name: &str) -> Expr {
    Expr::Sym(name.to_string())
}

/// Splits a canonical expression into (rational coefficient, core) where the
/// core is the coefficient-free part; the core of a number is Num(1).
fn split_coeff(e: Expr) -> (Rat, Expr) {
    match e {
        Expr::Num(r) => (r, Expr::Num(Rat::one())),
        Expr::Product(c, fs) => (c, rebuild_product(Rat::one(), fs)),
        other => (Rat::one(), other),
    }
}

/// Rebuilds a Product in canonical shape from already-merged factors.
fn rebuild_product(coeff: Rat, factors: Vec<(Expr, i64)>) -> Expr {
    if coeff.is_zero() {
        return Expr::Num(Rat::zero());
    }
    if factors.is_empty() {
        return Expr::Num(coeff);
    }
    if coeff.is_one() && factors.len() == 1 && factors[0].1 == 2 {
        return factors.into_iter().next().unwrap().0;
    }
    Expr::Product(coeff, factors)
}

pub fn add(terms: Vec<Expr>) -> Expr {
    let mut acc: BTreeMap<Expr, Rat> = BTreeMap::new();
    let mut stack = terms;
    while let Some(t) = stack.pop() {
        match t {
            Expr::Sum(ts) => stack.extend(ts),
            other => {
                let (c, core) = split_coeff(other);
                if c.is_zero() {
                    continue;
                }
                let entry = acc.entry(core).or_insert_with(Rat::zero);
                *entry += c;
            }
        }
    }
    acc.retain(|_, c| !c.is_zero());
    let mut out: Vec<Expr> = acc
        .into_iter()
        .map(|(core, c)| match core {
            Expr::Num(one) => {
                debug_assert!(one.is_one());
                Expr::Num(c)
            }
            other => scale(c, other),
        })
        .collect();
    match out.len() {
        0 => Expr::Num(Rat::zero()),
        1 => out.pop().unwrap(),
        _ => {
            out.sort();
            // pull an overall -1 if the canonically-first term is negative
            fn leading_neg(v: &[Expr]) -> bool {
                match &v[0] {
                    Expr::Num(r) => r.is_negative(),
                    Expr::Product(c, _) => c.is_negative(),
                    _ => false,
                }
            }
            if leading_neg(&out) {
                // negation maps canonical terms to canonical terms, so the
                // flipped vector only needs sorting; when both orientations
                // lead negative (all-product sums of mixed sign) the
                // lexicographically smaller one is kept
                let mut flipped: Vec<Expr> = out.iter().cloned().map(neg).collect();
                flipped.sort();
                if !leading_neg(&flipped) || flipped < out {
                    return mul(vec![int(-1), Expr::Sum(flipped)]);
                }
            }
            Expr::Sum(out)
        }
    }
}

fn scale(c: Rat, core: Expr) -> Expr {
    if c.is_one() {
        return core;
    }
    mul(vec![Expr::Num(c), core])
}

pub fn mul(factors: Vec<Expr>) -> Expr {
    let mut coeff = Rat::one();
    let mut acc: BTreeMap<Expr, i64> = BTreeMap::new();
    // stack of (expr, half-exponent multiplier)
    let mut stack: Vec<(Expr, i64)> = factors.into_iter().map(|f| (f, 2)).collect();
    while let Some((f, p)) = stack.pop() {
        if p == 0 {
            continue;
        }
        match f {
            Expr::Num(r) => {
                if r.is_zero() {
                    if p > 0 {
                        return Expr::Num(Rat::zero());
                    }
                    // negative power of zero: structurally undefined; keep as
                    // a factor so downstream evaluation reports it
                    *acc.entry(Expr::Num(Rat::zero())).or_insert(0) += p;
                    continue;
                }
                if p % 2 == 0 {
                    coeff *= crate::rat::rat_pow(&r, p / 2);
                } else {
                    // fold the integer part, keep a sqrt factor
                    let whole = p.div_euclid(2);
                    coeff *= crate::rat::rat_pow(&r, whole);
                    match sqrt_rat(&r) {
                        Some(root) => coeff *= root,
                        None => *acc.entry(Expr::Num(r)).or_insert(0) += 1,
                    }
                }
            }
            Expr::Product(c, fs) => {
                // distribute an integer power over a product (safe), or a
                // half power when the coefficient is 1 and there is a single
                // inner factor (base change only)
                if p % 2 == 0 {
                    stack.push((Expr::Num(c), p));
                    for (b, q) in fs {
                        let scaled = q.checked_mul(p / 2).expect("exponent overflow");
                        stack.push((b, scaled));
                    }
                } else {
                    *acc.entry(rebuild_product(c, fs)).or_insert(0) += p;
                }
            }
            other => {
                *acc.entry(other).or_insert(0) += p;
            }
        }
    }
    acc.retain(|_, p| *p != 0);
    // fold even powers of rational bases left by sqrt factors
    let mut factors: Vec<(Expr, i64)> = Vec::with_capacity(acc.len());
    for (b, p) in acc {
        if let Expr::Num(r) = &b {
            if p % 2 == 0 && !r.is_zero() {
                coeff *= crate::rat::rat_pow(r, p / 2);
                continue;
            }
        }
        factors.push((b, p));
    }
    rebuild_product(coeff, factors)
}

pub fn neg(e: Expr) -> Expr {
    mul(vec![int(-1), e])
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    add(vec![a, neg(b)])
}

pub fn pow(e: Expr, k: i64) -> Expr {
    if k == 0 {
        return Expr::Num(Rat::one());
    }
    if k == 1 {
        return e;
    }
    mul_half(e, 2 * k)
}

/// e^(p/2) as a canonical expression.
fn mul_half(e: Expr, p: i64) -> Expr {
    let mut m = BTreeMap::new();
    m.insert(e.clone(), p);
    // route through mul for all folding rules
    match p % 2 {
        0 => {
            let k = p / 2;
            let mut fs = Vec::new();
            for _ in 0..k.abs() {
                fs.push(if k > 0 { e.clone() } else { inv(e.clone()) });
            }
            mul(fs)
        }
        _ => {
            let whole = p.div_euclid(2);
            let half = sqrt(e.clone());
            let mut fs = vec![half];
            for _ in 0..whole.abs() {
                fs.push(if whole > 0 { e.clone() } else { inv(e.clone()) });
            }
            mul(fs)
        }
    }
}

fn inv(e: Expr) -> Expr {
    match e {
        Expr::Num(r) => {
            assert!(!r.is_zero(), "inverse of zero");
            Expr::Num(r.recip())
        }
        Expr::Product(c, fs) => {
            let inv_fs: Vec<(Expr, i64)> = fs.into_iter().map(|(b, p)| (b, -p)).collect();
            mul(vec![
                Expr::Num(c.recip()),
                rebuild_product(Rat::one(), inv_fs),
            ])
        }
        other => Expr::Product(Rat::one(), vec![(other, -2)]),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    if matches!(&b, Expr::Num(r) if r.is_zero()) {
        panic!("division by zero expression");
    }
    mul(vec![a, inv(b)])
}

/// Exact square root of a rational if it is a perfect square (of sign >= 0).
pub(crate) fn sqrt_rat(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(Rat::new(sn, sd))
    } else {
        None
    }
}

/// Largest a with a^2 dividing n (n > 0), by trial division over small primes
/// plus a perfect-square check; bounded work, used only to tidy constants.
fn square_part(n: &BigInt) -> BigInt {
    let mut rest = n.clone();
    let mut out = BigInt::one();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(1000);
    while &p * &p <= rest && p <= limit {
        let psq = &p * &p;
        while (&rest % &psq).is_zero() {
            rest /= &psq;
            out *= &p;
        }
        p += 1;
    }
    let s = rest.sqrt();
    if &s * &s == rest {
        out *= s;
    }
    out
}

pub fn sqrt(e: Expr) -> Expr {
    match e {
        Expr::Num(r) => {
            if r.is_zero() {
                return Expr::Num(Rat::zero());
            }
            if let Some(root) = sqrt_rat(&r) {
                return Expr::Num(root);
            }
            // pull the square part of a positive rational: sqrt(a^2 s) = a sqrt(s)
            if !r.is_negative() {
                let an = square_part(r.numer());
                let ad = square_part(r.denom());
                let a = Rat::new(an.clone(), ad.clone());
                let s = &r / (&a * &a);
                if !a.is_one() {
                    return mul(vec![
                        Expr::Num(a),
                        Expr::Product(Rat::one(), vec![(Expr::Num(s), 1)]),
                    ]);
                }
            }
            Expr::Product(Rat::one(), vec![(Expr::Num(r), 1)])
        }
        Expr::Product(c, fs) => {
            // sqrt(c * X) = a * sqrt(s * X) for c = a^2 s with a > 0 rational
            let an = square_part(&c.numer().abs());
            let ad = square_part(&c.denom().abs());
            let a = Rat::new(an, ad);
            let s = &c / (&a * &a);
            let base = rebuild_product(s, fs);
            mul(vec![Expr::Num(a), Expr::Product(Rat::one(), vec![(base, 1)])])
        }
        other => Expr::Product(Rat::one(), vec![(other, 1)]),
    }
}

pub fn abs(e: Expr) -> Expr {
    match e {
        Expr::Num(r) => Expr::Num(r.abs()),
        Expr::Abs(x) => Expr::Abs(x),
        Expr::Product(c, fs) => {
            let inner = rebuild_product(Rat::one(), fs);
            let wrapped = match inner {
                Expr::Num(r) => Expr::Num(r.abs()),
                Expr::Abs(x) => Expr::Abs(x),
                other => Expr::Abs(Box::new(other)),
            };
            mul(vec![Expr::Num(c.abs()), wrapped])
        }
        other => Expr::Abs(Box::new(other)),
    }
}

impl Expr {
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(r) if r.is_one())
    }

    /// Formal derivative with respect to a named symbol.
    pub fn diff(&self, var: &str) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Num(_) => Expr::Num(Rat::zero()),
            Expr::Sym(s) => {
                if s == var {
                    Expr::Num(Rat::one())
                } else {
                    Expr::Num(Rat::zero())
                }
            }
            Expr::Sum(ts) => {
                let mut parts = Vec::with_capacity(ts.len());
                for t in ts {
                    parts.push(t.diff(var)?);
                }
                add(parts)
            }
            Expr::Product(c, fs) => {
                // d(prod b_i^(p_i/2)) = sum_i (p_i/2) b_i' b_i^(p_i/2 - 1) prod_{j!=i} ...
                let mut parts = Vec::new();
                for (i, (b, p)) in fs.iter().enumerate() {
                    let db = b.diff(var)?;
                    if db.is_zero() {
                        continue;
                    }
                    let mut term = vec![
                        Expr::Num(c * rat(*p, 2)),
                        db,
                        mul_half(b.clone(), p - 2),
                    ];
                    for (j, (bj, pj)) in fs.iter().enumerate() {
                        if j != i {
                            term.push(mul_half(bj.clone(), *pj));
                        }
                    }
                    parts.push(mul(term));
                }
                add(parts)
            }
            Expr::Abs(_) => return Err(ExprError::NonDifferentiable),
        })
    }

    /// Substitutes an expression for a symbol, renormalizing.
    pub fn substitute(&self, var: &str, value: &Expr) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Sym(s) => {
                if s == var {
                    value.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Sum(ts) => add(ts.iter().map(|t| t.substitute(var, value)).collect()),
            Expr::Product(c, fs) => {
                let mut parts = vec![Expr::Num(c.clone())];
                for (b, p) in fs {
                    parts.push(mul_half(b.substitute(var, value), *p));
                }
                mul(parts)
            }
            Expr::Abs(x) => abs(x.substitute(var, value)),
        }
    }

    /// All symbol names in the expression.
    pub fn symbols(&self) -> BTreeMap<String, ()> {
        let mut out = BTreeMap::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeMap<String, ()>) {
        match self {
            Expr::Num(_) => {}
            Expr::Sym(s) => {
                out.insert(s.clone(), ());
            }
            Expr::Sum(ts) => ts.iter().for_each(|t| t.collect_symbols(out)),
            Expr::Product(_, fs) => fs.iter().for_each(|(b, _)| b.collect_symbols(out)),
            Expr::Abs(x) => x.collect_symbols(out),
        }
    }

    /// Exact rational evaluation; None when a square root stays irrational,
    /// a symbol is unresolved, or a negative radicand appears.
    pub fn eval_rat<F>(&self, resolve: &F) -> Option<Rat>
    where
        F: Fn(&str) -> Option<Rat>,
    {
        match self {
            Expr::Num(r) => Some(r.clone()),
            Expr::Sym(s) => resolve(s),
            Expr::Sum(ts) => {
                let mut acc = Rat::zero();
                for t in ts {
                    acc += t.eval_rat(resolve)?;
                }
                Some(acc)
            }
            Expr::Product(c, fs) => {
                let mut acc = c.clone();
                for (b, p) in fs {
                    let v = b.eval_rat(resolve)?;
                    let whole = p.div_euclid(2);
                    acc *= crate::rat::rat_pow(&v, whole);
                    if p % 2 != 0 {
                        acc *= sqrt_rat(&v)?;
                    }
                }
                Some(acc)
            }
            Expr::Abs(x) => Some(x.eval_rat(resolve)?.abs()),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Expr::Num(r) => rat_str(r),
            Expr::Sym(s) => s.clone(),
            Expr::Sum(ts) => {
                let mut out = String::new();
                for (i, t) in ts.iter().enumerate() {
                    let piece = t.render();
                    if i == 0 {
                        out.push_str(&piece);
                    } else if let Some(stripped) = piece.strip_prefix('-') {
                        out.push_str(" - ");
                        out.push_str(stripped);
                    } else {
                        out.push_str(" + ");
                        out.push_str(&piece);
                    }
                }
                out
            }
            Expr::Product(c, fs) => {
                let mut num_parts: Vec<String> = Vec::new();
                let mut den_parts: Vec<String> = Vec::new();
                for (b, p) in fs {
                    let (target, q) = if *p > 0 {
                        (&mut num_parts, *p)
                    } else {
                        (&mut den_parts, -*p)
                    };
                    let base = match b {
                        Expr::Sum(_) => format!("({})", b.render()),
                        _ => b.render(),
                    };
                    let piece = match q {
                        1 => format!("sqrt({})", base),
                        2 => base,
                        q if q % 2 == 0 => format!("{}^{}", base, q / 2),
                        q => format!("{}^({}/2)", base, q),
                    };
                    target.push(piece);
                }
                let mut lead = String::new();
                let c_abs = c.abs();
                if c.is_negative() {
                    lead.push('-');
                }
                let num_str = if num_parts.is_empty() {
                    rat_str(&c_abs.numer().clone().into())
                } else {
                    let head = num_parts.join("*");
                    if c_abs.numer() == &BigInt::one() {
                        head
                    } else {
                        format!("{}*{}", c_abs.numer(), head)
                    }
                };
                let den_all = {
                    let mut d = den_parts;
                    if !c_abs.denom().is_one() {
                        d.insert(0, c_abs.denom().to_string());
                    }
                    d
                };
                if den_all.is_empty() {
                    format!("{}{}", lead, num_str)
                } else if den_all.len() == 1 {
                    format!("{}{}/{}", lead, num_str, den_all[0])
                } else {
                    format!("{}{}/({})", lead, num_str, den_all.join("*"))
                }
            }
            Expr::Abs(x) => format!("|{}|", x.render()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Lifts a kinematic-symbol polynomial with a custom symbol image.
pub fn from_kcoeff_with<F>(c: &KCoeff, image: &F) -> Expr
where
    F: Fn(KSym) -> Expr,
{
    let mut terms = Vec::new();
    for (m, r) in &c.terms {
        let mut fs = vec![num(r.clone())];
        for (s, e) in &m.0 {
            fs.push(pow(image(*s), *e as i64));
        }
        terms.push(mul(fs));
    }
    add(terms)
}

pub fn from_kcoeff(c: &KCoeff) -> Expr {
    from_kcoeff_with(c, &|s| sym(&s.to_string()))
}
