//! Exact sparse polynomial arithmetic for the two-level coefficient domain.
//!
//! Feynman-parametric polynomials live in Q[kinematic symbols][alpha_1..alpha_N]:
//! the outer level is a sparse polynomial in the Feynman parameters, the inner
//! level (`KCoeff`) a sparse polynomial in Lorentz invariants s_{i,j} and squared
//! masses. Momentum-square aliases like q1^2 or (q1+q2)^2 are never stored; every
//! invariant is expanded into the s_{i,j} basis when a polynomial is built, so two
//! routes to the same polynomial meet in one canonical form.
//!
//! Design notes:
//! - Multiplication is schoolbook convolution; degrees at desk scale never exceed
//!   a handful, so no FFT or heap-based methods are warranted.
//! - Canonical form: BTreeMap keyed by exponent vectors, zero coefficients
//!   removed eagerly. Equality and text rendering are therefore structural.
//! - Matrix work (determinant, inverse, solving) stays fraction-free where the
//!   spec demands it: determinants clear denominators and run Bareiss on
//!   integers; the inverse is adjugate/determinant built from Bareiss minors.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rat::{rat_str, Rat};

/// A kinematic symbol: either an invariant s_{i,j} = q_i . q_j with i <= j
/// (1-based leg indices), or the squared mass of internal edge e (1-based
/// position in the graph's edge list).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KSym {
    S(u8, u8),
    Msq(u8),
}

impl KSym {
    pub fn s(i: u8, j: u8) -> KSym {
        if i <= j {
            KSym::S(i, j)
        } else {
            KSym::S(j, i)
        }
    }
}

impl fmt::Display for KSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSym::S(i, j) => write!(f, "s[{},{}]", i, j),
            KSym::Msq(e) => write!(f, "msq[{}]", e),
        }
    }
}

/// Monomial in kinematic symbols: sorted (symbol, exponent) pairs, exponents > 0.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct KMono(pub Vec<(KSym, u32)>);

impl KMono {
    pub fn one() -> KMono {
        KMono(Vec::new())
    }

    pub fn var(s: KSym) -> KMono {
        KMono(vec![(s, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &KMono) -> KMono {
        let mut m: BTreeMap<KSym, u32> = self.0.iter().cloned().collect();
        for (s, e) in &other.0 {
            *m.entry(*s).or_insert(0) += e;
        }
        KMono(m.into_iter().collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }
}

/// Sparse polynomial over Q in kinematic symbols.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KCoeff {
    pub terms: BTreeMap<KMono, Rat>,
}

impl KCoeff {
    pub fn zero() -> KCoeff {
        KCoeff::default()
    }

    pub fn from_rat(r: Rat) -> KCoeff {
        let mut t = BTreeMap::new();
        if !r.is_zero() {
            t.insert(KMono::one(), r);
        }
        KCoeff { terms: t }
    }

    pub fn one() -> KCoeff {
        KCoeff::from_rat(Rat::one())
    }

    pub fn var(s: KSym) -> KCoeff {
        let mut t = BTreeMap::new();
        t.insert(KMono::var(s), Rat::one());
        KCoeff { terms: t }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant term if the polynomial is a pure rational, else None.
    pub fn as_rat(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&KMono::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    fn insert(&mut self, m: KMono, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &KCoeff) -> KCoeff {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> KCoeff {
        KCoeff {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &KCoeff) -> KCoeff {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &KCoeff) -> KCoeff {
        let mut out = KCoeff::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, r: &Rat) -> KCoeff {
        if r.is_zero() {
            return KCoeff::zero();
        }
        KCoeff {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * r)).collect(),
        }
    }

    /// Partial derivative with respect to one kinematic symbol.
    pub fn derivative(&self, s: KSym) -> KCoeff {
        let mut out = KCoeff::zero();
        for (m, c) in &self.terms {
            if let Some(pos) = m.0.iter().position(|(v, _)| *v == s) {
                let e = m.0[pos].1;
                let mut v = m.0.clone();
                if e == 1 {
                    v.remove(pos);
                } else {
                    v[pos].1 = e - 1;
                }
                out.insert(KMono(v), c * Rat::from_integer(BigInt::from(e)));
            }
        }
        out
    }

    /// Evaluates with a symbol resolver; reports the first missing symbol.
    pub fn eval<F>(&self, resolve: &F) -> Result<Rat, KSym>
    where
        F: Fn(KSym) -> Option<Rat>,
    {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (s, e) in &m.0 {
                let v = resolve(*s).ok_or(*s)?;
                for _ in 0..*e {
                    t *= &v;
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Renders with an optional symbol pretty-printer.
    pub fn render(&self, names: &dyn Fn(KSym) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts: Vec<String> = Vec::new();
        for (m, c) in &self.terms {
            let mut factors: Vec<String> = Vec::new();
            let mut coeff = c.clone();
            if m.is_one() {
                parts.push(rat_str(&coeff));
                continue;
            }
            let neg = coeff.is_negative();
            if neg {
                coeff = -coeff;
            }
            if !coeff.is_one() {
                factors.push(rat_str(&coeff));
            }
            for (s, e) in &m.0 {
                let n = names(*s);
                if *e == 1 {
                    factors.push(n);
                } else {
                    factors.push(format!("{}^{}", n, e));
                }
            }
            let term = factors.join("*");
            parts.push(if neg { format!("-{}", term) } else { term });
        }
        let mut out = String::new();
        for (i, p) in parts.iter().enumerate() {
            if i == 0 {
                out.push_str(p);
            } else if let Some(stripped) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        out
    }
}

impl fmt::Display for KCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|s| s.to_string()))
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("arity mismatch: {0} vs {1} alpha variables")]
    ArityMismatch(usize, usize),
    #[error("polynomial is not homogeneous quadratic in the alphas (degree {0} term found)")]
    NotQuadratic(u32),
    #[error("matrix is singular (zero determinant)")]
    Singular,
    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),
    #[error("missing kinematic value for {0}")]
    MissingValue(KSym),
    #[error("dimension mismatch: {0}")]
    Dim(String),
}

/// Sparse polynomial in the Feynman parameters alpha_1..alpha_n with `KCoeff`
/// coefficients. Keys are exponent vectors of fixed length `nvars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u16>, KCoeff>,
}

impl KPoly {
    pub fn zero(nvars: usize) -> KPoly {
        KPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: KCoeff) -> KPoly {
        let mut p = KPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> KPoly {
        KPoly::constant(nvars, KCoeff::one())
    }

    /// The monomial alpha_i (0-based i).
    pub fn alpha(nvars: usize, i: usize) -> KPoly {
        let mut e = vec![0u16; nvars];
        e[i] = 1;
        let mut p = KPoly::zero(nvars);
        p.terms.insert(e, KCoeff::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn insert_term(&mut self, expo: Vec<u16>, c: KCoeff) {
        assert_eq!(expo.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(expo) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().add(&c);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &KPoly) -> Result<KPoly, PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::ArityMismatch(self.nvars, other.nvars));
        }
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> KPoly {
        KPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &KPoly) -> Result<KPoly, PolyError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &KPoly) -> Result<KPoly, PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::ArityMismatch(self.nvars, other.nvars));
        }
        let mut out = KPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert_term(e, c1.mul(c2));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &KCoeff) -> KPoly {
        let mut out = KPoly::zero(self.nvars);
        for (e, k) in &self.terms {
            out.insert_term(e.clone(), k.mul(c));
        }
        out
    }

    pub fn scale_rat(&self, r: &Rat) -> KPoly {
        self.scale(&KCoeff::from_rat(r.clone()))
    }

    pub fn pow(&self, k: u32) -> KPoly {
        let mut acc = KPoly::one(self.nvars);
        for _ in 0..k {
            acc = acc.mul(self).expect("same arity");
        }
        acc
    }

    /// d/d alpha_i (0-based).
    pub fn dalpha(&self, i: usize) -> KPoly {
        let mut out = KPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.insert_term(e2, c.scale(&Rat::from_integer(BigInt::from(e[i]))));
            }
        }
        out
    }

    /// Partial derivative with respect to a kinematic symbol, alpha structure kept.
    pub fn dksym(&self, s: KSym) -> KPoly {
        let mut out = KPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.insert_term(e.clone(), c.derivative(s));
        }
        out
    }

    /// Sets alpha_i = 0 for every i in `zeroed` (0-based), keeping arity.
    pub fn restrict_zero(&self, zeroed: &[usize]) -> KPoly {
        let mut out = KPoly::zero(self.nvars);
        'term: for (e, c) in &self.terms {
            for &i in zeroed {
                if e[i] > 0 {
                    continue 'term;
                }
            }
            out.insert_term(e.clone(), c.clone());
        }
        out
    }

    /// Drops the listed variables (which must not occur) and renumbers the rest.
    pub fn project_out(&self, dropped: &[usize]) -> Result<KPoly, PolyError> {
        let keep: Vec<usize> = (0..self.nvars).filter(|i| !dropped.contains(i)).collect();
        let mut out = KPoly::zero(keep.len());
        for (e, c) in &self.terms {
            for &i in dropped {
                if e[i] > 0 {
                    return Err(PolyError::Dim(format!(
                        "variable a{} still occurs; restrict before projecting",
                        i + 1
                    )));
                }
            }
            let e2: Vec<u16> = keep.iter().map(|&i| e[i]).collect();
            out.insert_term(e2, c.clone());
        }
        Ok(out)
    }

    /// Substitutes each alpha_i by the given polynomial (used by blow-up charts).
    pub fn substitute(&self, images: &[KPoly]) -> Result<KPoly, PolyError> {
        if images.len() != self.nvars {
            return Err(PolyError::ArityMismatch(images.len(), self.nvars));
        }
        let arity = images.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = KPoly::zero(arity);
        for (e, c) in &self.terms {
            let mut term = KPoly::constant(arity, c.clone());
            for (i, img) in images.iter().enumerate() {
                for _ in 0..e[i] {
                    term = term.mul(img)?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Total degree in the alphas (max over terms).
    pub fn alpha_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as u32).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> Option<u32> {
        let mut deg = None;
        for e in self.terms.keys() {
            let d: u32 = e.iter().map(|&x| x as u32).sum();
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => return None,
                _ => {}
            }
        }
        deg.or(Some(0))
    }

    /// Specializes the kinematic symbols, leaving an alpha polynomial with
    /// rational coefficients (still a KPoly, with constant KCoeffs).
    pub fn specialize<F>(&self, resolve: &F) -> Result<KPoly, PolyError>
    where
        F: Fn(KSym) -> Option<Rat>,
    {
        let mut out = KPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            let v = c.eval(resolve).map_err(PolyError::MissingValue)?;
            out.insert_term(e.clone(), KCoeff::from_rat(v));
        }
        Ok(out)
    }

    /// Evaluates fully: kinematics resolved, alphas given as rationals.
    pub fn eval_rat<F>(&self, resolve: &F, alphas: &[Rat]) -> Result<Rat, PolyError>
    where
        F: Fn(KSym) -> Option<Rat>,
    {
        if alphas.len() != self.nvars {
            return Err(PolyError::ArityMismatch(alphas.len(), self.nvars));
        }
        let mut acc = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.eval(resolve).map_err(PolyError::MissingValue)?;
            for (i, &ex) in e.iter().enumerate() {
                for _ in 0..ex {
                    t *= &alphas[i];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Pre-specialized f64 form for quadrature inner loops.
    pub fn to_f64_terms<F>(&self, resolve: &F) -> Result<Vec<(Vec<u16>, f64)>, PolyError>
    where
        F: Fn(KSym) -> Option<Rat>,
    {
        let mut out = Vec::with_capacity(self.terms.len());
        for (e, c) in &self.terms {
            let v = c.eval(resolve).map_err(PolyError::MissingValue)?;
            let num = v.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
            let den = v.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
            out.push((e.clone(), num / den));
        }
        Ok(out)
    }

    /// Canonical text rendering: terms in key order, alphas named a1..aN.
    pub fn render(&self, names: &dyn Fn(KSym) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts: Vec<String> = Vec::new();
        for (e, c) in &self.terms {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| {
                    if x == 1 {
                        format!("a{}", i + 1)
                    } else {
                        format!("a{}^{}", i + 1, x)
                    }
                })
                .collect();
            let coeff = c.render(names);
            let term = if mono.is_empty() {
                coeff
            } else if coeff == "1" {
                mono.join("*")
            } else if coeff == "-1" {
                format!("-{}", mono.join("*"))
            } else if c.terms.len() > 1 {
                format!("({})*{}", coeff, mono.join("*"))
            } else {
                format!("{}*{}", coeff, mono.join("*"))
            };
            parts.push(term);
        }
        let mut out = String::new();
        for (i, p) in parts.iter().enumerate() {
            if i == 0 {
                out.push_str(p);
            } else if let Some(stripped) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        out
    }
}

impl fmt::Display for KPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|s| s.to_string()))
    }
}

/// Symmetric matrix of the quadric attached to a homogeneous quadratic:
/// Xi = alpha^T C alpha with C_ii = coeff(alpha_i^2), C_ij = coeff(alpha_i alpha_j)/2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadricForm {
    pub n: usize,
    pub mat: Vec<Vec<KCoeff>>,
}

impl QuadricForm {
    pub fn from_kpoly(p: &KPoly) -> Result<QuadricForm, PolyError> {
        let n = p.nvars;
        let mut mat = vec![vec![KCoeff::zero(); n]; n];
        for (e, c) in &p.terms {
            let total: u32 = e.iter().map(|&x| x as u32).sum();
            if total != 2 {
                return Err(PolyError::NotQuadratic(total));
            }
            let idx: Vec<usize> = e
                .iter()
                .enumerate()
                .flat_map(|(i, &x)| std::iter::repeat(i).take(x as usize))
                .collect();
            let (i, j) = (idx[0], idx[1]);
            if i == j {
                mat[i][i] = mat[i][i].add(c);
            } else {
                let half = c.scale(&crate::rat::rat(1, 2));
                mat[i][j] = mat[i][j].add(&half);
                mat[j][i] = mat[j][i].add(&half);
            }
        }
        Ok(QuadricForm { n, mat })
    }

    pub fn to_kpoly(&self) -> KPoly {
        let n = self.n;
        let mut p = KPoly::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut e = vec![0u16; n];
                e[i] += 1;
                e[j] += 1;
                p.insert_term(e, self.mat[i][j].clone());
            }
        }
        p
    }

    pub fn specialize<F>(&self, resolve: &F) -> Result<RatMat, PolyError>
    where
        F: Fn(KSym) -> Option<Rat>,
    {
        let mut rows = Vec::with_capacity(self.n);
        for r in &self.mat {
            let mut row = Vec::with_capacity(self.n);
            for c in r {
                row.push(c.eval(resolve).map_err(PolyError::MissingValue)?);
            }
            rows.push(row);
        }
        Ok(RatMat { rows })
    }
}

/// Dense matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMat {
    pub rows: Vec<Vec<Rat>>,
}

impl RatMat {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn identity(n: usize) -> RatMat {
        let mut rows = vec![vec![Rat::zero(); n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = Rat::one();
        }
        RatMat { rows }
    }

    pub fn matmul(&self, other: &RatMat) -> RatMat {
        let n = self.nrows();
        let k = self.ncols();
        let m = other.ncols();
        assert_eq!(k, other.nrows());
        let mut rows = vec![vec![Rat::zero(); m]; n];
        for i in 0..n {
            for j in 0..m {
                let mut acc = Rat::zero();
                for l in 0..k {
                    acc += &self.rows[i][l] * &other.rows[l][j];
                }
                rows[i][j] = acc;
            }
        }
        RatMat { rows }
    }

    /// Fraction-free Bareiss determinant: clears denominators, runs the
    /// integer Bareiss recurrence, divides the cleared factors back out.
    pub fn bareiss_det(&self) -> Result<Rat, PolyError> {
        let n = self.nrows();
        if n != self.ncols() {
            return Err(PolyError::NotSquare(self.nrows(), self.ncols()));
        }
        if n == 0 {
            return Ok(Rat::one());
        }
        let mut scale = BigInt::one();
        let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for row in &self.rows {
            let mut lcm = BigInt::one();
            for x in row {
                lcm = lcm.lcm(x.denom());
            }
            scale *= &lcm;
            m.push(row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect());
        }
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
                match swap {
                    Some(r) => {
                        m.swap(k, r);
                        sign = -sign;
                    }
                    None => return Ok(Rat::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = num / &prev; // Bareiss: division is exact
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }
        let det_scaled = sign * m[n - 1][n - 1].clone();
        Ok(Rat::new(det_scaled, scale))
    }

    /// Exact inverse via adjugate over Bareiss minors. Fraction-free end to end;
    /// the test suite checks C * U = I exactly and compares against an
    /// independent Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<RatMat, PolyError> {
        let n = self.nrows();
        if n != self.ncols() {
            return Err(PolyError::NotSquare(self.nrows(), self.ncols()));
        }
        let det = self.bareiss_det()?;
        if det.is_zero() {
            return Err(PolyError::Singular);
        }
        let mut rows = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(j, i).bareiss_det()?;
                let sgn = if (i + j) % 2 == 0 { Rat::one() } else { -Rat::one() };
                rows[i][j] = sgn * minor / det.clone();
            }
        }
        Ok(RatMat { rows })
    }

    fn minor(&self, drop_row: usize, drop_col: usize) -> RatMat {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != drop_row)
            .map(|(_, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != drop_col)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        RatMat { rows }
    }
}

/// Outcome of an exact linear solve. Inconsistency is a value, not an error:
/// the certificate is a row combination y with y.M = 0 and y.rhs = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Solved {
        particular: Vec<Rat>,
        nullspace: Vec<Vec<Rat>>,
    },
    Inconsistent {
        certificate: Vec<Rat>,
    },
}

/// Solves M x = rhs by reduced row echelon form over Q with deterministic
/// pivoting. `col_order` permutes the pivot search order; the particular
/// solution sets all free variables to zero, which is the minimal-support
/// representative for that pivot order.
pub fn linear_solve_ordered(m: &RatMat, rhs: &[Rat], col_order: &[usize]) -> Result<Solution, PolyError> {
    let nr = m.nrows();
    let nc = m.ncols();
    if rhs.len() != nr {
        return Err(PolyError::Dim(format!("rhs length {} vs {} rows", rhs.len(), nr)));
    }
    if col_order.len() != nc {
        return Err(PolyError::Dim("column order must list every column once".into()));
    }
    // Augment with rhs and identity to track the row operations.
    let mut a: Vec<Vec<Rat>> = (0..nr)
        .map(|i| {
            let mut row = m.rows[i].clone();
            row.push(rhs[i].clone());
            for j in 0..nr {
                row.push(if i == j { Rat::one() } else { Rat::zero() });
            }
            row
        })
        .collect();
    let rhs_col = nc;
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; nc];
    let mut r = 0usize;
    for &c in col_order {
        if r >= nr {
            break;
        }
        let piv = (r..nr).find(|&i| !a[i][c].is_zero());
        let Some(piv) = piv else { continue };
        a.swap(r, piv);
        let inv = a[r][c].clone().recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..nr {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let row_r = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&row_r) {
                    *x -= &f * y;
                }
            }
        }
        pivot_of_col[c] = Some(r);
        r += 1;
    }
    // Inconsistency: a fully reduced row with zero coefficients but nonzero rhs.
    for i in 0..nr {
        let all_zero = (0..nc).all(|c| a[i][c].is_zero());
        if all_zero && !a[i][rhs_col].is_zero() {
            let scale = a[i][rhs_col].clone().recip();
            let cert: Vec<Rat> = (0..nr).map(|j| &a[i][rhs_col + 1 + j] * &scale).collect();
            return Ok(Solution::Inconsistent { certificate: cert });
        }
    }
    let mut particular = vec![Rat::zero(); nc];
    for c in 0..nc {
        if let Some(pr) = pivot_of_col[c] {
            particular[c] = a[pr][rhs_col].clone();
        }
    }
    let free: Vec<usize> = (0..nc).filter(|&c| pivot_of_col[c].is_none()).collect();
    let mut nullspace = Vec::with_capacity(free.len());
    for &fc in &free {
        let mut v = vec![Rat::zero(); nc];
        v[fc] = Rat::one();
        for c in 0..nc {
            if let Some(pr) = pivot_of_col[c] {
                v[c] = -a[pr][fc].clone();
            }
        }
        nullspace.push(v);
    }
    Ok(Solution::Solved { particular, nullspace })
}

pub fn linear_solve(m: &RatMat, rhs: &[Rat]) -> Result<Solution, PolyError> {
    let order: Vec<usize> = (0..m.ncols()).collect();
    linear_solve_ordered(m, rhs, &order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_i};

    fn resolve_none(_: KSym) -> Option<Rat> {
        None
    }

    #[test]
    fn kcoeff_ring_ops() {
        let s = KCoeff::var(KSym::s(1, 2));
        let m = KCoeff::var(KSym::Msq(1));
        let sum = s.add(&m);
        let prod = sum.mul(&sum);
        // (s12 + m1)^2 = s12^2 + 2 s12 m1 + m1^2
        assert_eq!(prod.terms.len(), 3);
        let diff = prod.sub(&prod);
        assert!(diff.is_zero());
    }

    #[test]
    fn kpoly_mul_matches_eval() {
        // (a1 + 2 a2) * (3 a1 - a2) evaluated vs expanded at a few points
        let n = 2;
        let p = KPoly::alpha(n, 0)
            .add(&KPoly::alpha(n, 1).scale_rat(&rat_i(2)))
            .unwrap();
        let q = KPoly::alpha(n, 0)
            .scale_rat(&rat_i(3))
            .sub(&KPoly::alpha(n, 1))
            .unwrap();
        let prod = p.mul(&q).unwrap();
        for (x, y) in [(1i64, 2i64), (3, 5), (-2, 7)] {
            let al = [rat_i(x), rat_i(y)];
            let lhs = prod.eval_rat(&resolve_none, &al).unwrap();
            let rhs = p.eval_rat(&resolve_none, &al).unwrap() * q.eval_rat(&resolve_none, &al).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn quadric_roundtrip() {
        // 2 a1^2 + 6 a1 a2 + 5 a2^2 -> C = [[2,3],[3,5]]
        let n = 2;
        let p = KPoly::alpha(n, 0)
            .mul(&KPoly::alpha(n, 0))
            .unwrap()
            .scale_rat(&rat_i(2))
            .add(
                &KPoly::alpha(n, 0)
                    .mul(&KPoly::alpha(n, 1))
                    .unwrap()
                    .scale_rat(&rat_i(6)),
            )
            .unwrap()
            .add(
                &KPoly::alpha(n, 1)
                    .mul(&KPoly::alpha(n, 1))
                    .unwrap()
                    .scale_rat(&rat_i(5)),
            )
            .unwrap();
        let q = QuadricForm::from_kpoly(&p).unwrap();
        assert_eq!(q.mat[0][1].as_rat().unwrap(), rat_i(3));
        assert_eq!(q.to_kpoly(), p);
    }

    #[test]
    fn det_known_values() {
        let m = RatMat {
            rows: vec![
                vec![rat_i(2), rat_i(3)],
                vec![rat_i(3), rat_i(5)],
            ],
        };
        assert_eq!(m.bareiss_det().unwrap(), rat_i(1));
        let m3 = RatMat {
            rows: vec![
                vec![rat_i(1), rat(1, 2), rat(1, 3)],
                vec![rat(1, 2), rat(1, 3), rat(1, 4)],
                vec![rat(1, 3), rat(1, 4), rat(1, 5)],
            ],
        };
        // Hilbert 3x3 determinant = 1/2160
        assert_eq!(m3.bareiss_det().unwrap(), rat(1, 2160));
    }

    #[test]
    fn inverse_exact_identity() {
        let m = RatMat {
            rows: vec![
                vec![rat_i(1), rat(1, 2), rat(1, 3)],
                vec![rat(1, 2), rat(1, 3), rat(1, 4)],
                vec![rat(1, 3), rat(1, 4), rat(1, 5)],
            ],
        };
        let inv = m.inverse().unwrap();
        assert_eq!(m.matmul(&inv), RatMat::identity(3));
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = RatMat {
            rows: vec![vec![rat_i(1), rat_i(2)], vec![rat_i(2), rat_i(4)]],
        };
        assert_eq!(m.bareiss_det().unwrap(), rat_i(0));
        assert!(matches!(m.inverse(), Err(PolyError::Singular)));
    }

    #[test]
    fn solve_with_nullspace() {
        // x + y + z = 3 with one equation: nullspace dim 2
        let m = RatMat {
            rows: vec![vec![rat_i(1), rat_i(1), rat_i(1)]],
        };
        match linear_solve(&m, &[rat_i(3)]).unwrap() {
            Solution::Solved { particular, nullspace } => {
                assert_eq!(particular, vec![rat_i(3), rat_i(0), rat_i(0)]);
                assert_eq!(nullspace.len(), 2);
                for v in &nullspace {
                    let dot = v
                        .iter()
                        .zip(&m.rows[0])
                        .fold(Rat::zero(), |acc, (a, b)| acc + a * b);
                    assert!(dot.is_zero());
                }
            }
            _ => panic!("expected solution"),
        }
    }

    #[test]
    fn solve_inconsistent_certificate() {
        // x + y = 1, x + y = 2: certificate row combo gives 0 = 1
        let m = RatMat {
            rows: vec![vec![rat_i(1), rat_i(1)], vec![rat_i(1), rat_i(1)]],
        };
        match linear_solve(&m, &[rat_i(1), rat_i(2)]).unwrap() {
            Solution::Inconsistent { certificate } => {
                // y.M = 0 and y.rhs = 1
                let comb0 = &certificate[0] * &m.rows[0][0] + &certificate[1] * &m.rows[1][0];
                assert!(comb0.is_zero());
                let dot = &certificate[0] * &rat_i(1) + &certificate[1] * &rat_i(2);
                assert_eq!(dot, rat_i(1));
            }
            _ => panic!("expected inconsistency"),
        }
    }
}
