//! Closed-form coaction data for one-loop parametric integrals.
//!
//! Everything here is exact: cross-ratios of marked points on a projective
//! line, bubble periods as prefactor/argument pairs over quadratic
//! extensions of Q, the eight-term box formula, the triangle normal forms
//! for each mass pattern, corner blow-up certificates, the dilogarithm
//! coaction, and the weight-graded dimension counts. Numerics enter only in
//! the test suite, as cross-checks against independent quadrature.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::expr::{
    abs, add, div, from_kcoeff, int, mul, neg, num, pow, sqrt, sqrt_rat, sub, sym, Expr, ExprError,
};
use crate::graph::{FeynmanGraph, GraphError, KinematicPoint};
use crate::poly::{KCoeff, KPoly, KSym, PolyError, QuadricForm};
use crate::rat::Rat;
use crate::symanzik::{symanzik, SymError};

#[derive(Debug, Error)]
pub enum CoactionError {
    #[error("coincident marked points: {0}")]
    CoincidentPoints(String),
    #[error("degenerate quadric: {0}")]
    DegenerateQuadric(String),
    #[error("mass pattern mismatch: {0}")]
    MassPattern(String),
    #[error("two massless edges: no closed normal form at this weight")]
    TwoMasslessEdges,
    #[error("bad blow-up chart: {0}")]
    BadChart(String),
    #[error("incompatible radicands {0} and {1}")]
    IncompatibleRadicals(String, String),
    #[error("ambient projective dimension must be at least 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("a triangle carries at most three massless edges, got {0}")]
    BadMassCount(usize),
    #[error("expected {expected} edges, graph has {got}")]
    WrongEdgeCount { expected: usize, got: usize },
    #[error("unsupported graph shape: {0}")]
    UnsupportedShape(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A marked point on a projective line in one affine chart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjPoint {
    Infinity,
    Finite(Expr),
}

/// The cross-ratio [p0 p1 | p2 p3] = (p2-p0)(p3-p1) / ((p2-p1)(p3-p0)).
///
/// At most one argument may sit at infinity (infinity is a single point of
/// the line, so two of them always coincide). Coincidence among finite
/// points is detected structurally on canonical forms: a vanishing
/// denominator factor is an error, a vanishing numerator gives zero.
/// Structurally distinct expressions with numerically equal values pass
/// through unreduced.
pub fn cross_ratio(
    p0: &ProjPoint,
    p1: &ProjPoint,
    p2: &ProjPoint,
    p3: &ProjPoint,
) -> Result<Expr, CoactionError> {
    use ProjPoint::*;
    let pts = [p0, p1, p2, p3];
    let inf = pts.iter().filter(|p| matches!(p, Infinity)).count();
    if inf > 1 {
        return Err(CoactionError::CoincidentPoints(
            "more than one point at infinity".into(),
        ));
    }
    let fin = |p: &ProjPoint| -> Expr {
        match p {
            Finite(e) => e.clone(),
            Infinity => unreachable!(),
        }
    };
    // With one point at infinity the two factors containing it cancel.
    let (numers, denoms): (Vec<Expr>, Vec<Expr>) = match (p0, p1, p2, p3) {
        (Infinity, _, _, _) => (
            vec![sub(fin(p3), fin(p1))],
            vec![sub(fin(p2), fin(p1))],
        ),
        (_, Infinity, _, _) => (
            vec![sub(fin(p2), fin(p0))],
            vec![sub(fin(p3), fin(p0))],
        ),
        (_, _, Infinity, _) => (
            vec![sub(fin(p3), fin(p1))],
            vec![sub(fin(p3), fin(p0))],
        ),
        (_, _, _, Infinity) => (
            vec![sub(fin(p2), fin(p0))],
            vec![sub(fin(p2), fin(p1))],
        ),
        _ => (
            vec![sub(fin(p2), fin(p0)), sub(fin(p3), fin(p1))],
            vec![sub(fin(p2), fin(p1)), sub(fin(p3), fin(p0))],
        ),
    };
    for d in &denoms {
        if d.is_zero() {
            return Err(CoactionError::CoincidentPoints(
                "denominator pair coincides".into(),
            ));
        }
    }
    if numers.iter().any(|n| n.is_zero()) {
        return Ok(int(0));
    }
    Ok(div(mul(numers), mul(denoms)))
}

/// An exact element a + b sqrt(d) of a real quadratic extension of Q.
///
/// Construction folds perfect-square radicands into the rational part, so
/// `is_zero` can test a == b == 0 soundly; b == 0 forces d == 0 and acts as
/// a wildcard when combining with any other radicand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadVal {
    pub a: Rat,
    pub b: Rat,
    pub d: Rat,
}

impl QuadVal {
    pub fn new(a: Rat, b: Rat, d: Rat) -> QuadVal {
        if b.is_zero() || d.is_zero() {
            return QuadVal {
                a,
                b: Rat::zero(),
                d: Rat::zero(),
            };
        }
        if let Some(root) = sqrt_rat(&d) {
            return QuadVal {
                a: a + b * root,
                b: Rat::zero(),
                d: Rat::zero(),
            };
        }
        QuadVal { a, b, d }
    }

    pub fn from_rat(a: Rat) -> QuadVal {
        QuadVal::new(a, Rat::zero(), Rat::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn join_d(&self, other: &QuadVal) -> Result<Rat, CoactionError> {
        if self.b.is_zero() {
            return Ok(other.d.clone());
        }
        if other.b.is_zero() || self.d == other.d {
            return Ok(self.d.clone());
        }
        Err(CoactionError::IncompatibleRadicals(
            self.d.to_string(),
            other.d.to_string(),
        ))
    }

    pub fn add(&self, other: &QuadVal) -> Result<QuadVal, CoactionError> {
        let d = self.join_d(other)?;
        Ok(QuadVal::new(&self.a + &other.a, &self.b + &other.b, d))
    }

    pub fn sub(&self, other: &QuadVal) -> Result<QuadVal, CoactionError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &QuadVal) -> Result<QuadVal, CoactionError> {
        let d = self.join_d(other)?;
        Ok(QuadVal::new(
            &self.a * &other.a + &self.b * &other.b * &d,
            &self.a * &other.b + &other.a * &self.b,
            d,
        ))
    }

    pub fn neg(&self) -> QuadVal {
        QuadVal {
            a: -self.a.clone(),
            b: -self.b.clone(),
            d: self.d.clone(),
        }
    }

    pub fn conj(&self) -> QuadVal {
        QuadVal {
            a: self.a.clone(),
            b: -self.b.clone(),
            d: self.d.clone(),
        }
    }

    pub fn inv(&self) -> Result<QuadVal, CoactionError> {
        // norm a^2 - b^2 d is nonzero exactly when the element is nonzero
        let n = &self.a * &self.a - &self.b * &self.b * &self.d;
        if n.is_zero() {
            return Err(CoactionError::DegenerateQuadric(
                "inverse of zero in a quadratic extension".into(),
            ));
        }
        Ok(QuadVal::new(&self.a / &n, -(&self.b / &n), self.d.clone()))
    }

    pub fn div(&self, other: &QuadVal) -> Result<QuadVal, CoactionError> {
        self.mul(&other.inv()?)
    }

    pub fn to_expr(&self) -> Expr {
        add(vec![
            num(self.a.clone()),
            mul(vec![num(self.b.clone()), sqrt(num(self.d.clone()))]),
        ])
    }
}

/// Both roots of c2 t^2 + c1 t + c0 as exact quadratic values,
/// plus-branch first. A double root is rejected: every consumer here needs
/// two distinct marked points.
pub fn quadratic_roots(c2: &Rat, c1: &Rat, c0: &Rat) -> Result<(QuadVal, QuadVal), CoactionError> {
    if c2.is_zero() {
        return Err(CoactionError::DegenerateQuadric(
            "leading coefficient vanishes".into(),
        ));
    }
    let disc = c1 * c1 - Rat::from_integer(4.into()) * c2 * c0;
    if disc.is_zero() {
        return Err(CoactionError::DegenerateQuadric("double root".into()));
    }
    let two_c2 = Rat::from_integer(2.into()) * c2;
    let half = -(c1 / &two_c2);
    let spread = Rat::one() / two_c2;
    Ok((
        QuadVal::new(half.clone(), spread.clone(), disc.clone()),
        QuadVal::new(half, -spread, disc),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BubbleVariant {
    /// Both internal masses nonzero at the point.
    TwoMass,
    /// Exactly one internal mass vanishes at the point.
    OneMass,
}

/// The weight-one period of a two-edge graph in prefactor/argument form:
/// period = prefactor * log(argument).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BubblePeriod {
    pub prefactor: Expr,
    pub log_argument: Expr,
}

/// One-point normal form shared by every face whose quadric degenerates
/// onto a coordinate vertex: with the second intersection point at
/// coordinate x (chart sending the coinciding root to infinity) and the
/// hyperplane trace at -1, the period reads log(-1/x) / (x + 1).
fn one_mass_pair(x: Expr) -> Result<(Expr, Expr), CoactionError> {
    if x.is_zero() {
        return Err(CoactionError::DegenerateQuadric(
            "quadric point collides with the coordinate vertex".into(),
        ));
    }
    let shifted = add(vec![x.clone(), int(1)]);
    if shifted.is_zero() {
        return Err(CoactionError::DegenerateQuadric(
            "quadric point lies on the hyperplane trace".into(),
        ));
    }
    Ok((div(int(1), shifted), neg(div(int(1), x))))
}

/// Evaluates the bubble period of a two-edge graph at a rational kinematic
/// point. The two-mass branch keeps the quadratic surd exact; the one-mass
/// branch is rational. The prefactor carries the chart normalization of the
/// underlying one-form, so `prefactor * log(log_argument)` is the period of
/// the unnormalized representative; rescaling by the residue at either pole
/// removes the prefactor.
pub fn bubble_period(
    g: &FeynmanGraph,
    p: &KinematicPoint,
    variant: BubbleVariant,
) -> Result<BubblePeriod, CoactionError> {
    if g.edges.len() != 2 {
        return Err(CoactionError::WrongEdgeCount {
            expected: 2,
            got: g.edges.len(),
        });
    }
    let zeros: Vec<bool> = g
        .edges
        .iter()
        .map(|e| p.msq.get(&e.id).map(|v| v.is_zero()).unwrap_or(true))
        .collect();
    let c = QuadricForm::from_kpoly(&symanzik(g)?.xi)?.specialize(&p.resolver())?;
    let (c11, c12, c22) = (
        c.rows[0][0].clone(),
        c.rows[0][1].clone(),
        c.rows[1][1].clone(),
    );
    match variant {
        BubbleVariant::TwoMass => {
            if zeros[0] || zeros[1] {
                return Err(CoactionError::MassPattern(
                    "two-mass form needs both masses nonzero at the point".into(),
                ));
            }
            let disc = &c12 * &c12 - &c11 * &c22;
            if disc.is_zero() {
                return Err(CoactionError::DegenerateQuadric(
                    "the two quadric points coincide".into(),
                ));
            }
            // roots of C11 t^2 + 2 C12 t + C22 in the chart t = a1/a2
            let (x, y) = quadratic_roots(&c11, &(&c12 + &c12), &c22)?;
            let ratio = y.div(&x)?;
            Ok(BubblePeriod {
                prefactor: div(int(1), sqrt(num(Rat::from_integer(4.into()) * &disc))),
                log_argument: ratio.to_expr(),
            })
        }
        BubbleVariant::OneMass => {
            match (zeros[0], zeros[1]) {
                (true, true) => {
                    return Err(CoactionError::MassPattern(
                        "both masses vanish at the point".into(),
                    ))
                }
                (false, false) => {
                    return Err(CoactionError::MassPattern(
                        "one-mass form needs exactly one vanishing mass".into(),
                    ))
                }
                _ => {}
            }
            if c12.is_zero() {
                return Err(CoactionError::DegenerateQuadric(
                    "off-diagonal entry vanishes".into(),
                ));
            }
            let two_c12 = &c12 + &c12;
            // The chart puts the vertex-coinciding root at infinity; the
            // survivor sits on the axis of the massive edge.
            let x = if zeros[0] {
                -(&c22 / &two_c12)
            } else {
                -(&c11 / &two_c12)
            };
            let (prefactor, log_argument) = one_mass_pair(num(x))?;
            Ok(BubblePeriod {
                prefactor,
                log_argument,
            })
        }
    }
}

/// Left tensor factor of a coaction term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MotivicSide {
    /// The integral itself.
    Amplitude,
    /// The unit period.
    Unit,
    /// prefactor * log(argument).
    Log { prefactor: Expr, argument: Expr },
    Dilog { argument: Expr },
    Li1 { argument: Expr },
    /// The unit-modulus imaginary part combination of the dilogarithm.
    ImDilog { argument: Expr },
    /// marker * log(argument) with an undetermined rational marker.
    Marked { marker: String, argument: Expr },
}

/// Right tensor factor of a coaction term, written in the dual algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeRhamSide {
    /// Square of the Lefschetz period.
    LefschetzSquared,
    /// Dual copy of the integral.
    Amplitude,
    /// prefactor * log(argument) * Lefschetz.
    LogLefschetz { prefactor: Expr, argument: Expr },
    Lefschetz,
    Dilog { argument: Expr },
    ImDilog { argument: Expr },
    Log { argument: Expr },
    /// Sum of bare logarithms sharing one motivic cofactor.
    LogSum { arguments: Vec<Expr> },
    /// A dual basis class kept symbolic, named by its face data.
    DualClass { label: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoactionTerm {
    pub motivic: MotivicSide,
    pub derham: DeRhamSide,
    /// (left, right) degrees in the even grading used for the dimension
    /// counts; amplitude terms sum to 4, dilogarithm terms to 2.
    pub weight: (u8, u8),
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coaction {
    pub terms: Vec<CoactionTerm>,
    /// Names of undetermined rational coefficients, if any.
    pub markers: Vec<String>,
    pub notes: Vec<String>,
}

/// Canonical prefix serialization of an expression: rationals print bare,
/// sums as (+ ...), products as (* coeff factors...) with half-integer
/// exponents written p/2 in lowest terms, absolute values as (abs ...).
/// One canonical expression, one string.
pub fn prefix_form(e: &Expr) -> String {
    match e {
        Expr::Num(r) => r.to_string(),
        Expr::Sym(s) => s.clone(),
        Expr::Sum(ts) => format!(
            "(+ {})",
            ts.iter().map(prefix_form).collect::<Vec<_>>().join(" ")
        ),
        Expr::Product(c, fs) => {
            let mut parts = vec![c.to_string()];
            for (b, p) in fs {
                if *p == 2 {
                    parts.push(prefix_form(b));
                } else if p % 2 == 0 {
                    parts.push(format!("(^ {} {})", prefix_form(b), p / 2));
                } else {
                    parts.push(format!("(^ {} {}/2)", prefix_form(b), p));
                }
            }
            format!("(* {})", parts.join(" "))
        }
        Expr::Abs(x) => format!("(abs {})", prefix_form(x)),
    }
}

impl MotivicSide {
    fn render(&self) -> String {
        match self {
            MotivicSide::Amplitude => "I".into(),
            MotivicSide::Unit => "1".into(),
            MotivicSide::Log {
                prefactor,
                argument,
            } => {
                if prefactor.is_one() {
                    format!("log({})", argument.render())
                } else {
                    format!("({}) log({})", prefactor.render(), argument.render())
                }
            }
            MotivicSide::Dilog { argument } => format!("Li2({})", argument.render()),
            MotivicSide::Li1 { argument } => format!("Li1({})", argument.render()),
            MotivicSide::ImDilog { argument } => format!("ImLi2({})", argument.render()),
            MotivicSide::Marked { marker, argument } => {
                format!("{} log({})", marker, argument.render())
            }
        }
    }

    fn kv(&self, out: &mut Vec<(String, String)>, prefix: &str) {
        let kind = match self {
            MotivicSide::Amplitude => "amplitude",
            MotivicSide::Unit => "unit",
            MotivicSide::Log { .. } => "log",
            MotivicSide::Dilog { .. } => "dilog",
            MotivicSide::Li1 { .. } => "li1",
            MotivicSide::ImDilog { .. } => "imdilog",
            MotivicSide::Marked { .. } => "marked",
        };
        out.push((format!("{prefix}.kind"), kind.into()));
        match self {
            MotivicSide::Log {
                prefactor,
                argument,
            } => {
                out.push((format!("{prefix}.prefactor"), prefix_form(prefactor)));
                out.push((format!("{prefix}.argument"), prefix_form(argument)));
            }
            MotivicSide::Dilog { argument }
            | MotivicSide::Li1 { argument }
            | MotivicSide::ImDilog { argument } => {
                out.push((format!("{prefix}.argument"), prefix_form(argument)));
            }
            MotivicSide::Marked { marker, argument } => {
                out.push((format!("{prefix}.marker"), marker.clone()));
                out.push((format!("{prefix}.argument"), prefix_form(argument)));
            }
            _ => {}
        }
    }
}

impl DeRhamSide {
    fn render(&self) -> String {
        match self {
            DeRhamSide::LefschetzSquared => "L^2".into(),
            DeRhamSide::Amplitude => "I*".into(),
            DeRhamSide::LogLefschetz {
                prefactor,
                argument,
            } => {
                if prefactor.is_one() {
                    format!("log({}) L", argument.render())
                } else {
                    format!("({}) log({}) L", prefactor.render(), argument.render())
                }
            }
            DeRhamSide::Lefschetz => "L".into(),
            DeRhamSide::Dilog { argument } => format!("Li2*({})", argument.render()),
            DeRhamSide::ImDilog { argument } => format!("ImLi2*({})", argument.render()),
            DeRhamSide::Log { argument } => format!("log({})", argument.render()),
            DeRhamSide::LogSum { arguments } => format!(
                "({})",
                arguments
                    .iter()
                    .map(|a| format!("log({})", a.render()))
                    .collect::<Vec<_>>()
                    .join(" + ")
            ),
            DeRhamSide::DualClass { label } => format!("[{}]", label),
        }
    }

    fn kv(&self, out: &mut Vec<(String, String)>, prefix: &str) {
        let kind = match self {
            DeRhamSide::LefschetzSquared => "lefschetz2",
            DeRhamSide::Amplitude => "amplitude",
            DeRhamSide::LogLefschetz { .. } => "loglefschetz",
            DeRhamSide::Lefschetz => "lefschetz",
            DeRhamSide::Dilog { .. } => "dilog",
            DeRhamSide::ImDilog { .. } => "imdilog",
            DeRhamSide::Log { .. } => "log",
            DeRhamSide::LogSum { .. } => "logsum",
            DeRhamSide::DualClass { .. } => "dual",
        };
        out.push((format!("{prefix}.kind"), kind.into()));
        match self {
            DeRhamSide::LogLefschetz {
                prefactor,
                argument,
            } => {
                out.push((format!("{prefix}.prefactor"), prefix_form(prefactor)));
                out.push((format!("{prefix}.argument"), prefix_form(argument)));
            }
            DeRhamSide::Dilog { argument }
            | DeRhamSide::ImDilog { argument }
            | DeRhamSide::Log { argument } => {
                out.push((format!("{prefix}.argument"), prefix_form(argument)));
            }
            DeRhamSide::LogSum { arguments } => {
                for (i, a) in arguments.iter().enumerate() {
                    out.push((format!("{prefix}.argument.{i}"), prefix_form(a)));
                }
            }
            DeRhamSide::DualClass { label } => {
                out.push((format!("{prefix}.label"), label.clone()));
            }
            _ => {}
        }
    }
}

impl Coaction {
    /// Human-readable lines, one term per line.
    pub fn render_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.terms {
            let mut line = format!(
                "{} (x) {}   [weight {},{}]",
                t.motivic.render(),
                t.derham.render(),
                t.weight.0,
                t.weight.1
            );
            if !t.note.is_empty() {
                line.push_str(&format!("   -- {}", t.note));
            }
            out.push(line);
        }
        for n in &self.notes {
            out.push(format!("note: {}", n));
        }
        out
    }

    /// Deterministic key-value form with expressions in prefix
    /// serialization; suitable for machine diffing.
    pub fn render_kv(&self) -> Vec<(String, String)> {
        let mut out = vec![("terms".into(), self.terms.len().to_string())];
        for (i, t) in self.terms.iter().enumerate() {
            out.push((format!("term.{i}.weight"), format!("{},{}", t.weight.0, t.weight.1)));
            t.motivic.kv(&mut out, &format!("term.{i}.mot"));
            t.derham.kv(&mut out, &format!("term.{i}.dr"));
            if !t.note.is_empty() {
                out.push((format!("term.{i}.note"), t.note.clone()));
            }
        }
        for (i, m) in self.markers.iter().enumerate() {
            out.push((format!("marker.{i}"), m.clone()));
        }
        for (i, n) in self.notes.iter().enumerate() {
            out.push((format!("note.{i}"), n.clone()));
        }
        out
    }
}

/// Symbolic quadric matrix of a graph as canonical expressions.
pub(crate) fn quadric_exprs(g: &FeynmanGraph) -> Result<Vec<Vec<Expr>>, CoactionError> {
    let qf = QuadricForm::from_kpoly(&symanzik(g)?.xi)?;
    Ok(qf
        .mat
        .iter()
        .map(|row| row.iter().map(from_kcoeff).collect())
        .collect())
}

/// Laplace expansion along the first row; fine for the 4x4 inputs here.
pub(crate) fn det_expr(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut terms = Vec::new();
    for col in 0..n {
        let minor: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let piece = mul(vec![m[0][col].clone(), det_expr(&minor)]);
        terms.push(if col % 2 == 0 { piece } else { neg(piece) });
    }
    add(terms)
}

/// Entry (a, b) of the inverse via the adjugate.
pub(crate) fn inverse_entry(m: &[Vec<Expr>], det: &Expr, a: usize, b: usize) -> Expr {
    let n = m.len();
    let minor: Vec<Vec<Expr>> = (0..n)
        .filter(|&r| r != b)
        .map(|r| {
            (0..n)
                .filter(|&s| s != a)
                .map(|s| m[r][s].clone())
                .collect()
        })
        .collect();
    let cof = det_expr(&minor);
    let signed = if (a + b) % 2 == 0 { cof } else { neg(cof) };
    div(signed, det.clone())
}

/// Dual-quadric invariant of an index pair: w = U_jk^2 - U_jj U_kk for
/// U the inverse matrix. Positive w means the pair of tangent lines from
/// the dual point is real.
fn pair_invariant(m: &[Vec<Expr>], det: &Expr, j: usize, k: usize) -> (Expr, Expr) {
    let ujk = inverse_entry(m, det, j, k);
    let ujj = inverse_entry(m, det, j, j);
    let ukk = inverse_entry(m, det, k, k);
    let w = sub(pow(ujk.clone(), 2), mul(vec![ujj, ukk]));
    (w, ujk)
}

/// Motivic line term of a 2x2 restriction [[e00, e01], [e01, e11]]:
/// prefactor 1/sqrt(4 |det|) and the ratio of the two intersection points
/// as a cross-ratio against the line's coordinate vertices.
fn line_log(e00: &Expr, e01: &Expr, e11: &Expr) -> (Expr, Expr) {
    let det = sub(
        mul(vec![e00.clone(), e11.clone()]),
        pow(e01.clone(), 2),
    );
    let s = sqrt(sub(pow(e01.clone(), 2), mul(vec![e00.clone(), e11.clone()])));
    let prefactor = div(int(1), sqrt(mul(vec![int(4), abs(det)])));
    let argument = div(add(vec![e01.clone(), s.clone()]), sub(e01.clone(), s));
    (prefactor, argument)
}

/// The eight-term normal form for a four-edge one-cycle graph, fully
/// symbolic in the kinematic symbols.
///
/// Term order: the identity piece, then one line term per index pair
/// (j < k), then the dual unit piece. For each pair the motivic factor is
/// the logarithm of the quadric's point ratio on the coordinate line where
/// the two labeled alphas vanish; the dual factor pairs the log of
/// f = (sqrt(w) - U_jk)/(sqrt(w) + U_jk) with one Lefschetz period and the
/// prefactor sqrt|det D|/(8 sqrt|det C|) for D that same line restriction.
/// The two prefactors of a pair multiply to 1/(16 sqrt|det C|).
pub fn box_coaction(g: &FeynmanGraph) -> Result<Coaction, CoactionError> {
    if g.edges.len() != 4 {
        return Err(CoactionError::WrongEdgeCount {
            expected: 4,
            got: g.edges.len(),
        });
    }
    let c = quadric_exprs(g)?;
    let det = det_expr(&c);
    if det.is_zero() {
        return Err(CoactionError::DegenerateQuadric(
            "quadric matrix is singular".into(),
        ));
    }
    let mut terms = vec![CoactionTerm {
        motivic: MotivicSide::Amplitude,
        derham: DeRhamSide::LefschetzSquared,
        weight: (4, 0),
        note: String::new(),
    }];
    for j in 0..4 {
        for k in j + 1..4 {
            let comp: Vec<usize> = (0..4).filter(|&t| t != j && t != k).collect();
            let (a, b) = (comp[0], comp[1]);
            let det_d = sub(
                mul(vec![c[a][a].clone(), c[b][b].clone()]),
                pow(c[a][b].clone(), 2),
            );
            let (mot_pref, mot_arg) = line_log(&c[a][a], &c[a][b], &c[b][b]);
            let (w, ujk) = pair_invariant(&c, &det, j, k);
            let sw = sqrt(w);
            let f = div(sub(sw.clone(), ujk.clone()), add(vec![sw, ujk]));
            let p = div(
                sqrt(abs(det_d)),
                mul(vec![int(8), sqrt(abs(det.clone()))]),
            );
            terms.push(CoactionTerm {
                motivic: MotivicSide::Log {
                    prefactor: mot_pref,
                    argument: mot_arg,
                },
                derham: DeRhamSide::LogLefschetz {
                    prefactor: p,
                    argument: f,
                },
                weight: (2, 2),
                note: format!("pair ({},{})", g.edges[j].id, g.edges[k].id),
            });
        }
    }
    terms.push(CoactionTerm {
        motivic: MotivicSide::Unit,
        derham: DeRhamSide::Amplitude,
        weight: (0, 4),
        note: String::new(),
    });
    Ok(Coaction {
        terms,
        markers: vec![],
        notes: vec![],
    })
}

/// Face data of a three-edge graph: zeroing alpha_i leaves the two-variable
/// quadric on the remaining pair (j, k), j < k.
fn triangle_face(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn theta1_term(c: &[Vec<Expr>], i: usize, face_id: u8) -> CoactionTerm {
    let (j, k) = triangle_face(i);
    let (prefactor, argument) = line_log(&c[j][j], &c[j][k], &c[k][k]);
    CoactionTerm {
        motivic: MotivicSide::Log {
            prefactor,
            argument,
        },
        derham: DeRhamSide::DualClass {
            label: format!("theta1[face={}]", face_id),
        },
        weight: (2, 2),
        note: format!("face {}", face_id),
    }
}

/// Second-kind face term from the chart coordinate x of the marked quadric
/// point (the hyperplane trace sits at -1).
fn theta2_term(x: Expr, face_id: u8) -> Result<CoactionTerm, CoactionError> {
    let (prefactor, argument) = one_mass_pair(x)?;
    Ok(CoactionTerm {
        motivic: MotivicSide::Log {
            prefactor,
            argument,
        },
        derham: DeRhamSide::DualClass {
            label: format!("theta2[face={}]", face_id),
        },
        weight: (2, 2),
        note: format!("face {}", face_id),
    })
}

/// Printed closed-form arguments of the massless three-point normal form,
/// in the leg labeling of `graph::triangle`: first the ratio
/// (A + sqrt(R))^2 / (4 q1^2 q2^2) with A = q1^2 + q2^2 - q3^2, then that
/// ratio times (B - sqrt(R))/(B + sqrt(R)) with B = q1^2 + q3^2 - q2^2,
/// where R is the quoted radicand sum_i qi^4 - 2 q1^2 q3^2 - 2 q2^2 q3^2.
fn printed_massless_args(lids: &[u8]) -> (Expr, Expr, KCoeff) {
    let s = |i: usize| KCoeff::var(KSym::s(lids[i], lids[i]));
    let sq = |i: usize| s(i).mul(&s(i));
    let two = Rat::from_integer(2.into());
    let radicand = sq(0)
        .add(&sq(1))
        .add(&sq(2))
        .sub(&s(0).mul(&s(2)).scale(&two))
        .sub(&s(1).mul(&s(2)).scale(&two));
    let q = |i: usize| sym(&format!("s[{0},{0}]", lids[i]));
    let root = sqrt(from_kcoeff(&radicand));
    let a = add(vec![q(0), q(1), neg(q(2))]);
    let b = add(vec![q(0), q(2), neg(q(1))]);
    let first = div(
        pow(add(vec![a, root.clone()]), 2),
        mul(vec![int(4), q(0), q(1)]),
    );
    let second = mul(vec![
        first.clone(),
        div(sub(b.clone(), root.clone()), add(vec![b, root])),
    ]);
    (first, second, radicand)
}

/// Mass-pattern normal forms for a three-edge one-cycle graph.
///
/// All masses nonzero: seven terms; the six face classes obey one linear
/// relation, and the convention drops the second-kind class of face 1.
/// One massless edge: six terms; the massless edge's own face keeps both
/// kinds, the other two faces degenerate to the second kind alone.
/// Two massless edges: no closed form at this weight (error).
/// All massless: four terms with undetermined rational markers a1, a2; the
/// dual factor is the shared sum of two bare logarithms.
pub fn triangle_coaction(g: &FeynmanGraph) -> Result<Coaction, CoactionError> {
    if g.edges.len() != 3 {
        return Err(CoactionError::WrongEdgeCount {
            expected: 3,
            got: g.edges.len(),
        });
    }
    let c = quadric_exprs(g)?;
    let massless: Vec<usize> = g
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.mass.is_none())
        .map(|(i, _)| i)
        .collect();
    let mut terms = vec![CoactionTerm {
        motivic: MotivicSide::Amplitude,
        derham: DeRhamSide::LefschetzSquared,
        weight: (4, 0),
        note: String::new(),
    }];
    let mut markers = Vec::new();
    let mut notes = Vec::new();
    match massless.len() {
        0 => {
            for i in 0..3 {
                let face_id = g.edges[i].id;
                terms.push(theta1_term(&c, i, face_id));
                if i > 0 {
                    let (j, k) = triangle_face(i);
                    let s = sqrt(sub(
                        pow(c[j][k].clone(), 2),
                        mul(vec![c[j][j].clone(), c[k][k].clone()]),
                    ));
                    let x = div(add(vec![neg(c[j][k].clone()), s]), c[j][j].clone());
                    terms.push(theta2_term(x, face_id)?);
                }
            }
            notes.push(
                "the six face classes satisfy one linear relation; the second-kind class of face 1 is dropped by convention"
                    .into(),
            );
        }
        1 => {
            let i0 = massless[0];
            for i in 0..3 {
                let face_id = g.edges[i].id;
                if i == i0 {
                    terms.push(theta1_term(&c, i, face_id));
                    let (j, k) = triangle_face(i);
                    let s = sqrt(sub(
                        pow(c[j][k].clone(), 2),
                        mul(vec![c[j][j].clone(), c[k][k].clone()]),
                    ));
                    let x = div(add(vec![neg(c[j][k].clone()), s]), c[j][j].clone());
                    terms.push(theta2_term(x, face_id)?);
                } else {
                    let (j, k) = triangle_face(i);
                    let other = if j == i0 { k } else { j };
                    let x = neg(div(
                        c[other][other].clone(),
                        mul(vec![int(2), c[i0][other].clone()]),
                    ));
                    terms.push(theta2_term(x, face_id)?);
                }
            }
            notes.push(
                "the massless edge's face keeps both kinds; massive faces degenerate to the second kind"
                    .into(),
            );
        }
        2 => return Err(CoactionError::TwoMasslessEdges),
        _ => {
            let lids = g.leg_ids();
            if lids.len() != 3 {
                return Err(CoactionError::UnsupportedShape(
                    "the massless normal form needs exactly three external legs".into(),
                ));
            }
            let (first, second, _) = printed_massless_args(&lids);
            let logsum = DeRhamSide::LogSum {
                arguments: vec![first, second],
            };
            let q = |i: usize| sym(&format!("s[{0},{0}]", lids[i]));
            terms.push(CoactionTerm {
                motivic: MotivicSide::Marked {
                    marker: "a1".into(),
                    argument: div(q(1), q(2)),
                },
                derham: logsum.clone(),
                weight: (2, 2),
                note: String::new(),
            });
            terms.push(CoactionTerm {
                motivic: MotivicSide::Marked {
                    marker: "a2".into(),
                    argument: div(q(0), q(2)),
                },
                derham: logsum,
                weight: (2, 2),
                note: String::new(),
            });
            markers.push("a1".into());
            markers.push("a2".into());
            notes.push(
                "a1 and a2 are rational constants not fixed by this construction".into(),
            );
            notes.push(
                "the quoted radicand differs from the line-quadric discriminant; see massless_triangle_report"
                    .into(),
            );
        }
    }
    terms.push(CoactionTerm {
        motivic: MotivicSide::Unit,
        derham: DeRhamSide::Amplitude,
        weight: (0, 4),
        note: String::new(),
    });
    Ok(Coaction {
        terms,
        markers,
        notes,
    })
}

/// Element (p + q sqrt(d)) / r over the polynomial coefficient ring,
/// used to push exact surd arithmetic through the line-quadric roots.
/// No gcd reduction: the handful of operations here keeps sizes small.
#[derive(Debug, Clone)]
struct ExtElem {
    p: KCoeff,
    q: KCoeff,
    r: KCoeff,
    d: KCoeff,
}

impl ExtElem {
    fn rational(p: KCoeff, d: &KCoeff) -> ExtElem {
        ExtElem {
            p,
            q: KCoeff::zero(),
            r: KCoeff::one(),
            d: d.clone(),
        }
    }

    fn add(&self, o: &ExtElem) -> ExtElem {
        ExtElem {
            p: self.p.mul(&o.r).add(&o.p.mul(&self.r)),
            q: self.q.mul(&o.r).add(&o.q.mul(&self.r)),
            r: self.r.mul(&o.r),
            d: self.d.clone(),
        }
    }

    fn mul(&self, o: &ExtElem) -> ExtElem {
        ExtElem {
            p: self.p.mul(&o.p).add(&self.q.mul(&o.q).mul(&self.d)),
            q: self.p.mul(&o.q).add(&o.p.mul(&self.q)),
            r: self.r.mul(&o.r),
            d: self.d.clone(),
        }
    }

    fn inv(&self) -> Result<ExtElem, CoactionError> {
        let norm = self.p.mul(&self.p).sub(&self.q.mul(&self.q).mul(&self.d));
        if norm.is_zero() {
            return Err(CoactionError::DegenerateQuadric(
                "norm of a line-quadric root vanishes".into(),
            ));
        }
        Ok(ExtElem {
            p: self.r.mul(&self.p),
            q: self.r.mul(&self.q).neg(),
            r: norm,
            d: self.d.clone(),
        })
    }

    fn div(&self, o: &ExtElem) -> Result<ExtElem, CoactionError> {
        Ok(self.mul(&o.inv()?))
    }

    fn to_expr(&self) -> Expr {
        let surd = if self.q.is_zero() {
            int(0)
        } else {
            mul(vec![from_kcoeff(&self.q), sqrt(from_kcoeff(&self.d))])
        };
        div(add(vec![from_kcoeff(&self.p), surd]), from_kcoeff(&self.r))
    }
}

/// Comparison of the quoted massless three-point arguments against a direct
/// line-geometry computation, plus the blow-up evaluation of the motivic
/// factors.
///
/// The geometric route parametrizes the hyperplane section, intersects it
/// with the quadric, and forms the two cross-ratios against the coordinate
/// divisors exactly; its radicand is the discriminant of the restricted
/// quadric. The quoted radicand printed in the closed form differs from it,
/// and `radicands_agree` records the discrepancy. Root labels are fixed so
/// the first geometric cross-ratio matches the quoted orientation; swapping
/// them inverts both arguments.
#[derive(Debug, Clone)]
pub struct MasslessTriangleReport {
    pub printed_first: Expr,
    pub printed_second: Expr,
    pub geometric_first: Expr,
    pub geometric_second: Expr,
    pub printed_radicand: Expr,
    pub geometric_radicand: Expr,
    pub radicands_agree: bool,
    /// Exceptional-line cross-ratios over the first two corners.
    pub motivic_first: Expr,
    pub motivic_second: Expr,
}

pub fn massless_triangle_report(
    g: &FeynmanGraph,
) -> Result<MasslessTriangleReport, CoactionError> {
    if g.edges.len() != 3 {
        return Err(CoactionError::WrongEdgeCount {
            expected: 3,
            got: g.edges.len(),
        });
    }
    if g.edges.iter().any(|e| e.mass.is_some()) {
        return Err(CoactionError::MassPattern(
            "the report covers the all-massless pattern only".into(),
        ));
    }
    let lids = g.leg_ids();
    if lids.len() != 3 {
        return Err(CoactionError::UnsupportedShape(
            "the massless normal form needs exactly three external legs".into(),
        ));
    }
    let xi = symanzik(g)?.xi;
    // Hyperplane section alpha1 + alpha2 + alpha3 = 0, chart
    // (alpha1, alpha2, alpha3) = (t, 1, -t-1).
    let mut img_t = KPoly::zero(1);
    img_t.insert_term(vec![1], KCoeff::one());
    let mut img_one = KPoly::zero(1);
    img_one.insert_term(vec![0], KCoeff::one());
    let mut img_rest = KPoly::zero(1);
    img_rest.insert_term(vec![1], KCoeff::from_rat(-Rat::one()));
    img_rest.insert_term(vec![0], KCoeff::from_rat(-Rat::one()));
    let on_line = xi.substitute(&[img_t, img_one, img_rest])?;
    let coeff_of = |deg: u16| -> KCoeff {
        on_line
            .terms
            .get(&vec![deg])
            .cloned()
            .unwrap_or_else(KCoeff::zero)
    };
    let (c2, c1, c0) = (coeff_of(2), coeff_of(1), coeff_of(0));
    if c2.is_zero() {
        return Err(CoactionError::DegenerateQuadric(
            "restricted quadric is not quadratic in the line chart".into(),
        ));
    }
    let four = Rat::from_integer(4.into());
    let disc = c1.mul(&c1).sub(&c2.mul(&c0).scale(&four));
    if disc.is_zero() {
        return Err(CoactionError::DegenerateQuadric(
            "hyperplane section is tangent to the quadric".into(),
        ));
    }
    let two = Rat::from_integer(2.into());
    let f0 = ExtElem {
        p: c1.neg(),
        q: KCoeff::one(),
        r: c2.scale(&two),
        d: disc.clone(),
    };
    let f1 = ExtElem {
        p: c1.neg(),
        q: KCoeff::from_rat(-Rat::one()),
        r: c2.scale(&two),
        d: disc.clone(),
    };
    // Divisor traces on the line: t = 0, t = infinity, t = -1. The first
    // cross-ratio [f0 f1 | d1 d2] collapses to f0/f1; the second replaces
    // d2 by the finite point -1.
    let one = ExtElem::rational(KCoeff::one(), &disc);
    let geometric_first = f0.div(&f1)?;
    let geometric_second = f0.mul(&one.add(&f1)).div(&f1.mul(&one.add(&f0)))?;
    let (printed_first, printed_second, printed_radicand) = printed_massless_args(&lids);
    let agree = disc.sub(&printed_radicand).is_zero();
    // Blow-up leading parts: over corner i the quadric's tangent direction
    // cuts the exceptional line at -C_ik/C_ij in the chart w = alpha_j /
    // alpha_k, the hyperplane at -1, and the strict divisor transforms at 0
    // and infinity.
    let c = quadric_exprs(g)?;
    let corner_ratio = |i: usize| -> Result<Expr, CoactionError> {
        let (j, k) = triangle_face(i);
        if c[i][j].is_zero() {
            return Err(CoactionError::DegenerateQuadric(
                "corner tangent direction is undefined".into(),
            ));
        }
        let u = ProjPoint::Finite(neg(div(c[i][k].clone(), c[i][j].clone())));
        let gpt = ProjPoint::Finite(int(-1));
        cross_ratio(&gpt, &u, &ProjPoint::Infinity, &ProjPoint::Finite(int(0)))
    };
    Ok(MasslessTriangleReport {
        printed_first,
        printed_second,
        geometric_first: geometric_first.to_expr(),
        geometric_second: geometric_second.to_expr(),
        printed_radicand: from_kcoeff(&printed_radicand),
        geometric_radicand: from_kcoeff(&disc),
        radicands_agree: agree,
        motivic_first: corner_ratio(0)?,
        motivic_second: corner_ratio(1)?,
    })
}

/// One affine chart of the blow-up of the corner where the two labeled
/// alphas vanish: `which = 1` maps (alpha_j, alpha_k) to (b2, b1 b2),
/// `which = 2` swaps the roles; the third alpha is set to 1 and the
/// exceptional divisor is b2 = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartId {
    pub j: u8,
    pub k: u8,
    pub which: u8,
}

/// Pullback data in a blow-up chart, with exceptional valuations. The
/// integrand bookkeeping is for the four-dimensional three-edge integrand
/// (one inverse power each of the spanning-tree form and the quadric).
#[derive(Debug, Clone)]
pub struct PullbackReport {
    pub chart: String,
    pub psi_pullback: KPoly,
    pub psi_valuation: usize,
    pub xi_valuation: usize,
    /// Pullback of the quadric with b2^xi_valuation divided out.
    pub xi_quotient: KPoly,
    pub jacobian: KPoly,
    pub jacobian_valuation: usize,
    /// jacobian - psi - xi valuations; >= 0 certifies no exceptional pole.
    pub integrand_valuation: i64,
}

fn exceptional_valuation(p: &KPoly) -> usize {
    p.terms
        .keys()
        .map(|expo| expo[1] as usize)
        .min()
        .unwrap_or(0)
}

fn strip_exceptional(p: &KPoly, v: usize) -> KPoly {
    let mut out = KPoly::zero(p.nvars);
    for (expo, c) in &p.terms {
        let mut e = expo.clone();
        e[1] -= v as u16;
        out.insert_term(e, c.clone());
    }
    out
}

/// Blows up the corner opposite the two labeled edges and pulls the
/// three-edge data back to the requested chart. The corner is admissible
/// only when the quadric passes through it, i.e. when the third edge is
/// massless; otherwise the exceptional divisor would not factor.
pub fn blowup_pullback(
    g: &FeynmanGraph,
    chart: ChartId,
) -> Result<PullbackReport, CoactionError> {
    if g.edges.len() != 3 {
        return Err(CoactionError::WrongEdgeCount {
            expected: 3,
            got: g.edges.len(),
        });
    }
    if chart.which != 1 && chart.which != 2 {
        return Err(CoactionError::BadChart(format!(
            "chart index must be 1 or 2, got {}",
            chart.which
        )));
    }
    if chart.j == chart.k {
        return Err(CoactionError::BadChart("edge labels coincide".into()));
    }
    let pos_j = g.edge_position(chart.j)?;
    let pos_k = g.edge_position(chart.k)?;
    let pos_i = (0..3)
        .find(|p| *p != pos_j && *p != pos_k)
        .expect("three edges leave a third position");
    let pair = symanzik(g)?;
    // Admissibility: the corner on the remaining axis must lie on the
    // quadric, which for a one-cycle graph means no alpha_i^2 term.
    let mut corner = vec![0u16; 3];
    corner[pos_i] = 2;
    if pair
        .xi
        .terms
        .get(&corner)
        .map(|c| !c.is_zero())
        .unwrap_or(false)
    {
        return Err(CoactionError::BadChart(format!(
            "edge {} carries a mass term, so the quadric misses the blown-up corner",
            g.edges[pos_i].id
        )));
    }
    let mono = |e1: u16, e2: u16| -> KPoly {
        let mut p = KPoly::zero(2);
        p.insert_term(vec![e1, e2], KCoeff::one());
        p
    };
    let mut images = vec![KPoly::zero(2), KPoly::zero(2), KPoly::zero(2)];
    images[pos_i] = mono(0, 0);
    if chart.which == 1 {
        images[pos_j] = mono(0, 1);
        images[pos_k] = mono(1, 1);
    } else {
        images[pos_j] = mono(1, 1);
        images[pos_k] = mono(0, 1);
    }
    let psi_pullback = pair.psi.substitute(&images)?;
    let xi_pullback = pair.xi.substitute(&images)?;
    let psi_valuation = exceptional_valuation(&psi_pullback);
    let xi_valuation = exceptional_valuation(&xi_pullback);
    let xi_quotient = strip_exceptional(&xi_pullback, xi_valuation);
    let jac = images[pos_j]
        .dalpha(0)
        .mul(&images[pos_k].dalpha(1))?
        .sub(&images[pos_j].dalpha(1).mul(&images[pos_k].dalpha(0))?)?;
    let jacobian_valuation = exceptional_valuation(&jac);
    let integrand_valuation =
        jacobian_valuation as i64 - psi_valuation as i64 - xi_valuation as i64;
    let (bj, bk) = if chart.which == 1 {
        ("b2", "b1*b2")
    } else {
        ("b1*b2", "b2")
    };
    Ok(PullbackReport {
        chart: format!(
            "alpha[{}]=1, alpha[{}]={}, alpha[{}]={}",
            g.edges[pos_i].id, chart.j, bj, chart.k, bk
        ),
        psi_pullback,
        psi_valuation,
        xi_valuation,
        xi_quotient,
        jacobian: jac,
        jacobian_valuation,
        integrand_valuation,
    })
}

/// Coaction of the dilogarithm: Li2 (x) L + Li1 (x) log(x) L + 1 (x) Li2*.
/// Argument 1 makes the weight-one factor divergent; the shape is still
/// returned, with a note, and nothing is evaluated.
pub fn dilog_coaction(x: &Expr) -> Coaction {
    let mut notes = Vec::new();
    if x.is_one() {
        notes.push(
            "argument 1: the weight-one factor diverges; flagged, not evaluated".into(),
        );
    }
    Coaction {
        terms: vec![
            CoactionTerm {
                motivic: MotivicSide::Dilog {
                    argument: x.clone(),
                },
                derham: DeRhamSide::Lefschetz,
                weight: (2, 0),
                note: String::new(),
            },
            CoactionTerm {
                motivic: MotivicSide::Li1 {
                    argument: x.clone(),
                },
                derham: DeRhamSide::LogLefschetz {
                    prefactor: int(1),
                    argument: x.clone(),
                },
                weight: (1, 1),
                note: String::new(),
            },
            CoactionTerm {
                motivic: MotivicSide::Unit,
                derham: DeRhamSide::Dilog {
                    argument: x.clone(),
                },
                weight: (0, 2),
                note: String::new(),
            },
        ],
        markers: vec![],
        notes,
    }
}

/// Coaction of the unit-modulus imaginary part of the dilogarithm. The
/// middle term's weight-one dual factor is a bare logarithm, and the
/// motivic factor uses the rationalized combination (1-z)^2 / z in place
/// of the product (1-z)(1-1/z).
pub fn im_dilog_coaction(z: &Expr) -> Coaction {
    let mut notes = Vec::new();
    if z.is_one() {
        notes.push(
            "argument 1: the weight-one factor diverges; flagged, not evaluated".into(),
        );
    }
    Coaction {
        terms: vec![
            CoactionTerm {
                motivic: MotivicSide::ImDilog {
                    argument: z.clone(),
                },
                derham: DeRhamSide::LefschetzSquared,
                weight: (2, 0),
                note: String::new(),
            },
            CoactionTerm {
                motivic: MotivicSide::Log {
                    prefactor: int(1),
                    argument: div(pow(sub(int(1), z.clone()), 2), z.clone()),
                },
                derham: DeRhamSide::Log {
                    argument: z.clone(),
                },
                weight: (1, 1),
                note: String::new(),
            },
            CoactionTerm {
                motivic: MotivicSide::Unit,
                derham: DeRhamSide::ImDilog {
                    argument: z.clone(),
                },
                weight: (0, 2),
                note: String::new(),
            },
        ],
        markers: vec![],
        notes,
    }
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out = 1u64;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Dimensions of the even weight-graded pieces for a generic quadric in
/// projective n-space (n = edges - 1, n >= 3): grade 0 has dimension 1,
/// grade 2 has C(n+1, 2), grade 4 has C(n+1, 4), and from n = 5 on grade 6
/// contributes C(n+1, 6) - C(n+1, 7).
pub fn weight_graded_dims(n: usize) -> Result<Vec<(u32, u64)>, CoactionError> {
    if n < 3 {
        return Err(CoactionError::DimensionTooSmall(n));
    }
    let m = (n + 1) as u64;
    let mut out = vec![(0, 1), (2, binom(m, 2)), (4, binom(m, 4))];
    if n >= 5 {
        out.push((6, binom(m, 6) - binom(m, 7)));
    }
    Ok(out)
}

/// Triangle variant of the grade count: (1, 5 - v, 1) for v massless edges.
pub fn triangle_graded_dims(v: usize) -> Result<[u64; 3], CoactionError> {
    if v > 3 {
        return Err(CoactionError::BadMassCount(v));
    }
    Ok([1, 5 - v as u64, 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{box_graph, bubble, triangle, KinematicPoint};
    use crate::griffiths::ScalarSlice;
    use crate::numeric::{bf_to_f64, eval_expr, kin_symbol_map, Ctx};
    use crate::rat::{rat, rat_i};
    use crate::symanzik::xi_restrict;
    use std::collections::BTreeMap;

    fn ev(e: &Expr, vals: &BTreeMap<String, Rat>, ctx: &mut Ctx) -> f64 {
        let out = eval_expr(e, vals, ctx).unwrap();
        assert!(
            !out.negative_radicand,
            "unexpected complex branch in {}",
            e.render()
        );
        bf_to_f64(&out.value.re)
    }

    fn bubble_point(m1: i64, m2: i64, q2: Rat) -> KinematicPoint {
        let g = bubble();
        KinematicPoint::assemble(
            &g,
            [((1u8, 1u8), q2.clone()), ((2, 2), q2)].into_iter().collect(),
            &[("m1".to_string(), rat_i(m1)), ("m2".to_string(), rat_i(m2))]
                .into_iter()
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cross_ratio_normalizations() {
        use ProjPoint::*;
        let x = || Finite(sym("x"));
        let y = || Finite(sym("y"));
        let zero = || Finite(int(0));
        // [0, inf | x, y] = x/y
        let r = cross_ratio(&zero(), &Infinity, &x(), &y()).unwrap();
        assert_eq!(r, div(sym("x"), sym("y")));
        // [-1, x | 0, inf] = -1/x, the second-kind face normal form
        let r2 = cross_ratio(&Finite(int(-1)), &x(), &zero(), &Infinity).unwrap();
        assert_eq!(r2, neg(div(int(1), sym("x"))));
        assert_eq!(r2, one_mass_pair(sym("x")).unwrap().1);
        // a shared first/third point gives 0, a shared second/third errors
        assert!(cross_ratio(&x(), &y(), &x(), &zero()).unwrap().is_zero());
        assert!(matches!(
            cross_ratio(&x(), &y(), &y(), &zero()),
            Err(CoactionError::CoincidentPoints(_))
        ));
        assert!(matches!(
            cross_ratio(&Infinity, &y(), &Infinity, &zero()),
            Err(CoactionError::CoincidentPoints(_))
        ));
        // numeric involution: [p0 p1 | p2 p3] * [p1 p0 | p2 p3] = 1
        let pts = [rat_i(2), rat_i(5), rat(1, 3), rat_i(-7)];
        let fp = |i: usize| Finite(num(pts[i].clone()));
        let a = cross_ratio(&fp(0), &fp(1), &fp(2), &fp(3)).unwrap();
        let b = cross_ratio(&fp(1), &fp(0), &fp(2), &fp(3)).unwrap();
        let prod = mul(vec![a, b]);
        assert!(prod.is_one(), "got {}", prod.render());
    }

    #[test]
    fn quadval_folds_and_rationalizes() {
        let five = QuadVal::new(rat_i(3), rat_i(1), rat_i(4));
        assert_eq!(five, QuadVal::from_rat(rat_i(5)));
        let x = QuadVal::new(rat_i(2), rat_i(1), rat_i(3));
        let sq = x.mul(&x).unwrap();
        assert_eq!(sq.a, rat_i(7));
        assert_eq!(sq.b, rat_i(4));
        assert_eq!(
            sq.to_expr(),
            add(vec![int(7), mul(vec![int(4), sqrt(num(rat_i(3)))])])
        );
        let y = x.conj();
        assert!(x.mul(&y).unwrap().b.is_zero(), "norm must be rational");
        let other = QuadVal::new(rat_i(1), rat_i(1), rat_i(5));
        assert!(matches!(
            x.add(&other),
            Err(CoactionError::IncompatibleRadicals(_, _))
        ));
        // wildcard: a folded value combines with any radicand
        assert_eq!(five.add(&x).unwrap(), QuadVal::new(rat_i(7), rat_i(1), rat_i(3)));
    }

    #[test]
    fn two_mass_period_at_the_pinned_point() {
        let g = bubble();
        let p = bubble_point(1, 1, rat_i(2));
        let per = bubble_period(&g, &p, BubbleVariant::TwoMass).unwrap();
        assert_eq!(
            per.prefactor,
            div(int(1), mul(vec![int(2), sqrt(num(rat_i(3)))]))
        );
        assert_eq!(
            per.log_argument,
            add(vec![int(7), mul(vec![int(4), sqrt(num(rat_i(3)))])])
        );
        // independent check: Simpson quadrature of the chart integral
        // int_0^inf dt / (t^2 + 4t + 1) after t = u/(1-u)
        let f = |u: f64| 1.0 / (1.0 + 2.0 * u - 2.0 * u * u);
        let n = 2000;
        let h = 1.0 / n as f64;
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        let quad = acc * h / 3.0;
        let mut ctx = Ctx::new(40).unwrap();
        let vals = BTreeMap::new();
        let pref = ev(&per.prefactor, &vals, &mut ctx);
        let arg = ev(&per.log_argument, &vals, &mut ctx);
        let value = pref * arg.ln();
        assert!((value - quad).abs() < 1e-9, "value {} vs quadrature {}", value, quad);
    }

    #[test]
    fn two_mass_complex_roots_are_flagged_not_evaluated() {
        let g = bubble();
        let p = bubble_point(1, 1, rat_i(-1));
        let per = bubble_period(&g, &p, BubbleVariant::TwoMass).unwrap();
        let mut ctx = Ctx::new(30).unwrap();
        let vals = BTreeMap::new();
        let pref = eval_expr(&per.prefactor, &vals, &mut ctx).unwrap();
        let arg = eval_expr(&per.log_argument, &vals, &mut ctx).unwrap();
        assert!(pref.negative_radicand && arg.negative_radicand);
    }

    #[test]
    fn degenerate_and_mismatched_patterns_are_rejected() {
        let g = bubble();
        assert!(matches!(
            bubble_period(&g, &bubble_point(1, 1, rat_i(0)), BubbleVariant::TwoMass),
            Err(CoactionError::DegenerateQuadric(_))
        ));
        assert!(matches!(
            bubble_period(&g, &bubble_point(1, 0, rat_i(3)), BubbleVariant::TwoMass),
            Err(CoactionError::MassPattern(_))
        ));
        assert!(matches!(
            bubble_period(&g, &bubble_point(1, 1, rat_i(3)), BubbleVariant::OneMass),
            Err(CoactionError::MassPattern(_))
        ));
        assert!(matches!(
            bubble_period(&g, &bubble_point(0, 0, rat_i(3)), BubbleVariant::OneMass),
            Err(CoactionError::MassPattern(_))
        ));
        // x = -1: the surviving root lands on the hyperplane trace
        assert!(matches!(
            bubble_period(&g, &bubble_point(1, 0, rat_i(0)), BubbleVariant::OneMass),
            Err(CoactionError::DegenerateQuadric(_))
        ));
    }

    #[test]
    fn one_mass_period_is_rational_and_mirror_symmetric() {
        let g = bubble();
        let pa = bubble_period(&g, &bubble_point(1, 0, rat_i(3)), BubbleVariant::OneMass).unwrap();
        assert_eq!(pa.prefactor, num(rat(4, 3)));
        assert_eq!(pa.log_argument, num(rat_i(4)));
        let pb = bubble_period(&g, &bubble_point(0, 1, rat_i(3)), BubbleVariant::OneMass).unwrap();
        assert_eq!(pa, pb);
    }

    #[test]
    fn box_normal_form_has_eight_terms() {
        let co = box_coaction(&box_graph()).unwrap();
        assert_eq!(co.terms.len(), 8);
        assert_eq!(co.terms[0].motivic, MotivicSide::Amplitude);
        assert_eq!(co.terms[0].derham, DeRhamSide::LefschetzSquared);
        assert_eq!(co.terms[7].motivic, MotivicSide::Unit);
        assert_eq!(co.terms[7].derham, DeRhamSide::Amplitude);
        for t in &co.terms[1..7] {
            assert!(matches!(t.motivic, MotivicSide::Log { .. }));
            assert!(matches!(t.derham, DeRhamSide::LogLefschetz { .. }));
            assert_eq!(t.weight, (2, 2));
        }
        assert!(matches!(
            box_coaction(&triangle([true; 3])),
            Err(CoactionError::WrongEdgeCount { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn box_prefactors_multiply_to_the_global_constant() {
        let g = box_graph();
        let co = box_coaction(&g).unwrap();
        let c = quadric_exprs(&g).unwrap();
        let target = div(
            int(1),
            mul(vec![int(16), sqrt(abs(det_expr(&c)))]),
        );
        for t in &co.terms[1..7] {
            let mp = match &t.motivic {
                MotivicSide::Log { prefactor, .. } => prefactor.clone(),
                _ => unreachable!(),
            };
            let dp = match &t.derham {
                DeRhamSide::LogLefschetz { prefactor, .. } => prefactor.clone(),
                _ => unreachable!(),
            };
            assert_eq!(mul(vec![mp, dp]), target, "term {}", t.note);
        }
    }

    fn slice_one() -> ScalarSlice {
        ScalarSlice::new(
            &[(1, rat(-2, 1)), (2, rat(9, 2)), (3, rat(9, 4)), (4, rat(-1, 2))],
            &[("m1", rat_i(3)), ("m2", rat_i(9)), ("m3", rat(5, 2)), ("m4", rat_i(4))],
        )
    }

    fn slice_two() -> ScalarSlice {
        ScalarSlice::new(
            &[(1, rat_i(-7)), (2, rat_i(-3)), (3, rat_i(1)), (4, rat_i(-7))],
            &[("m1", rat_i(7)), ("m2", rat_i(1)), ("m3", rat_i(2)), ("m4", rat(1, 4))],
        )
    }

    #[test]
    fn box_symbolic_terms_match_rational_specialization() {
        let g = box_graph();
        let co = box_coaction(&g).unwrap();
        let mut ctx = Ctx::new(40).unwrap();
        for slice in [slice_one(), slice_two()] {
            let p = slice.point(&g).unwrap();
            let vals = kin_symbol_map(&p);
            let c = QuadricForm::from_kpoly(&symanzik(&g).unwrap().xi)
                .unwrap()
                .specialize(&p.resolver())
                .unwrap();
            let u = c.inverse().unwrap();
            let det_c = c.bareiss_det().unwrap();
            let mut term_iter = co.terms[1..7].iter();
            for j in 0..4usize {
                for k in j + 1..4 {
                    let t = term_iter.next().unwrap();
                    let comp: Vec<usize> = (0..4).filter(|&s| s != j && s != k).collect();
                    let (a, b) = (comp[0], comp[1]);
                    // dual log argument f against the rational-matrix route
                    let w = &u.rows[j][k] * &u.rows[j][k] - &u.rows[j][j] * &u.rows[k][k];
                    assert!(w > Rat::zero());
                    let wf = ctx.from_rat(&w);
                    let sw = ctx.sqrt(&wf);
                    let ujk = ctx.from_rat(&u.rows[j][k]);
                    let fnum = ctx.sub(&sw, &ujk);
                    let fden = ctx.add(&sw, &ujk);
                    let f_direct = bf_to_f64(&ctx.div(&fnum, &fden));
                    let (dp, da) = match &t.derham {
                        DeRhamSide::LogLefschetz { prefactor, argument } => {
                            (prefactor.clone(), argument.clone())
                        }
                        _ => unreachable!(),
                    };
                    let f_sym = ev(&da, &vals, &mut ctx);
                    assert!(
                        (f_sym - f_direct).abs() < 1e-25 * f_direct.abs().max(1.0),
                        "pair ({},{}): {} vs {}",
                        j,
                        k,
                        f_sym,
                        f_direct
                    );
                    // sqrt-branch involution: negating the surd inverts f
                    let det_expr_c = det_expr(&quadric_exprs(&g).unwrap());
                    let (wexpr, ujk_expr) = pair_invariant(
                        &quadric_exprs(&g).unwrap(),
                        &det_expr_c,
                        j,
                        k,
                    );
                    let msw = neg(sqrt(wexpr));
                    let f_flip = div(
                        sub(msw.clone(), ujk_expr.clone()),
                        add(vec![msw, ujk_expr]),
                    );
                    let prod = ev(&f_flip, &vals, &mut ctx) * f_sym;
                    assert!((prod - 1.0).abs() < 1e-12, "branch product {}", prod);
                    // dual prefactor against sqrt|det D|/(8 sqrt|det C|)
                    let det_d = &c.rows[a][a] * &c.rows[b][b] - &c.rows[a][b] * &c.rows[a][b];
                    let top = ctx.from_rat(&det_d.abs());
                    let bot = ctx.from_rat(&det_c.abs());
                    let tops = ctx.sqrt(&top);
                    let bots = ctx.sqrt(&bot);
                    let ratio = ctx.div(&tops, &bots);
                    let p_direct = bf_to_f64(&ratio) / 8.0;
                    let p_sym = ev(&dp, &vals, &mut ctx);
                    assert!((p_sym - p_direct).abs() < 1e-25 * p_direct.abs().max(1.0));
                    // motivic argument against the exact line-root ratio
                    let (mp, ma) = match &t.motivic {
                        MotivicSide::Log { prefactor, argument } => {
                            (prefactor.clone(), argument.clone())
                        }
                        _ => unreachable!(),
                    };
                    let two_cab = &c.rows[a][b] + &c.rows[a][b];
                    let (rx, ry) = quadratic_roots(&c.rows[a][a], &two_cab, &c.rows[b][b]).unwrap();
                    let ratio_expr = ry.div(&rx).unwrap().to_expr();
                    let lhs = ev(&ma, &vals, &mut ctx);
                    let rhs = ev(&ratio_expr, &vals, &mut ctx);
                    assert!(
                        (lhs - rhs).abs() < 1e-25 * rhs.abs().max(1.0),
                        "pair ({},{}): motivic {} vs roots {}",
                        j,
                        k,
                        lhs,
                        rhs
                    );
                    let mp_val = ev(&mp, &vals, &mut ctx);
                    let mp_direct = 1.0 / (2.0 * bf_to_f64(&ctx.sqrt(&top)));
                    assert!((mp_val - mp_direct).abs() < 1e-12 * mp_direct.abs());
                }
            }
        }
    }

    #[test]
    fn box_line_restriction_matches_quotient_polynomial() {
        let g = box_graph();
        let slice = slice_one();
        let p = slice.point(&g).unwrap();
        let c = QuadricForm::from_kpoly(&symanzik(&g).unwrap().xi)
            .unwrap()
            .specialize(&p.resolver())
            .unwrap();
        for j in 0..4usize {
            for k in j + 1..4 {
                let ids: BTreeSet<u8> = [g.edges[j].id, g.edges[k].id].into_iter().collect();
                let rest = xi_restrict(&g, &ids).unwrap();
                let m = QuadricForm::from_kpoly(&rest)
                    .unwrap()
                    .specialize(&p.resolver())
                    .unwrap();
                let det_quot = m.bareiss_det().unwrap();
                let comp: Vec<usize> = (0..4).filter(|&s| s != j && s != k).collect();
                let (a, b) = (comp[0], comp[1]);
                let det_minor = &c.rows[a][a] * &c.rows[b][b] - &c.rows[a][b] * &c.rows[a][b];
                assert_eq!(det_quot, det_minor, "pair ({},{})", j, k);
            }
        }
    }

    #[test]
    fn triangle_generic_normal_form_counts() {
        let co = triangle_coaction(&triangle([true; 3])).unwrap();
        assert_eq!(co.terms.len(), 7);
        let labels: Vec<String> = co.terms[1..6]
            .iter()
            .map(|t| match &t.derham {
                DeRhamSide::DualClass { label } => label.clone(),
                other => panic!("unexpected dual side {:?}", other),
            })
            .collect();
        assert_eq!(
            labels,
            vec![
                "theta1[face=1]",
                "theta1[face=2]",
                "theta2[face=2]",
                "theta1[face=3]",
                "theta2[face=3]"
            ]
        );
        assert_eq!(co.notes.len(), 1);
        assert_eq!(triangle_graded_dims(0).unwrap(), [1, 5, 1]);
    }

    #[test]
    fn triangle_one_mass_faces_degenerate_to_bubble_periods() {
        let g = triangle([false, true, true]);
        let co = triangle_coaction(&g).unwrap();
        assert_eq!(co.terms.len(), 6);
        let kinds: Vec<String> = co.terms[1..5]
            .iter()
            .map(|t| match &t.derham {
                DeRhamSide::DualClass { label } => label.clone(),
                other => panic!("unexpected dual side {:?}", other),
            })
            .collect();
        assert_eq!(
            kinds,
            vec![
                "theta1[face=1]",
                "theta2[face=1]",
                "theta2[face=2]",
                "theta2[face=3]"
            ]
        );
        assert_eq!(triangle_graded_dims(1).unwrap(), [1, 4, 1]);
        // face 2 contracts edge 2: a bubble with masses (0, m3) and
        // momentum q2^2; its period must match the face term exactly.
        let p = KinematicPoint::assemble(
            &g,
            [((1u8, 1u8), rat_i(5)), ((2, 2), rat_i(7)), ((3, 3), rat_i(11))]
                .into_iter()
                .collect(),
            &[("m2".to_string(), rat_i(2)), ("m3".to_string(), rat_i(3))]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let vals = kin_symbol_map(&p);
        let mut ctx = Ctx::new(40).unwrap();
        let face2 = &co.terms[3];
        let (fp, fa) = match &face2.motivic {
            MotivicSide::Log { prefactor, argument } => (prefactor.clone(), argument.clone()),
            _ => unreachable!(),
        };
        let bg = bubble();
        let bp = KinematicPoint::assemble(
            &bg,
            [((1u8, 1u8), rat_i(7)), ((2, 2), rat_i(7))].into_iter().collect(),
            &[("m1".to_string(), rat_i(0)), ("m2".to_string(), rat_i(3))]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let per = bubble_period(&bg, &bp, BubbleVariant::OneMass).unwrap();
        let empty = BTreeMap::new();
        let lhs = (ev(&fp, &vals, &mut ctx), ev(&fa, &vals, &mut ctx));
        let rhs = (
            ev(&per.prefactor, &empty, &mut ctx),
            ev(&per.log_argument, &empty, &mut ctx),
        );
        assert!((lhs.0 - rhs.0).abs() < 1e-25 && (lhs.1 - rhs.1).abs() < 1e-25,
            "face term ({}, {}) vs bubble ({}, {})", lhs.0, lhs.1, rhs.0, rhs.1);
    }

    #[test]
    fn triangle_two_massless_has_no_normal_form() {
        assert!(matches!(
            triangle_coaction(&triangle([false, false, true])),
            Err(CoactionError::TwoMasslessEdges)
        ));
        assert_eq!(triangle_graded_dims(2).unwrap(), [1, 3, 1]);
    }

    #[test]
    fn triangle_massless_normal_form_shapes() {
        let g = triangle([false; 3]);
        let co = triangle_coaction(&g).unwrap();
        assert_eq!(co.terms.len(), 4);
        assert_eq!(co.markers, vec!["a1".to_string(), "a2".to_string()]);
        match &co.terms[1].motivic {
            MotivicSide::Marked { marker, argument } => {
                assert_eq!(marker, "a1");
                assert_eq!(*argument, div(sym("s[2,2]"), sym("s[3,3]")));
            }
            other => panic!("unexpected motivic side {:?}", other),
        }
        match &co.terms[2].motivic {
            MotivicSide::Marked { marker, argument } => {
                assert_eq!(marker, "a2");
                assert_eq!(*argument, div(sym("s[1,1]"), sym("s[3,3]")));
            }
            other => panic!("unexpected motivic side {:?}", other),
        }
        let report = massless_triangle_report(&g).unwrap();
        match (&co.terms[1].derham, &co.terms[2].derham) {
            (DeRhamSide::LogSum { arguments: a }, DeRhamSide::LogSum { arguments: b }) => {
                assert_eq!(a, b);
                assert_eq!(a[0], report.printed_first);
                assert_eq!(a[1], report.printed_second);
            }
            other => panic!("unexpected dual sides {:?}", other),
        }
        assert_eq!(triangle_graded_dims(3).unwrap(), [1, 2, 1]);
        assert!(matches!(
            triangle_graded_dims(4),
            Err(CoactionError::BadMassCount(4))
        ));
    }

    #[test]
    fn massless_report_radicand_is_the_line_discriminant() {
        let report = massless_triangle_report(&triangle([false; 3])).unwrap();
        assert!(!report.radicands_agree);
        // independent build of the symmetric quartic discriminant
        let s = |i: u8| KCoeff::var(KSym::s(i, i));
        let two = Rat::from_integer(2.into());
        let mut kallen = KCoeff::zero();
        for i in 1..=3u8 {
            kallen = kallen.add(&s(i).mul(&s(i)));
        }
        for (i, j) in [(1u8, 2u8), (1, 3), (2, 3)] {
            kallen = kallen.sub(&s(i).mul(&s(j)).scale(&two));
        }
        assert_eq!(report.geometric_radicand, from_kcoeff(&kallen));
        // the quoted radicand sits exactly one 2 q1^2 q2^2 above it
        let offset = s(1).mul(&s(2)).scale(&two);
        assert_eq!(report.printed_radicand, from_kcoeff(&kallen.add(&offset)));
        // blow-up values of the motivic factors are plain ratios
        assert_eq!(report.motivic_first, div(sym("s[2,2]"), sym("s[3,3]")));
        assert_eq!(report.motivic_second, div(sym("s[1,1]"), sym("s[3,3]")));
        // mass pattern gate
        assert!(matches!(
            massless_triangle_report(&triangle([true, false, false])),
            Err(CoactionError::MassPattern(_))
        ));
    }

    #[test]
    fn massless_report_geometric_args_match_direct_roots() {
        let report = massless_triangle_report(&triangle([false; 3])).unwrap();
        // real-root regime: q1^2 = 1, q2^2 = 1, q3^2 = 9
        let vals: BTreeMap<String, Rat> = [
            ("s[1,1]".to_string(), rat_i(1)),
            ("s[2,2]".to_string(), rat_i(1)),
            ("s[3,3]".to_string(), rat_i(9)),
        ]
        .into_iter()
        .collect();
        let mut ctx = Ctx::new(40).unwrap();
        // line quadric -(q2^2 t^2 + A t + q1^2) with A = q1^2+q2^2-q3^2
        let (c2, c1, c0) = (-1.0f64, 7.0, -1.0);
        let disc = c1 * c1 - 4.0 * c2 * c0;
        let r_plus = (-c1 + disc.sqrt()) / (2.0 * c2);
        let r_minus = (-c1 - disc.sqrt()) / (2.0 * c2);
        let first = r_plus / r_minus;
        let second = (r_plus * (1.0 + r_minus)) / (r_minus * (1.0 + r_plus));
        let g1 = ev(&report.geometric_first, &vals, &mut ctx);
        let g2 = ev(&report.geometric_second, &vals, &mut ctx);
        assert!((g1 - first).abs() < 1e-12, "{} vs {}", g1, first);
        assert!((g2 - second).abs() < 1e-12, "{} vs {}", g2, second);
        // the quoted arguments differ numerically: different radicand
        let p1 = ev(&report.printed_first, &vals, &mut ctx);
        assert!((p1 - first).abs() > 1e-3, "printed {} unexpectedly agrees", p1);
    }

    #[test]
    fn blowup_factors_exactly_once_in_the_admissible_chart() {
        let g = triangle([true, true, false]);
        let report = blowup_pullback(&g, ChartId { j: 1, k: 2, which: 2 }).unwrap();
        assert_eq!(report.psi_valuation, 0);
        assert_eq!(report.xi_valuation, 1);
        assert_eq!(report.jacobian_valuation, 1);
        assert_eq!(report.integrand_valuation, 0);
        // corrected chart form of the quotient:
        // q1^2 + q2^2 b1 + q3^2 b1 b2 + (m1^2 b1 + m2^2)(b1 b2 + b2 + 1)
        let s = |i: u8| KCoeff::var(KSym::s(i, i));
        let m = |e: u8| KCoeff::var(KSym::Msq(e));
        let mut want = KPoly::zero(2);
        want.insert_term(vec![0, 0], s(1).add(&m(2)));
        want.insert_term(vec![1, 0], s(2).add(&m(1)));
        want.insert_term(vec![1, 1], s(3).add(&m(1)).add(&m(2)));
        want.insert_term(vec![2, 1], m(1));
        want.insert_term(vec![0, 1], m(2));
        assert_eq!(report.xi_quotient, want);
        // psi pulls back to b1 b2 + b2 + 1 with no exceptional factor
        let mut psi_want = KPoly::zero(2);
        psi_want.insert_term(vec![0, 0], KCoeff::one());
        psi_want.insert_term(vec![0, 1], KCoeff::one());
        psi_want.insert_term(vec![1, 1], KCoeff::one());
        assert_eq!(report.psi_pullback, psi_want);
    }

    #[test]
    fn blowup_rejects_a_massive_corner() {
        let g = triangle([true, true, false]);
        assert!(matches!(
            blowup_pullback(&g, ChartId { j: 1, k: 3, which: 1 }),
            Err(CoactionError::BadChart(_))
        ));
        assert!(matches!(
            blowup_pullback(&g, ChartId { j: 1, k: 1, which: 1 }),
            Err(CoactionError::BadChart(_))
        ));
        assert!(matches!(
            blowup_pullback(&g, ChartId { j: 1, k: 2, which: 3 }),
            Err(CoactionError::BadChart(_))
        ));
    }

    #[test]
    fn blowup_certifies_both_charts_with_two_massless_edges() {
        let g = triangle([false, false, true]);
        for chart in [
            ChartId { j: 2, k: 3, which: 1 },
            ChartId { j: 2, k: 3, which: 2 },
            ChartId { j: 1, k: 3, which: 1 },
            ChartId { j: 1, k: 3, which: 2 },
        ] {
            let report = blowup_pullback(&g, chart).unwrap();
            assert_eq!(report.xi_valuation, 1, "{}", report.chart);
            assert_eq!(report.integrand_valuation, 0, "{}", report.chart);
        }
        assert!(matches!(
            blowup_pullback(&g, ChartId { j: 1, k: 2, which: 1 }),
            Err(CoactionError::BadChart(_))
        ));
    }

    #[test]
    fn dilog_coaction_shapes_and_divergence_flag() {
        let x = sym("x");
        let co = dilog_coaction(&x);
        assert_eq!(co.terms.len(), 3);
        assert_eq!(co.terms[0].weight, (2, 0));
        assert_eq!(co.terms[1].weight, (1, 1));
        assert_eq!(co.terms[2].weight, (0, 2));
        assert!(co.notes.is_empty());
        let at_one = dilog_coaction(&int(1));
        assert_eq!(at_one.notes.len(), 1);
        assert_eq!(at_one.terms.len(), 3);
        let imv = im_dilog_coaction(&x);
        match &imv.terms[1].motivic {
            MotivicSide::Log { argument, .. } => {
                assert_eq!(*argument, div(pow(sub(int(1), sym("x")), 2), sym("x")));
            }
            other => panic!("unexpected motivic side {:?}", other),
        }
        assert!(matches!(imv.terms[1].derham, DeRhamSide::Log { .. }));
        // rationalized middle argument: (1-z)(1-1/z) z = -(1-z)^2
        let mut z = KPoly::zero(1);
        z.insert_term(vec![1], KCoeff::one());
        let one = KPoly::one(1);
        let lhs = one.sub(&z).unwrap().mul(&z.sub(&one).unwrap()).unwrap();
        let rhs = one.sub(&z).unwrap().mul(&one.sub(&z).unwrap()).unwrap().neg();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn graded_dimension_counts_match_small_cases() {
        assert_eq!(
            weight_graded_dims(3).unwrap(),
            vec![(0, 1), (2, 6), (4, 1)]
        );
        assert_eq!(
            weight_graded_dims(4).unwrap(),
            vec![(0, 1), (2, 10), (4, 5)]
        );
        assert_eq!(
            weight_graded_dims(5).unwrap(),
            vec![(0, 1), (2, 15), (4, 15), (6, 1)]
        );
        assert_eq!(
            weight_graded_dims(6).unwrap(),
            vec![(0, 1), (2, 21), (4, 35), (6, 6)]
        );
        assert!(matches!(
            weight_graded_dims(2),
            Err(CoactionError::DimensionTooSmall(2))
        ));
    }

    #[test]
    fn renderings_are_deterministic_and_prefix_forms_canonical() {
        assert_eq!(prefix_form(&div(sym("a"), sym("b"))), "(* 1 a (^ b -1))");
        assert_eq!(
            prefix_form(&add(vec![int(7), mul(vec![int(4), sqrt(num(rat_i(3)))])])),
            "(+ 7 (* 4 (^ 3 1/2)))"
        );
        assert_eq!(prefix_form(&num(rat(7, 2))), "7/2");
        let co = box_coaction(&box_graph()).unwrap();
        let kv1 = co.render_kv();
        let kv2 = co.render_kv();
        assert_eq!(kv1, kv2);
        assert_eq!(kv1[0], ("terms".to_string(), "8".to_string()));
        assert!(kv1
            .iter()
            .any(|(k, _)| k == "term.1.mot.prefactor"));
        let lines = co.render_lines();
        assert_eq!(lines.len(), 8);
        assert!(lines[0].contains("I (x) L^2"));
    }
}
