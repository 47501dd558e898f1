//! Numerical layer: arbitrary-precision special functions, expression
//! evaluation, the 42-dilogarithm closed form for the 4-edge cycle, and
//! deterministic quadrature over the Feynman simplex.

pub mod bigfloat;
pub mod owbox;
pub mod quad;
pub mod special;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::Expr;
use crate::graph::{GraphError, KinematicPoint};
use crate::poly::PolyError;
use crate::rat::Rat;
use crate::symanzik::SymError;

pub use bigfloat::{bf_to_f64, rat_to_f64, Ctx, CF};
pub use owbox::{ow_box_value, OwTerm, OwValue};
pub use quad::{parametric_quadrature, Method, QuadratureResult};
pub use special::{catalan_reference, clausen_cl2, im_li2_unit, li2};

#[derive(Debug, Error)]
pub enum NumError {
    #[error("precision of {0} decimal digits outside supported range 1..={1}")]
    PrecisionOutOfRange(usize, usize),
    #[error("negative radicand in {0}")]
    NegativeRadicand(String),
    #[error("singular quadric: det C = 0")]
    SingularQuadric,
    #[error("graph is not a one-loop 4-edge cycle")]
    NotBox,
    #[error("integrand divergent at sectors {0}")]
    Divergent(String),
    #[error("kinematic point not on the Euclidean sheet: {0}")]
    NotEuclidean(String),
    #[error("integrand evaluated to a non-finite value")]
    DivergenceDetected,
    #[error("unsupported number of integration variables: {0}")]
    UnsupportedDimension(usize),
    #[error("division by zero while evaluating an expression")]
    DivisionByZero,
    #[error("unbound symbol {0}")]
    UnboundSymbol(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Result of evaluating an expression tree: a complex value and a record of
/// whether any square root was taken of a negative real number (the value is
/// then on the principal branch).
#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub value: CF,
    pub negative_radicand: bool,
}

/// Maps every bound kinematic symbol of a point to its exact value, keyed by
/// the symbol's display form ("s[i,j]", "msq[e]").
pub fn kin_symbol_map(p: &KinematicPoint) -> BTreeMap<String, Rat> {
    let mut out = BTreeMap::new();
    for ((i, j), v) in &p.s {
        out.insert(format!("s[{},{}]", i, j), v.clone());
    }
    for (e, v) in &p.msq {
        out.insert(format!("msq[{}]", e), v.clone());
    }
    out
}

/// Evaluates an expression at exact rational symbol values, in the given
/// precision context. Square roots take the principal branch.
pub fn eval_expr(
    e: &Expr,
    vals: &BTreeMap<String, Rat>,
    ctx: &mut Ctx,
) -> Result<EvalOutcome, NumError> {
    let mut flag = false;
    let value = eval_rec(e, vals, ctx, &mut flag)?;
    Ok(EvalOutcome {
        value,
        negative_radicand: flag,
    })
}

fn eval_rec(
    e: &Expr,
    vals: &BTreeMap<String, Rat>,
    ctx: &mut Ctx,
    flag: &mut bool,
) -> Result<CF, NumError> {
    match e {
        Expr::Num(r) => Ok(ctx.c_from_rat(r)),
        Expr::Sym(name) => {
            let v = vals
                .get(name)
                .ok_or_else(|| NumError::UnboundSymbol(name.clone()))?;
            Ok(ctx.c_from_rat(v))
        }
        Expr::Sum(ts) => {
            let mut acc = ctx.c_zero();
            for t in ts {
                let v = eval_rec(t, vals, ctx, flag)?;
                acc = ctx.c_add(&acc, &v);
            }
            Ok(acc)
        }
        Expr::Product(coeff, factors) => {
            let mut acc = ctx.c_from_rat(coeff);
            for (base, p) in factors {
                let v = eval_rec(base, vals, ctx, flag)?;
                // p counts half-exponents: base^(p/2)
                let (q, r) = (p.div_euclid(2), p.rem_euclid(2));
                if v.is_zero() {
                    if *p < 0 {
                        return Err(NumError::DivisionByZero);
                    }
                    acc = ctx.c_zero();
                    continue;
                }
                let mut w = ctx.c_powi(&v, q);
                if r == 1 {
                    if v.im.is_zero() && v.re.is_negative() {
                        *flag = true;
                    }
                    let root = ctx.c_sqrt(&v);
                    w = ctx.c_mul(&w, &root);
                }
                acc = ctx.c_mul(&acc, &w);
            }
            Ok(acc)
        }
        Expr::Abs(b) => {
            let v = eval_rec(b, vals, ctx, flag)?;
            let m = ctx.c_abs(&v);
            Ok(ctx.c_real(m))
        }
    }
}
