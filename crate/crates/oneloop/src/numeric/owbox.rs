//! Closed form for the fully massive 4-edge one-loop cycle in d = 4: the
//! integral is 1/(8 sqrt|det C|) times a sum of 42 Clausen values, seven for
//! each permutation (r,s,t) of the edge indices {1,2,3}, with edge 4 playing
//! the distinguished role. C is the symmetric quadric matrix of the
//! second graph polynomial and U its inverse.
//!
//! Normalization: direct quadrature of the parametric integral over the
//! simplex pins the prefactor to 1/(8 sqrt|det C|) (machine-precision
//! agreement at symmetric and asymmetric Euclidean points). The variant
//! normalization 1/16 computes exactly half of the simplex integral; the
//! half-versus-whole bookkeeping resurfaces in the coaction reduction and is
//! reported there.

use astro_float::BigFloat;
use num_traits::{Signed, Zero};

use crate::graph::{FeynmanGraph, KinematicPoint};
use crate::numeric::bigfloat::Ctx;
use crate::numeric::special::clausen_cl2;
use crate::numeric::NumError;
use crate::poly::QuadricForm;
use crate::rat::{rat_str, Rat};
use crate::symanzik::symanzik;

/// One permutation's contribution: the four angles nu^0..nu^3 and the seven
/// Clausen values [Cl2(2nu0), Cl2(2nu0+2nu1), Cl2(2nu0-2nu1), ..., Cl2(2nu0-2nu3)].
#[derive(Clone, Debug)]
pub struct OwTerm {
    /// Edge ids (r, s, t), a permutation of (1, 2, 3).
    pub perm: (usize, usize, usize),
    pub nu: [BigFloat; 4],
    pub dilogs: Vec<BigFloat>,
    pub contribution: BigFloat,
}

#[derive(Clone, Debug)]
pub struct OwValue {
    pub value: BigFloat,
    /// 1 / (8 sqrt|det C|).
    pub prefactor: BigFloat,
    pub det_c: Rat,
    pub terms: Vec<OwTerm>,
}

/// Principal arctan of num/den, with den = 0 resolved to sign(num) * pi/2.
/// A pi shift in any angle moves every Cl2 argument by a multiple of 2 pi,
/// so the principal branch already determines the value.
fn angle(
    ctx: &mut Ctx,
    num_sign: &Rat,
    num: &BigFloat,
    den_is_zero: bool,
    den: &BigFloat,
) -> BigFloat {
    if den_is_zero {
        if num_sign.is_zero() {
            return ctx.zero();
        }
        let pi = ctx.pi();
        let half = ctx.div(&pi, &ctx.int(2));
        return if num_sign.is_negative() { half.neg() } else { half };
    }
    let q = ctx.div(num, den);
    ctx.atan(&q)
}

/// Evaluates the 42-dilogarithm closed form at an exact kinematic point.
/// Requires the quadric to be non-singular and every radicand on the chosen
/// sheet to be non-negative; outside that region the formula needs analytic
/// continuation and an error is returned instead.
pub fn ow_box_value(
    g: &FeynmanGraph,
    p: &KinematicPoint,
    digits: usize,
) -> Result<OwValue, NumError> {
    g.validate_one_loop_cycle()
        .map_err(|_| NumError::NotBox)?;
    if g.edges.len() != 4 {
        return Err(NumError::NotBox);
    }
    let pair = symanzik(g)?;
    let c = QuadricForm::from_kpoly(&pair.xi)?.specialize(&p.resolver())?;
    let det_c = c.bareiss_det()?;
    if det_c.is_zero() {
        return Err(NumError::SingularQuadric);
    }
    let u = c.inverse()?;

    let mut ctx = Ctx::new(digits)?;
    // det U = 1 / det C
    let abs_det_u = det_c.recip().abs();
    let sqrt_abs_det_u = {
        let t = ctx.from_rat(&abs_det_u);
        ctx.sqrt(&t)
    };
    // shared radicand of nu^1
    let rad1: Rat = {
        let prod = &c.rows[3][3] * &u.rows[3][3];
        Rat::from_integer(1.into()) - prod
    };
    if rad1.is_negative() {
        return Err(NumError::NegativeRadicand(format!(
            "1 - C[4,4]U[4,4] = {}",
            rat_str(&rad1)
        )));
    }
    let sqrt_rad1 = {
        let t = ctx.from_rat(&rad1);
        ctx.sqrt(&t)
    };

    let perms: [(usize, usize, usize); 6] = [
        (1, 2, 3),
        (1, 3, 2),
        (2, 1, 3),
        (2, 3, 1),
        (3, 1, 2),
        (3, 2, 1),
    ];
    let two = ctx.int(2);
    let mut total = ctx.zero();
    let mut terms = Vec::with_capacity(6);
    for &(pr, ps, pt) in &perms {
        let (r, s, t) = (pr - 1, ps - 1, pt - 1);
        // rational building blocks for this permutation
        let a = &c.rows[t][3] * &u.rows[r][3];
        let den0 = &u.rows[r][s] * &u.rows[r][3] - &u.rows[r][r] * &u.rows[s][3];
        let rad2 = &u.rows[r][r] * &u.rows[s][s] - &u.rows[r][s] * &u.rows[r][s];
        if rad2.is_negative() {
            return Err(NumError::NegativeRadicand(format!(
                "U[{0},{0}]U[{1},{1}] - U[{0},{1}]^2 = {2}",
                pr,
                ps,
                rat_str(&rad2)
            )));
        }
        let rad3 = &u.rows[r][r] * &u.rows[3][3] - &u.rows[r][3] * &u.rows[r][3];
        if rad3.is_negative() {
            return Err(NumError::NegativeRadicand(format!(
                "U[{0},{0}]U[4,4] - U[{0},4]^2 = {1}",
                pr,
                rat_str(&rad3)
            )));
        }

        let a_bf = ctx.from_rat(&a);
        let den0_bf = ctx.from_rat(&den0);
        let ur4 = u.rows[r][3].clone();
        let ur4_bf = ctx.from_rat(&ur4);

        // nu0 = atan(a sqrt|det U| / den0)
        let num0 = ctx.mul(&a_bf, &sqrt_abs_det_u);
        let nu0 = angle(&mut ctx, &a, &num0, den0.is_zero(), &den0_bf);
        // nu1 = atan(a sqrt|det U| / (den0 sqrt(1 - C44 U44)))
        let den1 = ctx.mul(&den0_bf, &sqrt_rad1);
        let nu1 = angle(
            &mut ctx,
            &a,
            &num0,
            den0.is_zero() || rad1.is_zero(),
            &den1,
        );
        // nu2 = atan(U_r4 sqrt(U_rr U_ss - U_rs^2) / den0)
        let sqrt_rad2 = {
            let t2 = ctx.from_rat(&rad2);
            ctx.sqrt(&t2)
        };
        let num2 = ctx.mul(&ur4_bf, &sqrt_rad2);
        let num2_sign = if rad2.is_zero() { Rat::zero() } else { ur4.clone() };
        let nu2 = angle(&mut ctx, &num2_sign, &num2, den0.is_zero(), &den0_bf);
        // nu3 = atan(U_r4 / sqrt(U_rr U_44 - U_r4^2))
        let sqrt_rad3 = {
            let t3 = ctx.from_rat(&rad3);
            ctx.sqrt(&t3)
        };
        let nu3 = angle(&mut ctx, &ur4, &ur4_bf, rad3.is_zero(), &sqrt_rad3);

        // contribution = 2 Cl2(2nu0) + sum_l (-1)^l [Cl2(2nu0+2nu_l) + Cl2(2nu0-2nu_l)]
        let t0 = ctx.mul(&two, &nu0);
        let cl0 = clausen_cl2(&mut ctx, &t0);
        let mut dilogs = vec![cl0.clone()];
        let mut contribution = ctx.mul(&two, &cl0);
        for (l, nul) in [&nu1, &nu2, &nu3].iter().enumerate() {
            let tl = ctx.mul(&two, nul);
            let arg_p = ctx.add(&t0, &tl);
            let arg_m = ctx.sub(&t0, &tl);
            let cp = clausen_cl2(&mut ctx, &arg_p);
            let cm = clausen_cl2(&mut ctx, &arg_m);
            let pair_sum = ctx.add(&cp, &cm);
            contribution = if l % 2 == 0 {
                // l here is 0-based; paper's l = 1, 3 carry the minus sign
                ctx.sub(&contribution, &pair_sum)
            } else {
                ctx.add(&contribution, &pair_sum)
            };
            dilogs.push(cp);
            dilogs.push(cm);
        }
        total = ctx.add(&total, &contribution);
        terms.push(OwTerm {
            perm: (pr, ps, pt),
            nu: [nu0, nu1, nu2, nu3],
            dilogs,
            contribution,
        });
    }

    let prefactor = {
        let adc = ctx.from_rat(&det_c.abs());
        let sq = ctx.sqrt(&adc);
        let d8 = ctx.mul(&ctx.int(8), &sq);
        let one = ctx.int(1);
        ctx.div(&one, &d8)
    };
    let value = ctx.mul(&prefactor, &total);
    Ok(OwValue {
        value,
        prefactor,
        det_c,
        terms,
    })
}
