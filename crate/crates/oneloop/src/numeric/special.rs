//! Dilogarithm and Clausen function at arbitrary precision.

use astro_float::BigFloat;

use crate::numeric::bigfloat::{Ctx, CF};

/// Im Li_2(e^(i*theta)) for real theta: the Clausen function Cl_2.
/// Odd and 2pi-periodic.
pub fn im_li2_unit(ctx: &mut Ctx, theta: &BigFloat) -> BigFloat {
    clausen_cl2(ctx, theta)
}

/// Cl_2(theta) = -int_0^theta ln|2 sin(t/2)| dt
///             = t - t ln t + sum_{m>=1} c_m t^(2m+1)   on (0, pi],
/// with c_m = (-1)^(m+1) B_{2m} / (2m (2m+1) (2m)!) > 0. The argument is
/// first reduced mod 2pi into (-pi, pi]; the series converges there
/// (term ratio (t/2pi)^2 <= 1/4).
pub fn clausen_cl2(ctx: &mut Ctx, theta: &BigFloat) -> BigFloat {
    let pi = ctx.pi();
    let two_pi = ctx.add(&pi, &pi);
    let q = ctx.div(theta, &two_pi);
    let k = ctx.round_int(&q);
    let red = ctx.sub(theta, &ctx.mul(&k, &two_pi));
    if red.is_zero() {
        return ctx.zero();
    }
    let neg = red.is_negative();
    let t = red.abs();

    // t - t ln t
    let lnt = ctx.ln(&t);
    let mut acc = ctx.sub(&t, &ctx.mul(&t, &lnt));

    let t2 = ctx.mul(&t, &t);
    let mut tp = ctx.mul(&t2, &t); // t^3
    let tol_exp = -(ctx.digits() as i64) - 8;
    let tol = ctx.pow10(tol_exp);
    let mut m = 1usize;
    loop {
        let c = ctx.cl2_coeff(m);
        let term = ctx.mul(&c, &tp);
        acc = ctx.add(&acc, &term);
        if ctx.le(&term.abs(), &tol) {
            break;
        }
        tp = ctx.mul(&tp, &t2);
        m += 1;
        // |theta| <= pi makes the ratio <= 1/4; this cap is unreachable and
        // only guards the loop against a broken reduction.
        assert!(m < 20_000, "Clausen series failed to converge");
    }
    if neg {
        acc.neg()
    } else {
        acc
    }
}

/// Principal-branch complex dilogarithm, cut along [1, inf).
/// On the cut itself the value continuous from the lower half-plane is
/// returned (Im Li_2(x) = -pi ln x for x > 1).
pub fn li2(ctx: &mut Ctx, z: &CF) -> CF {
    if z.is_zero() {
        return ctx.c_zero();
    }
    let one = ctx.c_int(1);

    // pi^2/6
    let pi = ctx.pi();
    let pi2_6 = ctx.div(&ctx.mul(&pi, &pi), &ctx.int(6));

    let mut acc = ctx.c_zero();
    let mut sign = 1i64;
    let mut w = z.clone();

    // Inversion: Li2(z) = -Li2(1/z) - pi^2/6 - ln(-z)^2/2 for |z| > 1.
    let abs2 = ctx.c_abs2(&w);
    if ctx.lt(&ctx.int(1), &abs2) {
        let ln_neg = ctx.c_ln(&ctx.c_neg(&w));
        let sq = ctx.c_mul(&ln_neg, &ln_neg);
        let half_sq = ctx.c_scale(&sq, &ctx.from_f64(0.5));
        acc = ctx.c_neg(&ctx.c_add(&half_sq, &ctx.c_real(pi2_6.clone())));
        sign = -1;
        w = ctx.c_div(&one, &w);
    }

    if ctx.c_sub(&w, &one).is_zero() {
        // Only reachable for z = 1 exactly.
        let v = ctx.c_real(pi2_6);
        let sv = if sign < 0 { ctx.c_neg(&v) } else { v };
        return ctx.c_add(&acc, &sv);
    }

    // Reflection: Li2(w) = pi^2/6 - ln(w) ln(1-w) - Li2(1-w) for Re(w) > 1/2.
    let half = ctx.from_f64(0.5);
    if ctx.lt(&half, &w.re) {
        let omw = ctx.c_sub(&one, &w);
        let lw = ctx.c_ln(&w);
        let lomw = ctx.c_ln(&omw);
        let prod = ctx.c_mul(&lw, &lomw);
        let t = ctx.c_sub(&ctx.c_real(pi2_6), &prod);
        let st = if sign < 0 { ctx.c_neg(&t) } else { t };
        acc = ctx.c_add(&acc, &st);
        sign = -sign;
        w = omw;
    }

    // Series in u = -ln(1-w): Li2(w) = u - u^2/4 + sum_{m>=1} B_{2m} u^(2m+1)/(2m+1)!.
    // Here |w| <= 1 and Re(w) <= 1/2, so |1-w| in [1/2, 2] and |u| < 1.4,
    // giving a term ratio below (1.4/2pi)^2 ~ 0.05.
    let omw = ctx.c_sub(&one, &w);
    let ln_omw = ctx.c_ln(&omw);
    let u = ctx.c_neg(&ln_omw);
    let u2 = ctx.c_mul(&u, &u);
    let quarter = ctx.from_f64(0.25);
    let mut s = ctx.c_sub(&u, &ctx.c_scale(&u2, &quarter));
    let mut up = ctx.c_mul(&u2, &u); // u^3
    let tol_exp = -(ctx.digits() as i64) - 8;
    let tol = ctx.pow10(tol_exp);
    let mut m = 1usize;
    loop {
        let c = ctx.li2_coeff(m);
        let term = ctx.c_scale(&up, &c);
        s = ctx.c_add(&s, &term);
        let mag = ctx.c_abs(&term);
        if ctx.le(&mag, &tol) {
            break;
        }
        up = ctx.c_mul(&up, &u2);
        m += 1;
        assert!(m < 20_000, "dilogarithm series failed to converge");
    }
    let ss = if sign < 0 { ctx.c_neg(&s) } else { s };
    ctx.c_add(&acc, &ss)
}

/// Catalan's constant by an independent route (for testing Cl_2(pi/2)):
/// G = (pi/8) ln(2+sqrt(3)) + (3/8) sum_{n>=0} (n!)^2 / ((2n)! (2n+1)^2).
pub fn catalan_reference(ctx: &mut Ctx) -> BigFloat {
    let pi = ctx.pi();
    let three = ctx.int(3);
    let sqrt3 = ctx.sqrt(&three);
    let arg = ctx.add(&ctx.int(2), &sqrt3);
    let ln_part = ctx.ln(&arg);
    let first = ctx.div(&ctx.mul(&pi, &ln_part), &ctx.int(8));

    // t_0 = 1; t_{n+1} = t_n (n+1)(2n+1) / (2 (2n+3)^2)
    let mut term = ctx.int(1);
    let mut sum = ctx.zero();
    let tol = ctx.pow10(-(ctx.digits() as i64) - 8);
    let mut n = 0i64;
    loop {
        sum = ctx.add(&sum, &term);
        if ctx.le(&term, &tol) {
            break;
        }
        let num = ctx.int((n + 1) * (2 * n + 1));
        let den = ctx.int(2 * (2 * n + 3) * (2 * n + 3));
        term = ctx.div(&ctx.mul(&term, &num), &den);
        n += 1;
        assert!(n < 1_000_000);
    }
    let second = ctx.div(&ctx.mul(&three, &sum), &ctx.int(8));
    ctx.add(&first, &second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::bigfloat::bf_to_f64;

    fn ctx30() -> Ctx {
        Ctx::new(30).unwrap()
    }

    #[test]
    fn li2_classical_values() {
        let mut ctx = ctx30();
        let pi = ctx.pi();
        let pi2 = ctx.mul(&pi, &pi);

        let z1 = ctx.c_int(1);
        let v1 = li2(&mut ctx, &z1);
        let expect1 = ctx.div(&pi2, &ctx.int(6));
        assert!(ctx.close(&v1.re, &expect1, -25));
        assert!(v1.im.is_zero() || ctx.close(&v1.im, &ctx.zero(), -25));

        let zm1 = ctx.c_int(-1);
        let vm1 = li2(&mut ctx, &zm1);
        let expect2 = ctx.div(&pi2, &ctx.int(-12));
        assert!(ctx.close(&vm1.re, &expect2, -25));

        let zh = {
            let re = ctx.from_f64(0.5);
            ctx.c_real(re)
        };
        let vh = li2(&mut ctx, &zh);
        // Li2(1/2) = pi^2/12 - ln(2)^2/2
        let ln2 = ctx.ln(&ctx.int(2));
        let expect3 = ctx.sub(
            &ctx.div(&pi2, &ctx.int(12)),
            &ctx.div(&ctx.mul(&ln2, &ln2), &ctx.int(2)),
        );
        assert!(ctx.close(&vh.re, &expect3, -25));
    }

    #[test]
    fn li2_reflection_identity_random() {
        // Li2(z) + Li2(1-z) = pi^2/6 - ln(z) ln(1-z) at 20 pseudo-random
        // points spread over the disk |z| < 2, avoiding the cut.
        let mut ctx = ctx30();
        let pi = ctx.pi();
        let pi2_6 = ctx.div(&ctx.mul(&pi, &pi), &ctx.int(6));
        let mut state = 0x12345678u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..20 {
            let re = 4.0 * next() - 2.0;
            let im = 4.0 * next() - 2.0;
            let im = if im.abs() < 0.05 { im + 0.1 } else { im };
            let z = CF {
                re: ctx.from_f64(re),
                im: ctx.from_f64(im),
            };
            let one = ctx.c_int(1);
            let omz = ctx.c_sub(&one, &z);
            let a = li2(&mut ctx, &z);
            let b = li2(&mut ctx, &omz);
            let lhs = ctx.c_add(&a, &b);
            let lz = ctx.c_ln(&z);
            let lomz = ctx.c_ln(&omz);
            let rhs = ctx.c_sub(&ctx.c_real(pi2_6.clone()), &ctx.c_mul(&lz, &lomz));
            let diff = ctx.c_sub(&lhs, &rhs);
            let mag = ctx.c_abs(&diff);
            let tol = ctx.pow10(-25);
            assert!(
                ctx.le(&mag, &tol),
                "reflection identity residual {} at z = {} + {}i",
                bf_to_f64(&mag),
                re,
                im
            );
        }
    }

    #[test]
    fn clausen_at_pi_over_2_is_catalan() {
        let mut ctx = ctx30();
        let pi = ctx.pi();
        let half_pi = ctx.div(&pi, &ctx.int(2));
        let v = im_li2_unit(&mut ctx, &half_pi);
        let g = catalan_reference(&mut ctx);
        assert!(ctx.close(&v, &g, -25), "Cl2(pi/2) = {}", bf_to_f64(&v));
        // f64 spot value
        assert!((bf_to_f64(&v) - 0.915_965_594_177_219).abs() < 1e-14);
    }

    #[test]
    fn clausen_odd_periodic_and_zeros() {
        let mut ctx = ctx30();
        let pi = ctx.pi();
        let zero = ctx.zero();
        assert!(im_li2_unit(&mut ctx, &zero).is_zero());
        let at_pi = im_li2_unit(&mut ctx, &pi);
        assert!(ctx.close(&at_pi, &ctx.zero(), -25));

        let mut state = 0xfeedu64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        let two_pi = ctx.add(&pi, &pi);
        for _ in 0..50 {
            let t = 20.0 * next() - 10.0;
            let tb = ctx.from_f64(t);
            let v = im_li2_unit(&mut ctx, &tb);
            // odd
            let vm = im_li2_unit(&mut ctx, &tb.neg());
            assert!(ctx.close(&v, &vm.neg(), -25));
            // 2pi-periodic
            let shifted = ctx.add(&tb, &two_pi);
            let vs = im_li2_unit(&mut ctx, &shifted);
            assert!(ctx.close(&v, &vs, -25));
        }
    }

    #[test]
    fn li2_agrees_with_clausen_on_unit_circle() {
        // Li2(e^(i theta)) has imaginary part Cl2(theta); checks the complex
        // dilog and the Clausen series against each other away from 1.
        let mut ctx = ctx30();
        for &theta in &[0.7f64, 1.9, 2.8, -1.2, 3.9] {
            let tb = ctx.from_f64(theta);
            let re = ctx.cos(&tb);
            let im = ctx.sin(&tb);
            let z = CF { re, im };
            let v = li2(&mut ctx, &z);
            let c = clausen_cl2(&mut ctx, &tb);
            assert!(
                ctx.close(&v.im, &c, -25),
                "mismatch at theta = {theta}: {} vs {}",
                bf_to_f64(&v.im),
                bf_to_f64(&c)
            );
        }
    }

    #[test]
    fn high_precision_50_digits() {
        let mut ctx = Ctx::new(50).unwrap();
        let pi = ctx.pi();
        let half_pi = ctx.div(&pi, &ctx.int(2));
        let v = im_li2_unit(&mut ctx, &half_pi);
        // 50-digit Catalan reference.
        let g = ctx.parse_dec("0.91596559417721901505460351493238411077414937428167");
        assert!(ctx.close(&v, &g, -48));
    }
}
