//! Arbitrary-precision real and complex arithmetic.
//!
//! Thin context around `astro_float::BigFloat`: one precision, one rounding
//! mode, one constants cache. Every operation rounds to the context
//! precision, which carries guard bits beyond the requested decimal digits,
//! so identity tests at `10^-digits` tolerances are not eaten by rounding.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign, WORD_BIT_SIZE};
use num_bigint::BigInt;
use num_traits::Zero;

use crate::numeric::NumError;
use crate::rat::Rat;

const LOG2_10: f64 = 3.321928094887362;
const GUARD_BITS: usize = 64;
pub const MAX_DIGITS: usize = 10_000;

/// Precision context. Methods take `&mut self` because the shared constants
/// cache (pi, ln 2, ...) is lazily populated.
pub struct Ctx {
    prec: usize,
    digits: usize,
    rm: RoundingMode,
    cc: Consts,
    bern: Vec<Rat>,
    cl2_c: Vec<BigFloat>,
    li2_c: Vec<BigFloat>,
}

impl Ctx {
    pub fn new(digits: usize) -> Result<Ctx, NumError> {
        if digits == 0 || digits > MAX_DIGITS {
            return Err(NumError::PrecisionOutOfRange(digits, MAX_DIGITS));
        }
        let prec = (digits as f64 * LOG2_10).ceil() as usize + GUARD_BITS;
        Ok(Ctx {
            prec,
            digits,
            rm: RoundingMode::ToEven,
            cc: Consts::new().expect("constants cache"),
            bern: Vec::new(),
            cl2_c: Vec::new(),
            li2_c: Vec::new(),
        })
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn bits(&self) -> usize {
        self.prec
    }

    // ---- constructors ----

    pub fn zero(&self) -> BigFloat {
        BigFloat::from_i64(0, self.prec)
    }

    pub fn int(&self, n: i64) -> BigFloat {
        BigFloat::from_i64(n, self.prec)
    }

    pub fn from_f64(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.prec)
    }

    pub fn from_bigint(&mut self, n: &BigInt) -> BigFloat {
        // Parsing an integer at >= its bit length is exact.
        let p = (n.bits() as usize + WORD_BIT_SIZE).max(self.prec);
        BigFloat::parse(&n.to_string(), Radix::Dec, p, self.rm, &mut self.cc)
    }

    pub fn from_rat(&mut self, x: &Rat) -> BigFloat {
        let n = self.from_bigint(x.numer());
        let d = self.from_bigint(x.denom());
        n.div(&d, self.prec, self.rm)
    }

    /// Parses a decimal literal at full context precision.
    pub fn parse_dec(&mut self, s: &str) -> BigFloat {
        BigFloat::parse(s, Radix::Dec, self.prec, self.rm, &mut self.cc)
    }

    pub fn pow10(&self, e: i64) -> BigFloat {
        let ten = self.int(10);
        self.powi(&ten, e)
    }

    // ---- real arithmetic ----

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.prec, self.rm)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.prec, self.rm)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.prec, self.rm)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.prec, self.rm)
    }

    pub fn powi(&self, a: &BigFloat, k: i64) -> BigFloat {
        if k == 0 {
            return self.int(1);
        }
        let p = a.powi(k.unsigned_abs() as usize, self.prec, self.rm);
        if k < 0 {
            p.reciprocal(self.prec, self.rm)
        } else {
            p
        }
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.prec, self.rm)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.prec, self.rm, &mut self.cc)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.prec, self.rm, &mut self.cc)
    }

    pub fn sin(&mut self, a: &BigFloat) -> BigFloat {
        a.sin(self.prec, self.rm, &mut self.cc)
    }

    pub fn cos(&mut self, a: &BigFloat) -> BigFloat {
        a.cos(self.prec, self.rm, &mut self.cc)
    }

    pub fn atan(&mut self, a: &BigFloat) -> BigFloat {
        a.atan(self.prec, self.rm, &mut self.cc)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.prec, self.rm)
    }

    /// Principal argument of (x, y), in (-pi, pi]. atan2(y, x).
    pub fn atan2(&mut self, y: &BigFloat, x: &BigFloat) -> BigFloat {
        if x.is_zero() {
            if y.is_zero() {
                return self.zero();
            }
            let mut h = self.pi();
            h = self.div(&h, &self.int(2));
            return if y.is_negative() { h.neg() } else { h };
        }
        let q = self.div(y, x);
        let base = self.atan(&q);
        if x.is_negative() {
            let pi = self.pi();
            if y.is_negative() {
                self.sub(&base, &pi)
            } else {
                self.add(&base, &pi)
            }
        } else {
            base
        }
    }

    /// Nearest integer (ties to even), as a BigFloat.
    pub fn round_int(&self, a: &BigFloat) -> BigFloat {
        a.round(0, RoundingMode::ToEven)
    }

    // ---- comparisons ----

    pub fn lt(&self, a: &BigFloat, b: &BigFloat) -> bool {
        matches!(a.cmp(b), Some(c) if c < 0)
    }

    pub fn le(&self, a: &BigFloat, b: &BigFloat) -> bool {
        matches!(a.cmp(b), Some(c) if c <= 0)
    }

    pub fn abs_diff(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        self.sub(a, b).abs()
    }

    /// |a - b| <= 10^tol_exp.
    pub fn close(&self, a: &BigFloat, b: &BigFloat, tol_exp: i64) -> bool {
        let d = self.abs_diff(a, b);
        let tol = self.pow10(tol_exp);
        self.le(&d, &tol)
    }

    /// Decimal rendering (scientific form) of a value.
    pub fn dec(&mut self, a: &BigFloat) -> String {
        a.format(Radix::Dec, self.rm, &mut self.cc)
            .unwrap_or_else(|_| "NaN".to_string())
    }

    // ---- Bernoulli numbers and cached series coefficients ----

    /// Ensures B_0..B_n are cached; returns B_k by value.
    pub fn bernoulli(&mut self, k: usize) -> Rat {
        use crate::rat::rat_i;
        while self.bern.len() <= k {
            let m = self.bern.len();
            if m == 0 {
                self.bern.push(rat_i(1));
                continue;
            }
            // B_m = -1/(m+1) * sum_{j<m} C(m+1, j) B_j
            let mut acc = Rat::zero();
            let mut binom = BigInt::from(1); // C(m+1, 0)
            for (j, bj) in self.bern.iter().enumerate() {
                acc += bj * Rat::from_integer(binom.clone());
                binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
            }
            self.bern.push(-acc / rat_i(m as i64 + 1));
        }
        self.bern[k].clone()
    }

    /// Coefficient of t^(2m+1) in the Clausen Cl_2 series (m >= 1):
    /// (-1)^(m+1) B_{2m} / (2m (2m+1) (2m)!), which is positive.
    pub fn cl2_coeff(&mut self, m: usize) -> BigFloat {
        while self.cl2_c.len() < m {
            let k = self.cl2_c.len() + 1;
            let b = self.bernoulli(2 * k);
            let mut fact = BigInt::from(1);
            for i in 2..=2 * k {
                fact *= BigInt::from(i);
            }
            let den = Rat::from_integer(fact * BigInt::from(2 * k) * BigInt::from(2 * k + 1));
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let c = b * Rat::from_integer(BigInt::from(sign)) / den;
            let v = self.from_rat(&c);
            self.cl2_c.push(v);
        }
        self.cl2_c[m - 1].clone()
    }

    /// Coefficient of u^(2m+1) in the dilogarithm series in u = -ln(1-w)
    /// (m >= 1): B_{2m} / (2m+1)!.
    pub fn li2_coeff(&mut self, m: usize) -> BigFloat {
        while self.li2_c.len() < m {
            let k = self.li2_c.len() + 1;
            let b = self.bernoulli(2 * k);
            let mut fact = BigInt::from(1);
            for i in 2..=2 * k + 1 {
                fact *= BigInt::from(i);
            }
            let c = b / Rat::from_integer(fact);
            let v = self.from_rat(&c);
            self.li2_c.push(v);
        }
        self.li2_c[m - 1].clone()
    }

    // ---- complex arithmetic ----

    pub fn c_zero(&self) -> CF {
        CF {
            re: self.zero(),
            im: self.zero(),
        }
    }

    pub fn c_int(&self, n: i64) -> CF {
        CF {
            re: self.int(n),
            im: self.zero(),
        }
    }

    pub fn c_real(&self, re: BigFloat) -> CF {
        CF {
            re,
            im: self.zero(),
        }
    }

    pub fn c_from_rat(&mut self, x: &Rat) -> CF {
        let re = self.from_rat(x);
        self.c_real(re)
    }

    pub fn c_add(&self, a: &CF, b: &CF) -> CF {
        CF {
            re: self.add(&a.re, &b.re),
            im: self.add(&a.im, &b.im),
        }
    }

    pub fn c_sub(&self, a: &CF, b: &CF) -> CF {
        CF {
            re: self.sub(&a.re, &b.re),
            im: self.sub(&a.im, &b.im),
        }
    }

    pub fn c_neg(&self, a: &CF) -> CF {
        CF {
            re: a.re.neg(),
            im: a.im.neg(),
        }
    }

    pub fn c_mul(&self, a: &CF, b: &CF) -> CF {
        let rr = self.mul(&a.re, &b.re);
        let ii = self.mul(&a.im, &b.im);
        let ri = self.mul(&a.re, &b.im);
        let ir = self.mul(&a.im, &b.re);
        CF {
            re: self.sub(&rr, &ii),
            im: self.add(&ri, &ir),
        }
    }

    pub fn c_scale(&self, a: &CF, s: &BigFloat) -> CF {
        CF {
            re: self.mul(&a.re, s),
            im: self.mul(&a.im, s),
        }
    }

    pub fn c_abs2(&self, a: &CF) -> BigFloat {
        let rr = self.mul(&a.re, &a.re);
        let ii = self.mul(&a.im, &a.im);
        self.add(&rr, &ii)
    }

    pub fn c_abs(&self, a: &CF) -> BigFloat {
        self.sqrt(&self.c_abs2(a))
    }

    /// a / b; caller guarantees b != 0.
    pub fn c_div(&self, a: &CF, b: &CF) -> CF {
        let d = self.c_abs2(b);
        let conj = CF {
            re: b.re.clone(),
            im: b.im.neg(),
        };
        let n = self.c_mul(a, &conj);
        CF {
            re: self.div(&n.re, &d),
            im: self.div(&n.im, &d),
        }
    }

    pub fn c_powi(&self, a: &CF, k: i64) -> CF {
        if k == 0 {
            return self.c_int(1);
        }
        let mut acc = self.c_int(1);
        let mut base = a.clone();
        let mut n = k.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.c_mul(&acc, &base);
            }
            base = self.c_mul(&base, &base);
            n >>= 1;
        }
        if k < 0 {
            let one = self.c_int(1);
            self.c_div(&one, &acc)
        } else {
            acc
        }
    }

    /// Principal square root.
    pub fn c_sqrt(&self, a: &CF) -> CF {
        if a.im.is_zero() {
            if a.re.is_negative() {
                return CF {
                    re: self.zero(),
                    im: self.sqrt(&a.re.abs()),
                };
            }
            return CF {
                re: self.sqrt(&a.re),
                im: self.zero(),
            };
        }
        let r = self.c_abs(a);
        let two = self.int(2);
        // Stable form: the larger of re', im' is computed by sqrt, the other
        // by division, avoiding cancellation.
        if !a.re.is_negative() {
            let t = self.add(&r, &a.re);
            let re = self.sqrt(&self.div(&t, &two));
            let im = self.div(&a.im, &self.mul(&two, &re));
            CF { re, im }
        } else {
            let t = self.sub(&r, &a.re);
            let s = self.sqrt(&self.div(&t, &two));
            let im = if a.im.is_negative() { s.neg() } else { s };
            let re = self.div(&a.im, &self.mul(&two, &im));
            CF { re, im }
        }
    }

    pub fn c_arg(&mut self, a: &CF) -> BigFloat {
        let im = a.im.clone();
        let re = a.re.clone();
        self.atan2(&im, &re)
    }

    /// Principal logarithm: ln|a| + i arg(a). Caller guarantees a != 0.
    pub fn c_ln(&mut self, a: &CF) -> CF {
        let m2 = self.c_abs2(a);
        let lm = self.ln(&m2);
        let re = self.div(&lm, &self.int(2));
        let im = self.c_arg(a);
        CF { re, im }
    }
}

/// Complex value at context precision.
#[derive(Clone, Debug)]
pub struct CF {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl CF {
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

/// Lossy conversion for reporting and f64-level cross-checks.
pub fn bf_to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let (words, _n, sign, e, _inexact) = match x.as_raw_parts() {
        Some(p) => p,
        None => return f64::NAN,
    };
    // Mantissa is a little-endian word array representing a fraction in
    // [1/2, 1); value = fraction * 2^e. Two words carry more than enough
    // bits for f64.
    let k = words.len();
    let mut frac = 0.0f64;
    if k >= 1 {
        frac += words[k - 1] as f64 / 2f64.powi(WORD_BIT_SIZE as i32);
    }
    if k >= 2 {
        frac += words[k - 2] as f64 / 2f64.powi(2 * WORD_BIT_SIZE as i32);
    }
    let v = frac * 2f64.powi(e);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Lossy rational-to-f64 conversion for reporting and residual checks.
pub fn rat_to_f64(x: &Rat) -> f64 {
    let num = x.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let den = x.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    num / den
}
