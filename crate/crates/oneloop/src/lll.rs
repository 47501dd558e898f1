//! Exact integer lattice reduction and Hermite normal form.
//!
//! The reducer is the all-integer LLL variant: Gram-Schmidt data is carried
//! as the integers d_k (Gram determinants) and lambda_{i,j} = d_j * mu_{i,j},
//! so no rational arithmetic appears and every division below is exact.
//! The quality parameter is fixed at delta = 99/100, close enough to 1 that
//! the first reduced vector of a relation embedding is reliably a shortest
//! candidate, while still guaranteeing termination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Dot product of two integer vectors.
fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let mut acc = BigInt::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Nearest integer to a/b for b > 0, ties rounded up.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let num: BigInt = (a * 2) + b;
    let den: BigInt = b * 2;
    num.div_floor(&den)
}

struct State {
    b: Vec<Vec<BigInt>>,
    /// dd[i] = det Gram(b[0..i]); dd[0] = 1. All positive for independent rows.
    dd: Vec<BigInt>,
    /// lam[i][j] for j < i: d_j-scaled Gram-Schmidt coefficients.
    lam: Vec<Vec<BigInt>>,
}

impl State {
    fn init(b: Vec<Vec<BigInt>>) -> State {
        let n = b.len();
        let mut dd = vec![BigInt::one(); n + 1];
        let mut lam: Vec<Vec<BigInt>> = (0..n).map(|i| vec![BigInt::zero(); i]).collect();
        for i in 0..n {
            for j in 0..=i {
                let mut u = dot(&b[i], &b[j]);
                for k in 0..j {
                    u = (&dd[k + 1] * &u - &lam[i][k] * &lam[j][k]) / &dd[k];
                }
                if j < i {
                    lam[i][j] = u;
                } else {
                    dd[i + 1] = u;
                }
            }
        }
        State { b, dd, lam }
    }

    /// Size-reduces b[k] against b[l] (l < k).
    fn reduce(&mut self, k: usize, l: usize) {
        let two_lam = (&self.lam[k][l]).abs() << 1;
        if two_lam <= self.dd[l + 1] {
            return;
        }
        let q = round_div(&self.lam[k][l], &self.dd[l + 1]);
        if q.is_zero() {
            return;
        }
        for t in 0..self.b[k].len() {
            let delta = &q * &self.b[l][t];
            self.b[k][t] -= delta;
        }
        for j in 0..l {
            let delta = &q * &self.lam[l][j];
            self.lam[k][j] -= delta;
        }
        let delta = &q * &self.dd[l + 1];
        self.lam[k][l] -= delta;
    }

    /// Swaps rows k and k-1 (k >= 1) and patches the integer GS data.
    fn swap(&mut self, k: usize) {
        self.b.swap(k, k - 1);
        for j in 0..k.saturating_sub(1) {
            let tmp = self.lam[k][j].clone();
            self.lam[k][j] = self.lam[k - 1][j].clone();
            self.lam[k - 1][j] = tmp;
        }
        let lam = self.lam[k][k - 1].clone();
        let bnew = (&self.dd[k - 1] * &self.dd[k + 1] + &lam * &lam) / &self.dd[k];
        for i in k + 1..self.b.len() {
            let t = self.lam[i][k].clone();
            self.lam[i][k] = (&self.dd[k + 1] * &self.lam[i][k - 1] - &lam * &t) / &self.dd[k];
            self.lam[i][k - 1] = (&bnew * &t + &lam * &self.lam[i][k]) / &self.dd[k + 1];
        }
        self.dd[k] = bnew;
    }
}

/// Reduces the given basis in place and returns it, rows ordered as LLL
/// leaves them (shortest candidates first). Rows must be linearly
/// independent; the vector length may exceed the number of rows.
pub fn lll_reduce(basis: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let n = basis.len();
    if n <= 1 {
        return basis;
    }
    let mut st = State::init(basis);
    let hundred = BigInt::from(100);
    let ninety_nine = BigInt::from(99);
    let mut k = 1usize;
    while k < n {
        st.reduce(k, k - 1);
        let lhs = &hundred * (&st.dd[k - 1] * &st.dd[k + 1] + &st.lam[k][k - 1] * &st.lam[k][k - 1]);
        let rhs = &ninety_nine * (&st.dd[k] * &st.dd[k]);
        if lhs < rhs {
            st.swap(k);
            k = k.max(2) - 1;
        } else {
            for l in (0..k.saturating_sub(1)).rev() {
                st.reduce(k, l);
            }
            k += 1;
        }
    }
    st.b
}

/// Row-style Hermite normal form of the lattice spanned by the given rows.
/// Rows may be dependent or zero. Pivots are positive, entries above each
/// pivot are reduced into [0, pivot), zero rows are dropped: the result is
/// the canonical basis of the row lattice, so two generating sets span the
/// same lattice iff their forms are equal.
pub fn hermite_normal_form(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut m: Vec<Vec<BigInt>> = rows.iter().filter(|r| !r.iter().all(|x| x.is_zero())).cloned().collect();
    if m.is_empty() {
        return vec![];
    }
    let width = m[0].len();
    let mut r = 0usize;
    for col in 0..width {
        // Euclid over the entries of this column at rows r.. until one remains.
        loop {
            let mut min_i: Option<usize> = None;
            for i in r..m.len() {
                if !m[i][col].is_zero() {
                    match min_i {
                        None => min_i = Some(i),
                        Some(j) => {
                            if m[i][col].abs() < m[j][col].abs() {
                                min_i = Some(i);
                            }
                        }
                    }
                }
            }
            let Some(p) = min_i else { break };
            m.swap(r, p);
            if m[r][col].is_negative() {
                for x in m[r].iter_mut() {
                    *x = -&*x;
                }
            }
            let mut any_left = false;
            for i in r + 1..m.len() {
                if m[i][col].is_zero() {
                    continue;
                }
                let q = m[i][col].div_floor(&m[r][col]);
                if !q.is_zero() {
                    for t in 0..width {
                        let delta = &q * &m[r][t];
                        m[i][t] -= delta;
                    }
                }
                if !m[i][col].is_zero() {
                    any_left = true;
                }
            }
            if !any_left {
                break;
            }
        }
        if r < m.len() && !m[r][col].is_zero() {
            // Reduce the entries above the new pivot into [0, pivot).
            for i in 0..r {
                let q = m[i][col].div_floor(&m[r][col]);
                if !q.is_zero() {
                    for t in 0..width {
                        let delta = &q * &m[r][t];
                        m[i][t] -= delta;
                    }
                }
            }
            r += 1;
        }
    }
    m.truncate(r);
    m
}
