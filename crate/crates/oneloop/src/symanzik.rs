//! Graph polynomials: spanning-tree and 2-forest generating functions, the
//! assembled quadratic integrand, and quotient restrictions.
//!
//! Two independent routes compute the same polynomials. `psi_bruteforce` /
//! `phi_bruteforce` enumerate edge subsets directly from the definitions and
//! exist to referee the production path, which is a deletion-contraction
//! recursion with memoization. Tests insist the routes agree on every built-in
//! graph; neither is ever expressed in terms of the other.
//!
//! Side choice for 2-forests: a spanning 2-forest splits the external legs
//! into two sets I, I-complement, and the momentum factor is s_I = (sum of
//! leg momenta over I)^2 expanded into the s[i,j] basis. Momentum conservation
//! is never assumed, so s_I != s_{I^c} in general and the side matters. We
//! take the side with the smaller key (|I|, descending id list, lexicographic).
//! This reproduces the published displays: singleton sides for adjacent-edge
//! pairs of the box (q1^2 a1 a4), and {q2,q3} over {q1,q4} for the opposite
//! pair (q2+q3)^2 a1 a3.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::graph::{FeynmanGraph, GraphError};
use crate::poly::{KCoeff, KPoly, KSym, PolyError};
use crate::rat::rat_i;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SymError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("unsupported spacetime dimension {0} (need 2 or 4)")]
    UnsupportedDimension(u32),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// First Symanzik, momentum part, and assembled second Symanzik.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymanzikPair {
    pub psi: KPoly,
    pub phi: KPoly,
    pub xi: KPoly,
}

/// s_I for a leg id set, expanded into the stored invariant basis:
/// diagonal entries once, off-diagonal twice.
pub fn s_subset_symbol(legs: &BTreeSet<u8>) -> KCoeff {
    let v: Vec<u8> = legs.iter().cloned().collect();
    let mut acc = KCoeff::zero();
    for (a, &i) in v.iter().enumerate() {
        acc = acc.add(&KCoeff::var(KSym::s(i, i)));
        for &j in &v[a + 1..] {
            acc = acc.add(&KCoeff::var(KSym::s(i, j)).scale(&rat_i(2)));
        }
    }
    acc
}

/// Side-choice key: prefer fewer legs, then the descending-sorted id list.
fn side_key(legs: &BTreeSet<u8>) -> (usize, Vec<u8>) {
    let mut desc: Vec<u8> = legs.iter().cloned().collect();
    desc.reverse();
    (legs.len(), desc)
}

fn choose_side(a: &BTreeSet<u8>, b: &BTreeSet<u8>) -> BTreeSet<u8> {
    if side_key(a) <= side_key(b) {
        a.clone()
    } else {
        b.clone()
    }
}

// ---------------------------------------------------------------------------
// Brute-force oracles straight from the definitions.
// ---------------------------------------------------------------------------

fn subset_components(g: &FeynmanGraph, subset: &BTreeSet<u8>) -> BTreeMap<u32, BTreeSet<u32>> {
    // union-find over all graph vertices using only edges in `subset`
    let mut parent: BTreeMap<u32, u32> = g.vertices.iter().map(|&v| (v, v)).collect();
    fn find(parent: &mut BTreeMap<u32, u32>, v: u32) -> u32 {
        let p = parent[&v];
        if p == v {
            return v;
        }
        let r = find(parent, p);
        parent.insert(v, r);
        r
    }
    for e in g.edges.iter().filter(|e| subset.contains(&e.id)) {
        let (ra, rb) = (find(&mut parent, e.v1), find(&mut parent, e.v2));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent.insert(hi, lo);
        }
    }
    let mut classes: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for &v in &g.vertices {
        let r = find(&mut parent, v);
        classes.entry(r).or_default().insert(v);
    }
    classes
}

/// Spanning-tree generating function by direct enumeration: a subset T of
/// edges with |T| = V - 1 spanning one component is a tree; its complement's
/// alphas multiply.
pub fn psi_bruteforce(g: &FeynmanGraph) -> KPoly {
    let n = g.n_edges();
    let ids = g.edge_ids();
    let v = g.vertices.len();
    let mut psi = KPoly::zero(n);
    for mask in 0u32..(1u32 << n) {
        let subset: BTreeSet<u8> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &id)| id)
            .collect();
        if subset.len() != v - 1 {
            continue;
        }
        if subset_components(g, &subset).len() != 1 {
            continue;
        }
        let mut expo = vec![0u16; n];
        for (i, _) in ids.iter().enumerate().filter(|(_, id)| !subset.contains(id)) {
            expo[i] = 1;
        }
        psi.insert_term(expo, KCoeff::one());
    }
    psi
}

/// Spanning-2-forest generating function by direct enumeration, momentum
/// factor from the canonical side.
pub fn phi_bruteforce(g: &FeynmanGraph) -> KPoly {
    let n = g.n_edges();
    let ids = g.edge_ids();
    let v = g.vertices.len();
    let mut phi = KPoly::zero(n);
    if v < 2 {
        return phi;
    }
    for mask in 0u32..(1u32 << n) {
        let subset: BTreeSet<u8> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &id)| id)
            .collect();
        if subset.len() != v - 2 {
            continue;
        }
        let classes = subset_components(g, &subset);
        if classes.len() != 2 {
            continue;
        }
        let sides: Vec<BTreeSet<u8>> = classes
            .values()
            .map(|vs| {
                g.legs
                    .iter()
                    .filter(|l| vs.contains(&l.vertex))
                    .map(|l| l.id)
                    .collect()
            })
            .collect();
        let chosen = choose_side(&sides[0], &sides[1]);
        let coeff = s_subset_symbol(&chosen);
        if coeff.is_zero() {
            continue;
        }
        let mut expo = vec![0u16; n];
        for (i, _) in ids.iter().enumerate().filter(|(_, id)| !subset.contains(id)) {
            expo[i] = 1;
        }
        phi.insert_term(expo, coeff);
    }
    phi
}

// ---------------------------------------------------------------------------
// Deletion-contraction with memoization (production path).
// ---------------------------------------------------------------------------

/// Lightweight recursion state: vertex classes after contractions, surviving
/// edges as (alpha position, class endpoints), legs as (id, class).
#[derive(Clone)]
struct DcState {
    verts: BTreeSet<u32>,
    edges: Vec<(usize, u32, u32)>,
    legs: Vec<(u8, u32)>,
}

impl DcState {
    fn key(&self) -> String {
        let mut s = String::new();
        for v in &self.verts {
            s.push_str(&format!("v{}", v));
        }
        for (p, a, b) in &self.edges {
            s.push_str(&format!("e{}@{}-{}", p, a, b));
        }
        for (id, v) in &self.legs {
            s.push_str(&format!("l{}@{}", id, v));
        }
        s
    }

    fn drop_first_edge(&self) -> DcState {
        let mut st = self.clone();
        st.edges.remove(0);
        st
    }

    fn contract_first_edge(&self) -> DcState {
        let (_, a, b) = self.edges[0];
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let remap = |v: u32| if v == hi { lo } else { v };
        DcState {
            verts: self.verts.iter().map(|&v| remap(v)).collect(),
            edges: self.edges[1..]
                .iter()
                .map(|&(p, x, y)| (p, remap(x), remap(y)))
                .collect(),
            legs: self.legs.iter().map(|&(id, v)| (id, remap(v))).collect(),
        }
    }
}

fn psi_rec(st: &DcState, nvars: usize, memo: &mut HashMap<String, KPoly>) -> KPoly {
    if st.edges.is_empty() {
        return if st.verts.len() == 1 {
            KPoly::one(nvars)
        } else {
            KPoly::zero(nvars)
        };
    }
    let key = st.key();
    if let Some(p) = memo.get(&key) {
        return p.clone();
    }
    let (pos, a, b) = st.edges[0];
    let result = if a == b {
        // self-loop: no spanning tree contains it
        KPoly::alpha(nvars, pos)
            .mul(&psi_rec(&st.drop_first_edge(), nvars, memo))
            .expect("arity")
    } else {
        let with_e = psi_rec(&st.contract_first_edge(), nvars, memo);
        let without_e = KPoly::alpha(nvars, pos)
            .mul(&psi_rec(&st.drop_first_edge(), nvars, memo))
            .expect("arity");
        with_e.add(&without_e).expect("arity")
    };
    memo.insert(key, result.clone());
    result
}

fn phi_rec(st: &DcState, nvars: usize, memo: &mut HashMap<String, KPoly>) -> KPoly {
    if st.edges.is_empty() {
        if st.verts.len() != 2 {
            return KPoly::zero(nvars);
        }
        let vs: Vec<u32> = st.verts.iter().cloned().collect();
        let side_of = |v: u32| -> BTreeSet<u8> {
            st.legs
                .iter()
                .filter(|&&(_, lv)| lv == v)
                .map(|&(id, _)| id)
                .collect()
        };
        let chosen = choose_side(&side_of(vs[0]), &side_of(vs[1]));
        return KPoly::constant(nvars, s_subset_symbol(&chosen));
    }
    let key = st.key();
    if let Some(p) = memo.get(&key) {
        return p.clone();
    }
    let (pos, a, b) = st.edges[0];
    let result = if a == b {
        KPoly::alpha(nvars, pos)
            .mul(&phi_rec(&st.drop_first_edge(), nvars, memo))
            .expect("arity")
    } else {
        let with_e = phi_rec(&st.contract_first_edge(), nvars, memo);
        let without_e = KPoly::alpha(nvars, pos)
            .mul(&phi_rec(&st.drop_first_edge(), nvars, memo))
            .expect("arity");
        with_e.add(&without_e).expect("arity")
    };
    memo.insert(key, result.clone());
    result
}

/// Mass part: sum of msq[e] * alpha_e over massive edges.
pub fn mass_linear_form(g: &FeynmanGraph) -> KPoly {
    let n = g.n_edges();
    let mut p = KPoly::zero(n);
    for (pos, e) in g.edges.iter().enumerate() {
        if e.mass.is_some() {
            let mut expo = vec![0u16; n];
            expo[pos] = 1;
            p.insert_term(expo, KCoeff::var(KSym::Msq(e.id)));
        }
    }
    p
}

/// First and second Symanzik polynomials by deletion-contraction.
pub fn symanzik(g: &FeynmanGraph) -> Result<SymanzikPair, SymError> {
    if !g.is_connected() {
        return Err(SymError::Disconnected);
    }
    let n = g.n_edges();
    let st = DcState {
        verts: g.vertices.iter().cloned().collect(),
        edges: g
            .edges
            .iter()
            .enumerate()
            .map(|(pos, e)| (pos, e.v1, e.v2))
            .collect(),
        legs: g.legs.iter().map(|l| (l.id, l.vertex)).collect(),
    };
    let psi = psi_rec(&st, n, &mut HashMap::new());
    let phi = phi_rec(&st, n, &mut HashMap::new());
    let xi = phi.add(&mass_linear_form(g).mul(&psi)?)?;
    Ok(SymanzikPair { psi, phi, xi })
}

/// Quotient polynomial via restriction: sets the contracted alphas to zero and
/// compacts the arity. Must agree with symanzik(contract(g, ids)).xi.
pub fn xi_restrict(g: &FeynmanGraph, ids: &BTreeSet<u8>) -> Result<KPoly, SymError> {
    let pair = symanzik(g)?;
    restrict_compact(g, &pair.xi, ids)
}

/// Sets the alphas of `ids` to zero in any polynomial over g's edges, then
/// drops those variables.
pub fn restrict_compact(g: &FeynmanGraph, p: &KPoly, ids: &BTreeSet<u8>) -> Result<KPoly, SymError> {
    let mut positions = Vec::new();
    for &id in ids {
        positions.push(g.edge_position(id)?);
    }
    Ok(p.restrict_zero(&positions).project_out(&positions)?)
}

/// The standard (n-1)-form on projective alpha-space: term i is
/// sign * alpha_i * (d alpha_1 ^ .. omit i .. ^ d alpha_n), listed as
/// (0-based index, sign), with the sign convention that n = 2 reads
/// a2 da1 - a1 da2.
pub fn omega_terms(n: usize) -> Vec<(usize, i8)> {
    (0..n)
        .map(|i| (i, if (i + 1) % 2 == 0 { 1i8 } else { -1 }))
        .collect()
}

/// Parametric integrand of a one-loop cycle graph in d = 2 or 4:
/// psi^psi_power / xi^xi_power * Omega with signed psi_power
/// (negative means a denominator factor).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParametricIntegrand {
    pub graph: String,
    pub nvars: usize,
    pub d: u32,
    pub psi_power: i64,
    pub xi_power: i64,
    pub omega: Vec<(usize, i8)>,
    pub pair: SymanzikPair,
    /// Proper non-empty edge subsets failing the sector power count.
    pub divergent_sectors: Vec<BTreeSet<u8>>,
}

impl ParametricIntegrand {
    pub fn convergent(&self) -> bool {
        self.divergent_sectors.is_empty()
    }
}

/// Minimal vanishing order of p along alpha_gamma -> 0 (positions given).
fn min_order(p: &KPoly, positions: &BTreeSet<usize>) -> i64 {
    p.terms
        .keys()
        .map(|e| {
            positions
                .iter()
                .map(|&i| e[i] as i64)
                .sum::<i64>()
        })
        .min()
        .unwrap_or(0)
}

pub fn build_integrand(g: &FeynmanGraph, d: u32) -> Result<ParametricIntegrand, SymError> {
    if d != 2 && d != 4 {
        return Err(SymError::UnsupportedDimension(d));
    }
    // Quotients of cycles keep every leg, so vertices may carry several;
    // the power counting below only needs a connected one-loop graph.
    g.validate()?;
    if g.loop_number() != 1 {
        return Err(SymError::Graph(GraphError::NotOneLoopCycle(format!(
            "loop number {} != 1",
            g.loop_number()
        ))));
    }
    let pair = symanzik(g)?;
    let n = g.n_edges() as i64;
    let psi_power = n - d as i64; // h = 1: N - (h+1) d/2
    let xi_power = n - d as i64 / 2; // N - h d/2
    // sector power counting: scaling the gamma-alphas by t, the integrand
    // contributes t^(k + psi_power*w_psi - xi_power*w_xi) dt/t; divergent
    // when that exponent is <= 0.
    let ids = g.edge_ids();
    let mut divergent = Vec::new();
    for mask in 1u32..((1u32 << ids.len()) - 1) {
        let gamma: BTreeSet<u8> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &id)| id)
            .collect();
        let positions: BTreeSet<usize> = gamma
            .iter()
            .map(|&id| g.edge_position(id).expect("own id"))
            .collect();
        let k = gamma.len() as i64;
        let w_psi = min_order(&pair.psi, &positions);
        let w_xi = min_order(&pair.xi, &positions);
        if k + psi_power * w_psi - xi_power * w_xi <= 0 {
            divergent.push(gamma);
        }
    }
    Ok(ParametricIntegrand {
        graph: g.name.clone(),
        nvars: g.n_edges(),
        d,
        psi_power,
        xi_power,
        omega: omega_terms(g.n_edges()),
        pair,
        divergent_sectors: divergent,
    })
}
