//! First-order reduction machinery for one-loop parametric forms.
//!
//! Everything here happens at a fixed rational kinematic point, where the
//! quadric polynomial has an exact symmetric matrix C. Three layers:
//!
//! * decomposition of a homogeneous numerator P into sum_i A_i dXi/dalpha_i
//!   (always solvable for deg P >= 1 when C is invertible, since the partials
//!   2(C alpha)_i span all linear forms);
//! * the antisymmetric second-stage forms built from such an A, their exact
//!   exterior derivatives and face restrictions, which produce the
//!   first-order relation in a momentum parameter satisfied by the four-edge
//!   period and the face-by-face reduction of five- and six-edge forms to
//!   four-edge ones;
//! * exact coefficient extraction on the one-dimensional faces, where every
//!   restricted form is automatically a constant multiple of the canonical
//!   generator Omega_2 / Xi.
//!
//! Forms are stored by their numerator tables; a component table
//! {(i,j) -> N_ij} with i < j denotes sum N_ij / Xi^m dalpha-hat_{ij}, where
//! dalpha-hat_{ij} omits dalpha_i and dalpha_j from dalpha_1 ^ .. ^ dalpha_n.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{FeynmanGraph, GraphError, KinematicPoint};
use crate::poly::{
    linear_solve_ordered, KCoeff, KPoly, KSym, PolyError, QuadricForm, RatMat, Solution,
};
use crate::rat::{rat, Rat};
use crate::symanzik::{build_integrand, symanzik, SymError};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Error)]
pub enum GriffithsError {
    #[error("quadric matrix is singular ({0})")]
    SingularQuadric(String),
    #[error("numerator must be homogeneous in the alphas")]
    NotHomogeneous,
    #[error("degree-zero numerators are not in the Jacobian ideal")]
    ConstantNumerator,
    #[error("polynomial still carries kinematic symbols; specialize first")]
    NotSpecialized,
    #[error("no decomposition exists: {0}")]
    Inconsistent(String),
    #[error("reduction implemented for cycles with at most six edges, got {0}")]
    TooManyEdges(usize),
    #[error("graph already has four or fewer edges ({0}); nothing to reduce")]
    TooFewEdges(usize),
    #[error("the first-order relation is implemented for four-edge cycles, got {0} edges")]
    NotFourEdges(usize),
    #[error("scalar slice is missing a momentum for leg {0}")]
    MissingMomentum(u8),
    #[error("restriction is not a multiple of the face volume form: {0}")]
    NotProportional(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Num(#[from] crate::numeric::NumError),
}

/// Exponent vectors of total degree `deg` in `nvars` variables, in the
/// (deterministic) ascending lexicographic order of the vectors themselves.
fn monomials(nvars: usize, deg: u32) -> Vec<Vec<u16>> {
    fn rec(nvars: usize, deg: u32, acc: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if acc.len() + 1 == nvars {
            let mut e = acc.clone();
            e.push(deg as u16);
            out.push(e);
            return;
        }
        for d in 0..=deg {
            acc.push(d as u16);
            rec(nvars, deg - d, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        return out;
    }
    rec(nvars, deg, &mut Vec::new(), &mut out);
    out.sort();
    out
}

fn constant_coeff(c: &KCoeff) -> Result<Rat, GriffithsError> {
    c.as_rat().ok_or(GriffithsError::NotSpecialized)
}

fn mat_vec(m: &RatMat, v: &[Rat]) -> Vec<Rat> {
    m.rows
        .iter()
        .map(|row| {
            let mut acc = Rat::zero();
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            acc
        })
        .collect()
}

/// Deletes the listed rows and columns (0-based positions).
fn minor_drop(m: &RatMat, drop: &[usize]) -> RatMat {
    let keep: Vec<usize> = (0..m.nrows()).filter(|i| !drop.contains(i)).collect();
    RatMat {
        rows: keep
            .iter()
            .map(|&i| keep.iter().map(|&j| m.rows[i][j].clone()).collect())
            .collect(),
    }
}

/// The quadric matrix of a graph at a rational kinematic point.
pub fn quadric_matrix(g: &FeynmanGraph, p: &KinematicPoint) -> Result<RatMat, GriffithsError> {
    let pair = symanzik(g)?;
    Ok(QuadricForm::from_kpoly(&pair.xi)?.specialize(&p.resolver())?)
}

/// Writes a specialized homogeneous numerator as sum_i A_i dXi/dalpha_i with
/// dXi/dalpha_i = 2 (C alpha)_i, using the reduced-echelon solution in the
/// given unknown order with free coefficients pinned to zero. Different
/// orders give different (equally valid) A; everything extracted downstream
/// is insensitive to the choice.
pub fn jacobian_decompose_ordered(
    numerator: &KPoly,
    quadric: &RatMat,
    order: &[usize],
) -> Result<Vec<KPoly>, GriffithsError> {
    let n = quadric.nrows();
    if numerator.nvars != n {
        return Err(GriffithsError::Inconsistent(format!(
            "numerator has {} variables, quadric has {}",
            numerator.nvars, n
        )));
    }
    if numerator.is_zero() {
        return Ok(vec![KPoly::zero(n); n]);
    }
    let k = numerator.is_homogeneous().ok_or(GriffithsError::NotHomogeneous)?;
    if k == 0 {
        return Err(GriffithsError::ConstantNumerator);
    }
    if quadric.bareiss_det()?.is_zero() {
        return Err(GriffithsError::SingularQuadric("decomposition".into()));
    }
    let lower = monomials(n, k - 1);
    let upper = monomials(n, k);
    let col_of = |i: usize, mi: usize| i * lower.len() + mi;
    let row_of: BTreeMap<&Vec<u16>, usize> =
        upper.iter().enumerate().map(|(r, e)| (e, r)).collect();
    let mut rows = vec![vec![Rat::zero(); n * lower.len()]; upper.len()];
    let two = rat(2, 1);
    for i in 0..n {
        for (mi, mono) in lower.iter().enumerate() {
            for j in 0..n {
                let c = &quadric.rows[i][j] * &two;
                if c.is_zero() {
                    continue;
                }
                let mut e = mono.clone();
                e[j] += 1;
                let r = row_of[&e];
                rows[r][col_of(i, mi)] += c;
            }
        }
    }
    let mut rhs = vec![Rat::zero(); upper.len()];
    for (e, c) in &numerator.terms {
        let r = *row_of.get(e).ok_or(GriffithsError::NotHomogeneous)?;
        rhs[r] = constant_coeff(c)?;
    }
    let m = RatMat { rows };
    match linear_solve_ordered(&m, &rhs, order)? {
        Solution::Solved { particular, .. } => {
            let mut a = vec![KPoly::zero(n); n];
            for i in 0..n {
                for (mi, mono) in lower.iter().enumerate() {
                    let v = particular[col_of(i, mi)].clone();
                    if !v.is_zero() {
                        a[i].insert_term(mono.clone(), KCoeff::from_rat(v));
                    }
                }
            }
            Ok(a)
        }
        Solution::Inconsistent { .. } => Err(GriffithsError::Inconsistent(
            "numerator is outside the span at its degree".into(),
        )),
    }
}

pub fn jacobian_decompose(
    numerator: &KPoly,
    quadric: &RatMat,
) -> Result<Vec<KPoly>, GriffithsError> {
    let lower = monomials(quadric.nrows(), numerator.is_homogeneous().unwrap_or(1).max(1) - 1);
    let order: Vec<usize> = (0..quadric.nrows() * lower.len()).collect();
    jacobian_decompose_ordered(numerator, quadric, &order)
}

/// Closed-form decomposition A_i = (U grad P)_i / (2k) for homogeneous P of
/// degree k and U the inverse quadric matrix. Resubstituting uses only
/// U C = 1 and Euler's relation, so this is an independent route to the same
/// identity as the linear solve.
pub fn jacobian_decompose_euler(
    numerator: &KPoly,
    quadric_inverse: &RatMat,
) -> Result<Vec<KPoly>, GriffithsError> {
    let n = quadric_inverse.nrows();
    if numerator.is_zero() {
        return Ok(vec![KPoly::zero(n); n]);
    }
    let k = numerator.is_homogeneous().ok_or(GriffithsError::NotHomogeneous)?;
    if k == 0 {
        return Err(GriffithsError::ConstantNumerator);
    }
    let grads: Vec<KPoly> = (0..n).map(|j| numerator.dalpha(j)).collect();
    let scale = rat(1, 2 * k as i64);
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = KPoly::zero(n);
        for (j, gj) in grads.iter().enumerate() {
            acc = acc.add(&gj.scale_rat(&quadric_inverse.rows[i][j]))?;
        }
        a.push(acc.scale_rat(&scale));
    }
    Ok(a)
}

/// sum_i dA_i/dalpha_i.
pub fn divergence(a: &[KPoly]) -> Result<KPoly, GriffithsError> {
    let n = a.len();
    let mut acc = KPoly::zero(n);
    for (i, ai) in a.iter().enumerate() {
        acc = acc.add(&ai.dalpha(i))?;
    }
    Ok(acc)
}

/// sum_i A_i dXi/dalpha_i, the resubstitution of a decomposition.
pub fn resubstitute(a: &[KPoly], xi: &KPoly) -> Result<KPoly, GriffithsError> {
    let n = a.len();
    let mut acc = KPoly::zero(n);
    for (i, ai) in a.iter().enumerate() {
        acc = acc.add(&ai.mul(&xi.dalpha(i))?)?;
    }
    Ok(acc)
}

/// Antisymmetric (n-2)-form sum_{i<j} N_ij / Xi^pole dalpha-hat_{ij} with
/// N_ij = (-1)^(i+j) (alpha_i A_j - alpha_j A_i) built from a decomposition
/// vector A (signs use 0-based indices; the parity matches the 1-based
/// convention).
#[derive(Clone, Debug)]
pub struct EtaForm {
    pub n: usize,
    pub pole: u32,
    pub numerators: BTreeMap<(usize, usize), KPoly>,
}

fn pm(i: usize) -> Rat {
    if i % 2 == 0 {
        Rat::one()
    } else {
        -Rat::one()
    }
}

pub fn eta_form(a: &[KPoly], pole: u32) -> Result<EtaForm, GriffithsError> {
    let n = a.len();
    let mut numerators = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let alpha_i = KPoly::alpha(n, i);
            let alpha_j = KPoly::alpha(n, j);
            let raw = alpha_i.mul(&a[j])?.sub(&alpha_j.mul(&a[i])?)?;
            numerators.insert((i, j), raw.scale_rat(&pm(i + j)));
        }
    }
    Ok(EtaForm { n, pole, numerators })
}

impl EtaForm {
    pub fn neg(&self) -> EtaForm {
        EtaForm {
            n: self.n,
            pole: self.pole,
            numerators: self
                .numerators
                .iter()
                .map(|(k, v)| (*k, v.neg()))
                .collect(),
        }
    }

    /// Exterior derivative as an (n-1)-form table: returns P_k with
    /// d eta = sum_k P_k / Xi^(pole+1) dalpha-hat_k, computed term by term
    /// from the quotient rule and the wedge moves
    /// dalpha_i ^ dalpha-hat_{ij} = (-1)^i dalpha-hat_j,
    /// dalpha_j ^ dalpha-hat_{ij} = -(-1)^j dalpha-hat_i (0-based, i < j).
    pub fn d_scaled_components(&self, xi: &KPoly) -> Result<Vec<KPoly>, GriffithsError> {
        let n = self.n;
        let m = rat(self.pole as i64, 1);
        let mut out = vec![KPoly::zero(n); n];
        for (&(i, j), g) in &self.numerators {
            // d(G/Xi^m) ^ dalpha-hat_{ij}, scaled by Xi^(m+1):
            // (dG * Xi - m G dXi) in each free slot.
            let slot = |v: usize| -> Result<KPoly, GriffithsError> {
                Ok(g.dalpha(v)
                    .mul(xi)?
                    .sub(&g.mul(&xi.dalpha(v))?.scale_rat(&m))?)
            };
            out[j] = out[j].add(&slot(i)?.scale_rat(&pm(i)))?;
            out[i] = out[i].add(&slot(j)?.scale_rat(&-pm(j)))?;
        }
        Ok(out)
    }

    /// Restricts to the face alpha_k = 0 and factors the result through the
    /// face volume form: eta|_(alpha_k=0) = L * Omega' / Xi_k^pole, where
    /// Omega' = sum_p (-1)^p alpha'_p dalpha-hat'_p in the face coordinates.
    /// The multiplier L always equals (-1)^k A_k|_(alpha_k=0); this routine
    /// recomputes it from the component table and verifies the pattern.
    pub fn restrict_face(&self, k: usize) -> Result<KPoly, GriffithsError> {
        let n = self.n;
        let face: Vec<usize> = (0..n).filter(|&v| v != k).collect();
        let mut l: Option<KPoly> = None;
        for (pos, &j) in face.iter().enumerate() {
            let key = (k.min(j), k.max(j));
            let comp = self.numerators[&key]
                .restrict_zero(&[k])
                .project_out(&[k])?;
            // component must equal L * (-1)^pos alpha'_pos
            let cand = divide_by_var(&comp, pos)?.scale_rat(&pm(pos));
            match &l {
                None => l = Some(cand),
                Some(prev) => {
                    if *prev != cand {
                        return Err(GriffithsError::NotProportional(format!(
                            "face {} component {} disagrees",
                            k, j
                        )));
                    }
                }
            }
        }
        Ok(l.expect("faces are nonempty"))
    }
}

/// Exact division by alpha_pos; errors if some term lacks that variable.
fn divide_by_var(p: &KPoly, pos: usize) -> Result<KPoly, GriffithsError> {
    let mut out = KPoly::zero(p.nvars);
    for (e, c) in &p.terms {
        if e[pos] == 0 {
            return Err(GriffithsError::NotProportional(format!(
                "term misses alpha_{}",
                pos + 1
            )));
        }
        let mut e2 = e.clone();
        e2[pos] -= 1;
        out.insert_term(e2, c.clone());
    }
    Ok(out)
}

/// One-parameter family of collinear kinematics: leg i carries the scalar
/// momentum q_i, so every invariant is s[i,j] = q_i q_j, and derivatives in
/// a single scalar are exact rational operations. Masses are fixed.
#[derive(Clone, Debug)]
pub struct ScalarSlice {
    pub q: BTreeMap<u8, Rat>,
    pub msq: BTreeMap<String, Rat>,
}

impl ScalarSlice {
    pub fn new(q: &[(u8, Rat)], msq: &[(&str, Rat)]) -> ScalarSlice {
        ScalarSlice {
            q: q.iter().cloned().collect(),
            msq: msq.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    pub fn point(&self, g: &FeynmanGraph) -> Result<KinematicPoint, GriffithsError> {
        let legs = g.leg_ids();
        let mut s = BTreeMap::new();
        for (a, &i) in legs.iter().enumerate() {
            let qi = self.q.get(&i).ok_or(GriffithsError::MissingMomentum(i))?;
            for &j in &legs[a..] {
                let qj = self.q.get(&j).ok_or(GriffithsError::MissingMomentum(j))?;
                let key = if i <= j { (i, j) } else { (j, i) };
                s.insert(key, qi * qj);
            }
        }
        Ok(KinematicPoint::assemble(g, s, &self.msq)?)
    }

    pub fn shifted(&self, leg: u8, delta: &Rat) -> ScalarSlice {
        let mut out = self.clone();
        if let Some(v) = out.q.get_mut(&leg) {
            *v += delta;
        } else {
            out.q.insert(leg, delta.clone());
        }
        out
    }

    /// dXi/dq_leg at this slice point, as a specialized alpha-polynomial.
    /// Uses d(q_i q_j)/dq_leg resolved per symbol; valid because Symanzik
    /// coefficients are linear in the invariants (asserted).
    pub fn dxi_dq(&self, g: &FeynmanGraph, leg: u8) -> Result<KPoly, GriffithsError> {
        let pair = symanzik(g)?;
        for c in pair.xi.terms.values() {
            assert!(c.max_degree() <= 1, "quadric coefficients are linear in the invariants");
        }
        let d = pair.xi.specialize(&|sym| match sym {
            KSym::S(i, j) => {
                let qi = self.q.get(&i)?;
                let qj = self.q.get(&j)?;
                let mut v = Rat::zero();
                if i == leg {
                    v += qj;
                }
                if j == leg {
                    v += qi;
                }
                Some(v)
            }
            KSym::Msq(_) => Some(Rat::zero()),
        })?;
        Ok(d)
    }
}

/// The first-order relation in one scalar momentum satisfied by the
/// four-edge period: d/dq (Omega/Xi^2) + b * Omega/Xi^2 = d(beta), exactly,
/// with beta the antisymmetric 2-form built from the decomposition of
/// dXi/dq.
#[derive(Clone, Debug)]
pub struct PicardFuchsData {
    /// Decomposition of dXi/dq: sum_i a_i dXi/dalpha_i = dXi/dq.
    pub a: Vec<KPoly>,
    /// The relation coefficient: the divergence sum_i da_i/dalpha_i. This is
    /// the value for which b * h + dh/dq = 0 holds for h = 1/sqrt|det C|.
    pub b: Rat,
    /// Half the divergence: the bookkeeping that appears when the factor -2
    /// from differentiating 1/Xi^2 is absorbed into the decomposition
    /// instead. Differs from `b` by exactly 2; `normalization_report`
    /// records which one annihilates the period numerically.
    pub b_half: Rat,
    /// Numerator table of beta; component (i,j) sits on dalpha-hat_{ij}
    /// over Xi^2.
    pub beta: BTreeMap<(usize, usize), KPoly>,
}

pub fn picard_fuchs_b(
    g: &FeynmanGraph,
    slice: &ScalarSlice,
    leg: u8,
) -> Result<PicardFuchsData, GriffithsError> {
    g.validate_one_loop_cycle()?;
    let n = g.n_edges();
    if n != 4 {
        return Err(GriffithsError::NotFourEdges(n));
    }
    let p = slice.point(g)?;
    let c = quadric_matrix(g, &p)?;
    if c.bareiss_det()?.is_zero() {
        return Err(GriffithsError::SingularQuadric("four-edge quadric".into()));
    }
    let dxi = slice.dxi_dq(g, leg)?;
    if dxi.is_zero() {
        return Ok(PicardFuchsData {
            a: vec![KPoly::zero(n); n],
            b: Rat::zero(),
            b_half: Rat::zero(),
            beta: BTreeMap::new(),
        });
    }
    let a = jacobian_decompose(&dxi, &c)?;
    let div = divergence(&a)?;
    let b = div
        .terms
        .get(&vec![0u16; n])
        .map(|c| constant_coeff(c))
        .transpose()?
        .unwrap_or_else(Rat::zero);
    // a is linear, so the divergence is that constant and nothing else.
    assert!(div.alpha_degree() == 0, "divergence of a linear decomposition is constant");
    let beta = eta_form(&a, 2)?.neg();
    Ok(PicardFuchsData {
        a,
        b: b.clone(),
        b_half: b * rat(1, 2),
        beta: beta.numerators,
    })
}

/// Numerical cross-check of the relation coefficient, as report lines.
///
/// h = 1/sqrt|det C| satisfies dh/dq + b h = 0 exactly for the divergence
/// normalization; the half-divergence bookkeeping (absorbing the -2 from
/// differentiating 1/Xi^2) leaves a relative residual of |b|/2. Both are
/// evaluated by central differences at the requested precision and reported
/// side by side rather than silently reconciled.
pub fn normalization_report(
    g: &FeynmanGraph,
    slice: &ScalarSlice,
    leg: u8,
    digits: usize,
) -> Result<Vec<String>, GriffithsError> {
    use crate::numeric::bigfloat::{bf_to_f64, Ctx};
    let pf = picard_fuchs_b(g, slice, leg)?;
    let eps = rat(1, 100_000_000);
    let det_at = |s: &ScalarSlice| -> Result<Rat, GriffithsError> {
        let c = quadric_matrix(g, &s.point(g)?)?;
        let d = c.bareiss_det()?;
        if d.is_zero() {
            return Err(GriffithsError::SingularQuadric("report point".into()));
        }
        Ok(d)
    };
    let d0 = det_at(slice)?;
    let dp = det_at(&slice.shifted(leg, &eps))?;
    let dm = det_at(&slice.shifted(leg, &(-eps.clone())))?;
    let mut ctx = Ctx::new(digits)?;
    let h_of = |ctx: &mut Ctx, d: &Rat| {
        let a = ctx.from_rat(&d.abs());
        let s = ctx.sqrt(&a);
        let one = ctx.int(1);
        ctx.div(&one, &s)
    };
    let h0 = h_of(&mut ctx, &d0);
    let hp = h_of(&mut ctx, &dp);
    let hm = h_of(&mut ctx, &dm);
    let epsf = ctx.from_rat(&eps);
    let two_eps = ctx.add(&epsf, &epsf);
    let diff = ctx.sub(&hp, &hm);
    let dh = ctx.div(&diff, &two_eps);
    let resid_of = |ctx: &mut Ctx, b: &Rat| {
        let bf = ctx.from_rat(b);
        let num = ctx.mul(&bf, &h0);
        let num = ctx.add(&num, &dh);
        bf_to_f64(&ctx.div(&num, &h0)).abs()
    };
    let r_full = resid_of(&mut ctx, &pf.b);
    let r_half = resid_of(&mut ctx, &pf.b_half);
    Ok(vec![
        format!("relation coefficient (divergence): {}", crate::rat::rat_str(&pf.b)),
        format!("half-divergence alternative: {}", crate::rat::rat_str(&pf.b_half)),
        format!("relative residual of dh/dq + b h with b = divergence: {:.3e}", r_full),
        format!("relative residual with b = divergence/2: {:.3e}", r_half),
        "h = 1/sqrt|det C|; constant prefactors of h drop out of both residuals".to_string(),
    ])
}

/// Reduction of a one-loop cycle with 4..6 edges to four-edge quadrics:
/// exact coefficients keyed by the contracted edge set. For six edges the
/// reduction only exists where the obstruction constant vanishes; the
/// constant is reported and the coefficient table is left empty otherwise.
#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub coefficients: BTreeMap<BTreeSet<u8>, Rat>,
    /// (1/4) 1^T C^{-1} 1 for six-edge cycles, None below six. Vanishes
    /// exactly when the six external momenta fit in four dimensions.
    pub obstruction: Option<Rat>,
    /// Relative quadrature residual |I_G - sum a_I I_{G/I}| / |I_G| when a
    /// verification run was requested.
    pub residual: Option<f64>,
}

/// Orientation bookkeeping for facet embeddings. The boundary facet
/// alpha_k = 0 of the standard simplex, oriented so that its own volume
/// form is Omega', enters the Stokes sum with sign (-1)^k (0-based); the
/// facet multiplier of the second-stage form carries the same sign, so the
/// two cancel and the period coefficients come out plus. Verified against
/// direct quadrature in the tests.
fn pentagon_coefficients(
    g: &FeynmanGraph,
    p: &KinematicPoint,
) -> Result<BTreeMap<BTreeSet<u8>, Rat>, GriffithsError> {
    let pair = symanzik(g)?;
    let c = QuadricForm::from_kpoly(&pair.xi)?.specialize(&p.resolver())?;
    let det = c.bareiss_det()?;
    if det.is_zero() {
        return Err(GriffithsError::SingularQuadric("five-edge quadric".into()));
    }
    let u = c.inverse()?;
    let ones = vec![Rat::one(); 5];
    let uo = mat_vec(&u, &ones);
    // omega_G = d(eta/2) with A = U 1 / 2; the facet alpha_k = 0 carries
    // (-1)^k A_k/2 * Omega'/Xi_k^2 and the boundary orientation contributes
    // another (-1)^k.
    let mut out = BTreeMap::new();
    for (k, e) in g.edges.iter().enumerate() {
        let mut set = BTreeSet::new();
        set.insert(e.id);
        out.insert(set, &uo[k] * rat(1, 4));
    }
    Ok(out)
}

pub fn hexagon_obstruction(g: &FeynmanGraph, p: &KinematicPoint) -> Result<Rat, GriffithsError> {
    let c = quadric_matrix(g, p)?;
    if c.bareiss_det()?.is_zero() {
        return Err(GriffithsError::SingularQuadric("six-edge quadric".into()));
    }
    let n = c.nrows();
    let u = c.inverse()?;
    let ones = vec![Rat::one(); n];
    let uo = mat_vec(&u, &ones);
    let mut acc = Rat::zero();
    for x in &uo {
        acc += x;
    }
    Ok(acc * rat(1, 4))
}

pub fn reduce_to_boxes(
    g: &FeynmanGraph,
    p: &KinematicPoint,
) -> Result<ReductionResult, GriffithsError> {
    g.validate_one_loop_cycle()?;
    let n = g.n_edges();
    if n > 6 {
        return Err(GriffithsError::TooManyEdges(n));
    }
    if n < 4 {
        return Err(GriffithsError::TooFewEdges(n));
    }
    match n {
        4 => {
            let mut coefficients = BTreeMap::new();
            coefficients.insert(BTreeSet::new(), Rat::one());
            Ok(ReductionResult { coefficients, obstruction: None, residual: None })
        }
        5 => Ok(ReductionResult {
            coefficients: pentagon_coefficients(g, p)?,
            obstruction: None,
            residual: None,
        }),
        _ => {
            let obstruction = hexagon_obstruction(g, p)?;
            let mut coefficients = BTreeMap::new();
            if obstruction.is_zero() {
                // First stage: A = Psi U 1 / 2 decomposes Psi^2, the facet
                // alpha_k = 0 carries (U1)_k/6 times the five-edge form
                // (orientation folded as in the five-edge case), and the
                // five-edge stage is reused on each contraction.
                let c = quadric_matrix(g, p)?;
                let u = c.inverse()?;
                let ones = vec![Rat::one(); 6];
                let uo = mat_vec(&u, &ones);
                for (k, e) in g.edges.iter().enumerate() {
                    let ck = &uo[k] * rat(1, 6);
                    let mut ids = BTreeSet::new();
                    ids.insert(e.id);
                    let quotient = g.contract(&ids)?;
                    let inner = pentagon_coefficients(&quotient, p)?;
                    for (set, a) in inner {
                        let mut key = set.clone();
                        key.insert(e.id);
                        let entry = coefficients.entry(key).or_insert_with(Rat::zero);
                        *entry += &ck * &a;
                    }
                }
            }
            Ok(ReductionResult {
                coefficients,
                obstruction: Some(obstruction),
                residual: None,
            })
        }
    }
}

/// Quadrature check of a reduction: relative residual of
/// I_G = sum_I a_I I_{G/I} with adaptive integration on both sides.
pub fn verify_reduction(
    g: &FeynmanGraph,
    p: &KinematicPoint,
    red: &ReductionResult,
    budget: u64,
    rel_tol: f64,
) -> Result<f64, GriffithsError> {
    use crate::numeric::{parametric_quadrature, Method};
    let ig = build_integrand(g, 4)?;
    let total = parametric_quadrature(&ig, p, Method::Adaptive, budget, 0, rel_tol)?.value;
    let mut sum = 0.0;
    for (set, a) in &red.coefficients {
        let gq = if set.is_empty() { g.clone() } else { g.contract(set)? };
        let igq = build_integrand(&gq, 4)?;
        let v = parametric_quadrature(&igq, p, Method::Adaptive, budget, 0, rel_tol)?.value;
        let af: f64 = crate::numeric::bigfloat::rat_to_f64(a);
        sum += af * v;
    }
    Ok(((total - sum) / total).abs())
}

/// Coefficients a_{jk} of the one-dimensional faces at a four-edge quadric:
/// beta is restricted to the face alpha_j = 0, a primitive of the restricted
/// 2-form is taken there (constant decomposition on the face quadric), the
/// primitive is restricted to the edge {alpha_j = alpha_k = 0}, and the two
/// orders are antisymmetrized with the pair parity:
/// a_{jk} = (-1)^(j+k) (c_{jk} - c_{kj}). The edge inherits opposite
/// orientations from its two neighbouring faces, which is where the relative
/// minus lives; the symmetric part is exactly the piece that depends on the
/// choice of decomposition and primitive, and it drops out here. Every edge
/// restriction is forced by projective weight zero to be a constant multiple
/// of Omega_2 / Xi_{jk}; that constant is exact. Keys are edge-id pairs.
pub fn edge_coefficients(
    g: &FeynmanGraph,
    slice: &ScalarSlice,
    leg: u8,
) -> Result<BTreeMap<(u8, u8), Rat>, GriffithsError> {
    let pf = picard_fuchs_b(g, slice, leg)?;
    let p = slice.point(g)?;
    edge_coefficients_with(g, &p, &pf.a)
}

fn edge_coefficients_with(
    g: &FeynmanGraph,
    p: &KinematicPoint,
    a: &[KPoly],
) -> Result<BTreeMap<(u8, u8), Rat>, GriffithsError> {
    let c = quadric_matrix(g, p)?;
    let n = c.nrows();
    let beta = eta_form(a, 2)?.neg();
    // One-sided restriction: face j, primitive, then edge {j, k}.
    let one_sided = |j: usize, k: usize| -> Result<Rat, GriffithsError> {
        let l = beta.restrict_face(j)?;
        if l.is_zero() {
            return Ok(Rat::zero());
        }
        let cj = minor_drop(&c, &[j]);
        if cj.bareiss_det()?.is_zero() {
            return Err(GriffithsError::SingularQuadric(format!("face {}", j + 1)));
        }
        let uj = cj.inverse()?;
        // constant primitive decomposition: L = sum A'_i dXi_j/dalpha_i
        // with A' = U_j ell / 2, ell the coefficient vector of L.
        let mut ell = vec![Rat::zero(); n - 1];
        for (e, coeff) in &l.terms {
            let pos = e.iter().position(|&x| x == 1).expect("L is linear");
            ell[pos] = constant_coeff(coeff)?;
        }
        let aprime_vals = mat_vec(&uj, &ell);
        let aprime: Vec<KPoly> = aprime_vals
            .iter()
            .map(|v| KPoly::constant(n - 1, KCoeff::from_rat(&v.clone() * rat(1, 2))))
            .collect();
        let betaj = eta_form(&aprime, 1)?;
        // position of global k within the face coordinates of face j
        let kpos = (0..n).filter(|&v| v != j).position(|v| v == k).expect("k on face");
        let cons = betaj.restrict_face(kpos)?;
        let val = cons
            .terms
            .get(&vec![0u16; n - 2])
            .map(constant_coeff)
            .transpose()?
            .unwrap_or_else(Rat::zero);
        Ok(val)
    };
    let mut out = BTreeMap::new();
    for j in 0..n {
        for k in j + 1..n {
            let v = (one_sided(j, k)? - one_sided(k, j)?) * pm(j + k);
            out.insert((g.edges[j].id, g.edges[k].id), v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{box_graph, hexagon, pentagon, triangle};
    use crate::rat::{rat, rat_i};
    use num_traits::Signed;

    fn slice_a() -> ScalarSlice {
        ScalarSlice::new(
            &[(1, rat(-2, 1)), (2, rat(9, 2)), (3, rat(9, 4)), (4, rat(-1, 2))],
            &[("m1", rat_i(3)), ("m2", rat_i(9)), ("m3", rat(5, 2)), ("m4", rat_i(4))],
        )
    }

    fn slice_b() -> ScalarSlice {
        ScalarSlice::new(
            &[(1, rat_i(1)), (2, rat(1, 2)), (3, rat(-1, 4)), (4, rat_i(4))],
            &[("m1", rat(11, 3)), ("m2", rat_i(8)), ("m3", rat_i(11)), ("m4", rat(8, 3))],
        )
    }

    fn slice_c() -> ScalarSlice {
        ScalarSlice::new(
            &[(1, rat_i(-7)), (2, rat_i(-3)), (3, rat_i(1)), (4, rat_i(-7))],
            &[("m1", rat_i(7)), ("m2", rat_i(1)), ("m3", rat_i(2)), ("m4", rat(1, 4))],
        )
    }

    fn slice_d() -> ScalarSlice {
        ScalarSlice::new(
            &[(1, rat(-7, 4)), (2, rat_i(-1)), (3, rat_i(-6)), (4, rat_i(-6))],
            &[("m1", rat_i(1)), ("m2", rat_i(4)), ("m3", rat_i(1)), ("m4", rat_i(2))],
        )
    }

    fn slice_e() -> ScalarSlice {
        ScalarSlice::new(
            &[(1, rat(-3, 2)), (2, rat(9, 2)), (3, rat(7, 4)), (4, rat(7, 4))],
            &[("m1", rat(1, 3)), ("m2", rat(10, 3)), ("m3", rat(1, 2)), ("m4", rat(3, 4))],
        )
    }

    fn all_slices() -> Vec<ScalarSlice> {
        vec![slice_a(), slice_b(), slice_c(), slice_d(), slice_e()]
    }

    #[test]
    fn decompose_resubstitutes_exactly() {
        let g = box_graph();
        let slice = slice_a();
        let p = slice.point(&g).unwrap();
        let c = quadric_matrix(&g, &p).unwrap();
        let xi = symanzik(&g).unwrap().xi.specialize(&p.resolver()).unwrap();
        let u = c.inverse().unwrap();
        for numerator in [
            slice.dxi_dq(&g, 1).unwrap(),
            symanzik(&g).unwrap().psi.specialize(&p.resolver()).unwrap(),
            xi.mul(&KPoly::alpha(4, 2)).unwrap(), // degree 3
        ] {
            let a = jacobian_decompose(&numerator, &c).unwrap();
            assert_eq!(resubstitute(&a, &xi).unwrap(), numerator);
            let ae = jacobian_decompose_euler(&numerator, &u).unwrap();
            assert_eq!(resubstitute(&ae, &xi).unwrap(), numerator);
        }
    }

    #[test]
    fn decompose_rejects_bad_inputs() {
        let g = box_graph();
        let p = slice_a().point(&g).unwrap();
        let c = quadric_matrix(&g, &p).unwrap();
        let one = KPoly::one(4);
        assert!(matches!(
            jacobian_decompose(&one, &c),
            Err(GriffithsError::ConstantNumerator)
        ));
        let mixed = KPoly::alpha(4, 0).add(&KPoly::one(4)).unwrap();
        assert!(matches!(
            jacobian_decompose(&mixed, &c),
            Err(GriffithsError::NotHomogeneous)
        ));
        let singular = RatMat { rows: vec![vec![Rat::zero(); 4]; 4] };
        assert!(matches!(
            jacobian_decompose(&KPoly::alpha(4, 0), &singular),
            Err(GriffithsError::SingularQuadric(_))
        ));
    }

    #[test]
    fn decompose_is_linear_in_the_numerator() {
        let g = box_graph();
        let slice = slice_b();
        let p = slice.point(&g).unwrap();
        let c = quadric_matrix(&g, &p).unwrap();
        let n1 = slice.dxi_dq(&g, 1).unwrap();
        let n2 = slice.dxi_dq(&g, 3).unwrap();
        let combo = n1.scale_rat(&rat(3, 7)).add(&n2.scale_rat(&rat(-5, 2))).unwrap();
        let a1 = jacobian_decompose(&n1, &c).unwrap();
        let a2 = jacobian_decompose(&n2, &c).unwrap();
        let ac = jacobian_decompose(&combo, &c).unwrap();
        for i in 0..4 {
            let expect = a1[i].scale_rat(&rat(3, 7)).add(&a2[i].scale_rat(&rat(-5, 2))).unwrap();
            assert_eq!(ac[i], expect);
        }
    }

    #[test]
    fn gradient_numerator_picks_unit_vector() {
        // dXi/dalpha_1 must decompose as A = e_1: the constant solve is
        // square and uniquely determined.
        let g = box_graph();
        let p = slice_a().point(&g).unwrap();
        let c = quadric_matrix(&g, &p).unwrap();
        let xi = symanzik(&g).unwrap().xi.specialize(&p.resolver()).unwrap();
        let a = jacobian_decompose(&xi.dalpha(0), &c).unwrap();
        assert_eq!(a[0], KPoly::one(4));
        for ai in &a[1..] {
            assert!(ai.is_zero());
        }
    }

    #[test]
    fn pentagon_first_polynomial_decomposes_to_half_inverse_row_sums() {
        let g = pentagon();
        let p = pentagon_point(&g);
        let pair = symanzik(&g).unwrap();
        let c = QuadricForm::from_kpoly(&pair.xi).unwrap().specialize(&p.resolver()).unwrap();
        let psi = pair.psi.specialize(&p.resolver()).unwrap();
        let a = jacobian_decompose(&psi, &c).unwrap();
        let u = c.inverse().unwrap();
        let uo = mat_vec(&u, &vec![Rat::one(); 5]);
        for (i, ai) in a.iter().enumerate() {
            let expect = KPoly::constant(5, KCoeff::from_rat(&uo[i] * rat(1, 2)));
            assert_eq!(*ai, expect);
        }
    }

    #[test]
    fn box_momentum_derivative_matches_exact_finite_difference() {
        // The invariants are quadratic in each scalar momentum, so a central
        // difference with any rational step is exact.
        let g = box_graph();
        let slice = slice_b();
        let xi = symanzik(&g).unwrap().xi;
        for leg in 1..=4u8 {
            let d = slice.dxi_dq(&g, leg).unwrap();
            let up = xi
                .specialize(&slice.shifted(leg, &Rat::one()).point(&g).unwrap().resolver())
                .unwrap();
            let dn = xi
                .specialize(&slice.shifted(leg, &-Rat::one()).point(&g).unwrap().resolver())
                .unwrap();
            let fd = up.sub(&dn).unwrap().scale_rat(&rat(1, 2));
            assert_eq!(d, fd);
        }
        // Shape at leg 1: exactly the two monomials a1 a4 and a2 a4, with
        // coefficients 2 q1 and 2 (q1 + q2).
        let d1 = slice.dxi_dq(&g, 1).unwrap();
        assert_eq!(d1.terms.len(), 2);
        let q1 = rat_i(1);
        let q2 = rat(1, 2);
        assert_eq!(
            d1.terms.get(&vec![1, 0, 0, 1]).unwrap().as_rat().unwrap(),
            rat_i(2) * &q1
        );
        assert_eq!(
            d1.terms.get(&vec![0, 1, 0, 1]).unwrap().as_rat().unwrap(),
            rat_i(2) * (&q1 + &q2)
        );
    }

    #[test]
    fn exterior_derivative_identity_is_exact() {
        // d eta = (pole * N_A / Xi^(pole+1) - D / Xi^pole) Omega whenever
        // 2 pole = n + deg(A) - 1, checked as polynomial identities.
        let g = box_graph();
        let slice = slice_a();
        let p = slice.point(&g).unwrap();
        let c = quadric_matrix(&g, &p).unwrap();
        let xi = symanzik(&g).unwrap().xi.specialize(&p.resolver()).unwrap();
        let numerator = slice.dxi_dq(&g, 1).unwrap();
        let a = jacobian_decompose(&numerator, &c).unwrap();
        let eta = eta_form(&a, 2).unwrap();
        let comps = eta.d_scaled_components(&xi).unwrap();
        let div = divergence(&a).unwrap();
        let na = resubstitute(&a, &xi).unwrap();
        for (k, pk) in comps.iter().enumerate() {
            let alpha_k = KPoly::alpha(4, k);
            let expect = alpha_k
                .mul(&na)
                .unwrap()
                .scale_rat(&rat(2, 1))
                .sub(&alpha_k.mul(&div.mul(&xi).unwrap()).unwrap())
                .unwrap()
                .scale_rat(&pm(k));
            assert_eq!(*pk, expect);
        }
    }

    #[test]
    fn first_order_relation_is_an_exact_polynomial_identity() {
        // d/dq (Omega/Xi^2) + b Omega/Xi^2 = d beta, component by component
        // after clearing Xi^3: (-1)^k alpha_k (b Xi - 2 dXi/dq) = P_k(beta).
        let g = box_graph();
        for (slice, leg) in [(slice_a(), 1u8), (slice_b(), 2), (slice_c(), 4)] {
            let p = slice.point(&g).unwrap();
            let xi = symanzik(&g).unwrap().xi.specialize(&p.resolver()).unwrap();
            let pf = picard_fuchs_b(&g, &slice, leg).unwrap();
            let dxi = slice.dxi_dq(&g, leg).unwrap();
            let beta = EtaForm { n: 4, pole: 2, numerators: pf.beta.clone() };
            let comps = beta.d_scaled_components(&xi).unwrap();
            for (k, pk) in comps.iter().enumerate() {
                let alpha_k = KPoly::alpha(4, k);
                let expect = alpha_k
                    .mul(&xi.scale_rat(&pf.b).sub(&dxi.scale_rat(&rat(2, 1))).unwrap())
                    .unwrap()
                    .scale_rat(&pm(k));
                assert_eq!(*pk, expect);
            }
        }
    }

    #[test]
    fn relation_coefficient_annihilates_inverse_sqrt_det() {
        // b h + dh/dq = 0 for h = 1/sqrt|det C|: central finite differences
        // with rational step 1e-8, all arithmetic at 40 digits, so the only
        // error is the O(step^2) truncation. The half-sum convention fails
        // by exactly the factor two.
        use crate::numeric::bigfloat::{bf_to_f64, Ctx};
        let g = box_graph();
        let eps = rat(1, 100_000_000);
        let mut ctx = Ctx::new(40).unwrap();
        let h_at = |ctx: &mut Ctx, s: &ScalarSlice| {
            let c = quadric_matrix(&g, &s.point(&g).unwrap()).unwrap();
            let det = c.bareiss_det().unwrap();
            let af = ctx.from_rat(&det.abs());
            let sq = ctx.sqrt(&af);
            let one = ctx.int(1);
            ctx.div(&one, &sq)
        };
        for (idx, slice) in all_slices().into_iter().enumerate() {
            let leg = (idx % 4 + 1) as u8;
            let pf = picard_fuchs_b(&g, &slice, leg).unwrap();
            assert!(!pf.b.is_zero(), "slice {}: expected a nonzero coefficient", idx);
            let h0 = h_at(&mut ctx, &slice);
            let hp = h_at(&mut ctx, &slice.shifted(leg, &eps));
            let hm = h_at(&mut ctx, &slice.shifted(leg, &(-eps.clone())));
            let epsf = ctx.from_rat(&eps);
            let two_eps = ctx.add(&epsf, &epsf);
            let diff = ctx.sub(&hp, &hm);
            let dh = ctx.div(&diff, &two_eps);
            let bf = ctx.from_rat(&pf.b);
            let num = ctx.mul(&bf, &h0);
            let num = ctx.add(&num, &dh);
            let resid = bf_to_f64(&ctx.div(&num, &h0)).abs();
            assert!(resid < 1e-9, "slice {}: residual {}", idx, resid);
            let bh = ctx.from_rat(&pf.b_half);
            let numh = ctx.mul(&bh, &h0);
            let numh = ctx.add(&numh, &dh);
            let resid_half = bf_to_f64(&ctx.div(&numh, &h0)).abs();
            assert!(
                resid_half > resid * 1e3,
                "slice {}: half convention should not annihilate (resid {} vs {})",
                idx,
                resid_half,
                resid
            );
        }
    }

    #[test]
    fn normalization_report_reads_clean() {
        let g = box_graph();
        let lines = normalization_report(&g, &slice_a(), 1, 40).unwrap();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("relation coefficient"));
        let full: f64 = lines[2].rsplit(' ').next().unwrap().parse().unwrap();
        let half: f64 = lines[3].rsplit(' ').next().unwrap().parse().unwrap();
        assert!(full < 1e-9);
        assert!(half > 1e-5);
    }

    #[test]
    fn relation_vanishes_when_the_leg_is_absent() {
        let g = box_graph();
        let pf = picard_fuchs_b(&g, &slice_a(), 9).unwrap();
        assert!(pf.a.iter().all(|ai| ai.is_zero()));
        assert!(pf.b.is_zero());
        assert!(pf.beta.is_empty());
    }

    #[test]
    fn decomposition_choice_does_not_move_class_data() {
        // Re-solve with the unknown order reversed: A itself changes, the
        // divergence and the edge coefficients do not.
        let g = box_graph();
        let slice = slice_a();
        let p = slice.point(&g).unwrap();
        let c = quadric_matrix(&g, &p).unwrap();
        let numerator = slice.dxi_dq(&g, 1).unwrap();
        let a = jacobian_decompose(&numerator, &c).unwrap();
        let ncols = 4 * monomials(4, 1).len();
        let rev: Vec<usize> = (0..ncols).rev().collect();
        let a2 = jacobian_decompose_ordered(&numerator, &c, &rev).unwrap();
        assert_ne!(a, a2, "pivot order must actually matter for this check");
        let xi = symanzik(&g).unwrap().xi.specialize(&p.resolver()).unwrap();
        assert_eq!(resubstitute(&a2, &xi).unwrap(), numerator);
        assert_eq!(divergence(&a).unwrap(), divergence(&a2).unwrap());
        let e1 = edge_coefficients_with(&g, &p, &a).unwrap();
        let e2 = edge_coefficients_with(&g, &p, &a2).unwrap();
        assert_eq!(e1, e2);
        // The Euler closed form is a third route to the same class data.
        let u = c.inverse().unwrap();
        let ae = jacobian_decompose_euler(&numerator, &u).unwrap();
        assert_eq!(divergence(&ae).unwrap(), divergence(&a).unwrap());
        assert_eq!(edge_coefficients_with(&g, &p, &ae).unwrap(), e1);
    }

    #[test]
    fn face_restriction_matches_closed_form() {
        let g = box_graph();
        let slice = slice_c();
        let p = slice.point(&g).unwrap();
        let c = quadric_matrix(&g, &p).unwrap();
        let numerator = slice.dxi_dq(&g, 2).unwrap();
        let a = jacobian_decompose(&numerator, &c).unwrap();
        let eta = eta_form(&a, 2).unwrap();
        for k in 0..4 {
            let l = eta.restrict_face(k).unwrap();
            let expect = a[k]
                .restrict_zero(&[k])
                .project_out(&[k])
                .unwrap()
                .scale_rat(&pm(k));
            assert_eq!(l, expect);
        }
    }

    fn pentagon_point(g: &FeynmanGraph) -> KinematicPoint {
        // Conserving Euclidean point from rational 4-vectors: the fifth
        // momentum balances the other four, so every proper invariant is a
        // genuine square and all quadric coefficients stay positive.
        let vecs: [[Rat; 4]; 4] = [
            [rat_i(1), rat(1, 3), rat(0, 1), rat(0, 1)],
            [rat(0, 1), rat_i(1), rat(-1, 4), rat(0, 1)],
            [rat(1, 5), rat(0, 1), rat_i(1), rat(1, 2)],
            [rat(1, 2), rat(-1, 3), rat(1, 4), rat_i(1)],
        ];
        let q5: [Rat; 4] = std::array::from_fn(|k| {
            -(vecs[0][k].clone() + &vecs[1][k] + &vecs[2][k] + &vecs[3][k])
        });
        let mut all = vecs.to_vec();
        all.push(q5);
        let dot = |a: &[Rat], b: &[Rat]| -> Rat {
            a.iter().zip(b).map(|(x, y)| x * y).fold(Rat::zero(), |acc, t| acc + t)
        };
        let mut s = BTreeMap::new();
        for i in 0..5 {
            for j in i..5 {
                s.insert(((i + 1) as u8, (j + 1) as u8), dot(&all[i], &all[j]));
            }
        }
        let msq: BTreeMap<String, Rat> = (1..=5)
            .map(|i| (format!("m{}", i), rat(i as i64 + 4, 5)))
            .collect();
        KinematicPoint::assemble(g, s, &msq).unwrap()
    }

    #[test]
    fn box_reduction_is_the_identity() {
        let g = box_graph();
        let p = slice_a().point(&g).unwrap();
        let red = reduce_to_boxes(&g, &p).unwrap();
        assert_eq!(red.coefficients.len(), 1);
        assert_eq!(red.coefficients[&BTreeSet::new()], Rat::one());
        assert!(red.obstruction.is_none());
    }

    #[test]
    fn pentagon_reduction_matches_quadrature() {
        let g = pentagon();
        let p = pentagon_point(&g);
        let red = reduce_to_boxes(&g, &p).unwrap();
        assert_eq!(red.coefficients.len(), 5);
        for set in red.coefficients.keys() {
            assert_eq!(set.len(), 1);
        }
        let resid = verify_reduction(&g, &p, &red, 3_000_000, 1e-8).unwrap();
        assert!(resid < 1e-3, "relative residual {}", resid);
    }

    #[test]
    fn pentagon_facets_carry_the_contracted_form() {
        // omega_3 = eta/2 restricted to a facet is (U1)_k/4 times the
        // contracted quadric form: multiplier check against the contraction.
        let g = pentagon();
        let p = pentagon_point(&g);
        let pair = symanzik(&g).unwrap();
        let c = QuadricForm::from_kpoly(&pair.xi).unwrap().specialize(&p.resolver()).unwrap();
        let psi = pair.psi.specialize(&p.resolver()).unwrap();
        let a = jacobian_decompose(&psi, &c).unwrap();
        let eta = eta_form(&a, 2).unwrap();
        let u = c.inverse().unwrap();
        let uo = mat_vec(&u, &vec![Rat::one(); 5]);
        for k in 0..5 {
            let l = eta.restrict_face(k).unwrap();
            // constant multiplier (-1)^k (U1)_k / 2
            let expect = KPoly::constant(4, KCoeff::from_rat(&uo[k] * rat(1, 2))).scale_rat(&pm(k));
            assert_eq!(l, expect);
            // the restricted quadric is the quadric of the contraction
            let mut ids = BTreeSet::new();
            ids.insert(g.edges[k].id);
            let quotient = g.contract(&ids).unwrap();
            let xi_q = symanzik(&quotient).unwrap().xi.specialize(&p.resolver()).unwrap();
            let xi_r = pair
                .xi
                .specialize(&p.resolver())
                .unwrap()
                .restrict_zero(&[k])
                .project_out(&[k])
                .unwrap();
            assert_eq!(xi_q, xi_r);
        }
    }

    fn hexagon_realizable_point(g: &FeynmanGraph) -> KinematicPoint {
        // Six external momenta that genuinely live in four dimensions.
        let vecs: [[Rat; 4]; 5] = [
            [rat_i(1), rat(0, 1), rat(0, 1), rat(1, 3)],
            [rat(0, 1), rat_i(1), rat(1, 5), rat(0, 1)],
            [rat(-1, 2), rat(1, 4), rat_i(1), rat(0, 1)],
            [rat(1, 3), rat(0, 1), rat(1, 2), rat_i(1)],
            [rat(1, 7), rat(-1, 3), rat(0, 1), rat(1, 2)],
        ];
        let q6: [Rat; 4] = std::array::from_fn(|k| {
            -vecs.iter().fold(Rat::zero(), |acc, v| acc + &v[k])
        });
        let mut all = vecs.to_vec();
        all.push(q6);
        let dot = |a: &[Rat], b: &[Rat]| -> Rat {
            a.iter().zip(b).map(|(x, y)| x * y).fold(Rat::zero(), |acc, t| acc + t)
        };
        let mut s = BTreeMap::new();
        for i in 0..6 {
            for j in i..6 {
                s.insert(((i + 1) as u8, (j + 1) as u8), dot(&all[i], &all[j]));
            }
        }
        let msq: BTreeMap<String, Rat> = (1..=6)
            .map(|i| (format!("m{}", i), rat(2 * i as i64 + 3, 7)))
            .collect();
        KinematicPoint::assemble(g, s, &msq).unwrap()
    }

    fn hexagon_generic_point(g: &FeynmanGraph) -> KinematicPoint {
        let mut s = BTreeMap::new();
        let mut v = 2i64;
        for i in 1..=6u8 {
            for j in i..=6 {
                s.insert((i, j), rat(v % 11 - 5, 3));
                v += 7;
            }
        }
        let msq: BTreeMap<String, Rat> = (1..=6)
            .map(|i| (format!("m{}", i), rat(i as i64 + 1, 2)))
            .collect();
        KinematicPoint::assemble(g, s, &msq).unwrap()
    }

    #[test]
    fn hexagon_obstruction_vanishes_exactly_when_momenta_fit_in_four_dimensions() {
        let g = hexagon();
        let realizable = hexagon_realizable_point(&g);
        let obstruction = hexagon_obstruction(&g, &realizable).unwrap();
        assert!(obstruction.is_zero(), "got {}", obstruction);
        let generic = hexagon_generic_point(&g);
        let obstruction = hexagon_obstruction(&g, &generic).unwrap();
        assert!(!obstruction.is_zero());
        // reduce_to_boxes reports rather than invents coefficients there
        let red = reduce_to_boxes(&g, &generic).unwrap();
        assert!(red.coefficients.is_empty());
        assert_eq!(red.obstruction, Some(obstruction));
    }

    #[test]
    fn hexagon_reduction_exists_at_realizable_points() {
        let g = hexagon();
        let p = hexagon_realizable_point(&g);
        let red = reduce_to_boxes(&g, &p).unwrap();
        assert_eq!(red.obstruction, Some(Rat::zero()));
        assert_eq!(red.coefficients.len(), 15);
        for set in red.coefficients.keys() {
            assert_eq!(set.len(), 2);
        }
        // scale consistency: contracting in either order lands on the same
        // box, so each coefficient is the symmetrized two-step product;
        // spot-check one pair against the chain by hand.
        let c = quadric_matrix(&g, &p).unwrap();
        let u = c.inverse().unwrap();
        let uo = mat_vec(&u, &vec![Rat::one(); 6]);
        let mut ids = BTreeSet::new();
        ids.insert(1u8);
        let g1 = g.contract(&ids).unwrap();
        let inner1 = pentagon_coefficients(&g1, &p).unwrap();
        let mut ids2 = BTreeSet::new();
        ids2.insert(2u8);
        let g2 = g.contract(&ids2).unwrap();
        let inner2 = pentagon_coefficients(&g2, &p).unwrap();
        let key12: BTreeSet<u8> = [1u8, 2u8].into_iter().collect();
        let expect = &uo[0] * rat(1, 6) * &inner1[&{
            let mut s = BTreeSet::new();
            s.insert(2u8);
            s
        }] + &uo[1] * rat(1, 6) * &inner2[&{
            let mut s = BTreeSet::new();
            s.insert(1u8);
            s
        }];
        assert_eq!(red.coefficients[&key12], expect);
    }

    #[test]
    fn reduction_rejects_out_of_range_sizes() {
        let g = triangle([true, true, true]);
        let p = KinematicPoint::assemble(
            &g,
            (1..=3u8)
                .flat_map(|i| (i..=3).map(move |j| ((i, j), rat(1, (i + j) as i64))))
                .collect(),
            &(1..=3).map(|i| (format!("m{}", i), rat_i(1))).collect(),
        )
        .unwrap();
        assert!(matches!(
            reduce_to_boxes(&g, &p),
            Err(GriffithsError::TooFewEdges(3))
        ));
        let h = crate::graph::one_loop_cycle("heptagon", 7, &[true; 7]);
        let hp = KinematicPoint::assemble(
            &h,
            (1..=7u8)
                .flat_map(|i| (i..=7).map(move |j| ((i, j), rat(1, (i + j) as i64))))
                .collect(),
            &(1..=7).map(|i| (format!("m{}", i), rat_i(1))).collect(),
        )
        .unwrap();
        assert!(matches!(
            reduce_to_boxes(&h, &hp),
            Err(GriffithsError::TooManyEdges(7))
        ));
    }

    #[test]
    fn edge_coefficients_match_face_invariant_log_derivative() {
        // a_{jk} = sqrt|det D_jk| / (4 sqrt|det C|) * d/dq log f_jk with
        // f_jk = (sqrt(w) - U_jk)/(sqrt(w) + U_jk), w = U_jk^2 - U_jj U_kk,
        // D_jk the face quadric. All five points below keep every w > 0 so
        // each cross-ratio is real; the derivative side is computed by
        // central differences with rational step 1e-10, all arithmetic at
        // 40 digits, so only the O(step^2) truncation survives.
        use crate::numeric::bigfloat::{bf_to_f64, rat_to_f64, Ctx};
        let g = box_graph();
        let mut ctx = Ctx::new(40).unwrap();
        let eps = rat(1, 10_000_000_000i64);
        let log_abs_f = |ctx: &mut Ctx, s: &ScalarSlice, j: usize, k: usize| {
            let c = quadric_matrix(&g, &s.point(&g).unwrap()).unwrap();
            let u = c.inverse().unwrap();
            let w = &u.rows[j][k] * &u.rows[j][k] - &u.rows[j][j] * &u.rows[k][k];
            assert!(w > Rat::zero(), "pair ({},{}) has a complex invariant", j, k);
            let wf = ctx.from_rat(&w);
            let sw = ctx.sqrt(&wf);
            let ujk = ctx.from_rat(&u.rows[j][k]);
            let num = ctx.sub(&sw, &ujk);
            let den = ctx.add(&sw, &ujk);
            let f = ctx.div(&num, &den);
            let zero = ctx.zero();
            let fa = if ctx.lt(&f, &zero) { ctx.sub(&zero, &f) } else { f };
            ctx.ln(&fa)
        };
        for (idx, slice) in all_slices().into_iter().enumerate() {
            let leg = 1u8;
            let table = edge_coefficients(&g, &slice, leg).unwrap();
            let c = quadric_matrix(&g, &slice.point(&g).unwrap()).unwrap();
            let det_c = c.bareiss_det().unwrap();
            for j in 0..4 {
                for k in j + 1..4 {
                    let d_face = minor_drop(&c, &[j, k]);
                    let det_d = d_face.bareiss_det().unwrap();
                    let top_r = ctx.from_rat(&det_d.abs());
                    let bot_r = ctx.from_rat(&det_c.abs());
                    let top = ctx.sqrt(&top_r);
                    let bot = ctx.sqrt(&bot_r);
                    let pref = bf_to_f64(&ctx.div(&top, &bot)) / 4.0;
                    let lp = log_abs_f(&mut ctx, &slice.shifted(leg, &eps), j, k);
                    let lm = log_abs_f(&mut ctx, &slice.shifted(leg, &(-eps.clone())), j, k);
                    let epsf = ctx.from_rat(&eps);
                    let two_eps = ctx.add(&epsf, &epsf);
                    let diff = ctx.sub(&lp, &lm);
                    let dlog = bf_to_f64(&ctx.div(&diff, &two_eps));
                    let rhs = pref * dlog;
                    let lhs = rat_to_f64(&table[&(g.edges[j].id, g.edges[k].id)]);
                    let scale = lhs.abs().max(rhs.abs()).max(1e-30);
                    assert!(
                        (lhs - rhs).abs() / scale < 1e-9,
                        "point {} pair ({},{}): lhs {} rhs {}",
                        idx,
                        j,
                        k,
                        lhs,
                        rhs
                    );
                }
            }
        }
    }
}

