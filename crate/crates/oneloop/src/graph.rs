//! Feynman graphs, kinematic points, contraction, motic subgraphs, genericity.
//!
//! Graphs are multigraphs: vertices carry external legs, internal edges carry
//! an optional mass symbol. Edge ids index the Feynman parameter alpha_e and
//! the squared-mass symbol msq[e]; leg ids index the invariants s[i,j]. Both
//! survive contraction unchanged, so the restriction identity
//! Xi_{G/I} = Xi_G|_{alpha_I = 0} holds with literally equal symbols and the
//! two routes to a quotient polynomial can be compared structurally.
//!
//! Labeling of the built-in cycle graphs follows the source figures: for the
//! box (and the general n-gon) edge e_i joins the vertices carrying q_i and
//! q_{i+1}; for the triangle edge e_i is opposite the vertex carrying q_i.
//! These differ, and every downstream display depends on them, so they are
//! fixed here once.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use thiserror::Error;

use crate::poly::KSym;
use crate::rat::Rat;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown edge id e{0}")]
    UnknownEdge(u8),
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("contraction collapses a connected component to a point")]
    CollapseToPoint,
    #[error("not a one-loop cycle graph: {0}")]
    NotOneLoopCycle(String),
    #[error("missing kinematic assignment: {0}")]
    MissingAssignment(String),
    #[error("mass symbol {0} bound to conflicting values")]
    MassConflict(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: u8,
    pub v1: u32,
    pub v2: u32,
    /// Mass symbol name (e.g. "m1"); None encodes a literal zero mass.
    pub mass: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leg {
    pub id: u8,
    pub vertex: u32,
    pub momentum: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeynmanGraph {
    pub name: String,
    pub vertices: Vec<u32>,
    pub edges: Vec<Edge>,
    pub legs: Vec<Leg>,
}

/// Union-find over arbitrary vertex ids; representative is the class minimum.
struct Dsu {
    parent: BTreeMap<u32, u32>,
}

impl Dsu {
    fn new(vertices: &[u32]) -> Dsu {
        Dsu {
            parent: vertices.iter().map(|&v| (v, v)).collect(),
        }
    }

    fn find(&mut self, v: u32) -> u32 {
        let p = self.parent[&v];
        if p == v {
            return v;
        }
        let r = self.find(p);
        self.parent.insert(v, r);
        r
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        // keep the smaller id as representative for stable naming
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent.insert(hi, lo);
    }
}

impl FeynmanGraph {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_legs(&self) -> usize {
        self.legs.len()
    }

    pub fn edge(&self, id: u8) -> Result<&Edge, GraphError> {
        self.edges
            .iter()
            .find(|e| e.id == id)
            .ok_or(GraphError::UnknownEdge(id))
    }

    /// Position of edge id in the edge list = its alpha-variable index.
    pub fn edge_position(&self, id: u8) -> Result<usize, GraphError> {
        self.edges
            .iter()
            .position(|e| e.id == id)
            .ok_or(GraphError::UnknownEdge(id))
    }

    pub fn edge_ids(&self) -> Vec<u8> {
        self.edges.iter().map(|e| e.id).collect()
    }

    pub fn leg_ids(&self) -> Vec<u8> {
        self.legs.iter().map(|l| l.id).collect()
    }

    fn dsu_with_edges<'a, I>(&self, edges: I) -> Dsu
    where
        I: IntoIterator<Item = &'a Edge>,
    {
        let mut dsu = Dsu::new(&self.vertices);
        for e in edges {
            dsu.union(e.v1, e.v2);
        }
        dsu
    }

    pub fn components(&self) -> usize {
        let mut dsu = self.dsu_with_edges(&self.edges);
        let reps: BTreeSet<u32> = self.vertices.iter().map(|&v| dsu.find(v)).collect();
        reps.len()
    }

    pub fn is_connected(&self) -> bool {
        self.components() <= 1
    }

    /// Cycle rank h = E - V + components.
    pub fn loop_number(&self) -> usize {
        self.n_edges() + self.components() - self.vertices.len()
    }

    /// True when the given edge subset connects all vertices of the graph.
    pub fn spans_with_edges(&self, subset: &BTreeSet<u8>) -> bool {
        let mut dsu = self.dsu_with_edges(self.edges.iter().filter(|e| subset.contains(&e.id)));
        let reps: BTreeSet<u32> = self.vertices.iter().map(|&v| dsu.find(v)).collect();
        reps.len() <= 1
    }

    /// Vertex classes induced by an edge subset (keys are class representatives).
    pub fn classes_with_edges(&self, subset: &BTreeSet<u8>) -> BTreeMap<u32, Vec<u32>> {
        let mut dsu = self.dsu_with_edges(self.edges.iter().filter(|e| subset.contains(&e.id)));
        let mut classes: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &v in &self.vertices {
            classes.entry(dsu.find(v)).or_default().push(v);
        }
        classes
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let mut eids = BTreeSet::new();
        for e in &self.edges {
            if !eids.insert(e.id) {
                return Err(GraphError::DuplicateId(format!("e{}", e.id)));
            }
        }
        let mut lids = BTreeSet::new();
        for l in &self.legs {
            if !lids.insert(l.id) {
                return Err(GraphError::DuplicateId(format!("leg {}", l.id)));
            }
        }
        let vset: BTreeSet<u32> = self.vertices.iter().cloned().collect();
        if vset.len() != self.vertices.len() {
            return Err(GraphError::DuplicateId("vertex".into()));
        }
        for e in &self.edges {
            if !vset.contains(&e.v1) || !vset.contains(&e.v2) {
                return Err(GraphError::DuplicateId(format!(
                    "edge e{} references unknown vertex",
                    e.id
                )));
            }
        }
        for l in &self.legs {
            if !vset.contains(&l.vertex) {
                return Err(GraphError::DuplicateId(format!(
                    "leg {} references unknown vertex",
                    l.id
                )));
            }
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(())
    }

    /// A single cycle e_1..e_N with exactly one external leg per vertex.
    pub fn validate_one_loop_cycle(&self) -> Result<(), GraphError> {
        self.validate()?;
        let n = self.vertices.len();
        if self.n_edges() != n || self.n_legs() != n {
            return Err(GraphError::NotOneLoopCycle(format!(
                "needs N vertices, N edges, N legs; got V={} E={} F={}",
                n,
                self.n_edges(),
                self.n_legs()
            )));
        }
        if self.loop_number() != 1 {
            return Err(GraphError::NotOneLoopCycle(format!(
                "loop number {} != 1",
                self.loop_number()
            )));
        }
        let mut legs_at: BTreeMap<u32, usize> = BTreeMap::new();
        for l in &self.legs {
            *legs_at.entry(l.vertex).or_insert(0) += 1;
        }
        for &v in &self.vertices {
            if legs_at.get(&v).copied().unwrap_or(0) != 1 {
                return Err(GraphError::NotOneLoopCycle(format!(
                    "vertex {} must carry exactly one leg",
                    v
                )));
            }
        }
        // degree 2 everywhere and no self-loops
        let mut deg: BTreeMap<u32, usize> = BTreeMap::new();
        for e in &self.edges {
            if e.v1 == e.v2 {
                return Err(GraphError::NotOneLoopCycle(format!("e{} is a self-loop", e.id)));
            }
            *deg.entry(e.v1).or_insert(0) += 1;
            *deg.entry(e.v2).or_insert(0) += 1;
        }
        for &v in &self.vertices {
            if deg.get(&v).copied().unwrap_or(0) != 2 {
                return Err(GraphError::NotOneLoopCycle(format!(
                    "vertex {} has degree != 2",
                    v
                )));
            }
        }
        Ok(())
    }

    /// Quotient graph with the listed edges contracted. Remaining edge ids,
    /// masses, and leg ids are preserved; legs follow their vertex; merged
    /// vertex classes take the minimal member as their name, which makes
    /// contract(contract(g,A),B) structurally equal to contract(g, A ∪ B).
    pub fn contract(&self, ids: &BTreeSet<u8>) -> Result<FeynmanGraph, GraphError> {
        for &id in ids {
            self.edge(id)?;
        }
        let mut dsu = Dsu::new(&self.vertices);
        for e in self.edges.iter().filter(|e| ids.contains(&e.id)) {
            dsu.union(e.v1, e.v2);
        }
        // reject collapse: some component of G merged to a single class
        // while originally having more than one vertex and losing all its edges
        let mut full = self.dsu_with_edges(&self.edges);
        let mut comp_vertices: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &v in &self.vertices {
            comp_vertices.entry(full.find(v)).or_default().push(v);
        }
        for vs in comp_vertices.values() {
            if vs.len() < 2 {
                continue;
            }
            let reps: BTreeSet<u32> = vs.iter().map(|&v| dsu.find(v)).collect();
            if reps.len() == 1 {
                return Err(GraphError::CollapseToPoint);
            }
        }
        let vertices: Vec<u32> = {
            let reps: BTreeSet<u32> = self.vertices.iter().map(|&v| dsu.find(v)).collect();
            reps.into_iter().collect()
        };
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| !ids.contains(&e.id))
            .map(|e| Edge {
                id: e.id,
                v1: dsu.find(e.v1),
                v2: dsu.find(e.v2),
                mass: e.mass.clone(),
            })
            .collect();
        let legs: Vec<Leg> = self
            .legs
            .iter()
            .map(|l| Leg {
                id: l.id,
                vertex: dsu.find(l.vertex),
                momentum: l.momentum.clone(),
            })
            .collect();
        Ok(FeynmanGraph {
            name: format!("{}/{{{}}}", self.name, join_ids(ids)),
            vertices,
            edges,
            legs,
        })
    }

    pub fn delete(&self, ids: &BTreeSet<u8>) -> FeynmanGraph {
        FeynmanGraph {
            name: format!("{}-{{{}}}", self.name, join_ids(ids)),
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .filter(|e| !ids.contains(&e.id))
                .cloned()
                .collect(),
            legs: self.legs.clone(),
        }
    }

    /// Vertices carrying at least one external leg.
    pub fn external_vertices(&self) -> BTreeSet<u32> {
        self.legs.iter().map(|l| l.vertex).collect()
    }

    /// Loop number of the subgraph spanned by an edge subset
    /// (vertices = endpoints of the subset's edges).
    pub fn spanned_loop_number(&self, subset: &BTreeSet<u8>) -> usize {
        let edges: Vec<&Edge> = self.edges.iter().filter(|e| subset.contains(&e.id)).collect();
        let vs: BTreeSet<u32> = edges.iter().flat_map(|e| [e.v1, e.v2]).collect();
        if vs.is_empty() {
            return 0;
        }
        let mut dsu = Dsu::new(&vs.iter().cloned().collect::<Vec<_>>());
        for e in &edges {
            dsu.union(e.v1, e.v2);
        }
        let comps: BTreeSet<u32> = vs.iter().map(|&v| dsu.find(v)).collect();
        edges.len() + comps.len() - vs.len()
    }

    /// Mass-momentum-spanning: contains every massive edge; every external
    /// vertex lies in the spanned vertex set, within one connected component.
    /// The empty subset is never mass-momentum-spanning.
    pub fn is_mass_momentum_spanning(&self, subset: &BTreeSet<u8>) -> bool {
        if subset.is_empty() {
            return false;
        }
        for e in &self.edges {
            if e.mass.is_some() && !subset.contains(&e.id) {
                return false;
            }
        }
        let ext = self.external_vertices();
        let edges: Vec<&Edge> = self.edges.iter().filter(|e| subset.contains(&e.id)).collect();
        let vs: BTreeSet<u32> = edges.iter().flat_map(|e| [e.v1, e.v2]).collect();
        if !ext.iter().all(|v| vs.contains(v)) {
            return false;
        }
        if ext.is_empty() {
            return true;
        }
        let mut dsu = Dsu::new(&vs.iter().cloned().collect::<Vec<_>>());
        for e in &edges {
            dsu.union(e.v1, e.v2);
        }
        let reps: BTreeSet<u32> = ext.iter().map(|&v| dsu.find(v)).collect();
        reps.len() == 1
    }

    /// All proper non-empty edge subsets that are motic: mass-momentum-spanning
    /// and such that every proper mass-momentum-spanning subset has strictly
    /// smaller loop number.
    pub fn motic_subgraphs(&self) -> Vec<MoticSubgraph> {
        let ids = self.edge_ids();
        let n = ids.len();
        let mut out = Vec::new();
        for mask in 1u32..((1u32 << n) - 1) {
            let gamma: BTreeSet<u8> = ids
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &id)| id)
                .collect();
            if !self.is_mass_momentum_spanning(&gamma) {
                continue;
            }
            let h = self.spanned_loop_number(&gamma);
            let mut motic = true;
            for sub in 1u32..(1u32 << gamma.len()) {
                if sub == (1u32 << gamma.len()) - 1 {
                    continue;
                }
                let gp: BTreeSet<u8> = gamma
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| sub >> i & 1 == 1)
                    .map(|(_, &id)| id)
                    .collect();
                if self.is_mass_momentum_spanning(&gp) && self.spanned_loop_number(&gp) >= h {
                    motic = false;
                    break;
                }
            }
            if motic {
                out.push(MoticSubgraph {
                    edge_subset: gamma,
                    is_mass_momentum_spanning: true,
                    loop_number: h,
                });
            }
        }
        out
    }
}

fn join_ids(ids: &BTreeSet<u8>) -> String {
    ids.iter()
        .map(|i| format!("e{}", i))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoticSubgraph {
    pub edge_subset: BTreeSet<u8>,
    pub is_mass_momentum_spanning: bool,
    pub loop_number: usize,
}

/// Exact-rational kinematic point: invariants s[i,j] by leg-id pair (i <= j)
/// and squared masses by edge id. Momentum conservation is never imposed;
/// any invariant of a leg subset is expanded as s_I = sum over ordered pairs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KinematicPoint {
    pub s: BTreeMap<(u8, u8), Rat>,
    pub msq: BTreeMap<u8, Rat>,
}

impl KinematicPoint {
    /// Binds masses per symbol name and fills massless edges with zero.
    pub fn assemble(
        g: &FeynmanGraph,
        s: BTreeMap<(u8, u8), Rat>,
        mass_by_symbol: &BTreeMap<String, Rat>,
    ) -> Result<KinematicPoint, GraphError> {
        let mut msq = BTreeMap::new();
        for e in &g.edges {
            match &e.mass {
                None => {
                    msq.insert(e.id, Rat::zero());
                }
                Some(sym) => {
                    let v = mass_by_symbol
                        .get(sym)
                        .ok_or_else(|| GraphError::MissingAssignment(format!("{}^2", sym)))?;
                    msq.insert(e.id, v.clone());
                }
            }
        }
        Ok(KinematicPoint { s, msq })
    }

    pub fn resolver(&self) -> impl Fn(KSym) -> Option<Rat> + '_ {
        move |sym| match sym {
            KSym::S(i, j) => self.s.get(&(i, j)).cloned(),
            KSym::Msq(e) => self.msq.get(&e).cloned(),
        }
    }

    /// s_I = (sum of leg momenta over I)^2 expanded into stored invariants.
    pub fn s_subset(&self, legs: &BTreeSet<u8>) -> Option<Rat> {
        let v: Vec<u8> = legs.iter().cloned().collect();
        let mut acc = Rat::zero();
        for (a, &i) in v.iter().enumerate() {
            acc += self.s.get(&(i, i))?;
            for &j in &v[a + 1..] {
                let key = if i <= j { (i, j) } else { (j, i) };
                acc += self.s.get(&key)? + self.s.get(&key)?;
            }
        }
        Some(acc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericityReport {
    pub pass: bool,
    /// Violated constraints, rendered as "s[{i,..}] + sym^2 = 0".
    pub violations: Vec<String>,
    pub euclidean: bool,
    pub checks: usize,
}

/// Checks s_I + m_j^2 != 0 over all non-empty proper leg subsets I and all
/// mass choices j in {0, distinct mass symbols}; also reports Euclidean-sheet
/// membership (all s_I > 0, all bound masses > 0).
pub fn validate_generic(g: &FeynmanGraph, p: &KinematicPoint) -> Result<GenericityReport, GraphError> {
    let legs = g.leg_ids();
    let f = legs.len();
    // distinct mass symbols in edge order, with consistency check
    let mut mass_choices: Vec<(String, Rat)> = vec![("0".into(), Rat::zero())];
    let mut seen: BTreeMap<String, Rat> = BTreeMap::new();
    for e in &g.edges {
        if let Some(sym) = &e.mass {
            let v = p
                .msq
                .get(&e.id)
                .ok_or_else(|| GraphError::MissingAssignment(format!("{}^2", sym)))?;
            match seen.get(sym) {
                None => {
                    seen.insert(sym.clone(), v.clone());
                    mass_choices.push((sym.clone(), v.clone()));
                }
                Some(prev) if prev != v => {
                    return Err(GraphError::MassConflict(sym.clone()));
                }
                _ => {}
            }
        }
    }
    let mut violations = Vec::new();
    let mut euclidean = mass_choices.iter().skip(1).all(|(_, v)| v > &Rat::zero());
    let mut checks = 0usize;
    for mask in 1u32..((1u32 << f).saturating_sub(1)) {
        let subset: BTreeSet<u8> = legs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &id)| id)
            .collect();
        let s_i = p.s_subset(&subset).ok_or_else(|| {
            GraphError::MissingAssignment(format!("s over legs {{{}}}", join_legs(&subset)))
        })?;
        if s_i <= Rat::zero() {
            euclidean = false;
        }
        for (name, m2) in &mass_choices {
            checks += 1;
            if (&s_i + m2).is_zero() {
                violations.push(format!("s[{{{}}}] + {}^2 = 0", join_legs(&subset), name));
            }
        }
    }
    Ok(GenericityReport {
        pass: violations.is_empty(),
        violations,
        euclidean,
        checks,
    })
}

fn join_legs(ids: &BTreeSet<u8>) -> String {
    ids.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// One-loop cycle with n vertices: vertex i carries leg q_i, edge e_i joins
/// the q_i and q_{i+1} vertices (indices mod n). `massive[i]` gives edge
/// e_{i+1} the mass symbol m_{i+1}. This is the box-figure labeling.
pub fn one_loop_cycle(name: &str, n: usize, massive: &[bool]) -> FeynmanGraph {
    assert!(n >= 2 && massive.len() == n);
    let vertices: Vec<u32> = (1..=n as u32).collect();
    let edges = (0..n)
        .map(|i| Edge {
            id: (i + 1) as u8,
            v1: (i + 1) as u32,
            v2: ((i + 1) % n + 1) as u32,
            mass: massive[i].then(|| format!("m{}", i + 1)),
        })
        .collect();
    let legs = (0..n)
        .map(|i| Leg {
            id: (i + 1) as u8,
            vertex: (i + 1) as u32,
            momentum: format!("q{}", i + 1),
        })
        .collect();
    FeynmanGraph {
        name: name.into(),
        vertices,
        edges,
        legs,
    }
}

pub fn bubble() -> FeynmanGraph {
    one_loop_cycle("bubble", 2, &[true, true])
}

/// Triangle in the source-figure labeling: edge e_i sits opposite the vertex
/// carrying leg q_i, so the momentum part reads q1^2 a2 a3 + q2^2 a1 a3 + q3^2 a1 a2.
pub fn triangle(massive: [bool; 3]) -> FeynmanGraph {
    let vertices = vec![1, 2, 3];
    // v_i carries q_i; e1=(v2,v3), e2=(v3,v1), e3=(v1,v2)
    let ends = [(2u32, 3u32), (3, 1), (1, 2)];
    let edges = (0..3)
        .map(|i| Edge {
            id: (i + 1) as u8,
            v1: ends[i].0,
            v2: ends[i].1,
            mass: massive[i].then(|| format!("m{}", i + 1)),
        })
        .collect();
    let legs = (0..3u32)
        .map(|i| Leg {
            id: (i + 1) as u8,
            vertex: i + 1,
            momentum: format!("q{}", i + 1),
        })
        .collect();
    FeynmanGraph {
        name: "triangle".into(),
        vertices,
        edges,
        legs,
    }
}

pub fn box_graph() -> FeynmanGraph {
    one_loop_cycle("box", 4, &[true; 4])
}

pub fn pentagon() -> FeynmanGraph {
    one_loop_cycle("pentagon", 5, &[true; 5])
}

pub fn hexagon() -> FeynmanGraph {
    one_loop_cycle("hexagon", 6, &[true; 6])
}

/// Two-loop check graph: two vertices joined by three massive edges, one leg
/// on each vertex.
pub fn sunrise() -> FeynmanGraph {
    FeynmanGraph {
        name: "sunrise".into(),
        vertices: vec![1, 2],
        edges: (1..=3u8)
            .map(|i| Edge {
                id: i,
                v1: 1,
                v2: 2,
                mass: Some(format!("m{}", i)),
            })
            .collect(),
        legs: vec![
            Leg {
                id: 1,
                vertex: 1,
                momentum: "q1".into(),
            },
            Leg {
                id: 2,
                vertex: 2,
                momentum: "q2".into(),
            },
        ],
    }
}
