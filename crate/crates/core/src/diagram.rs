//! Jacobi diagrams as half-edge graphs: leaves carry distinct positive
//! labels, trivalent vertices carry a cyclic order of their three half-edges,
//! and closed circles are tracked by a bare count.
//!
//! Canonical forms identify diagrams up to label-preserving isomorphism and
//! cyclic rotation, and track reversals of cyclic orders as a sign. A
//! diagram admitting an odd self-symmetry is zero.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::exactmath::Rat;
use num_traits::Zero;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("duplicate leaf label {0}")]
    DuplicateLabel(u32),
    #[error("half-edge {0} is not matched exactly once")]
    DanglingHalfEdge(u32),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("odd total vertex count (corrupted diagram)")]
    OddVertexCount,
    #[error("label {0} out of range 1..={1}")]
    LabelOutOfRange(u32, u32),
    #[error("leaf labels repeat or do not form the expected set")]
    BadLabelSet,
    #[error("diagram is not a tree")]
    NotATree,
    #[error("edge is not internal")]
    NotInternalEdge,
    #[error("need at least two labels for a linear tree")]
    TooFewLabels,
}

/// Which vertex a half-edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexRef {
    Leaf(usize),
    Tri(usize),
}

/// A unitrivalent graph with cyclic orders and labeled leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JacobiDiagram {
    /// (label, half_edge) per univalent vertex.
    leaves: Vec<(u32, u32)>,
    /// Cyclic triple of half-edges per trivalent vertex.
    trivalent: Vec<[u32; 3]>,
    /// Perfect matching on half-edges, stored as sorted (lo, hi) pairs.
    edges: Vec<(u32, u32)>,
    /// Closed circle components carrying no vertices.
    circles: u32,
}

impl JacobiDiagram {
    pub fn from_parts(
        leaves: Vec<(u32, u32)>,
        trivalent: Vec<[u32; 3]>,
        mut edges: Vec<(u32, u32)>,
        circles: u32,
    ) -> Result<Self, DiagramError> {
        let h = leaves.len() + 3 * trivalent.len();
        let mut seen_vertex = vec![false; h];
        let mut mark = |he: u32| -> Result<(), DiagramError> {
            let i = he as usize;
            if i >= h || seen_vertex[i] {
                return Err(DiagramError::DanglingHalfEdge(he));
            }
            seen_vertex[i] = true;
            Ok(())
        };
        for &(_, he) in &leaves {
            mark(he)?;
        }
        for t in &trivalent {
            for &he in t {
                mark(he)?;
            }
        }
        let mut seen_edge = vec![false; h];
        for e in &mut edges {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            for &he in &[e.0, e.1] {
                let i = he as usize;
                if i >= h || seen_edge[i] {
                    return Err(DiagramError::DanglingHalfEdge(he));
                }
                seen_edge[i] = true;
            }
            if e.0 == e.1 {
                return Err(DiagramError::DanglingHalfEdge(e.0));
            }
        }
        if let Some(i) = seen_edge.iter().position(|&b| !b) {
            return Err(DiagramError::DanglingHalfEdge(i as u32));
        }
        edges.sort_unstable();
        let mut labels: Vec<u32> = leaves.iter().map(|&(l, _)| l).collect();
        labels.sort_unstable();
        for w in labels.windows(2) {
            if w[0] == w[1] {
                return Err(DiagramError::DuplicateLabel(w[0]));
            }
        }
        if labels.first().is_some_and(|&l| l == 0) {
            return Err(DiagramError::SchemaError("labels are 1-based".into()));
        }
        Ok(JacobiDiagram {
            leaves,
            trivalent,
            edges,
            circles,
        })
    }

    /// A diagram with only circles.
    pub fn circles_only(circles: u32) -> Self {
        JacobiDiagram {
            leaves: Vec::new(),
            trivalent: Vec::new(),
            edges: Vec::new(),
            circles,
        }
    }

    pub fn leaves(&self) -> &[(u32, u32)] {
        &self.leaves
    }

    pub fn trivalent(&self) -> &[[u32; 3]] {
        &self.trivalent
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn circles(&self) -> u32 {
        self.circles
    }

    pub fn num_half_edges(&self) -> usize {
        self.leaves.len() + 3 * self.trivalent.len()
    }

    pub fn labels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.leaves.iter().map(|&(l, _)| l).collect();
        v.sort_unstable();
        v
    }

    /// Partner of each half-edge under the matching.
    pub fn partner_table(&self) -> Vec<u32> {
        let mut p = vec![u32::MAX; self.num_half_edges()];
        for &(a, b) in &self.edges {
            p[a as usize] = b;
            p[b as usize] = a;
        }
        p
    }

    /// Owning vertex of each half-edge.
    pub fn owner_table(&self) -> Vec<VertexRef> {
        let mut o = vec![VertexRef::Leaf(usize::MAX); self.num_half_edges()];
        for (i, &(_, he)) in self.leaves.iter().enumerate() {
            o[he as usize] = VertexRef::Leaf(i);
        }
        for (i, t) in self.trivalent.iter().enumerate() {
            for &he in t {
                o[he as usize] = VertexRef::Tri(i);
            }
        }
        o
    }

    /// Half the number of vertices; circles contribute nothing.
    pub fn degree(&self) -> Result<usize, DiagramError> {
        let v = self.leaves.len() + self.trivalent.len();
        if v % 2 != 0 {
            return Err(DiagramError::OddVertexCount);
        }
        Ok(v / 2)
    }

    /// Edges joining two trivalent vertices.
    pub fn internal_edges(&self) -> Vec<(u32, u32)> {
        let owner = self.owner_table();
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| {
                matches!(owner[a as usize], VertexRef::Tri(_))
                    && matches!(owner[b as usize], VertexRef::Tri(_))
            })
            .collect()
    }

    /// Connected components among vertices (circles excluded); each is the
    /// set of vertex references reachable through edges.
    pub fn components(&self) -> Vec<Vec<VertexRef>> {
        let nl = self.leaves.len();
        let nt = self.trivalent.len();
        let nv = nl + nt;
        let vid = |v: VertexRef| match v {
            VertexRef::Leaf(i) => i,
            VertexRef::Tri(i) => nl + i,
        };
        let owner = self.owner_table();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let ra = find(&mut parent, vid(owner[a as usize]));
            let rb = find(&mut parent, vid(owner[b as usize]));
            parent[ra] = rb;
        }
        let mut groups: BTreeMap<usize, Vec<VertexRef>> = BTreeMap::new();
        for i in 0..nv {
            let r = find(&mut parent, i);
            let v = if i < nl {
                VertexRef::Leaf(i)
            } else {
                VertexRef::Tri(i - nl)
            };
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    /// First Betti number: cycles per vertex component plus one per circle.
    pub fn first_betti(&self) -> usize {
        let comps = self.components();
        let owner = self.owner_table();
        let nl = self.leaves.len();
        let mut comp_of = vec![usize::MAX; nl + self.trivalent.len()];
        for (ci, comp) in comps.iter().enumerate() {
            for &v in comp {
                let id = match v {
                    VertexRef::Leaf(i) => i,
                    VertexRef::Tri(i) => nl + i,
                };
                comp_of[id] = ci;
            }
        }
        let mut edge_count = vec![0usize; comps.len()];
        for &(a, _) in &self.edges {
            let id = match owner[a as usize] {
                VertexRef::Leaf(i) => i,
                VertexRef::Tri(i) => nl + i,
            };
            edge_count[comp_of[id]] += 1;
        }
        let mut betti = self.circles as usize;
        for (ci, comp) in comps.iter().enumerate() {
            betti += edge_count[ci] + 1 - comp.len();
        }
        betti
    }

    pub fn is_forest(&self) -> bool {
        self.first_betti() == self.circles as usize && self.circles == 0
    }

    /// Applies a label permutation; `perm[old - 1] = new`.
    pub fn relabel(&self, perm: &[u32]) -> JacobiDiagram {
        let leaves = self
            .leaves
            .iter()
            .map(|&(l, he)| (perm[(l - 1) as usize], he))
            .collect();
        JacobiDiagram {
            leaves,
            trivalent: self.trivalent.clone(),
            edges: self.edges.clone(),
            circles: self.circles,
        }
    }

    /// Adds circles to a copy of the diagram.
    pub fn with_extra_circles(&self, extra: u32) -> JacobiDiagram {
        let mut d = self.clone();
        d.circles += extra;
        d
    }

    /// Drops all circles (used once a factor of 3 per circle is extracted).
    pub fn without_circles(&self) -> JacobiDiagram {
        let mut d = self.clone();
        d.circles = 0;
        d
    }
}

/// The strut with two labeled leaves.
pub fn strut(i: u32, j: u32) -> JacobiDiagram {
    JacobiDiagram::from_parts(vec![(i, 0), (j, 1)], vec![], vec![(0, 1)], 0)
        .expect("strut is well-formed")
}

/// The caterpillar tree on a label sequence. For n = 2 this is the strut.
/// For n >= 3, trivalent vertices t_1..t_{n-2} are chained, leaf i_1 hangs
/// on t_1, leaf i_{j+1} on t_j, leaf i_n on t_{n-2}; the cyclic order at t_j
/// is (edge toward the i_1 side, leaf edge, edge toward the i_n side).
pub fn linear_tree(labels: &[u32]) -> Result<JacobiDiagram, DiagramError> {
    let n = labels.len();
    if n < 2 {
        return Err(DiagramError::TooFewLabels);
    }
    {
        let mut sorted = labels.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(DiagramError::DuplicateLabel(w[0]));
            }
        }
    }
    if n == 2 {
        return Ok(strut(labels[0], labels[1]));
    }
    // Half-edge layout: leaves take 0..n (leaf k owns half-edge k), then
    // trivalent vertex t_j owns the consecutive triple starting at n + 3j.
    let nt = n - 2;
    let leaves: Vec<(u32, u32)> = labels
        .iter()
        .enumerate()
        .map(|(k, &l)| (l, k as u32))
        .collect();
    let mut trivalent = Vec::with_capacity(nt);
    let mut edges = Vec::new();
    let tri_he = |j: usize, slot: usize| (n + 3 * j + slot) as u32;
    for j in 0..nt {
        // Cyclic order (toward i_1, leaf, toward i_n).
        trivalent.push([tri_he(j, 0), tri_he(j, 1), tri_he(j, 2)]);
    }
    // t_1's first position holds leaf i_1 directly.
    edges.push((0, tri_he(0, 0)));
    for j in 0..nt {
        // Middle leaf: i_{j+2} in 1-based label order = index j + 1.
        edges.push(((j + 1) as u32, tri_he(j, 1)));
        if j + 1 < nt {
            edges.push((tri_he(j, 2), tri_he(j + 1, 0)));
        }
    }
    edges.push(((n - 1) as u32, tri_he(nt - 1, 2)));
    JacobiDiagram::from_parts(leaves, trivalent, edges, 0)
}

/// The (n-2)! linear trees (1, sigma, n), sigma over permutations of
/// 2..n-1 in lexicographic order.
pub fn linear_tree_basis(n: u32) -> Vec<JacobiDiagram> {
    assert!(n >= 2);
    use itertools::Itertools;
    let middle: Vec<u32> = (2..n).collect();
    let k = middle.len();
    let mut out = Vec::new();
    for perm in middle.into_iter().permutations(k) {
        let mut labels = Vec::with_capacity(n as usize);
        labels.push(1);
        labels.extend(perm);
        labels.push(n);
        // For n = 2 the sequence is (1, 2); the loop above runs once with an
        // empty permutation.
        if n == 2 {
            labels = vec![1, 2];
        }
        out.push(linear_tree(&labels).expect("distinct labels"));
    }
    out
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

/// Canonical form of a diagram: either zero (odd self-symmetry), or a
/// canonical representative with a sign relating it to the input.
#[derive(Clone, Debug, PartialEq)]
pub enum Canonical {
    Zero,
    NonZero {
        diagram: JacobiDiagram,
        key: CanonKey,
        sign: i8,
    },
}

/// Byte-string key identifying a canonical diagram.
pub type CanonKey = Vec<u8>;

impl Canonical {
    pub fn sign(&self) -> i8 {
        match self {
            Canonical::Zero => 0,
            Canonical::NonZero { sign, .. } => *sign,
        }
    }
}

const TOK_LEAF: u8 = 1;
const TOK_TRI: u8 = 2;
const TOK_BACK: u8 = 3;
const TOK_ROOT: u8 = 4;

/// Output of one deterministic component walk: the token stream, the parity
/// of child swaps actually performed, and the rebuilt component parts
/// (leaves, trivalent triples, edges) with fresh half-edge ids starting at
/// the given offset.
struct WalkResult {
    stream: Vec<u8>,
    parity: bool,
    leaves: Vec<(u32, u32)>,
    trivalent: Vec<[u32; 3]>,
    edges: Vec<(u32, u32)>,
    next_he: u32,
}

/// Walks one component depth-first from a root leaf. `choices[t]` swaps the
/// two child half-edges at trivalent vertex `t` (an AS reversal, sign -1).
/// The walk depends only on labels, cyclic orders and connectivity, never on
/// half-edge ids, so isomorphic presentations produce identical streams.
fn component_walk(
    d: &JacobiDiagram,
    partner: &[u32],
    owner: &[VertexRef],
    root_leaf: usize,
    choices: &[bool],
    he_offset: u32,
) -> WalkResult {
    let mut res = WalkResult {
        stream: vec![TOK_ROOT, d.leaves[root_leaf].0 as u8],
        parity: false,
        leaves: Vec::new(),
        trivalent: Vec::new(),
        edges: Vec::new(),
        next_he: he_offset,
    };
    let mut he_map: BTreeMap<u32, u32> = BTreeMap::new();
    macro_rules! alloc {
        ($old:expr) => {{
            let old = $old;
            match he_map.get(&old) {
                Some(&id) => id,
                None => {
                    let id = res.next_he;
                    res.next_he += 1;
                    he_map.insert(old, id);
                    id
                }
            }
        }};
    }
    let root_he = d.leaves[root_leaf].1;
    let root_id = alloc!(root_he);
    res.leaves.push((d.leaves[root_leaf].0, root_id));

    // Effective triple at first visit: (entry, first child, second child).
    let mut eff: Vec<Option<([u32; 3], u32)>> = vec![None; d.trivalent.len()]; // (triple, visit idx)
    let mut next_visit: u32 = 0;
    let mut emitted_edges: std::collections::BTreeSet<(u32, u32)> = Default::default();
    let mut stack = vec![root_he];
    while let Some(h) = stack.pop() {
        let p = partner[h as usize];
        let eh = h.min(p);
        let ep = h.max(p);
        if emitted_edges.insert((eh, ep)) {
            let a = alloc!(h);
            let b = alloc!(p);
            res.edges.push((a.min(b), a.max(b)));
        }
        match owner[p as usize] {
            VertexRef::Leaf(i) => {
                res.stream.push(TOK_LEAF);
                res.stream.push(d.leaves[i].0 as u8);
                res.leaves.push((d.leaves[i].0, alloc!(p)));
            }
            VertexRef::Tri(t) => {
                if let Some((triple, vidx)) = eff[t] {
                    // Back edge: record which position of the effective
                    // triple we entered through.
                    let rel = triple.iter().position(|&x| x == p).unwrap();
                    res.stream.push(TOK_BACK);
                    res.stream.push(vidx as u8);
                    res.stream.push(rel as u8);
                } else {
                    let triple = d.trivalent[t];
                    let pos = triple.iter().position(|&x| x == p).unwrap();
                    let (a, b) = if choices[t] {
                        res.parity = !res.parity;
                        (triple[(pos + 2) % 3], triple[(pos + 1) % 3])
                    } else {
                        (triple[(pos + 1) % 3], triple[(pos + 2) % 3])
                    };
                    eff[t] = Some(([p, a, b], next_visit));
                    next_visit += 1;
                    res.stream.push(TOK_TRI);
                    let np = alloc!(p);
                    let na = alloc!(a);
                    let nb = alloc!(b);
                    res.trivalent.push([np, na, nb]);
                    // Walk `a` first.
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
    }
    res
}

impl JacobiDiagram {
    /// Canonical form with AS sign. Per component, searches all child-order
    /// reversals for the lexicographically smallest walk stream; reversals
    /// carry a sign of -1 each. If the minimal stream is reached with both
    /// parities the diagram has an odd self-symmetry and is zero.
    pub fn canonical(&self) -> Canonical {
        let partner = self.partner_table();
        let owner = self.owner_table();
        let comps = self.components();
        let mut comp_info: Vec<(u32, usize, Vec<usize>)> = Vec::new(); // (min label, root leaf, tri ids)
        for comp in &comps {
            let mut min_leaf: Option<(u32, usize)> = None;
            let mut tris = Vec::new();
            for &v in comp {
                match v {
                    VertexRef::Leaf(i) => {
                        let l = self.leaves[i].0;
                        if min_leaf.is_none_or(|(ml, _)| l < ml) {
                            min_leaf = Some((l, i));
                        }
                    }
                    VertexRef::Tri(t) => tris.push(t),
                }
            }
            let (l, i) = min_leaf.expect("every vertex component has a leaf");
            comp_info.push((l, i, tris));
        }
        comp_info.sort();

        let mut total_sign = 1i8;
        let mut full_key: Vec<u8> = Vec::new();
        let mut leaves: Vec<(u32, u32)> = Vec::new();
        let mut trivalent: Vec<[u32; 3]> = Vec::new();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        let mut he_offset = 0u32;
        let mut choices = vec![false; self.trivalent.len()];
        for (_, root_leaf, tris) in &comp_info {
            let mut best: Option<WalkResult> = None;
            let mut parities = [false, false];
            for mask in 0u64..(1u64 << tris.len()) {
                for (bit, &t) in tris.iter().enumerate() {
                    choices[t] = mask & (1 << bit) != 0;
                }
                let walk = component_walk(self, &partner, &owner, *root_leaf, &choices, he_offset);
                match &best {
                    Some(b) if walk.stream > b.stream => {}
                    Some(b) if walk.stream == b.stream => {
                        parities[walk.parity as usize] = true;
                    }
                    _ => {
                        parities = [false, false];
                        parities[walk.parity as usize] = true;
                        best = Some(walk);
                    }
                }
            }
            for &t in tris {
                choices[t] = false;
            }
            if parities[0] && parities[1] {
                return Canonical::Zero;
            }
            let best = best.expect("component walk produced a stream");
            if parities[1] {
                total_sign = -total_sign;
            }
            full_key.extend_from_slice(&best.stream);
            leaves.extend(best.leaves);
            trivalent.extend(best.trivalent);
            edges.extend(best.edges);
            he_offset = best.next_he;
        }
        full_key.push(0);
        full_key.push(self.circles as u8);
        let diagram = JacobiDiagram::from_parts(leaves, trivalent, edges, self.circles)
            .expect("canonical rebuild is well-formed");
        Canonical::NonZero {
            diagram,
            key: full_key,
            sign: total_sign,
        }
    }
}

// ---------------------------------------------------------------------------
// Formal combinations
// ---------------------------------------------------------------------------

/// A formal rational combination of canonical diagrams.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiagramCombination {
    terms: BTreeMap<CanonKey, (JacobiDiagram, Rat)>,
}

impl DiagramCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(d: &JacobiDiagram, coeff: Rat) -> Self {
        let mut c = Self::new();
        c.add(d, coeff);
        c
    }

    /// Adds `coeff` times the canonical class of `d` (AS sign folded in).
    pub fn add(&mut self, d: &JacobiDiagram, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        match d.canonical() {
            Canonical::Zero => {}
            Canonical::NonZero { diagram, key, sign } => {
                let signed = if sign < 0 { -coeff } else { coeff };
                match self.terms.get_mut(&key) {
                    Some((_, c)) => {
                        *c += signed;
                        if c.is_zero() {
                            self.terms.remove(&key);
                        }
                    }
                    None => {
                        self.terms.insert(key, (diagram, signed));
                    }
                }
            }
        }
    }

    pub fn add_combination(&mut self, other: &DiagramCombination, scale: &Rat) {
        for (d, c) in other.iter() {
            self.add(d, c * scale);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JacobiDiagram, &Rat)> {
        self.terms.values().map(|(d, c)| (d, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

// ---------------------------------------------------------------------------
// One-loop enumeration
// ---------------------------------------------------------------------------

/// Planted subtree shape used by the one-loop enumeration.
#[derive(Clone, Debug)]
pub enum Planted {
    Leaf(u32),
    Node(Box<Planted>, Box<Planted>),
}

impl Planted {
    pub fn min_label(&self) -> u32 {
        match self {
            Planted::Leaf(l) => *l,
            Planted::Node(a, b) => a.min_label().min(b.min_label()),
        }
    }
}

/// All planted binary shapes over the given leaf set, children unordered
/// (the minimum label stays in the left child), so each AS pair appears
/// once.
pub fn planted_trees(labels: &[u32]) -> Vec<Planted> {
    if labels.len() == 1 {
        return vec![Planted::Leaf(labels[0])];
    }
    let first = labels[0];
    let rest = &labels[1..];
    let mut out = Vec::new();
    // Left child takes the first label plus any proper subset of the rest.
    let m = rest.len();
    for mask in 0..(1u32 << m) {
        let mut left = vec![first];
        let mut right = Vec::new();
        for (i, &l) in rest.iter().enumerate() {
            if mask & (1 << i) != 0 {
                left.push(l);
            } else {
                right.push(l);
            }
        }
        if right.is_empty() {
            continue;
        }
        for lt in planted_trees(&left) {
            for rt in planted_trees(&right) {
                out.push(Planted::Node(Box::new(lt.clone()), Box::new(rt.clone())));
            }
        }
    }
    out
}

/// Builder for assembling diagrams half-edge by half-edge.
#[derive(Default)]
pub struct DiagramBuilder {
    leaves: Vec<(u32, u32)>,
    trivalent: Vec<[u32; 3]>,
    edges: Vec<(u32, u32)>,
    next: u32,
    circles: u32,
}

impl DiagramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> u32 {
        let h = self.next;
        self.next += 1;
        h
    }

    /// Adds a leaf; returns its half-edge.
    pub fn leaf(&mut self, label: u32) -> u32 {
        let h = self.fresh();
        self.leaves.push((label, h));
        h
    }

    /// Adds a trivalent vertex with a given cyclic order; returns the three
    /// half-edges.
    pub fn tri(&mut self) -> [u32; 3] {
        let t = [self.fresh(), self.fresh(), self.fresh()];
        self.trivalent.push(t);
        t
    }

    pub fn connect(&mut self, a: u32, b: u32) {
        self.edges.push((a.min(b), a.max(b)));
    }

    pub fn circles(&mut self, n: u32) {
        self.circles += n;
    }

    pub fn finish(self) -> Result<JacobiDiagram, DiagramError> {
        JacobiDiagram::from_parts(self.leaves, self.trivalent, self.edges, self.circles)
    }

    /// Builds a planted subtree; returns the half-edge of its root stub.
    /// Cyclic order at each node, entered from the parent: (parent, left,
    /// right).
    pub fn planted(&mut self, t: &Planted) -> u32 {
        match t {
            Planted::Leaf(l) => self.leaf(*l),
            Planted::Node(a, b) => {
                let ha = self.planted(a);
                let hb = self.planted(b);
                let [hp, hl, hr] = self.tri();
                self.connect(hl, ha);
                self.connect(hr, hb);
                hp
            }
        }
    }
}

/// Ordered set partitions of `labels` into `k` nonempty blocks, the first
/// block containing `labels[0]` (which quotients out cyclic rotation).
fn ordered_blocks(labels: &[u32], k: usize) -> Vec<Vec<Vec<u32>>> {
    fn rec(rest: &[u32], blocks: &mut Vec<Vec<u32>>, k: usize, out: &mut Vec<Vec<Vec<u32>>>) {
        match rest.first() {
            None => {
                if blocks.iter().all(|b| !b.is_empty()) {
                    out.push(blocks.clone());
                }
            }
            Some(&l) => {
                let rest = &rest[1..];
                for i in 0..k {
                    blocks[i].push(l);
                    rec(rest, blocks, k, out);
                    blocks[i].pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut blocks = vec![Vec::new(); k];
    blocks[0].push(labels[0]);
    rec(&labels[1..], &mut blocks, k, &mut out);
    out
}

/// Builds the one-loop diagram with the given cycle of planted branches.
/// Cycle vertex i has cyclic order (from previous, branch root, to next).
pub fn one_loop_from_branches(branches: &[Planted]) -> JacobiDiagram {
    let c = branches.len();
    assert!(c >= 2);
    let mut b = DiagramBuilder::new();
    let mut tris = Vec::with_capacity(c);
    for br in branches {
        let root = b.planted(br);
        let t = b.tri();
        b.connect(t[1], root);
        tris.push(t);
    }
    for i in 0..c {
        let j = (i + 1) % c;
        b.connect(tris[i][2], tris[j][0]);
    }
    b.finish().expect("one-loop assembly is well-formed")
}

/// Streams every connected one-loop diagram with leaves labeled exactly
/// 1..n and cycle length `c`, one canonical representative per AS sign
/// pair, deduplicated by key hash. The callback sees canonical diagrams.
pub fn one_loop_stream_cycle(n: u32, c: usize, mut f: impl FnMut(JacobiDiagram)) {
    assert!(n >= 4, "one-loop diagrams need at least 4 labels");
    assert!((2..=n as usize).contains(&c));
    let labels: Vec<u32> = (1..=n).collect();
    let mut seen: std::collections::HashSet<CanonKey> = Default::default();
    for blocks in ordered_blocks(&labels, c) {
        let shape_lists: Vec<Vec<Planted>> = blocks.iter().map(|b| planted_trees(b)).collect();
        let mut pick = vec![0usize; c];
        loop {
            let branches: Vec<Planted> = pick
                .iter()
                .zip(&shape_lists)
                .map(|(&i, l)| l[i].clone())
                .collect();
            let d = one_loop_from_branches(&branches);
            debug_assert_eq!(d.first_betti(), 1);
            if let Canonical::NonZero { diagram, key, .. } = d.canonical() {
                if seen.insert(key) {
                    f(diagram);
                }
            }
            // Advance the mixed-radix picker.
            let mut pos = 0;
            loop {
                if pos == c {
                    break;
                }
                pick[pos] += 1;
                if pick[pos] < shape_lists[pos].len() {
                    break;
                }
                pick[pos] = 0;
                pos += 1;
            }
            if pos == c {
                break;
            }
        }
    }
}

/// All connected one-loop diagrams with leaves labeled exactly 1..n, no
/// circles and no cycle of length < 2, one canonical representative per
/// AS sign pair, over all cycle lengths.
pub fn one_loop_diagrams(n: u32) -> Vec<JacobiDiagram> {
    let mut out = Vec::new();
    for c in 2..=(n as usize) {
        one_loop_stream_cycle(n, c, |d| out.push(d));
    }
    out
}

/// Length (in edges) of the cycle through the trivalent subgraph, with the
/// cycle's edges; `None` for forests. Self-loops count as length 1.
pub fn cycle_edges(d: &JacobiDiagram) -> Option<Vec<(u32, u32)>> {
    let owner = d.owner_table();
    // Self-loop: both half-edges of an edge on one vertex.
    for &(a, b) in &d.edges {
        if owner[a as usize] == owner[b as usize] {
            return Some(vec![(a, b)]);
        }
    }
    // DFS over trivalent adjacency to find the unique cycle (first Betti
    // number is at most 1 in every use).
    let nt = d.trivalent.len();
    if nt == 0 {
        return None;
    }
    let internal = d.internal_edges();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nt]; // (neighbor, edge idx)
    for (ei, &(a, b)) in internal.iter().enumerate() {
        let (VertexRef::Tri(ta), VertexRef::Tri(tb)) = (owner[a as usize], owner[b as usize])
        else {
            unreachable!()
        };
        adj[ta].push((tb, ei));
        adj[tb].push((ta, ei));
    }
    let mut state = vec![0u8; nt];
    let mut parent_edge = vec![usize::MAX; nt];
    let mut parent = vec![usize::MAX; nt];
    for start in 0..nt {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, usize::MAX)];
        while let Some((v, via)) = stack.pop() {
            if state[v] == 1 {
                continue;
            }
            state[v] = 1;
            parent_edge[v] = via;
            for &(w, ei) in &adj[v] {
                if ei == via {
                    continue;
                }
                if state[w] == 1 {
                    // Cycle found: walk back from v to w.
                    let mut cyc = vec![internal[ei]];
                    let mut cur = v;
                    while cur != w {
                        cyc.push(internal[parent_edge[cur]]);
                        cur = parent[cur];
                    }
                    return Some(cyc);
                }
                parent[w] = v;
                stack.push((w, ei));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

impl JacobiDiagram {
    pub fn to_json(&self) -> Value {
        json!({
            "circles": self.circles,
            "leaves": self
                .leaves
                .iter()
                .enumerate()
                .map(|(i, &(l, he))| json!({"id": i, "label": l, "half_edge": he}))
                .collect::<Vec<_>>(),
            "trivalent": self
                .trivalent
                .iter()
                .enumerate()
                .map(|(i, t)| json!({"id": i, "cyclic": t}))
                .collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, DiagramError> {
        let obj = v
            .as_object()
            .ok_or_else(|| DiagramError::SchemaError("expected object".into()))?;
        // Shorthands.
        if let Some(lin) = obj.get("linear") {
            let labels: Vec<u32> = serde_json::from_value(lin.clone())
                .map_err(|e| DiagramError::SchemaError(e.to_string()))?;
            return linear_tree(&labels);
        }
        if let Some(rio) = obj.get("riordan") {
            let parts: Vec<Vec<u32>> = serde_json::from_value(rio.clone())
                .map_err(|e| DiagramError::SchemaError(e.to_string()))?;
            return riordan_forest(&parts);
        }
        let circles = obj
            .get("circles")
            .and_then(Value::as_u64)
            .unwrap_or(0) as u32;
        let leaves_v = obj
            .get("leaves")
            .and_then(Value::as_array)
            .ok_or_else(|| DiagramError::SchemaError("missing leaves".into()))?;
        let mut leaves = Vec::new();
        for l in leaves_v {
            let label = l
                .get("label")
                .and_then(Value::as_u64)
                .ok_or_else(|| DiagramError::SchemaError("leaf needs label".into()))?;
            let he = l
                .get("half_edge")
                .and_then(Value::as_u64)
                .ok_or_else(|| DiagramError::SchemaError("leaf needs half_edge".into()))?;
            leaves.push((label as u32, he as u32));
        }
        let tri_v = obj
            .get("trivalent")
            .and_then(Value::as_array)
            .ok_or_else(|| DiagramError::SchemaError("missing trivalent".into()))?;
        let mut trivalent = Vec::new();
        for t in tri_v {
            let cyc = t
                .get("cyclic")
                .and_then(Value::as_array)
                .ok_or_else(|| DiagramError::SchemaError("trivalent needs cyclic".into()))?;
            if cyc.len() != 3 {
                return Err(DiagramError::SchemaError("cyclic must have 3 entries".into()));
            }
            let mut arr = [0u32; 3];
            for (i, x) in cyc.iter().enumerate() {
                arr[i] = x
                    .as_u64()
                    .ok_or_else(|| DiagramError::SchemaError("bad half-edge id".into()))?
                    as u32;
            }
            trivalent.push(arr);
        }
        let edges_v = obj
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| DiagramError::SchemaError("missing edges".into()))?;
        let mut edges = Vec::new();
        for e in edges_v {
            let pair = e
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| DiagramError::SchemaError("edge must be a pair".into()))?;
            let a = pair[0]
                .as_u64()
                .ok_or_else(|| DiagramError::SchemaError("bad half-edge id".into()))?;
            let b = pair[1]
                .as_u64()
                .ok_or_else(|| DiagramError::SchemaError("bad half-edge id".into()))?;
            edges.push((a as u32, b as u32));
        }
        JacobiDiagram::from_parts(leaves, trivalent, edges, circles)
    }
}

/// The forest of ordered linear trees over the given parts (each part
/// sorted ascending).
pub fn riordan_forest(parts: &[Vec<u32>]) -> Result<JacobiDiagram, DiagramError> {
    let mut leaves = Vec::new();
    let mut trivalent = Vec::new();
    let mut edges = Vec::new();
    let mut offset = 0u32;
    for part in parts {
        let mut sorted = part.clone();
        sorted.sort_unstable();
        let t = linear_tree(&sorted)?;
        leaves.extend(t.leaves.iter().map(|&(l, he)| (l, he + offset)));
        trivalent.extend(
            t.trivalent
                .iter()
                .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
        );
        edges.extend(t.edges.iter().map(|&(a, b)| (a + offset, b + offset)));
        offset += t.num_half_edges() as u32;
    }
    JacobiDiagram::from_parts(leaves, trivalent, edges, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_of_small_diagrams() {
        assert_eq!(strut(1, 2).degree().unwrap(), 1);
        let y = linear_tree(&[1, 2, 3]).unwrap();
        assert_eq!(y.degree().unwrap(), 2);
        let t4 = linear_tree(&[1, 2, 3, 4]).unwrap();
        assert_eq!(t4.degree().unwrap(), 3);
    }

    #[test]
    fn linear_tree_shape() {
        let t = linear_tree(&[1, 3, 2, 4]).unwrap();
        assert_eq!(t.leaves().len(), 4);
        assert_eq!(t.trivalent().len(), 2);
        assert_eq!(t.internal_edges().len(), 1);
        assert_eq!(t.first_betti(), 0);
        assert!(linear_tree(&[1, 1, 2]).is_err());
    }

    #[test]
    fn betti_numbers() {
        assert_eq!(linear_tree(&[1, 2, 3, 4, 5]).unwrap().first_betti(), 0);
        assert_eq!(JacobiDiagram::circles_only(1).first_betti(), 1);
        let one_loop = one_loop_from_branches(&[
            Planted::Leaf(1),
            Planted::Leaf(2),
            Planted::Leaf(3),
            Planted::Leaf(4),
        ]);
        assert_eq!(one_loop.first_betti(), 1);
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(linear_tree_basis(2).len(), 1);
        assert_eq!(linear_tree_basis(3).len(), 1);
        assert_eq!(linear_tree_basis(4).len(), 2);
        assert_eq!(linear_tree_basis(6).len(), 24);
    }

    #[test]
    fn basis_members_pairwise_distinct() {
        for n in 2..=7 {
            let basis = linear_tree_basis(n);
            let mut keys = std::collections::BTreeSet::new();
            for t in &basis {
                match t.canonical() {
                    Canonical::NonZero { key, .. } => {
                        assert!(keys.insert(key), "duplicate canonical key at n={n}");
                    }
                    Canonical::Zero => panic!("basis tree canonicalized to zero"),
                }
            }
        }
    }

    #[test]
    fn canonical_is_idempotent() {
        let t = linear_tree(&[1, 4, 2, 3, 5]).unwrap();
        let Canonical::NonZero { diagram, key, .. } = t.canonical() else {
            panic!("tree is not zero");
        };
        let Canonical::NonZero {
            key: key2, sign, ..
        } = diagram.canonical()
        else {
            panic!()
        };
        assert_eq!(key, key2);
        assert_eq!(sign, 1);
    }

    #[test]
    fn as_sign_flips_on_reversal() {
        let t = linear_tree(&[1, 2, 3, 4]).unwrap();
        let Canonical::NonZero { key, sign, .. } = t.canonical() else {
            panic!()
        };
        // Reverse one cyclic order.
        let mut flipped = t.clone();
        flipped.trivalent[0] = [
            t.trivalent[0][0],
            t.trivalent[0][2],
            t.trivalent[0][1],
        ];
        let Canonical::NonZero {
            key: key_f,
            sign: sign_f,
            ..
        } = flipped.canonical()
        else {
            panic!()
        };
        assert_eq!(key, key_f);
        assert_eq!(sign, -sign_f);
        // Flipping twice restores the sign.
        let mut back = flipped.clone();
        back.trivalent[0] = [
            flipped.trivalent[0][0],
            flipped.trivalent[0][2],
            flipped.trivalent[0][1],
        ];
        let Canonical::NonZero { sign: sign_b, .. } = back.canonical() else {
            panic!()
        };
        assert_eq!(sign, sign_b);
    }

    #[test]
    fn rotations_share_canonical_key_and_sign() {
        let t = linear_tree(&[1, 2, 3]).unwrap();
        let mut rotated = t.clone();
        let tri = t.trivalent[0];
        rotated.trivalent[0] = [tri[1], tri[2], tri[0]];
        assert_eq!(t.canonical(), rotated.canonical());
    }

    #[test]
    fn self_loop_is_zero() {
        // One trivalent vertex with a self-loop plus a leaf: killed by AS.
        let d = JacobiDiagram::from_parts(
            vec![(1, 0)],
            vec![[1, 2, 3]],
            vec![(0, 1), (2, 3)],
            0,
        )
        .unwrap();
        assert_eq!(d.canonical(), Canonical::Zero);
    }

    #[test]
    fn one_loop_enumeration_small() {
        let diagrams = one_loop_diagrams(4);
        assert!(!diagrams.is_empty());
        for d in &diagrams {
            assert_eq!(d.first_betti(), 1);
            assert_eq!(d.trivalent().len(), 4);
            assert_eq!(d.labels(), vec![1, 2, 3, 4]);
            let cyc = cycle_edges(d).expect("one-loop diagram has a cycle");
            assert!(cyc.len() >= 2);
        }
    }

    #[test]
    fn json_round_trip() {
        let t = linear_tree(&[1, 3, 2, 4]).unwrap();
        let j = t.to_json();
        let back = JacobiDiagram::from_json(&j).unwrap();
        assert_eq!(t, back);
        // Canonical serialize(parse(s)) round trip.
        let Canonical::NonZero { diagram, .. } = t.canonical() else {
            panic!()
        };
        let s = serde_json::to_string(&diagram.to_json()).unwrap();
        let re: Value = serde_json::from_str(&s).unwrap();
        let parsed = JacobiDiagram::from_json(&re).unwrap();
        assert_eq!(
            serde_json::to_string(&parsed.to_json()).unwrap(),
            s
        );
    }

    #[test]
    fn json_shorthands() {
        let y = JacobiDiagram::from_json(&json!({"linear": [1, 2, 3]})).unwrap();
        assert_eq!(y, linear_tree(&[1, 2, 3]).unwrap());
        let f = JacobiDiagram::from_json(&json!({"riordan": [[1, 4], [2, 3]]})).unwrap();
        assert_eq!(f.components().len(), 2);
    }

    #[test]
    fn parse_rejects_reused_half_edge() {
        let bad = json!({
            "circles": 0,
            "leaves": [{"id": 0, "label": 1, "half_edge": 0}, {"id": 1, "label": 2, "half_edge": 0}],
            "trivalent": [],
            "edges": [[0, 1]],
        });
        assert!(matches!(
            JacobiDiagram::from_json(&bad),
            Err(DiagramError::DanglingHalfEdge(_))
        ));
    }
}
