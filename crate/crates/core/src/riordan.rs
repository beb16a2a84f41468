//! Riordan numbers, noncrossing partitions with parts of size at least two,
//! the associated forests of ordered linear trees, and the tree basis of
//! the invariant space with exact coordinate extraction.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::Zero;
use thiserror::Error;

use crate::diagram::{riordan_forest, JacobiDiagram};
use crate::exactmath::{rat, ExactMatrix, Rat};
use crate::tensor::{adjoint_act, ExactTensor, SlotBasis, Tensor, E, F, H};
use crate::weight::weight_direct;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RiordanError {
    #[error("Riordan recurrence produced a non-integer at n = {0}")]
    NonIntegerRecurrence(u32),
    #[error("tree basis is linearly dependent at n = {0}")]
    DependentBasis(u32),
    #[error("tensor is not in the invariant span")]
    NotInInvariantSpan,
    #[error("need n >= 2")]
    TooSmall,
}

/// The Riordan number R_n from R_2 = R_3 = 1 and
/// R_n = (n-1)(2 R_{n-1} + 3 R_{n-2}) / (n+1); the division must be exact.
pub fn riordan_number(n: u32) -> Result<u64, RiordanError> {
    if n < 2 {
        return Err(RiordanError::TooSmall);
    }
    let mut prev: u64 = 1; // R_2
    let mut cur: u64 = 1; // R_3
    if n == 2 || n == 3 {
        return Ok(1);
    }
    for m in 4..=n {
        let num = (m as u64 - 1) * (2 * cur + 3 * prev);
        if num % (m as u64 + 1) != 0 {
            return Err(RiordanError::NonIntegerRecurrence(m));
        }
        prev = cur;
        cur = num / (m as u64 + 1);
    }
    Ok(cur)
}

/// A partition of {1..n} into noncrossing parts of size at least two.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RiordanPartition {
    /// Parts sorted internally and ordered by their minimum element.
    pub parts: Vec<Vec<u32>>,
}

impl RiordanPartition {
    pub fn n(&self) -> u32 {
        self.parts.iter().map(|p| p.len() as u32).sum()
    }

    /// True when all parts are struts (size exactly two).
    pub fn all_pairs(&self) -> bool {
        self.parts.iter().all(|p| p.len() == 2)
    }
}

/// Four-point crossing test: some a < b < c < d with a, c in one part and
/// b, d in another.
pub fn is_noncrossing(parts: &[Vec<u32>]) -> bool {
    for (i, p) in parts.iter().enumerate() {
        for q in parts.iter().skip(i + 1) {
            for (k, &a) in p.iter().enumerate() {
                for &c in p.iter().skip(k + 1) {
                    let p_crosses = q
                        .iter()
                        .any(|&b| a < b && b < c)
                        && q.iter().any(|&d| d < a || d > c);
                    if p_crosses {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Riordan partitions of an increasing ground set (empty allowed), by
/// recursive placement of the block containing the smallest element; the
/// gaps between consecutive block elements are partitioned independently.
fn partitions_of(elements: &[u32]) -> Vec<Vec<Vec<u32>>> {
    if elements.is_empty() {
        return vec![Vec::new()];
    }
    let first = elements[0];
    let rest = &elements[1..];
    let m = rest.len();
    let mut out = Vec::new();
    // The block of `first` picks a nonempty subset of the rest.
    for mask in 0u32..(1 << m) {
        if mask == 0 {
            continue;
        }
        let mut block = vec![first];
        for (i, &x) in rest.iter().enumerate() {
            if mask & (1 << i) != 0 {
                block.push(x);
            }
        }
        // Gap intervals between consecutive block elements, plus the tail.
        let mut gaps: Vec<Vec<u32>> = Vec::new();
        let mut bi = 0;
        let mut cur: Vec<u32> = Vec::new();
        for &x in rest {
            if bi + 1 < block.len() && x == block[bi + 1] {
                gaps.push(std::mem::take(&mut cur));
                bi += 1;
            } else {
                cur.push(x);
            }
        }
        gaps.push(cur);
        // Cartesian product of gap partitions; a gap with no valid
        // partition (a lone element) kills this block choice.
        let gap_parts: Vec<Vec<Vec<Vec<u32>>>> =
            gaps.iter().map(|g| partitions_of(g)).collect();
        if gap_parts.iter().any(|g| g.is_empty()) {
            continue;
        }
        let mut pick = vec![0usize; gap_parts.len()];
        loop {
            let mut partition = vec![block.clone()];
            for (g, &k) in gap_parts.iter().zip(&pick) {
                partition.extend(g[k].iter().cloned());
            }
            out.push(partition);
            let mut pos = 0;
            loop {
                if pos == pick.len() {
                    break;
                }
                pick[pos] += 1;
                if pick[pos] < gap_parts[pos].len() {
                    break;
                }
                pick[pos] = 0;
                pos += 1;
            }
            if pos == pick.len() {
                break;
            }
        }
    }
    out
}

/// All Riordan partitions of {1..n}, sorted lexicographically by their
/// sorted part lists. The count equals the Riordan number.
pub fn riordan_partitions(n: u32) -> Vec<RiordanPartition> {
    assert!(n >= 2);
    let elements: Vec<u32> = (1..=n).collect();
    let mut out: Vec<RiordanPartition> = partitions_of(&elements)
        .into_iter()
        .map(|mut parts| {
            for p in &mut parts {
                p.sort_unstable();
            }
            parts.sort();
            RiordanPartition { parts }
        })
        .collect();
    out.sort();
    debug_assert!(out.iter().all(|p| p.parts.iter().all(|b| b.len() >= 2)));
    debug_assert!(out.iter().all(|p| is_noncrossing(&p.parts)));
    out
}

/// A Riordan partition with its canonical forest of ordered linear trees.
#[derive(Clone, Debug)]
pub struct RiordanTree {
    pub partition: RiordanPartition,
    pub diagram: JacobiDiagram,
}

impl RiordanTree {
    pub fn from_partition(partition: RiordanPartition) -> Self {
        let diagram =
            riordan_forest(&partition.parts).expect("Riordan partition labels are distinct");
        RiordanTree { partition, diagram }
    }

    /// Total degree: n minus the number of parts.
    pub fn degree(&self) -> u32 {
        self.partition.n() - self.partition.parts.len() as u32
    }

    /// Number of trivalent vertices: n minus twice the number of parts.
    pub fn trivalent_count(&self) -> u32 {
        self.diagram.trivalent().len() as u32
    }

    /// Number of internal edges across all components.
    pub fn internal_edge_count(&self) -> u32 {
        self.diagram.internal_edges().len() as u32
    }
}

/// Riordan trees in the frozen partition order.
pub fn riordan_trees(n: u32) -> Vec<RiordanTree> {
    riordan_partitions(n)
        .into_iter()
        .map(RiordanTree::from_partition)
        .collect()
}

// ---------------------------------------------------------------------------
// Tree basis and coordinates
// ---------------------------------------------------------------------------

/// Kappa-pairing of two SL2 tensors of equal arity: sum over entries of
/// s[idx] t[dual idx] 2^{#h}, where dual swaps e and f.
pub fn kappa_pair(s: &ExactTensor, t: &ExactTensor) -> Rat {
    debug_assert_eq!(s.num_slots(), t.num_slots());
    let mut acc = Rat::zero();
    for (idx, v) in s.iter() {
        let mut dual = idx.clone();
        let mut pow = 0u32;
        for x in dual.iter_mut() {
            match *x {
                H => pow += 1,
                E => *x = F,
                F => *x = E,
                _ => unreachable!("SL2 index"),
            }
        }
        let w = t.get(&dual);
        if !w.is_zero() {
            acc += v * &w * rat(2).pow(pow as i32);
        }
    }
    acc
}

/// The tree basis of the invariant space at a fixed order, with a
/// factorized Gram matrix for exact coordinate extraction. The pairing by
/// kappa is nondegenerate on invariants, so the Gram matrix being singular
/// would certify linear dependence of the basis.
pub struct TreeBasis {
    pub n: u32,
    pub trees: Vec<RiordanTree>,
    /// SL2-slot weight tensors of the trees, in partition order.
    pub tensors: Vec<ExactTensor>,
    gram_inverse: Vec<Vec<Rat>>,
}

impl TreeBasis {
    fn build(n: u32) -> Result<TreeBasis, RiordanError> {
        let trees = riordan_trees(n);
        let expected = riordan_number(n)? as usize;
        assert_eq!(trees.len(), expected, "partition count equals the Riordan number");
        let tensors: Vec<ExactTensor> = trees
            .iter()
            .map(|t| {
                weight_direct(&t.diagram, n)
                    .expect("Riordan tree fits its order")
                    .sl2()
                    .expect("all labels present")
            })
            .collect();
        let k = tensors.len();
        let mut gram = vec![vec![Rat::zero(); k]; k];
        for i in 0..k {
            for j in i..k {
                let v = kappa_pair(&tensors[i], &tensors[j]);
                gram[i][j] = v.clone();
                gram[j][i] = v;
            }
        }
        let gram_inverse = invert(&gram).ok_or(RiordanError::DependentBasis(n))?;
        Ok(TreeBasis {
            n,
            trees,
            tensors,
            gram_inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.tensors.len()
    }

    /// Coordinates of an invariant SL2 tensor in the tree basis, without
    /// verifying the recombination. Correct only for inputs already known
    /// to be invariant.
    pub fn coordinates_unchecked(&self, t: &ExactTensor) -> Vec<Rat> {
        let k = self.dim();
        let mut pairings = Vec::with_capacity(k);
        for b in &self.tensors {
            pairings.push(kappa_pair(b, t));
        }
        let mut coords = vec![Rat::zero(); k];
        for (i, row) in self.gram_inverse.iter().enumerate() {
            for (g, p) in row.iter().zip(&pairings) {
                if !g.is_zero() && !p.is_zero() {
                    coords[i] += g * p;
                }
            }
        }
        coords
    }

    /// Exact coordinates, verified by recombination.
    pub fn coordinates(&self, t: &ExactTensor) -> Result<Vec<Rat>, RiordanError> {
        if t.num_slots() != self.n as usize
            || t.slots().iter().any(|&s| s != SlotBasis::SL2)
        {
            return Err(RiordanError::NotInInvariantSpan);
        }
        let coords = self.coordinates_unchecked(t);
        let mut acc = Tensor::zero(vec![SlotBasis::SL2; self.n as usize]);
        for (c, b) in coords.iter().zip(&self.tensors) {
            if !c.is_zero() {
                acc = acc.add(&b.scale(c));
            }
        }
        if &acc != t {
            return Err(RiordanError::NotInInvariantSpan);
        }
        Ok(coords)
    }
}

/// Exact inverse via Gauss-Jordan; `None` when singular.
fn invert(m: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let k = m.len();
    let mut a: Vec<Vec<Rat>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { rat(1) } else { rat(0) }));
            r
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let (head, tail) = a.split_at_mut(r.max(col));
                let (row_r, row_c) = if r < col {
                    (&mut head[r], &tail[0])
                } else {
                    (&mut tail[0], &head[col])
                };
                for (x, y) in row_r.iter_mut().zip(row_c.iter()) {
                    *x = &*x - &(&f * y);
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[k..].to_vec()).collect())
}

static BASIS_CACHE: OnceLock<Mutex<BTreeMap<u32, Arc<TreeBasis>>>> = OnceLock::new();

/// Cached tree basis for a given order.
pub fn tree_basis(n: u32) -> Result<Arc<TreeBasis>, RiordanError> {
    let cache = BASIS_CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(b) = cache.lock().unwrap().get(&n) {
        return Ok(b.clone());
    }
    let built = Arc::new(TreeBasis::build(n)?);
    cache
        .lock()
        .unwrap()
        .entry(n)
        .or_insert_with(|| built.clone());
    Ok(built)
}

/// Coordinates of an invariant tensor in the tree basis (verified).
pub fn coordinates(t: &ExactTensor, n: u32) -> Result<Vec<Rat>, RiordanError> {
    tree_basis(n)?.coordinates(t)
}

// ---------------------------------------------------------------------------
// Independent dimension oracle
// ---------------------------------------------------------------------------

/// Dimension of the joint kernel of the three adjoint generators on the
/// full 3^n-dimensional space, computed directly from the action on
/// monomials. Independent of the Riordan enumeration.
pub fn adjoint_joint_kernel_dim(n: u32) -> usize {
    let n = n as usize;
    // Monomials over (h, e, f); ad_h is diagonal with eigenvalue
    // 2(#e - #f), so the kernel of ad_h is spanned by balanced monomials.
    let mut balanced: Vec<Vec<u8>> = Vec::new();
    let mut idx = vec![0u8; n];
    loop {
        let e_count = idx.iter().filter(|&&x| x == E).count();
        let f_count = idx.iter().filter(|&&x| x == F).count();
        if e_count == f_count {
            balanced.push(idx.clone());
        }
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            idx[pos] += 1;
            if idx[pos] < 3 {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }
    // Sanity: ad_h really is diagonal on monomials with that eigenvalue.
    if n <= 4 {
        for b in balanced.iter().take(10) {
            let mut t = Tensor::zero(vec![SlotBasis::SL2; n]);
            t.add_entry(b.clone(), rat(1));
            assert!(adjoint_act(H, &t).is_zero());
        }
    }
    // Rank of the stacked (ad_e; ad_f) action restricted to the balanced
    // subspace; images live in the +2 and -2 eigenspaces.
    let mut row_index: BTreeMap<(u8, Vec<u8>), usize> = BTreeMap::new();
    let mut columns: Vec<Vec<Rat>> = Vec::new();
    let mut entries: Vec<BTreeMap<usize, Rat>> = Vec::new();
    for b in &balanced {
        let mut t = Tensor::zero(vec![SlotBasis::SL2; n]);
        t.add_entry(b.clone(), rat(1));
        let mut col: BTreeMap<usize, Rat> = BTreeMap::new();
        for (gen_tag, gen) in [(0u8, E), (1u8, F)] {
            for (img, v) in adjoint_act(gen, &t).iter() {
                let next = row_index.len();
                let r = *row_index.entry((gen_tag, img.clone())).or_insert(next);
                col.insert(r, v.clone());
            }
        }
        entries.push(col);
    }
    let nrows = row_index.len();
    for col in entries {
        let mut v = vec![Rat::zero(); nrows];
        for (r, x) in col {
            v[r] = x;
        }
        columns.push(v);
    }
    let mut ech = crate::exactmath::IntEchelon::new();
    let mut rank = 0;
    for c in &columns {
        if ech.insert(c) {
            rank += 1;
        }
    }
    balanced.len() - rank
}

/// Matrix whose columns are the tree-basis tensors flattened over their
/// common support; rank R_n certifies independence.
pub fn basis_rank(n: u32) -> Result<usize, RiordanError> {
    let basis = tree_basis(n)?;
    let mut support: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for t in &basis.tensors {
        for (idx, _) in t.iter() {
            let next = support.len();
            support.entry(idx.clone()).or_insert(next);
        }
    }
    let mut m = ExactMatrix::new(support.len(), basis.dim());
    for (j, t) in basis.tensors.iter().enumerate() {
        for (idx, v) in t.iter() {
            m.set(support[idx], j, v.clone());
        }
    }
    Ok(m.rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::casimir_power;

    #[test]
    fn riordan_numbers_match_table() {
        let expect = [
            (2u32, 1u64),
            (3, 1),
            (4, 3),
            (5, 6),
            (6, 15),
            (7, 36),
            (8, 91),
            (9, 232),
        ];
        for (n, r) in expect {
            assert_eq!(riordan_number(n).unwrap(), r, "R_{n}");
        }
    }

    #[test]
    fn partition_counts_match_riordan_numbers() {
        for n in 2..=9u32 {
            assert_eq!(
                riordan_partitions(n).len() as u64,
                riordan_number(n).unwrap(),
                "count at n={n}"
            );
        }
    }

    /// Brute-force oracle: every set partition, filtered by part size and
    /// the four-point noncrossing test.
    fn brute_force_count(n: u32) -> usize {
        // Restricted growth strings.
        fn rec(assign: &mut Vec<usize>, max: usize, n: usize, count: &mut usize) {
            if assign.len() == n {
                let blocks = max + 1;
                let mut parts: Vec<Vec<u32>> = vec![Vec::new(); blocks];
                for (i, &b) in assign.iter().enumerate() {
                    parts[b].push(i as u32 + 1);
                }
                if parts.iter().all(|p| p.len() >= 2) && is_noncrossing(&parts) {
                    *count += 1;
                }
                return;
            }
            for b in 0..=max + 1 {
                assign.push(b);
                rec(assign, max.max(b), n, count);
                assign.pop();
            }
        }
        let mut count = 0;
        let mut assign = vec![0usize];
        rec(&mut assign, 0, n as usize, &mut count);
        count
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for n in 2..=8u32 {
            assert_eq!(riordan_partitions(n).len(), brute_force_count(n), "n={n}");
        }
    }

    #[test]
    fn crossing_examples() {
        // Accepted at n = 10.
        let good = vec![vec![1, 4, 5, 9, 10], vec![2, 3], vec![6, 7, 8]];
        assert!(is_noncrossing(&good));
        let parts10 = riordan_partitions(10);
        assert!(parts10.iter().any(|p| {
            let mut sorted = good.clone();
            sorted.sort();
            p.parts == sorted
        }));
        // Rejected: {1,4,6} interleaves with {5,7,8}.
        let bad = vec![vec![1, 4, 6], vec![2, 3], vec![5, 7, 8]];
        assert!(!is_noncrossing(&bad));
        let parts8 = riordan_partitions(8);
        assert!(parts8.iter().all(|p| {
            let mut sorted = bad.clone();
            sorted.sort();
            p.parts != sorted
        }));
    }

    #[test]
    fn geometric_gap_test_agrees_with_four_point_test() {
        // Circular-hull disjointness: for each pair of parts, one lies
        // inside a single gap of the other.
        fn hulls_disjoint(parts: &[Vec<u32>]) -> bool {
            for (i, p) in parts.iter().enumerate() {
                for q in parts.iter().skip(i + 1) {
                    // Find the gap of p (between consecutive elements,
                    // cyclically) containing all of q.
                    let mut ok = false;
                    let m = p.len();
                    for g in 0..m {
                        let lo = p[g];
                        let hi = if g + 1 < m { p[g + 1] } else { u32::MAX };
                        let inside = |x: u32| {
                            if g + 1 < m {
                                x > lo && x < hi
                            } else {
                                x > lo || x < p[0]
                            }
                        };
                        if q.iter().all(|&x| inside(x)) {
                            ok = true;
                            break;
                        }
                    }
                    if !ok {
                        return false;
                    }
                }
            }
            true
        }
        // Pseudo-random partitions of {1..8} into parts of size >= 2.
        let mut seed = 0x1234_5678u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as usize
        };
        for _ in 0..500 {
            let n = 8;
            let mut parts: Vec<Vec<u32>> = Vec::new();
            for x in 1..=n {
                let k = next() % (parts.len() + 1);
                if k == parts.len() {
                    parts.push(vec![x]);
                } else {
                    parts[k].push(x);
                }
            }
            parts.retain(|p| !p.is_empty());
            if parts.iter().any(|p| p.len() < 2) {
                continue;
            }
            assert_eq!(is_noncrossing(&parts), hulls_disjoint(&parts));
        }
    }

    #[test]
    fn tree_basis_small_dims() {
        for (n, dim) in [(2u32, 1usize), (3, 1), (4, 3), (5, 6), (6, 15)] {
            let b = tree_basis(n).unwrap();
            assert_eq!(b.dim(), dim);
            assert_eq!(basis_rank(n).unwrap(), dim, "full rank at n={n}");
        }
    }

    #[test]
    fn n2_and_n3_bases_are_c_and_b() {
        let b2 = tree_basis(2).unwrap();
        assert_eq!(b2.tensors[0], crate::tensor::casimir());
        let b3 = tree_basis(3).unwrap();
        assert_eq!(b3.tensors[0], crate::tensor::bracket_tensor());
    }

    #[test]
    fn coordinates_of_basis_elements_are_units() {
        let b = tree_basis(4).unwrap();
        for (i, t) in b.tensors.iter().enumerate() {
            let coords = b.coordinates(t).unwrap();
            for (j, c) in coords.iter().enumerate() {
                assert_eq!(*c, rat((i == j) as i64));
            }
        }
    }

    #[test]
    fn casimir_power_is_a_basis_element() {
        let b = tree_basis(4).unwrap();
        let cc = casimir_power(4).unwrap().sl2().unwrap();
        let coords = b.coordinates(&cc).unwrap();
        // The unit coordinate sits at the partition {{1,2},{3,4}}.
        let pos = b
            .trees
            .iter()
            .position(|t| t.partition.parts == vec![vec![1, 2], vec![3, 4]])
            .unwrap();
        for (j, c) in coords.iter().enumerate() {
            assert_eq!(*c, rat((j == pos) as i64));
        }
    }

    #[test]
    fn non_invariant_input_is_rejected() {
        let mut hh = Tensor::zero(vec![SlotBasis::SL2; 2]);
        hh.add_entry(vec![H, H], rat(1));
        assert!(matches!(
            coordinates(&hh, 2),
            Err(RiordanError::NotInInvariantSpan)
        ));
    }

    #[test]
    fn adjoint_kernel_dim_matches_riordan() {
        for n in 2..=5u32 {
            assert_eq!(
                adjoint_joint_kernel_dim(n) as u64,
                riordan_number(n).unwrap(),
                "n={n}"
            );
        }
    }
}
