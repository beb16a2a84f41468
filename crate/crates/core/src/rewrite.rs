//! Structural rewriting: normalization of connected trees onto the
//! linear-tree basis through antisymmetry and the Jacobi identity, and the
//! loop-reduction procedure expressing any diagram as a combination of
//! forests.
//!
//! A connected tree rooted at leaf 1 reads as a bracket word over the
//! remaining labels; repeated right expansion [[a,B],C] -> [a,[B,C]] -
//! [B,[a,C]], together with the sign rule keeping the largest letter in the
//! right factor, lands every word on the right-normed family ending in the
//! top label. Those words are exactly the linear trees (1, sigma, n).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use dashmap::DashMap;
use num_traits::Zero;
use thiserror::Error;

use crate::diagram::{
    cycle_edges, Canonical, DiagramCombination, JacobiDiagram, VertexRef,
};
use crate::exactmath::{rat, Rat};
use crate::weight::{cv_expand, WeightError};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("input is not a connected tree")]
    NotATree,
    #[error("leaf labels must be exactly 1..=n")]
    BadLabelSet,
    #[error(transparent)]
    Weight(#[from] WeightError),
}

// ---------------------------------------------------------------------------
// Bracket words
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum Word {
    Gen(u32),
    Br(Box<Word>, Box<Word>),
}

impl Word {
    fn max_letter(&self) -> u32 {
        match self {
            Word::Gen(g) => *g,
            Word::Br(a, b) => a.max_letter().max(b.max_letter()),
        }
    }
}

/// Reads the tree rooted at leaf 1 as a bracket word over labels 2..n: at a
/// trivalent vertex entered through half-edge p with cyclic order
/// (p, a, b), the word is [word(a), word(b)].
fn tree_word(d: &JacobiDiagram) -> Result<Word, RewriteError> {
    let partner = d.partner_table();
    let owner = d.owner_table();
    let root = d
        .leaves()
        .iter()
        .find(|&&(l, _)| l == 1)
        .map(|&(_, he)| he)
        .ok_or(RewriteError::BadLabelSet)?;

    fn walk(
        d: &JacobiDiagram,
        partner: &[u32],
        owner: &[VertexRef],
        h: u32,
    ) -> Result<Word, RewriteError> {
        let p = partner[h as usize];
        match owner[p as usize] {
            VertexRef::Leaf(i) => Ok(Word::Gen(d.leaves()[i].0)),
            VertexRef::Tri(t) => {
                let triple = d.trivalent()[t];
                let pos = triple.iter().position(|&x| x == p).unwrap();
                let a = walk(d, partner, owner, triple[(pos + 1) % 3])?;
                let b = walk(d, partner, owner, triple[(pos + 2) % 3])?;
                Ok(Word::Br(Box::new(a), Box::new(b)))
            }
        }
    }
    walk(d, &partner, &owner, root)
}

/// Right-normed words as generator sequences, with integer coefficients.
type NormalForm = BTreeMap<Vec<u32>, i64>;

fn nf_add(acc: &mut NormalForm, word: Vec<u32>, coeff: i64) {
    use std::collections::btree_map::Entry;
    if coeff == 0 {
        return;
    }
    match acc.entry(word) {
        Entry::Occupied(mut e) => {
            *e.get_mut() += coeff;
            if *e.get() == 0 {
                e.remove();
            }
        }
        Entry::Vacant(e) => {
            e.insert(coeff);
        }
    }
}

type MergeMemo = DashMap<(Vec<u32>, Vec<u32>), NormalForm>;

fn merge_memo() -> &'static MergeMemo {
    static MEMO: OnceLock<MergeMemo> = OnceLock::new();
    MEMO.get_or_init(DashMap::new)
}

/// Bracket of two right-normed words, re-expressed in right-normed words:
/// [g, V] prepends; [[g, U'], V] = [g, [U', V]] - [U', [g, V]] recurses on
/// the left length.
fn merge(u: &[u32], v: &[u32]) -> NormalForm {
    if u.len() == 1 {
        let mut word = Vec::with_capacity(1 + v.len());
        word.push(u[0]);
        word.extend_from_slice(v);
        let mut nf = NormalForm::new();
        nf.insert(word, 1);
        return nf;
    }
    let key = (u.to_vec(), v.to_vec());
    if let Some(hit) = merge_memo().get(&key) {
        return hit.clone();
    }
    // u = g :: u_rest, viewed as [g, u_rest] in right-normed form; then
    // [[g, u_rest], v] = [g, [u_rest, v]] - [u_rest, [g, v]].
    let g = u[0];
    let u_rest = &u[1..];
    let mut out = NormalForm::new();
    for (w, c) in merge(u_rest, v) {
        let mut word = Vec::with_capacity(w.len() + 1);
        word.push(g);
        word.extend_from_slice(&w);
        nf_add(&mut out, word, c);
    }
    let mut gv = Vec::with_capacity(v.len() + 1);
    gv.push(g);
    gv.extend_from_slice(v);
    for (w, c) in merge(u_rest, &gv) {
        nf_add(&mut out, w, -c);
    }
    merge_memo().insert(key, out.clone());
    out
}

/// Normalizes a bracket word. Every output word ends with the maximum
/// letter of the input's support.
fn normalize_word(w: &Word) -> NormalForm {
    match w {
        Word::Gen(g) => {
            let mut nf = NormalForm::new();
            nf.insert(vec![*g], 1);
            nf
        }
        Word::Br(a, b) => {
            // Keep the largest letter in the right factor; swapping costs a
            // sign by antisymmetry.
            let (left, right, sign) = if a.max_letter() > b.max_letter() {
                (b, a, -1i64)
            } else {
                (a, b, 1i64)
            };
            let nl = normalize_word(left);
            let nr = normalize_word(right);
            let mut out = NormalForm::new();
            for (u, cu) in &nl {
                for (v, cv) in &nr {
                    for (w, c) in merge(u, v) {
                        nf_add(&mut out, w, sign * cu * cv * c);
                    }
                }
            }
            out
        }
    }
}

/// Lexicographic rank of `perm` among all permutations of its sorted
/// support.
fn lex_rank(perm: &[u32]) -> usize {
    let mut remaining: Vec<u32> = perm.to_vec();
    remaining.sort_unstable();
    let mut rank = 0usize;
    let mut fact = (1..remaining.len()).product::<usize>().max(1);
    for (i, &x) in perm.iter().enumerate() {
        let pos = remaining.iter().position(|&y| y == x).unwrap();
        rank += pos * fact;
        remaining.remove(pos);
        if i + 1 < perm.len() {
            fact /= perm.len() - 1 - i;
        }
    }
    rank
}

/// Exact coordinates of a connected tree over the linear-tree basis
/// (1, sigma, n), sigma running lexicographically over permutations of
/// 2..n-1. Computed by reading the tree as a bracket word rooted at leaf 1
/// and rewriting with the Jacobi identity.
pub fn ihx_normalize(t: &JacobiDiagram, n: u32) -> Result<Vec<Rat>, RewriteError> {
    if t.labels() != (1..=n).collect::<Vec<_>>() {
        return Err(RewriteError::BadLabelSet);
    }
    if !t.is_forest() || t.components().len() != 1 || t.circles() != 0 {
        return Err(RewriteError::NotATree);
    }
    let dim = (1..=(n.saturating_sub(2) as usize)).product::<usize>().max(1);
    let mut coords = vec![Rat::zero(); dim];
    if n == 2 {
        coords[0] = rat(1);
        return Ok(coords);
    }
    let word = tree_word(t)?;
    for (w, c) in normalize_word(&word) {
        debug_assert_eq!(*w.last().unwrap(), n, "normal words end with the top label");
        let sigma = &w[..w.len() - 1];
        coords[lex_rank(sigma)] += rat(c);
    }
    Ok(coords)
}

/// Coordinate form of a combination of connected trees; `None` when some
/// term is disconnected (and so lies outside the connected-tree span).
pub fn normalize_tree_combination(
    combo: &DiagramCombination,
    n: u32,
) -> Result<Option<Vec<Rat>>, RewriteError> {
    let dim = (1..=(n.saturating_sub(2) as usize)).product::<usize>().max(1);
    let mut acc = vec![Rat::zero(); dim];
    for (d, c) in combo.iter() {
        if d.components().len() != 1 || d.circles() != 0 {
            return Ok(None);
        }
        let coords = ihx_normalize(d, n)?;
        for (a, x) in acc.iter_mut().zip(coords) {
            *a += c * x;
        }
    }
    Ok(Some(acc))
}

// ---------------------------------------------------------------------------
// Loop reduction
// ---------------------------------------------------------------------------

/// Shortest cycle through the trivalent subgraph as a sorted edge list.
fn minimal_cycle(d: &JacobiDiagram) -> Option<Vec<(u32, u32)>> {
    let mut edges = cycle_edges(d)?;
    edges.sort_unstable();
    Some(edges)
}

/// Expresses a diagram as a combination of circle-free forests with the
/// same weight: circles contribute factors of 3, length-1 cycles die by
/// antisymmetry, longer cycles are split by the CV relation at their
/// smallest edge, recursing on both terms.
pub fn reduce_to_forests(d: &JacobiDiagram) -> DiagramCombination {
    let mut out = DiagramCombination::new();
    match d.canonical() {
        Canonical::Zero => out,
        Canonical::NonZero { diagram, sign, .. } => {
            let factor = rat(3).pow(diagram.circles() as i32) * rat(sign as i64);
            reduce_rec(&diagram.without_circles(), &factor, &mut out);
            out
        }
    }
}

fn reduce_rec(d: &JacobiDiagram, coeff: &Rat, out: &mut DiagramCombination) {
    debug_assert_eq!(d.circles(), 0);
    match minimal_cycle(d) {
        None => out.add(d, coeff.clone()),
        Some(cycle) => {
            if cycle.len() == 1 {
                // Self-loop: zero by antisymmetry (also caught by
                // canonicalization).
                return;
            }
            let e = cycle[0];
            let combo = cv_expand(d, e).expect("cycle edge is internal");
            for (term, c) in combo.iter() {
                let factor = coeff * c * rat(3).pow(term.circles() as i32);
                reduce_rec(&term.without_circles(), &factor, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{linear_tree, linear_tree_basis, one_loop_diagrams, strut};
    use crate::tensor::{SlotBasis, Tensor};
    use crate::weight::weight_direct;

    fn recombine(coords: &[Rat], n: u32) -> crate::tensor::ExactTensor {
        let basis = linear_tree_basis(n);
        let mut acc = Tensor::zero(vec![SlotBasis::EXT; n as usize]);
        for (c, b) in coords.iter().zip(&basis) {
            if !c.is_zero() {
                acc = acc.add(&weight_direct(b, n).unwrap().tensor.scale(c));
            }
        }
        acc
    }

    #[test]
    fn basis_trees_are_fixed_points() {
        for n in 2..=5u32 {
            for (i, t) in linear_tree_basis(n).iter().enumerate() {
                let coords = ihx_normalize(t, n).unwrap();
                for (j, c) in coords.iter().enumerate() {
                    assert_eq!(*c, rat((i == j) as i64), "n={n} tree {i} coord {j}");
                }
            }
        }
    }

    #[test]
    fn as_sign_on_reversed_y() {
        // One trivalent vertex with cyclic order (1, 3, 2): the reversal of
        // the basis Y, so its coordinates are -1 on (1, 2, 3).
        let d = linear_tree(&[1, 3, 2]).unwrap();
        // (1,3,2) as a cyclic word equals (1,2,3) reversed.
        let coords = ihx_normalize(&d, 3).unwrap();
        assert_eq!(coords, vec![rat(-1)]);
    }

    #[test]
    fn swapped_ends_tree_normalizes_consistently() {
        let d = linear_tree(&[2, 1, 3, 4]).unwrap();
        let coords = ihx_normalize(&d, 4).unwrap();
        assert!(coords.iter().all(|c| c.is_zero() || c == &rat(1) || c == &rat(-1)));
        let got = recombine(&coords, 4);
        let want = weight_direct(&d, 4).unwrap().tensor;
        assert_eq!(got, want);
    }

    #[test]
    fn normalization_preserves_weight_for_random_shapes() {
        // Every planted shape on 5 and 6 labels, attached to leaf 1.
        for n in [5u32, 6] {
            let labels: Vec<u32> = (2..=n).collect();
            for shape in crate::diagram::planted_trees(&labels) {
                let mut b = crate::diagram::DiagramBuilder::new();
                let root = b.planted(&shape);
                let l1 = b.leaf(1);
                b.connect(l1, root);
                let d = b.finish().unwrap();
                let coords = ihx_normalize(&d, n).unwrap();
                assert_eq!(recombine(&coords, n), weight_direct(&d, n).unwrap().tensor);
            }
        }
    }

    #[test]
    fn normalization_is_idempotent_on_combinations() {
        let d = linear_tree(&[3, 1, 4, 2, 5]).unwrap();
        let coords = ihx_normalize(&d, 5).unwrap();
        // Re-normalizing each basis tree reproduces the same coordinates.
        let basis = linear_tree_basis(5);
        let mut again = vec![Rat::zero(); coords.len()];
        for (c, b) in coords.iter().zip(&basis) {
            let unit = ihx_normalize(b, 5).unwrap();
            for (a, u) in again.iter_mut().zip(unit) {
                *a += c * u;
            }
        }
        assert_eq!(coords, again);
    }

    #[test]
    fn reduce_to_forests_basics() {
        let t = linear_tree(&[1, 2, 3, 4]).unwrap();
        let red = reduce_to_forests(&t);
        assert_eq!(red.len(), 1);
        let (d0, c0) = red.iter().next().unwrap();
        assert_eq!(c0, &rat(1));
        assert_eq!(d0.canonical(), t.canonical());

        let with_circle = strut(1, 2).with_extra_circles(1);
        let red = reduce_to_forests(&with_circle);
        assert_eq!(red.len(), 1);
        let (d0, c0) = red.iter().next().unwrap();
        assert_eq!(c0, &rat(3));
        assert_eq!(d0.circles(), 0);
    }

    #[test]
    fn reduce_preserves_weight_on_one_loop() {
        for d in one_loop_diagrams(5) {
            let red = reduce_to_forests(&d);
            let direct = weight_direct(&d, 5).unwrap().tensor;
            let mut acc = Tensor::zero(vec![SlotBasis::EXT; 5]);
            for (term, c) in red.iter() {
                assert!(term.is_forest(), "reduction term is a forest");
                acc = acc.add(&weight_direct(term, 5).unwrap().tensor.scale(c));
            }
            assert_eq!(acc, direct, "weight preserved under forest reduction");
        }
    }

    #[test]
    fn reduction_terminates_lexicographically() {
        // Betti number strictly drops across the full reduction: every
        // output is a forest.
        for d in one_loop_diagrams(4) {
            for (term, _) in reduce_to_forests(&d).iter() {
                assert!(term.is_forest());
            }
        }
    }
}
