//! Sparse multi-slot tensors over exact scalars, with tensor product, slot
//! permutation, contraction against a bilinear pairing table, and the
//! adjoint sl2 action used for invariance checks.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactmath::{format_rat, rat, ratio, QFrac, Rat};

/// Fixed ordered bases a tensor slot can carry.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum SlotBasis {
    /// sl2 with ordered basis (h, e, f).
    SL2,
    /// The unital extension with ordered basis (1, h, e, f).
    EXT,
    /// The 3-dimensional irreducible U_q module, basis (v^2, v^0, v^-2).
    V2,
    /// The 2-dimensional irreducible U_q module, basis (v^1, v^-1).
    V1,
}

impl SlotBasis {
    pub fn dim(self) -> usize {
        match self {
            SlotBasis::SL2 | SlotBasis::V2 => 3,
            SlotBasis::EXT => 4,
            SlotBasis::V1 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SlotBasis::SL2 => "SL2",
            SlotBasis::EXT => "EXT",
            SlotBasis::V2 => "V2",
            SlotBasis::V1 => "V1",
        }
    }

    pub fn label(self, index: u8) -> &'static str {
        match self {
            SlotBasis::SL2 => ["h", "e", "f"][index as usize],
            SlotBasis::EXT => ["1", "h", "e", "f"][index as usize],
            SlotBasis::V2 => ["v2", "v0", "v-2"][index as usize],
            SlotBasis::V1 => ["v1", "v-1"][index as usize],
        }
    }
}

/// Indices into the SL2 basis.
pub const H: u8 = 0;
pub const E: u8 = 1;
pub const F: u8 = 2;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("slot mismatch: {0}")]
    SlotMismatch(String),
}

/// Scalar requirements for tensor entries.
pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
{
    fn from_int(n: i64) -> Self;
}

impl Scalar for Rat {
    fn from_int(n: i64) -> Self {
        rat(n)
    }
}

impl Scalar for QFrac {
    fn from_int(n: i64) -> Self {
        QFrac::from_int(n)
    }
}

/// A sparse tensor with one basis index per slot. No zero entries stored.
#[derive(Clone, PartialEq, Debug)]
pub struct Tensor<S: Scalar> {
    slots: Vec<SlotBasis>,
    entries: BTreeMap<Vec<u8>, S>,
}

/// The rational-coefficient tensors of the weight-system side.
pub type ExactTensor = Tensor<Rat>;
/// Laurent-fraction tensors of the graphical-calculus side.
pub type QTensor = Tensor<QFrac>;

impl<S: Scalar> Tensor<S> {
    pub fn zero(slots: Vec<SlotBasis>) -> Self {
        Tensor {
            slots,
            entries: BTreeMap::new(),
        }
    }

    /// The 0-slot tensor holding a single scalar.
    pub fn scalar(value: S) -> Self {
        let mut t = Tensor::zero(Vec::new());
        t.add_entry(Vec::new(), value);
        t
    }

    pub fn slots(&self) -> &[SlotBasis] {
        &self.slots
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u8>, &S)> {
        self.entries.iter()
    }

    pub fn get(&self, idx: &[u8]) -> S {
        self.entries.get(idx).cloned().unwrap_or_else(S::zero)
    }

    /// Adds `value` at `idx`, dropping the entry if it cancels to zero.
    pub fn add_entry(&mut self, idx: Vec<u8>, value: S) {
        debug_assert_eq!(idx.len(), self.slots.len());
        debug_assert!(idx
            .iter()
            .zip(&self.slots)
            .all(|(&i, s)| (i as usize) < s.dim()));
        if value.is_zero() {
            return;
        }
        match self.entries.get_mut(&idx) {
            Some(v) => {
                let sum = v.clone() + value;
                if sum.is_zero() {
                    self.entries.remove(&idx);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.entries.insert(idx, value);
            }
        }
    }

    pub fn set_entry(&mut self, idx: Vec<u8>, value: S) {
        if value.is_zero() {
            self.entries.remove(&idx);
        } else {
            debug_assert_eq!(idx.len(), self.slots.len());
            self.entries.insert(idx, value);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.slots, other.slots, "adding tensors of unequal shape");
        let mut out = self.clone();
        for (idx, v) in &other.entries {
            out.add_entry(idx.clone(), v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&(-S::one())))
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Tensor::zero(self.slots.clone());
        }
        let mut out = Tensor::zero(self.slots.clone());
        for (idx, v) in &self.entries {
            out.add_entry(idx.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Tensor<T> {
        let mut out = Tensor::zero(self.slots.clone());
        for (idx, v) in &self.entries {
            out.add_entry(idx.clone(), f(v));
        }
        out
    }

    /// Standard multilinear tensor product; slots of `other` come after ours.
    pub fn tensor_product(&self, other: &Self) -> Self {
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        let mut out = Tensor::zero(slots);
        for (ia, va) in &self.entries {
            for (ib, vb) in &other.entries {
                let mut idx = ia.clone();
                idx.extend_from_slice(ib);
                out.add_entry(idx, va.clone() * vb.clone());
            }
        }
        out
    }

    /// Moves slot `k` to position `target[k]`. Composition law:
    /// `t.permute(sigma).permute(tau) == t.permute(tau o sigma)`.
    pub fn permute_slots(&self, target: &[usize]) -> Self {
        assert_eq!(target.len(), self.slots.len(), "permutation arity mismatch");
        let n = target.len();
        let mut seen = vec![false; n];
        for &t in target {
            assert!(t < n && !seen[t], "not a permutation");
            seen[t] = true;
        }
        let mut slots = vec![SlotBasis::SL2; n];
        for (k, &t) in target.iter().enumerate() {
            slots[t] = self.slots[k];
        }
        let mut out = Tensor::zero(slots);
        for (idx, v) in &self.entries {
            let mut new_idx = vec![0u8; n];
            for (k, &t) in target.iter().enumerate() {
                new_idx[t] = idx[k];
            }
            out.add_entry(new_idx, v.clone());
        }
        out
    }

    /// Contracts slots `i` and `j` through the pairing `p`, removing both.
    pub fn contract(&self, i: usize, j: usize, p: &Pairing<S>) -> Result<Self, TensorError> {
        if i == j || i >= self.slots.len() || j >= self.slots.len() {
            return Err(TensorError::SlotMismatch(format!(
                "contract slots {i}, {j} of a {}-slot tensor",
                self.slots.len()
            )));
        }
        if self.slots[i] != p.left || self.slots[j] != p.right {
            return Err(TensorError::SlotMismatch(format!(
                "pairing {} expects ({}, {}), got ({}, {})",
                p.name,
                p.left.name(),
                p.right.name(),
                self.slots[i].name(),
                self.slots[j].name()
            )));
        }
        let slots: Vec<SlotBasis> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, s)| *s)
            .collect();
        let mut out = Tensor::zero(slots);
        for (idx, v) in &self.entries {
            let w = p.value(idx[i], idx[j]);
            if w.is_zero() {
                continue;
            }
            let reduced: Vec<u8> = idx
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i && *k != j)
                .map(|(_, &x)| x)
                .collect();
            out.add_entry(reduced, v.clone() * w);
        }
        Ok(out)
    }

    /// JSON form: slot names plus entries sorted by index tuple.
    pub fn to_json(&self, scalar: impl Fn(&S) -> Value) -> Value {
        json!({
            "slots": self.slots.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "entries": self
                .entries
                .iter()
                .map(|(idx, v)| json!({ "idx": idx, "coeff": scalar(v) }))
                .collect::<Vec<_>>(),
        })
    }
}

impl ExactTensor {
    pub fn to_json_rat(&self) -> Value {
        self.to_json(|r| Value::String(format_rat(r)))
    }

    /// Restricts an EXT tensor to SL2 slots; fails if any entry touches the
    /// unit component.
    pub fn ext_to_sl2(&self) -> Option<ExactTensor> {
        if self.slots.iter().any(|&s| s != SlotBasis::EXT) {
            return None;
        }
        let mut out = Tensor::zero(vec![SlotBasis::SL2; self.slots.len()]);
        for (idx, v) in &self.entries {
            if idx.iter().any(|&x| x == 0) {
                return None;
            }
            out.add_entry(idx.iter().map(|&x| x - 1).collect(), v.clone());
        }
        Some(out)
    }

    /// Embeds an SL2 tensor into EXT slots.
    pub fn sl2_to_ext(&self) -> ExactTensor {
        assert!(self.slots.iter().all(|&s| s == SlotBasis::SL2));
        let mut out = Tensor::zero(vec![SlotBasis::EXT; self.slots.len()]);
        for (idx, v) in &self.entries {
            out.add_entry(idx.iter().map(|&x| x + 1).collect(), v.clone());
        }
        out
    }
}

/// A total bilinear pairing table on a pair of slot bases.
#[derive(Clone, Debug, PartialEq)]
pub struct Pairing<S: Scalar> {
    pub name: String,
    pub left: SlotBasis,
    pub right: SlotBasis,
    table: Vec<Vec<S>>,
}

impl<S: Scalar> Pairing<S> {
    pub fn new(name: &str, left: SlotBasis, right: SlotBasis, table: Vec<Vec<S>>) -> Self {
        assert_eq!(table.len(), left.dim());
        assert!(table.iter().all(|r| r.len() == right.dim()));
        Pairing {
            name: name.to_string(),
            left,
            right,
            table,
        }
    }

    pub fn value(&self, i: u8, j: u8) -> S {
        self.table[i as usize][j as usize].clone()
    }
}

/// The bilinear form with kappa(h,h) = 2, kappa(e,f) = kappa(f,e) = 1 and
/// all other pairs zero.
pub fn kappa() -> Pairing<Rat> {
    Pairing::new(
        "kappa",
        SlotBasis::SL2,
        SlotBasis::SL2,
        vec![
            vec![rat(2), rat(0), rat(0)],
            vec![rat(0), rat(0), rat(1)],
            vec![rat(0), rat(1), rat(0)],
        ],
    )
}

/// The quadratic Casimir tensor (1/2) h@h + e@f + f@e.
pub fn casimir() -> ExactTensor {
    let mut t = Tensor::zero(vec![SlotBasis::SL2; 2]);
    t.add_entry(vec![H, H], ratio(1, 2));
    t.add_entry(vec![E, F], rat(1));
    t.add_entry(vec![F, E], rat(1));
    t
}

/// The totally antisymmetric bracket tensor: the alternating sum over
/// permutations of h@e@f.
pub fn bracket_tensor() -> ExactTensor {
    let mut t = Tensor::zero(vec![SlotBasis::SL2; 3]);
    t.add_entry(vec![H, E, F], rat(1));
    t.add_entry(vec![E, F, H], rat(1));
    t.add_entry(vec![F, H, E], rat(1));
    t.add_entry(vec![H, F, E], rat(-1));
    t.add_entry(vec![F, E, H], rat(-1));
    t.add_entry(vec![E, H, F], rat(-1));
    t
}

/// Single-generator adjoint action on one basis element of SL2 or EXT.
/// Returns the image as (basis index, coefficient) pairs, using the bracket
/// [h,e] = 2e, [h,f] = -2f, [e,f] = h; the EXT unit maps to zero.
fn ad_single(x: u8, basis: SlotBasis, idx: u8) -> Vec<(u8, Rat)> {
    let sl2_idx = match basis {
        SlotBasis::SL2 => idx,
        SlotBasis::EXT => {
            if idx == 0 {
                return Vec::new();
            }
            idx - 1
        }
        _ => panic!("adjoint action needs SL2 or EXT slots"),
    };
    let image: Vec<(u8, Rat)> = match (x, sl2_idx) {
        (H, H) => vec![],
        (H, E) => vec![(E, rat(2))],
        (H, F) => vec![(F, rat(-2))],
        (E, H) => vec![(E, rat(-2))],
        (E, E) => vec![],
        (E, F) => vec![(H, rat(1))],
        (F, H) => vec![(F, rat(2))],
        (F, E) => vec![(H, rat(-1))],
        (F, F) => vec![],
        _ => unreachable!(),
    };
    match basis {
        SlotBasis::SL2 => image,
        SlotBasis::EXT => image.into_iter().map(|(i, c)| (i + 1, c)).collect(),
        _ => unreachable!(),
    }
}

/// Adjoint action of a generator (H, E or F) on a tensor over SL2/EXT slots,
/// acting as a derivation across the slots.
pub fn adjoint_act(x: u8, t: &ExactTensor) -> ExactTensor {
    assert!(
        t.slots()
            .iter()
            .all(|&s| s == SlotBasis::SL2 || s == SlotBasis::EXT),
        "adjoint action needs SL2 or EXT slots"
    );
    let mut out = Tensor::zero(t.slots().to_vec());
    for (idx, v) in t.iter() {
        for slot in 0..idx.len() {
            for (new_b, c) in ad_single(x, t.slots()[slot], idx[slot]) {
                let mut new_idx = idx.clone();
                new_idx[slot] = new_b;
                out.add_entry(new_idx, v.clone() * c);
            }
        }
    }
    out
}

/// True iff the tensor is killed by all three adjoint generators.
pub fn is_invariant(t: &ExactTensor) -> bool {
    [H, E, F].iter().all(|&x| adjoint_act(x, t).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_table_values() {
        let k = kappa();
        assert_eq!(k.value(H, H), rat(2));
        assert_eq!(k.value(E, F), rat(1));
        assert_eq!(k.value(F, E), rat(1));
        assert_eq!(k.value(E, E), rat(0));
        assert_eq!(k.value(H, E), rat(0));
        assert_eq!(k.value(H, F), rat(0));
        assert_eq!(k.value(F, F), rat(0));
    }

    #[test]
    fn casimir_entries() {
        let c = casimir();
        assert_eq!(c.get(&[H, H]), ratio(1, 2));
        assert_eq!(c.get(&[E, F]), rat(1));
        assert_eq!(c.get(&[H, E]), rat(0));
        assert_eq!(c.nnz(), 3);
    }

    #[test]
    fn bracket_entries() {
        let b = bracket_tensor();
        assert_eq!(b.get(&[H, E, F]), rat(1));
        assert_eq!(b.get(&[H, F, E]), rat(-1));
        assert_eq!(b.get(&[H, H, H]), rat(0));
        assert_eq!(b.nnz(), 6);
    }

    #[test]
    fn casimir_is_swap_symmetric() {
        let c = casimir();
        assert_eq!(c.permute_slots(&[1, 0]), c);
    }

    #[test]
    fn scalar_product_scales() {
        let t = casimir();
        let three = Tensor::scalar(rat(3));
        let prod = three.tensor_product(&t);
        assert_eq!(prod, t.scale(&rat(3)));
    }

    #[test]
    fn invariance_of_generators() {
        assert!(is_invariant(&casimir()));
        assert!(is_invariant(&bracket_tensor()));
        let mut hh = Tensor::zero(vec![SlotBasis::SL2; 2]);
        hh.add_entry(vec![H, H], rat(1));
        assert!(!is_invariant(&hh));
        // ad_e(h@h) = -2(e@h + h@e)
        let img = adjoint_act(E, &hh);
        assert_eq!(img.get(&[E, H]), rat(-2));
        assert_eq!(img.get(&[H, E]), rat(-2));
        assert_eq!(img.nnz(), 2);
    }

    #[test]
    fn adjoint_on_ff() {
        let mut ff = Tensor::zero(vec![SlotBasis::SL2; 2]);
        ff.add_entry(vec![F, F], rat(1));
        let img = adjoint_act(E, &ff);
        assert_eq!(img.get(&[H, F]), rat(1));
        assert_eq!(img.get(&[F, H]), rat(1));
        assert_eq!(img.nnz(), 2);
    }

    /// Brute-force contraction used as an oracle: four nested loops over the
    /// dense index space.
    fn contract_oracle(t: &ExactTensor, i: usize, j: usize) -> ExactTensor {
        let k = kappa();
        let kept: Vec<usize> = (0..t.num_slots()).filter(|&s| s != i && s != j).collect();
        let mut out = Tensor::zero(kept.iter().map(|&s| t.slots()[s]).collect());
        let dims: Vec<usize> = t.slots().iter().map(|s| s.dim()).collect();
        let mut idx = vec![0u8; t.num_slots()];
        loop {
            let v = t.get(&idx);
            if !v.is_zero() {
                let w = k.value(idx[i], idx[j]);
                if !w.is_zero() {
                    out.add_entry(kept.iter().map(|&s| idx[s]).collect(), v * w);
                }
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return out;
                }
                idx[pos] += 1;
                if (idx[pos] as usize) < dims[pos] {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn contract_casimir_pair_matches_oracle() {
        let cc = casimir().tensor_product(&casimir());
        let got = cc.contract(1, 2, &kappa()).unwrap();
        let want = contract_oracle(&cc, 1, 2);
        assert_eq!(got, want);
        // Contracting the middle two slots of c@c by kappa returns c itself:
        // kappa is the inverse tensor of the Casimir.
        assert_eq!(got, casimir());
    }

    #[test]
    fn contract_rejects_bad_slots() {
        let c = casimir();
        assert!(c.contract(0, 0, &kappa()).is_err());
        assert!(c.contract(0, 2, &kappa()).is_err());
    }
}
