//! Exact sparse matrices over the rationals: rank, kernel, span solving.
//!
//! Rank and kernel go through fraction-free (Bareiss) elimination on
//! denominator-cleared integer rows, with pivot selection preferring the
//! sparsest eligible row. Every division in the elimination is asserted
//! exact.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{normalize_vector, Rat};

/// Sparse row: strictly increasing column indices, no zero values.
type IntRow = Vec<(u32, BigInt)>;

/// A sparse matrix over the rationals. Entries never store zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(u32, u32), Rat>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    /// Builds the matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vec<Rat>]) -> Self {
        let mut m = Self::new(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[Vec<Rat>]) -> Self {
        let mut m = Self::new(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "row length mismatch");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn set(&mut self, row: usize, col: usize, value: Rat) {
        assert!(row < self.rows && col < self.cols, "index out of range");
        let key = (row as u32, col as u32);
        if value.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Rat {
        self.entries
            .get(&(row as u32, col as u32))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        self.entries
            .iter()
            .map(|(&(r, c), v)| (r as usize, c as usize, v))
    }

    /// Matrix-vector product `M v`.
    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![Rat::zero(); self.rows];
        for (&(r, c), a) in &self.entries {
            let x = &v[c as usize];
            if !x.is_zero() {
                out[r as usize] += a * x;
            }
        }
        out
    }

    /// Rows with denominators cleared and content stripped. Row scaling
    /// preserves both rank and kernel.
    fn int_rows(&self) -> Vec<IntRow> {
        let mut rows: Vec<Vec<(u32, Rat)>> = vec![Vec::new(); self.rows];
        for (&(r, c), v) in &self.entries {
            rows[r as usize].push((c, v.clone()));
        }
        rows.into_iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                let vals: Vec<Rat> = r.iter().map(|(_, v)| v.clone()).collect();
                let ints = normalize_vector(&vals);
                r.iter().map(|(c, _)| *c).zip(ints).collect()
            })
            .collect()
    }

    /// Exact rank over the rationals.
    pub fn rank(&self) -> usize {
        bareiss_echelon(self.int_rows()).len()
    }

    /// Exact basis of the right null space; `cols - rank` vectors, each
    /// integral, primitive and satisfying `M v = 0`.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        let echelon = bareiss_echelon(self.int_rows());
        let pivot_cols: Vec<u32> = echelon.iter().map(|r| r[0].0).collect();

        // Reduced row echelon form over the rationals: pivots scaled to one,
        // entries above each pivot cleared.
        let mut rref: Vec<BTreeMap<u32, Rat>> = echelon
            .iter()
            .map(|row| {
                let p = Rat::from_integer(row[0].1.clone());
                row.iter()
                    .map(|(c, v)| (*c, Rat::from_integer(v.clone()) / &p))
                    .collect()
            })
            .collect();
        for i in (0..rref.len()).rev() {
            let pc = pivot_cols[i];
            let pivot_row = rref[i].clone();
            for j in 0..i {
                if let Some(f) = rref[j].get(&pc).cloned() {
                    for (c, v) in &pivot_row {
                        let delta = &f * v;
                        let e = rref[j].entry(*c).or_insert_with(Rat::zero);
                        *e -= delta;
                        if e.is_zero() {
                            rref[j].remove(c);
                        }
                    }
                }
            }
        }

        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &c in &pivot_cols {
                v[c as usize] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![Rat::zero(); self.cols];
            v[free] = Rat::one();
            for (i, row) in rref.iter().enumerate() {
                if let Some(a) = row.get(&(free as u32)) {
                    v[pivot_cols[i] as usize] = -a.clone();
                }
            }
            let ints = normalize_vector(&v);
            basis.push(ints.into_iter().map(Rat::from_integer).collect());
        }
        basis
    }
}

/// Fraction-free forward elimination. Returns the pivot rows in elimination
/// order; each row's first entry is its pivot. Pivot selection: smallest
/// remaining leading column, then the sparsest row on that column.
fn bareiss_echelon(rows: Vec<IntRow>) -> Vec<IntRow> {
    let mut active: Vec<IntRow> = rows.into_iter().filter(|r| !r.is_empty()).collect();
    let mut done: Vec<IntRow> = Vec::new();
    let mut prev = BigInt::one();
    while !active.is_empty() {
        let pcol = active.iter().map(|r| r[0].0).min().unwrap();
        let idx = active
            .iter()
            .enumerate()
            .filter(|(_, r)| r[0].0 == pcol)
            .min_by_key(|(_, r)| r.len())
            .map(|(i, _)| i)
            .unwrap();
        let pivot_row = active.swap_remove(idx);
        let p = pivot_row[0].1.clone();
        for row in &mut active {
            let f = if row[0].0 == pcol {
                row[0].1.clone()
            } else {
                BigInt::zero()
            };
            *row = fraction_free_combine(&p, row, &f, &pivot_row, &prev);
        }
        active.retain(|r| !r.is_empty());
        done.push(pivot_row);
        prev = p;
    }
    done
}

/// `(p * row - f * pivot) / prev`, entrywise on sparse rows. The division is
/// exact by the Bareiss minor identity; this is asserted.
fn fraction_free_combine(
    p: &BigInt,
    row: &IntRow,
    f: &BigInt,
    pivot: &IntRow,
    prev: &BigInt,
) -> IntRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let mut a = row.iter().peekable();
    let mut b = pivot.iter().peekable();
    let mut push = |col: u32, val: BigInt| {
        if !val.is_zero() {
            let (q, r) = val.div_rem(prev);
            assert!(r.is_zero(), "fraction-free elimination divided inexactly");
            out.push((col, q));
        }
    };
    loop {
        match (a.peek(), b.peek()) {
            (Some((ca, va)), Some((cb, vb))) => {
                if ca < cb {
                    push(*ca, p * va);
                    a.next();
                } else if cb < ca {
                    if !f.is_zero() {
                        push(*cb, -(f * vb));
                    }
                    b.next();
                } else {
                    push(*ca, p * va - f * vb);
                    a.next();
                    b.next();
                }
            }
            (Some((ca, va)), None) => {
                push(*ca, p * va);
                a.next();
            }
            (None, Some((cb, vb))) => {
                if !f.is_zero() {
                    push(*cb, -(f * vb));
                }
                b.next();
            }
            (None, None) => break,
        }
    }
    out
}

/// Result of [`solve_in_span`].
#[derive(Clone, Debug, PartialEq)]
pub enum SpanSolution {
    /// Coordinates of the target in the given basis (free coordinates zero).
    Coords(Vec<Rat>),
    NotInSpan,
}

/// Solves `target = sum_i coords[i] * basis[i]` exactly, if possible.
pub fn solve_in_span(basis: &[Vec<Rat>], target: &[Rat]) -> SpanSolution {
    let m = target.len();
    for b in basis {
        assert_eq!(b.len(), m, "span vectors must share the target's length");
    }
    let k = basis.len();
    // Augmented system over the unknown coordinates: one equation per
    // component of the target.
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<Rat> = Vec::with_capacity(k + 1);
        for b in basis {
            row.push(b[i].clone());
        }
        row.push(target[i].clone());
        rows.push(row);
    }

    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut next_row = 0;
    for col in 0..k {
        let Some(r) = (next_row..m).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next_row, r);
        let p = rows[next_row][col].clone();
        for j in col..=k {
            rows[next_row][j] = &rows[next_row][j] / &p;
        }
        for r2 in 0..m {
            if r2 != next_row && !rows[r2][col].is_zero() {
                let f = rows[r2][col].clone();
                for j in col..=k {
                    let delta = &f * &rows[next_row][j];
                    rows[r2][j] = &rows[r2][j] - &delta;
                }
            }
        }
        pivots.push((next_row, col));
        next_row += 1;
        if next_row == m {
            break;
        }
    }
    // Inconsistent iff some zero row has a nonzero augmented entry.
    for r in next_row..m {
        if !rows[r][k].is_zero() {
            return SpanSolution::NotInSpan;
        }
    }
    let mut coords = vec![Rat::zero(); k];
    for &(r, c) in &pivots {
        coords[c] = rows[r][k].clone();
    }
    SpanSolution::Coords(coords)
}

/// Incremental integer row echelon, used to accumulate the rank of a stream
/// of vectors with early exit. Rows are content-stripped after every
/// reduction; no divisions are performed, so everything stays exact.
#[derive(Clone, Debug, Default)]
pub struct IntEchelon {
    rows: BTreeMap<u32, IntRow>,
}

impl IntEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the stored rows; the residual is zero iff `v`
    /// lies in the current span.
    pub fn reduce(&self, v: &[Rat]) -> IntRow {
        let mut row: IntRow = normalize_vector(v)
            .into_iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(c, x)| (c as u32, x))
            .collect();
        self.reduce_int(&mut row);
        row
    }

    fn reduce_int(&self, row: &mut IntRow) {
        while let Some(&(lead, _)) = row.first() {
            let Some(basis_row) = self.rows.get(&lead) else {
                break;
            };
            let p = basis_row[0].1.clone();
            let f = row[0].1.clone();
            *row = combine_strip(&p, row, &f, basis_row);
        }
    }

    /// Inserts `v`; returns true when the rank grew.
    pub fn insert(&mut self, v: &[Rat]) -> bool {
        let row = self.reduce(v);
        self.insert_reduced(row)
    }

    fn insert_reduced(&mut self, row: IntRow) -> bool {
        if row.is_empty() {
            return false;
        }
        let lead = row[0].0;
        self.rows.insert(lead, row);
        true
    }
}

/// `p * row - f * pivot` followed by content stripping.
fn combine_strip(p: &BigInt, row: &IntRow, f: &BigInt, pivot: &IntRow) -> IntRow {
    let mut out = fraction_free_combine(p, row, f, pivot, &BigInt::one());
    let mut content = BigInt::zero();
    for (_, v) in &out {
        content = content.gcd(v);
        if content.is_one() {
            return out;
        }
    }
    if content.is_zero() || content.is_one() {
        return out;
    }
    if let Some((_, v)) = out.first() {
        if v.is_negative() {
            content = -content;
        }
    }
    for (_, v) in &mut out {
        *v /= &content;
    }
    out
}

/// Membership tests against the span of a fixed set of vectors.
pub struct BasisSolver {
    echelon: IntEchelon,
}

impl BasisSolver {
    pub fn new<'a>(vectors: impl IntoIterator<Item = &'a Vec<Rat>>) -> Self {
        let mut echelon = IntEchelon::new();
        for v in vectors {
            echelon.insert(v);
        }
        BasisSolver { echelon }
    }

    pub fn rank(&self) -> usize {
        self.echelon.rank()
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.echelon.reduce(v).is_empty()
    }
}

/// Row echelon over the prime field `Z/p`. Rank over `Z/p` is a lower bound
/// for the rational rank, so reaching a known upper bound certifies the
/// exact rank; this is used only where such a certificate is combined with
/// exact verification of the bound.
#[derive(Clone, Debug)]
pub struct ModEchelon {
    p: u64,
    rows: BTreeMap<u32, Vec<(u32, u64)>>,
}

impl ModEchelon {
    pub fn new(p: u64) -> Self {
        assert!(p > 1 && p < (1 << 31), "modulus out of range");
        ModEchelon {
            p,
            rows: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn modv(&self, x: &BigInt) -> u64 {
        let p = BigInt::from(self.p);
        let r = x.mod_floor(&p);
        let (_, digits) = r.to_u64_digits();
        digits.first().copied().unwrap_or(0)
    }

    /// Inserts the reduction of an integer sparse row; returns true when the
    /// mod-p rank grew.
    pub fn insert_int_row(&mut self, row: &IntRow) -> bool {
        let mut v: Vec<(u32, u64)> = row
            .iter()
            .map(|(c, x)| (*c, self.modv(x)))
            .filter(|(_, x)| *x != 0)
            .collect();
        let p = self.p as u128;
        loop {
            let Some(&(lead, vl)) = v.first() else {
                return false;
            };
            let Some(basis) = self.rows.get(&lead) else {
                break;
            };
            // v <- v - (vl / basis_lead) * basis
            let inv = mod_inv(basis[0].1, self.p);
            let factor = (vl as u128 * inv as u128 % p) as u64;
            let mut out: Vec<(u32, u64)> = Vec::with_capacity(v.len() + basis.len());
            let mut a = v.iter().peekable();
            let mut b = basis.iter().peekable();
            loop {
                match (a.peek(), b.peek()) {
                    (Some((ca, va)), Some((cb, vb))) => {
                        if ca < cb {
                            out.push((*ca, *va));
                            a.next();
                        } else if cb < ca {
                            let x = (p - (factor as u128 * *vb as u128 % p)) % p;
                            if x != 0 {
                                out.push((*cb, x as u64));
                            }
                            b.next();
                        } else {
                            let x = (*va as u128 + p - (factor as u128 * *vb as u128 % p)) % p;
                            if x != 0 {
                                out.push((*ca, x as u64));
                            }
                            a.next();
                            b.next();
                        }
                    }
                    (Some((ca, va)), None) => {
                        out.push((*ca, *va));
                        a.next();
                    }
                    (None, Some((cb, vb))) => {
                        let x = (p - (factor as u128 * *vb as u128 % p)) % p;
                        if x != 0 {
                            out.push((*cb, x as u64));
                        }
                        b.next();
                    }
                    (None, None) => break,
                }
            }
            v = out;
        }
        if v.is_empty() {
            return false;
        }
        self.rows.insert(v[0].0, v);
        true
    }
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // p is prime in all uses; Fermat.
    let mut base = a as u128;
    let mut exp = p - 2;
    let m = p as u128;
    let mut acc: u128 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{rat, ratio};

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(ExactMatrix::identity(3).rank(), 3);
        assert_eq!(ExactMatrix::new(2, 5).rank(), 0);
    }

    #[test]
    fn kernel_of_identity_is_empty() {
        assert!(ExactMatrix::identity(3).kernel_basis().is_empty());
    }

    #[test]
    fn kernel_of_row_sum() {
        let mut m = ExactMatrix::new(1, 2);
        m.set(0, 0, rat(1));
        m.set(0, 1, rat(1));
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert!(v[0] == -v[1].clone() && !v[0].is_zero());
        assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn solve_in_span_basic() {
        let basis = vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]];
        match solve_in_span(&basis, &[rat(3), rat(5)]) {
            SpanSolution::Coords(c) => assert_eq!(c, vec![rat(3), rat(5)]),
            SpanSolution::NotInSpan => panic!("expected solution"),
        }
        let basis = vec![vec![rat(1), rat(1)]];
        assert_eq!(
            solve_in_span(&basis, &[rat(1), rat(0)]),
            SpanSolution::NotInSpan
        );
    }

    #[test]
    fn solve_recombines_exactly() {
        let basis = vec![
            vec![ratio(1, 2), rat(3), rat(0)],
            vec![rat(1), rat(1), rat(1)],
            vec![rat(0), ratio(-2, 7), rat(4)],
        ];
        let target = vec![ratio(5, 2), rat(1), ratio(3, 7)];
        if let SpanSolution::Coords(c) = solve_in_span(&basis, &target) {
            let mut acc = vec![Rat::zero(); 3];
            for (alpha, b) in c.iter().zip(&basis) {
                for (slot, x) in acc.iter_mut().zip(b) {
                    *slot += alpha * x;
                }
            }
            assert_eq!(acc, target);
        } else {
            panic!("expected solution");
        }
    }

    #[test]
    fn int_echelon_matches_matrix_rank() {
        let mut m = ExactMatrix::new(3, 4);
        let data = [
            (0, 0, rat(2)),
            (0, 2, rat(-1)),
            (1, 0, rat(4)),
            (1, 2, rat(-2)),
            (2, 1, ratio(1, 3)),
            (2, 3, rat(7)),
        ];
        for (r, c, v) in data {
            m.set(r, c, v);
        }
        assert_eq!(m.rank(), 2);
        let mut e = IntEchelon::new();
        for r in 0..3 {
            let row: Vec<Rat> = (0..4).map(|c| m.get(r, c)).collect();
            e.insert(&row);
        }
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn mod_echelon_rank_lower_bound() {
        let mut e = ModEchelon::new(1_000_003);
        let rows: Vec<IntRow> = vec![
            vec![(0, BigInt::from(1)), (1, BigInt::from(2))],
            vec![(0, BigInt::from(2)), (1, BigInt::from(4))],
            vec![(1, BigInt::from(-1))],
        ];
        let mut rank = 0;
        for r in &rows {
            if e.insert_int_row(r) {
                rank += 1;
            }
        }
        assert_eq!(rank, 2);
    }
}
