//! Dense bit-packed linear algebra over GF(2).

use std::fmt;

use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("shape mismatch: {op} got {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("no solution: target outside column space")]
    NoSolution,
    #[error("infeasible completion in block {block}, row {row}")]
    Infeasible { block: String, row: usize },
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Fixed-length vector over GF(2), packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, idx: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in idx {
            v.flip(i);
        }
        v
    }

    /// Parses a string of `0`/`1`; spaces, `|` and `_` are skipped.
    pub fn parse(s: &str) -> Option<Self> {
        let mut bits = Vec::new();
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                ' ' | '|' | '_' | ',' => {}
                _ => return None,
            }
        }
        Some(Self::from_bools(&bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i % WORD);
        if b {
            self.words[i / WORD] |= m;
        } else {
            self.words[i / WORD] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut r = self.clone();
        r.xor_assign(other);
        r
    }

    pub fn and(&self, other: &BitVector) -> BitVector {
        assert_eq!(self.len, other.len);
        BitVector {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    /// Inner product mod 2.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "dot of unequal lengths");
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones();
        }
        acc & 1 == 1
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + b)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Copy of bits `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        let mut r = BitVector::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                r.set(i, true);
            }
        }
        r
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut r = BitVector::zeros(self.len + other.len);
        for i in self.iter_ones() {
            r.set(i, true);
        }
        for i in other.iter_ones() {
            r.set(self.len + i, true);
        }
        r
    }

    /// Lowest set index.
    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * WORD + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Row-major binary matrix; each row is a [`BitVector`].
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<BitVector>) -> Self {
        for r in &rows {
            assert_eq!(r.len(), cols, "row length mismatch");
        }
        BitMatrix { cols, rows }
    }

    /// Builds from rows written as `0`/`1` strings.
    pub fn parse_rows(rows: &[&str]) -> Self {
        let v: Vec<BitVector> = rows
            .iter()
            .map(|s| BitVector::parse(s).expect("bad bit string"))
            .collect();
        let cols = v.first().map_or(0, |r| r.len());
        Self::from_rows(cols, v)
    }

    pub fn from_dense(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let v = rows
            .iter()
            .map(|r| BitVector::from_bools(&r.iter().map(|&x| x & 1 == 1).collect::<Vec<_>>()))
            .collect();
        Self::from_rows(cols, v)
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, b: bool) {
        self.rows[r].set(c, b)
    }

    pub fn row(&self, r: usize) -> &BitVector {
        &self.rows[r]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut BitVector {
        &mut self.rows[r]
    }

    pub fn row_vecs(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn push_row(&mut self, r: BitVector) {
        assert_eq!(r.len(), self.cols);
        self.rows.push(r);
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_zero())
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            for j in r.iter_ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &BitVector) -> BitVector {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        let mut out = BitVector::zeros(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.dot(v) {
                out.set(i, true);
            }
        }
        out
    }

    /// `vᵀ · self`: XOR of the rows selected by `v`.
    pub fn combine_rows(&self, v: &BitVector) -> BitVector {
        assert_eq!(self.rows.len(), v.len());
        let mut out = BitVector::zeros(self.cols);
        for i in v.iter_ones() {
            out.xor_assign(&self.rows[i]);
        }
        out
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert!(self.rows.is_empty() || other.rows.is_empty() || self.cols == other.cols);
        let cols = if self.rows.is_empty() {
            other.cols.max(self.cols)
        } else {
            self.cols
        };
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        BitMatrix { cols, rows }
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.rows(), other.rows());
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.concat(b))
            .collect();
        BitMatrix {
            cols: self.cols + other.cols,
            rows,
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> BitMatrix {
        BitMatrix {
            cols: self.cols,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        row_reduce(self).1
    }

    /// True when `v` lies in the row space.
    pub fn rowspace_contains(&self, v: &BitVector) -> bool {
        let (red, rank, piv) = row_reduce(self);
        let mut w = v.clone();
        for (i, &p) in piv.iter().enumerate().take(rank) {
            if w.get(p) {
                w.xor_assign(red.row(i));
            }
        }
        w.is_zero()
    }

    /// Basis of the right null space `{x : self · x = 0}`.
    pub fn nullspace(&self) -> BitMatrix {
        let (red, rank, piv) = row_reduce(self);
        let mut is_piv = vec![false; self.cols];
        for &p in &piv {
            is_piv[p] = true;
        }
        let mut basis = Vec::new();
        for f in (0..self.cols).filter(|&c| !is_piv[c]) {
            let mut x = BitVector::zeros(self.cols);
            x.set(f, true);
            for (i, &p) in piv.iter().enumerate().take(rank) {
                if red.get(i, f) {
                    x.set(p, true);
                }
            }
            basis.push(x);
        }
        BitMatrix::from_rows(self.cols, basis)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

pub fn matmul(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    if a.cols() != b.rows() {
        return Err(Gf2Error::Shape {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = BitMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let mut acc = BitVector::zeros(b.cols());
        for k in a.row(i).iter_ones() {
            acc.xor_assign(b.row(k));
        }
        out.rows[i] = acc;
    }
    Ok(out)
}

/// Reduced row echelon form. Pivots are taken at the lowest available column.
/// Returns (reduced matrix with zero rows last, rank, pivot columns).
pub fn row_reduce(m: &BitMatrix) -> (BitMatrix, usize, Vec<usize>) {
    let mut r = m.clone();
    let nrows = r.rows();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..r.cols() {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&i| r.rows[i].get(c)) else {
            continue;
        };
        r.rows.swap(rank, p);
        let pivot_row = r.rows[rank].clone();
        for i in 0..nrows {
            if i != rank && r.rows[i].get(c) {
                r.rows[i].xor_assign(&pivot_row);
            }
        }
        pivots.push(c);
        rank += 1;
    }
    (r, rank, pivots)
}

/// Finds `x` with `a · x = s`; free variables are set to zero.
pub fn solve(a: &BitMatrix, s: &BitVector) -> Result<BitVector, Gf2Error> {
    if a.rows() != s.len() {
        return Err(Gf2Error::Shape {
            op: "solve",
            left: a.shape(),
            right: (s.len(), 1),
        });
    }
    let solver = Solver::new(a);
    solver.solve(s).ok_or(Gf2Error::NoSolution)
}

/// Precomputed elimination of `a` for repeated right-hand sides.
#[derive(Clone, Debug)]
pub struct Solver {
    cols: usize,
    /// Row operations applied to `a` during elimination.
    transform: BitMatrix,
    pivots: Vec<usize>,
    rank: usize,
}

impl Solver {
    pub fn new(a: &BitMatrix) -> Self {
        let aug = a.hstack(&BitMatrix::identity(a.rows()));
        let n = a.cols();
        let mut r = aug;
        let nrows = r.rows();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for c in 0..n {
            if rank == nrows {
                break;
            }
            let Some(p) = (rank..nrows).find(|&i| r.rows[i].get(c)) else {
                continue;
            };
            r.rows.swap(rank, p);
            let pivot_row = r.rows[rank].clone();
            for i in 0..nrows {
                if i != rank && r.rows[i].get(c) {
                    r.rows[i].xor_assign(&pivot_row);
                }
            }
            pivots.push(c);
            rank += 1;
        }
        let transform = BitMatrix::from_rows(
            nrows,
            r.rows.iter().map(|row| row.slice(n, nrows)).collect(),
        );
        Solver {
            cols: n,
            transform,
            pivots,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn solve(&self, s: &BitVector) -> Option<BitVector> {
        let t = self.transform.mul_vec(s);
        for i in self.rank..t.len() {
            if t.get(i) {
                return None;
            }
        }
        let mut x = BitVector::zeros(self.cols);
        for (i, &p) in self.pivots.iter().enumerate() {
            if t.get(i) {
                x.set(p, true);
            }
        }
        Some(x)
    }
}

/// Completes an orthonormal set: returns one row per row of `duals` such that
/// `result · dualsᵀ = I` and `result · rowsᵀ = 0`.
pub fn orthonormal_complete(rows: &BitMatrix, duals: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    let n = if duals.rows() > 0 {
        duals.cols()
    } else {
        rows.cols()
    };
    if rows.rows() > 0 && duals.rows() > 0 && rows.cols() != duals.cols() {
        return Err(Gf2Error::Shape {
            op: "orthonormal_complete",
            left: rows.shape(),
            right: duals.shape(),
        });
    }
    if duals.rows() == 0 {
        return Ok(BitMatrix::zeros(0, n));
    }
    let sys = duals.vstack(rows);
    let solver = Solver::new(&sys);
    let mut out = Vec::with_capacity(duals.rows());
    for i in 0..duals.rows() {
        let mut target = BitVector::zeros(sys.rows());
        target.set(i, true);
        match solver.solve(&target) {
            Some(x) => out.push(x),
            None => {
                return Err(Gf2Error::Infeasible {
                    block: "duals".into(),
                    row: i,
                })
            }
        }
    }
    Ok(BitMatrix::from_rows(n, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
        let mut out = BitMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = false;
                for k in 0..a.cols() {
                    s ^= a.get(i, k) && b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    #[test]
    fn identity_product() {
        let i = BitMatrix::identity(3);
        assert_eq!(matmul(&i, &i).unwrap(), i);
    }

    #[test]
    fn matmul_shape_error() {
        let a = BitMatrix::zeros(2, 3);
        assert!(matmul(&a, &a).is_err());
    }

    #[test]
    fn random_matmul_matches_naive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut a = BitMatrix::zeros(4, 6);
            let mut b = BitMatrix::zeros(6, 2);
            for i in 0..4 {
                for j in 0..6 {
                    a.set(i, j, rng.gen());
                }
            }
            for i in 0..6 {
                for j in 0..2 {
                    b.set(i, j, rng.gen());
                }
            }
            assert_eq!(matmul(&a, &b).unwrap(), naive(&a, &b));
        }
    }

    #[test]
    fn zero_rank() {
        assert_eq!(row_reduce(&BitMatrix::zeros(3, 4)).1, 0);
    }

    #[test]
    fn nullspace_is_orthogonal() {
        let h = BitMatrix::parse_rows(&["1100011", "0111001", "0001111"]);
        let ns = h.nullspace();
        assert_eq!(ns.rows(), 4);
        for r in ns.row_vecs() {
            assert!(h.mul_vec(r).is_zero());
        }
    }

    #[test]
    fn solve_identity() {
        let s = BitVector::parse("10110").unwrap();
        assert_eq!(solve(&BitMatrix::identity(5), &s).unwrap(), s);
    }

    #[test]
    fn inconsistent_system() {
        let a = BitMatrix::parse_rows(&["11", "11"]);
        assert_eq!(
            solve(&a, &BitVector::parse("10").unwrap()),
            Err(Gf2Error::NoSolution)
        );
    }

    #[test]
    fn iter_ones_across_words() {
        let v = BitVector::from_indices(200, &[0, 63, 64, 199]);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 63, 64, 199]);
        assert_eq!(v.weight(), 4);
    }
}
