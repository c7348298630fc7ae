//! Turbo codes: an outer convolutional code whose physical qubits are the
//! logical qubits of an inner convolutional code, wired through an interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::code::{
    conv_code_with, extract_syndrome, foliate, CodeError, CssCode, FoliatedCode, QubitRole,
};
use crate::delay::{Boundary, SeedSet};
use crate::foliated::{
    average_and_harden, dual_logicals, Assembler, DecoderConfig, Diagnostics, ExchangeState,
    FoliatedDecoder,
};
use crate::gf2::{matmul, BitMatrix, BitVector};
use crate::siso::{extrinsic, Layout, SheetPosterior, SisoError};

#[derive(Debug, Error)]
pub enum TurboError {
    #[error("length {len} is not a multiple of frame width {width}")]
    Length { len: usize, width: usize },
    #[error("outer code has {outer} physical qubits but inner code has {inner} logical qubits")]
    RateMismatch { outer: usize, inner: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Siso(#[from] SisoError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InterleaverKind {
    Identity,
    /// Gathers equal column positions of `width`-wide frames.
    Transpose { width: usize },
    Random { seed: u64 },
}

/// Permutation from outer physical positions to inner logical positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    pub kind: InterleaverKind,
    /// `perm[o]` is the inner logical position fed by outer qubit `o`.
    pub perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Interleaver {
    pub fn new(kind: InterleaverKind, len: usize) -> Result<Self, TurboError> {
        let perm = match kind {
            InterleaverKind::Identity => (0..len).collect(),
            InterleaverKind::Transpose { width } => {
                if width == 0 || !len.is_multiple_of(width) {
                    return Err(TurboError::Length { len, width });
                }
                let tau = len / width;
                (0..len).map(|o| (o % width) * tau + o / width).collect()
            }
            InterleaverKind::Random { seed } => {
                let mut p: Vec<usize> = (0..len).collect();
                p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                p
            }
        };
        Ok(Self::from_perm(kind, perm))
    }

    fn from_perm(kind: InterleaverKind, perm: Vec<usize>) -> Self {
        let mut inverse = vec![0; perm.len()];
        for (o, &i) in perm.iter().enumerate() {
            inverse[i] = o;
        }
        Interleaver {
            kind,
            perm,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Outer order to inner order.
    pub fn apply<T: Clone>(&self, outer: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&o| outer[o].clone()).collect()
    }

    /// Inner order to outer order.
    pub fn invert<T: Clone>(&self, inner: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| inner[i].clone()).collect()
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }
}

/// `(p¹₁ p²₁ … pⁿ₁, p¹₂ …)` → `(p¹₁ … p¹_τ, p²₁ … p²_τ, …)`.
pub fn transpose_interleave<T: Clone>(frames: &[T], width: usize) -> Result<Vec<T>, TurboError> {
    let il = Interleaver::new(InterleaverKind::Transpose { width }, frames.len())?;
    Ok(il.apply(frames))
}

/// A turbo code and the pieces its decoder works on.
#[derive(Clone, Debug)]
pub struct TurboCode {
    pub name: String,
    /// Inner code; `logical_z` is paired with `logical_x` (`lx·lzᵀ = I`).
    pub inner: CssCode,
    pub outer: CssCode,
    pub inner_layout: Layout,
    pub outer_layout: Layout,
    pub interleaver: Interleaver,
    /// Combined code: inner checks first, then outer checks lifted through the
    /// inner logical operators.
    pub code: CssCode,
}

impl TurboCode {
    pub fn k(&self) -> usize {
        self.code.k
    }

    /// Checks of the combined code that belong to the inner code, per kind.
    pub fn inner_x_rows(&self) -> usize {
        self.inner.sx.rows()
    }

    pub fn inner_z_rows(&self) -> usize {
        self.inner.sz.rows()
    }
}

fn paired(code: CssCode) -> CssCode {
    let lz = dual_logicals(&code.logical_x, &code.logical_z);
    CssCode {
        logical_z: lz,
        ..code
    }
}

/// Lifts rows over outer positions to inner physical supports: row `o` of the
/// lift is the inner logical operator at position `perm[o]`.
fn lift(rows: &BitMatrix, logicals: &BitMatrix, il: &Interleaver) -> BitMatrix {
    let lambda = BitMatrix::from_rows(
        logicals.cols(),
        il.perm.iter().map(|&i| logicals.row(i).clone()).collect(),
    );
    matmul(rows, &lambda).expect("lift shapes")
}

/// Builds a turbo code with `k` logical qubits from two seed sets. Both
/// constituents are expanded tail-biting so that logical counts are exact.
pub fn build_turbo(
    name: &str,
    inner_seed: &SeedSet,
    outer_seed: &SeedSet,
    k: usize,
    kind: InterleaverKind,
) -> Result<TurboCode, TurboError> {
    let ro = outer_seed.rates();
    let ri = inner_seed.rates();
    if ro.k == 0 || !k.is_multiple_of(ro.k) {
        return Err(TurboError::RateMismatch {
            outer: k,
            inner: ro.k,
        });
    }
    let tau_o = k / ro.k;
    let n_o = ro.n * tau_o;
    if ri.k == 0 || !n_o.is_multiple_of(ri.k) {
        return Err(TurboError::RateMismatch {
            outer: n_o,
            inner: ri.k,
        });
    }
    let tau_i = n_o / ri.k;
    let outer = paired(conv_code_with(outer_seed, tau_o, Boundary::Cyclic)?);
    let inner = paired(conv_code_with(inner_seed, tau_i, Boundary::Cyclic)?);
    if outer.n != inner.k {
        return Err(TurboError::RateMismatch {
            outer: outer.n,
            inner: inner.k,
        });
    }
    let il = Interleaver::new(kind, n_o)?;
    let sx = inner
        .sx
        .vstack(&lift(&outer.sx, &inner.logical_x, &il));
    let sz = inner
        .sz
        .vstack(&lift(&outer.sz, &inner.logical_z, &il));
    let lx = lift(&outer.logical_x, &inner.logical_x, &il);
    let lz = lift(&outer.logical_z, &inner.logical_z, &il);
    let code = CssCode::new(sx, sz, lx, lz)?;
    Ok(TurboCode {
        name: name.to_string(),
        inner_layout: Layout::framed(ri.n, tau_i),
        outer_layout: Layout::framed(ro.n, tau_o),
        inner,
        outer,
        interleaver: il,
        code,
    })
}

/// T9: two C3 codes.
pub fn t9(k: usize, kind: InterleaverKind) -> Result<TurboCode, TurboError> {
    let s = crate::builtin::c3_seed();
    build_turbo("T9", &s, &s, k, kind)
}

/// T25: two C5 codes.
pub fn t25(k: usize, kind: InterleaverKind) -> Result<TurboCode, TurboError> {
    let s = crate::builtin::c5_seed();
    build_turbo("T25", &s, &s, k, kind)
}

#[derive(Clone, Debug, Serialize)]
pub struct TurboConfig {
    pub rounds: usize,
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// Pass extrinsic marginals between the stages (otherwise full posteriors).
    pub extrinsic: bool,
    pub sheet: DecoderConfig,
}

impl Default for TurboConfig {
    fn default() -> Self {
        TurboConfig {
            rounds: 5,
            inner_iters: 3,
            outer_iters: 3,
            extrinsic: true,
            sheet: DecoderConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TurboDiagnostics {
    pub rounds: usize,
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
    pub patched: bool,
}

impl From<TurboDiagnostics> for Diagnostics {
    fn from(t: TurboDiagnostics) -> Self {
        Diagnostics {
            iterations: t.rounds,
            converged: true,
            convergence: t.outer,
            fallback: false,
            patched: t.patched,
        }
    }
}

/// Foliated turbo decoder: inner and outer foliated decoders sharing one
/// syndrome, coupled through interleaved logical marginals.
pub struct TurboDecoder {
    pub turbo: TurboCode,
    pub fc: FoliatedCode,
    pub inner: FoliatedDecoder,
    pub outer: FoliatedDecoder,
    pub config: TurboConfig,
    assembler: Assembler,
    /// Per sheet: global check index → (is_outer, index in the part's foliated code).
    check_map: Vec<(bool, usize)>,
    /// Global qubit → (is_outer, index) for ancillas; code qubits map to the inner code.
    qubit_map: Vec<(bool, usize)>,
}

impl TurboDecoder {
    pub fn new(turbo: &TurboCode, sheets: usize, config: TurboConfig) -> Result<Self, TurboError> {
        let fc = foliate(&turbo.code, sheets);
        let fi = foliate(&turbo.inner, sheets);
        let fo = foliate(&turbo.outer, sheets);
        let inner = FoliatedDecoder::new(&fi, &turbo.inner_layout, config.sheet.clone())?;
        let outer = FoliatedDecoder::new(&fo, &turbo.outer_layout, config.sheet.clone())?;
        let mut check_map = vec![(false, 0); fc.n_checks()];
        for m in 0..sheets {
            let split = fi.sheet_checks[m].len();
            for (h, &c) in fc.sheet_checks[m].iter().enumerate() {
                check_map[c] = if h < split {
                    (false, fi.sheet_checks[m][h])
                } else {
                    (true, fo.sheet_checks[m][h - split])
                };
            }
        }
        let mut qubit_map = vec![(false, 0); fc.n_qubits];
        for (q, slot) in qubit_map.iter_mut().enumerate() {
            let (m, role) = fc.qubit_role(q);
            *slot = match role {
                QubitRole::Code(j) => (false, fi.qubit_index(m, QubitRole::Code(j))),
                QubitRole::Ancilla(h) if h < fi.n_ancilla[m] => {
                    (false, fi.qubit_index(m, QubitRole::Ancilla(h)))
                }
                QubitRole::Ancilla(h) => (
                    true,
                    fo.qubit_index(m, QubitRole::Ancilla(h - fi.n_ancilla[m])),
                ),
            };
        }
        Ok(TurboDecoder {
            turbo: turbo.clone(),
            assembler: Assembler::new(&fc),
            fc,
            inner,
            outer,
            config,
            check_map,
            qubit_map,
        })
    }

    fn split_syndrome(&self, s: &BitVector) -> (BitVector, BitVector) {
        let mut si = BitVector::zeros(self.inner.fc.n_checks());
        let mut so = BitVector::zeros(self.outer.fc.n_checks());
        for c in s.iter_ones() {
            match self.check_map[c] {
                (false, i) => si.set(i, true),
                (true, i) => so.set(i, true),
            }
        }
        (si, so)
    }

    fn split_priors(&self, priors: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut pi = vec![0.0; self.inner.fc.n_qubits];
        let mut po = vec![0.5; self.outer.fc.n_qubits];
        for (q, &(outer, i)) in self.qubit_map.iter().enumerate() {
            if outer {
                po[i] = priors[q];
            } else {
                pi[i] = priors[q];
            }
        }
        (pi, po)
    }

    fn pass(&self, post: f64, prior: f64) -> f64 {
        if self.config.extrinsic {
            extrinsic(post, prior)
        } else {
            post
        }
    }

    /// Decodes a syndrome of the foliated turbo code.
    pub fn decode(
        &self,
        syndrome: &BitVector,
        priors: &[f64],
    ) -> Result<(BitVector, TurboDiagnostics), TurboError> {
        let fc = &self.fc;
        if syndrome.len() != fc.n_checks() || priors.len() != fc.n_qubits {
            return Err(SisoError::Length("syndrome or prior length".into()).into());
        }
        let mut diag = TurboDiagnostics::default();
        if syndrome.is_zero() {
            return Ok((BitVector::zeros(fc.n_qubits), diag));
        }
        let (si, so) = self.split_syndrome(syndrome);
        let (pi, mut po) = self.split_priors(priors);
        let sheets = fc.sheets;
        let il = &self.turbo.interleaver;
        let n_o = self.turbo.outer.n;
        let k_i = self.turbo.inner.k;
        let mut inner_logical = vec![vec![0.5; k_i]; sheets];
        let mut inner_state: Option<ExchangeState> = None;
        let mut outer_state: Option<ExchangeState> = None;
        let mut outer_posts: Vec<SheetPosterior> = Vec::new();
        let mut inner_posts: Vec<SheetPosterior>;
        let rounds = self.config.rounds.max(1);
        for _ in 0..rounds {
            diag.rounds += 1;
            let (st, posts, _) = self.inner.exchange(
                &si,
                &pi,
                self.config.inner_iters,
                Some(&inner_logical),
                inner_state.take(),
            )?;
            diag.inner.extend(st.history.iter().skip(diag.inner.len()));
            inner_state = Some(st);
            inner_posts = posts;
            // Inner logical marginals become outer physical priors.
            for m in 0..sheets {
                let ext: Vec<f64> = (0..k_i)
                    .map(|i| self.pass(inner_posts[m].logical[i], inner_logical[m][i]))
                    .collect();
                let outer_order = il.invert(&ext);
                let off = self.outer.fc.offsets[m];
                po[off..off + n_o].copy_from_slice(&outer_order);
            }
            let (st, posts, _) =
                self.outer
                    .exchange(&so, &po, self.config.outer_iters, None, outer_state.take())?;
            diag.outer.extend(st.history.iter().skip(diag.outer.len()));
            outer_state = Some(st);
            outer_posts = posts;
            // Outer physical marginals become inner logical priors.
            for m in 0..sheets {
                let off = self.outer.fc.offsets[m];
                let ext: Vec<f64> = (0..n_o)
                    .map(|o| self.pass(outer_posts[m].code[o], po[off + o]))
                    .collect();
                inner_logical[m] = il.apply(&ext);
            }
        }
        let logicals: Vec<Vec<bool>> = outer_posts
            .iter()
            .map(|p| p.logical.iter().map(|&x| x > 0.5).collect())
            .collect();
        let inner_state = inner_state.expect("at least one round");
        let outer_state = outer_state.expect("at least one round");
        let hard_i = average_and_harden(&self.inner, &inner_state);
        let hard_o = average_and_harden(&self.outer, &outer_state);
        let hard: Vec<BitVector> = hard_i
            .iter()
            .zip(hard_o.iter())
            .map(|(a, b)| a.concat(b))
            .collect();
        let (corr, patched) = if sheets == 1 {
            self.assembler.correction(syndrome, None, &logicals)
        } else {
            self.assembler.correction(syndrome, Some(&hard), &logicals)
        };
        diag.patched = patched;
        debug_assert_eq!(&extract_syndrome(fc, &corr).expect("length"), syndrome);
        Ok((corr, diag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_example() {
        let v = ["a1", "a2", "a3", "b1", "b2", "b3", "c1", "c2", "c3"];
        let t = transpose_interleave(&v, 3).unwrap();
        assert_eq!(t, ["a1", "b1", "c1", "a2", "b2", "c2", "a3", "b3", "c3"]);
        assert_eq!(transpose_interleave(&[1, 2, 3], 3).unwrap(), vec![1, 2, 3]);
        assert!(transpose_interleave(&[1, 2], 3).is_err());
    }

    #[test]
    fn interleaver_roundtrip() {
        let il = Interleaver::new(InterleaverKind::Random { seed: 5 }, 30).unwrap();
        let x: Vec<usize> = (100..130).collect();
        assert_eq!(il.invert(&il.apply(&x)), x);
    }

    #[test]
    fn t9_parameters() {
        let t = t9(4, InterleaverKind::Random { seed: 1 }).unwrap();
        assert_eq!(t.code.n, 36);
        assert_eq!(t.code.k, 4);
        assert_eq!(t.code.logical_pairing(), BitMatrix::identity(4));
    }
}
