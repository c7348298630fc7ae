//! CSS codes, clusterisation, foliation into sheets and syndrome bookkeeping.

use thiserror::Error;

use crate::delay::{expand_rows, Boundary, DelayError, SeedSet};
use crate::gf2::{matmul, BitMatrix, BitVector, Solver};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("stabilisers do not commute: X row {0} vs Z row {1}")]
    NonCommuting(usize, usize),
    #[error("logical operator {0} does not commute with the stabilisers")]
    BadLogical(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("isf is not a pseudo-inverse of the parity checks")]
    BadIsf,
    #[error(transparent)]
    Delay(#[from] DelayError),
}

/// CSS code given by supports of its X- and Z-type stabilisers and logicals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CssCode {
    pub n: usize,
    pub k: usize,
    pub sx: BitMatrix,
    pub sz: BitMatrix,
    pub logical_x: BitMatrix,
    pub logical_z: BitMatrix,
}

impl CssCode {
    pub fn new(
        sx: BitMatrix,
        sz: BitMatrix,
        logical_x: BitMatrix,
        logical_z: BitMatrix,
    ) -> Result<Self, CodeError> {
        let n = sx.cols().max(sz.cols());
        let code = CssCode {
            n,
            k: logical_x.rows(),
            sx,
            sz,
            logical_x,
            logical_z,
        };
        code.validate()?;
        Ok(code)
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        for (i, x) in self.sx.row_vecs().iter().enumerate() {
            for (j, z) in self.sz.row_vecs().iter().enumerate() {
                if x.dot(z) {
                    return Err(CodeError::NonCommuting(i, j));
                }
            }
        }
        for (i, l) in self.logical_z.row_vecs().iter().enumerate() {
            if !self.sx.mul_vec(l).is_zero() {
                return Err(CodeError::BadLogical(i));
            }
        }
        for (i, l) in self.logical_x.row_vecs().iter().enumerate() {
            if !self.sz.mul_vec(l).is_zero() {
                return Err(CodeError::BadLogical(i));
            }
        }
        Ok(())
    }

    /// Pairing matrix `logical_x · logical_zᵀ`.
    pub fn logical_pairing(&self) -> BitMatrix {
        matmul(&self.logical_x, &self.logical_z.transpose()).expect("logical shapes")
    }
}

/// Swaps the roles of X and Z.
pub fn dualize(code: &CssCode) -> CssCode {
    CssCode {
        n: code.n,
        k: code.k,
        sx: code.sz.clone(),
        sz: code.sx.clone(),
        logical_x: code.logical_z.clone(),
        logical_z: code.logical_x.clone(),
    }
}

pub fn steane() -> CssCode {
    let h = BitMatrix::parse_rows(&["1100011", "0111001", "0001111"]);
    let l = BitMatrix::parse_rows(&["1111111"]);
    CssCode::new(h.clone(), h, l.clone(), l).expect("steane")
}

/// Paper ISF for the Steane code; rows pair with the stabiliser rows of [`steane`].
pub fn steane_isf() -> BitMatrix {
    BitMatrix::parse_rows(&["0110000", "1100000", "0011000"])
}

pub fn shor() -> CssCode {
    let sz = BitMatrix::parse_rows(&[
        "110000000",
        "011000000",
        "000110000",
        "000011000",
        "000000110",
        "000000011",
    ]);
    let sx = BitMatrix::parse_rows(&["111111000", "000111111"]);
    let lx = BitMatrix::parse_rows(&["111000000"]);
    let lz = BitMatrix::parse_rows(&["100100100"]);
    CssCode::new(sx, sz, lx, lz).expect("shor")
}

/// Terminated expansion of a convolutional seed set into a finite CSS code.
pub fn conv_code(seed: &SeedSet, tau: usize) -> Result<CssCode, CodeError> {
    conv_code_with(seed, tau, Boundary::Terminated)
}

/// Expansion with a chosen boundary (`Terminated` or `Cyclic`).
pub fn conv_code_with(
    seed: &SeedSet,
    tau: usize,
    boundary: Boundary,
) -> Result<CssCode, CodeError> {
    let ex = |m| -> Result<BitMatrix, CodeError> { Ok(crate::delay::expand(m, tau, boundary)?) };
    let sx = ex(seed.h_x())?;
    let sz = ex(&seed.parity)?;
    let lz = ex(&seed.generator)?;
    let lx = ex(seed.g_x())?;
    CssCode::new(sx, sz, lx, lz)
}

/// ISF rows launched at the same frames as the retained parity rows, so that
/// row `i` pairs with parity row `i`.
pub fn expand_aligned_isf(seed: &SeedSet, tau: usize) -> BitMatrix {
    expand_aligned_isf_with(seed, tau, Boundary::Terminated)
}

pub fn expand_aligned_isf_with(seed: &SeedSet, tau: usize, boundary: Boundary) -> BitMatrix {
    let h = expand_rows(seed.h_x(), tau, boundary);
    let isf_b = if boundary == Boundary::Cyclic {
        Boundary::Cyclic
    } else {
        Boundary::Open
    };
    let isf = expand_rows(&seed.isf, tau, isf_b);
    let rows = h
        .iter()
        .map(|hr| {
            isf.iter()
                .find(|r| r.seed_row == hr.seed_row && r.launch == hr.launch)
                .map(|r| r.bits.clone())
                .unwrap_or_else(|| BitVector::zeros(seed.n() * tau))
        })
        .collect();
    BitMatrix::from_rows(seed.n() * tau, rows)
}

/// Tanner graph of S_Z: one ancilla per Z stabiliser row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterGraph {
    pub n_code: usize,
    pub n_ancilla: usize,
    /// Code-qubit neighbours of each ancilla.
    pub ancilla_adj: Vec<Vec<usize>>,
}

impl ClusterGraph {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for (a, adj) in self.ancilla_adj.iter().enumerate() {
            for &c in adj {
                e.push((c, a));
            }
        }
        e
    }
}

pub fn clusterize(code: &CssCode) -> ClusterGraph {
    ClusterGraph {
        n_code: code.n,
        n_ancilla: code.sz.rows(),
        ancilla_adj: code
            .sz
            .row_vecs()
            .iter()
            .map(|r| r.iter_ones().collect())
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SheetKind {
    Primal,
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QubitRole {
    Code(usize),
    Ancilla(usize),
}

/// A check centred on one sheet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub sheet: usize,
    /// Row of the sheet's X-check matrix.
    pub row: usize,
    pub support: Vec<usize>,
}

/// Alternating primal/dual sheets of a clusterised CSS code with checks
/// X_{a,m−1} X_{c,m} X_{a,m+1}. Sheets are 0-based here; sheet 0 is primal.
#[derive(Clone, Debug)]
pub struct FoliatedCode {
    pub base: CssCode,
    pub sheets: usize,
    pub kinds: Vec<SheetKind>,
    pub offsets: Vec<usize>,
    pub n_ancilla: Vec<usize>,
    pub n_qubits: usize,
    pub checks: Vec<Check>,
    /// Check indices centred on each sheet.
    pub sheet_checks: Vec<Vec<usize>>,
    /// Checks touching each qubit.
    pub qubit_checks: Vec<Vec<usize>>,
}

impl FoliatedCode {
    pub fn kind(&self, m: usize) -> SheetKind {
        self.kinds[m]
    }

    /// X-check supports (code qubits) for the code living on sheet `m`.
    pub fn sheet_x_checks(&self, m: usize) -> &BitMatrix {
        match self.kinds[m] {
            SheetKind::Primal => &self.base.sx,
            SheetKind::Dual => &self.base.sz,
        }
    }

    /// Logical X supports on sheet `m`'s code (for correlation surfaces).
    pub fn sheet_logical_x(&self, m: usize) -> &BitMatrix {
        match self.kinds[m] {
            SheetKind::Primal => &self.base.logical_x,
            SheetKind::Dual => &self.base.logical_z,
        }
    }

    /// Logical Z supports on sheet `m`'s code.
    pub fn sheet_logical_z(&self, m: usize) -> &BitMatrix {
        match self.kinds[m] {
            SheetKind::Primal => &self.base.logical_z,
            SheetKind::Dual => &self.base.logical_x,
        }
    }

    pub fn qubit_index(&self, sheet: usize, role: QubitRole) -> usize {
        match role {
            QubitRole::Code(j) => {
                assert!(j < self.base.n);
                self.offsets[sheet] + j
            }
            QubitRole::Ancilla(a) => {
                assert!(a < self.n_ancilla[sheet]);
                self.offsets[sheet] + self.base.n + a
            }
        }
    }

    pub fn qubit_role(&self, q: usize) -> (usize, QubitRole) {
        let m = match self.offsets.binary_search(&q) {
            Ok(m) => m,
            Err(m) => m - 1,
        };
        let local = q - self.offsets[m];
        if local < self.base.n {
            (m, QubitRole::Code(local))
        } else {
            (m, QubitRole::Ancilla(local - self.base.n))
        }
    }

    pub fn n_checks(&self) -> usize {
        self.checks.len()
    }

    /// Dense parity-check matrix over global qubit indices.
    pub fn parity_checks(&self) -> BitMatrix {
        let rows = self
            .checks
            .iter()
            .map(|c| BitVector::from_indices(self.n_qubits, &c.support))
            .collect();
        BitMatrix::from_rows(self.n_qubits, rows)
    }

    /// Ancilla index (global) paired with sheet-`m` check row `h` on neighbouring sheet `nb`.
    pub fn neighbour_ancilla(&self, nb: usize, h: usize) -> usize {
        self.qubit_index(nb, QubitRole::Ancilla(h))
    }
}

pub fn foliate(code: &CssCode, sheets: usize) -> FoliatedCode {
    assert!(sheets >= 1, "at least one sheet");
    let kinds: Vec<SheetKind> = (0..sheets)
        .map(|m| {
            if m % 2 == 0 {
                SheetKind::Primal
            } else {
                SheetKind::Dual
            }
        })
        .collect();
    let n_ancilla: Vec<usize> = kinds
        .iter()
        .map(|k| {
            if sheets == 1 {
                code.sx.rows()
            } else {
                match k {
                    SheetKind::Primal => code.sz.rows(),
                    SheetKind::Dual => code.sx.rows(),
                }
            }
        })
        .collect();
    let mut offsets = Vec::with_capacity(sheets);
    let mut acc = 0;
    for a in &n_ancilla {
        offsets.push(acc);
        acc += code.n + a;
    }
    let n_qubits = acc;
    let mut fc = FoliatedCode {
        base: code.clone(),
        sheets,
        kinds,
        offsets,
        n_ancilla,
        n_qubits,
        checks: Vec::new(),
        sheet_checks: vec![Vec::new(); sheets],
        qubit_checks: vec![Vec::new(); n_qubits],
    };
    for m in 0..sheets {
        let hx = fc.sheet_x_checks(m).clone();
        for (h, row) in hx.row_vecs().iter().enumerate() {
            let mut support: Vec<usize> = row.iter_ones().map(|j| fc.offsets[m] + j).collect();
            if sheets == 1 {
                support.push(fc.qubit_index(m, QubitRole::Ancilla(h)));
            } else {
                if m > 0 {
                    support.push(fc.qubit_index(m - 1, QubitRole::Ancilla(h)));
                }
                if m + 1 < sheets {
                    support.push(fc.qubit_index(m + 1, QubitRole::Ancilla(h)));
                }
            }
            support.sort_unstable();
            let idx = fc.checks.len();
            for &q in &support {
                fc.qubit_checks[q].push(idx);
            }
            fc.sheet_checks[m].push(idx);
            fc.checks.push(Check {
                sheet: m,
                row: h,
                support,
            });
        }
    }
    fc
}

/// Error pattern over the global qubit indices (Z errors only).
pub type ErrorPattern = BitVector;

/// Syndrome bits, one per check, in check order.
pub type Syndrome = BitVector;

pub fn extract_syndrome(fc: &FoliatedCode, err: &ErrorPattern) -> Result<Syndrome, CodeError> {
    if err.len() != fc.n_qubits {
        return Err(CodeError::Length {
            expected: fc.n_qubits,
            got: err.len(),
        });
    }
    let mut s = BitVector::zeros(fc.checks.len());
    for q in err.iter_ones() {
        for &c in &fc.qubit_checks[q] {
            s.flip(c);
        }
    }
    Ok(s)
}

/// Syndrome of a plain code under its X checks.
pub fn code_syndrome(code: &CssCode, err: &BitVector) -> Result<BitVector, CodeError> {
    if err.len() != code.n {
        return Err(CodeError::Length {
            expected: code.n,
            got: err.len(),
        });
    }
    Ok(code.sx.mul_vec(err))
}

/// `e⁰ = ISFᵀ · S` after checking `H · ISFᵀ = I`.
pub fn pure_error(code: &CssCode, s: &BitVector, isf: &BitMatrix) -> Result<BitVector, CodeError> {
    let prod = matmul(&code.sx, &isf.transpose()).map_err(|_| CodeError::BadIsf)?;
    if prod != BitMatrix::identity(code.sx.rows()) {
        return Err(CodeError::BadIsf);
    }
    if s.len() != code.sx.rows() {
        return Err(CodeError::Length {
            expected: code.sx.rows(),
            got: s.len(),
        });
    }
    Ok(isf.combine_rows(s))
}

/// Logical flips of a residual on a plain code: `logical_x · r`.
pub fn is_logical_failure(code: &CssCode, residual: &BitVector) -> (bool, usize) {
    let l = code.logical_x.mul_vec(residual);
    (!l.is_zero(), l.weight())
}

/// Logical flips of a foliated residual, judged on the correlation surfaces:
/// logical X of the primal code on every primal sheet and logical X of the dual
/// code on every dual sheet. A logical fails if either surface is flipped.
pub fn foliated_logical_flips(fc: &FoliatedCode, residual: &ErrorPattern) -> Vec<bool> {
    let n = fc.base.n;
    let mut flips = vec![false; fc.base.k];
    let mut primal = vec![false; fc.base.k];
    let mut dual = vec![false; fc.base.k];
    for m in 0..fc.sheets {
        let r = residual.slice(fc.offsets[m], n);
        if r.is_zero() {
            continue;
        }
        let l = fc.sheet_logical_x(m).mul_vec(&r);
        let target = match fc.kinds[m] {
            SheetKind::Primal => &mut primal,
            SheetKind::Dual => &mut dual,
        };
        for i in l.iter_ones() {
            target[i] ^= true;
        }
    }
    for i in 0..fc.base.k {
        flips[i] = primal[i] || dual[i];
    }
    flips
}

pub fn is_foliated_failure(fc: &FoliatedCode, residual: &ErrorPattern) -> (bool, usize) {
    let f = foliated_logical_flips(fc, residual);
    let w = f.iter().filter(|&&b| b).count();
    (w > 0, w)
}

/// Pure errors for the plain X checks of a code, one column per check.
#[derive(Clone, Debug)]
pub struct CheckInverse {
    solver: Solver,
    n: usize,
}

impl CheckInverse {
    pub fn new(checks: &BitMatrix) -> Self {
        CheckInverse {
            solver: Solver::new(checks),
            n: checks.cols(),
        }
    }

    pub fn solve(&self, s: &BitVector) -> Option<BitVector> {
        let x = self.solver.solve(s)?;
        debug_assert_eq!(x.len(), self.n);
        Some(x)
    }
}

/// Symplectic (x|z) row over `n` qubits, used for cluster stabiliser algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliRow {
    pub x: BitVector,
    pub z: BitVector,
}

/// Graph of the foliated cluster: sheet Tanner graphs plus bonds between
/// corresponding code qubits of adjacent sheets.
pub fn foliated_cluster_edges(fc: &FoliatedCode) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for m in 0..fc.sheets {
        let stabs = if fc.sheets == 1 {
            &fc.base.sx
        } else {
            match fc.kinds[m] {
                SheetKind::Primal => &fc.base.sz,
                SheetKind::Dual => &fc.base.sx,
            }
        };
        for (a, row) in stabs.row_vecs().iter().enumerate() {
            for c in row.iter_ones() {
                edges.push((
                    fc.qubit_index(m, QubitRole::Code(c)),
                    fc.qubit_index(m, QubitRole::Ancilla(a)),
                ));
            }
        }
        if m + 1 < fc.sheets {
            for c in 0..fc.base.n {
                edges.push((
                    fc.qubit_index(m, QubitRole::Code(c)),
                    fc.qubit_index(m + 1, QubitRole::Code(c)),
                ));
            }
        }
    }
    edges
}

/// Cluster stabilisers K_v = X_v Z_{N(v)} of the foliated cluster.
pub fn cluster_stabilisers(fc: &FoliatedCode) -> Vec<PauliRow> {
    let n = fc.n_qubits;
    let mut rows: Vec<PauliRow> = (0..n)
        .map(|v| PauliRow {
            x: BitVector::from_indices(n, &[v]),
            z: BitVector::zeros(n),
        })
        .collect();
    for (a, b) in foliated_cluster_edges(fc) {
        rows[a].z.flip(b);
        rows[b].z.flip(a);
    }
    rows
}

/// Tests whether `target` (given on the kept qubits) is generated by cluster
/// stabilisers that act only as X or I on the measured qubits.
pub fn survives_measurement(fc: &FoliatedCode, kept: &[usize], target: &PauliRow) -> bool {
    let n = fc.n_qubits;
    let gens = cluster_stabilisers(fc);
    let mut is_kept = vec![false; n];
    for &k in kept {
        is_kept[k] = true;
    }
    // Unknowns: one coefficient per generator. Constraints: z-part zero on measured
    // qubits; x and z parts on kept qubits equal the target.
    let mut eqs = Vec::new();
    let mut rhs = Vec::new();
    for q in 0..n {
        let mut ez = BitVector::zeros(gens.len());
        for (g, row) in gens.iter().enumerate() {
            if row.z.get(q) {
                ez.set(g, true);
            }
        }
        if is_kept[q] {
            let mut ex = BitVector::zeros(gens.len());
            for (g, row) in gens.iter().enumerate() {
                if row.x.get(q) {
                    ex.set(g, true);
                }
            }
            eqs.push(ex);
            rhs.push(target.x.get(q));
            eqs.push(ez);
            rhs.push(target.z.get(q));
        } else {
            eqs.push(ez);
            rhs.push(false);
        }
    }
    let a = BitMatrix::from_rows(gens.len(), eqs);
    Solver::new(&a)
        .solve(&BitVector::from_bools(&rhs))
        .is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steane_is_self_dual() {
        let s = steane();
        assert_eq!(dualize(&s), s);
        assert_eq!(dualize(&dualize(&shor())), shor());
    }

    #[test]
    fn empty_sz_has_no_ancillas() {
        let c = CssCode::new(
            BitMatrix::zeros(0, 3),
            BitMatrix::zeros(0, 3),
            BitMatrix::parse_rows(&["100"]),
            BitMatrix::parse_rows(&["100"]),
        )
        .unwrap();
        assert_eq!(clusterize(&c).n_ancilla, 0);
    }

    #[test]
    fn qubit_roles_roundtrip() {
        let fc = foliate(&steane(), 3);
        for q in 0..fc.n_qubits {
            let (m, r) = fc.qubit_role(q);
            assert_eq!(fc.qubit_index(m, r), q);
        }
    }

    #[test]
    fn zero_error_zero_syndrome() {
        let fc = foliate(&steane(), 3);
        let s = extract_syndrome(&fc, &BitVector::zeros(fc.n_qubits)).unwrap();
        assert!(s.is_zero());
        assert!(extract_syndrome(&fc, &BitVector::zeros(3)).is_err());
    }
}
