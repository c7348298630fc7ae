//! Delay-operator polynomials, seed matrices and their banded expansions.

use std::fmt;

use thiserror::Error;

use crate::gf2::{BitMatrix, BitVector, Solver};

pub const MAX_DEGREE: usize = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DelayError {
    #[error("product of two dual (D-tilde) polynomials is undefined")]
    DualProduct,
    #[error("degree overflow: result exceeds D^{MAX_DEGREE}")]
    DegreeOverflow,
    #[error("tau = {tau} is smaller than the seed memory length {need}")]
    TauTooSmall { tau: usize, need: usize },
    #[error("catastrophic or unsupported seed: {0}")]
    Catastrophic(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("gauge derivation failed: {0}")]
    Gauge(String),
}

/// Polynomial in `D` plus a dual part in `D̃`; bit `q` is the coefficient of `D^q` (or `D̃^q`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DelayPoly {
    pub fwd: u64,
    pub dual: u64,
}

impl DelayPoly {
    pub const ZERO: DelayPoly = DelayPoly { fwd: 0, dual: 0 };
    pub const ONE: DelayPoly = DelayPoly { fwd: 1, dual: 0 };

    pub fn from_exps(exps: &[usize]) -> Self {
        let mut fwd = 0u64;
        for &e in exps {
            assert!(e <= MAX_DEGREE, "exponent too large");
            fwd ^= 1 << e;
        }
        DelayPoly { fwd, dual: 0 }
    }

    pub fn d(q: usize) -> Self {
        Self::from_exps(&[q])
    }

    pub fn d_tilde(q: usize) -> Self {
        DelayPoly {
            fwd: 0,
            dual: 1 << q,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.fwd == 0 && self.dual == 0
    }

    /// Highest forward exponent, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.fwd == 0 {
            None
        } else {
            Some(63 - self.fwd.leading_zeros() as usize)
        }
    }

    pub fn exps(&self) -> Vec<usize> {
        (0..64).filter(|q| self.fwd >> q & 1 == 1).collect()
    }

    pub fn add(&self, o: &DelayPoly) -> DelayPoly {
        DelayPoly {
            fwd: self.fwd ^ o.fwd,
            dual: self.dual ^ o.dual,
        }
    }
}

impl fmt::Debug for DelayPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for DelayPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for q in 0..64 {
            if self.fwd >> q & 1 == 1 {
                terms.push(match q {
                    0 => "1".to_string(),
                    1 => "D".to_string(),
                    _ => format!("D^{q}"),
                });
            }
        }
        for q in 0..64 {
            if self.dual >> q & 1 == 1 {
                terms.push(format!("~D^{q}"));
            }
        }
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join("+"))
        }
    }
}

/// Carry-less product of two forward polynomials.
pub fn clmul(a: u64, b: u64) -> Result<u64, DelayError> {
    let mut r: u128 = 0;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            r ^= (a as u128) << shift;
        }
        b >>= 1;
        shift += 1;
    }
    u64::try_from(r).map_err(|_| DelayError::DegreeOverflow)
}

/// Product under GF(2) arithmetic with the pairing rule `D^a D̃^b = δ_ab`.
pub fn poly_mul(a: &DelayPoly, b: &DelayPoly) -> Result<DelayPoly, DelayError> {
    if a.dual != 0 && b.dual != 0 {
        return Err(DelayError::DualProduct);
    }
    let fwd = clmul(a.fwd, b.fwd)?;
    let pair = ((a.fwd & b.dual).count_ones() + (a.dual & b.fwd).count_ones()) & 1;
    Ok(DelayPoly {
        fwd: fwd ^ pair as u64,
        dual: 0,
    })
}

/// Matrix of delay polynomials; one seed row per matrix row.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct DelayMatrix {
    cols: usize,
    entries: Vec<Vec<DelayPoly>>,
}

impl DelayMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DelayMatrix {
            cols,
            entries: vec![vec![DelayPoly::ZERO; cols]; rows],
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<DelayPoly>>) -> Self {
        for r in &rows {
            assert_eq!(r.len(), cols);
        }
        DelayMatrix {
            cols,
            entries: rows,
        }
    }

    /// Rows given as per-entry exponent lists.
    pub fn from_exps(rows: &[Vec<Vec<usize>>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let entries = rows
            .iter()
            .map(|r| r.iter().map(|e| DelayPoly::from_exps(e)).collect())
            .collect();
        Self::from_rows(cols, entries)
    }

    /// Rows as raw forward bitmasks, one `u64` per column.
    pub fn from_masks(cols: usize, rows: Vec<Vec<u64>>) -> Self {
        let entries = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|m| DelayPoly { fwd: m, dual: 0 })
                    .collect()
            })
            .collect();
        Self::from_rows(cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> DelayPoly {
        self.entries[r][c]
    }

    pub fn set(&mut self, r: usize, c: usize, p: DelayPoly) {
        self.entries[r][c] = p;
    }

    pub fn row(&self, r: usize) -> &[DelayPoly] {
        &self.entries[r]
    }

    pub fn row_masks(&self, r: usize) -> Vec<u64> {
        self.entries[r].iter().map(|p| p.fwd).collect()
    }

    pub fn push_row(&mut self, row: Vec<DelayPoly>) {
        assert_eq!(row.len(), self.cols);
        self.entries.push(row);
    }

    pub fn vstack(&self, o: &DelayMatrix) -> DelayMatrix {
        let mut m = self.clone();
        if m.entries.is_empty() {
            m.cols = o.cols;
        }
        for r in &o.entries {
            m.push_row(r.clone());
        }
        m
    }

    /// Appends `extra` zero columns.
    pub fn pad_cols(&self, extra: usize) -> DelayMatrix {
        let entries = self
            .entries
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.extend(std::iter::repeat_n(DelayPoly::ZERO, extra));
                r
            })
            .collect();
        DelayMatrix {
            cols: self.cols + extra,
            entries,
        }
    }

    /// Degree of row `r` (0 for a zero row).
    pub fn row_degree(&self, r: usize) -> usize {
        self.entries[r]
            .iter()
            .filter_map(|p| p.degree())
            .max()
            .unwrap_or(0)
    }

    /// Maximum degree over all entries (the memory ν).
    pub fn degree(&self) -> usize {
        (0..self.rows())
            .map(|r| self.row_degree(r))
            .max()
            .unwrap_or(0)
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.entries[r]
            .iter()
            .map(|p| p.fwd.count_ones() as usize)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|r| r.iter().all(|p| p.is_zero()))
    }

    /// Serialises as exponent lists, rows separated by `;`.
    pub fn to_spec_string(&self) -> String {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|r| {
                let ents: Vec<String> = r
                    .iter()
                    .map(|p| {
                        let e: Vec<String> = p.exps().iter().map(|x| x.to_string()).collect();
                        format!("[{}]", e.join(","))
                    })
                    .collect();
                format!("[{}]", ents.join(","))
            })
            .collect();
        rows.join(" ; ")
    }
}

impl fmt::Debug for DelayMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.entries {
            let s: Vec<String> = r.iter().map(|p| p.to_string()).collect();
            writeln!(f, "[{}]", s.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Terminated,
    Open,
    /// Frames wrap around modulo τ.
    Cyclic,
}

/// One expanded row with its launch frame.
#[derive(Clone, Debug)]
pub struct ExpandedRow {
    pub seed_row: usize,
    pub launch: isize,
    pub bits: BitVector,
}

/// Expands each seed row at every launch frame; rows ordered by launch, then seed row.
pub fn expand_rows(seed: &DelayMatrix, tau: usize, boundary: Boundary) -> Vec<ExpandedRow> {
    let n = seed.cols();
    let mut out = Vec::new();
    let min_launch = match boundary {
        Boundary::Terminated | Boundary::Cyclic => 0,
        Boundary::Open => -(seed.degree() as isize),
    };
    for s in min_launch..tau as isize {
        for r in 0..seed.rows() {
            let deg = seed.row_degree(r) as isize;
            if boundary == Boundary::Terminated && s + deg > tau as isize - 1 {
                continue;
            }
            if boundary == Boundary::Open && s + deg < 0 {
                continue;
            }
            let mut bits = BitVector::zeros(n * tau);
            for (j, p) in seed.row(r).iter().enumerate() {
                for q in p.exps() {
                    let f = s + q as isize;
                    if boundary == Boundary::Cyclic {
                        bits.flip(f as usize % tau * n + j);
                    } else if f >= 0 && (f as usize) < tau {
                        bits.set(f as usize * n + j, true);
                    }
                }
            }
            if bits.is_zero() {
                continue;
            }
            out.push(ExpandedRow {
                seed_row: r,
                launch: s,
                bits,
            });
        }
    }
    out
}

/// Banded `(rows·τ') × (n·τ)` expansion of a seed matrix.
pub fn expand(seed: &DelayMatrix, tau: usize, boundary: Boundary) -> Result<BitMatrix, DelayError> {
    let need = seed.degree() + 1;
    if boundary != Boundary::Open && tau < need && !seed.is_zero() {
        return Err(DelayError::TauTooSmall { tau, need });
    }
    let rows = expand_rows(seed, tau, boundary);
    Ok(BitMatrix::from_rows(
        seed.cols() * tau,
        rows.into_iter().map(|r| r.bits).collect(),
    ))
}

/// Pairing of a Z-type row launched at `u` with an X-type row launched at `u + d`.
pub fn pairing(z: &[u64], x: &[u64], d: isize) -> bool {
    let mut acc = 0u32;
    for (a, b) in z.iter().zip(x) {
        let shifted = if d >= 0 {
            b.checked_shl(d as u32).unwrap_or(0)
        } else {
            b.checked_shr((-d) as u32).unwrap_or(0)
        };
        acc ^= (a & shifted).count_ones();
    }
    acc & 1 == 1
}

fn mask_degree(row: &[u64]) -> usize {
    row.iter()
        .filter(|&&m| m != 0)
        .map(|m| 63 - m.leading_zeros() as usize)
        .max()
        .unwrap_or(0)
}

/// Shifts `d` at which two rows can overlap.
fn shift_range(z: &[u64], x: &[u64]) -> std::ops::RangeInclusive<isize> {
    -(mask_degree(x) as isize)..=mask_degree(z) as isize
}

/// Constraint: pairing with `row` at every shift must equal `target` at shift 0 and 0 elsewhere.
struct PairConstraint<'a> {
    row: &'a [u64],
    target: bool,
}

/// Solves for one unknown row of degree ≤ `deg` meeting every pairing constraint.
/// `unknown_is_z` selects which side of the pairing the unknown sits on.
fn solve_row(
    cols: usize,
    deg: usize,
    cons: &[PairConstraint<'_>],
    unknown_is_z: bool,
) -> Option<Vec<u64>> {
    let nvar = cols * (deg + 1);
    let var = |j: usize, q: usize| j * (deg + 1) + q;
    let mut eqs: Vec<BitVector> = Vec::new();
    let mut rhs: Vec<bool> = Vec::new();
    for c in cons {
        let kd = mask_degree(c.row) as isize;
        let (lo, hi) = (-(kd.max(deg as isize)) - 1, kd.max(deg as isize) + 1);
        for d in lo..=hi {
            let mut e = BitVector::zeros(nvar);
            for j in 0..cols {
                let k = c.row[j];
                for q in 0..=deg {
                    let idx = if unknown_is_z {
                        q as isize - d
                    } else {
                        q as isize + d
                    };
                    if (0..64).contains(&idx) && k >> idx & 1 == 1 {
                        e.set(var(j, q), true);
                    }
                }
            }
            let t = c.target && d == 0;
            if e.is_zero() {
                if t {
                    return None;
                }
                continue;
            }
            eqs.push(e);
            rhs.push(t);
        }
    }
    if eqs.is_empty() {
        return Some(vec![0; cols]);
    }
    let a = BitMatrix::from_rows(nvar, eqs);
    let s = BitVector::from_bools(&rhs);
    let x = Solver::new(&a).solve(&s)?;
    let mut row = vec![0u64; cols];
    for j in 0..cols {
        for q in 0..=deg {
            if x.get(var(j, q)) {
                row[j] |= 1 << q;
            }
        }
    }
    Some(row)
}

/// Finds, with minimal degree ≤ `bound`, rows pairing as δ with `duals` and as 0 with `others`.
fn complete_side(
    cols: usize,
    duals: &[Vec<u64>],
    others: &[Vec<u64>],
    unknown_is_z: bool,
    bound: usize,
) -> Result<Vec<Vec<u64>>, DelayError> {
    let mut out = Vec::new();
    for i in 0..duals.len() {
        let mut found = None;
        for deg in 0..=bound {
            let mut cons: Vec<PairConstraint<'_>> = Vec::new();
            for (j, d) in duals.iter().enumerate() {
                cons.push(PairConstraint {
                    row: d,
                    target: i == j,
                });
            }
            for o in others {
                cons.push(PairConstraint {
                    row: o,
                    target: false,
                });
            }
            if let Some(r) = solve_row(cols, deg, &cons, unknown_is_z) {
                found = Some(r);
                break;
            }
        }
        match found {
            Some(r) => out.push(r),
            None => {
                return Err(DelayError::Catastrophic(format!(
                    "no completion for row {i} within degree {bound}"
                )))
            }
        }
    }
    Ok(out)
}

fn masks(m: &DelayMatrix) -> Vec<Vec<u64>> {
    (0..m.rows()).map(|r| m.row_masks(r)).collect()
}

/// Convolutional CSS seed set. Z-side rows: generator, parity, isf, gauge.
/// X-side rows default to the Z-side ones (self-dual codes) when not given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSet {
    pub generator: DelayMatrix,
    pub parity: DelayMatrix,
    pub isf: DelayMatrix,
    pub gauge: Option<DelayMatrix>,
    pub generator_x: Option<DelayMatrix>,
    pub parity_x: Option<DelayMatrix>,
    pub isf_x: Option<DelayMatrix>,
    pub gauge_x: Option<DelayMatrix>,
}

/// (k, n, n_x, n_z) per frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rates {
    pub k: usize,
    pub n: usize,
    pub n_x: usize,
    pub n_z: usize,
}

impl SeedSet {
    /// Self-dual seed set with the ISF derived if `isf` is `None`.
    pub fn self_dual(
        generator: DelayMatrix,
        parity: DelayMatrix,
        isf: Option<DelayMatrix>,
    ) -> Result<Self, DelayError> {
        let isf = match isf {
            Some(i) => i,
            None => derive_isf(&generator, &parity)?,
        };
        Ok(SeedSet {
            generator,
            parity,
            isf,
            gauge: None,
            generator_x: None,
            parity_x: None,
            isf_x: None,
            gauge_x: None,
        })
    }

    pub fn g_x(&self) -> &DelayMatrix {
        self.generator_x.as_ref().unwrap_or(&self.generator)
    }

    pub fn h_x(&self) -> &DelayMatrix {
        self.parity_x.as_ref().unwrap_or(&self.parity)
    }

    pub fn isf_x(&self) -> &DelayMatrix {
        self.isf_x.as_ref().unwrap_or(&self.isf)
    }

    pub fn j_x(&self) -> Option<&DelayMatrix> {
        self.gauge_x.as_ref().or(self.gauge.as_ref())
    }

    pub fn n(&self) -> usize {
        self.generator.cols()
    }

    pub fn rates(&self) -> Rates {
        Rates {
            k: self.generator.rows(),
            n: self.n(),
            n_x: self.h_x().rows(),
            n_z: self.parity.rows(),
        }
    }

    pub fn nu_g(&self) -> usize {
        self.generator.degree()
    }

    pub fn nu_h(&self) -> usize {
        self.parity.degree()
    }

    pub fn nu_j(&self) -> usize {
        self.gauge.as_ref().map_or(0, |g| g.degree())
    }

    /// Swaps the X and Z sides.
    pub fn dualize(&self) -> SeedSet {
        SeedSet {
            generator: self.g_x().clone(),
            parity: self.h_x().clone(),
            isf: self.isf_x().clone(),
            gauge: self.j_x().cloned(),
            generator_x: Some(self.generator.clone()),
            parity_x: Some(self.parity.clone()),
            isf_x: Some(self.isf.clone()),
            gauge_x: self.gauge.clone(),
        }
    }
}

/// Derives `ISF_Z` pairing as δ with the X-side parity rows and 0 with the X-side generators,
/// at every relative shift.
pub fn derive_isf(
    generator: &DelayMatrix,
    parity_x: &DelayMatrix,
) -> Result<DelayMatrix, DelayError> {
    if generator.cols() != parity_x.cols() {
        return Err(DelayError::Shape(
            "generator and parity widths differ".into(),
        ));
    }
    let bound = 4 * generator.degree().max(parity_x.degree()).max(1);
    let rows = complete_side(
        parity_x.cols(),
        &masks(parity_x),
        &masks(generator),
        true,
        bound,
    )?;
    Ok(DelayMatrix::from_masks(parity_x.cols(), rows))
}

/// Derives the X-side ISF given every Z-side block.
pub fn derive_isf_x(seed: &SeedSet) -> Result<DelayMatrix, DelayError> {
    let mut others = masks(&seed.generator);
    others.extend(masks(&seed.isf));
    if let Some(j) = &seed.gauge {
        others.extend(masks(j));
    }
    let bound = 4 * seed.parity.degree().max(seed.isf.degree()).max(1);
    let rows = complete_side(seed.n(), &masks(&seed.parity), &others, false, bound)?;
    Ok(DelayMatrix::from_masks(seed.n(), rows))
}

/// Classical pseudo-inverse: minimal-degree row with `Σ_j ISF_j(D)·H_j(D) = 1` as an
/// ordinary polynomial product.
pub fn derive_isf_product(parity: &DelayMatrix) -> Result<DelayMatrix, DelayError> {
    let n = parity.cols();
    let hd = parity.degree();
    let bound = 4 * hd.max(1);
    for deg in 0..=bound {
        let nvar = n * (deg + 1);
        let out_deg = deg + hd;
        let mut eqs = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..=out_deg {
            let mut e = BitVector::zeros(nvar);
            for j in 0..n {
                let h = parity.get(0, j).fwd;
                for q in 0..=deg {
                    if k >= q && (k - q) < 64 && h >> (k - q) & 1 == 1 {
                        e.set(j * (deg + 1) + q, true);
                    }
                }
            }
            eqs.push(e);
            rhs.push(k == 0);
        }
        let a = BitMatrix::from_rows(nvar, eqs);
        if let Some(x) = Solver::new(&a).solve(&BitVector::from_bools(&rhs)) {
            let mut row = vec![0u64; n];
            for j in 0..n {
                for q in 0..=deg {
                    if x.get(j * (deg + 1) + q) {
                        row[j] |= 1 << q;
                    }
                }
            }
            return Ok(DelayMatrix::from_masks(n, vec![row]));
        }
    }
    Err(DelayError::Catastrophic(
        "no polynomial pseudo-inverse".into(),
    ))
}

/// Ordinary polynomial product `Σ_j a_j(D)·b_j(D)` of two single rows.
pub fn row_product(a: &[DelayPoly], b: &[DelayPoly]) -> Result<DelayPoly, DelayError> {
    let mut acc = DelayPoly::ZERO;
    for (x, y) in a.iter().zip(b) {
        acc = acc.add(&poly_mul(x, y)?);
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCheck {
    pub z_block: &'static str,
    pub x_block: &'static str,
    pub required_identity: bool,
    pub pass: bool,
    /// (z row, x row, shift) triples that disagree.
    pub failures: Vec<(usize, usize, isize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrthogonalityReport {
    pub blocks: Vec<BlockCheck>,
}

impl OrthogonalityReport {
    pub fn pass(&self) -> bool {
        self.blocks.iter().all(|b| b.pass)
    }

    pub fn failing(&self) -> Vec<String> {
        self.blocks
            .iter()
            .filter(|b| !b.pass)
            .map(|b| format!("{}·{}", b.z_block, b.x_block))
            .collect()
    }
}

fn check_block(
    zn: &'static str,
    z: &DelayMatrix,
    xn: &'static str,
    x: &DelayMatrix,
    identity: bool,
) -> BlockCheck {
    let mut failures = Vec::new();
    for i in 0..z.rows() {
        let zr = z.row_masks(i);
        for j in 0..x.rows() {
            let xr = x.row_masks(j);
            for d in shift_range(&zr, &xr) {
                let want = identity && i == j && d == 0;
                if pairing(&zr, &xr, d) != want {
                    failures.push((i, j, d));
                }
            }
            if identity && i == j && !pairing(&zr, &xr, 0) && !failures.contains(&(i, j, 0)) {
                failures.push((i, j, 0));
            }
        }
    }
    BlockCheck {
        z_block: zn,
        x_block: xn,
        required_identity: identity,
        pass: failures.is_empty(),
        failures,
    }
}

/// Checks every Z-block / X-block pairing against I·δ (diagonal) or 0 (off-diagonal).
pub fn verify_orthogonality(seed: &SeedSet) -> OrthogonalityReport {
    let mut zs: Vec<(&'static str, &DelayMatrix)> = vec![
        ("G_Z", &seed.generator),
        ("H_Z", &seed.parity),
        ("ISF_Z", &seed.isf),
    ];
    let mut xs: Vec<(&'static str, &DelayMatrix)> = vec![
        ("G_X", seed.g_x()),
        ("ISF_X", seed.isf_x()),
        ("H_X", seed.h_x()),
    ];
    if let Some(j) = &seed.gauge {
        zs.push(("J_Z", j));
    }
    if let Some(j) = seed.j_x() {
        xs.push(("J_X", j));
    }
    let mut blocks = Vec::new();
    for (zi, (zn, z)) in zs.iter().enumerate() {
        for (xi, (xn, x)) in xs.iter().enumerate() {
            blocks.push(check_block(zn, z, xn, x, zi == xi));
        }
    }
    OrthogonalityReport { blocks }
}

/// Sheet seed with virtual ancillas: Ḡ = [G|0|0], H̄ = [H_Z|0|0], P̄ = [H_X|I|I],
/// ISF̄_Z zero-padded, gauges J̄_Z (given or derived) and their X partners.
pub fn build_sheet_seed(
    base: &SeedSet,
    gauge_z: Option<DelayMatrix>,
) -> Result<SeedSet, DelayError> {
    let Rates { n, n_x, .. } = base.rates();
    if n_x == 0 {
        return Ok(base.clone());
    }
    let w = n + 2 * n_x;
    let pad = |m: &DelayMatrix| m.pad_cols(2 * n_x);
    let mut p = pad(base.h_x());
    for i in 0..n_x {
        p.set(i, n + i, DelayPoly::ONE);
        p.set(i, n + n_x + i, DelayPoly::ONE);
    }
    let g = pad(&base.generator);
    let g_x = pad(base.g_x());
    let h_z = pad(&base.parity);
    let isf_z = pad(&base.isf);
    let j_z = match gauge_z {
        Some(j) => {
            if j.cols() != w || j.rows() != 2 * n_x {
                return Err(DelayError::Gauge(format!(
                    "expected {}x{} gauge, got {}x{}",
                    2 * n_x,
                    w,
                    j.rows(),
                    j.cols()
                )));
            }
            j
        }
        None => {
            let mut j = DelayMatrix::zeros(2 * n_x, w);
            for i in 0..n_x {
                for c in 0..n {
                    j.set(i, c, base.isf.get(i, c));
                }
                j.set(i, n + i, DelayPoly::ONE);
                j.set(n_x + i, n + i, DelayPoly::ONE);
                j.set(n_x + i, n + n_x + i, DelayPoly::ONE);
            }
            j
        }
    };
    for i in 0..j_z.rows() {
        let jr = j_z.row_masks(i);
        for k in 0..p.rows() {
            let pr = p.row_masks(k);
            for d in shift_range(&jr, &pr) {
                if pairing(&jr, &pr, d) {
                    return Err(DelayError::Gauge(format!(
                        "gauge row {i} does not commute with parity row {k} at shift {d}"
                    )));
                }
            }
        }
    }
    let mut z_rows = masks(&g);
    z_rows.extend(masks(&h_z));
    z_rows.extend(masks(&isf_z));
    z_rows.extend(masks(&j_z));
    let k = g.rows();
    let nz = h_z.rows();
    let nxr = isf_z.rows();
    let bound = 4 * z_rows
        .iter()
        .map(|r| mask_degree(r))
        .max()
        .unwrap_or(1)
        .max(1);
    // X side: ISF_X pairs with H̄, J_X pairs with J̄_Z; both orthogonal to the rest.
    let solve_x = |dual_idx: usize| -> Result<Vec<u64>, DelayError> {
        for deg in 0..=bound {
            let cons: Vec<PairConstraint<'_>> = z_rows
                .iter()
                .enumerate()
                .map(|(i, r)| PairConstraint {
                    row: r,
                    target: i == dual_idx,
                })
                .collect();
            if let Some(r) = solve_row(w, deg, &cons, false) {
                return Ok(r);
            }
        }
        Err(DelayError::Gauge(format!(
            "no X partner for Z row {dual_idx}"
        )))
    };
    let mut isf_x = Vec::new();
    for i in 0..nz {
        isf_x.push(solve_x(k + i)?);
    }
    let mut j_x = Vec::new();
    for i in 0..j_z.rows() {
        j_x.push(solve_x(k + nz + nxr + i)?);
    }
    // P̄ must be the partner of ISF̄_Z; G_X partner of G.
    let sheet = SeedSet {
        generator: g,
        parity: h_z,
        isf: isf_z,
        gauge: Some(j_z),
        generator_x: Some(g_x),
        parity_x: Some(p),
        isf_x: Some(DelayMatrix::from_masks(w, isf_x)),
        gauge_x: Some(DelayMatrix::from_masks(w, j_x)),
    };
    let rep = verify_orthogonality(&sheet);
    if !rep.pass() {
        return Err(DelayError::Gauge(format!(
            "sheet identities fail: {:?}",
            rep.failing()
        )));
    }
    Ok(sheet)
}

/// The explicit C3 sheet gauge J̄_Z = [[1+D, 1, 1, D, 0], [0, 0, 0, 1, 1]].
pub fn c3_sheet_gauge() -> DelayMatrix {
    DelayMatrix::from_exps(&[
        vec![vec![0, 1], vec![0], vec![0], vec![1], vec![]],
        vec![vec![], vec![], vec![], vec![0], vec![0]],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_rule() {
        let p = poly_mul(&DelayPoly::d(1), &DelayPoly::d_tilde(1)).unwrap();
        assert_eq!(p, DelayPoly::ONE);
        let z = poly_mul(&DelayPoly::d(2), &DelayPoly::d_tilde(1)).unwrap();
        assert_eq!(z, DelayPoly::ZERO);
    }

    #[test]
    fn dual_dual_rejected() {
        assert_eq!(
            poly_mul(&DelayPoly::d_tilde(1), &DelayPoly::d_tilde(0)),
            Err(DelayError::DualProduct)
        );
    }

    #[test]
    fn convolution_product() {
        let a = DelayPoly::from_exps(&[0, 1, 2]);
        let b = DelayPoly::from_exps(&[0, 2]);
        assert_eq!(
            poly_mul(&a, &b).unwrap(),
            DelayPoly::from_exps(&[0, 1, 3, 4])
        );
        assert_eq!(poly_mul(&DelayPoly::ONE, &a).unwrap(), a);
    }

    #[test]
    fn zero_seed_expands_to_zero() {
        let z = DelayMatrix::zeros(1, 3);
        assert!(expand(&z, 4, Boundary::Terminated).unwrap().is_zero());
    }

    #[test]
    fn tau_too_small() {
        let h = DelayMatrix::from_exps(&[vec![vec![0, 1, 2], vec![0, 2], vec![0]]]);
        assert!(matches!(
            expand(&h, 2, Boundary::Terminated),
            Err(DelayError::TauTooSmall { .. })
        ));
    }

    #[test]
    fn open_boundary_keeps_partial_rows() {
        let h = DelayMatrix::from_exps(&[vec![vec![0, 1, 2], vec![0, 2], vec![0]]]);
        assert_eq!(expand(&h, 5, Boundary::Open).unwrap().rows(), 7);
        assert_eq!(expand(&h, 5, Boundary::Terminated).unwrap().rows(), 3);
    }
}
