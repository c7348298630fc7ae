//! Iterative decoding of a foliated code: per-sheet SISO, ancilla marginal
//! exchange between next-nearest decoding sheets, hardening and assembly.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::code::{CheckInverse, FoliatedCode, QubitRole, SheetKind};
use crate::gf2::{BitMatrix, BitVector, Solver};
use crate::siso::{
    combine_beliefs, decode_sheet, extrinsic, Layout, Semiring, SheetModel, SisoError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExchangeRule {
    /// Prior for the next round = channel prior combined with the other sheet's extrinsic output.
    Extrinsic,
    /// Prior for the next round = the other sheet's full posterior.
    Posterior,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecoderConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub exchange: ExchangeRule,
    pub parallel_sheets: bool,
    /// Re-decode each sheet with ancillas pinned to their hard values before the
    /// logical decision (otherwise the exchanged soft marginals decide).
    pub pin_final: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            max_iters: 30,
            tol: 1e-4,
            exchange: ExchangeRule::Extrinsic,
            parallel_sheets: true,
            pin_final: false,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub convergence: Vec<f64>,
    pub converged: bool,
    /// Final hardening used averaged, inconsistent marginals.
    pub fallback: bool,
    /// A global repair was needed to match the syndrome.
    pub patched: bool,
}

/// Per decoding sheet: incoming ancilla priors and outgoing posteriors, by copy.
#[derive(Clone, Debug)]
pub struct ExchangeState {
    pub prior_in: Vec<Vec<Vec<f64>>>,
    pub posterior: Vec<Vec<Vec<f64>>>,
    pub iteration: usize,
    pub history: Vec<f64>,
}

/// One decoding sheet: code qubits of sheet `m` and the ancillas it reads.
#[derive(Clone, Debug)]
pub struct SheetSlot {
    pub sheet: usize,
    pub model: Arc<SheetModel>,
    /// Physical sheet hosting each ancilla copy.
    pub neighbours: Vec<usize>,
}

/// Reusable decoder for a foliated code.
pub struct FoliatedDecoder {
    pub fc: FoliatedCode,
    pub slots: Vec<SheetSlot>,
    pub config: DecoderConfig,
    pub assembler: Assembler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum SheetKindKey {
    Primal,
    Dual,
}

fn key(k: SheetKind) -> SheetKindKey {
    match k {
        SheetKind::Primal => SheetKindKey::Primal,
        SheetKind::Dual => SheetKindKey::Dual,
    }
}

/// Pure-error solver and logical completion for one sheet code.
#[derive(Clone, Debug)]
pub struct SheetInverse {
    pub checks: BitMatrix,
    pub inverse: CheckInverse,
    pub logical_x: BitMatrix,
    /// `g_i` with `x_i · g_j = δ_ij`.
    pub dual_z: BitMatrix,
}

impl SheetInverse {
    pub fn new(checks: &BitMatrix, logical_x: &BitMatrix, logical_z: &BitMatrix) -> Self {
        SheetInverse {
            checks: checks.clone(),
            inverse: CheckInverse::new(checks),
            logical_x: logical_x.clone(),
            dual_z: dual_logicals(logical_x, logical_z),
        }
    }

    /// Code-only correction with syndrome `s` and logical values `l`.
    pub fn assemble(&self, s: &BitVector, l: &[bool]) -> Option<BitVector> {
        let mut e = self.inverse.solve(s)?;
        let cur = self.logical_x.mul_vec(&e);
        for (i, &want) in l.iter().enumerate() {
            if cur.get(i) != want {
                e.xor_assign(self.dual_z.row(i));
            }
        }
        Some(e)
    }
}

/// Rows `g_i = Σ_j N_ij z_j` with `x_k · g_i = δ_ik`.
pub fn dual_logicals(lx: &BitMatrix, lz: &BitMatrix) -> BitMatrix {
    let k = lx.rows();
    let m = crate::gf2::matmul(lx, &lz.transpose()).expect("logical widths");
    if m == BitMatrix::identity(k) {
        return lz.clone();
    }
    // Solve Mᵀ-system row by row: N Mᵀ = I, i.e. M Nᵀ = I.
    let solver = Solver::new(&m);
    let mut rows = Vec::with_capacity(k);
    for i in 0..k {
        let col = solver
            .solve(&BitVector::from_indices(k, &[i]))
            .expect("logical pairing is invertible");
        rows.push(lz.combine_rows(&col));
    }
    BitMatrix::from_rows(lz.cols(), rows)
}

impl FoliatedDecoder {
    /// Builds sheet trellises; `layout` places the base code qubits in frames.
    pub fn new(
        fc: &FoliatedCode,
        layout: &Layout,
        config: DecoderConfig,
    ) -> Result<Self, SisoError> {
        let mut cache: HashMap<(SheetKindKey, usize), Arc<SheetModel>> = HashMap::new();
        let mut slots = Vec::new();
        for m in 0..fc.sheets {
            let neighbours: Vec<usize> = if fc.sheets == 1 {
                vec![0]
            } else {
                let mut v = Vec::new();
                if m > 0 {
                    v.push(m - 1);
                }
                if m + 1 < fc.sheets {
                    v.push(m + 1);
                }
                v
            };
            let k = key(fc.kind(m));
            let model = match cache.get(&(k, neighbours.len())) {
                Some(mm) => mm.clone(),
                None => {
                    let mm = Arc::new(SheetModel::new(
                        fc.sheet_x_checks(m),
                        fc.sheet_logical_x(m),
                        layout,
                        neighbours.len(),
                    )?);
                    cache.insert((k, neighbours.len()), mm.clone());
                    mm
                }
            };
            slots.push(SheetSlot {
                sheet: m,
                model,
                neighbours,
            });
        }
        Ok(FoliatedDecoder {
            fc: fc.clone(),
            slots,
            config,
            assembler: Assembler::new(fc),
        })
    }

    fn sheet_syndrome(&self, m: usize, syndrome: &BitVector) -> BitVector {
        self.assembler.sheet_syndrome(m, syndrome)
    }

    fn code_priors(&self, m: usize, priors: &[f64]) -> Vec<f64> {
        let off = self.fc.offsets[m];
        priors[off..off + self.fc.base.n].to_vec()
    }

    fn ancilla_prior(&self, nb: usize, h: usize, priors: &[f64]) -> f64 {
        priors[self.fc.qubit_index(nb, QubitRole::Ancilla(h))]
    }

    /// Decoding sheet (and copy) on the other side of ancilla `h` of sheet `nb`, seen from `m`.
    fn partner(&self, m: usize, nb: usize) -> Option<(usize, usize)> {
        let other = if nb + 1 == m {
            nb.checked_sub(1)
        } else {
            Some(nb + 1)
        };
        let other = other.filter(|&o| o < self.fc.sheets && o != m)?;
        let copy = self.slots[other].neighbours.iter().position(|&x| x == nb)?;
        Some((other, copy))
    }

    fn initial_state(&self, priors: &[f64]) -> ExchangeState {
        let prior_in: Vec<Vec<Vec<f64>>> = self
            .slots
            .iter()
            .map(|s| {
                s.neighbours
                    .iter()
                    .map(|&nb| {
                        (0..s.model.n_checks)
                            .map(|h| self.ancilla_prior(nb, h, priors))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ExchangeState {
            posterior: prior_in.clone(),
            prior_in,
            iteration: 0,
            history: Vec::new(),
        }
    }

    fn run_sheets(
        &self,
        syndrome: &BitVector,
        priors: &[f64],
        state: &ExchangeState,
        logical_priors: Option<&[Vec<f64>]>,
    ) -> Result<Vec<crate::siso::SheetPosterior>, SisoError> {
        let one = |m: usize| {
            let slot = &self.slots[m];
            decode_sheet(
                &slot.model,
                &self.sheet_syndrome(m, syndrome),
                &self.code_priors(m, priors),
                &state.prior_in[m],
                logical_priors.map(|l| l[m].as_slice()),
                Semiring::SumProduct,
            )
        };
        if self.config.parallel_sheets && self.slots.len() > 1 {
            (0..self.slots.len()).into_par_iter().map(one).collect()
        } else {
            (0..self.slots.len()).map(one).collect()
        }
    }

    /// Runs the exchange loop; returns the final state and last sheet posteriors.
    pub fn exchange(
        &self,
        syndrome: &BitVector,
        priors: &[f64],
        max_iters: usize,
        logical_priors: Option<&[Vec<f64>]>,
        start: Option<ExchangeState>,
    ) -> Result<(ExchangeState, Vec<crate::siso::SheetPosterior>, bool), SisoError> {
        let mut state = start.unwrap_or_else(|| self.initial_state(priors));
        let mut converged = false;
        let mut posts = Vec::new();
        for _ in 0..max_iters.max(1) {
            posts = self.run_sheets(syndrome, priors, &state, logical_priors)?;
            state.iteration += 1;
            for (m, p) in posts.iter().enumerate() {
                state.posterior[m] = p.ancilla.clone();
            }
            // Consistency between the two decoding sheets of each shared ancilla.
            let mut metric = 0.0f64;
            let mut next = state.prior_in.clone();
            for m in 0..self.slots.len() {
                for (k, &nb) in self.slots[m].neighbours.iter().enumerate() {
                    let Some((o, ok)) = self.partner(m, nb) else {
                        continue;
                    };
                    for h in 0..self.slots[m].model.n_checks {
                        let mine = state.posterior[m][k][h];
                        let theirs = state.posterior[o][ok][h];
                        metric = metric.max((mine - theirs).abs());
                        next[m][k][h] = match self.config.exchange {
                            ExchangeRule::Extrinsic => combine_beliefs(
                                self.ancilla_prior(nb, h, priors),
                                extrinsic(theirs, state.prior_in[o][ok][h]),
                            ),
                            ExchangeRule::Posterior => theirs,
                        };
                    }
                }
            }
            state.history.push(metric);
            state.prior_in = next;
            if metric < self.config.tol {
                converged = true;
                break;
            }
        }
        Ok((state, posts, converged))
    }

    /// Decodes a foliated syndrome into a correction over all qubits.
    pub fn decode(
        &self,
        syndrome: &BitVector,
        priors: &[f64],
    ) -> Result<(BitVector, Diagnostics), SisoError> {
        self.decode_with(syndrome, priors, None)
    }

    /// As [`decode`](Self::decode) with per-sheet logical priors.
    pub fn decode_with(
        &self,
        syndrome: &BitVector,
        priors: &[f64],
        logical_priors: Option<&[Vec<f64>]>,
    ) -> Result<(BitVector, Diagnostics), SisoError> {
        let fc = &self.fc;
        if syndrome.len() != fc.n_checks() || priors.len() != fc.n_qubits {
            return Err(SisoError::Length("syndrome or prior length".into()));
        }
        let mut diag = Diagnostics::default();
        if syndrome.is_zero() && logical_priors.is_none() {
            diag.iterations = 1;
            diag.converged = true;
            return Ok((BitVector::zeros(fc.n_qubits), diag));
        }
        let (state, posts, converged) = self.exchange(
            syndrome,
            priors,
            self.config.max_iters,
            logical_priors,
            None,
        )?;
        diag.iterations = state.iteration;
        diag.convergence = state.history.clone();
        diag.converged = converged;
        diag.fallback = !converged;
        let (corr, patched) = self.finish(syndrome, priors, &state, &posts, logical_priors)?;
        diag.patched = patched;
        Ok((corr, diag))
    }

    /// Hardening, per-sheet logical decisions and correction assembly.
    pub fn finish(
        &self,
        syndrome: &BitVector,
        priors: &[f64],
        state: &ExchangeState,
        posts: &[crate::siso::SheetPosterior],
        logical_priors: Option<&[Vec<f64>]>,
    ) -> Result<(BitVector, bool), SisoError> {
        let fc = &self.fc;
        if fc.sheets == 1 {
            let l: Vec<bool> = posts[0].logical.iter().map(|&p| p > 0.5).collect();
            return Ok(self.assembler.correction(syndrome, None, &[l]));
        }
        let hard = average_and_harden(self, state);
        let mut logicals = Vec::with_capacity(fc.sheets);
        for m in 0..fc.sheets {
            let slot = &self.slots[m];
            let logical = if !self.config.pin_final {
                posts[m].logical.clone()
            } else {
                let pinned: Vec<Vec<f64>> = slot
                    .neighbours
                    .iter()
                    .map(|&nb| {
                        hard[nb]
                            .to_bools()
                            .iter()
                            .map(|&b| if b { 1.0 } else { 0.0 })
                            .collect()
                    })
                    .collect();
                match decode_sheet(
                    &slot.model,
                    &self.sheet_syndrome(m, syndrome),
                    &self.code_priors(m, priors),
                    &pinned,
                    logical_priors.map(|l| l[m].as_slice()),
                    Semiring::SumProduct,
                ) {
                    Ok(p) => p.logical,
                    Err(SisoError::Unsatisfiable(_)) => posts[m].logical.clone(),
                    Err(e) => return Err(e),
                }
            };
            logicals.push(logical.iter().map(|&p| p > 0.5).collect());
        }
        Ok(self.assembler.correction(syndrome, Some(&hard), &logicals))
    }
}

/// Builds corrections from hard ancilla values and per-sheet logical decisions.
pub struct Assembler {
    fc: FoliatedCode,
    inverses: HashMap<SheetKindKey, SheetInverse>,
    ancillas: Vec<usize>,
    ancilla_solver: OnceLock<Solver>,
    global: OnceLock<Solver>,
}

impl Assembler {
    pub fn new(fc: &FoliatedCode) -> Self {
        let mut inverses = HashMap::new();
        for m in 0..fc.sheets {
            inverses.entry(key(fc.kind(m))).or_insert_with(|| {
                SheetInverse::new(
                    fc.sheet_x_checks(m),
                    fc.sheet_logical_x(m),
                    fc.sheet_logical_z(m),
                )
            });
        }
        let ancillas = (0..fc.n_qubits)
            .filter(|&q| matches!(fc.qubit_role(q).1, QubitRole::Ancilla(_)))
            .collect();
        Assembler {
            fc: fc.clone(),
            inverses,
            ancillas,
            ancilla_solver: OnceLock::new(),
            global: OnceLock::new(),
        }
    }

    pub fn sheet_syndrome(&self, m: usize, syndrome: &BitVector) -> BitVector {
        let idx = &self.fc.sheet_checks[m];
        let mut s = BitVector::zeros(idx.len());
        for (h, &c) in idx.iter().enumerate() {
            if syndrome.get(c) {
                s.set(h, true);
            }
        }
        s
    }

    /// Correction whose sheet-`m` code part carries logical values `logicals[m]`.
    /// `hard[nb]` are hardened ancillas of physical sheet `nb`; with `None` the
    /// whole sheet syndrome is explained by code qubits where possible.
    pub fn correction(
        &self,
        syndrome: &BitVector,
        hard: Option<&[BitVector]>,
        logicals: &[Vec<bool>],
    ) -> (BitVector, bool) {
        let fc = &self.fc;
        let mut corr = BitVector::zeros(fc.n_qubits);
        if let Some(hard) = hard {
            for (nb, bits) in hard.iter().enumerate() {
                for h in bits.iter_ones() {
                    corr.set(fc.qubit_index(nb, QubitRole::Ancilla(h)), true);
                }
            }
        }
        for m in 0..fc.sheets {
            let raw = self.sheet_syndrome(m, syndrome);
            let mut s = raw.clone();
            if let Some(hard) = hard {
                for nb in [m.wrapping_sub(1), m + 1] {
                    if nb < fc.sheets {
                        s.xor_assign(&hard[nb]);
                    }
                }
            }
            let inv = &self.inverses[&key(fc.kind(m))];
            let e = inv.assemble(&s, &logicals[m]).or_else(|| {
                // Fall back to a code-only reading of the raw syndrome.
                inv.assemble(&raw, &logicals[m])
            });
            if let Some(e) = e {
                for j in e.iter_ones() {
                    corr.set(fc.offsets[m] + j, true);
                }
            }
        }
        self.patch(syndrome, corr)
    }

    /// Repairs a correction whose syndrome is off, preferring ancilla flips
    /// (which leave every correlation surface untouched).
    pub fn patch(&self, syndrome: &BitVector, mut corr: BitVector) -> (BitVector, bool) {
        let got = crate::code::extract_syndrome(&self.fc, &corr).expect("length");
        let diff = got.xor(syndrome);
        if diff.is_zero() {
            return (corr, false);
        }
        let anc = self.ancilla_solver.get_or_init(|| {
            let pc = self.fc.parity_checks();
            let mut a = BitMatrix::zeros(pc.rows(), self.ancillas.len());
            for (col, &q) in self.ancillas.iter().enumerate() {
                for &c in &self.fc.qubit_checks[q] {
                    a.set(c, col, true);
                }
            }
            Solver::new(&a)
        });
        if let Some(x) = anc.solve(&diff) {
            for col in x.iter_ones() {
                corr.flip(self.ancillas[col]);
            }
            return (corr, true);
        }
        let solver = self
            .global
            .get_or_init(|| Solver::new(&self.fc.parity_checks()));
        if let Some(fix) = solver.solve(&diff) {
            corr.xor_assign(&fix);
        }
        (corr, true)
    }
}

/// Averages the two posteriors of every shared ancilla and hardens each at 0.5
/// (ties go to no error). Returns hard ancilla bits per physical sheet.
pub fn average_and_harden(dec: &FoliatedDecoder, state: &ExchangeState) -> Vec<BitVector> {
    let fc = &dec.fc;
    let mut sum: Vec<Vec<f64>> = fc.n_ancilla.iter().map(|&n| vec![0.0; n]).collect();
    let mut cnt: Vec<Vec<u32>> = fc.n_ancilla.iter().map(|&n| vec![0; n]).collect();
    for (m, slot) in dec.slots.iter().enumerate() {
        for (k, &nb) in slot.neighbours.iter().enumerate() {
            for h in 0..slot.model.n_checks {
                sum[nb][h] += state.posterior[m][k][h];
                cnt[nb][h] += 1;
            }
        }
    }
    sum.iter()
        .zip(cnt.iter())
        .map(|(s, c)| {
            let bits: Vec<bool> = s
                .iter()
                .zip(c.iter())
                .map(|(&v, &n)| n > 0 && v / n as f64 > 0.5)
                .collect();
            BitVector::from_bools(&bits)
        })
        .collect()
}

/// Convenience wrapper: builds a decoder and decodes once.
pub fn decode_foliated(
    fc: &FoliatedCode,
    layout: &Layout,
    syndrome: &BitVector,
    priors: &[f64],
    config: DecoderConfig,
) -> Result<(BitVector, Diagnostics), SisoError> {
    FoliatedDecoder::new(fc, layout, config)?.decode(syndrome, priors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{foliate, steane};

    #[test]
    fn zero_syndrome_zero_correction() {
        let fc = foliate(&steane(), 3);
        let s = BitVector::zeros(fc.n_checks());
        let (c, d) = decode_foliated(
            &fc,
            &Layout::single(7),
            &s,
            &vec![0.05; fc.n_qubits],
            DecoderConfig::default(),
        )
        .unwrap();
        assert!(c.is_zero());
        assert_eq!(d.iterations, 1);
    }

    #[test]
    fn dual_logicals_pair_to_identity() {
        let lx = BitMatrix::parse_rows(&["1100", "0110"]);
        let lz = BitMatrix::parse_rows(&["0100", "0010"]);
        let g = dual_logicals(&lx, &lz);
        assert_eq!(
            crate::gf2::matmul(&lx, &g.transpose()).unwrap(),
            BitMatrix::identity(2)
        );
    }
}
