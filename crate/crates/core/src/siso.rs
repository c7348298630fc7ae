//! Soft-input soft-output decoding on a trellis: forward pass, backward pass and
//! local update, in sum-product or max-product form.

use thiserror::Error;

use crate::gf2::{BitMatrix, BitVector};
use crate::trellis::{parity_trellis_masked, ParityRow, Trellis, TrellisError, DEFAULT_STATE_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SisoError {
    #[error("trellis unsatisfiable at frame {0}")]
    Unsatisfiable(usize),
    #[error("length mismatch: {0}")]
    Length(String),
    #[error(transparent)]
    Trellis(#[from] TrellisError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Semiring {
    #[default]
    SumProduct,
    MaxProduct,
}

/// Per-boundary state tables with the log of the normalisation constants.
#[derive(Clone, Debug)]
pub struct PassTable {
    pub table: Vec<Vec<f64>>,
    pub log_norm: f64,
}

/// Posterior marginals from a SISO run.
#[derive(Clone, Debug)]
pub struct Marginals {
    /// Probability of error on each trellis variable.
    pub qubit: Vec<f64>,
    /// Probability that each labelled row reads 1.
    pub logical: Vec<f64>,
    /// Normalised distribution over frame error patterns.
    pub frame_patterns: Vec<Vec<f64>>,
    /// Log of the total path weight.
    pub log_likelihood: f64,
}

/// Probability of every frame error pattern under independent priors.
pub fn frame_table(priors: &[f64], t: usize, width: usize) -> Vec<f64> {
    let mut tab = vec![1.0f64];
    for q in 0..width {
        let p = priors[t * width + q];
        let mut next = vec![0.0; tab.len() * 2];
        let (lo, hi) = next.split_at_mut(tab.len());
        for (i, v) in tab.iter().enumerate() {
            lo[i] = v * (1.0 - p);
            hi[i] = v * p;
        }
        tab = next;
    }
    tab
}

fn label_table(label_ids: &[usize], logical_priors: Option<&[f64]>) -> Vec<f64> {
    let mut tab = vec![1.0f64];
    for &l in label_ids {
        let p = logical_priors.map_or(0.5, |lp| lp[l]);
        let mut next = vec![0.0; tab.len() * 2];
        let (lo, hi) = next.split_at_mut(tab.len());
        for (i, v) in tab.iter().enumerate() {
            lo[i] = v * (1.0 - p);
            hi[i] = v * p;
        }
        tab = next;
    }
    tab
}

fn check_inputs(
    tr: &Trellis,
    e0: &BitVector,
    priors: &[f64],
    lp: Option<&[f64]>,
) -> Result<(), SisoError> {
    if e0.len() != tr.n_vars() || priors.len() != tr.n_vars() {
        return Err(SisoError::Length(format!(
            "expected {} variables, got e0 {} priors {}",
            tr.n_vars(),
            e0.len(),
            priors.len()
        )));
    }
    if let Some(lp) = lp {
        if lp.len() < tr.n_labels {
            return Err(SisoError::Length(format!(
                "expected {} logical priors, got {}",
                tr.n_labels,
                lp.len()
            )));
        }
    }
    Ok(())
}

fn normalise(v: &mut [f64], t: usize) -> Result<f64, SisoError> {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(SisoError::Unsatisfiable(t));
    }
    for x in v.iter_mut() {
        *x /= s;
    }
    Ok(s.ln())
}

#[inline]
fn combine(mode: Semiring, acc: &mut f64, w: f64) {
    match mode {
        Semiring::SumProduct => *acc += w,
        Semiring::MaxProduct => {
            if w > *acc {
                *acc = w
            }
        }
    }
}

/// A(α_{t+1}) = Σ A(α_t)·Pr(p_t + e⁰_t)·Pr(l_t), normalised per frame.
pub fn forward_pass(
    tr: &Trellis,
    e0: &BitVector,
    priors: &[f64],
    logical_priors: Option<&[f64]>,
    mode: Semiring,
) -> Result<PassTable, SisoError> {
    check_inputs(tr, e0, priors, logical_priors)?;
    let mut table = Vec::with_capacity(tr.frames + 1);
    let mut cur = vec![1.0f64];
    let mut log_norm = 0.0;
    for (t, sec) in tr.sections.iter().enumerate() {
        let ft = frame_table(priors, t, tr.width);
        let lt = label_table(&sec.label_ids, logical_priors);
        let e0t = tr.frame_bits(e0, t);
        let mut next = vec![0.0f64; sec.n_out];
        for x in &sec.trans {
            let a = cur[x.from as usize];
            if a == 0.0 {
                continue;
            }
            let w = a * ft[(x.pattern ^ e0t) as usize] * lt[x.labels as usize];
            combine(mode, &mut next[x.to as usize], w);
        }
        table.push(cur);
        log_norm += normalise(&mut next, t)?;
        cur = next;
    }
    table.push(cur);
    Ok(PassTable { table, log_norm })
}

/// Mirror of [`forward_pass`] from the last frame.
pub fn backward_pass(
    tr: &Trellis,
    e0: &BitVector,
    priors: &[f64],
    logical_priors: Option<&[f64]>,
    mode: Semiring,
) -> Result<PassTable, SisoError> {
    check_inputs(tr, e0, priors, logical_priors)?;
    let mut table = vec![Vec::new(); tr.frames + 1];
    let mut cur = vec![1.0f64; tr.sections.last().map_or(1, |s| s.n_out)];
    let mut log_norm = 0.0;
    for t in (0..tr.frames).rev() {
        let sec = &tr.sections[t];
        let ft = frame_table(priors, t, tr.width);
        let lt = label_table(&sec.label_ids, logical_priors);
        let e0t = tr.frame_bits(e0, t);
        let mut prev = vec![0.0f64; sec.n_in];
        for x in &sec.trans {
            let b = cur[x.to as usize];
            if b == 0.0 {
                continue;
            }
            let w = b * ft[(x.pattern ^ e0t) as usize] * lt[x.labels as usize];
            combine(mode, &mut prev[x.from as usize], w);
        }
        table[t + 1] = cur;
        log_norm += normalise(&mut prev, t)?;
        cur = prev;
    }
    table[0] = cur;
    Ok(PassTable { table, log_norm })
}

/// Frame-pattern, per-qubit and label marginals from the two pass tables.
pub fn local_update(
    tr: &Trellis,
    a: &PassTable,
    b: &PassTable,
    e0: &BitVector,
    priors: &[f64],
    logical_priors: Option<&[f64]>,
    mode: Semiring,
) -> Result<Marginals, SisoError> {
    check_inputs(tr, e0, priors, logical_priors)?;
    let w = tr.width;
    let mut qubit = vec![0.0; tr.n_vars()];
    let mut logical = vec![0.0; tr.n_labels];
    let mut frame_patterns = Vec::with_capacity(tr.frames);
    for (t, sec) in tr.sections.iter().enumerate() {
        let ft = frame_table(priors, t, w);
        let lt = label_table(&sec.label_ids, logical_priors);
        let e0t = tr.frame_bits(e0, t);
        let at = &a.table[t];
        let bt = &b.table[t + 1];
        let mut pat = vec![0.0f64; 1 << w];
        let mut lab = vec![0.0f64; 1 << sec.label_ids.len()];
        for x in &sec.trans {
            let av = at[x.from as usize];
            let bv = bt[x.to as usize];
            if av == 0.0 || bv == 0.0 {
                continue;
            }
            let e = (x.pattern ^ e0t) as usize;
            let v = av * bv * ft[e] * lt[x.labels as usize];
            combine(mode, &mut pat[e], v);
            combine(mode, &mut lab[x.labels as usize], v);
        }
        let z: f64 = match mode {
            Semiring::SumProduct => pat.iter().sum(),
            Semiring::MaxProduct => pat.iter().cloned().fold(0.0, f64::max),
        };
        if !(z > 0.0) {
            return Err(SisoError::Unsatisfiable(t));
        }
        // Per-qubit marginals: sum (or max) over patterns with / without the bit.
        for q in 0..w {
            let (mut on, mut off) = (0.0f64, 0.0f64);
            for (e, v) in pat.iter().enumerate() {
                if e >> q & 1 == 1 {
                    combine(mode, &mut on, *v);
                } else {
                    combine(mode, &mut off, *v);
                }
            }
            qubit[t * w + q] = if on + off > 0.0 { on / (on + off) } else { 0.0 };
        }
        for (bit, &l) in sec.label_ids.iter().enumerate() {
            let (mut on, mut off) = (0.0f64, 0.0f64);
            for (x, v) in lab.iter().enumerate() {
                if x >> bit & 1 == 1 {
                    combine(mode, &mut on, *v);
                } else {
                    combine(mode, &mut off, *v);
                }
            }
            logical[l] = if on + off > 0.0 { on / (on + off) } else { 0.0 };
        }
        let total: f64 = pat.iter().sum();
        for v in pat.iter_mut() {
            *v /= total;
        }
        frame_patterns.push(pat);
    }
    Ok(Marginals {
        qubit,
        logical,
        frame_patterns,
        log_likelihood: a.log_norm,
    })
}

/// Full SISO run on a trellis.
pub fn decode_trellis(
    tr: &Trellis,
    e0: &BitVector,
    priors: &[f64],
    logical_priors: Option<&[f64]>,
    mode: Semiring,
) -> Result<Marginals, SisoError> {
    let a = forward_pass(tr, e0, priors, logical_priors, mode)?;
    let b = backward_pass(tr, e0, priors, logical_priors, mode)?;
    local_update(tr, &a, &b, e0, priors, logical_priors, mode)
}

/// Extrinsic probability: posterior divided by prior, renormalised over {0,1}.
pub fn extrinsic(posterior: f64, prior: f64) -> f64 {
    if prior <= 0.0 || prior >= 1.0 {
        return 0.5;
    }
    let on = posterior / prior;
    let off = (1.0 - posterior) / (1.0 - prior);
    if on + off > 0.0 {
        on / (on + off)
    } else {
        0.5
    }
}

/// Product of two independent binary beliefs, renormalised.
pub fn combine_beliefs(a: f64, b: f64) -> f64 {
    let on = a * b;
    let off = (1.0 - a) * (1.0 - b);
    if on + off > 0.0 {
        on / (on + off)
    } else {
        0.5
    }
}

/// Position of each code qubit of a sheet in the (frame, column) grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub frames: usize,
    pub code_width: usize,
    pub pos: Vec<(usize, usize)>,
}

impl Layout {
    /// Qubit `t·width + c` at frame `t`, column `c`.
    pub fn framed(width: usize, frames: usize) -> Self {
        Layout {
            frames,
            code_width: width,
            pos: (0..width * frames)
                .map(|j| (j / width, j % width))
                .collect(),
        }
    }

    /// Every qubit in one frame.
    pub fn single(n: usize) -> Self {
        Layout {
            frames: 1,
            code_width: n,
            pos: (0..n).map(|j| (0, j)).collect(),
        }
    }
}

/// A decoding sheet: code qubits plus `copies` virtual ancilla sets, one ancilla
/// per check in each set, compiled into a parity trellis.
#[derive(Clone, Debug)]
pub struct SheetModel {
    pub trellis: Trellis,
    pub n_code: usize,
    pub n_checks: usize,
    pub copies: usize,
    pub var_of_code: Vec<usize>,
    /// `var_of_ancilla[copy][check]`.
    pub var_of_ancilla: Vec<Vec<usize>>,
    pub n_logicals: usize,
}

/// Posterior output of [`decode_sheet`].
#[derive(Clone, Debug)]
pub struct SheetPosterior {
    pub code: Vec<f64>,
    pub ancilla: Vec<Vec<f64>>,
    pub logical: Vec<f64>,
    pub log_likelihood: f64,
}

impl SheetModel {
    /// Builds the sheet trellis. `checks` and `logicals` are over code qubits.
    pub fn new(
        checks: &BitMatrix,
        logicals: &BitMatrix,
        layout: &Layout,
        copies: usize,
    ) -> Result<Self, SisoError> {
        Self::with_cap(checks, logicals, layout, copies, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(
        checks: &BitMatrix,
        logicals: &BitMatrix,
        layout: &Layout,
        copies: usize,
        cap: usize,
    ) -> Result<Self, SisoError> {
        let n_code = layout.pos.len();
        if checks.cols() != n_code || logicals.cols() != n_code {
            return Err(SisoError::Length("check width differs from layout".into()));
        }
        let frames = layout.frames.max(1);
        // Each check's ancillas go to the least loaded frame its support touches,
        // shortest checks first; ties go to the earliest frame.
        let spans: Vec<Vec<usize>> = checks
            .row_vecs()
            .iter()
            .map(|r| {
                let mut f: Vec<usize> = r.iter_ones().map(|j| layout.pos[j].0).collect();
                f.sort_unstable();
                f.dedup();
                if f.is_empty() {
                    f.push(0);
                }
                f
            })
            .collect();
        let mut order: Vec<usize> = (0..checks.rows()).collect();
        order.sort_by_key(|&h| (spans[h].last().unwrap() - spans[h][0], spans[h][0], h));
        let mut per_frame = vec![0usize; frames];
        let mut check_frame = vec![0usize; checks.rows()];
        let mut slot = vec![0usize; checks.rows()];
        for &h in &order {
            let f = *spans[h]
                .iter()
                .min_by_key(|&&f| (per_frame[f], f))
                .expect("nonempty span");
            check_frame[h] = f;
            slot[h] = per_frame[f];
            per_frame[f] += 1;
        }
        let max_pf = per_frame.iter().copied().max().unwrap_or(0);
        let width = layout.code_width + copies * max_pf;
        let var = |f: usize, c: usize| f * width + c;
        let var_of_code: Vec<usize> = layout.pos.iter().map(|&(f, c)| var(f, c)).collect();
        let var_of_ancilla: Vec<Vec<usize>> = (0..copies)
            .map(|k| {
                (0..checks.rows())
                    .map(|h| var(check_frame[h], layout.code_width + k * max_pf + slot[h]))
                    .collect()
            })
            .collect();
        let to_row = |vars: Vec<usize>, label: Option<usize>| -> Option<ParityRow> {
            let start = vars.iter().map(|v| v / width).min()?;
            let end = vars.iter().map(|v| v / width).max()?;
            let mut frames_m = vec![0u32; end - start + 1];
            for v in vars {
                frames_m[v / width - start] ^= 1 << (v % width);
            }
            Some(ParityRow {
                start,
                frames: frames_m,
                label,
            })
        };
        let mut rows = Vec::new();
        for (h, r) in checks.row_vecs().iter().enumerate() {
            let mut vars: Vec<usize> = r.iter_ones().map(|j| var_of_code[j]).collect();
            for anc in &var_of_ancilla {
                vars.push(anc[h]);
            }
            if let Some(row) = to_row(vars, None) {
                rows.push(row);
            }
        }
        for (i, r) in logicals.row_vecs().iter().enumerate() {
            let vars: Vec<usize> = r.iter_ones().map(|j| var_of_code[j]).collect();
            if let Some(row) = to_row(vars, Some(i)) {
                rows.push(row);
            }
        }
        let mut active = vec![0u32; frames];
        for &v in var_of_code.iter().chain(var_of_ancilla.iter().flatten()) {
            active[v / width] |= 1 << (v % width);
        }
        let trellis = parity_trellis_masked(width, frames, &rows, &active, cap)?;
        Ok(SheetModel {
            trellis,
            n_code,
            n_checks: checks.rows(),
            copies,
            var_of_code,
            var_of_ancilla,
            n_logicals: logicals.rows(),
        })
    }

    /// Pure error placing each syndrome bit on its first ancilla copy.
    pub fn pure_error(&self, syndrome: &BitVector) -> BitVector {
        let mut e0 = BitVector::zeros(self.trellis.n_vars());
        if self.copies > 0 {
            for h in syndrome.iter_ones() {
                e0.set(self.var_of_ancilla[0][h], true);
            }
        }
        e0
    }

    /// Prior vector over trellis variables; unused slots get probability 0.
    pub fn priors(&self, code: &[f64], ancilla: &[Vec<f64>]) -> Vec<f64> {
        let mut p = vec![0.0; self.trellis.n_vars()];
        for (j, &v) in self.var_of_code.iter().enumerate() {
            p[v] = code[j];
        }
        for (k, vars) in self.var_of_ancilla.iter().enumerate() {
            for (h, &v) in vars.iter().enumerate() {
                p[v] = ancilla[k][h];
            }
        }
        p
    }

    /// Maps a sheet-local error (code then ancilla copies) to trellis variables.
    pub fn to_vars(&self, code: &BitVector, ancilla: &[BitVector]) -> BitVector {
        let mut e = BitVector::zeros(self.trellis.n_vars());
        for j in code.iter_ones() {
            e.set(self.var_of_code[j], true);
        }
        for (k, a) in ancilla.iter().enumerate() {
            for h in a.iter_ones() {
                e.set(self.var_of_ancilla[k][h], true);
            }
        }
        e
    }
}

/// SISO decoding of one sheet: returns code, ancilla and logical marginals.
pub fn decode_sheet(
    sheet: &SheetModel,
    syndrome: &BitVector,
    code_priors: &[f64],
    ancilla_priors: &[Vec<f64>],
    logical_priors: Option<&[f64]>,
    mode: Semiring,
) -> Result<SheetPosterior, SisoError> {
    if syndrome.len() != sheet.n_checks {
        return Err(SisoError::Length(format!(
            "syndrome has {} bits, sheet has {} checks",
            syndrome.len(),
            sheet.n_checks
        )));
    }
    if code_priors.len() != sheet.n_code || ancilla_priors.len() != sheet.copies {
        return Err(SisoError::Length("prior shape".into()));
    }
    let e0 = sheet.pure_error(syndrome);
    let priors = sheet.priors(code_priors, ancilla_priors);
    let m = decode_trellis(&sheet.trellis, &e0, &priors, logical_priors, mode)?;
    Ok(SheetPosterior {
        code: sheet.var_of_code.iter().map(|&v| m.qubit[v]).collect(),
        ancilla: sheet
            .var_of_ancilla
            .iter()
            .map(|vars| vars.iter().map(|&v| m.qubit[v]).collect())
            .collect(),
        logical: m.logical,
        log_likelihood: m.log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_table_sums_to_one() {
        let p = [0.1, 0.2, 0.3];
        let t = frame_table(&p, 0, 3);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((t[0b101] - 0.1 * 0.8 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn extrinsic_inverts_combination() {
        let prior = 0.2;
        let ext = 0.7;
        let post = combine_beliefs(prior, ext);
        assert!((extrinsic(post, prior) - ext).abs() < 1e-12);
        assert_eq!(extrinsic(0.3, 0.0), 0.5);
    }

    #[test]
    fn single_parity_check_sheet() {
        // One check on two code qubits, one ancilla copy.
        let checks = BitMatrix::parse_rows(&["11"]);
        let logicals = BitMatrix::zeros(0, 2);
        let sheet = SheetModel::new(&checks, &logicals, &Layout::single(2), 1).unwrap();
        let s = BitVector::parse("1").unwrap();
        let post = decode_sheet(
            &sheet,
            &s,
            &[0.1, 0.1],
            &[vec![0.1]],
            None,
            Semiring::SumProduct,
        )
        .unwrap();
        // Odd-weight patterns: 100,010,001 each ∝ 0.1·0.81, 111 ∝ 0.001.
        let z = 3.0 * 0.081 + 0.001;
        assert!((post.code[0] - (0.081 + 0.001) / z).abs() < 1e-12);
        assert!((post.ancilla[0][0] - (0.081 + 0.001) / z).abs() < 1e-12);
    }
}
