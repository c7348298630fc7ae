//! Time-varying trellises over frames of `width` qubits.
//!
//! Two constructions share one compiled form. A generator trellis follows the
//! selection bits of generator, stabiliser and gauge rows (the memory state is the
//! set of rows still contributing). A parity trellis follows partial parities of
//! check rows and logical rows, so its paths are exactly the kernel of the checks.

use std::collections::HashMap;

use thiserror::Error;

use crate::delay::{expand_rows, Boundary, DelayError, SeedSet};
use crate::gf2::BitVector;

pub const DEFAULT_STATE_CAP: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrellisError {
    #[error("state count {0} exceeds cap {1}")]
    TooManyStates(usize, usize),
    #[error("frame width {0} is too large")]
    WidthTooLarge(usize),
    #[error("row leaves the frame range")]
    RowOutOfRange,
    #[error("width mismatch: {0}")]
    Width(String),
    #[error("tau {tau} smaller than required {need}")]
    TauTooSmall { tau: usize, need: usize },
    #[error(transparent)]
    Delay(#[from] DelayError),
}

/// One trellis transition in a section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: u32,
    pub to: u32,
    /// Frame pattern produced (bit `c` = column `c` of the frame).
    pub pattern: u32,
    /// Bits of the labelled rows resolved in this section.
    pub labels: u32,
}

/// Transitions between boundary `t` and `t+1`.
#[derive(Clone, Debug, Default)]
pub struct Section {
    pub n_in: usize,
    pub n_out: usize,
    pub trans: Vec<Transition>,
    /// Global label (logical) index for each label bit.
    pub label_ids: Vec<usize>,
    /// Number of unlabelled input bits per transition (generator trellis only).
    pub free_inputs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrellisKind {
    Generator,
    Parity,
}

#[derive(Clone, Debug)]
pub struct Trellis {
    pub kind: TrellisKind,
    pub width: usize,
    pub frames: usize,
    pub sections: Vec<Section>,
    pub n_labels: usize,
}

impl Trellis {
    /// States at each boundary `0..=frames`.
    pub fn state_counts(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.sections.iter().map(|s| s.n_in).collect();
        v.push(self.sections.last().map_or(1, |s| s.n_out));
        v
    }

    pub fn max_states(&self) -> usize {
        self.state_counts().into_iter().max().unwrap_or(1)
    }

    pub fn n_vars(&self) -> usize {
        self.width * self.frames
    }

    pub fn transition_count(&self) -> usize {
        self.sections.iter().map(|s| s.trans.len()).sum()
    }

    /// Frame `t` of a flat vector as a pattern.
    pub fn frame_bits(&self, v: &BitVector, t: usize) -> u32 {
        let mut p = 0u32;
        for c in 0..self.width {
            if v.get(t * self.width + c) {
                p |= 1 << c;
            }
        }
        p
    }

    /// Text dump: states per boundary and the transition table.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (t, sec) in self.sections.iter().enumerate() {
            s.push_str(&format!(
                "frame {t}: {} -> {} states, {} transitions\n",
                sec.n_in,
                sec.n_out,
                sec.trans.len()
            ));
            for tr in &sec.trans {
                s.push_str(&format!(
                    "  {} -> {} p={:0w$b} l={:b}\n",
                    tr.from,
                    tr.to,
                    tr.pattern,
                    tr.labels,
                    w = self.width
                ));
            }
        }
        s
    }
}

/// A row of a generator trellis: contributes `frames[i]` at frame `start + i` when selected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenRow {
    pub start: usize,
    pub frames: Vec<u32>,
    /// Logical index if this row is a labelled (logical) generator.
    pub label: Option<usize>,
}

impl GenRow {
    fn end(&self) -> usize {
        self.start + self.frames.len() - 1
    }
}

fn check_width(width: usize) -> Result<(), TrellisError> {
    if width > 24 {
        return Err(TrellisError::WidthTooLarge(width));
    }
    Ok(())
}

/// Builds a generator trellis from explicit rows.
pub fn generator_trellis(
    width: usize,
    frames: usize,
    rows: &[GenRow],
    cap: usize,
) -> Result<Trellis, TrellisError> {
    check_width(width)?;
    for r in rows {
        if r.frames.is_empty() || r.end() >= frames {
            return Err(TrellisError::RowOutOfRange);
        }
    }
    let n_labels = rows
        .iter()
        .filter_map(|r| r.label)
        .map(|l| l + 1)
        .max()
        .unwrap_or(0);
    let mut sections = Vec::with_capacity(frames);
    for t in 0..frames {
        let ins: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].start < t && t <= rows[i].end())
            .collect();
        let news: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].start == t).collect();
        let outs: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].start <= t && t < rows[i].end())
            .collect();
        let n_in = 1usize << ins.len();
        let n_out = 1usize << outs.len();
        if n_in > cap || n_out > cap {
            return Err(TrellisError::TooManyStates(n_in.max(n_out), cap));
        }
        let bits: Vec<usize> = ins.iter().chain(news.iter()).copied().collect();
        if bits.len() > 30 {
            return Err(TrellisError::TooManyStates(1 << 30, cap));
        }
        let contrib: Vec<u32> = bits
            .iter()
            .map(|&i| rows[i].frames[t - rows[i].start])
            .collect();
        let out_bit: Vec<u32> = bits
            .iter()
            .map(|i| outs.iter().position(|o| o == i).map_or(0, |p| 1u32 << p))
            .collect();
        let mut label_ids = Vec::new();
        let label_bit: Vec<u32> = bits
            .iter()
            .enumerate()
            .map(|(b, &i)| {
                if b >= ins.len() {
                    if let Some(l) = rows[i].label {
                        label_ids.push(l);
                        return 1u32 << (label_ids.len() - 1);
                    }
                }
                0
            })
            .collect();
        let total = 1usize << bits.len();
        let mut pat = vec![0u32; total];
        let mut to = vec![0u32; total];
        let mut lab = vec![0u32; total];
        let mut trans = Vec::with_capacity(total);
        for x in 0..total {
            if x > 0 {
                let b = x.trailing_zeros() as usize;
                let prev = x & (x - 1);
                pat[x] = pat[prev] ^ contrib[b];
                to[x] = to[prev] | out_bit[b];
                lab[x] = lab[prev] | label_bit[b];
            }
            trans.push(Transition {
                from: (x & (n_in - 1)) as u32,
                to: to[x],
                pattern: pat[x],
                labels: lab[x],
            });
        }
        let free_inputs = news.len() - label_ids.len();
        sections.push(Section {
            n_in,
            n_out,
            trans,
            label_ids,
            free_inputs,
        });
    }
    Ok(Trellis {
        kind: TrellisKind::Generator,
        width,
        frames,
        sections,
        n_labels,
    })
}

/// Row of a parity trellis: a check (paths must give even parity) or a labelled logical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityRow {
    pub start: usize,
    pub frames: Vec<u32>,
    pub label: Option<usize>,
}

impl ParityRow {
    fn end(&self) -> usize {
        self.start + self.frames.len() - 1
    }
}

/// Builds a parity (syndrome-former) trellis whose paths are the frame sequences
/// with even parity on every check row; labelled rows report their parity.
pub fn parity_trellis(
    width: usize,
    frames: usize,
    rows: &[ParityRow],
    cap: usize,
) -> Result<Trellis, TrellisError> {
    check_width(width)?;
    let all = vec![((1u64 << width) - 1) as u32; frames];
    parity_trellis_masked(width, frames, rows, &all, cap)
}

/// As [`parity_trellis`], with variables outside `active[t]` held at zero.
pub fn parity_trellis_masked(
    width: usize,
    frames: usize,
    rows: &[ParityRow],
    active: &[u32],
    cap: usize,
) -> Result<Trellis, TrellisError> {
    check_width(width)?;
    if active.len() != frames {
        return Err(TrellisError::RowOutOfRange);
    }
    for r in rows {
        if r.frames.is_empty() || r.end() >= frames {
            return Err(TrellisError::RowOutOfRange);
        }
    }
    let n_labels = rows
        .iter()
        .filter_map(|r| r.label)
        .map(|l| l + 1)
        .max()
        .unwrap_or(0);
    let npat = 1usize << width;
    let mut sections: Vec<Section> = Vec::with_capacity(frames);
    // States at the current boundary: partial-parity masks over `carried` rows.
    let mut carried: Vec<usize> = Vec::new();
    let mut states: Vec<u64> = vec![0];
    for t in 0..frames {
        let live: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].start <= t && t <= rows[i].end())
            .collect();
        if live.len() > 64 {
            return Err(TrellisError::TooManyStates(usize::MAX, cap));
        }
        let in_pos: Vec<usize> = carried
            .iter()
            .map(|r| {
                live.iter()
                    .position(|l| l == r)
                    .expect("carried row is live")
            })
            .collect();
        let next_carried: Vec<usize> = live
            .iter()
            .copied()
            .filter(|&i| rows[i].end() > t)
            .collect();
        let mut finish_check = 0u64;
        let mut label_ids = Vec::new();
        let mut finish_label: Vec<(usize, usize)> = Vec::new();
        for (p, &i) in live.iter().enumerate() {
            if rows[i].end() == t {
                match rows[i].label {
                    None => finish_check |= 1 << p,
                    Some(l) => {
                        finish_label.push((p, label_ids.len()));
                        label_ids.push(l);
                    }
                }
            }
        }
        let out_pos: Vec<usize> = next_carried
            .iter()
            .map(|r| live.iter().position(|l| l == r).unwrap())
            .collect();
        // Contribution of each frame pattern to the live partial parities.
        let masks: Vec<u32> = live
            .iter()
            .map(|&i| rows[i].frames[t - rows[i].start])
            .collect();
        let mut contrib = vec![0u64; npat];
        for v in 1..npat {
            let b = v.trailing_zeros();
            let prev = v & (v - 1);
            let mut c = 0u64;
            for (p, m) in masks.iter().enumerate() {
                if m >> b & 1 == 1 {
                    c |= 1 << p;
                }
            }
            contrib[v] = contrib[prev] ^ c;
        }
        let act = active[t] as usize;
        let mut subs = Vec::with_capacity(1 << act.count_ones());
        let mut v = 0usize;
        loop {
            subs.push(v);
            if v == act {
                break;
            }
            v = v.wrapping_sub(act) & act;
        }
        let mut out_index: HashMap<u64, u32> = HashMap::new();
        let mut out_states: Vec<u64> = Vec::new();
        let mut trans = Vec::new();
        for (si, &s) in states.iter().enumerate() {
            let mut embedded = 0u64;
            for (b, &p) in in_pos.iter().enumerate() {
                if s >> b & 1 == 1 {
                    embedded |= 1 << p;
                }
            }
            for &v in &subs {
                let partial = embedded ^ contrib[v];
                if partial & finish_check != 0 {
                    continue;
                }
                let mut labels = 0u32;
                for &(p, lb) in &finish_label {
                    if partial >> p & 1 == 1 {
                        labels |= 1 << lb;
                    }
                }
                let mut out = 0u64;
                for (b, &p) in out_pos.iter().enumerate() {
                    if partial >> p & 1 == 1 {
                        out |= 1 << b;
                    }
                }
                let idx = *out_index.entry(out).or_insert_with(|| {
                    out_states.push(out);
                    (out_states.len() - 1) as u32
                });
                trans.push(Transition {
                    from: si as u32,
                    to: idx,
                    pattern: v as u32,
                    labels,
                });
            }
        }
        if out_states.len() > cap {
            return Err(TrellisError::TooManyStates(out_states.len(), cap));
        }
        sections.push(Section {
            n_in: states.len(),
            n_out: out_states.len(),
            trans,
            label_ids,
            free_inputs: 0,
        });
        carried = next_carried;
        states = out_states;
    }
    prune_dead(&mut sections);
    Ok(Trellis {
        kind: TrellisKind::Parity,
        width,
        frames,
        sections,
        n_labels,
    })
}

/// Removes states that cannot reach the final zero state, reindexing densely.
fn prune_dead(sections: &mut [Section]) {
    let Some(last) = sections.last() else { return };
    // The terminal boundary must be the single empty state.
    let mut alive_out: Vec<bool> = vec![true; last.n_out];
    for t in (0..sections.len()).rev() {
        let sec = &mut sections[t];
        sec.trans.retain(|tr| alive_out[tr.to as usize]);
        let mut remap_out = vec![u32::MAX; sec.n_out];
        let mut next = 0u32;
        for (i, a) in alive_out.iter().enumerate() {
            if *a {
                remap_out[i] = next;
                next += 1;
            }
        }
        sec.n_out = next as usize;
        for tr in sec.trans.iter_mut() {
            tr.to = remap_out[tr.to as usize];
        }
        let mut alive_in = vec![false; sec.n_in];
        for tr in &sec.trans {
            alive_in[tr.from as usize] = true;
        }
        if t == 0 {
            break;
        }
        let mut remap_in = vec![u32::MAX; sec.n_in];
        let mut nx = 0u32;
        for (i, a) in alive_in.iter().enumerate() {
            if *a {
                remap_in[i] = nx;
                nx += 1;
            }
        }
        sec.n_in = nx as usize;
        for tr in sec.trans.iter_mut() {
            tr.from = remap_in[tr.from as usize];
        }
        alive_out = alive_in;
    }
}

fn seed_gen_rows(
    m: &crate::delay::DelayMatrix,
    tau: usize,
    label_base: Option<&mut usize>,
) -> Vec<GenRow> {
    let n = m.cols();
    let mut out = Vec::new();
    let mut lb = label_base;
    for r in expand_rows(m, tau, Boundary::Terminated) {
        let deg = m.row_degree(r.seed_row);
        let start = r.launch as usize;
        let frames: Vec<u32> = (0..=deg)
            .map(|q| {
                let f = start + q;
                let mut p = 0u32;
                for c in 0..n {
                    if f < tau && r.bits.get(f * n + c) {
                        p |= 1 << c;
                    }
                }
                p
            })
            .collect();
        let label = lb.as_deref_mut().map(|c| {
            *c += 1;
            *c - 1
        });
        out.push(GenRow {
            start,
            frames,
            label,
        });
    }
    out
}

/// Generator rows (G labelled, then H and J unlabelled) of a terminated seed expansion.
pub fn seed_generator_rows(seed: &SeedSet, tau: usize) -> Vec<GenRow> {
    let mut label = 0usize;
    let mut rows = seed_gen_rows(&seed.generator, tau, Some(&mut label));
    rows.extend(seed_gen_rows(&seed.parity, tau, None));
    if let Some(j) = &seed.gauge {
        rows.extend(seed_gen_rows(j, tau, None));
    }
    rows
}

/// Generator trellis of a seed set (including gauge rows if present).
pub fn build_trellis(seed: &SeedSet, tau: usize) -> Result<Trellis, TrellisError> {
    build_trellis_capped(seed, tau, DEFAULT_STATE_CAP)
}

pub fn build_trellis_capped(
    seed: &SeedSet,
    tau: usize,
    cap: usize,
) -> Result<Trellis, TrellisError> {
    let need = seed.nu_g() + seed.nu_h();
    if tau < need.max(1) {
        return Err(TrellisError::TauTooSmall { tau, need });
    }
    generator_trellis(seed.n(), tau, &seed_generator_rows(seed, tau), cap)
}

/// Parity trellis for checks given by an X-side seed with labelled logical rows.
pub fn seed_parity_rows(
    checks: &crate::delay::DelayMatrix,
    logicals: &crate::delay::DelayMatrix,
    tau: usize,
) -> Vec<ParityRow> {
    let mut rows: Vec<ParityRow> = seed_gen_rows(checks, tau, None)
        .into_iter()
        .map(|g| ParityRow {
            start: g.start,
            frames: g.frames,
            label: None,
        })
        .collect();
    let mut label = 0usize;
    rows.extend(
        seed_gen_rows(logicals, tau, Some(&mut label))
            .into_iter()
            .map(|g| ParityRow {
                start: g.start,
                frames: g.frames,
                label: g.label,
            }),
    );
    rows
}

/// Memory state of a seed-set trellis: remembered selection bits, most recent first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MemoryState {
    pub g_history: Vec<Vec<bool>>,
    pub h_history: Vec<Vec<bool>>,
    pub j_history: Vec<Vec<bool>>,
}

/// Input bits for one frame.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FrameInput {
    pub g: Vec<bool>,
    pub h: Vec<bool>,
    pub j: Vec<bool>,
}

fn coeff_pattern(m: &crate::delay::DelayMatrix, row: usize, q: usize) -> u32 {
    let mut p = 0u32;
    for c in 0..m.cols() {
        if m.get(row, c).fwd >> q & 1 == 1 {
            p |= 1 << c;
        }
    }
    p
}

fn accumulate(
    m: &crate::delay::DelayMatrix,
    current: &[bool],
    history: &[Vec<bool>],
) -> Result<u32, TrellisError> {
    if current.len() != m.rows() {
        return Err(TrellisError::Width(format!(
            "expected {} input bits, got {}",
            m.rows(),
            current.len()
        )));
    }
    let mut p = 0u32;
    for (i, &b) in current.iter().enumerate() {
        if b {
            p ^= coeff_pattern(m, i, 0);
        }
    }
    for (d, h) in history.iter().enumerate() {
        if h.len() != m.rows() {
            return Err(TrellisError::Width("history width".into()));
        }
        for (i, &b) in h.iter().enumerate() {
            if b {
                p ^= coeff_pattern(m, i, d + 1);
            }
        }
    }
    Ok(p)
}

/// Frame output p_t = U_p(α_t, l_t) as a bit vector of the frame width.
pub fn u_p(seed: &SeedSet, alpha: &MemoryState, l: &FrameInput) -> Result<BitVector, TrellisError> {
    let mut p = accumulate(&seed.generator, &l.g, &alpha.g_history)?;
    p ^= accumulate(&seed.parity, &l.h, &alpha.h_history)?;
    if let Some(j) = &seed.gauge {
        p ^= accumulate(j, &l.j, &alpha.j_history)?;
    }
    let mut v = BitVector::zeros(seed.n());
    for c in 0..seed.n() {
        if p >> c & 1 == 1 {
            v.set(c, true);
        }
    }
    Ok(v)
}

/// Result of a hard (min-cost) path search.
#[derive(Clone, Debug, PartialEq)]
pub struct MinPath {
    /// Path output over all frames.
    pub p_min: BitVector,
    /// Per-frame transition inputs (new-row bits) along the path.
    pub inputs: Vec<u32>,
    /// Resolved label bits per logical index.
    pub labels: Vec<bool>,
    pub cost: f64,
}

/// Path minimising Σ_t Σ_q w_q·[p_t + e⁰_t]_q; ties go to the lexicographically
/// smallest input sequence. `weights` of `None` means Hamming weight.
pub fn min_weight_path(trellis: &Trellis, e0: &BitVector, weights: Option<&[f64]>) -> MinPath {
    let w = trellis.width;
    assert_eq!(e0.len(), trellis.n_vars(), "e0 length");
    let uniform = vec![1.0; trellis.n_vars()];
    let wts = weights.unwrap_or(&uniform);
    let nsec = trellis.sections.len();
    let mut cost = vec![0.0f64];
    let mut rank = vec![0usize];
    // back[t][state] = transition index chosen.
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(nsec);
    for (t, sec) in trellis.sections.iter().enumerate() {
        let e0t = trellis.frame_bits(e0, t);
        let mut frame_cost = vec![0.0f64; 1 << w];
        for (v, fc) in frame_cost.iter_mut().enumerate() {
            let mut c = 0.0;
            for q in 0..w {
                if v >> q & 1 == 1 {
                    c += wts[t * w + q];
                }
            }
            *fc = c;
        }
        let mut best = vec![f64::INFINITY; sec.n_out];
        let mut key = vec![(usize::MAX, u32::MAX); sec.n_out];
        let mut choice = vec![u32::MAX; sec.n_out];
        for (ti, tr) in sec.trans.iter().enumerate() {
            let c0 = cost[tr.from as usize];
            if !c0.is_finite() {
                continue;
            }
            let c = c0 + frame_cost[(tr.pattern ^ e0t) as usize];
            let input = ti as u32 >> sec.n_in.trailing_zeros();
            let k = (
                rank[tr.from as usize],
                if trellis.kind == TrellisKind::Generator {
                    input
                } else {
                    tr.pattern
                },
            );
            let to = tr.to as usize;
            if c < best[to] || (c == best[to] && k < key[to]) {
                best[to] = c;
                key[to] = k;
                choice[to] = ti as u32;
            }
        }
        let mut order: Vec<usize> = (0..sec.n_out).collect();
        order.sort_by(|&a, &b| key[a].cmp(&key[b]));
        let mut new_rank = vec![0usize; sec.n_out];
        for (r, &s) in order.iter().enumerate() {
            new_rank[s] = r;
        }
        cost = best;
        rank = new_rank;
        back.push(choice);
    }
    let mut state = 0usize;
    let mut p_min = BitVector::zeros(trellis.n_vars());
    let mut inputs = vec![0u32; nsec];
    let mut labels = vec![false; trellis.n_labels];
    let final_cost = cost.first().copied().unwrap_or(f64::INFINITY);
    for t in (0..nsec).rev() {
        let sec = &trellis.sections[t];
        let ti = back[t][state] as usize;
        let tr = sec.trans[ti];
        for c in 0..w {
            if tr.pattern >> c & 1 == 1 {
                p_min.set(t * w + c, true);
            }
        }
        inputs[t] = ti as u32 >> sec.n_in.trailing_zeros();
        for (b, &l) in sec.label_ids.iter().enumerate() {
            labels[l] = tr.labels >> b & 1 == 1;
        }
        state = tr.from as usize;
    }
    MinPath {
        p_min,
        inputs,
        labels,
        cost: final_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::DelayMatrix;

    fn trivial_seed() -> SeedSet {
        SeedSet {
            generator: DelayMatrix::from_exps(&[vec![vec![0], vec![0]]]),
            parity: DelayMatrix::from_exps(&[vec![vec![0], vec![0]]]),
            isf: DelayMatrix::from_exps(&[vec![vec![0], vec![]]]),
            gauge: None,
            generator_x: None,
            parity_x: None,
            isf_x: None,
            gauge_x: None,
        }
    }

    #[test]
    fn memoryless_seed_single_state() {
        let t = build_trellis(&trivial_seed(), 3).unwrap();
        assert_eq!(t.max_states(), 1);
    }

    #[test]
    fn zero_input_zero_output() {
        let s = trivial_seed();
        let out = u_p(
            &s,
            &MemoryState::default(),
            &FrameInput {
                g: vec![false],
                h: vec![false],
                j: vec![],
            },
        )
        .unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn state_cap_enforced() {
        let rows: Vec<GenRow> = (0..4)
            .map(|i| GenRow {
                start: 0,
                frames: vec![1 << i, 0],
                label: None,
            })
            .collect();
        assert!(matches!(
            generator_trellis(4, 2, &rows, 8),
            Err(TrellisError::TooManyStates(..))
        ));
    }
}
