//! C-phase construction schedules for clusterised codes and single-fault
//! propagation through them.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::builtin::{c3_seed, c5_seed};
use crate::code::{conv_code_with, foliate, CssCode};
use crate::delay::Boundary;
use crate::foliated::{DecoderConfig, FoliatedDecoder};
use crate::gf2::{BitMatrix, BitVector};
use crate::montecarlo::TrialDecoder;
use crate::siso::Layout;
use crate::turbo::{t25, t9, InterleaverKind, TurboCode, TurboConfig, TurboDecoder};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("unknown schedule {0}")]
    Unknown(String),
    #[error("unknown qubit {0:?}")]
    UnknownQubit(FaultSite),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("instance: {0}")]
    Instance(String),
}

/// `Λ_T(a, c)`: c-phase between ancilla `a` and code qubit `c` at step `T ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Gate {
    pub ancilla: usize,
    pub qubit: usize,
    pub time: usize,
}

/// Ancilla `frame·ancillas + i` and code qubit `frame·width + j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FrameLayout {
    pub ancillas: usize,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub name: String,
    pub layout: FrameLayout,
    pub n_code: usize,
    /// Stabiliser built by each ancilla.
    pub stabilisers: Vec<Vec<usize>>,
    /// Row of the code's X checks that each ancilla's syndrome stands in for.
    pub code_rows: Vec<usize>,
    pub gates: Vec<Gate>,
    pub horizon: usize,
}

impl Schedule {
    pub fn n_ancilla(&self) -> usize {
        self.stabilisers.len()
    }

    pub fn max_weight(&self) -> usize {
        self.stabilisers.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    fn gates_of(&self, site: FaultSite) -> Vec<Gate> {
        self.gates
            .iter()
            .filter(|g| match site {
                FaultSite::Ancilla(a) => g.ancilla == a,
                FaultSite::Code(q) => g.qubit == q,
            })
            .copied()
            .collect()
    }

    /// Plain-text listing, one `a_<i>,<frame> c_<j>,<frame> T<m>` line per gate.
    pub fn to_text(&self) -> String {
        let mut gates = self.gates.clone();
        gates.sort_by_key(|g| (g.ancilla, g.time, g.qubit));
        let mut out = String::new();
        let (na, w) = (self.layout.ancillas, self.layout.width);
        for g in gates {
            let _ = writeln!(
                out,
                "a_{},{} c_{},{} T{}",
                g.ancilla % na + 1,
                g.ancilla / na,
                g.qubit % w + 1,
                g.qubit / w,
                g.time
            );
        }
        out
    }
}

fn parse_pair(tok: &str, prefix: &str) -> Result<(usize, usize), String> {
    let body = tok
        .strip_prefix(prefix)
        .ok_or_else(|| format!("expected {prefix}<i>,<frame>, got {tok:?}"))?;
    let (i, f) = body
        .split_once(',')
        .ok_or_else(|| format!("missing frame in {tok:?}"))?;
    let i: usize = i.parse().map_err(|_| format!("bad index {i:?}"))?;
    let f: usize = f.parse().map_err(|_| format!("bad frame {f:?}"))?;
    if i == 0 {
        return Err(format!("indices start at 1 in {tok:?}"));
    }
    Ok((i - 1, f))
}

/// Parses gate lines; `#` starts a comment. Stabilisers are the gate supports.
pub fn parse_schedule(text: &str, layout: FrameLayout) -> Result<Schedule, ScheduleError> {
    if layout.ancillas == 0 || layout.width == 0 {
        return Err(ScheduleError::Parse {
            line: 0,
            msg: "empty frame layout".into(),
        });
    }
    let mut gates = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ScheduleError::Parse { line: ln + 1, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", toks.len())));
        }
        let (i, fa) = parse_pair(toks[0], "a_").map_err(err)?;
        let (j, fc) = parse_pair(toks[1], "c_").map_err(err)?;
        if i >= layout.ancillas || j >= layout.width {
            return Err(err(format!("index outside frame layout in {line:?}")));
        }
        let t: usize = toks[2]
            .strip_prefix('T')
            .and_then(|t| t.parse().ok())
            .filter(|&t| t >= 1)
            .ok_or_else(|| err(format!("bad time step {:?}", toks[2])))?;
        let ancilla = fa
            .checked_mul(layout.ancillas)
            .and_then(|x| x.checked_add(i))
            .ok_or_else(|| err("frame overflow".into()))?;
        let qubit = fc
            .checked_mul(layout.width)
            .and_then(|x| x.checked_add(j))
            .ok_or_else(|| err("frame overflow".into()))?;
        gates.push(Gate {
            ancilla,
            qubit,
            time: t,
        });
    }
    let n_anc = gates.iter().map(|g| g.ancilla + 1).max().unwrap_or(0);
    let n_code = gates.iter().map(|g| g.qubit + 1).max().unwrap_or(0);
    let mut stabilisers = vec![Vec::new(); n_anc];
    for g in &gates {
        if !stabilisers[g.ancilla].contains(&g.qubit) {
            stabilisers[g.ancilla].push(g.qubit);
        }
    }
    stabilisers.iter_mut().for_each(|s| s.sort_unstable());
    Ok(Schedule {
        name: "parsed".into(),
        layout,
        n_code,
        stabilisers,
        code_rows: (0..n_anc).collect(),
        horizon: gates.iter().map(|g| g.time).max().unwrap_or(0),
        gates,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    /// `(time, site)` addressed by more than one gate.
    pub collisions: Vec<(usize, FaultSite)>,
    /// `(ancilla, qubit)` in a stabiliser with no gate.
    pub uncovered: Vec<(usize, usize)>,
    /// Gates outside their ancilla's stabiliser.
    pub extra: Vec<Gate>,
}

impl ScheduleReport {
    pub fn is_valid(&self) -> bool {
        self.collisions.is_empty() && self.uncovered.is_empty() && self.extra.is_empty()
    }
}

pub fn validate(s: &Schedule) -> ScheduleReport {
    let mut rep = ScheduleReport::default();
    let mut seen: HashSet<(usize, FaultSite)> = HashSet::new();
    let mut flagged: HashSet<(usize, FaultSite)> = HashSet::new();
    for g in &s.gates {
        for site in [FaultSite::Ancilla(g.ancilla), FaultSite::Code(g.qubit)] {
            if !seen.insert((g.time, site)) && flagged.insert((g.time, site)) {
                rep.collisions.push((g.time, site));
            }
        }
    }
    let present: HashSet<(usize, usize)> = s.gates.iter().map(|g| (g.ancilla, g.qubit)).collect();
    for (a, sup) in s.stabilisers.iter().enumerate() {
        for &q in sup {
            if !present.contains(&(a, q)) {
                rep.uncovered.push((a, q));
            }
        }
    }
    for g in &s.gates {
        if s.stabilisers.get(g.ancilla).is_none_or(|sup| !sup.contains(&g.qubit)) {
            rep.extra.push(*g);
        }
    }
    rep.collisions.sort_unstable_by_key(|&(t, site)| (t, site));
    rep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FaultSite {
    Ancilla(usize),
    Code(usize),
}

/// Z errors left by one X fault just after step `time`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaultOutcome {
    pub site: FaultSite,
    pub time: usize,
    /// Partners gated after the fault (code qubits for an ancilla fault,
    /// ancillas for a code-qubit fault).
    pub raw: Vec<usize>,
    /// The lighter of `raw` and its complement in the neighbourhood.
    pub reduced: Vec<usize>,
    /// Size of the neighbourhood.
    pub degree: usize,
}

impl FaultOutcome {
    pub fn weight(&self) -> usize {
        self.reduced.len()
    }

    pub fn bound(&self) -> usize {
        self.degree.div_ceil(2)
    }
}

pub fn propagate_fault(s: &Schedule, site: FaultSite, time: usize) -> Result<FaultOutcome, ScheduleError> {
    let gates = s.gates_of(site);
    if gates.is_empty() {
        return Err(ScheduleError::UnknownQubit(site));
    }
    let partner = |g: &Gate| match site {
        FaultSite::Ancilla(_) => g.qubit,
        FaultSite::Code(_) => g.ancilla,
    };
    let mut raw: Vec<usize> = gates.iter().filter(|g| g.time > time).map(partner).collect();
    let mut rest: Vec<usize> = gates.iter().filter(|g| g.time <= time).map(partner).collect();
    raw.sort_unstable();
    rest.sort_unstable();
    let reduced = if rest.len() < raw.len() { rest } else { raw.clone() };
    Ok(FaultOutcome {
        site,
        time,
        raw,
        reduced,
        degree: gates.len(),
    })
}

/// Every fault site with every distinct fault time (after each gate and before
/// the first).
pub fn all_faults(s: &Schedule) -> Vec<FaultOutcome> {
    let mut sites: Vec<FaultSite> = (0..s.n_ancilla()).map(FaultSite::Ancilla).collect();
    let mut qubits: Vec<usize> = s.gates.iter().map(|g| g.qubit).collect();
    qubits.sort_unstable();
    qubits.dedup();
    sites.extend(qubits.into_iter().map(FaultSite::Code));
    let mut out = Vec::new();
    for site in sites {
        let mut times: Vec<usize> = s.gates_of(site).iter().map(|g| g.time).collect();
        if times.is_empty() {
            continue;
        }
        times.push(0);
        times.sort_unstable();
        times.dedup();
        for t in times {
            out.push(propagate_fault(s, site, t).expect("site has gates"));
        }
    }
    out
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FaultReport {
    pub faults: usize,
    pub distinct_patterns: usize,
    pub max_weight: usize,
    pub failures: Vec<(FaultSite, usize, usize)>,
    pub decoder_errors: usize,
}

impl FaultReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.decoder_errors == 0
    }
}

/// Error pattern on a single-sheet foliation: code qubits first, then one
/// ancilla per X-check row.
pub fn fault_pattern(s: &Schedule, f: &FaultOutcome, n_qubits: usize) -> BitVector {
    let mut e = BitVector::zeros(n_qubits);
    for &x in &f.reduced {
        match f.site {
            FaultSite::Ancilla(_) => e.set(x, true),
            FaultSite::Code(_) => e.set(s.n_code + s.code_rows[x], true),
        }
    }
    e
}

/// Decodes the reduced pattern of every single fault and records logical failures.
pub fn check_all_single_faults<D: TrialDecoder + ?Sized>(s: &Schedule, dec: &D, p: f64) -> FaultReport {
    let faults = all_faults(s);
    let mut rep = FaultReport {
        faults: faults.len(),
        ..Default::default()
    };
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for f in &faults {
        rep.max_weight = rep.max_weight.max(f.weight());
        let e = fault_pattern(s, f, dec.n_qubits());
        let key: Vec<usize> = e.iter_ones().collect();
        if !seen.insert(key) {
            continue;
        }
        match dec.trial(&e, p) {
            Ok(flips) if flips.iter().any(|&b| b) => rep.failures.push((f.site, f.time, f.weight())),
            Ok(_) => {}
            Err(_) => rep.decoder_errors += 1,
        }
    }
    rep.distinct_patterns = seen.len();
    rep
}

/// Schedule with step `m + 1` taking the gates of old step `order[m]`.
pub fn permute_times(s: &Schedule, order: &[usize]) -> Schedule {
    let mut new_of = vec![0; s.horizon + 1];
    for (m, &old) in order.iter().enumerate() {
        new_of[old] = m + 1;
    }
    Schedule {
        gates: s
            .gates
            .iter()
            .map(|g| Gate {
                time: new_of[g.time],
                ..*g
            })
            .collect(),
        ..s.clone()
    }
}

/// Depth-first search over relabellings of the time steps such that every
/// single fault (ancilla or code qubit) at every step leaves an acceptable
/// reduced pattern. `ok` receives the site and its reduced partner set. Gives up
/// after `max_evals` calls to `ok` plus visited nodes.
pub fn search_time_order<F>(s: &Schedule, ok: F, max_evals: usize) -> Option<Vec<usize>>
where
    F: FnMut(FaultSite, &[usize]) -> bool,
{
    let na = s.n_ancilla();
    let mut code_site = vec![usize::MAX; s.n_code];
    let mut sites: Vec<FaultSite> = (0..na).map(FaultSite::Ancilla).collect();
    for g in &s.gates {
        if code_site[g.qubit] == usize::MAX {
            code_site[g.qubit] = sites.len();
            sites.push(FaultSite::Code(g.qubit));
        }
    }
    let mut by_time: Vec<Vec<(usize, usize, usize, usize)>> = vec![Vec::new(); s.horizon + 1];
    let mut degree = vec![0usize; sites.len()];
    for g in &s.gates {
        let cs = code_site[g.qubit];
        by_time[g.time].push((g.ancilla, g.qubit, cs, g.ancilla));
        degree[g.ancilla] += 1;
        degree[cs] += 1;
    }
    let mut full: Vec<Vec<usize>> = vec![Vec::new(); sites.len()];
    for g in &s.gates {
        full[g.ancilla].push(g.qubit);
        full[code_site[g.qubit]].push(g.ancilla);
    }
    for f in &mut full {
        f.sort_unstable();
    }
    let mut search = TimeSearch {
        h: s.horizon,
        by_time,
        sites,
        full,
        memo: HashMap::new(),
        evals: 0,
        max_evals,
        prefix: vec![Vec::new(); degree.len()],
        order: Vec::new(),
        used: vec![false; s.horizon + 1],
        ok,
    };
    search.dfs().then_some(search.order)
}

struct TimeSearch<F> {
    h: usize,
    /// Per step: (ancilla site, its partner, code site, its partner).
    by_time: Vec<Vec<(usize, usize, usize, usize)>>,
    sites: Vec<FaultSite>,
    full: Vec<Vec<usize>>,
    memo: HashMap<(usize, Vec<usize>), bool>,
    evals: usize,
    max_evals: usize,
    prefix: Vec<Vec<usize>>,
    order: Vec<usize>,
    used: Vec<bool>,
    ok: F,
}

impl<F: FnMut(FaultSite, &[usize]) -> bool> TimeSearch<F> {
    fn acceptable(&mut self, site: usize) -> Option<bool> {
        let len = self.prefix[site].len();
        if len == 0 || len >= self.full[site].len() {
            return Some(true);
        }
        let mut rest = self.prefix[site].clone();
        rest.sort_unstable();
        let raw: Vec<usize> = self.full[site].iter().copied().filter(|x| rest.binary_search(x).is_err()).collect();
        let key = if rest.len() < raw.len() { rest } else { raw };
        if let Some(&v) = self.memo.get(&(site, key.clone())) {
            return Some(v);
        }
        if self.evals >= self.max_evals {
            return None;
        }
        self.evals += 1;
        let v = (self.ok)(self.sites[site], &key);
        self.memo.insert((site, key), v);
        Some(v)
    }

    fn dfs(&mut self) -> bool {
        if self.order.len() == self.h {
            return true;
        }
        // Memo hits are free, so bound the walk itself as well.
        self.evals += 1;
        for c in 1..=self.h {
            if self.used[c] {
                continue;
            }
            let step = self.by_time[c].clone();
            for &(a, q, cs, anc) in &step {
                self.prefix[a].push(q);
                self.prefix[cs].push(anc);
            }
            let mut good = true;
            for &(a, _, cs, _) in &step {
                match (self.acceptable(a), self.acceptable(cs)) {
                    (Some(true), Some(true)) => {}
                    _ => {
                        good = false;
                        break;
                    }
                }
            }
            if good {
                self.used[c] = true;
                self.order.push(c);
                if self.dfs() {
                    return true;
                }
                self.order.pop();
                self.used[c] = false;
            }
            for &(a, _, cs, _) in &step {
                self.prefix[a].pop();
                self.prefix[cs].pop();
            }
            if self.evals >= self.max_evals {
                return false;
            }
        }
        false
    }
}

/// Relabels time steps so that every single fault decodes, if the search
/// finds such an order within `max_evals` decodes.
pub fn refine_schedule<D: TrialDecoder + ?Sized>(
    s: &Schedule,
    dec: &D,
    p: f64,
    max_evals: usize,
) -> Option<Schedule> {
    let n = dec.n_qubits();
    let ok = |site: FaultSite, partners: &[usize]| {
        let idx: Vec<usize> = match site {
            FaultSite::Ancilla(_) => partners.to_vec(),
            FaultSite::Code(_) => partners.iter().map(|&a| s.n_code + s.code_rows[a]).collect(),
        };
        let e = BitVector::from_indices(n, &idx);
        matches!(dec.trial(&e, p), Ok(f) if !f.iter().any(|&b| b))
    };
    if let Some(o) = search_time_order(s, ok, max_evals) {
        return Some(permute_times(s, &o));
    }
    // Fall back to protecting ancilla faults only.
    let ok = |site: FaultSite, partners: &[usize]| match site {
        FaultSite::Code(_) => true,
        FaultSite::Ancilla(_) => {
            let e = BitVector::from_indices(n, partners);
            matches!(dec.trial(&e, p), Ok(f) if !f.iter().any(|&b| b))
        }
    };
    search_time_order(s, ok, max_evals).map(|o| permute_times(s, &o))
}

/// Edge colouring of a bipartite multigraph with max-degree colours.
fn bipartite_colouring(edges: &[(usize, usize)], n_left: usize, n_right: usize) -> (Vec<usize>, usize) {
    let mut deg = vec![0usize; n_left + n_right];
    for &(u, v) in edges {
        deg[u] += 1;
        deg[n_left + v] += 1;
    }
    let colours = deg.iter().copied().max().unwrap_or(0);
    let mut at: Vec<Vec<Option<usize>>> = vec![vec![None; colours]; n_left + n_right];
    let mut col = vec![usize::MAX; edges.len()];
    for (e, &(u, v)) in edges.iter().enumerate() {
        let (u, v) = (u, n_left + v);
        let a = (0..colours).find(|&c| at[u][c].is_none()).expect("free colour at u");
        if at[v][a].is_some() {
            let b = (0..colours).find(|&c| at[v][c].is_none()).expect("free colour at v");
            // Swap a and b along the alternating path from v.
            let mut path = Vec::new();
            let mut node = v;
            let mut want = a;
            while let Some(f) = at[node][want] {
                path.push(f);
                let (fu, fv) = (edges[f].0, n_left + edges[f].1);
                node = if fu == node { fv } else { fu };
                want = if want == a { b } else { a };
            }
            for &f in &path {
                let (fu, fv) = (edges[f].0, n_left + edges[f].1);
                at[fu][col[f]] = None;
                at[fv][col[f]] = None;
            }
            for &f in &path {
                let (fu, fv) = (edges[f].0, n_left + edges[f].1);
                col[f] = if col[f] == a { b } else { a };
                at[fu][col[f]] = Some(f);
                at[fv][col[f]] = Some(f);
            }
        }
        col[e] = a;
        at[u][a] = Some(e);
        at[v][a] = Some(e);
    }
    (col, colours)
}

/// Schedule for the given stabilisers by bipartite edge colouring.
pub fn colour_schedule(
    name: &str,
    layout: FrameLayout,
    n_code: usize,
    stabilisers: Vec<Vec<usize>>,
    code_rows: Vec<usize>,
) -> Schedule {
    let edges: Vec<(usize, usize)> = stabilisers
        .iter()
        .enumerate()
        .flat_map(|(a, s)| s.iter().map(move |&q| (a, q)))
        .collect();
    let (col, horizon) = bipartite_colouring(&edges, stabilisers.len(), n_code);
    let gates = edges
        .iter()
        .zip(&col)
        .map(|(&(a, q), &c)| Gate {
            ancilla: a,
            qubit: q,
            time: c + 1,
        })
        .collect();
    Schedule {
        name: name.to_string(),
        layout,
        n_code,
        stabilisers,
        code_rows,
        gates,
        horizon,
    }
}

/// Translation-invariant schedule for a tail-biting code with one check per
/// frame: frame `t`'s ancilla gates `(column, t + offset)` at step `m + 1`
/// for the `m`-th entry of `order`.
pub fn translate_schedule(
    name: &str,
    width: usize,
    frames: usize,
    order: &[(usize, usize)],
) -> Schedule {
    let n_code = width * frames;
    let mut gates = Vec::new();
    let mut stabilisers = Vec::new();
    for t in 0..frames {
        let mut sup = Vec::new();
        for (m, &(c, off)) in order.iter().enumerate() {
            let q = ((t + off) % frames) * width + c;
            sup.push(q);
            gates.push(Gate {
                ancilla: t,
                qubit: q,
                time: m + 1,
            });
        }
        sup.sort_unstable();
        stabilisers.push(sup);
    }
    Schedule {
        name: name.to_string(),
        layout: FrameLayout {
            ancillas: 1,
            width,
        },
        n_code,
        stabilisers,
        code_rows: (0..frames).collect(),
        gates,
        horizon: order.len(),
    }
}

/// `(column, frame offset)` pairs of row 0 of a tail-biting code, offsets
/// measured forward from frame 0.
pub fn seed_offsets(code: &CssCode, width: usize) -> Vec<(usize, usize)> {
    code.sx.row(0).iter_ones().map(|q| (q % width, q / width)).collect()
}

/// Gate order for one C5 check, as `(column, offset)` at T1…T14.
pub const C5_ORDER: [(usize, usize); 14] = [
    (0, 0),
    (2, 4),
    (0, 1),
    (2, 3),
    (2, 2),
    (0, 3),
    (0, 2),
    (1, 0),
    (1, 3),
    (2, 5),
    (2, 0),
    (1, 2),
    (1, 5),
    (0, 4),
];

/// Gate order for one C3 check: each column's delays interleaved so that
/// no half of the schedule isolates a single column.
pub const C3_ORDER: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 2), (0, 2)];

/// Offsets of `order` re-expressed in the code's own delay direction: the
/// listed `D^δ` terms may launch backwards in the expansion.
fn orient(order: &[(usize, usize)], code: &CssCode, width: usize, frames: usize) -> Option<Vec<(usize, usize)>> {
    let mut seed = seed_offsets(code, width);
    seed.sort_unstable();
    for back in [false, true] {
        let mut o: Vec<(usize, usize)> = order
            .iter()
            .map(|&(c, d)| (c, if back { (frames - d % frames) % frames } else { d % frames }))
            .collect();
        let mut sorted = o.clone();
        sorted.sort_unstable();
        if sorted == seed {
            return Some(std::mem::take(&mut o));
        }
        // A single rotation can line the seed up with frame 0.
        for shift in 1..frames {
            let mut rot: Vec<(usize, usize)> = sorted.iter().map(|&(c, d)| (c, (d + shift) % frames)).collect();
            rot.sort_unstable();
            if rot == seed {
                return Some(o.iter().map(|&(c, d)| (c, (d + shift) % frames)).collect());
            }
        }
    }
    None
}

/// Outer rows lowered in weight by adding inner rows, singly or in pairs,
/// while the weight drops.
pub fn reduce_rows(rows: &[BitVector], reducers: &BitMatrix) -> Vec<BitVector> {
    let red = reducers.row_vecs();
    rows.iter()
        .map(|r| {
            let mut cur = r.clone();
            loop {
                let w = cur.weight();
                let touching: Vec<usize> = (0..red.len()).filter(|&i| !cur.and(&red[i]).is_zero()).collect();
                let mut best: Option<(usize, BitVector)> = None;
                for &i in &touching {
                    let c = cur.xor(&red[i]);
                    if c.weight() < best.as_ref().map_or(w, |b| b.0) {
                        best = Some((c.weight(), c));
                    }
                }
                if best.is_none() {
                    for (x, &i) in touching.iter().enumerate() {
                        for &j in &touching[x + 1..] {
                            let c = cur.xor(&red[i]).xor(&red[j]);
                            if c.weight() < best.as_ref().map_or(w, |b| b.0) {
                                best = Some((c.weight(), c));
                            }
                        }
                    }
                }
                match best {
                    Some((_, c)) => cur = c,
                    None => break cur,
                }
            }
        })
        .collect()
}

/// Schedule of a turbo code with one outer frame per schedule frame: frame
/// `f` holds the inner checks at frames `f`, `f+k`, `f+2k` and outer check `f`,
/// whose support is reduced by inner checks.
pub fn turbo_schedule(t: &TurboCode) -> Schedule {
    let ni = t.inner_x_rows();
    let no = t.code.sx.rows() - ni;
    let blocks = ni / no.max(1);
    let inner = t.code.sx.select_rows(&(0..ni).collect::<Vec<_>>());
    let outer: Vec<BitVector> = (ni..ni + no).map(|r| t.code.sx.row(r).clone()).collect();
    let reduced = reduce_rows(&outer, &inner);
    let mut stabilisers = Vec::new();
    let mut code_rows = Vec::new();
    for f in 0..no {
        for b in 0..blocks {
            let r = f + b * no;
            stabilisers.push(inner.row(r).iter_ones().collect());
            code_rows.push(r);
        }
        stabilisers.push(reduced[f].iter_ones().collect());
        code_rows.push(ni + f);
    }
    colour_schedule(
        &t.name,
        FrameLayout {
            ancillas: blocks + 1,
            width: t.inner_layout.code_width,
        },
        t.code.n,
        stabilisers,
        code_rows,
    )
}

/// A builtin code instance with its construction schedule.
pub enum BuiltinInstance {
    Conv { code: CssCode, width: usize, frames: usize },
    Turbo(Box<TurboCode>),
}

impl BuiltinInstance {
    pub fn code(&self) -> &CssCode {
        match self {
            BuiltinInstance::Conv { code, .. } => code,
            BuiltinInstance::Turbo(t) => &t.code,
        }
    }

    /// Single-sheet decoder for fault checks.
    pub fn decoder(&self) -> Result<Box<dyn TrialDecoder>, ScheduleError> {
        let err = |e: String| ScheduleError::Instance(e);
        match self {
            BuiltinInstance::Conv { code, width, frames } => {
                let fc = foliate(code, 1);
                let d = FoliatedDecoder::new(&fc, &Layout::framed(*width, *frames), DecoderConfig::default())
                    .map_err(|e| err(e.to_string()))?;
                Ok(Box::new(d))
            }
            BuiltinInstance::Turbo(t) => {
                let d = TurboDecoder::new(t, 1, TurboConfig::default()).map_err(|e| err(e.to_string()))?;
                Ok(Box::new(d))
            }
        }
    }
}

/// Search budget for the builtin T9 time relabelling.
const T9_REFINE_EVALS: usize = 20000;

/// Builtin schedule by name (`C3`, `C5`, `T9`, `T25`) over `tau` frames, tail
/// biting; turbo codes use the transpose interleaver with `k = tau`.
/// The T9 schedule is time-relabelled by [`refine_schedule`].
pub fn builtin_schedule(name: &str, tau: usize) -> Result<(Schedule, BuiltinInstance), ScheduleError> {
    let inst = |e: String| ScheduleError::Instance(e);
    match name.to_ascii_uppercase().as_str() {
        n @ ("C3" | "C5") => {
            let (seed, order): (_, &[(usize, usize)]) = if n == "C3" {
                (c3_seed(), &C3_ORDER)
            } else {
                (c5_seed(), &C5_ORDER)
            };
            let code = conv_code_with(&seed, tau, Boundary::Cyclic).map_err(|e| inst(e.to_string()))?;
            let width = seed.rates().n;
            let order = orient(order, &code, width, tau)
                .ok_or_else(|| inst(format!("{n} gate order does not match the check")))?;
            let s = translate_schedule(n, width, tau, &order);
            Ok((
                s,
                BuiltinInstance::Conv {
                    code,
                    width,
                    frames: tau,
                },
            ))
        }
        n @ ("T9" | "T25") => {
            let kind = InterleaverKind::Transpose { width: 3 };
            let t = if n == "T9" { t9(tau, kind) } else { t25(tau, kind) }.map_err(|e| inst(e.to_string()))?;
            let mut s = turbo_schedule(&t);
            if n == "T9" {
                let dec = TurboDecoder::new(&t, 1, TurboConfig::default()).map_err(|e| inst(e.to_string()))?;
                if let Some(r) = refine_schedule(&s, &dec, 0.01, T9_REFINE_EVALS) {
                    s = r;
                }
            }
            Ok((s, BuiltinInstance::Turbo(Box::new(t))))
        }
        _ => Err(ScheduleError::Unknown(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colouring_is_proper() {
        let edges = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 2)];
        let (col, k) = bipartite_colouring(&edges, 3, 3);
        assert_eq!(k, 3);
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                if edges[i].0 == edges[j].0 || edges[i].1 == edges[j].1 {
                    assert_ne!(col[i], col[j]);
                }
            }
        }
    }

    #[test]
    fn collision_is_reported() {
        let text = "a_1,0 c_1,0 T1\na_1,1 c_1,0 T1\n";
        let s = parse_schedule(text, FrameLayout { ancillas: 1, width: 3 }).unwrap();
        let r = validate(&s);
        assert_eq!(r.collisions, vec![(1, FaultSite::Code(0))]);
    }

    #[test]
    fn text_roundtrip() {
        let (s, _) = builtin_schedule("C3", 6).unwrap();
        let p = parse_schedule(&s.to_text(), s.layout).unwrap();
        let mut a = s.gates.clone();
        let mut b = p.gates.clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
