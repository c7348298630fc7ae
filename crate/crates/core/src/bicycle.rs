//! Bicycle codes `H = [C | Cᵀ]` from a sparse circulant, and belief
//! propagation on the Tanner graphs of their foliations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::code::{
    extract_syndrome, foliate, foliated_logical_flips, CssCode, FoliatedCode, SheetKind,
};
use crate::foliated::dual_logicals;
use crate::gf2::{matmul, row_reduce, BitMatrix, BitVector};
use crate::montecarlo::TrialDecoder;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BicycleError {
    #[error("seed row has length {got}, expected {m}")]
    SeedLength { m: usize, got: usize },
    #[error("removed row {0} out of range")]
    RowRange(usize),
    #[error("H_X·H_Zᵀ ≠ 0")]
    NotOrthogonal,
    #[error("no removal pattern reaches k = {0}")]
    Unreachable(usize),
}

/// Square matrix whose row `i` is the seed row rotated right by `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circulant {
    pub m: usize,
    pub seed_row: BitVector,
}

impl Circulant {
    pub fn new(seed_row: BitVector) -> Self {
        Circulant {
            m: seed_row.len(),
            seed_row,
        }
    }

    pub fn weight(&self) -> usize {
        self.seed_row.weight()
    }

    pub fn matrix(&self) -> BitMatrix {
        let m = self.m;
        let mut a = BitMatrix::zeros(m, m);
        for i in 0..m {
            for j in self.seed_row.iter_ones() {
                a.set(i, (j + i) % m, true);
            }
        }
        a
    }
}

#[derive(Clone, Debug)]
pub struct BicycleCode {
    pub m: usize,
    pub w: usize,
    pub circulant: Circulant,
    pub removed_rows: Vec<usize>,
    pub h: BitMatrix,
    /// Self-dual CSS code with `sx = sz = h`.
    pub code: CssCode,
}

/// Logical X representatives: kernel vectors of `h` outside its row space.
fn self_dual_logicals(h: &BitMatrix) -> BitMatrix {
    let ker = h.nullspace();
    let mut span = h.clone();
    let (_, mut rank, _) = row_reduce(&span);
    let mut out = BitMatrix::zeros(0, h.cols());
    for v in ker.row_vecs() {
        let mut trial = span.clone();
        trial.push_row(v.clone());
        let r = trial.rank();
        if r > rank {
            rank = r;
            span = trial;
            out.push_row(v.clone());
        }
    }
    out
}

pub fn build_bicycle(
    m: usize,
    seed_row: &BitVector,
    removed_rows: &[usize],
) -> Result<BicycleCode, BicycleError> {
    if seed_row.len() != m {
        return Err(BicycleError::SeedLength {
            m,
            got: seed_row.len(),
        });
    }
    if let Some(&r) = removed_rows.iter().find(|&&r| r >= m) {
        return Err(BicycleError::RowRange(r));
    }
    let c = Circulant::new(seed_row.clone());
    let cm = c.matrix();
    let full = cm.hstack(&cm.transpose());
    let keep: Vec<usize> = (0..m).filter(|r| !removed_rows.contains(r)).collect();
    let h = full.select_rows(&keep);
    if !matmul(&h, &h.transpose())
        .expect("square shapes")
        .is_zero()
    {
        return Err(BicycleError::NotOrthogonal);
    }
    let lx = self_dual_logicals(&h);
    let lz = dual_logicals(&lx, &lx);
    let code = CssCode::new(h.clone(), h.clone(), lx, lz).map_err(|_| BicycleError::NotOrthogonal)?;
    let mut removed = removed_rows.to_vec();
    removed.sort_unstable();
    Ok(BicycleCode {
        m,
        w: seed_row.weight(),
        circulant: c,
        removed_rows: removed,
        h,
        code,
    })
}

/// Random weight-`w` seed row, preferring rows whose pairwise differences are
/// distinct (no 4-cycles inside C) within `attempts` draws.
pub fn random_seed_row<R: Rng + ?Sized>(m: usize, w: usize, rng: &mut R, attempts: usize) -> BitVector {
    let mut best: Option<(usize, Vec<usize>)> = None;
    for _ in 0..attempts.max(1) {
        let idx: Vec<usize> = rand::seq::index::sample(rng, m, w.min(m)).into_vec();
        let mut seen = vec![0usize; m];
        for &a in &idx {
            for &b in &idx {
                if a != b {
                    seen[(a + m - b) % m] += 1;
                }
            }
        }
        let clashes: usize = seen.iter().map(|&c| c.saturating_sub(1)).sum();
        if best.as_ref().is_none_or(|(c, _)| clashes < *c) {
            best = Some((clashes, idx));
        }
        if clashes == 0 {
            break;
        }
    }
    BitVector::from_indices(m, &best.expect("at least one draw").1)
}

/// Bicycle code of rate `k/(2m)` with `m = k/(2·rate)`: removes evenly spaced
/// rows, shifting the spacing when a removal does not raise the logical count.
pub fn bicycle_with_rate(k: usize, rate_den: usize, w: usize, seed: u64) -> Result<BicycleCode, BicycleError> {
    let m = k * rate_den / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let row = random_seed_row(m, w, &mut rng, 200);
        let base = build_bicycle(m, &row, &[])?;
        let mut removed = Vec::new();
        let mut cur = base.code.k;
        let mut offset = 0usize;
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        while cur < k && removed.len() < m {
            // Evenly spaced candidates first, then a shuffled sweep.
            let stride = (m / k.max(1)).max(1);
            let cand = if offset < k {
                (offset * stride + removed.len()) % m
            } else {
                order[(offset - k) % m]
            };
            offset += 1;
            if removed.contains(&cand) {
                continue;
            }
            let mut trial = removed.clone();
            trial.push(cand);
            let c = build_bicycle(m, &row, &trial)?;
            if c.code.k > cur && c.code.k <= k {
                cur = c.code.k;
                removed = trial;
            }
            if offset > k + m {
                break;
            }
        }
        if cur == k {
            return build_bicycle(m, &row, &removed);
        }
    }
    Err(BicycleError::Unreachable(k))
}

/// Upper bound on the distance by random information sets: the lightest
/// nontrivial logical found over `rounds` column orders.
pub fn distance_bound(code: &CssCode, rounds: usize, seed: u64) -> Option<usize> {
    let n = code.n;
    let ker = code.sx.nullspace();
    if ker.rows() == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<usize> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..rounds.max(1) {
        perm.shuffle(&mut rng);
        let permuted = BitMatrix::from_rows(
            n,
            ker.row_vecs()
                .iter()
                .map(|r| {
                    let mut v = BitVector::zeros(n);
                    for (new, &old) in perm.iter().enumerate() {
                        if r.get(old) {
                            v.set(new, true);
                        }
                    }
                    v
                })
                .collect(),
        );
        let (red, rank, _) = row_reduce(&permuted);
        for i in 0..rank {
            let mut v = BitVector::zeros(n);
            for (new, &old) in perm.iter().enumerate() {
                if red.row(i).get(new) {
                    v.set(old, true);
                }
            }
            if !code.logical_z.mul_vec(&v).is_zero() || !code.logical_x.mul_vec(&v).is_zero() {
                let w = v.weight();
                if best.is_none_or(|b| w < b) {
                    best = Some(w);
                }
            }
        }
    }
    best
}

/// Bipartite factor graph over a subset of qubits of a foliated code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TannerGraph {
    /// Global qubit index of each variable node.
    pub var_ids: Vec<usize>,
    /// Global check index of each factor node.
    pub check_ids: Vec<usize>,
    /// Local variable indices per factor.
    pub checks: Vec<Vec<usize>>,
    /// `(factor, position in factor)` per variable.
    pub var_edges: Vec<Vec<(usize, usize)>>,
}

impl TannerGraph {
    /// Graph over the listed checks of `fc`.
    pub fn from_checks(fc: &FoliatedCode, check_ids: &[usize]) -> Self {
        let mut local = vec![usize::MAX; fc.n_qubits];
        let mut var_ids = Vec::new();
        let mut checks = Vec::with_capacity(check_ids.len());
        for &c in check_ids {
            let row: Vec<usize> = fc.checks[c]
                .support
                .iter()
                .map(|&q| {
                    if local[q] == usize::MAX {
                        local[q] = var_ids.len();
                        var_ids.push(q);
                    }
                    local[q]
                })
                .collect();
            checks.push(row);
        }
        Self::assemble(var_ids, check_ids.to_vec(), checks)
    }

    fn assemble(var_ids: Vec<usize>, check_ids: Vec<usize>, checks: Vec<Vec<usize>>) -> Self {
        let mut var_edges = vec![Vec::new(); var_ids.len()];
        for (a, row) in checks.iter().enumerate() {
            for (pos, &v) in row.iter().enumerate() {
                var_edges[v].push((a, pos));
            }
        }
        TannerGraph {
            var_ids,
            check_ids,
            checks,
            var_edges,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.var_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.checks.iter().map(|c| c.len()).sum()
    }

    /// Sub-graph induced by a subset of factors.
    pub fn restrict(&self, factors: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n_vars()];
        let mut var_ids = Vec::new();
        let mut checks = Vec::new();
        for &a in factors {
            checks.push(
                self.checks[a]
                    .iter()
                    .map(|&v| {
                        if local[v] == usize::MAX {
                            local[v] = var_ids.len();
                            var_ids.push(self.var_ids[v]);
                        }
                        local[v]
                    })
                    .collect(),
            );
        }
        Self::assemble(
            var_ids,
            factors.iter().map(|&a| self.check_ids[a]).collect(),
            checks,
        )
    }

    /// True if the graph has no cycles.
    pub fn is_tree(&self) -> bool {
        // A forest has |E| = |V| + |F| − components.
        let nv = self.n_vars();
        let nf = self.checks.len();
        let mut parent: Vec<usize> = (0..nv + nf).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (a, row) in self.checks.iter().enumerate() {
            for &v in row {
                let (x, y) = (find(&mut parent, v), find(&mut parent, nv + a));
                if x == y {
                    return false;
                }
                parent[x] = y;
            }
        }
        true
    }
}

/// Largest cycle-free set of factors grown greedily from `start`.
pub fn tree_subgraph(graph: &TannerGraph, start: usize) -> TannerGraph {
    let nf = graph.checks.len();
    let mut chosen = vec![start];
    for off in 1..nf {
        let a = (start + off) % nf;
        chosen.push(a);
        if !graph.restrict(&chosen).is_tree() {
            chosen.pop();
        }
    }
    graph.restrict(&chosen)
}

/// Exact posterior marginals over error patterns of weight at most `max_weight`.
pub fn brute_force_marginals(
    graph: &TannerGraph,
    syndrome: &BitVector,
    priors: &[f64],
    max_weight: usize,
) -> Vec<f64> {
    let nv = graph.n_vars();
    let base: f64 = priors.iter().map(|&p| (1.0 - p).ln()).sum();
    let odds: Vec<f64> = priors.iter().map(|&p| p / (1.0 - p)).collect();
    let mut z = 0.0;
    let mut marg = vec![0.0; nv];
    let mut idx: Vec<usize> = Vec::new();
    let mut parity = BitVector::zeros(graph.checks.len());
    #[allow(clippy::too_many_arguments)]
    fn rec(
        g: &TannerGraph,
        start: usize,
        w: f64,
        idx: &mut Vec<usize>,
        parity: &mut BitVector,
        s: &BitVector,
        odds: &[f64],
        max_weight: usize,
        z: &mut f64,
        marg: &mut [f64],
    ) {
        if parity == s {
            *z += w;
            for &i in idx.iter() {
                marg[i] += w;
            }
        }
        if idx.len() == max_weight {
            return;
        }
        for v in start..g.n_vars() {
            for &(a, _) in &g.var_edges[v] {
                parity.flip(a);
            }
            idx.push(v);
            rec(g, v + 1, w * odds[v], idx, parity, s, odds, max_weight, z, marg);
            idx.pop();
            for &(a, _) in &g.var_edges[v] {
                parity.flip(a);
            }
        }
    }
    rec(
        graph, 0, base.exp(), &mut idx, &mut parity, syndrome, &odds, max_weight, &mut z, &mut marg,
    );
    if z > 0.0 {
        marg.iter_mut().for_each(|m| *m /= z);
    }
    marg
}

/// Primal and dual factor graphs of the foliated code: checks centred on primal
/// sheets with their variables, and likewise for dual sheets.
pub fn build_foliated_tanner(fc: &FoliatedCode) -> (TannerGraph, TannerGraph) {
    let by_kind = |k: SheetKind| -> Vec<usize> {
        (0..fc.n_checks())
            .filter(|&c| fc.kinds[fc.checks[c].sheet] == k)
            .collect()
    };
    (
        TannerGraph::from_checks(fc, &by_kind(SheetKind::Primal)),
        TannerGraph::from_checks(fc, &by_kind(SheetKind::Dual)),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct BpConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Weight of the previous message in damped updates (0 disables damping).
    pub damping: f64,
    /// Count a non-converged decode as a word failure.
    pub fail_on_nonconvergence: bool,
    /// Stop as soon as the hard decision satisfies the syndrome.
    pub stop_on_syndrome: bool,
    /// Fall back to OSD-0 when greedy repair stalls.
    pub osd: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            max_iters: 100,
            tol: 1e-6,
            damping: 0.0,
            fail_on_nonconvergence: true,
            stop_on_syndrome: true,
            osd: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Repair {
    None,
    Greedy,
    Osd,
    Failed,
}

#[derive(Clone, Debug)]
pub struct BpResult {
    /// Belief that each variable carries an error.
    pub marginals: Vec<f64>,
    pub hard: BitVector,
    pub converged: bool,
    pub iterations: usize,
    pub repair: Repair,
    pub damped: bool,
}

const LLR_CAP: f64 = 40.0;

fn llr(p: f64) -> f64 {
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    ((1.0 - p) / p).ln().clamp(-LLR_CAP, LLR_CAP)
}

fn prob(l: f64) -> f64 {
    1.0 / (1.0 + l.exp())
}

/// Flooding sum-product on `graph`; `syndrome[a]` is the parity of factor `a`.
pub fn bp_decode(graph: &TannerGraph, syndrome: &BitVector, priors: &[f64], cfg: &BpConfig) -> BpResult {
    let nf = graph.checks.len();
    let nv = graph.n_vars();
    let prior_llr: Vec<f64> = priors.iter().map(|&p| llr(p)).collect();
    // Messages indexed [factor][position].
    let mut q2a: Vec<Vec<f64>> = graph
        .checks
        .iter()
        .map(|row| row.iter().map(|&v| prior_llr[v]).collect())
        .collect();
    let mut a2q: Vec<Vec<f64>> = graph.checks.iter().map(|row| vec![0.0; row.len()]).collect();
    let mut converged = false;
    let mut iterations = 0;
    let mut total = prior_llr.clone();
    for _ in 0..cfg.max_iters.max(1) {
        iterations += 1;
        let mut delta = 0.0f64;
        for a in 0..nf {
            let t: Vec<f64> = q2a[a].iter().map(|&l| (l / 2.0).tanh()).collect();
            let d = t.len();
            let mut prefix = vec![1.0; d + 1];
            for i in 0..d {
                prefix[i + 1] = prefix[i] * t[i];
            }
            let mut suffix = 1.0;
            let sign = if syndrome.get(a) { -1.0 } else { 1.0 };
            for i in (0..d).rev() {
                let prod = (sign * prefix[i] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                let mut new = (2.0 * prod.atanh()).clamp(-LLR_CAP, LLR_CAP);
                if cfg.damping > 0.0 {
                    new = cfg.damping * a2q[a][i] + (1.0 - cfg.damping) * new;
                }
                delta = delta.max((prob(new) - prob(a2q[a][i])).abs());
                a2q[a][i] = new;
                suffix *= t[i];
            }
        }
        for v in 0..nv {
            let mut s = prior_llr[v];
            for &(a, i) in &graph.var_edges[v] {
                s += a2q[a][i];
            }
            total[v] = s;
            for &(a, i) in &graph.var_edges[v] {
                q2a[a][i] = (s - a2q[a][i]).clamp(-LLR_CAP, LLR_CAP);
            }
        }
        if delta < cfg.tol {
            converged = true;
            break;
        }
        if cfg.stop_on_syndrome {
            let h = BitVector::from_bools(&total.iter().map(|&l| l < 0.0).collect::<Vec<_>>());
            if local_syndrome(graph, &h) == *syndrome {
                converged = true;
                break;
            }
        }
    }
    let marginals: Vec<f64> = total.iter().map(|&l| prob(l)).collect();
    let mut hard = BitVector::from_bools(&marginals.iter().map(|&p| p > 0.5).collect::<Vec<_>>());
    let repair = repair(graph, syndrome, &marginals, &mut hard, cfg.osd);
    BpResult {
        marginals,
        hard,
        converged,
        iterations,
        repair,
        damped: cfg.damping > 0.0,
    }
}

fn local_syndrome(graph: &TannerGraph, e: &BitVector) -> BitVector {
    let mut s = BitVector::zeros(graph.checks.len());
    for (a, row) in graph.checks.iter().enumerate() {
        if row.iter().filter(|&&v| e.get(v)).count() % 2 == 1 {
            s.set(a, true);
        }
    }
    s
}

/// Greedy flips by posterior, then ordered-statistics (OSD-0) elimination.
fn repair(
    graph: &TannerGraph,
    syndrome: &BitVector,
    marginals: &[f64],
    hard: &mut BitVector,
    osd: bool,
) -> Repair {
    let mut diff = local_syndrome(graph, hard).xor(syndrome);
    if diff.is_zero() {
        return Repair::None;
    }
    let mut flipped = vec![false; graph.n_vars()];
    for _ in 0..graph.n_vars() {
        // Variable clearing the most unsatisfied checks, most likely first.
        let mut best: Option<(i64, f64, usize)> = None;
        for a in diff.iter_ones() {
            for &v in &graph.checks[a] {
                if flipped[v] {
                    continue;
                }
                let gain: i64 = graph.var_edges[v]
                    .iter()
                    .map(|&(b, _)| if diff.get(b) { 1 } else { -1 })
                    .sum();
                let p = if hard.get(v) { 1.0 - marginals[v] } else { marginals[v] };
                let key = (gain, p, v);
                if best.is_none_or(|b| (key.0, key.1) > (b.0, b.1)) {
                    best = Some(key);
                }
            }
        }
        let Some((gain, _, v)) = best else { break };
        if gain <= 0 {
            break;
        }
        hard.flip(v);
        flipped[v] = true;
        for &(b, _) in &graph.var_edges[v] {
            diff.flip(b);
        }
        if diff.is_zero() {
            return Repair::Greedy;
        }
    }
    if !osd {
        return Repair::Failed;
    }
    // OSD-0: pivots chosen in order of decreasing error belief.
    let nv = graph.n_vars();
    let mut order: Vec<usize> = (0..nv).collect();
    order.sort_by(|&a, &b| marginals[b].partial_cmp(&marginals[a]).unwrap().then(a.cmp(&b)));
    let nf = graph.checks.len();
    let mut cols: Vec<BitVector> = order
        .iter()
        .map(|&v| {
            let mut c = BitVector::zeros(nf);
            for &(a, _) in &graph.var_edges[v] {
                c.flip(a);
            }
            c
        })
        .collect();
    // Augmented elimination over columns in reliability order.
    let mut rows: Vec<BitVector> = (0..nf)
        .map(|a| {
            let mut r = BitVector::zeros(nv + 1);
            for (j, c) in cols.iter().enumerate() {
                if c.get(a) {
                    r.set(j, true);
                }
            }
            if syndrome.get(a) {
                r.set(nv, true);
            }
            r
        })
        .collect();
    cols.clear();
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for j in 0..nv {
        let Some(p) = (r0..nf).find(|&r| rows[r].get(j)) else {
            continue;
        };
        rows.swap(r0, p);
        let pr = rows[r0].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != r0 && row.get(j) {
                row.xor_assign(&pr);
            }
        }
        pivots.push(j);
        r0 += 1;
        if r0 == nf {
            break;
        }
    }
    if rows[r0..].iter().any(|r| r.get(nv)) {
        return Repair::Failed;
    }
    let mut e = BitVector::zeros(nv);
    for (r, &j) in pivots.iter().enumerate() {
        if rows[r].get(nv) {
            e.set(order[j], true);
        }
    }
    *hard = e;
    Repair::Osd
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BpDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub repairs: Vec<Repair>,
}

/// BP decoder for a foliated CSS code: primal and dual graphs decoded apart.
pub struct BpDecoder {
    pub fc: FoliatedCode,
    pub primal: TannerGraph,
    pub dual: TannerGraph,
    pub config: BpConfig,
}

impl BpDecoder {
    pub fn new(code: &CssCode, sheets: usize, config: BpConfig) -> Self {
        let fc = foliate(code, sheets);
        let (primal, dual) = build_foliated_tanner(&fc);
        BpDecoder {
            fc,
            primal,
            dual,
            config,
        }
    }

    pub fn decode(&self, syndrome: &BitVector, priors: &[f64]) -> (BitVector, BpDiagnostics) {
        let mut corr = BitVector::zeros(self.fc.n_qubits);
        let mut diag = BpDiagnostics {
            converged: true,
            ..Default::default()
        };
        for g in [&self.primal, &self.dual] {
            if g.checks.is_empty() {
                continue;
            }
            let s = BitVector::from_bools(
                &g.check_ids.iter().map(|&c| syndrome.get(c)).collect::<Vec<_>>(),
            );
            let pr: Vec<f64> = g.var_ids.iter().map(|&q| priors[q]).collect();
            let r = bp_decode(g, &s, &pr, &self.config);
            diag.converged &= r.converged;
            diag.iterations = diag.iterations.max(r.iterations);
            diag.repairs.push(r.repair);
            for v in r.hard.iter_ones() {
                corr.set(g.var_ids[v], true);
            }
        }
        (corr, diag)
    }
}

impl TrialDecoder for BpDecoder {
    fn n_qubits(&self) -> usize {
        self.fc.n_qubits
    }

    fn k(&self) -> usize {
        self.fc.base.k
    }

    fn trial(&self, err: &BitVector, p: f64) -> Result<Vec<bool>, String> {
        let s = extract_syndrome(&self.fc, err).map_err(|e| e.to_string())?;
        let (c, d) = self.decode(&s, &vec![p; self.fc.n_qubits]);
        let mut flips = foliated_logical_flips(&self.fc, &c.xor(err));
        let unrepaired = d.repairs.contains(&Repair::Failed);
        if (unrepaired || (self.config.fail_on_nonconvergence && !d.converged))
            && !flips.iter().any(|&f| f)
        {
            if let Some(f) = flips.first_mut() {
                *f = true;
            }
        }
        Ok(flips)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_circulant_is_orthogonal() {
        let c = build_bicycle(4, &BitVector::parse("1100").unwrap(), &[]).unwrap();
        assert!(matmul(&c.h, &c.h.transpose()).unwrap().is_zero());
    }

    #[test]
    fn zero_syndrome_converges_fast() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let row = random_seed_row(8, 3, &mut rng, 10);
        let code = build_bicycle(8, &row, &[0]).unwrap();
        let dec = BpDecoder::new(&code.code, 1, BpConfig::default());
        let (c, d) = dec.decode(&BitVector::zeros(dec.fc.n_checks()), &vec![0.05; dec.fc.n_qubits]);
        assert!(c.is_zero());
        assert!(d.converged && d.iterations <= 2, "{d:?}");
    }

    #[test]
    fn single_check_tree_is_exact() {
        // One factor over three variables with odd parity.
        let g = TannerGraph::assemble(vec![0, 1, 2], vec![0], vec![vec![0, 1, 2]]);
        let p = [0.1, 0.2, 0.3];
        let r = bp_decode(&g, &BitVector::parse("1").unwrap(), &p, &BpConfig::default());
        let mut z = 0.0;
        let mut m0 = 0.0;
        for e in 0..8u32 {
            if e.count_ones() % 2 == 1 {
                let w: f64 = (0..3)
                    .map(|i| if e >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
                    .product();
                z += w;
                if e & 1 == 1 {
                    m0 += w;
                }
            }
        }
        assert!((r.marginals[0] - m0 / z).abs() < 1e-9);
    }
}
