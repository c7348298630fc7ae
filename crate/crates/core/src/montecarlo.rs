//! Fixed-weight Monte Carlo batches, binomial recombination into WER/BER
//! curves, direct Bernoulli sampling and CSV output.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::code::{extract_syndrome, foliated_logical_flips};
use crate::foliated::FoliatedDecoder;
use crate::gf2::BitVector;
use crate::turbo::TurboDecoder;

#[derive(Debug, Error)]
pub enum McError {
    #[error("weight {j} out of range for {n} qubits")]
    Weight { j: usize, n: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A code plus decoder evaluated one error pattern at a time.
pub trait TrialDecoder: Sync {
    fn n_qubits(&self) -> usize;
    /// Logical qubits counted by the bit error rate.
    fn k(&self) -> usize;
    /// Logical flips left after decoding `err` with i.i.d. prior `p`.
    fn trial(&self, err: &BitVector, p: f64) -> Result<Vec<bool>, String>;
}

impl TrialDecoder for FoliatedDecoder {
    fn n_qubits(&self) -> usize {
        self.fc.n_qubits
    }

    fn k(&self) -> usize {
        self.fc.base.k
    }

    fn trial(&self, err: &BitVector, p: f64) -> Result<Vec<bool>, String> {
        let s = extract_syndrome(&self.fc, err).map_err(|e| e.to_string())?;
        let (c, _) = self
            .decode(&s, &vec![p; self.fc.n_qubits])
            .map_err(|e| e.to_string())?;
        Ok(foliated_logical_flips(&self.fc, &c.xor(err)))
    }
}

impl TrialDecoder for TurboDecoder {
    fn n_qubits(&self) -> usize {
        self.fc.n_qubits
    }

    fn k(&self) -> usize {
        self.fc.base.k
    }

    fn trial(&self, err: &BitVector, p: f64) -> Result<Vec<bool>, String> {
        let s = extract_syndrome(&self.fc, err).map_err(|e| e.to_string())?;
        let (c, _) = self
            .decode(&s, &vec![p; self.fc.n_qubits])
            .map_err(|e| e.to_string())?;
        Ok(foliated_logical_flips(&self.fc, &c.xor(err)))
    }
}

/// Uniformly random support of exactly `j` qubits.
pub fn sample_fixed_weight<R: Rng + ?Sized>(
    n: usize,
    j: usize,
    rng: &mut R,
) -> Result<BitVector, McError> {
    if j > n {
        return Err(McError::Weight { j, n });
    }
    let mut v = BitVector::zeros(n);
    for i in sample(rng, n, j).iter() {
        v.set(i, true);
    }
    Ok(v)
}

/// Independent stream for trial `trial` of weight `j` under run seed `seed`.
pub fn trial_rng(seed: u64, j: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&j.to_le_bytes());
    key[16..24].copy_from_slice(b"foliqmc1");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Number of `j`-subsets of `n`, saturating.
pub fn choose(n: usize, j: usize) -> f64 {
    if j > n {
        return 0.0;
    }
    let j = j.min(n - j);
    let mut c = 1.0f64;
    for i in 0..j {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Lexicographic `j`-subsets of `0..n`; `None` after the last one.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let j = c.len();
    let mut i = j;
    while i > 0 {
        i -= 1;
        if c[i] < n - j + i {
            c[i] += 1;
            for k in i + 1..j {
                c[k] = c[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchConfig {
    pub trials: usize,
    /// Enumerate every pattern when there are at most this many.
    pub exhaustive_limit: f64,
    /// Decoder prior for weight-`j` trials is `j/n`, clamped into this range.
    pub prior_range: (f64, f64),
    pub seed: u64,
    pub parallel: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            trials: 1000,
            exhaustive_limit: 1e5,
            prior_range: (1e-3, 0.25),
            seed: 0,
            parallel: true,
        }
    }
}

impl BatchConfig {
    pub fn prior(&self, n: usize, j: usize) -> f64 {
        (j as f64 / n.max(1) as f64).clamp(self.prior_range.0, self.prior_range.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialBatch {
    pub j: usize,
    pub n_trials: usize,
    pub word_fail: usize,
    pub bit_fail: usize,
    pub exhaustive: bool,
    /// Trials whose decoder returned an error (counted as word failures).
    pub decoder_errors: usize,
    pub seed: u64,
}

impl TrialBatch {
    pub fn p_word(&self) -> f64 {
        if self.n_trials == 0 {
            0.0
        } else {
            self.word_fail as f64 / self.n_trials as f64
        }
    }

    pub fn p_bit(&self, k: usize) -> f64 {
        if self.n_trials == 0 || k == 0 {
            0.0
        } else {
            self.bit_fail as f64 / (self.n_trials * k) as f64
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    trials: usize,
    word: usize,
    bit: usize,
    errors: usize,
}

impl Tally {
    fn add(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            word: self.word + o.word,
            bit: self.bit + o.bit,
            errors: self.errors + o.errors,
        }
    }

    fn one<D: TrialDecoder + ?Sized>(dec: &D, err: &BitVector, p: f64, k: usize) -> Tally {
        match dec.trial(err, p) {
            Ok(flips) => {
                let b = flips.iter().filter(|&&f| f).count();
                Tally {
                    trials: 1,
                    word: usize::from(b > 0),
                    bit: b,
                    errors: 0,
                }
            }
            Err(_) => Tally {
                trials: 1,
                word: 1,
                bit: k,
                errors: 1,
            },
        }
    }
}

/// Runs the weight-`j` batch: every pattern when few enough, else `trials` samples.
pub fn run_batch<D: TrialDecoder + ?Sized>(
    dec: &D,
    j: usize,
    cfg: &BatchConfig,
) -> Result<TrialBatch, McError> {
    let n = dec.n_qubits();
    if j > n {
        return Err(McError::Weight { j, n });
    }
    let k = dec.k();
    let p = cfg.prior(n, j);
    let exhaustive = j == 0 || choose(n, j) <= cfg.exhaustive_limit;
    let tally = if exhaustive {
        let mut combos = Vec::with_capacity(choose(n, j) as usize);
        let mut c: Vec<usize> = (0..j).collect();
        loop {
            combos.push(c.clone());
            if j == 0 || !next_combination(&mut c, n) {
                break;
            }
        }
        let run = |c: &Vec<usize>| Tally::one(dec, &BitVector::from_indices(n, c), p, k);
        if cfg.parallel {
            combos
                .par_iter()
                .map(run)
                .reduce(Tally::default, Tally::add)
        } else {
            combos.iter().map(run).fold(Tally::default(), Tally::add)
        }
    } else {
        let run = |t: usize| {
            let mut rng = trial_rng(cfg.seed, j as u64, t as u64);
            let e = sample_fixed_weight(n, j, &mut rng).expect("j ≤ n");
            Tally::one(dec, &e, p, k)
        };
        if cfg.parallel {
            (0..cfg.trials)
                .into_par_iter()
                .map(run)
                .reduce(Tally::default, Tally::add)
        } else {
            (0..cfg.trials).map(run).fold(Tally::default(), Tally::add)
        }
    };
    Ok(TrialBatch {
        j,
        n_trials: tally.trials,
        word_fail: tally.word,
        bit_fail: tally.bit,
        exhaustive,
        decoder_errors: tally.errors,
        seed: cfg.seed,
    })
}

/// Wilson score interval half-width at one standard deviation, as a σ estimate.
pub fn wilson_sigma(fails: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let ph = fails as f64 / nf;
    let z = 1.0f64;
    let denom = 1.0 + z * z / nf;
    z * (ph * (1.0 - ph) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom
}

/// `C(n,j) p^j (1-p)^(n-j)` computed in log space.
pub fn binomial_pmf(n: usize, j: usize, p: f64) -> f64 {
    if j > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if j == n { 1.0 } else { 0.0 };
    }
    let lc = ln_choose(n, j);
    (lc + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp()
}

fn ln_choose(n: usize, j: usize) -> f64 {
    let j = j.min(n - j);
    (0..j)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub wer: f64,
    pub wer_sigma: f64,
    pub ber: f64,
    pub ber_sigma: f64,
    /// Binomial mass beyond the largest sampled weight.
    pub tail: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub code: String,
    pub layers: usize,
    pub k: usize,
    pub n_qubits: usize,
    pub seed: u64,
    pub batches: Vec<TrialBatch>,
    pub curve: Vec<CurvePoint>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn j_max(&self) -> usize {
        self.batches.iter().map(|b| b.j).max().unwrap_or(0)
    }

    pub fn at(&self, p: f64) -> Option<&CurvePoint> {
        self.curve.iter().find(|c| (c.p - p).abs() < 1e-12)
    }
}

/// Combines per-weight batches into WER(p)/BER(p). Exhaustive batches carry no
/// sampling error; the tail mass beyond the last weight is added to σ.
pub fn binomial_combine(
    batches: &[TrialBatch],
    n: usize,
    k: usize,
    p_grid: &[f64],
) -> Vec<CurvePoint> {
    p_grid
        .iter()
        .map(|&p| {
            let mut wer = 0.0;
            let mut ber = 0.0;
            let mut vw = 0.0;
            let mut vb = 0.0;
            let mut covered = 0.0;
            for b in batches {
                let w = binomial_pmf(n, b.j, p);
                covered += w;
                wer += w * b.p_word();
                ber += w * b.p_bit(k);
                if !b.exhaustive {
                    vw += (w * wilson_sigma(b.word_fail, b.n_trials)).powi(2);
                    vb += (w * wilson_sigma(b.bit_fail, b.n_trials * k.max(1))).powi(2);
                }
            }
            let tail = (1.0 - covered).max(0.0);
            CurvePoint {
                p,
                wer,
                wer_sigma: vw.sqrt() + tail,
                ber,
                ber_sigma: vb.sqrt() + tail,
                tail,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    pub batch: BatchConfig,
    pub p_grid: Vec<f64>,
    /// Hard cap on the largest weight sampled.
    pub j_max: usize,
    /// Stop once the tail mass at the largest p is below this fraction of WER.
    pub tail_fraction: f64,
    /// Extra trials at weight j: `extra · pmf(n, j, p)` for `(p, extra)`.
    pub focus: Option<(f64, usize)>,
}

impl SweepConfig {
    pub fn trials_at(&self, n: usize, j: usize) -> usize {
        let extra = self
            .focus
            .map_or(0, |(p, extra)| (extra as f64 * binomial_pmf(n, j, p)).round() as usize);
        self.batch.trials.max(extra)
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            batch: BatchConfig::default(),
            p_grid: vec![0.01, 0.02, 0.04],
            j_max: 64,
            tail_fraction: 1e-3,
            focus: None,
        }
    }
}

/// Runs batches j = 0, 1, … until the tail rule or `j_max` stops it.
pub fn run_sweep<D: TrialDecoder + ?Sized>(
    dec: &D,
    code: &str,
    layers: usize,
    cfg: &SweepConfig,
) -> Result<SweepResult, McError> {
    if cfg.p_grid.is_empty() {
        return Err(McError::EmptyGrid);
    }
    let n = dec.n_qubits();
    let k = dec.k();
    let p_top = cfg.p_grid.iter().cloned().fold(0.0, f64::max);
    let mut batches = Vec::new();
    let mut warnings = Vec::new();
    let mut covered = 0.0;
    let mut wer_top = 0.0;
    for j in 0..=cfg.j_max.min(n) {
        let bc = BatchConfig {
            trials: cfg.trials_at(n, j),
            ..cfg.batch.clone()
        };
        let b = run_batch(dec, j, &bc)?;
        let w = binomial_pmf(n, j, p_top);
        covered += w;
        wer_top += w * b.p_word();
        if b.decoder_errors > 0 {
            warnings.push(format!(
                "j={j}: {} decoder errors counted as failures",
                b.decoder_errors
            ));
        }
        batches.push(b);
        let tail = 1.0 - covered;
        if wer_top > 0.0 && tail < cfg.tail_fraction * wer_top {
            break;
        }
        if j == cfg.j_max.min(n) && tail > cfg.tail_fraction * wer_top.max(f64::MIN_POSITIVE) {
            warnings.push(format!(
                "tail mass {tail:.3e} at p={p_top} exceeds {} of WER",
                cfg.tail_fraction
            ));
        }
    }
    let curve = binomial_combine(&batches, n, k, &cfg.p_grid);
    Ok(SweepResult {
        code: code.to_string(),
        layers,
        k,
        n_qubits: n,
        seed: cfg.batch.seed,
        batches,
        curve,
        warnings,
    })
}

/// Direct estimate at rate `p` from `trials` Bernoulli patterns.
#[derive(Clone, Debug, Serialize)]
pub struct DirectEstimate {
    pub p: f64,
    pub trials: usize,
    pub word_fail: usize,
    pub bit_fail: usize,
    pub wer: f64,
    pub wer_sigma: f64,
}

pub fn direct_sample<D: TrialDecoder + ?Sized>(
    dec: &D,
    p: f64,
    trials: usize,
    seed: u64,
) -> DirectEstimate {
    let n = dec.n_qubits();
    let k = dec.k();
    let t = (0..trials)
        .into_par_iter()
        .map(|t| {
            // Stream keyed apart from the fixed-weight streams.
            let mut rng = trial_rng(seed, u64::MAX - 1, t as u64);
            let bits: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < p).collect();
            Tally::one(dec, &BitVector::from_bools(&bits), p, k)
        })
        .reduce(Tally::default, Tally::add);
    DirectEstimate {
        p,
        trials,
        word_fail: t.word,
        bit_fail: t.bit,
        wer: t.word as f64 / trials.max(1) as f64,
        wer_sigma: wilson_sigma(t.word, trials),
    }
}

#[derive(Serialize)]
struct CurveRow<'a> {
    code: &'a str,
    #[serde(rename = "L")]
    layers: usize,
    k: usize,
    p: f64,
    wer: f64,
    wer_sigma: f64,
    ber: f64,
    ber_sigma: f64,
    n_qubits: usize,
    j_max: usize,
    seed: u64,
}

#[derive(Serialize)]
struct BatchRow<'a> {
    code: &'a str,
    #[serde(rename = "L")]
    layers: usize,
    k: usize,
    j: usize,
    n_trials: usize,
    word_fail: usize,
    bit_fail: usize,
}

/// Writes `code,L,k,p,wer,wer_sigma,ber,ber_sigma,n_qubits,j_max,seed`.
pub fn write_curve_csv<W: Write>(out: W, results: &[SweepResult]) -> Result<(), McError> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        for c in &r.curve {
            w.serialize(CurveRow {
                code: &r.code,
                layers: r.layers,
                k: r.k,
                p: c.p,
                wer: c.wer,
                wer_sigma: c.wer_sigma,
                ber: c.ber,
                ber_sigma: c.ber_sigma,
                n_qubits: r.n_qubits,
                j_max: r.j_max(),
                seed: r.seed,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `code,L,k,j,n_trials,word_fail,bit_fail`.
pub fn write_batch_csv<W: Write>(out: W, results: &[SweepResult]) -> Result<(), McError> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        for b in &r.batches {
            w.serialize(BatchRow {
                code: &r.code,
                layers: r.layers,
                k: r.k,
                j: b.j,
                n_trials: b.n_trials,
                word_fail: b.word_fail,
                bit_fail: b.bit_fail,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Always(usize);

    impl TrialDecoder for Always {
        fn n_qubits(&self) -> usize {
            self.0
        }
        fn k(&self) -> usize {
            1
        }
        fn trial(&self, err: &BitVector, _p: f64) -> Result<Vec<bool>, String> {
            Ok(vec![!err.is_zero()])
        }
    }

    #[test]
    fn fixed_weight_extremes() {
        let mut rng = trial_rng(1, 0, 0);
        assert!(sample_fixed_weight(10, 0, &mut rng).unwrap().is_zero());
        assert_eq!(sample_fixed_weight(10, 10, &mut rng).unwrap().weight(), 10);
        assert!(sample_fixed_weight(10, 11, &mut rng).is_err());
    }

    #[test]
    fn closed_form_when_every_error_fails() {
        let n = 20;
        let batches: Vec<TrialBatch> = (0..=n)
            .map(|j| run_batch(&Always(n), j, &BatchConfig::default()).unwrap())
            .collect();
        for p in [0.01, 0.1, 0.3] {
            let c = &binomial_combine(&batches, n, 1, &[p])[0];
            assert!((c.wer - (1.0 - (1.0f64 - p).powi(n as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn combinations_are_counted() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(choose(5, 2), 10.0);
    }
}
