//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bicycle::{distance_bound, BpConfig, BpDecoder};
use crate::code::{
    code_syndrome, expand_aligned_isf_with, extract_syndrome, foliate, foliated_logical_flips,
    is_logical_failure, pure_error, CssCode,
};
use crate::delay::Boundary;
use crate::foliated::{DecoderConfig, FoliatedDecoder};
use crate::gf2::{solve, BitVector};
use crate::montecarlo::{run_sweep, write_batch_csv, write_curve_csv, BatchConfig, SweepConfig, TrialDecoder};
use crate::schedule::{
    all_faults, builtin_schedule, check_all_single_faults, parse_schedule, refine_schedule, validate, FrameLayout,
};
use crate::siso::Layout;
use crate::specfile::{builtin, parse_spec, BuiltCode, SpecError};
use crate::trellis::{build_trellis, min_weight_path};
use crate::turbo::{TurboConfig, TurboDecoder};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Run(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Exit status: verdict failures are 1, bad input or runtime errors are 2.
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "foliq", version, about = "Foliated sparse quantum codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a code and print its parameters.
    Build(BuildArgs),
    /// Decode one error pattern or syndrome and print a JSON report.
    Decode(DecodeArgs),
    /// Monte Carlo sweep writing curve and batch CSV tables.
    Sweep(SweepArgs),
    /// Validate a construction schedule and decode every single fault.
    ScheduleCheck(ScheduleArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CodeArgs {
    /// Builtin code name (C3, C5, T9, T25, Steane, bicycle).
    #[arg(long, conflicts_with = "spec")]
    pub code: Option<String>,
    /// Code-spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Frames for convolutional codes.
    #[arg(long)]
    pub tau: Option<usize>,
    /// Logical qubits for turbo and bicycle codes.
    #[arg(long)]
    pub k: Option<usize>,
    /// Override the boundary of a convolutional code.
    #[arg(long, value_parser = parse_boundary)]
    pub boundary: Option<Boundary>,
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s.to_ascii_lowercase().as_str() {
        "terminated" => Ok(Boundary::Terminated),
        "open" => Ok(Boundary::Open),
        "cyclic" => Ok(Boundary::Cyclic),
        o => Err(format!("unknown boundary {o}")),
    }
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Random information sets for the distance bound.
    #[arg(long, default_value_t = 200)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Sheets; 0 decodes the plain code on its trellis.
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// Error pattern as a bit string (spaces and underscores ignored).
    #[arg(long, conflicts_with = "syndrome")]
    pub error: Option<String>,
    /// Syndrome as a bit string.
    #[arg(long)]
    pub syndrome: Option<String>,
    /// Prior error rate.
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Builtin code name.
    #[arg(long, conflicts_with = "spec")]
    pub code: Option<String>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Sizes (τ or k), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub layers: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.04")]
    pub p_grid: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub j_max: usize,
    /// Sampled trials per weight.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Enumerate weights with at most this many patterns.
    #[arg(long, default_value_t = 1e5)]
    pub exhaustive_limit: f64,
    /// Extra trials spread by binomial weight at `focus_p`.
    #[arg(long, default_value_t = 0)]
    pub focus_trials: usize,
    #[arg(long, default_value_t = 0.01)]
    pub focus_p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "FOLIQ_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory for curve.csv and batches.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    /// Builtin schedule (C3, C5, T9, T25).
    #[arg(long, conflicts_with = "file")]
    pub name: Option<String>,
    /// Schedule text file; validated and fault weights checked.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub ancillas: usize,
    #[arg(long, default_value_t = 3)]
    pub width: usize,
    #[arg(long, default_value_t = 8)]
    pub tau: usize,
    /// Search time relabellings so that every ancilla fault decodes.
    #[arg(long)]
    pub refine: bool,
    #[arg(long, default_value_t = 20000)]
    pub max_evals: usize,
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    /// Write the (possibly refined) schedule text here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_code(args: &CodeArgs) -> Result<BuiltCode, CliError> {
    let size = args.tau.or(args.k);
    let spec = match (&args.code, &args.spec) {
        (Some(name), _) => {
            if let Some(r) = builtin(name, None) {
                r?;
            }
            let text = crate::specfile::builtin_spec(name)
                .ok_or_else(|| CliError::Input(format!("unknown builtin {name}")))?;
            parse_spec(text)?
        }
        (None, Some(path)) => parse_spec(&fs::read_to_string(path)?)?,
        (None, None) => return Err(CliError::Input("one of --code or --spec is required".into())),
    };
    let spec = match (spec, args.boundary) {
        (crate::specfile::CodeSpec::Conv { name, seed, tau, .. }, Some(b)) => crate::specfile::CodeSpec::Conv {
            name,
            seed,
            tau,
            boundary: b,
        },
        (s, _) => s,
    };
    Ok(spec.build(size)?)
}

/// Trial decoder for `layers` sheets of a built code.
pub fn make_decoder(code: &BuiltCode, layers: usize) -> Result<Box<dyn TrialDecoder>, CliError> {
    if layers == 0 {
        return Err(CliError::Input("at least one sheet".into()));
    }
    let run = |e: String| CliError::Run(e);
    Ok(match code {
        BuiltCode::Conv { seed, code, tau, .. } => {
            let fc = foliate(code, layers);
            Box::new(
                FoliatedDecoder::new(&fc, &Layout::framed(seed.n(), *tau), DecoderConfig::default())
                    .map_err(|e| run(e.to_string()))?,
            )
        }
        BuiltCode::Turbo(t) => {
            Box::new(TurboDecoder::new(t, layers, TurboConfig::default()).map_err(|e| run(e.to_string()))?)
        }
        BuiltCode::Block { code, .. } => Box::new(BpDecoder::new(code, layers, BpConfig::default())),
        BuiltCode::Bicycle { code, .. } => Box::new(BpDecoder::new(&code.code, layers, BpConfig::default())),
    })
}

fn bits(s: &str) -> Result<BitVector, CliError> {
    let clean: String = s.chars().filter(|c| !c.is_whitespace() && *c != '_' && *c != '|').collect();
    BitVector::parse(&clean).ok_or_else(|| CliError::Input(format!("not a bit string: {s:?}")))
}

fn frames(v: &BitVector, width: usize) -> Vec<String> {
    if width == 0 {
        return vec![v.to_string()];
    }
    (0..v.len().div_ceil(width))
        .map(|t| v.slice(t * width, width.min(v.len() - t * width)).to_string())
        .collect()
}

fn width_of(code: &BuiltCode) -> usize {
    match code {
        BuiltCode::Conv { seed, .. } => seed.n(),
        BuiltCode::Turbo(t) => t.inner_layout.code_width,
        _ => 0,
    }
}

pub fn cmd_build(args: &BuildArgs) -> Result<Value, CliError> {
    let code = load_code(&args.code)?;
    let css: &CssCode = code.css();
    let d = distance_bound(css, args.rounds, args.seed);
    let mut out = json!({
        "name": code.name(),
        "n": css.n,
        "k": css.k,
        "rate": format!("{}/{}", css.k, css.n),
        "d_upper": d,
        "x_checks": css.sx.rows(),
        "z_checks": css.sz.rows(),
        "max_check_weight": css.sx.row_vecs().iter().map(|r| r.weight()).max().unwrap_or(0),
    });
    let nominal = match code.name().to_ascii_uppercase().as_str() {
        "C3" => Some(3),
        "C5" => Some(5),
        "T9" => Some(9),
        "T25" => Some(25),
        _ => None,
    };
    if let Some(d) = nominal {
        out["d_nominal"] = json!(d);
    }
    match &code {
        BuiltCode::Conv {
            seed, tau, boundary, ..
        } => {
            out["tau"] = json!(tau);
            out["boundary"] = json!(format!("{boundary:?}").to_lowercase());
            if let Ok(tr) = build_trellis(seed, *tau) {
                out["trellis_states"] = json!(tr.max_states());
                out["trellis_state_counts"] = json!(tr.state_counts());
            }
        }
        BuiltCode::Turbo(t) => {
            out["interleaver"] = json!(t.interleaver.kind);
            out["inner_checks"] = json!(t.inner_x_rows());
        }
        BuiltCode::Bicycle { code: b, .. } => {
            out["m"] = json!(b.m);
            out["w"] = json!(b.w);
            out["removed_rows"] = json!(b.removed_rows);
        }
        BuiltCode::Block { .. } => {}
    }
    Ok(out)
}

pub fn cmd_decode(args: &DecodeArgs) -> Result<Value, CliError> {
    let code = load_code(&args.code)?;
    let width = width_of(&code);
    if args.layers == 0 {
        let BuiltCode::Conv {
            seed,
            code: css,
            tau,
            boundary,
            ..
        } = &code
        else {
            return Err(CliError::Input("trellis decoding needs a convolutional code".into()));
        };
        if *boundary != Boundary::Terminated {
            return Err(CliError::Input("trellis decoding needs --boundary terminated".into()));
        }
        let err = args.error.as_deref().map(bits).transpose()?;
        let s = match (&err, &args.syndrome) {
            (Some(e), _) => {
                code_syndrome(css, e).map_err(|x| CliError::Input(x.to_string()))?
            }
            (None, Some(s)) => bits(s)?,
            (None, None) => return Err(CliError::Input("one of --error or --syndrome".into())),
        };
        if s.len() != css.sx.rows() {
            return Err(CliError::Input(format!(
                "syndrome has {} bits, expected {}",
                s.len(),
                css.sx.rows()
            )));
        }
        let isf = expand_aligned_isf_with(seed, *tau, *boundary);
        let e0 = pure_error(css, &s, &isf).map_err(|x| CliError::Run(x.to_string()))?;
        let tr = build_trellis(seed, *tau).map_err(|x| CliError::Run(x.to_string()))?;
        let mp = min_weight_path(&tr, &e0, None);
        let emin = mp.p_min.xor(&e0);
        let mut out = json!({
            "code": code.name(),
            "mode": "trellis",
            "syndrome": s.to_string(),
            "e0": frames(&e0, width),
            "path": frames(&mp.p_min, width),
            "correction": frames(&emin, width),
            "correction_weight": emin.weight(),
        });
        if let Some(e) = err {
            let res = emin.xor(&e);
            let (fail, w) = is_logical_failure(css, &res);
            out["error"] = json!(frames(&e, width));
            out["residual"] = json!(frames(&res, width));
            out["logical_failure"] = json!(fail);
            out["logical_flips"] = json!(w);
        }
        return Ok(out);
    }
    let dec = make_decoder(&code, args.layers)?;
    let fc = foliate(code.css(), args.layers);
    let err = args.error.as_deref().map(bits).transpose()?;
    if let Some(e) = &err {
        if e.len() != fc.n_qubits {
            return Err(CliError::Input(format!(
                "error has {} bits, expected {}",
                e.len(),
                fc.n_qubits
            )));
        }
    }
    let s = match (&err, &args.syndrome) {
        (Some(e), _) => extract_syndrome(&fc, e).map_err(|x| CliError::Input(x.to_string()))?,
        (None, Some(s)) => bits(s)?,
        (None, None) => return Err(CliError::Input("one of --error or --syndrome".into())),
    };
    if s.len() != fc.n_checks() {
        return Err(CliError::Input(format!(
            "syndrome has {} bits, expected {}",
            s.len(),
            fc.n_checks()
        )));
    }
    let priors = vec![args.p; fc.n_qubits];
    let (corr, diag): (BitVector, Value) = match &code {
        BuiltCode::Conv { seed, tau, .. } => {
            let d = FoliatedDecoder::new(&fc, &Layout::framed(seed.n(), *tau), DecoderConfig::default())
                .map_err(|e| CliError::Run(e.to_string()))?;
            let (c, g) = d.decode(&s, &priors).map_err(|e| CliError::Run(e.to_string()))?;
            (c, json!(g))
        }
        BuiltCode::Turbo(t) => {
            let d = TurboDecoder::new(t, args.layers, TurboConfig::default()).map_err(|e| CliError::Run(e.to_string()))?;
            let (c, g) = d.decode(&s, &priors).map_err(|e| CliError::Run(e.to_string()))?;
            (c, json!(g))
        }
        BuiltCode::Block { code: c, .. } => {
            let (c, g) = BpDecoder::new(c, args.layers, BpConfig::default()).decode(&s, &priors);
            (c, json!(g))
        }
        BuiltCode::Bicycle { code: b, .. } => {
            let (c, g) = BpDecoder::new(&b.code, args.layers, BpConfig::default()).decode(&s, &priors);
            (c, json!(g))
        }
    };
    drop(dec);
    let e0 = solve(&fc.parity_checks(), &s).ok();
    let mut out = json!({
        "code": code.name(),
        "mode": "foliated",
        "layers": args.layers,
        "n_qubits": fc.n_qubits,
        "syndrome": s.to_string(),
        "e0": e0.map(|v| v.to_string()),
        "correction": corr.to_string(),
        "correction_weight": corr.weight(),
        "diagnostics": diag,
    });
    if let Some(e) = err {
        let res = corr.xor(&e);
        let flips = foliated_logical_flips(&fc, &res);
        out["error"] = json!(e.to_string());
        out["residual"] = json!(res.to_string());
        out["logical_failure"] = json!(flips.iter().any(|&b| b));
        out["logical_flips"] = json!(flips.iter().filter(|&&b| b).count());
    }
    Ok(out)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Value, CliError> {
    if args.p_grid.is_empty() || args.layers.is_empty() {
        return Err(CliError::Input("empty grid".into()));
    }
    if args.p_grid.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(CliError::Input("p outside [0, 1]".into()));
    }
    let sizes: Vec<Option<usize>> = if args.tau.is_empty() {
        vec![None]
    } else {
        args.tau.iter().map(|&t| Some(t)).collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Run(e.to_string()))?;
    let mut results = Vec::new();
    for size in sizes {
        let ca = CodeArgs {
            code: args.code.clone(),
            spec: args.spec.clone(),
            tau: size,
            k: None,
            boundary: None,
        };
        let code = load_code(&ca)?;
        for &l in &args.layers {
            let dec = make_decoder(&code, l)?;
            let cfg = SweepConfig {
                batch: BatchConfig {
                    trials: args.trials,
                    exhaustive_limit: args.exhaustive_limit,
                    seed: args.seed,
                    parallel: args.workers != Some(1),
                    ..Default::default()
                },
                p_grid: args.p_grid.clone(),
                j_max: args.j_max,
                focus: (args.focus_trials > 0).then_some((args.focus_p, args.focus_trials)),
                ..Default::default()
            };
            let r = pool
                .install(|| run_sweep(dec.as_ref(), code.name(), l, &cfg))
                .map_err(|e| CliError::Run(e.to_string()))?;
            for w in &r.warnings {
                eprintln!("warning: {} L={l} k={}: {w}", r.code, r.k);
            }
            results.push(r);
        }
    }
    fs::create_dir_all(&args.out)?;
    let curve = args.out.join("curve.csv");
    let batches = args.out.join("batches.csv");
    write_curve_csv(fs::File::create(&curve)?, &results).map_err(|e| CliError::Run(e.to_string()))?;
    write_batch_csv(fs::File::create(&batches)?, &results).map_err(|e| CliError::Run(e.to_string()))?;
    Ok(json!({
        "curve": curve.display().to_string(),
        "batches": batches.display().to_string(),
        "runs": results.len(),
    }))
}

/// Report and verdict of a schedule check.
pub fn cmd_schedule_check(args: &ScheduleArgs) -> Result<(Value, bool), CliError> {
    let (mut sched, inst) = match (&args.name, &args.file) {
        (Some(n), _) => {
            let (s, i) = builtin_schedule(n, args.tau).map_err(|e| CliError::Input(e.to_string()))?;
            (s, Some(i))
        }
        (None, Some(p)) => {
            let text = fs::read_to_string(p)?;
            let layout = FrameLayout {
                ancillas: args.ancillas,
                width: args.width,
            };
            (parse_schedule(&text, layout).map_err(|e| CliError::Input(e.to_string()))?, None)
        }
        (None, None) => return Err(CliError::Input("one of --name or --file".into())),
    };
    let mut refined = None;
    let dec = inst.as_ref().map(|i| i.decoder()).transpose().map_err(|e| CliError::Run(e.to_string()))?;
    if args.refine {
        if let Some(d) = &dec {
            refined = Some(match refine_schedule(&sched, d.as_ref(), args.p, args.max_evals) {
                Some(r) => {
                    sched = r;
                    true
                }
                None => false,
            });
        }
    }
    let rep = validate(&sched);
    let faults = all_faults(&sched);
    let bound_ok = faults.iter().all(|f| f.weight() <= f.bound());
    let max_reduced = faults.iter().map(|f| f.weight()).max().unwrap_or(0);
    let mut out = json!({
        "name": sched.name,
        "steps": sched.horizon,
        "max_stabiliser_weight": sched.max_weight(),
        "valid": rep.is_valid(),
        "collisions": rep.collisions,
        "uncovered": rep.uncovered,
        "faults": faults.len(),
        "max_reduced_weight": max_reduced,
        "weight_bound_holds": bound_ok,
    });
    let mut pass = rep.is_valid() && bound_ok;
    if let Some(r) = refined {
        out["refined"] = json!(r);
    }
    if let Some(d) = dec {
        let fr = check_all_single_faults(&sched, d.as_ref(), args.p);
        out["distinct_patterns"] = json!(fr.distinct_patterns);
        out["fault_failures"] = json!(fr.failures.len());
        out["failing_faults"] = json!(fr.failures);
        pass &= fr.passed();
    }
    if let Some(path) = &args.out {
        fs::write(path, sched.to_text())?;
    }
    out["pass"] = json!(pass);
    Ok((out, pass))
}

fn emit(v: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("json");
    match out {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let res = match &cli.command {
        Command::Build(a) => cmd_build(a).and_then(|v| emit(&v, None)).map(|_| true),
        Command::Decode(a) => cmd_decode(a).and_then(|v| emit(&v, a.out.as_deref())).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).and_then(|v| emit(&v, None)).map(|_| true),
        Command::ScheduleCheck(a) => cmd_schedule_check(a).and_then(|(v, pass)| emit(&v, None).map(|_| pass)),
    };
    match res {
        Ok(true) => 0,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
