//! Code-spec files: `key = value` lines, `#` comments, list values in JSON
//! array syntax.
//!
//! ```text
//! kind = conv
//! name = C3
//! G = [[1],[1],[0]]
//! H = [[0,1,2],[0,2],[0]]
//! tau = 8
//! boundary = cyclic
//! ```
//!
//! Delay-matrix entries are exponent lists; a single row may be written
//! without the outer brackets. Negative exponents `-q` denote `D̃^q`.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use crate::bicycle::{bicycle_with_rate, build_bicycle, random_seed_row, BicycleCode};
use crate::code::{conv_code_with, CssCode};
use crate::delay::{verify_orthogonality, Boundary, DelayMatrix, DelayPoly, SeedSet, MAX_DEGREE};
use crate::foliated::dual_logicals;
use crate::gf2::{BitMatrix, BitVector};
use crate::turbo::{build_turbo, InterleaverKind, TurboCode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("field {field}: {msg}")]
    Field { field: String, msg: String },
    #[error("missing field {0}")]
    Missing(String),
    #[error("unknown builtin {0}")]
    UnknownBuiltin(String),
    #[error("{0}")]
    Build(String),
}

fn field(f: &str, msg: impl Into<String>) -> SpecError {
    SpecError::Field {
        field: f.to_string(),
        msg: msg.into(),
    }
}

/// Raw key/value pairs with the line each was defined on. Keys are case sensitive.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecMap {
    pub entries: BTreeMap<String, (usize, Value)>,
}

fn parse_value(raw: &str) -> Value {
    let t = raw.trim();
    if t.starts_with('[') {
        if let Ok(v) = serde_json::from_str::<Value>(t) {
            return v;
        }
    }
    if let Ok(n) = t.parse::<i64>() {
        return Value::from(n);
    }
    Value::String(t.trim_matches('"').to_string())
}

pub fn parse_map(text: &str) -> Result<SpecMap, SpecError> {
    let mut map = SpecMap::default();
    let mut pending: Option<(usize, String, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        // Continuation of a multi-line list.
        if let Some((ln, key, mut acc)) = pending.take() {
            acc.push_str(line);
            if depth(&acc) > 0 {
                pending = Some((ln, key, acc));
            } else {
                insert(&mut map, ln, key, &acc)?;
            }
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| SpecError::Syntax {
            line: i + 1,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let key = k.trim().to_string();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(SpecError::Syntax {
                line: i + 1,
                msg: format!("bad key {key:?}"),
            });
        }
        let v = v.trim().to_string();
        if depth(&v) > 0 {
            pending = Some((i + 1, key, v));
        } else {
            insert(&mut map, i + 1, key, &v)?;
        }
    }
    if let Some((ln, key, _)) = pending {
        return Err(SpecError::Syntax {
            line: ln,
            msg: format!("unterminated list for {key}"),
        });
    }
    Ok(map)
}

fn depth(s: &str) -> i64 {
    s.chars()
        .map(|c| match c {
            '[' => 1,
            ']' => -1,
            _ => 0,
        })
        .sum()
}

fn insert(map: &mut SpecMap, line: usize, key: String, v: &str) -> Result<(), SpecError> {
    if depth(v) != 0 {
        return Err(SpecError::Syntax {
            line,
            msg: format!("unbalanced brackets in {key}"),
        });
    }
    let value = parse_value(v);
    if v.trim_start().starts_with('[') && !value.is_array() {
        return Err(SpecError::Syntax {
            line,
            msg: format!("malformed list for {key}"),
        });
    }
    if map.entries.insert(key.clone(), (line, value)).is_some() {
        return Err(SpecError::Syntax {
            line,
            msg: format!("duplicate key {key}"),
        });
    }
    Ok(())
}

impl SpecMap {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|(_, v)| v)
    }

    pub fn str(&self, key: &str) -> Result<Option<String>, SpecError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(_) => Err(field(key, "expected a word")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, SpecError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .and_then(|x| usize::try_from(x).ok())
                .map(Some)
                .ok_or_else(|| field(key, "expected a non-negative integer")),
            Some(_) => Err(field(key, "expected an integer")),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, SpecError> {
        Ok(self.usize(key)?.map(|x| x as u64))
    }

    pub fn index_list(&self, key: &str) -> Result<Option<Vec<usize>>, SpecError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => int_list(v)
                .and_then(|l| {
                    l.into_iter()
                        .map(|x| usize::try_from(x).map_err(|_| "negative index".to_string()))
                        .collect()
                })
                .map(Some)
                .map_err(|m| field(key, m)),
        }
    }

    pub fn supports(&self, key: &str) -> Result<Option<Vec<Vec<usize>>>, SpecError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(rows)) => rows
                .iter()
                .map(|r| {
                    int_list(r).and_then(|l| {
                        l.into_iter()
                            .map(|x| usize::try_from(x).map_err(|_| "negative index".to_string()))
                            .collect()
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|m| field(key, m)),
            Some(_) => Err(field(key, "expected a list of supports")),
        }
    }

    pub fn delay_matrix(&self, key: &str) -> Result<Option<DelayMatrix>, SpecError> {
        self.get(key)
            .map(|v| delay_matrix(v).map_err(|m| field(key, m)))
            .transpose()
    }
}

fn int_list(v: &Value) -> Result<Vec<i64>, String> {
    match v {
        Value::Array(xs) => xs
            .iter()
            .map(|x| x.as_i64().ok_or_else(|| format!("expected integer, got {x}")))
            .collect(),
        _ => Err(format!("expected a list, got {v}")),
    }
}

fn poly(v: &Value) -> Result<DelayPoly, String> {
    let mut p = DelayPoly::ZERO;
    for e in int_list(v)? {
        let q = e.unsigned_abs() as usize;
        if q > MAX_DEGREE {
            return Err(format!("exponent {e} exceeds {MAX_DEGREE}"));
        }
        let m = if e < 0 { DelayPoly::d_tilde(q) } else { DelayPoly::d(q) };
        p = p.add(&m);
    }
    Ok(p)
}

/// `[[e..],[e..]]` is one row; `[[[e..],..],[[e..],..]]` is several.
pub fn delay_matrix(v: &Value) -> Result<DelayMatrix, String> {
    let outer = v.as_array().ok_or("expected a list")?;
    let nested = outer
        .first()
        .and_then(|r| r.as_array())
        .and_then(|r| r.first())
        .is_some_and(|e| e.is_array());
    let rows: Vec<&Vec<Value>> = if nested {
        outer
            .iter()
            .map(|r| r.as_array().ok_or("expected a row list"))
            .collect::<Result<_, _>>()?
    } else {
        vec![outer]
    };
    let cols = rows.first().map_or(0, |r| r.len());
    if cols == 0 {
        return Err("empty matrix".into());
    }
    let mut entries = Vec::new();
    for r in rows {
        if r.len() != cols {
            return Err("ragged rows".into());
        }
        entries.push(r.iter().map(poly).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(DelayMatrix::from_rows(cols, entries))
}

fn boundary(s: &str) -> Result<Boundary, SpecError> {
    match s.to_ascii_lowercase().as_str() {
        "terminated" => Ok(Boundary::Terminated),
        "open" => Ok(Boundary::Open),
        "cyclic" | "tail-biting" | "tailbiting" => Ok(Boundary::Cyclic),
        other => Err(field("boundary", format!("unknown boundary {other:?}"))),
    }
}

fn interleaver(map: &SpecMap) -> Result<InterleaverKind, SpecError> {
    let seed = map.u64("interleaver_seed")?.unwrap_or(0);
    match map.str("interleaver")?.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("random") => Ok(InterleaverKind::Random { seed }),
        Some("transpose") => Ok(InterleaverKind::Transpose {
            width: map.usize("interleaver_width")?.unwrap_or(3),
        }),
        Some("identity") => Ok(InterleaverKind::Identity),
        Some(o) => Err(field("interleaver", format!("unknown interleaver {o:?}"))),
    }
}

/// Parsed code description.
#[derive(Clone, Debug)]
pub enum CodeSpec {
    Conv {
        name: String,
        seed: SeedSet,
        tau: Option<usize>,
        boundary: Boundary,
    },
    Block {
        name: String,
        code: CssCode,
    },
    Turbo {
        name: String,
        inner: String,
        outer: String,
        k: Option<usize>,
        interleaver: InterleaverKind,
    },
    Bicycle {
        name: String,
        m: Option<usize>,
        w: usize,
        seed: u64,
        seed_row: Option<Vec<usize>>,
        removed: Option<Vec<usize>>,
        k: Option<usize>,
        rate_den: usize,
    },
}

/// A constructed code.
#[derive(Clone, Debug)]
pub enum BuiltCode {
    Conv {
        name: String,
        seed: SeedSet,
        code: CssCode,
        tau: usize,
        boundary: Boundary,
    },
    Block {
        name: String,
        code: CssCode,
    },
    Turbo(Box<TurboCode>),
    Bicycle {
        name: String,
        code: Box<BicycleCode>,
    },
}

impl BuiltCode {
    pub fn name(&self) -> &str {
        match self {
            BuiltCode::Conv { name, .. } | BuiltCode::Block { name, .. } | BuiltCode::Bicycle { name, .. } => name,
            BuiltCode::Turbo(t) => &t.name,
        }
    }

    pub fn css(&self) -> &CssCode {
        match self {
            BuiltCode::Conv { code, .. } | BuiltCode::Block { code, .. } => code,
            BuiltCode::Turbo(t) => &t.code,
            BuiltCode::Bicycle { code, .. } => &code.code,
        }
    }
}

/// X-type logical representatives of a CSS code: `ker(sz)` modulo `rowspace(sx)`.
pub fn css_logicals(sx: &BitMatrix, sz: &BitMatrix) -> BitMatrix {
    let ker = sz.nullspace();
    let mut span = sx.clone();
    let mut rank = span.rank();
    let mut out = BitMatrix::zeros(0, sx.cols().max(sz.cols()));
    for v in ker.row_vecs() {
        let mut t = span.clone();
        t.push_row(v.clone());
        let r = t.rank();
        if r > rank {
            rank = r;
            span = t;
            out.push_row(v.clone());
        }
    }
    out
}

fn block_matrix(map: &SpecMap, key: &str, n: usize) -> Result<Option<BitMatrix>, SpecError> {
    let Some(rows) = map.supports(key)? else {
        return Ok(None);
    };
    let mut m = BitMatrix::zeros(0, n);
    for r in rows {
        if let Some(&q) = r.iter().find(|&&q| q >= n) {
            return Err(field(key, format!("qubit {q} outside n = {n}")));
        }
        m.push_row(BitVector::from_indices(n, &r));
    }
    Ok(Some(m))
}

pub fn parse_spec(text: &str) -> Result<CodeSpec, SpecError> {
    let map = parse_map(text)?;
    let kind = map
        .str("kind")?
        .ok_or_else(|| SpecError::Missing("kind".into()))?
        .to_ascii_lowercase();
    let name = map.str("name")?.unwrap_or_else(|| kind.clone());
    match kind.as_str() {
        "conv" => {
            let need = |k: &str| -> Result<DelayMatrix, SpecError> {
                map.delay_matrix(k)?.ok_or_else(|| SpecError::Missing(k.into()))
            };
            let g = need("G")?;
            let h = need("H")?;
            if g.cols() != h.cols() {
                return Err(field("H", "width differs from G"));
            }
            let isf = map.delay_matrix("isf")?;
            let mut seed = SeedSet::self_dual(g, h, isf).map_err(|e| field("isf", e.to_string()))?;
            seed.gauge = map.delay_matrix("J")?;
            seed.generator_x = map.delay_matrix("G_x")?;
            seed.parity_x = map.delay_matrix("H_x")?;
            seed.isf_x = map.delay_matrix("isf_x")?;
            seed.gauge_x = map.delay_matrix("J_x")?;
            let rep = verify_orthogonality(&seed);
            if !rep.pass() {
                return Err(SpecError::Build(format!("seed identities fail: {}", rep.failing().join(", "))));
            }
            Ok(CodeSpec::Conv {
                name,
                seed,
                tau: map.usize("tau")?,
                boundary: map.str("boundary")?.map_or(Ok(Boundary::Terminated), |b| boundary(&b))?,
            })
        }
        "block" => {
            let n = map.usize("n")?.ok_or_else(|| SpecError::Missing("n".into()))?;
            if n == 0 {
                return Err(field("n", "must be positive"));
            }
            let sx = block_matrix(&map, "sx", n)?.ok_or_else(|| SpecError::Missing("sx".into()))?;
            let sz = block_matrix(&map, "sz", n)?.unwrap_or_else(|| sx.clone());
            let lx = match block_matrix(&map, "lx", n)? {
                Some(l) => l,
                None => css_logicals(&sx, &sz),
            };
            let lz = match block_matrix(&map, "lz", n)? {
                Some(l) => l,
                None => dual_logicals(&lx, &css_logicals(&sz, &sx)),
            };
            let code = CssCode::new(sx, sz, lx, lz).map_err(|e| SpecError::Build(e.to_string()))?;
            Ok(CodeSpec::Block { name, code })
        }
        "turbo" => Ok(CodeSpec::Turbo {
            name,
            inner: map.str("inner")?.ok_or_else(|| SpecError::Missing("inner".into()))?,
            outer: map.str("outer")?.ok_or_else(|| SpecError::Missing("outer".into()))?,
            k: map.usize("k")?,
            interleaver: interleaver(&map)?,
        }),
        "bicycle" => Ok(CodeSpec::Bicycle {
            name,
            m: map.usize("m")?,
            w: map.usize("w")?.ok_or_else(|| SpecError::Missing("w".into()))?,
            seed: map.u64("seed")?.unwrap_or(0),
            seed_row: map.index_list("seed_row")?,
            removed: map.index_list("removed")?,
            k: map.usize("k")?,
            rate_den: map.usize("rate_den")?.unwrap_or(16),
        }),
        other => Err(field("kind", format!("unknown kind {other:?}"))),
    }
}

pub const C3_SPEC: &str = include_str!("../specs/c3.spec");
pub const C5_SPEC: &str = include_str!("../specs/c5.spec");
pub const T9_SPEC: &str = include_str!("../specs/t9.spec");
pub const T25_SPEC: &str = include_str!("../specs/t25.spec");
pub const STEANE_SPEC: &str = include_str!("../specs/steane.spec");
pub const BICYCLE_SPEC: &str = include_str!("../specs/bicycle.spec");

/// Shipped spec text for a builtin name.
pub fn builtin_spec(name: &str) -> Option<&'static str> {
    match name.to_ascii_uppercase().as_str() {
        "C3" => Some(C3_SPEC),
        "C5" => Some(C5_SPEC),
        "T9" => Some(T9_SPEC),
        "T25" => Some(T25_SPEC),
        "STEANE" => Some(STEANE_SPEC),
        "BICYCLE" => Some(BICYCLE_SPEC),
        _ => None,
    }
}

fn seed_named(name: &str) -> Result<SeedSet, SpecError> {
    match builtin_spec(name).map(parse_spec) {
        Some(Ok(CodeSpec::Conv { seed, .. })) => Ok(seed),
        Some(Err(e)) => Err(e),
        _ => Err(SpecError::UnknownBuiltin(name.to_string())),
    }
}

impl CodeSpec {
    pub fn name(&self) -> &str {
        match self {
            CodeSpec::Conv { name, .. }
            | CodeSpec::Block { name, .. }
            | CodeSpec::Turbo { name, .. }
            | CodeSpec::Bicycle { name, .. } => name,
        }
    }

    /// Builds the code; `size` overrides τ for convolutional codes and `k`
    /// for turbo and rate-targeted bicycle codes.
    pub fn build(&self, size: Option<usize>) -> Result<BuiltCode, SpecError> {
        let b = |e: String| SpecError::Build(e);
        match self {
            CodeSpec::Conv {
                name,
                seed,
                tau,
                boundary,
            } => {
                let tau = size.or(*tau).ok_or_else(|| SpecError::Missing("tau".into()))?;
                let code = conv_code_with(seed, tau, *boundary).map_err(|e| b(e.to_string()))?;
                Ok(BuiltCode::Conv {
                    name: name.clone(),
                    seed: seed.clone(),
                    code,
                    tau,
                    boundary: *boundary,
                })
            }
            CodeSpec::Block { name, code } => Ok(BuiltCode::Block {
                name: name.clone(),
                code: code.clone(),
            }),
            CodeSpec::Turbo {
                name,
                inner,
                outer,
                k,
                interleaver,
            } => {
                let k = size.or(*k).ok_or_else(|| SpecError::Missing("k".into()))?;
                let t = build_turbo(name, &seed_named(inner)?, &seed_named(outer)?, k, *interleaver)
                    .map_err(|e| b(e.to_string()))?;
                Ok(BuiltCode::Turbo(Box::new(t)))
            }
            CodeSpec::Bicycle {
                name,
                m,
                w,
                seed,
                seed_row,
                removed,
                k,
                rate_den,
            } => {
                let code = match (size.or(*k), m) {
                    (Some(k), _) if seed_row.is_none() => {
                        bicycle_with_rate(k, *rate_den, *w, *seed).map_err(|e| b(e.to_string()))?
                    }
                    (_, Some(m)) => {
                        let row = match seed_row {
                            Some(r) => {
                                if let Some(&q) = r.iter().find(|&&q| q >= *m) {
                                    return Err(field("seed_row", format!("index {q} outside m = {m}")));
                                }
                                BitVector::from_indices(*m, r)
                            }
                            None => {
                                use rand::SeedableRng;
                                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                                random_seed_row(*m, *w, &mut rng, 200)
                            }
                        };
                        build_bicycle(*m, &row, removed.as_deref().unwrap_or(&[])).map_err(|e| b(e.to_string()))?
                    }
                    _ => return Err(SpecError::Missing("m or k".into())),
                };
                Ok(BuiltCode::Bicycle {
                    name: name.clone(),
                    code: Box::new(code),
                })
            }
        }
    }
}

/// Code by builtin name, or `None` if the name is not a builtin.
pub fn builtin(name: &str, size: Option<usize>) -> Option<Result<BuiltCode, SpecError>> {
    builtin_spec(name).map(|t| parse_spec(t)?.build(size))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for n in ["C3", "C5", "T9", "T25", "Steane", "bicycle"] {
            let s = parse_spec(builtin_spec(n).unwrap()).unwrap();
            assert!(s.build(None).is_ok(), "{n}");
        }
    }

    #[test]
    fn single_row_and_nested_agree() {
        let a = delay_matrix(&serde_json::from_str("[[0,1,2],[0,2],[0]]").unwrap()).unwrap();
        let b = delay_matrix(&serde_json::from_str("[[[0,1,2],[0,2],[0]]]").unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_spec("kind = conv\nG = [[1],[1],[0]]\nH = [[0,1,2],[0,2]]\n").unwrap_err();
        assert!(matches!(e, SpecError::Field { ref field, .. } if field == "H"), "{e}");
        let e = parse_spec("kind = conv\nG [[1]]\n").unwrap_err();
        assert!(matches!(e, SpecError::Syntax { line: 2, .. }));
        let e = parse_spec("kind = block\nn = 3\nsx = [[0,5]]\n").unwrap_err();
        assert!(matches!(e, SpecError::Field { .. }));
    }
}
