//! Flat namespaced run configuration.
//!
//! Every setting has a key such as `train.epochs`. Values come from the
//! registry defaults, then an optional JSON config file, then command-line
//! flags. Flags win; each file value a flag replaces is logged in
//! [`RunConfig::overrides`].

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DLALAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "dlalab-out";

pub const SUBCOMMANDS: [&str; 8] = [
    "dla",
    "bound eval",
    "bound budget",
    "bound curve",
    "data gen",
    "train",
    "sweep",
    "report",
];

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    UInt { min: u64, max: u64 },
    /// Interval with independently open or closed ends.
    Float { min: f64, max: f64, min_open: bool, max_open: bool },
    Choice(&'static [&'static str]),
    Bool,
    UIntList { min: u64, max: u64 },
    ChoiceList(&'static [&'static str]),
    /// File or directory; excluded from the config hash.
    Path,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const BOUNDARIES: &[&str] = &["open", "closed"];
const ALGOS: &[&str] = &["sps", "ran"];
const MODELS: &[&str] = &["tfim"];
const INF: f64 = f64::INFINITY;

const fn uint(min: u64, max: u64) -> Kind {
    Kind::UInt { min, max }
}
const fn closed(min: f64, max: f64) -> Kind {
    Kind::Float { min, max, min_open: false, max_open: false }
}
const fn positive() -> Kind {
    Kind::Float { min: 0.0, max: INF, min_open: true, max_open: true }
}
const fn open(min: f64, max: f64) -> Kind {
    Kind::Float { min, max, min_open: true, max_open: true }
}

const fn entry(key: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec { key, kind, default, help }
}

pub static KEYS: &[KeySpec] = &[
    entry("seed", uint(0, u64::MAX), Some("0"), "master seed"),
    entry("out_dir", Kind::Path, None, "output directory"),
    entry("dla.model", Kind::Choice(MODELS), Some("tfim"), "built-in generator family"),
    entry("dla.n", uint(1, 64), None, "qubit count for the built-in model"),
    entry("dla.boundary", Kind::Choice(BOUNDARIES), Some("open"), "boundary condition"),
    entry("dla.generators", Kind::Path, None, "generator file in Pauli text format"),
    entry("dla.max_dim", uint(1, u64::MAX), None, "cap on the closure dimension"),
    entry("dla.basis_out", Kind::Path, None, "write the basis here"),
    entry("bounds.m", uint(1, u64::MAX), Some("10"), "training set size"),
    entry("bounds.nt", uint(1, u64::MAX), Some("20"), "trainable parameters"),
    entry("bounds.dim_g", uint(1, u64::MAX), Some("16"), "Lie algebra dimension"),
    entry("bounds.n_qubits", uint(1, 60), Some("4"), "qubit count"),
    entry("bounds.o_norm", closed(0.0, INF), Some("1"), "observable norm"),
    entry("bounds.c", positive(), Some("1"), "loss-range constant"),
    entry("bounds.delta", open(0.0, 1.0), Some("0.05"), "failure probability"),
    entry("bounds.radius", positive(), Some("3.141592653589793"), "parameter radius"),
    entry("bounds.p", open(0.0, LN_2), None, "spectral scale p"),
    entry("bounds.eps", positive(), None, "approximation error"),
    entry("bounds.p_min", open(0.0, LN_2), Some("0.1"), "curve start"),
    entry("bounds.p_max", open(0.0, LN_2), Some("0.69"), "curve end"),
    entry("bounds.p_step", open(0.0, 1.0), Some("0.001"), "curve step"),
    entry("bounds.json", Kind::Bool, Some("false"), "print JSON instead of text"),
    entry("bounds.out", Kind::Path, None, "curve CSV path"),
    entry("data.n", uint(1, 10), None, "qubit count"),
    entry("data.m_train", uint(1, 1_000_000), Some("10"), "training samples"),
    entry("data.m_test", uint(1, 1_000_000), Some("100"), "test samples"),
    entry("data.out", Kind::Path, None, "dataset JSON path"),
    entry("train.model", Kind::Choice(MODELS), Some("tfim"), "ansatz family"),
    entry("train.n", uint(2, 10), None, "qubit count"),
    entry("train.boundary", Kind::Choice(BOUNDARIES), Some("open"), "boundary condition"),
    entry("train.algo", Kind::Choice(ALGOS), Some("sps"), "optimizer"),
    entry("train.epochs", uint(0, 1_000_000), Some("200"), "iterations"),
    entry("train.layers", uint(1, 1000), Some("2"), "ansatz layers"),
    entry("train.reps", uint(1, 1000), Some("10"), "repetitions per layer"),
    entry("train.init_low", closed(-1e3, 1e3), Some("-0.01"), "init range start"),
    entry("train.init_high", closed(-1e3, 1e3), Some("0.01"), "init range end"),
    entry("train.a0", positive(), Some("0.1"), "SPSA step gain"),
    entry("train.c0", positive(), Some("0.1"), "SPSA perturbation gain"),
    entry("train.big_a", closed(0.0, INF), Some("20"), "SPSA stability constant"),
    entry("train.alpha_gain", positive(), Some("0.602"), "SPSA step decay"),
    entry("train.gamma_gain", positive(), Some("0.101"), "SPSA perturbation decay"),
    entry("train.ran_step", positive(), Some("0.1"), "random search step"),
    entry("train.theta_clip", Kind::Bool, Some("false"), "clip |θ| to ln 2 / ‖H‖"),
    entry("train.data", Kind::Path, None, "dataset JSON"),
    entry("train.out", Kind::Path, None, "result JSON path"),
    entry("sweep.n", Kind::UIntList { min: 2, max: 8 }, Some("2..6"), "qubit grid"),
    entry("sweep.boundaries", Kind::ChoiceList(BOUNDARIES), Some("open,closed"), "boundaries"),
    entry("sweep.algos", Kind::ChoiceList(ALGOS), Some("sps,ran"), "algorithms"),
    entry("sweep.datasets", uint(1, 10_000), Some("20"), "datasets per condition"),
    entry("sweep.welch", Kind::Bool, Some("false"), "Welch instead of Student t-tests"),
    entry("sweep.allow_large", Kind::Bool, Some("false"), "permit n = 7 and 8"),
];

pub fn key_spec(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == key)
}

/// Key namespaces each subcommand reads.
fn namespaces(sub: &str) -> &'static [&'static str] {
    match sub {
        "dla" => &["dla"],
        "bound eval" | "bound budget" | "bound curve" => &["bounds"],
        "data gen" => &["data"],
        "train" => &["train", "data"],
        "sweep" => &["sweep", "train", "data"],
        _ => &[],
    }
}

fn relevant(sub: &str, key: &str) -> bool {
    let Some((ns, rest)) = key.split_once('.') else {
        return true;
    };
    if !namespaces(sub).contains(&ns) {
        return false;
    }
    match (sub, ns) {
        // Training reuses only the dataset sizes.
        ("train" | "sweep", "data") => rest.starts_with("m_"),
        // A sweep sets the condition grid and file layout itself.
        ("sweep", "train") => !matches!(rest, "n" | "boundary" | "algo" | "data" | "out"),
        _ => true,
    }
}

/// Where a value came from.
#[derive(Debug, Clone)]
pub enum Raw {
    Flag(String),
    Switch,
    File(Value),
}

fn fmt_float(x: f64) -> Option<Value> {
    Number::from_f64(x).map(Value::Number)
}

fn check_float(key: &str, x: f64, kind: Kind) -> Result<Value, String> {
    let Kind::Float { min, max, min_open, max_open } = kind else { unreachable!() };
    let low_ok = if min_open { x > min } else { x >= min };
    let high_ok = if max_open { x < max } else { x <= max };
    if !x.is_finite() || !low_ok || !high_ok {
        let (l, r) = (if min_open { '(' } else { '[' }, if max_open { ')' } else { ']' });
        let shown_max = if max == LN_2 { "ln 2".to_string() } else { max.to_string() };
        return Err(format!("{key} = {x} is outside {l}{min}, {shown_max}{r}"));
    }
    fmt_float(x).ok_or_else(|| format!("{key}: non-finite value"))
}

fn check_uint(key: &str, v: u64, min: u64, max: u64) -> Result<u64, String> {
    if v < min || v > max {
        Err(format!("{key} = {v} is outside [{min}, {max}]"))
    } else {
        Ok(v)
    }
}

fn parse_uint_list(key: &str, s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("{key}: expected a list like 2..6 or 2,3,4, got {s:?}");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Converts one raw value into its canonical JSON form, checking type and domain.
pub fn normalize(spec: &KeySpec, raw: &Raw) -> Result<Value, String> {
    let key = spec.key;
    let mismatch = |want: &str, got: &str| format!("{key}: expected {want}, got {got}");
    match (spec.kind, raw) {
        (Kind::Bool, Raw::Switch) => Ok(Value::Bool(true)),
        (_, Raw::Switch) => Err(format!("{key} takes a value")),
        (Kind::Bool, Raw::Flag(s)) => s.parse::<bool>().map(Value::Bool).map_err(|_| mismatch("boolean", s)),
        (Kind::Bool, Raw::File(v)) => v.as_bool().map(Value::Bool).ok_or_else(|| mismatch("boolean", json_type(v))),
        (Kind::UInt { min, max }, r) => {
            let v = match r {
                Raw::Flag(s) => s.trim().parse::<u64>().map_err(|_| mismatch("non-negative integer", s))?,
                Raw::File(v) => v.as_u64().ok_or_else(|| mismatch("non-negative integer", &v.to_string()))?,
                Raw::Switch => unreachable!(),
            };
            check_uint(key, v, min, max).map(Value::from)
        }
        (kind @ Kind::Float { .. }, r) => {
            let x = match r {
                Raw::Flag(s) => s.trim().parse::<f64>().map_err(|_| mismatch("number", s))?,
                Raw::File(v) => v.as_f64().ok_or_else(|| mismatch("number", json_type(v)))?,
                Raw::Switch => unreachable!(),
            };
            check_float(key, x, kind)
        }
        (Kind::Choice(opts), r) => {
            let s = match r {
                Raw::Flag(s) => s.clone(),
                Raw::File(v) => v.as_str().ok_or_else(|| mismatch("string", json_type(v)))?.to_string(),
                Raw::Switch => unreachable!(),
            };
            let s = s.trim().to_ascii_lowercase();
            let s = if s == "spsa" { "sps".to_string() } else { s };
            if opts.contains(&s.as_str()) {
                Ok(Value::String(s))
            } else {
                Err(format!("{key}: {s:?} is not one of {}", opts.join(", ")))
            }
        }
        (Kind::Path, Raw::Flag(s)) => Ok(Value::String(s.clone())),
        (Kind::Path, Raw::File(v)) => v
            .as_str()
            .map(|s| Value::String(s.to_string()))
            .ok_or_else(|| mismatch("path string", json_type(v))),
        (Kind::UIntList { min, max }, r) => {
            let items = match r {
                Raw::Flag(s) => parse_uint_list(key, s)?,
                Raw::File(Value::String(s)) => parse_uint_list(key, s)?,
                Raw::File(Value::Array(a)) => a
                    .iter()
                    .map(|v| v.as_u64().ok_or_else(|| mismatch("array of integers", &v.to_string())))
                    .collect::<Result<_, _>>()?,
                Raw::File(v) => return Err(mismatch("list", json_type(v))),
                Raw::Switch => unreachable!(),
            };
            if items.is_empty() {
                return Err(format!("{key}: list is empty"));
            }
            items
                .into_iter()
                .map(|v| check_uint(key, v, min, max).map(Value::from))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Array)
        }
        (Kind::ChoiceList(opts), r) => {
            let items: Vec<String> = match r {
                Raw::Flag(s) | Raw::File(Value::String(s)) => s.split(',').map(|t| t.trim().to_string()).collect(),
                Raw::File(Value::Array(a)) => a
                    .iter()
                    .map(|v| v.as_str().map(str::to_string).ok_or_else(|| mismatch("array of strings", json_type(v))))
                    .collect::<Result<_, _>>()?,
                Raw::File(v) => return Err(mismatch("list", json_type(v))),
                Raw::Switch => unreachable!(),
            };
            let mut out = Vec::new();
            for s in items {
                let s = s.to_ascii_lowercase();
                let s = if s == "spsa" { "sps".to_string() } else { s };
                if !opts.contains(&s.as_str()) {
                    return Err(format!("{key}: {s:?} is not one of {}", opts.join(", ")));
                }
                out.push(Value::String(s));
            }
            if out.is_empty() {
                return Err(format!("{key}: list is empty"));
            }
            Ok(Value::Array(out))
        }
    }
}

/// A config-file value replaced by a flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub key: String,
    pub file: Value,
    pub flag: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<Override>,
}

/// Reads a flat JSON object. Unknown keys are usage errors.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, Value)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!("config file {} must hold a JSON object", path.display())));
    };
    let unknown: Vec<String> = map.keys().filter(|k| key_spec(k).is_none()).cloned().collect();
    if !unknown.is_empty() {
        return Err(CliError::Usage(format!("unknown config keys: {}", unknown.join(", "))));
    }
    Ok(map.into_iter().collect())
}

fn default_out_dir() -> String {
    std::env::var(OUT_ENV)
        .ok()
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| DEFAULT_OUT_DIR.to_string())
}

/// Merges defaults, file values and flags, then validates everything.
///
/// All problems are collected into one [`CliError::Validation`].
pub fn parse_config(
    subcommand: &str,
    flags: Vec<(&'static str, Raw)>,
    file: Vec<(String, Value)>,
) -> Result<RunConfig, CliError> {
    if !SUBCOMMANDS.contains(&subcommand) {
        return Err(CliError::Usage(format!("unknown subcommand {subcommand:?}")));
    }
    let mut errors = Vec::new();
    let mut values: BTreeMap<String, Value> = BTreeMap::new();
    for spec in KEYS.iter().filter(|s| relevant(subcommand, s.key)) {
        if let Some(d) = spec.default {
            let v = normalize(spec, &Raw::Flag(d.to_string())).expect("registry defaults are valid");
            values.insert(spec.key.to_string(), v);
        }
    }
    values.insert("out_dir".into(), Value::String(default_out_dir()));

    let mut from_file = BTreeMap::new();
    for (key, raw) in file {
        let Some(spec) = key_spec(&key) else {
            errors.push(format!("unknown key {key}"));
            continue;
        };
        if !relevant(subcommand, &key) {
            continue;
        }
        match normalize(spec, &Raw::File(raw)) {
            Ok(v) => {
                from_file.insert(key.clone(), v.clone());
                values.insert(key, v);
            }
            Err(e) => {
                errors.push(e);
                // Keeps the key present so cross-checks do not report it twice.
                values.insert(key, Value::Null);
            }
        }
    }
    let mut overrides = Vec::new();
    for (key, raw) in flags {
        let spec = key_spec(key).expect("flags map to registered keys");
        match normalize(spec, &raw) {
            Ok(v) => {
                if let Some(old) = from_file.get(key) {
                    if *old != v {
                        overrides.push(Override {
                            key: key.to_string(),
                            file: old.clone(),
                            flag: v.clone(),
                        });
                    }
                }
                values.insert(key.to_string(), v);
            }
            Err(e) => {
                errors.push(e);
                values.insert(key.to_string(), Value::Null);
            }
        }
    }
    errors.extend(cross_checks(subcommand, &values));
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let seed = values.remove("seed").and_then(|v| v.as_u64()).unwrap_or(0);
    let out_dir = PathBuf::from(values.remove("out_dir").and_then(|v| v.as_str().map(str::to_string)).unwrap());
    Ok(RunConfig {
        subcommand: subcommand.to_string(),
        seed,
        out_dir,
        values,
        overrides,
    })
}

fn cross_checks(sub: &str, v: &BTreeMap<String, Value>) -> Vec<String> {
    let mut errs = Vec::new();
    let has = |k: &str| v.contains_key(k);
    let f = |k: &str| v.get(k).and_then(Value::as_f64);
    match sub {
        "dla" => {
            if has("dla.generators") == has("dla.n") {
                errs.push("dla needs exactly one of --n (built-in model) or --generators <file>".into());
            }
        }
        "bound budget" => {
            if has("bounds.p") == has("bounds.eps") {
                errs.push("bound budget needs exactly one of --p or --eps".into());
            }
        }
        "bound curve" => {
            if let (Some(a), Some(b)) = (f("bounds.p_min"), f("bounds.p_max")) {
                if a > b {
                    errs.push(format!("bounds.p_min = {a} exceeds bounds.p_max = {b}"));
                }
            }
        }
        "data gen" => {
            if !has("data.n") {
                errs.push("data gen needs --n".into());
            }
        }
        "train" | "sweep" => {
            if sub == "train" && !has("train.n") {
                errs.push("train needs --n".into());
            }
            if let (Some(a), Some(b)) = (f("train.init_low"), f("train.init_high")) {
                if a >= b {
                    errs.push(format!("train.init_low = {a} must be below train.init_high = {b}"));
                }
            }
            if sub == "sweep" && v.get("sweep.allow_large") != Some(&Value::Bool(true)) {
                if let Some(Value::Array(ns)) = v.get("sweep.n") {
                    if let Some(big) = ns.iter().filter_map(Value::as_u64).find(|&n| n > 6) {
                        errs.push(format!("sweep.n contains {big}; qubit counts above 6 need --allow-large"));
                    }
                }
            }
        }
        _ => {}
    }
    errs
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parses and re-validates a serialized config.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed run config: {e}")))?;
        if !SUBCOMMANDS.contains(&cfg.subcommand.as_str()) {
            return Err(CliError::Usage(format!("unknown subcommand {:?}", cfg.subcommand)));
        }
        let mut errors = Vec::new();
        for (k, v) in &cfg.values {
            match key_spec(k) {
                None => errors.push(format!("unknown key {k}")),
                Some(_) if matches!(k.as_str(), "seed" | "out_dir") => errors.push(format!("{k} is a top-level field")),
                Some(spec) => match normalize(spec, &Raw::File(v.clone())) {
                    Ok(n) if n == *v => {}
                    Ok(_) => errors.push(format!("{k}: value is not in canonical form")),
                    Err(e) => errors.push(e),
                },
            }
        }
        errors.extend(cross_checks(&cfg.subcommand, &cfg.values));
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Validation(errors))
        }
    }

    /// SHA-256 over the subcommand, seed and every non-path value.
    pub fn hash(&self) -> String {
        let mut m = Map::new();
        m.insert("subcommand".into(), Value::String(self.subcommand.clone()));
        m.insert("seed".into(), Value::from(self.seed));
        for (k, v) in &self.values {
            if !matches!(key_spec(k).map(|s| s.kind), Some(Kind::Path)) {
                m.insert(k.clone(), v.clone());
            }
        }
        let digest = Sha256::digest(Value::Object(m).to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value, CliError> {
        self.values
            .get(key)
            .ok_or_else(|| CliError::Validation(vec![format!("missing value for {key}")]))
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        Ok(self.get(key)?.as_u64().expect("validated integer"))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        usize::try_from(self.u64(key)?).map_err(|_| CliError::Domain(format!("{key} does not fit in usize")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        Ok(self.get(key)?.as_f64().expect("validated number"))
    }

    pub fn bool(&self, key: &str) -> bool {
        self.values.get(key).and_then(Value::as_bool).unwrap_or(false)
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        Ok(self.get(key)?.as_str().expect("validated string"))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).and_then(Value::as_str).map(PathBuf::from)
    }

    pub fn list(&self, key: &str) -> Result<Vec<Value>, CliError> {
        Ok(self.get(key)?.as_array().expect("validated list").clone())
    }
}
