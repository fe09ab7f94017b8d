//! Atomic file writes with provenance headers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{Override, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<Override>,
}

impl Provenance {
    pub fn of(cfg: &RunConfig) -> Self {
        Self {
            tool: "dlalab".into(),
            version: VERSION.into(),
            subcommand: cfg.subcommand.clone(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            overrides: cfg.overrides.clone(),
        }
    }

    /// Single `#` comment line for CSV and text files.
    pub fn comment_line(&self) -> String {
        format!(
            "# dlalab {} subcommand={} config_hash={} seed={}\n",
            self.version,
            self.subcommand.replace(' ', "-"),
            self.config_hash,
            self.seed
        )
    }
}

/// Writes `bytes` to a sibling temp file, syncs it, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

/// JSON object with a leading `provenance` field next to `fields`.
pub fn json_document(prov: &Provenance, fields: Vec<(&str, Value)>) -> String {
    let mut m = Map::new();
    m.insert("provenance".into(), serde_json::to_value(prov).expect("provenance serializes"));
    for (k, v) in fields {
        m.insert(k.into(), v);
    }
    serde_json::to_string_pretty(&Value::Object(m)).expect("document serializes") + "\n"
}

pub fn write_json(path: &Path, prov: &Provenance, fields: Vec<(&str, Value)>) -> anyhow::Result<()> {
    write_atomic(path, json_document(prov, fields).as_bytes())
}

/// CSV with the provenance comment as its first line.
pub fn csv_document(prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut out = prov.comment_line().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(out)
}

pub fn write_csv(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    write_atomic(path, &csv_document(prov, header, rows)?)
}

/// Reads CSV written by [`write_csv`], skipping `#` lines.
pub fn read_csv(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            tool: "dlalab".into(),
            version: VERSION.into(),
            subcommand: "bound curve".into(),
            config_hash: "ab".into(),
            seed: 3,
            overrides: vec![],
        }
    }

    #[test]
    fn csv_round_trip_skips_comment() {
        let dir = std::env::temp_dir().join(format!("dlalab-out-test-{}", std::process::id()));
        let path = dir.join("t.csv");
        let rows = vec![vec!["1".to_string(), "".to_string()], vec!["2".into(), "x,y".into()]];
        write_csv(&path, &prov(), &["a", "b"], &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# dlalab "));
        assert!(text.contains("subcommand=bound-curve"));
        let (h, back) = read_csv(&path).unwrap();
        assert_eq!(h, vec!["a", "b"]);
        assert_eq!(back, rows);
        let leftovers: Vec<_> = fs::read_dir(&dir)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp-"))
            .collect();
        assert!(leftovers.is_empty());
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn json_document_starts_with_provenance() {
        let doc = json_document(&prov(), vec![("value", Value::from(1.5))]);
        let v: Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["provenance"]["seed"], 3);
        assert_eq!(v["value"], 1.5);
    }
}
