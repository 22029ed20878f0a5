//! Checked-in constants for the regression-guarded experiments.
//!
//! One entry per line: `suite q n alpha key value`, `#` starts a comment.
//! The file at [`default_path`] is used unless `TAIBLESON_BASELINES` names
//! another one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::FieldParams;

pub const ENV_VAR: &str = "TAIBLESON_BASELINES";

/// Multiplicative slack allowed over a checked-in constant.
pub const SLACK: f64 = 1.05;

pub fn default_path() -> PathBuf {
    match std::env::var_os(ENV_VAR) {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines.txt"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BaselineKey {
    pub suite: String,
    pub q: u32,
    pub n: u32,
    /// `alpha` as printed by `{}` on `f64`, so `1.0` reads `1`.
    pub alpha: String,
    pub key: String,
}

impl BaselineKey {
    pub fn new(suite: &str, params: &FieldParams, key: &str) -> Self {
        BaselineKey {
            suite: suite.to_string(),
            q: params.q(),
            n: params.n(),
            alpha: format!("{}", params.alpha()),
            key: key.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Baselines {
    entries: BTreeMap<BaselineKey, f64>,
}

impl Baselines {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("baselines line {}: `{line}`", lineno + 1));
            if parts.len() != 6 {
                return Err(bad());
            }
            let key = BaselineKey {
                suite: parts[0].to_string(),
                q: parts[1].parse().map_err(|_| bad())?,
                n: parts[2].parse().map_err(|_| bad())?,
                alpha: format!("{}", parts[3].parse::<f64>().map_err(|_| bad())?),
                key: parts[4].to_string(),
            };
            entries.insert(key, parts[5].parse().map_err(|_| bad())?);
        }
        Ok(Baselines { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(Error::Parse(format!("{}: {e}", path.display()))),
        }
    }

    pub fn load_default() -> Result<Self> {
        Self::load(&default_path())
    }

    pub fn get(&self, key: &BaselineKey) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn set(&mut self, key: BaselineKey, value: f64) {
        self.entries.insert(key, value);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# suite q n alpha key value\n");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{} {} {} {} {} {:e}", k.suite, k.q, k.n, k.alpha, k.key, v);
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let p = FieldParams::new(3, 1, 1.0).unwrap();
        let mut b = Baselines::default();
        b.set(BaselineKey::new("rbound", &p, "ratio"), 1.25);
        b.set(BaselineKey::new("kernel-bounds", &p, "l1_ratio"), 3.5e-1);
        let text = b.to_text();
        assert!(text.contains("rbound 3 1 1 ratio 1.25e0"));
        assert_eq!(Baselines::parse(&text).unwrap(), b);
        assert_eq!(Baselines::parse("rbound 3 1 1.0 ratio 2 # note").unwrap().get(&BaselineKey::new("rbound", &p, "ratio")), Some(2.0));
        assert!(Baselines::parse("rbound 3 1 ratio 2").is_err());
    }
}
