//! `key = value` sweep files.
//!
//! ```text
//! # desk grid
//! omega = 0.01 : 0.04 : 20     # lo : hi : points
//! E = 0.40 : 0.55 @ 0.005      # lo : hi @ step
//! metrics = spike_count, l2, est_count, region
//! workers = 4
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use fhnburst::sweep::{AxisRange, Metric};

const KEYS: [&str; 13] = [
    "omega", "E", "metrics", "workers", "checkpoint_every", "f_burst", "out", "checkpoint", "a",
    "b", "eps", "rel_tol", "abs_tol",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct SweepFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl SweepFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(format!("line {}: unknown key {k:?}", n + 1));
            }
            if entries.insert(k.to_string(), (n + 1, v.trim().to_string())).is_some() {
                return Err(format!("line {}: duplicate key {k:?}", n + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("line {line}: {key}: {e}")),
        }
    }

    pub fn axis(&self, key: &str) -> Result<Option<AxisRange>, String> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => parse_axis(v).map(Some).map_err(|e| format!("line {line}: {key}: {e}")),
        }
    }

    pub fn metrics(&self) -> Result<Option<Vec<Metric>>, String> {
        self.raw("metrics").map(parse_metrics).transpose()
    }
}

/// `lo:hi:n` (point count) or `lo:hi@step`.
pub fn parse_axis(s: &str) -> Result<AxisRange, String> {
    let num = |t: &str| -> Result<f64, String> {
        t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))
    };
    if let Some((range, step)) = s.split_once('@') {
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| format!("expected lo:hi@step, got {s:?}"))?;
        return Ok(AxisRange::new(num(lo)?, num(hi)?, num(step)?));
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, n] => {
            let n: usize = n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?;
            if n == 0 {
                return Err("point count must be positive".into());
            }
            Ok(AxisRange::linspace(num(lo)?, num(hi)?, n))
        }
        [v] => {
            let v = num(v)?;
            Ok(AxisRange::linspace(v, v, 1))
        }
        _ => Err(format!("expected lo:hi:n or lo:hi@step, got {s:?}")),
    }
}

pub fn parse_metrics(s: &str) -> Result<Vec<Metric>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(Metric::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_axes_and_comments() {
        let f = SweepFile::parse(
            "# grid\nomega = 0.01 : 0.04 : 4\nE = 0.4:0.5@0.05  # step form\nworkers = 3\n",
        )
        .unwrap();
        let w = f.axis("omega").unwrap().unwrap();
        assert_eq!(w.values().len(), 4);
        assert_eq!(f.axis("E").unwrap().unwrap().values().len(), 3);
        assert_eq!(f.get::<usize>("workers").unwrap(), Some(3));
        assert_eq!(f.get::<usize>("f_burst").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(SweepFile::parse("omgea = 1").unwrap_err().contains("unknown key"));
        assert!(SweepFile::parse("workers = 1\nworkers = 2").unwrap_err().contains("duplicate"));
        assert!(SweepFile::parse("workers 1").is_err());
    }

    #[test]
    fn reports_line_of_bad_value() {
        let f = SweepFile::parse("\nworkers = many").unwrap();
        assert!(f.get::<usize>("workers").unwrap_err().starts_with("line 2"));
        assert!(parse_axis("1:2:x").is_err());
        assert!(parse_axis("1:2:0").is_err());
        assert_eq!(parse_metrics("l2, region").unwrap(), vec![Metric::L2, Metric::Region]);
        assert!(parse_metrics("l3").is_err());
    }
}
