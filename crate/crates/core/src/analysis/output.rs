//! Result files: `points.csv`, `summary.json` and `manifest.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fit::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_digest: String,
    /// Seconds since the epoch, from SOURCE_DATE_EPOCH (0 when unset).
    pub created: u64,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(seed: u64, config_digest: &str, inputs: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_digest: config_digest.to_string(),
            created: source_date_epoch(),
            inputs,
            outputs: Vec::new(),
        }
    }
}

pub fn source_date_epoch() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

/// `series,x,y,yerr,shots`, floats with 17 significant digits.
pub fn points_csv(series: &[(&str, &Dataset)]) -> String {
    let mut out = String::from("series,x,y,yerr,shots\n");
    for (name, ds) in series {
        for i in 0..ds.len() {
            let shots = ds.shots.get(i).copied().unwrap_or(0);
            let _ = writeln!(out, "{name},{:.16e},{:.16e},{:.16e},{shots}", ds.x[i], ds.y[i], ds.yerr[i]);
        }
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes the three result files into `dir` and returns their paths.
pub fn write_results<T: Serialize>(
    dir: &Path,
    series: &[(&str, &Dataset)],
    summary: &T,
    manifest: &RunManifest,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files = [("points.csv", points_csv(series)), ("summary.json", to_json(summary))];
    let mut paths = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        paths.push(p);
    }
    let mut m = manifest.clone();
    m.outputs = vec!["points.csv".into(), "summary.json".into(), "manifest.json".into()];
    let p = dir.join("manifest.json");
    std::fs::write(&p, to_json(&m))?;
    paths.push(p);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut d = Dataset::new(vec![1.0, 2.5], vec![0.5, 0.25], vec![0.1, 0.05]).unwrap();
        d.shots = vec![100, 100];
        let s = points_csv(&[("a", &d)]);
        assert_eq!(s.lines().next().unwrap(), "series,x,y,yerr,shots");
        assert_eq!(s.lines().nth(1).unwrap(), "a,1.0000000000000000e0,5.0000000000000000e-1,1.0000000000000001e-1,100");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn identical_inputs_give_identical_files() {
        let d = Dataset::new(vec![0.1, 0.2], vec![0.3, 0.4], vec![0.01, 0.01]).unwrap();
        let m = RunManifest::new(7, "abc", vec![]);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let summary = serde_json::json!({"slope": 1.5});
        write_results(a.path(), &[("s", &d)], &summary, &m).unwrap();
        write_results(b.path(), &[("s", &d)], &summary, &m).unwrap();
        for f in ["points.csv", "summary.json", "manifest.json"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }
}
