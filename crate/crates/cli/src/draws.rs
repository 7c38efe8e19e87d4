//! Columnar draws file (`chain,iter,<θ names>,lp`) and its metadata sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statvar::inference::Draws;

use crate::data::PreprocessMeta;
use crate::error::{CliError, CliResult};

pub const VERSION: &str = concat!("statvar-cli v", env!("CARGO_PKG_VERSION"));

/// One row per post-warmup draw; chains and iterations count from 1.
pub fn write_draws<W: Write>(draws: &Draws, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["chain".to_string(), "iter".to_string()];
    header.extend(draws.names.iter().cloned());
    header.push("lp".into());
    w.write_record(&header)?;
    for (c, chain) in draws.chains.iter().enumerate() {
        for (i, (theta, lp)) in chain.theta.iter().zip(&chain.log_density).enumerate() {
            let mut row = vec![(c + 1).to_string(), (i + 1).to_string()];
            row.extend(theta.iter().map(|v| v.to_string()));
            row.push(lp.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrawsTable {
    pub names: Vec<String>,
    pub chain: Vec<usize>,
    pub theta: Vec<Vec<f64>>,
    pub lp: Vec<f64>,
}

impl DrawsTable {
    pub fn parse(bytes: &[u8], path: &Path) -> CliResult<Self> {
        let mut reader = csv::Reader::from_reader(bytes);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::bad_csv(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let k = header.len();
        if k < 4 || header[0] != "chain" || header[1] != "iter" || header[k - 1] != "lp" {
            return Err(CliError::bad_csv(path, "draws header must read chain,iter,<coordinates>,lp"));
        }
        let names = header[2..k - 1].to_vec();
        let (mut chain, mut theta, mut lp) = (Vec::new(), Vec::new(), Vec::new());
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::bad_csv(path, e.to_string()))?;
            let bad = |what: &str| CliError::bad_csv(path, format!("line {}: bad {what}", i + 2));
            chain.push(record[0].parse::<usize>().map_err(|_| bad("chain"))?);
            record[1].parse::<usize>().map_err(|_| bad("iter"))?;
            let values = record
                .iter()
                .skip(2)
                .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("value {s:?}"))))
                .collect::<CliResult<Vec<f64>>>()?;
            lp.push(values[k - 3]);
            theta.push(values[..k - 3].to_vec());
        }
        if theta.is_empty() {
            return Err(CliError::bad_csv(path, "no draws"));
        }
        Ok(Self { names, chain, theta, lp })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&bytes, path)
    }
}

/// Provenance written next to a draws file.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct DrawsMeta {
    pub version: String,
    pub config_sha256: String,
    pub data_sha256: String,
    pub seed: u64,
    pub prior: String,
    pub m: usize,
    pub p: usize,
    /// Preprocessed observations the posterior conditions on.
    pub n_train: usize,
    pub holdout: usize,
    pub chains: usize,
    pub iterations: usize,
    pub warmup: usize,
    pub gradient: String,
    pub divergences: usize,
    pub max_rhat: f64,
    pub min_ess_bulk: f64,
    pub stationarity_probability: f64,
    pub preprocess: PreprocessMeta,
}

impl DrawsMeta {
    pub fn path_for(draws: &Path) -> PathBuf {
        draws.with_extension("meta.toml")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serialises")
    }

    /// `None` when there is no sidecar.
    pub fn read_for(draws: &Path) -> CliResult<Option<Self>> {
        let path = Self::path_for(draws);
        match std::fs::read_to_string(&path) {
            Ok(text) => toml::from_str(&text)
                .map(Some)
                .map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statvar::inference::ChainDraws;

    fn chain(theta: Vec<Vec<f64>>, lp: Vec<f64>) -> ChainDraws {
        let n = theta.len();
        ChainDraws {
            theta,
            log_density: lp,
            accept_stat: vec![1.0; n],
            divergent: vec![false; n],
            leapfrog_steps: vec![1; n],
            step_size: 0.1,
            inv_mass: vec![1.0; 2],
            warmup_divergences: 0,
        }
    }

    #[test]
    fn roundtrip() {
        let draws = Draws::new(
            vec!["a".into(), "b".into()],
            vec![
                chain(vec![vec![0.1, -2.0], vec![0.25, 3.0]], vec![-1.5, -2.5]),
                chain(vec![vec![1e-20, 7.0]], vec![-0.125]),
            ],
            None,
        );
        let mut out = Vec::new();
        write_draws(&draws, &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.starts_with("chain,iter,a,b,lp\n1,1,0.1,-2,-1.5\n"));
        let t = DrawsTable::parse(&out, Path::new("d.csv")).unwrap();
        assert_eq!(t.names, ["a", "b"]);
        assert_eq!(t.chain, [1, 1, 2]);
        assert_eq!(t.theta[2], [1e-20, 7.0]);
        assert_eq!(t.lp, [-1.5, -2.5, -0.125]);
    }

    #[test]
    fn rejects_foreign_files() {
        let p = Path::new("d.csv");
        assert!(DrawsTable::parse(b"y1,y2\n1,2\n", p).is_err());
        assert!(DrawsTable::parse(b"chain,iter,a,lp\n", p).is_err());
        assert!(DrawsTable::parse(b"chain,iter,a,lp\n1,1,x,2\n", p).is_err());
    }

    #[test]
    fn sidecar_path() {
        assert_eq!(DrawsMeta::path_for(Path::new("out/draws.csv")), Path::new("out/draws.meta.toml"));
    }
}
