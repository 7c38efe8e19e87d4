//! Matrix maps on CSV rows `role,lag,e1_1,e1_2,...,em_m` (row-major).
//! Roles: `sigma` (lag 0), `phi`, `a`, `p`, `c`.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use statvar::reparam::{a_to_p, ak_from_rml, forward_map, p_to_a, reverse_map, rml_from_ak, MatrixSequence};
use statvar::{Matrix, PacfSequence, RmlSequence, SpdMatrix, VarModel};

use super::Outcome;
use crate::error::{CliError, CliResult};
use crate::io::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    PhiToA,
    AToPhi,
    PToA,
    AToP,
    AkToRml,
    RmlToAk,
}

impl Direction {
    /// Input and output roles; whether `Σ` is carried along.
    fn roles(self) -> (&'static str, &'static str, bool) {
        match self {
            Self::PhiToA => ("phi", "a", true),
            Self::AToPhi => ("a", "phi", true),
            Self::PToA => ("p", "a", false),
            Self::AToP => ("a", "p", false),
            Self::AkToRml => ("a", "c", true),
            Self::RmlToAk => ("c", "a", true),
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct TransformArgs {
    #[arg(value_enum)]
    pub direction: Direction,
    #[arg(long, visible_alias = "input")]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRow {
    pub role: String,
    pub lag: usize,
    pub matrix: Matrix,
}

pub fn parse_matrices(bytes: &[u8], path: &Path) -> CliResult<Vec<MatrixRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header = reader.headers().map_err(|e| CliError::bad_csv(path, e.to_string()))?.clone();
    let k = header.len().saturating_sub(2);
    let m = (k as f64).sqrt().round() as usize;
    if header.get(0) != Some("role") || header.get(1) != Some("lag") || m == 0 || m * m != k {
        return Err(CliError::bad_csv(path, "header must be role,lag followed by m² entries"));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::bad_csv(path, e.to_string()))?;
        let bad = |what: &str| CliError::bad_csv(path, format!("line {}: bad {what}", i + 2));
        let lag = record[1].parse::<usize>().map_err(|_| bad("lag"))?;
        let values = record
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("entry")))
            .collect::<CliResult<Vec<f64>>>()?;
        out.push(MatrixRow {
            role: record[0].to_string(),
            lag,
            matrix: Matrix::from_fn(m, m, |r, c| values[r * m + c]),
        });
    }
    Ok(out)
}

pub fn write_matrices(rows: &[MatrixRow], out: &mut dyn std::io::Write) -> std::io::Result<()> {
    let m = rows.first().map_or(0, |r| r.matrix.rows());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["role".to_string(), "lag".to_string()];
    header.extend((1..=m).flat_map(|i| (1..=m).map(move |j| format!("e{i}_{j}"))));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.role.clone(), r.lag.to_string()];
        rec.extend(r.matrix.as_slice().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

/// Lags `1..=p` of `role`, in order.
fn sequence(rows: &[MatrixRow], role: &str) -> CliResult<Vec<Matrix>> {
    let mut picked: Vec<&MatrixRow> = rows.iter().filter(|r| r.role == role).collect();
    picked.sort_by_key(|r| r.lag);
    if picked.is_empty() {
        return Err(usage(format!("no {role:?} rows in the input")));
    }
    for (s, r) in picked.iter().enumerate() {
        if r.lag != s + 1 {
            return Err(usage(format!("{role:?} lags must run 1..{} without gaps", picked.len())));
        }
    }
    Ok(picked.into_iter().map(|r| r.matrix.clone()).collect())
}

fn sigma(rows: &[MatrixRow]) -> CliResult<SpdMatrix> {
    let mut found = rows.iter().filter(|r| r.role == "sigma");
    match (found.next(), found.next()) {
        (Some(r), None) => Ok(SpdMatrix::new(r.matrix.clone())?),
        _ => Err(usage("exactly one \"sigma\" row is required".into())),
    }
}

fn a_of_pacf(pacf: &PacfSequence) -> CliResult<Vec<Matrix>> {
    Ok(pacf.matrices().iter().map(p_to_a).collect::<statvar::Result<Vec<_>>>()?)
}

fn pacf_of_a(a: &[Matrix]) -> CliResult<PacfSequence> {
    Ok(PacfSequence::new(a.iter().map(a_to_p).collect::<statvar::Result<Vec<_>>>()?)?)
}

pub fn transform_table(direction: Direction, rows: &[MatrixRow]) -> CliResult<Vec<MatrixRow>> {
    let (from, to, with_sigma) = direction.roles();
    let input = sequence(rows, from)?;
    let sig = if with_sigma { Some(sigma(rows)?) } else { None };
    let output: Vec<Matrix> = match direction {
        Direction::PToA => input.iter().map(p_to_a).collect::<statvar::Result<Vec<_>>>()?,
        Direction::AToP => input.iter().map(a_to_p).collect::<statvar::Result<Vec<_>>>()?,
        Direction::PhiToA => {
            let model = VarModel::new(sig.clone().expect("sigma"), input)?;
            a_of_pacf(&forward_map(&model)?.0)?
        }
        Direction::AToPhi => {
            let (model, _) = reverse_map(sig.as_ref().expect("sigma"), &pacf_of_a(&input)?)?;
            model.phi().to_vec()
        }
        Direction::AkToRml => rml_from_ak(sig.as_ref().expect("sigma"), &pacf_of_a(&input)?)?
            .matrices()
            .to_vec(),
        Direction::RmlToAk => a_of_pacf(&ak_from_rml(sig.as_ref().expect("sigma"), &RmlSequence::new(input)?)?)?,
    };
    let mut out = Vec::new();
    if let Some(s) = sig {
        out.push(MatrixRow {
            role: "sigma".into(),
            lag: 0,
            matrix: s.as_matrix().clone(),
        });
    }
    out.extend(output.into_iter().enumerate().map(|(s, matrix)| MatrixRow {
        role: to.into(),
        lag: s + 1,
        matrix,
    }));
    Ok(out)
}

pub fn cmd_transform(args: &TransformArgs) -> CliResult<Outcome> {
    let bytes = std::fs::read(&args.data).map_err(|e| CliError::io(&args.data, e))?;
    let rows = parse_matrices(&bytes, &args.data)?;
    let out = transform_table(args.direction, &rows)?;
    write_atomic(&args.out, |w| write_matrices(&out, w))?;
    Ok(Outcome::Success)
}
