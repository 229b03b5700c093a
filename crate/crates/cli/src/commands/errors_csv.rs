//! Error-set CSV: one row per run with columns `e_1..e_d`, the claimed
//! covariance `cov_i_j` (row-major, 1-based) and optionally a reference MSE
//! `mse_i_j`. Either matrix may instead come from a shared file holding
//! `d*d` numbers.

use std::fmt::Write as _;
use std::path::Path;

use credible_core::{ErrorSample, EvaluationSet, ReferenceMse, SpdMatrix, Vector};

use crate::error::{CliError, CliResult};

fn matrix_columns(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).flat_map(|i| (1..=d).map(move |j| format!("{prefix}_{i}_{j}"))).collect()
}

pub fn write(set: &EvaluationSet) -> String {
    let d = set.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("e_{i}")).collect();
    header.extend(matrix_columns("cov", d));
    if set.reference().is_some() {
        header.extend(matrix_columns("mse", d));
    }
    let mut s = header.join(",");
    s.push('\n');
    for (k, sample) in set.samples().iter().enumerate() {
        let mut fields: Vec<String> = sample.error().iter().map(|v| v.to_string()).collect();
        fields.extend(sample.claimed_cov().matrix().transpose().iter().map(|v| v.to_string()));
        match set.reference() {
            Some(ReferenceMse::Shared(m)) => fields.extend(m.matrix().transpose().iter().map(|v| v.to_string())),
            Some(ReferenceMse::PerSample(ms)) => fields.extend(ms[k].matrix().transpose().iter().map(|v| v.to_string())),
            None => {}
        }
        let _ = writeln!(s, "{}", fields.join(","));
    }
    s
}

/// `d*d` numbers separated by commas or whitespace; `#` starts a comment.
pub fn read_shared_matrix(path: &Path, d: usize) -> CliResult<SpdMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v = tok
                .parse::<f64>()
                .map_err(|_| CliError::Data(format!("{}: '{tok}' is not a number", path.display())))?;
            values.push(v);
        }
    }
    if values.len() != d * d {
        return Err(CliError::Data(format!(
            "{}: expected {} entries for a {d}x{d} matrix, got {}",
            path.display(),
            d * d,
            values.len()
        )));
    }
    SpdMatrix::from_row_slice(d, &values).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path, shared_cov: Option<&Path>, shared_mse: Option<&Path>) -> CliResult<EvaluationSet> {
    let src = path.display().to_string();
    let data_err = |m: String| CliError::Data(format!("{src}: {m}"));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(e.to_string()))?;
    let header: Vec<String> =
        reader.headers().map_err(|e| data_err(e.to_string()))?.iter().map(str::to_string).collect();
    let col = |name: &str| header.iter().position(|h| h == name);

    let d = (1..).take_while(|i| col(&format!("e_{i}")).is_some()).count();
    if d == 0 {
        return Err(data_err("no error columns (expected e_1, e_2, ...)".into()));
    }
    let e_cols: Vec<usize> = (1..=d).map(|i| col(&format!("e_{i}")).unwrap()).collect();
    let find_matrix = |prefix: &str| -> CliResult<Option<Vec<usize>>> {
        let names = matrix_columns(prefix, d);
        let found: Vec<Option<usize>> = names.iter().map(|n| col(n)).collect();
        match found.iter().filter(|f| f.is_some()).count() {
            0 => Ok(None),
            n if n == d * d => Ok(Some(found.into_iter().map(Option::unwrap).collect())),
            _ => Err(data_err(format!("incomplete {prefix}_i_j columns for dimension {d}"))),
        }
    };
    let cov_cols = find_matrix("cov")?;
    let mse_cols = find_matrix("mse")?;

    let shared_cov = shared_cov.map(|p| read_shared_matrix(p, d)).transpose()?;
    if cov_cols.is_none() && shared_cov.is_none() {
        return Err(data_err("no cov_i_j columns and no shared covariance file".into()));
    }
    let shared_mse = shared_mse.map(|p| read_shared_matrix(p, d)).transpose()?;

    let mut samples = Vec::new();
    let mut per_sample_mse = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| data_err(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row_err = |m: String| CliError::Data(format!("{src}:{line}: row {}: {m}", k + 1));
        let num = |i: usize| -> CliResult<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>().map_err(|_| row_err(format!("'{s}' is not a number")))
        };
        let e = Vector::from_iterator(d, e_cols.iter().map(|&i| num(i)).collect::<CliResult<Vec<_>>>()?);
        let matrix = |cols: &[usize]| -> CliResult<SpdMatrix> {
            let vals = cols.iter().map(|&i| num(i)).collect::<CliResult<Vec<_>>>()?;
            SpdMatrix::from_row_slice(d, &vals).map_err(|e| row_err(e.to_string()))
        };
        let cov = match (&cov_cols, &shared_cov) {
            (Some(cols), _) => matrix(cols)?,
            (None, Some(m)) => m.clone(),
            (None, None) => unreachable!(),
        };
        if let Some(cols) = &mse_cols {
            per_sample_mse.push(matrix(cols)?);
        }
        samples.push(ErrorSample::new(e, cov).map_err(|e| row_err(e.to_string()))?);
    }

    let set = EvaluationSet::new(samples)?;
    let reference = match (shared_mse, mse_cols) {
        (Some(m), _) => Some(ReferenceMse::Shared(m)),
        (None, Some(_)) => Some(shared_if_constant(per_sample_mse)),
        (None, None) => None,
    };
    Ok(match reference {
        Some(r) => set.with_reference(r)?,
        None => set,
    })
}

fn shared_if_constant(ms: Vec<SpdMatrix>) -> ReferenceMse {
    if ms.windows(2).all(|w| w[0] == w[1]) {
        ReferenceMse::Shared(ms.into_iter().next().expect("at least two rows"))
    } else {
        ReferenceMse::PerSample(ms)
    }
}
