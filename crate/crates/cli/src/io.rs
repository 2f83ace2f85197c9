//! CSV and JSON artifacts. Reals are written in the shortest form that parses back to the
//! same value.

use std::fs;
use std::path::Path;

use jointsgl::{
    CoefficientMatrix, CoefficientVector, ContinuousOutcome, GroupStructure, MultiResponse, Outcome, PredictorMatrix,
    SurvivalOutcome,
};
use ndarray::{Array1, Array2};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

fn parse_real(field: &str, path: &Path, line: u64) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| CliError::at(path, line, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::at(path, line, format!("non-finite value `{field}`")));
    }
    Ok(v)
}

struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = rdr.headers().map_err(|e| CliError::io(path, e))?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(CliError::at(path, line, format!("{} fields, header has {}", rec.len(), header.len())));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn numeric(table: &Table, path: &Path, skip: usize) -> Result<Array2<f64>> {
    let cols = table.header.len() - skip;
    let mut out = Array2::zeros((table.rows.len(), cols));
    for (i, (line, row)) in table.rows.iter().enumerate() {
        for j in 0..cols {
            out[[i, j]] = parse_real(&row[j + skip], path, *line)?;
        }
    }
    Ok(out)
}

/// Samples in rows, header of column names.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let t = read_table(path)?;
    if t.header.is_empty() || t.rows.is_empty() {
        return Err(CliError::at(path, 1, "expected a header and at least one data row"));
    }
    let m = numeric(&t, path, 0)?;
    Ok((t.header, m))
}

pub fn write_matrix(path: &Path, header: &[String], values: &Array2<f64>) -> Result<()> {
    write_table(path, header, values.rows().into_iter().map(|r| r.iter().map(|&v| fmt_real(v)).collect()))
}

pub fn read_predictors(path: &Path) -> Result<PredictorMatrix<f64>> {
    let (names, m) = read_matrix(path)?;
    PredictorMatrix::new(m, names).map_err(|e| CliError::io(path, e))
}

pub fn write_predictors(path: &Path, x: &PredictorMatrix<f64>) -> Result<()> {
    write_matrix(path, x.feature_names(), x.values())
}

pub fn read_responses(path: &Path) -> Result<MultiResponse<f64>> {
    let (names, m) = read_matrix(path)?;
    MultiResponse::new(m, names).map_err(|e| CliError::io(path, e))
}

pub fn write_responses(path: &Path, y: &MultiResponse<f64>) -> Result<()> {
    write_matrix(path, y.response_names(), y.values())
}

/// Column `z`, or columns `time,event` with event in {0, 1}.
pub fn read_outcome(path: &Path) -> Result<Outcome<f64>> {
    let t = read_table(path)?;
    if t.rows.is_empty() {
        return Err(CliError::at(path, 1, "no data rows"));
    }
    match t.header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["z"] => {
            let z = numeric(&t, path, 0)?.column(0).to_owned();
            Ok(Outcome::Continuous(ContinuousOutcome::new(z).map_err(|e| CliError::io(path, e))?))
        }
        ["time", "event"] => {
            let mut time = Array1::zeros(t.rows.len());
            let mut event = Vec::with_capacity(t.rows.len());
            for (i, (line, row)) in t.rows.iter().enumerate() {
                time[i] = parse_real(&row[0], path, *line)?;
                event.push(match row[1].trim() {
                    "1" => true,
                    "0" => false,
                    other => return Err(CliError::at(path, *line, format!("event must be 0 or 1, got `{other}`"))),
                });
            }
            Ok(Outcome::Survival(SurvivalOutcome::new(time, event).map_err(|e| CliError::io(path, e))?))
        }
        _ => Err(CliError::at(path, 1, "header must be `z` or `time,event`")),
    }
}

pub fn write_outcome(path: &Path, z: &Outcome<f64>) -> Result<()> {
    match z {
        Outcome::Continuous(c) => write_table(path, &["z".to_string()], c.values().iter().map(|&v| vec![fmt_real(v)])),
        Outcome::Survival(s) => write_table(
            path,
            &["time".to_string(), "event".to_string()],
            s.time().iter().zip(s.event()).map(|(&t, &e)| vec![fmt_real(t), u8::from(e).to_string()]),
        ),
    }
}

/// One `group,member` row per membership; `names` resolves members to indices.
pub fn read_groups(path: &Path, names: &[String]) -> Result<GroupStructure> {
    let t = read_table(path)?;
    if t.header.len() != 2 {
        return Err(CliError::at(path, 1, "group files have two columns: group name, member name"));
    }
    let rows: Vec<(String, String)> = t.rows.into_iter().map(|(_, r)| (r[0].clone(), r[1].clone())).collect();
    GroupStructure::from_memberships(&rows, names).map_err(|e| CliError::io(path, e))
}

pub fn write_groups(path: &Path, groups: &GroupStructure, names: &[String], member: &str) -> Result<()> {
    write_table(
        path,
        &["group".to_string(), member.to_string()],
        groups.memberships(names).into_iter().map(|(g, m)| vec![g, m]),
    )
}

/// p × q coefficients with feature names in the first column and response names in the
/// header.
pub fn write_coefficients_model1(path: &Path, b: &CoefficientMatrix<f64>, features: &[String], responses: &[String]) -> Result<()> {
    let mut header = vec!["feature".to_string()];
    header.extend(responses.iter().cloned());
    write_table(
        path,
        &header,
        b.values.rows().into_iter().zip(features).map(|(r, f)| {
            let mut row = vec![f.clone()];
            row.extend(r.iter().map(|&v| fmt_real(v)));
            row
        }),
    )
}

pub fn read_coefficients_model1(path: &Path) -> Result<(Vec<String>, Vec<String>, CoefficientMatrix<f64>)> {
    let t = read_table(path)?;
    if t.header.len() < 2 {
        return Err(CliError::at(path, 1, "expected a feature column and at least one response column"));
    }
    let values = numeric(&t, path, 1)?;
    let features = t.rows.iter().map(|(_, r)| r[0].clone()).collect();
    Ok((features, t.header[1..].to_vec(), CoefficientMatrix { values }))
}

pub fn write_coefficients_model2(path: &Path, g: &CoefficientVector<f64>, features: &[String]) -> Result<()> {
    write_table(
        path,
        &["feature".to_string(), "coefficient".to_string()],
        g.values.iter().zip(features).map(|(&v, f)| vec![f.clone(), fmt_real(v)]),
    )
}

pub fn read_coefficients_model2(path: &Path) -> Result<(Vec<String>, CoefficientVector<f64>)> {
    let t = read_table(path)?;
    if t.header.len() != 2 {
        return Err(CliError::at(path, 1, "expected columns `feature,coefficient`"));
    }
    let values = numeric(&t, path, 1)?.column(0).to_owned();
    Ok((t.rows.iter().map(|(_, r)| r[0].clone()).collect(), CoefficientVector { values }))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::at(path, e.line() as u64, e))
}
