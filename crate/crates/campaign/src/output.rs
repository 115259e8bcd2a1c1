//! On-disk artifacts: `records.csv`, `summary.csv` and `result.json`.

use std::fs;
use std::path::{Path, PathBuf};

use aurora_core::MitigationCondition;
use thiserror::Error;

use crate::runner::{GroupSummary, ResultSet, TrialRecord, SCHEMA_VERSION};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const RESULT_FILE: &str = "result.json";

pub const RECORDS_HEADER: [&str; 9] = [
    "phi",
    "condition",
    "trial",
    "seed",
    "z_meas",
    "ae",
    "mse",
    "zne_flag",
    "duration_ns",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "phi",
    "condition",
    "n",
    "mean_ae",
    "std_ae",
    "mean_mse",
    "reduction_pct",
    "ci_lo",
    "ci_hi",
    "sign_p",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}, line {line}: {message}")]
    Format {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    Schema { path: PathBuf, found: u32 },
}

/// Ten significant digits, fixed-point for ordinary magnitudes.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.9e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if !(-6..=15).contains(&exp) {
        return sci;
    }
    let decimals = (9 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// The value a reader of the CSV output will see.
pub fn quantize(v: f64) -> f64 {
    fmt_sig(v).parse().unwrap()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_records(records: &[TrialRecord], path: &Path) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RECORDS_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            fmt_sig(r.phi),
            r.condition.tag().to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            fmt_sig(r.z_meas),
            fmt_sig(r.ae),
            fmt_sig(r.mse),
            r.zne_flag.map(|f| f.to_string()).unwrap_or_default(),
            fmt_sig(r.duration_ns),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn write_summary(summaries: &[GroupSummary], path: &Path) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for s in summaries {
        w.write_record([
            fmt_sig(s.phi),
            s.condition.tag().to_string(),
            s.ae.n.to_string(),
            fmt_sig(s.ae.mean),
            if s.ae.std_defined {
                fmt_sig(s.ae.std)
            } else {
                String::new()
            },
            fmt_sig(s.mean_mse),
            opt(s.reduction_pct),
            opt(s.ci.map(|c| c.lo)),
            opt(s.ci.map(|c| c.hi)),
            opt(s.sign_p),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn write_result_json(rs: &ResultSet, path: &Path) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(rs).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

/// Writes the three campaign artifacts into `dir`, creating it if needed.
pub fn write_results(rs: &ResultSet, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let records = dir.join(RECORDS_FILE);
    let summary = dir.join(SUMMARY_FILE);
    let result = dir.join(RESULT_FILE);
    write_records(&rs.records, &records)?;
    write_summary(&rs.summaries, &summary)?;
    write_result_json(rs, &result)?;
    Ok(vec![records, summary, result])
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>, OutputError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(RECORDS_HEADER) {
        return Err(OutputError::Format {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", RECORDS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err(path))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let fail = |col: &str, msg: String| OutputError::Format {
            path: path.to_path_buf(),
            line,
            message: format!("column {col}: {msg}"),
        };
        macro_rules! field {
            ($i:expr) => {
                row[$i]
                    .parse()
                    .map_err(|e| fail(RECORDS_HEADER[$i], format!("{e}")))?
            };
        }
        let condition: MitigationCondition = row[1]
            .parse()
            .map_err(|e: aurora_core::Error| fail("condition", e.to_string()))?;
        let zne_flag = match &row[7] {
            "" => None,
            s => Some(
                s.parse::<bool>()
                    .map_err(|e| fail("zne_flag", e.to_string()))?,
            ),
        };
        out.push(TrialRecord {
            phi: field!(0),
            condition,
            trial: field!(2),
            seed: field!(3),
            z_meas: field!(4),
            ae: field!(5),
            mse: field!(6),
            zne_flag,
            duration_ns: field!(8),
        });
    }
    Ok(out)
}

pub fn load_result(path: &Path) -> Result<ResultSet, OutputError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let json = |source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json)?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(OutputError::Schema {
            path: path.to_path_buf(),
            found,
        });
    }
    serde_json::from_value(value).map_err(json)
}
