use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{DatasetSplit, LabeledExample, SPLIT_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum DatasetIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetIoError + '_ {
    move |source| DatasetIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes one example per line in the stable field order.
pub fn write_examples(path: &Path, examples: &[LabeledExample]) -> Result<(), DatasetIoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for ex in examples {
        let line = serde_json::to_string(ex).expect("example serializes");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_examples(path: &Path) -> Result<Vec<LabeledExample>, DatasetIoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| DatasetIoError::Schema {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let ex: LabeledExample = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if ex.kind.label() != ex.label {
            return Err(schema(format!(
                "kind {:?} is inconsistent with label {}",
                ex.kind,
                ex.label.as_str()
            )));
        }
        out.push(ex);
    }
    Ok(out)
}

/// Writes `train.jsonl`, `dev.jsonl` and `test.jsonl` into `dir`.
pub fn write_dataset(split: &DatasetSplit, dir: &Path) -> Result<(), DatasetIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, part) in SPLIT_NAMES.iter().zip(split.parts()) {
        write_examples(&dir.join(format!("{name}.jsonl")), part)?;
    }
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<DatasetSplit, DatasetIoError> {
    Ok(DatasetSplit {
        train: read_examples(&dir.join("train.jsonl"))?,
        dev: read_examples(&dir.join("dev.jsonl"))?,
        test: read_examples(&dir.join("test.jsonl"))?,
    })
}
