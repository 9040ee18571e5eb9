//! Label tables used by the reporting commands.
//!
//! Wide format: `image_id,<method>,<method>...` with blank cells for images a
//! method did not label. Pool format (one row per crowd annotation):
//! `image_id,label`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use fstlab_core::model::ImageId;
use fstlab_core::FstLabel;

#[derive(Debug, thiserror::Error)]
pub enum LabelsError {
    #[error("labels line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("unknown method {0}")]
    UnknownMethod(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type LabelMap = BTreeMap<ImageId, FstLabel>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTable {
    pub methods: Vec<(String, LabelMap)>,
}

impl LabelTable {
    pub fn get(&self, method: &str) -> Result<&LabelMap, LabelsError> {
        self.methods
            .iter()
            .find(|(m, _)| m == method)
            .map(|(_, l)| l)
            .ok_or_else(|| LabelsError::UnknownMethod(method.to_string()))
    }

    pub fn names(&self) -> Vec<String> {
        self.methods.iter().map(|(m, _)| m.clone()).collect()
    }

    /// Add or replace a method, keeping the original position on replace.
    pub fn insert(&mut self, method: String, labels: LabelMap) {
        match self.methods.iter_mut().find(|(m, _)| *m == method) {
            Some(slot) => slot.1 = labels,
            None => self.methods.push((method, labels)),
        }
    }

    pub fn merge(&mut self, other: LabelTable) {
        for (m, l) in other.methods {
            self.insert(m, l);
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), LabelsError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["image_id".to_string()];
        header.extend(self.names());
        wtr.write_record(&header).map_err(csv_io)?;
        let mut ids: Vec<&ImageId> = self.methods.iter().flat_map(|(_, l)| l.keys()).collect();
        ids.sort();
        ids.dedup();
        for id in ids {
            let mut row = vec![id.clone()];
            row.extend(
                self.methods
                    .iter()
                    .map(|(_, l)| l.get(id).map(ToString::to_string).unwrap_or_default()),
            );
            wtr.write_record(&row).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> LabelsError {
    LabelsError::Io(std::io::Error::other(e))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn line_of(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

pub fn read_wide<R: Read>(r: R) -> Result<LabelTable, LabelsError> {
    let mut rdr = reader(r);
    let header = rdr
        .headers()
        .map_err(|e| LabelsError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.get(0) != Some("image_id") {
        return Err(LabelsError::Parse {
            line: 1,
            message: "first column must be image_id".into(),
        });
    }
    let mut table = LabelTable {
        methods: header.iter().skip(1).map(|m| (m.to_string(), LabelMap::new())).collect(),
    };
    for row in rdr.records() {
        let row = row.map_err(|e| LabelsError::Parse {
            line: line_of(&e),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        for (i, cell) in row.iter().skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let label: FstLabel = cell.parse().map_err(|e| LabelsError::Parse {
                line,
                message: format!("{e}"),
            })?;
            table.methods[i].1.insert(row[0].to_string(), label);
        }
    }
    Ok(table)
}

pub fn read_pool<R: Read>(r: R) -> Result<BTreeMap<ImageId, Vec<FstLabel>>, LabelsError> {
    let mut pool: BTreeMap<ImageId, Vec<FstLabel>> = BTreeMap::new();
    for row in reader(r).records() {
        let row = row.map_err(|e| LabelsError::Parse {
            line: line_of(&e),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let (Some(id), Some(cell)) = (row.get(0), row.get(1)) else {
            return Err(LabelsError::Parse {
                line,
                message: "expected image_id,label".into(),
            });
        };
        let label = cell.parse().map_err(|e| LabelsError::Parse {
            line,
            message: format!("{e}"),
        })?;
        pool.entry(id.to_string()).or_default().push(label);
    }
    Ok(pool)
}

pub fn read_wide_file(path: &std::path::Path) -> Result<LabelTable, LabelsError> {
    read_wide(std::fs::File::open(path)?)
}
