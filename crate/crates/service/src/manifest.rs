//! Dataset manifests: `image_id,file_path,source,<expert>...`.
//!
//! Every column after `source` is an expert; blank cells mean that expert
//! did not label the image.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use fstlab_core::{FstLabel, ImageRecord};

const FIXED: [&str; 3] = ["image_id", "file_path", "source"];

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{} image file(s) missing: {}", .0.len(), .0.join(", "))]
    MissingImageFiles(Vec<String>),
    #[error("cannot read manifest: {0}")]
    Io(#[from] std::io::Error),
}

impl ManifestError {
    pub fn code(&self) -> &'static str {
        match self {
            ManifestError::Parse { .. } => "manifest_parse_error",
            ManifestError::MissingImageFiles(_) => "missing_image_file",
            ManifestError::Io(_) => "io_error",
        }
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> ManifestError {
    ManifestError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_manifest<R: Read>(reader: R) -> Result<Vec<ImageRecord>, ManifestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(|e| parse_err(1, e.to_string()))?,
    };
    if header.len() < 3 || header.iter().take(3).ne(FIXED) {
        return Err(parse_err(1, format!("header must start with {}", FIXED.join(","))));
    }
    let experts: Vec<String> = header.iter().skip(3).map(str::to_owned).collect();

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(str::is_empty) {
            continue;
        }
        if row.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let id = &row[0];
        if id.is_empty() {
            return Err(parse_err(line, "empty image_id"));
        }
        if !seen.insert(id.to_string()) {
            return Err(parse_err(line, format!("duplicate image_id {id}")));
        }
        let mut gold = BTreeMap::new();
        for (expert, cell) in experts.iter().zip(row.iter().skip(3)) {
            if cell.is_empty() {
                continue;
            }
            let label: FstLabel = cell
                .parse()
                .map_err(|e| parse_err(line, format!("column {expert}: {e}")))?;
            gold.insert(expert.clone(), label);
        }
        out.push(ImageRecord::new(id, &row[1], &row[2], gold));
    }
    Ok(out)
}

/// Image files that do not exist, relative paths resolved against `root`.
pub fn missing_files(records: &[ImageRecord], root: Option<&Path>) -> Vec<String> {
    records
        .iter()
        .filter(|r| !resolve(&r.file_path, root).is_file())
        .map(|r| r.file_path.clone())
        .collect()
}

pub fn resolve(file_path: &str, root: Option<&Path>) -> std::path::PathBuf {
    let p = Path::new(file_path);
    match root {
        Some(root) if p.is_relative() => root.join(p),
        _ => p.to_owned(),
    }
}

/// Parse a manifest and, when `check_files` is set, require every image to exist.
pub fn load_manifest(path: &Path, image_root: Option<&Path>, check_files: bool) -> Result<Vec<ImageRecord>, ManifestError> {
    let records = parse_manifest(std::fs::File::open(path)?)?;
    if check_files {
        let root = image_root.or_else(|| path.parent());
        let missing = missing_files(&records, root);
        if !missing.is_empty() {
            return Err(ManifestError::MissingImageFiles(missing));
        }
    }
    Ok(records)
}
