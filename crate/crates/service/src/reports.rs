//! Report builders shared by the HTTP API and the CLI.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use fstlab_core::model::ImageId;
use fstlab_core::{FstLabel, ImageRecord, PlatformState};
use fstlab_ita::{annotate_path, ItaConfig};
use fstlab_stats::{
    bootstrap_crowd_curve, confusion_matrix, within_k_agreement, ConfusionMatrix, CrowdCurveConfig, CrowdCurvePoint,
    IrrReport, LabelVectorPair, StatsError,
};
use serde::{Deserialize, Serialize};

use crate::labels::{LabelMap, LabelTable, LabelsError};
use crate::manifest::resolve;

/// Method name for the crowd consensus label (kept even if the image was
/// later halted or adjudicated).
pub const CROWD: &str = "crowd";
/// Method name for the final label: crowd consensus or expert adjudication.
pub const FINAL: &str = "final";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Labels(#[from] LabelsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::Labels(LabelsError::UnknownMethod(_)) => "unknown_method",
            ReportError::Labels(_) => "labels_parse_error",
            ReportError::Stats(StatsError::PoolTooSmall { .. }) => "pool_too_small",
            ReportError::Stats(StatsError::NoApplicablePairs) => "no_applicable_pairs",
            ReportError::Stats(StatsError::EmptyInput) => "empty_input",
            ReportError::Stats(_) => "degenerate_input",
        }
    }
}

/// Expert columns, then `crowd` and `final`, as recorded in the event log.
pub fn platform_methods(state: &PlatformState) -> LabelTable {
    let mut experts: BTreeMap<String, LabelMap> = BTreeMap::new();
    let mut crowd = LabelMap::new();
    let mut fin = LabelMap::new();
    for (id, img) in &state.images {
        for (expert, &label) in &img.record.gold_labels {
            experts.entry(expert.clone()).or_default().insert(id.clone(), label);
        }
        if let Some(l) = img.crowd_label {
            crowd.insert(id.clone(), l);
        }
        if let Some(l) = img.settled_label {
            fin.insert(id.clone(), l);
        }
    }
    let mut table = LabelTable {
        methods: experts.into_iter().collect(),
    };
    table.insert(CROWD.into(), crowd);
    table.insert(FINAL.into(), fin);
    table
}

pub fn expert_names(state: &PlatformState) -> Vec<String> {
    let names: BTreeSet<&String> = state
        .images
        .values()
        .flat_map(|i| i.record.gold_labels.keys())
        .collect();
    names.into_iter().cloned().collect()
}

/// Reliability report over `methods` (all table columns when empty).
pub fn irr(table: &LabelTable, methods: &[String], experts: &[String]) -> Result<IrrReport, ReportError> {
    let selected = if methods.is_empty() {
        table.methods.clone()
    } else {
        methods
            .iter()
            .map(|m| Ok((m.clone(), table.get(m)?.clone())))
            .collect::<Result<Vec<_>, LabelsError>>()?
    };
    for e in experts {
        table.get(e)?;
    }
    Ok(IrrReport::compute(&selected, experts)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub a: String,
    pub b: String,
    /// Images labeled by both methods.
    pub n_images: usize,
    /// Pairs where neither label is not-applicable.
    pub n_effective: usize,
    pub labels: Vec<FstLabel>,
    pub matrix: ConfusionMatrix,
    pub col_pct: [[f64; 7]; 7],
    pub row_pct: [[f64; 7]; 7],
}

/// Confusion matrix over the images both methods labeled.
pub fn confusion(table: &LabelTable, a: &str, b: &str) -> Result<ConfusionReport, ReportError> {
    let (la, lb) = common_images(table, a, b)?;
    let matrix = confusion_matrix(&la, &lb)?;
    let lv = LabelVectorPair::align(&la, &lb);
    Ok(ConfusionReport {
        a: a.into(),
        b: b.into(),
        n_images: la.len(),
        n_effective: lv.n_effective(),
        labels: FstLabel::ALL.to_vec(),
        col_pct: matrix.col_percentages(),
        row_pct: matrix.row_percentages(),
        matrix,
    })
}

fn common_images(table: &LabelTable, a: &str, b: &str) -> Result<(LabelMap, LabelMap), ReportError> {
    let (la, lb) = (table.get(a)?, table.get(b)?);
    let keep = |x: &LabelMap, y: &LabelMap| -> LabelMap {
        x.iter()
            .filter(|(id, _)| y.contains_key(*id))
            .map(|(id, l)| (id.clone(), *l))
            .collect()
    };
    Ok((keep(la, lb), keep(lb, la)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinKReport {
    pub a: String,
    pub b: String,
    pub k: u8,
    pub n_effective: usize,
    pub agreement: f64,
}

pub fn within_k(table: &LabelTable, a: &str, b: &str, k: u8) -> Result<WithinKReport, ReportError> {
    let lv = LabelVectorPair::align(table.get(a)?, table.get(b)?);
    Ok(WithinKReport {
        a: a.into(),
        b: b.into(),
        k,
        n_effective: lv.n_effective(),
        agreement: within_k_agreement(&lv, k)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdCurveReport {
    pub n_images: usize,
    pub config: CrowdCurveConfig,
    pub points: Vec<CrowdCurvePoint>,
}

pub fn crowd_curve(
    pool: &BTreeMap<ImageId, Vec<FstLabel>>,
    reference: &LabelMap,
    cfg: &CrowdCurveConfig,
) -> Result<CrowdCurveReport, ReportError> {
    let n_images = pool
        .keys()
        .filter(|id| reference.get(*id).is_some_and(|l| l.is_applicable()))
        .count();
    Ok(CrowdCurveReport {
        n_images,
        config: cfg.clone(),
        points: bootstrap_crowd_curve(pool, reference, cfg)?,
    })
}

/// Every crowd annotation per image, and the gold reference (first expert).
pub fn platform_pool(state: &PlatformState) -> (BTreeMap<ImageId, Vec<FstLabel>>, LabelMap) {
    let mut pool: BTreeMap<ImageId, Vec<FstLabel>> = BTreeMap::new();
    for entry in &state.annotations {
        let a = &entry.annotation;
        pool.entry(a.image_id.clone()).or_default().push(a.label);
    }
    let reference = state
        .images
        .iter()
        .filter_map(|(id, img)| Some((id.clone(), img.record.gold_reference()?)))
        .collect();
    (pool, reference)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItaRow {
    pub image_id: ImageId,
    /// `None` when no skin was found or the image could not be read.
    pub mean_ita_deg: Option<f64>,
    pub masked_pixel_count: usize,
    pub fst: FstLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// ITA label for every record; unreadable files are reported per row.
pub fn ita_rows(records: &[ImageRecord], root: Option<&Path>, cfg: &ItaConfig) -> Vec<ItaRow> {
    records
        .iter()
        .map(|r| match annotate_path(&resolve(&r.file_path, root), cfg) {
            Ok(res) => ItaRow {
                image_id: r.image_id.clone(),
                mean_ita_deg: res.mean_ita_deg.is_finite().then_some(res.mean_ita_deg),
                masked_pixel_count: res.masked_pixel_count,
                fst: res.fst,
                error: None,
            },
            Err(e) => ItaRow {
                image_id: r.image_id.clone(),
                mean_ita_deg: None,
                masked_pixel_count: 0,
                fst: FstLabel::NotApplicable,
                error: Some(e.to_string()),
            },
        })
        .collect()
}
