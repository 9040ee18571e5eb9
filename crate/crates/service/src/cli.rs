//! Command-line verbs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fstlab_core::export::{annotations_csv, consensus_csv};
use fstlab_core::review::select_review_set;
use fstlab_core::PlatformState;
use fstlab_ita::{calibrate_thresholds, ItaThresholds};
use fstlab_sim::{run_simulation, SimConfig};
use fstlab_stats::{CrowdCurveConfig, Sampling};

use crate::app::{open_platform, AppState};
use crate::config::ServiceConfig;
use crate::labels::{read_pool, read_wide_file, LabelTable};
use crate::manifest::load_manifest;
use crate::reports;

#[derive(Debug, Parser)]
#[command(name = "fstlab", version, about = "Skin-type annotation platform")]
pub struct Cli {
    /// TOML or JSON config file (also FSTLAB_CONFIG).
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the data directory (also FSTLAB_DATA_DIR).
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append a manifest's images to the event log.
    Ingest {
        manifest: PathBuf,
        #[arg(long)]
        image_root: Option<PathBuf>,
        /// Do not require image files to exist.
        #[arg(long)]
        no_file_check: bool,
    },
    /// Run the HTTP API.
    Serve {
        /// Listen address (also FSTLAB_LISTEN).
        #[arg(long)]
        listen: Option<String>,
    },
    /// Individual typology angle measurement and threshold fitting.
    #[command(subcommand)]
    Ita(ItaCommand),
    /// Agreement and reliability reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Expert review set selection.
    #[command(subcommand)]
    Review(ReviewCommand),
    /// Run a synthetic crowd from a JSON SimConfig and print its summary.
    Simulate {
        sim_config: PathBuf,
        /// Write the transcript as JSON Lines.
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
    /// Print an export from the event log.
    #[command(subcommand)]
    Export(ExportCommand),
}

#[derive(Debug, Subcommand)]
pub enum ItaCommand {
    /// Measure ITA for every image in a manifest.
    Compute {
        manifest: PathBuf,
        #[arg(long)]
        image_root: Option<PathBuf>,
        /// Threshold JSON; defaults to the configured thresholds.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Also write a wide labels CSV with an `ita` column.
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Fit thresholds from ITA measurements and two experts' labels.
    Calibrate {
        /// CSV from `ita compute` (needs image_id and mean_ita_deg columns).
        measurements: PathBuf,
        /// Wide labels CSV.
        labels: PathBuf,
        #[arg(long, default_value = "expert1")]
        e1: String,
        #[arg(long, default_value = "expert2")]
        e2: String,
        /// Write the fitted thresholds as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct LabelSource {
    /// Wide labels CSV. Without it, methods come from the event log plus the
    /// configured labels CSV.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Pairwise Pearson correlations and Fisher-Z p-values against experts.
    Irr {
        #[command(flatten)]
        source: LabelSource,
        /// Comma-separated method subset (default: all).
        #[arg(long)]
        methods: Option<String>,
        /// Comma-separated expert methods.
        #[arg(long)]
        experts: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Confusion matrix between two methods.
    Confusion {
        #[command(flatten)]
        source: LabelSource,
        #[arg(short)]
        a: String,
        #[arg(short)]
        b: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Fraction of pairs within k types of each other.
    WithinK {
        #[command(flatten)]
        source: LabelSource,
        #[arg(short)]
        a: String,
        #[arg(short)]
        b: String,
        #[arg(short, default_value_t = 1)]
        k: u8,
    },
    /// Bootstrap correlation of crowd means with a reference, by crowd size.
    CrowdCurve {
        /// Long CSV `image_id,label`, one row per crowd annotation.
        #[arg(long)]
        pool: PathBuf,
        /// Wide labels CSV holding the reference method.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "expert1")]
        method: String,
        /// Comma-separated crowd sizes.
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        with_replacement: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Stratified sample of images for expert review.
    Select {
        #[command(flatten)]
        source: LabelSource,
        #[arg(short)]
        a: String,
        #[arg(short)]
        b: String,
        #[arg(long, default_value_t = 10)]
        per_stratum: usize,
        /// Pairs further apart than this many types are discrepant.
        #[arg(long, default_value_t = 1)]
        threshold: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// Per-image consensus CSV.
    Consensus,
    /// Every annotation as CSV.
    Annotations,
    /// Configured ITA thresholds as JSON.
    Thresholds,
}

fn split(s: Option<&str>) -> Vec<String> {
    s.map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
        .unwrap_or_default()
}

fn load_config(cli: &Cli) -> anyhow::Result<ServiceConfig> {
    let mut cfg = ServiceConfig::load(cli.config.as_deref())?;
    if let Some(d) = &cli.data_dir {
        cfg.data_dir = d.clone();
    }
    Ok(cfg)
}

fn replay_state(cfg: &ServiceConfig) -> anyhow::Result<PlatformState> {
    let events = fstlab_core::event::read_jsonl(cfg.events_path())?;
    Ok(PlatformState::replay(cfg.protocol.clone(), &events)?)
}

fn label_table(cfg: &ServiceConfig, source: &LabelSource) -> anyhow::Result<LabelTable> {
    if let Some(p) = &source.labels {
        return Ok(read_wide_file(p)?);
    }
    let mut t = reports::platform_methods(&replay_state(cfg)?);
    if let Some(p) = &cfg.labels_csv {
        t.merge(read_wide_file(p)?);
    }
    Ok(t)
}

fn json_line<T: serde::Serialize>(out: &mut dyn Write, v: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest {
            manifest,
            image_root,
            no_file_check,
        } => {
            let root = image_root.or_else(|| cfg.image_root.clone());
            let records = load_manifest(&manifest, root.as_deref(), !no_file_check)?;
            let mut platform = open_platform(&cfg)?;
            json_line(out, &platform.ingest(records)?)
        }
        Command::Serve { listen } => {
            let mut cfg = cfg;
            if let Some(l) = listen {
                cfg.listen = l;
            }
            let state = AppState::open(cfg)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::app::serve(state))?;
            Ok(())
        }
        Command::Ita(cmd) => ita(cmd, &cfg, out),
        Command::Report(cmd) => report(cmd, &cfg, out),
        Command::Review(ReviewCommand::Select {
            source,
            a,
            b,
            per_stratum,
            threshold,
            seed,
        }) => {
            let t = label_table(&cfg, &source)?;
            let (la, lb) = (t.get(&a)?, t.get(&b)?);
            // only images both methods labeled
            let la: BTreeMap<_, _> = la.iter().filter(|(id, _)| lb.contains_key(*id)).map(|(k, v)| (k.clone(), *v)).collect();
            let sel = select_review_set(&la, lb, per_stratum, threshold, seed)?;
            json_line(out, &sel)
        }
        Command::Simulate { sim_config, events_out } => {
            let text = std::fs::read_to_string(&sim_config)
                .with_context(|| format!("reading {}", sim_config.display()))?;
            let sim: SimConfig = serde_json::from_str(&text)?;
            let t = run_simulation(&sim)?;
            if let Some(p) = events_out {
                fstlab_core::event::write_jsonl(File::create(p)?, &t.events)?;
            }
            json_line(out, &t.summary)
        }
        Command::Export(what) => {
            match what {
                ExportCommand::Consensus => out.write_all(consensus_csv(&replay_state(&cfg)?).as_bytes())?,
                ExportCommand::Annotations => out.write_all(annotations_csv(&replay_state(&cfg)?).as_bytes())?,
                ExportCommand::Thresholds => json_line(out, &cfg.ita.thresholds)?,
            }
            Ok(())
        }
    }
}

fn read_thresholds(path: &Path) -> anyhow::Result<ItaThresholds> {
    let t: ItaThresholds = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if !t.is_ordered() {
        bail!("thresholds in {} are not strictly decreasing", path.display());
    }
    Ok(t)
}

fn ita(cmd: ItaCommand, cfg: &ServiceConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    match cmd {
        ItaCommand::Compute {
            manifest,
            image_root,
            thresholds,
            labels_out,
        } => {
            let mut ita_cfg = cfg.ita.clone();
            if let Some(p) = thresholds {
                ita_cfg.thresholds = read_thresholds(&p)?;
            }
            let root = image_root
                .or_else(|| cfg.image_root.clone())
                .or_else(|| manifest.parent().map(Path::to_owned));
            let records = load_manifest(&manifest, root.as_deref(), false)?;
            let rows = reports::ita_rows(&records, root.as_deref(), &ita_cfg);
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["image_id", "mean_ita_deg", "masked_pixel_count", "fst"])?;
            for r in &rows {
                if let Some(e) = &r.error {
                    tracing::warn!(image_id = %r.image_id, "{e}");
                }
                w.write_record([
                    r.image_id.clone(),
                    r.mean_ita_deg.map(|v| format!("{v:.6}")).unwrap_or_default(),
                    r.masked_pixel_count.to_string(),
                    r.fst.to_string(),
                ])?;
            }
            w.flush()?;
            drop(w);
            if let Some(p) = labels_out {
                let mut t = LabelTable::default();
                t.insert("ita".into(), rows.iter().map(|r| (r.image_id.clone(), r.fst)).collect());
                t.write_csv(File::create(p)?)?;
            }
            Ok(())
        }
        ItaCommand::Calibrate {
            measurements,
            labels,
            e1,
            e2,
            out: out_path,
        } => {
            let mut ita = BTreeMap::new();
            let mut rdr = csv::Reader::from_path(&measurements)?;
            let headers = rdr.headers()?.clone();
            let col = |name: &str| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .with_context(|| format!("{} has no {name} column", measurements.display()))
            };
            let (id_col, ita_col) = (col("image_id")?, col("mean_ita_deg")?);
            for row in rdr.records() {
                let row = row?;
                let v = &row[ita_col];
                if v.is_empty() {
                    continue;
                }
                ita.insert(row[id_col].to_string(), v.parse::<f64>()?);
            }
            let table = read_wide_file(&labels)?;
            let cal = calibrate_thresholds(&ita, table.get(&e1)?, table.get(&e2)?)?;
            if let Some(p) = out_path {
                std::fs::write(p, serde_json::to_string_pretty(&cal.thresholds)?)?;
            }
            json_line(out, &cal)
        }
    }
}

fn report(cmd: ReportCommand, cfg: &ServiceConfig, out: &mut dyn Write) -> anyhow::Result<()> {
    match cmd {
        ReportCommand::Irr {
            source,
            methods,
            experts,
            format,
        } => {
            let t = label_table(cfg, &source)?;
            let mut experts = split(experts.as_deref());
            if experts.is_empty() {
                experts = cfg.experts.clone();
            }
            let r = reports::irr(&t, &split(methods.as_deref()), &experts)?;
            match format {
                Format::Text | Format::Csv => out.write_all(r.to_text().as_bytes())?,
                Format::Json => json_line(out, &r)?,
            }
        }
        ReportCommand::Confusion { source, a, b, format } => {
            let r = reports::confusion(&label_table(cfg, &source)?, &a, &b)?;
            match format {
                Format::Csv => out.write_all(r.matrix.to_csv().as_bytes())?,
                Format::Text => out.write_all(r.matrix.to_text(&a, &b).as_bytes())?,
                Format::Json => json_line(out, &r)?,
            }
        }
        ReportCommand::WithinK { source, a, b, k } => {
            json_line(out, &reports::within_k(&label_table(cfg, &source)?, &a, &b, k)?)?;
        }
        ReportCommand::CrowdCurve {
            pool,
            reference,
            method,
            sizes,
            draws,
            seed,
            with_replacement,
            format,
        } => {
            let mut cc: CrowdCurveConfig = cfg.crowd_curve.clone();
            if sizes.is_some() {
                cc.sizes = split(sizes.as_deref())
                    .iter()
                    .map(|s| s.parse().with_context(|| format!("bad size {s}")))
                    .collect::<anyhow::Result<_>>()?;
            }
            cc.draws = draws.unwrap_or(cc.draws);
            cc.seed = seed.unwrap_or(cc.seed);
            if with_replacement {
                cc.sampling = Sampling::WithReplacement;
            }
            let pool = read_pool(File::open(&pool)?)?;
            let table = read_wide_file(&reference)?;
            let r = reports::crowd_curve(&pool, table.get(&method)?, &cc)?;
            match format {
                Format::Json => json_line(out, &r)?,
                Format::Text | Format::Csv => {
                    writeln!(out, "size,mean_rho,sd_rho,ci_low,ci_high")?;
                    for p in &r.points {
                        writeln!(
                            out,
                            "{},{:.4},{:.4},{:.4},{:.4}",
                            p.sample_size, p.mean_rho, p.sd_rho, p.ci_low, p.ci_high
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}
