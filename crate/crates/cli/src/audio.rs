use std::path::{Path, PathBuf};

use clap::Subcommand;
use protofeat::audiofront::{gammatonegram, read_wav};
use protofeat::config::ExperimentConfig;
use protofeat::cope::{detect_in_map, read_cope_bank, write_cope_bank, CopeFeature, Event, LinearModel, BACKGROUND};
use protofeat::dataset::AudioDataset;
use protofeat::eval::evaluate_event_sets;
use protofeat::experiment::{
    configure_bank, configure_bank_from_dataset, dataset_maps, detect_on_maps, train_on_dataset, training_set,
};
use protofeat::synth::synth_audio_dataset;
use protofeat::{Error, Result};

use crate::report::{metric_cells, Table, METRIC_COLUMNS};

#[derive(Subcommand)]
pub enum CopeCmd {
    /// Configure one feature per prototype sound.
    Configure {
        /// Prototype WAV files; the file stem is the label. Repeatable.
        #[arg(long = "prototype")]
        prototypes: Vec<PathBuf>,
        /// Use the `prototypes/` folder of a dataset instead.
        #[arg(long, conflicts_with = "prototypes")]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the window classifier on a labelled dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect events in a WAV file or in every clip of a dataset.
    Detect {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Events CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recognition rate per SNR level and overall on a labelled dataset.
    Evaluate {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every detected event.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Labelled window feature vectors of a dataset, for selection.
    Features {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum SynthCmd {
    /// Seeded clips, prototypes and ground truth from `[synth]`.
    Audio {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_bank(path: &Path) -> Result<Vec<CopeFeature>> {
    let bank = read_cope_bank(path)?;
    if bank.is_empty() {
        return Err(Error::Decode(format!("{} holds no features", path.display())));
    }
    Ok(bank)
}

fn load_model(path: &Path, bank: &[CopeFeature]) -> Result<LinearModel> {
    let model = LinearModel::load(path)?;
    if model.dim() != bank.len() {
        return Err(Error::Config(format!(
            "model expects {} features but the bank has {}",
            model.dim(),
            bank.len()
        )));
    }
    Ok(model)
}

fn event_row(file: Option<&str>, e: &Event) -> Vec<String> {
    let mut row: Vec<String> = file.map(|f| vec![f.to_string()]).unwrap_or_default();
    row.extend([
        e.start.to_string(),
        e.end.to_string(),
        e.label.clone(),
        e.confidence.to_string(),
    ]);
    row
}

fn write_events(path: &Path, clips: &[(String, Vec<Event>)]) -> Result<()> {
    let mut t = Table::new(["file", "start", "end", "label", "confidence"]);
    for (file, events) in clips {
        for e in events {
            t.push(event_row(Some(file), e));
        }
    }
    t.write_csv(path)
}

pub fn run_cope(cmd: CopeCmd, cfg: &ExperimentConfig) -> Result<()> {
    match cmd {
        CopeCmd::Configure {
            prototypes,
            dataset,
            out,
        } => {
            let bank = match dataset {
                Some(d) => configure_bank_from_dataset(&AudioDataset::load(&d)?, cfg)?,
                None => {
                    if prototypes.is_empty() {
                        return Err(Error::Config("give --prototype files or --dataset".into()));
                    }
                    let protos = prototypes
                        .iter()
                        .map(|p| {
                            let label = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                            Ok((label, read_wav(p)?))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    configure_bank(&protos, cfg)?
                }
            };
            write_cope_bank(&bank, &out)?;
            let mut t = Table::new(["feature", "label", "points", "span"]);
            for (i, f) in bank.iter().enumerate() {
                let (a, b) = f.span();
                t.push(vec![
                    i.to_string(),
                    f.label().to_string(),
                    f.points().len().to_string(),
                    format!("{a}..{b}"),
                ]);
            }
            t.emit(None)
        }
        CopeCmd::Train { dataset, bank, out } => {
            let bank = load_bank(&bank)?;
            let model = train_on_dataset(&AudioDataset::load(&dataset)?, &bank, cfg)?;
            model.save(&out)?;
            println!("classes: {}", model.class_labels.join(", "));
            Ok(())
        }
        CopeCmd::Detect {
            bank,
            model,
            input,
            out,
        } => {
            let bank = load_bank(&bank)?;
            let model = load_model(&model, &bank)?;
            if input.is_dir() {
                let ds = AudioDataset::load(&input)?;
                let maps = dataset_maps(&ds, cfg)?;
                let det = detect_on_maps(&maps, &bank, &model, cfg)?;
                write_events(&out, &det)?;
                println!(
                    "{} events in {} clips",
                    det.iter().map(|d| d.1.len()).sum::<usize>(),
                    det.len()
                );
                Ok(())
            } else {
                let tf = gammatonegram(&read_wav(&input)?, &cfg.gammatone)?;
                let events = detect_in_map(&tf, &bank, &model, &cfg.detect)?;
                let mut t = Table::new(["start", "end", "label", "confidence"]);
                for e in &events {
                    t.push(event_row(None, e));
                }
                t.emit(Some(&out))
            }
        }
        CopeCmd::Evaluate {
            bank,
            model,
            dataset,
            out,
            events,
        } => {
            let bank = load_bank(&bank)?;
            let model = load_model(&model, &bank)?;
            let ds = AudioDataset::load(&dataset)?;
            let maps = dataset_maps(&ds, cfg)?;
            let det = detect_on_maps(&maps, &bank, &model, cfg)?;
            if let Some(p) = events {
                write_events(&p, &det)?;
            }
            let snr_of = |file: &str| {
                ds.records
                    .iter()
                    .find(|r| r.file == file)
                    .map(|r| r.snr_db)
                    .unwrap_or(f64::NAN)
            };
            let mut levels: Vec<f64> = ds.records.iter().map(|r| r.snr_db).collect();
            levels.sort_by(|a, b| b.total_cmp(a));
            levels.dedup();
            let mut header = vec!["scope".to_string()];
            header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
            let mut t = Table::new(header);
            let thr = cfg.eval.iou_threshold;
            for level in levels {
                let m = evaluate_event_sets(
                    det.iter()
                        .zip(&maps)
                        .filter(|((f, _), _)| snr_of(f) == level)
                        .map(|((_, p), (_, _, g))| (&p[..], &g[..])),
                    thr,
                );
                let mut row = vec![format!("snr {level} dB")];
                row.extend(metric_cells(&m));
                t.push(row);
            }
            let m = evaluate_event_sets(det.iter().zip(&maps).map(|((_, p), (_, _, g))| (&p[..], &g[..])), thr);
            let mut row = vec!["all".to_string()];
            row.extend(metric_cells(&m));
            t.push(row);
            t.emit(out.as_deref())
        }
        CopeCmd::Features { bank, dataset, out } => {
            let bank = load_bank(&bank)?;
            let maps = dataset_maps(&AudioDataset::load(&dataset)?, cfg)?;
            let (xs, ys) = training_set(&maps, &bank, cfg);
            let mut header: Vec<String> = bank.iter().map(|f| format!("cope_{}", f.label())).collect();
            header.push("label".into());
            let mut t = Table::new(header);
            for (x, y) in xs.iter().zip(&ys) {
                let mut row: Vec<String> = x.0.iter().map(f64::to_string).collect();
                row.push(y.clone());
                t.push(row);
            }
            t.write_csv(&out)?;
            let bg = ys.iter().filter(|y| *y == BACKGROUND).count();
            println!("{} windows ({} background) -> {}", ys.len(), bg, out.display());
            Ok(())
        }
    }
}

pub fn run_synth(cmd: SynthCmd, cfg: &ExperimentConfig) -> Result<()> {
    match cmd {
        SynthCmd::Audio { out } => {
            let recs = synth_audio_dataset(&cfg.synth, cfg.seed, &out)?;
            println!("{} clips -> {}", recs.len(), out.display());
            Ok(())
        }
    }
}
