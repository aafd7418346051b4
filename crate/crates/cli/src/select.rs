use std::path::{Path, PathBuf};

use clap::Subcommand;
use protofeat::config::ExperimentConfig;
use protofeat::featsel::{greedy_wrapper, linear_holdout_accuracy, rank_by_mi, stratified_split, SelectionResult};
use protofeat::{Error, Result};

use crate::report::{csv_error, Table};

#[derive(Subcommand)]
pub enum FeatselCmd {
    /// Rank features by mutual information with the label.
    Rank {
        /// CSV with one column per feature and a final `label` column.
        #[arg(long)]
        features: PathBuf,
        /// Selection result (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy forward selection scored by held-out linear-classifier accuracy.
    Wrap {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

struct FeatureTable {
    names: Vec<String>,
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
}

fn read_features(path: &Path) -> Result<FeatureTable> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_error)?;
    let header: Vec<String> = rd.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header.len() < 2 || header.last().map(String::as_str) != Some("label") {
        return Err(Error::Decode(
            "feature CSV needs feature columns and a final `label` column".into(),
        ));
    }
    let d = header.len() - 1;
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_error)?;
        let row = (0..d)
            .map(|j| {
                rec[j]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Decode(format!("bad value `{}`", &rec[j])))
            })
            .collect::<Result<Vec<f64>>>()?;
        x.push(row);
        labels.push(rec[d].to_string());
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut classes = labels.clone();
    classes.sort();
    classes.dedup();
    let y = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    Ok(FeatureTable {
        names: header[..d].to_vec(),
        x,
        y,
    })
}

fn report(res: &SelectionResult, names: &[String], out: &Path) -> Result<()> {
    std::fs::write(out, res.to_json())?;
    let mut t = Table::new(["rank", "index", "feature", "score"]);
    for (k, (&i, s)) in res.selected_indices.iter().zip(&res.scores).enumerate() {
        t.push(vec![
            (k + 1).to_string(),
            i.to_string(),
            names[i].clone(),
            format!("{s:.6}"),
        ]);
    }
    t.emit(None)
}

pub fn run(cmd: FeatselCmd, cfg: &ExperimentConfig) -> Result<()> {
    let fs = &cfg.featsel;
    match cmd {
        FeatselCmd::Rank { features, out } => {
            let t = read_features(&features)?;
            report(&rank_by_mi(&t.x, &t.y, fs.n_bins)?, &t.names, &out)
        }
        FeatselCmd::Wrap { features, out } => {
            let t = read_features(&features)?;
            let split = stratified_split(&t.y, fs.holdout_fraction, cfg.seed);
            let params = cfg.train_params();
            let max_k = fs.max_k.min(t.names.len());
            let res = greedy_wrapper(
                t.names.len(),
                |s| linear_holdout_accuracy(&t.x, &t.y, s, &split, &params),
                max_k,
                fs.patience,
            )?;
            report(&res, &t.names, &out)
        }
    }
}
