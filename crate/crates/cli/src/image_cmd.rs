use std::path::{Path, PathBuf};

use clap::Subcommand;
use protofeat::audiofront::{gammatonegram, read_wav};
use protofeat::bcosfire::{
    configure, filter_responses, make_bank, read_bank, response_map, segment_response, write_bank, CosfireFilter,
    FilterKind,
};
use protofeat::config::ExperimentConfig;
use protofeat::dataset::scan_image_dataset;
use protofeat::experiment::{best_threshold, image_responses, pooled_metrics, threshold_sweep};
use protofeat::imgcore::io::{load_binary, load_image, load_json, save_binary_png, save_json, save_pgm, save_png};
use protofeat::imgcore::{DogParams, Image2D};
use protofeat::{rng, Error, Result};
use rand::Rng;

use crate::report::{metric_cells, Table, METRIC_COLUMNS};

#[derive(Subcommand)]
pub enum BcosfireCmd {
    /// Configure a filter bank, from synthetic bars or from a prototype image.
    Configure {
        #[arg(long)]
        out: PathBuf,
        /// Prototype image; without it the bank is built from `[filters]`.
        #[arg(long)]
        prototype: Option<PathBuf>,
        /// Configuration point `x,y` (default: image center).
        #[arg(long)]
        center: Option<String>,
        /// Comma-separated radii (default: first `filters.radii` list).
        #[arg(long)]
        radii: Option<String>,
        /// DoG scale (default: first `filters.sigmas`).
        #[arg(long)]
        sigma: Option<f64>,
        /// `line` or `line-ending`.
        #[arg(long, default_value = "line")]
        kind: String,
    },
    /// Fused rotation-invariant response map (.json keeps exact values).
    Respond {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Binary segmentation of one image or of every image of a dataset folder.
    Segment {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Output PNG (single image) or folder (dataset).
        #[arg(long)]
        out: PathBuf,
    },
    /// Pixel metrics over a dataset folder (images/, groundtruth/, masks/).
    Evaluate {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Scan threshold fractions 0.01..0.99 and report the most accurate.
        #[arg(long)]
        sweep: bool,
        /// CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-pixel filter responses on seeded random pixels, for selection.
    Features {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples_per_image: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum RenderCmd {
    /// Log-compressed gammatone energy of a WAV file.
    Tfmap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Response heat map, from a saved .json response or a bank and image.
    Responsemap {
        #[arg(long, conflicts_with_all = ["bank", "image"])]
        response: Option<PathBuf>,
        #[arg(long, requires = "image")]
        bank: Option<PathBuf>,
        #[arg(long, requires = "bank")]
        image: Option<PathBuf>,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{v}` is not a number")))
        })
        .collect()
}

fn parse_kind(s: &str) -> Result<FilterKind> {
    match s {
        "line" => Ok(FilterKind::Line),
        "line-ending" => Ok(FilterKind::LineEnding),
        other => Err(Error::Config(format!("unknown filter kind `{other}`"))),
    }
}

/// PNG or PGM by extension, normalized to the full gray range.
pub fn save_heat(img: &Image2D, path: &Path) -> Result<()> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("pgm") => save_pgm(img, path, true),
        Some("png") => save_png(img, path, true),
        Some("json") => save_json(img, path),
        _ => Err(Error::Config(format!(
            "{}: use a .png, .pgm or .json file",
            path.display()
        ))),
    }
}

fn load_bank_checked(path: &Path) -> Result<Vec<CosfireFilter>> {
    let bank = read_bank(path)?;
    if bank.is_empty() {
        return Err(Error::Decode(format!("{} holds no filters", path.display())));
    }
    Ok(bank)
}

fn configure_cmd(
    cfg: &ExperimentConfig,
    out: &Path,
    prototype: Option<&Path>,
    center: Option<&str>,
    radii: Option<&str>,
    sigma: Option<f64>,
    kind: &str,
) -> Result<()> {
    let bank = match prototype {
        None => make_bank(&cfg.filters.sigmas, &cfg.filters.radii, &cfg.filters.kinds, &cfg.bank)?,
        Some(p) => {
            let img = load_image(p, cfg.filters.gray)?;
            let center = match center {
                Some(c) => {
                    let v = parse_list(c)?;
                    if v.len() != 2 || v.iter().any(|x| *x < 0.0) {
                        return Err(Error::Config("--center expects x,y".into()));
                    }
                    (v[0] as usize, v[1] as usize)
                }
                None => (img.width() / 2, img.height() / 2),
            };
            let radii = match radii {
                Some(r) => parse_list(r)?,
                None => cfg.filters.radii[0].clone(),
            };
            let sigma = sigma.unwrap_or(cfg.filters.sigmas[0]);
            let dog = DogParams::new(sigma, cfg.bank.sigma_ratio, cfg.bank.polarity)?;
            let f = configure(&img, center, &radii, &dog, cfg.bank.fraction)?
                .with_kind(parse_kind(kind)?)
                .with_blur(cfg.bank.blur)?;
            vec![f]
        }
    };
    write_bank(&bank, out)?;
    let mut t = Table::new(["filter", "kind", "sigma", "tuples", "maxRho"]);
    for (i, f) in bank.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            format!("{:?}", f.kind()),
            f.dog().sigma.to_string(),
            f.tuples().len().to_string(),
            f.max_rho().to_string(),
        ]);
    }
    t.emit(None)
}

fn image_with_mask(cfg: &ExperimentConfig, image: &Path, mask: Option<&Path>) -> Result<(Image2D, Option<Image2D>)> {
    let img = load_image(image, cfg.filters.gray)?;
    let mask = mask.map(load_binary).transpose()?;
    Ok((img, mask))
}

pub fn run_bcosfire(cmd: BcosfireCmd, cfg: &ExperimentConfig) -> Result<()> {
    match cmd {
        BcosfireCmd::Configure {
            out,
            prototype,
            center,
            radii,
            sigma,
            kind,
        } => configure_cmd(
            cfg,
            &out,
            prototype.as_deref(),
            center.as_deref(),
            radii.as_deref(),
            sigma,
            &kind,
        ),
        BcosfireCmd::Respond { bank, image, mask, out } => {
            let bank = load_bank_checked(&bank)?;
            let (img, mask) = image_with_mask(cfg, &image, mask.as_deref())?;
            let r = response_map(&img, &bank, &cfg.segmentation, mask.as_ref())?;
            save_heat(&r, &out)
        }
        BcosfireCmd::Segment { bank, input, mask, out } => {
            let bank = load_bank_checked(&bank)?;
            let frac = cfg.segmentation.threshold_fraction;
            if input.is_dir() {
                let samples = scan_image_dataset(&input)?;
                let responses = image_responses(&samples, &bank, cfg)?;
                std::fs::create_dir_all(&out)?;
                let mut t = Table::new(["image", "foreground"]);
                for r in &responses {
                    let seg = segment_response(&r.response, frac, r.mask.as_ref())?;
                    save_binary_png(&seg, out.join(format!("{}_segmented.png", r.id)))?;
                    t.push(vec![r.id.clone(), (seg.sum() as u64).to_string()]);
                }
                t.emit(None)
            } else {
                let (img, mask) = image_with_mask(cfg, &input, mask.as_deref())?;
                let r = response_map(&img, &bank, &cfg.segmentation, mask.as_ref())?;
                save_binary_png(&segment_response(&r, frac, mask.as_ref())?, &out)
            }
        }
        BcosfireCmd::Evaluate {
            bank,
            dataset,
            sweep,
            out,
        } => {
            let bank = load_bank_checked(&bank)?;
            let samples = scan_image_dataset(&dataset)?;
            let responses = image_responses(&samples, &bank, cfg)?;
            let mut header = vec!["scope".to_string(), "threshold".to_string()];
            header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
            let mut t = Table::new(header);
            let frac = cfg.segmentation.threshold_fraction;
            for r in &responses {
                let m = pooled_metrics(std::slice::from_ref(r), frac)?;
                let mut row = vec![r.id.clone(), frac.to_string()];
                row.extend(metric_cells(&m));
                t.push(row);
            }
            let mut row = vec!["all".to_string(), frac.to_string()];
            row.extend(metric_cells(&pooled_metrics(&responses, frac)?));
            t.push(row);
            if sweep {
                let s = threshold_sweep(&responses)?;
                if let Some((f, m)) = best_threshold(&s) {
                    let mut row = vec!["tuned".to_string(), f.to_string()];
                    row.extend(metric_cells(&m));
                    t.push(row);
                }
            }
            t.emit(out.as_deref())
        }
        BcosfireCmd::Features {
            bank,
            dataset,
            samples_per_image,
            out,
        } => {
            let bank = load_bank_checked(&bank)?;
            features_cmd(cfg, &bank, &dataset, samples_per_image, &out)
        }
    }
}

fn features_cmd(
    cfg: &ExperimentConfig,
    bank: &[CosfireFilter],
    dataset: &Path,
    per_image: usize,
    out: &Path,
) -> Result<()> {
    use rayon::prelude::*;
    let samples = scan_image_dataset(dataset)?;
    let rows: Vec<Vec<Vec<String>>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let img = load_image(&s.image, cfg.filters.gray)?;
            let truth = load_binary(&s.truth)?;
            let mask = s.mask.as_ref().map(load_binary).transpose()?;
            let maps = filter_responses(&img, bank, &cfg.segmentation, mask.as_ref())?;
            let inside: Vec<usize> = (0..img.data().len())
                .filter(|&p| mask.as_ref().is_none_or(|m| m.data()[p] > 0.5))
                .collect();
            if inside.is_empty() {
                return Err(Error::EmptyInput);
            }
            let mut r = rng::stream(cfg.seed, i as u64);
            Ok((0..per_image)
                .map(|_| {
                    let p = inside[r.random_range(0..inside.len())];
                    let mut row: Vec<String> = maps.iter().map(|m| m.data()[p].to_string()).collect();
                    row.push(if truth.data()[p] > 0.5 { "vessel" } else { "background" }.to_string());
                    row
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut header: Vec<String> = (0..bank.len()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    let mut t = Table::new(header);
    t.rows = rows.into_iter().flatten().collect();
    t.write_csv(out)?;
    println!("{} samples x {} filters -> {}", t.rows.len(), bank.len(), out.display());
    Ok(())
}

pub fn run_render(cmd: RenderCmd, cfg: &ExperimentConfig) -> Result<()> {
    match cmd {
        RenderCmd::Tfmap { input, out } => {
            let tf = gammatonegram(&read_wav(&input)?, &cfg.gammatone)?;
            save_heat(&tf.compressed().to_image(), &out)
        }
        RenderCmd::Responsemap {
            response,
            bank,
            image,
            mask,
            out,
        } => {
            let r = match (response, bank, image) {
                (Some(p), _, _) => load_json(p)?,
                (None, Some(b), Some(i)) => {
                    let bank = load_bank_checked(&b)?;
                    let (img, mask) = image_with_mask(cfg, &i, mask.as_deref())?;
                    response_map(&img, &bank, &cfg.segmentation, mask.as_ref())?
                }
                _ => return Err(Error::Config("give --response or both --bank and --image".into())),
            };
            save_heat(&r, &out)
        }
    }
}
