//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.
//!
//! Criterion 1 needs the DRIVE test set: point `DRIVE_DIR` at a folder with
//! `images/`, `1st_manual/` and `mask/`. Without it the synthetic-bar checks
//! stand in.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use protofeat::audiofront::{detect_peaks, gammatonegram, AudioClip, EnergyPeak, GammatoneParams, TimeFrequencyMap};
use protofeat::bcosfire::prototype::bar;
use protofeat::bcosfire::{
    configure, make_bank, respond, respond_rotation_invariant, response_map, segment, segment_response, BankOptions,
    CosfireFilter, FilterKind, SegmentationParams,
};
use protofeat::config::ExperimentConfig;
use protofeat::cope::{configure_cope, cope_response, CopeConfig, Event};
use protofeat::dataset::AudioDataset;
use protofeat::eval::{evaluate_event_sets, evaluate_segmentation, iou, match_events, Metrics};
use protofeat::experiment::{configure_bank_from_dataset, dataset_maps, detect_on_maps, train_on_dataset};
use protofeat::featsel::{entropy, greedy_wrapper, mi_from_counts, mutual_information};
use protofeat::imgcore::io::{save_binary_png, save_png};
use protofeat::imgcore::{convolve, convolve_separable, dog_kernel, DogParams, Polarity};
use protofeat::rng;
use protofeat::synth::{synth_audio_dataset, Template};
use protofeat::{BorderMode, Image2D};

const BENCH_SEED: u64 = 2026;

#[derive(Default)]
struct Checks {
    run: usize,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.run += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }
}

fn report(n: usize, title: &str, started: Instant, checks: &Checks) -> bool {
    let ok = checks.failures.is_empty();
    println!(
        "criterion {n} {}: {title} ({} checks, {:.1} s)",
        if ok { "PASS" } else { "FAIL" },
        checks.run,
        started.elapsed().as_secs_f64()
    );
    for s in &checks.notes {
        println!("    {s}");
    }
    for s in &checks.failures {
        println!("    failed: {s}");
    }
    ok
}

fn main() {
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: vessel segmentation

fn criterion_1() -> bool {
    let t0 = Instant::now();
    let mut c = Checks::default();
    match std::env::var_os("DRIVE_DIR") {
        Some(dir) => {
            drive(Path::new(&dir), &mut c);
            report(
                1,
                "DRIVE segmentation, Se >= 0.73 and Sp >= 0.96 at the tuned threshold",
                t0,
                &c,
            )
        }
        None => {
            c.note("DRIVE_DIR not set; synthetic-bar substitute".into());
            bar_orientations(&mut c);
            dark_bar_segmentation(&mut c);
            synthetic_vessels(&mut c);
            report(1, "vessel segmentation (synthetic-bar substitute)", t0, &c)
        }
    }
}

fn drive(dir: &Path, c: &mut Checks) {
    let tmp = tempfile::tempdir().unwrap();
    let bank = tmp.path().join("bank.json");
    let table = tmp.path().join("eval.csv");
    let ok = cli(&["bcosfire", "configure", "--out", path_str(&bank)], &[])
        && cli(
            &[
                "bcosfire",
                "evaluate",
                "--bank",
                path_str(&bank),
                "--dataset",
                path_str(dir),
                "--sweep",
                "--out",
                path_str(&table),
            ],
            &[],
        );
    c.check(ok, || "protofeat bcosfire evaluate did not succeed".into());
    if !ok {
        return;
    }
    let mut rd = csv::Reader::from_path(&table).unwrap();
    let header = rd.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let tuned = rd.records().map(|r| r.unwrap()).find(|r| &r[0] == "tuned");
    let Some(row) = tuned else {
        c.check(false, || "no tuned row in the evaluation table".into());
        return;
    };
    let se: f64 = row[col("se")].parse().unwrap_or(f64::NAN);
    let sp: f64 = row[col("sp")].parse().unwrap_or(f64::NAN);
    c.note(format!(
        "threshold {} Se {se:.4} Sp {sp:.4} accuracy {}",
        &row[1],
        &row[col("accuracy")]
    ));
    c.check(se >= 0.73, || format!("Se {se:.4} < 0.73"));
    c.check(sp >= 0.96, || format!("Sp {sp:.4} < 0.96"));
}

const N: usize = 101;
const CTR: f64 = 50.0;

fn line_filter(sigma: f64) -> CosfireFilter {
    make_bank(
        &[sigma],
        &[vec![0.0, 2.0, 4.0, 6.0, 8.0]],
        &[FilterKind::Line],
        &BankOptions::default(),
    )
    .unwrap()
    .remove(0)
}

fn interior_argmax(img: &Image2D, margin: usize) -> (usize, usize) {
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for y in margin..img.height() - margin {
        for x in margin..img.width() - margin {
            if img.get(x, y) > best.0 {
                best = (img.get(x, y), (x, y));
            }
        }
    }
    best.1
}

fn across(p: (f64, f64), center: (f64, f64), angle: f64) -> f64 {
    let (s, co) = angle.sin_cos();
    (-s * (p.0 - center.0) + co * (p.1 - center.1)).abs()
}

/// Rotation-invariant argmax lies within 2 px of the bar axis at every one
/// of the 12 orientations.
fn bar_orientations(c: &mut Checks) {
    for sigma in [1.8, 2.4] {
        let f = line_filter(sigma);
        let mut worst: f64 = 0.0;
        for k in 0..12 {
            let psi = f.orientation(k, 12);
            let img = bar(N, N, (CTR, CTR), psi, 2.0 * sigma, true);
            let at = interior_argmax(&respond_rotation_invariant(&img, &f, 12), 25);
            let d = across((at.0 as f64, at.1 as f64), (CTR, CTR), psi);
            worst = worst.max(d);
            c.check(d <= 2.0, || {
                format!("sigma {sigma} orientation {k}: argmax {at:?} is {d:.2} px off the bar")
            });
        }
        c.note(format!(
            "bar argmax, sigma {sigma}: worst distance to axis {worst:.2} px over 12 orientations"
        ));
    }
}

fn dark_bar_segmentation(c: &mut Checks) {
    let bank = make_bank(
        &[2.0],
        &[vec![0.0, 2.0, 4.0, 6.0]],
        &[FilterKind::Line],
        &BankOptions::default(),
    )
    .unwrap();
    for angle in [0.0, 0.4, 1.2, 2.0, 2.8] {
        let img = bar(96, 96, (48.0, 48.0), angle, 4.0, false).map(|v| 0.2 + 0.6 * v);
        let seg = segment(&img, &bank, &SegmentationParams::default(), None).unwrap();
        let (s, co) = f64::sin_cos(angle);
        let (mut hit, mut n, mut far_hit, mut far_n) = (0usize, 0usize, 0usize, 0usize);
        for y in 0..96 {
            for x in 0..96 {
                let (dx, dy) = (x as f64 - 48.0, y as f64 - 48.0);
                let a = (-s * dx + co * dy).abs();
                let along = (co * dx + s * dy).abs();
                let on = seg.get(x, y) > 0.5;
                if a < 0.5 && along < 36.0 {
                    n += 1;
                    hit += on as usize;
                } else if a > 12.0 {
                    far_n += 1;
                    far_hit += on as usize;
                }
            }
        }
        c.check(hit as f64 >= 0.8 * n as f64, || {
            format!("angle {angle}: centerline {hit}/{n} < 80%")
        });
        c.check(far_hit as f64 <= 0.02 * far_n as f64, || {
            format!("angle {angle}: far background {far_hit}/{far_n} > 2%")
        });
    }
}

/// Several dark bars of vessel-like widths over a noisy background, scored
/// with the default filter bank against geometric ground truth.
fn synthetic_vessels(c: &mut Checks) {
    const W: usize = 160;
    let bars = [
        ((80.0, 80.0), 0.3, 4.5),
        ((60.0, 100.0), 1.1, 3.6),
        ((100.0, 70.0), 1.9, 4.0),
        ((80.0, 50.0), 2.6, 5.0),
    ];
    let mut r = rng::stream(BENCH_SEED, 7);
    let mut img = Image2D::filled(W, W, 1.0);
    for &(ctr, angle, thick) in &bars {
        let b = bar(W, W, ctr, angle, thick, false);
        img = img.zip_map(&b, |a, v| a * v).unwrap();
    }
    let img = img
        .zip_map(&uniform(W, W, &mut r), |v, u| 0.35 + 0.25 * v + 0.01 * (u - 0.5))
        .unwrap();
    let truth = Image2D::from_fn(W, W, |x, y| {
        let p = (x as f64, y as f64);
        let on = bars
            .iter()
            .any(|&(ctr, angle, thick)| across(p, ctr, angle) <= thick / 2.0);
        if on {
            1.0
        } else {
            0.0
        }
    });
    let cfg = ExperimentConfig::default();
    let bank = make_bank(&cfg.filters.sigmas, &cfg.filters.radii, &cfg.filters.kinds, &cfg.bank).unwrap();
    let resp = response_map(&img, &bank, &cfg.segmentation, None).unwrap();
    let mut best: Option<(f64, Metrics)> = None;
    for k in 1..100 {
        let frac = k as f64 / 100.0;
        let seg = segment_response(&resp, frac, None).unwrap();
        let m = evaluate_segmentation(&seg, &truth, None).unwrap();
        if best.as_ref().is_none_or(|(_, b)| m.accuracy > b.accuracy) {
            best = Some((frac, m));
        }
    }
    let (frac, m) = best.unwrap();
    let se = m.se.unwrap_or(0.0);
    let sp = m.sp.unwrap_or(0.0);
    c.note(format!(
        "synthetic vessels, default bank: tuned threshold {frac:.2} Se {se:.4} Sp {sp:.4}"
    ));
    c.check(se >= 0.73, || format!("synthetic vessels Se {se:.4} < 0.73"));
    c.check(sp >= 0.96, || format!("synthetic vessels Sp {sp:.4} < 0.96"));
}

// ---------------------------------------------------------------------------
// Criterion 2: audio event recognition

fn criterion_2() -> bool {
    let t0 = Instant::now();
    let mut c = Checks::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let elapsed = pool.install(|| audio_benchmark(&mut c));
    c.note(format!("single-threaded runtime {:.1} s", elapsed.as_secs_f64()));
    c.check(elapsed < Duration::from_secs(300), || {
        format!("runtime {:.1} s >= 300 s", elapsed.as_secs_f64())
    });
    report(
        2,
        "synthetic audio events, recognition >= 0.90 overall and >= 0.80 at -5 dB",
        t0,
        &c,
    )
}

fn audio_benchmark(c: &mut Checks) -> Duration {
    let t0 = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_with("", &["cope.tolerances.st=1.5", "cope.tolerances.sc=1.0"]).unwrap();
    let train_dir = tmp.path().join("train");
    let test_dir = tmp.path().join("test");
    synth_audio_dataset(&cfg.synth, BENCH_SEED + 1000, &train_dir).unwrap();
    let records = synth_audio_dataset(&cfg.synth, BENCH_SEED, &test_dir).unwrap();
    let train = AudioDataset::load(&train_dir).unwrap();
    let test = AudioDataset::load(&test_dir).unwrap();

    let bank = configure_bank_from_dataset(&train, &cfg).unwrap();
    let model = train_on_dataset(&train, &bank, &cfg).unwrap();
    let maps = dataset_maps(&test, &cfg).unwrap();
    let detected = detect_on_maps(&maps, &bank, &model, &cfg).unwrap();
    let elapsed = t0.elapsed();

    let snr: HashMap<&str, f64> = records.iter().map(|r| (r.file.as_str(), r.snr_db)).collect();
    let pairs: Vec<(f64, &[Event], &[Event])> = maps
        .iter()
        .zip(&detected)
        .map(|((file, _, gt), (_, pred))| (snr[file.as_str()], pred.as_slice(), gt.as_slice()))
        .collect();
    let thr = cfg.eval.iou_threshold;
    let all = evaluate_event_sets(pairs.iter().map(|p| (p.1, p.2)), thr);
    let rate = |m: &Metrics| m.recognition_rate.unwrap_or(0.0);
    c.note(format!(
        "all: {} events, recognition {:.4}, tp {} fp {} fn {}",
        all.tp + all.fn_,
        rate(&all),
        all.tp,
        all.fp,
        all.fn_
    ));
    let expected = (cfg.synth.n_classes * cfg.synth.n_per_class * cfg.synth.snr_levels.len()) as u64;
    c.check(all.tp + all.fn_ == expected, || {
        format!("{} test events, expected {expected}", all.tp + all.fn_)
    });
    c.check(rate(&all) >= 0.90, || {
        format!("overall recognition {:.4} < 0.90", rate(&all))
    });
    for level in &cfg.synth.snr_levels {
        let m = evaluate_event_sets(pairs.iter().filter(|p| p.0 == *level).map(|p| (p.1, p.2)), thr);
        c.note(format!(
            "SNR {level:+} dB: recognition {:.4}, tp {} fp {} fn {}",
            rate(&m),
            m.tp,
            m.fp,
            m.fn_
        ));
        if *level == -5.0 {
            c.check(rate(&m) >= 0.80, || format!("-5 dB recognition {:.4} < 0.80", rate(&m)));
        }
    }
    elapsed
}

// ---------------------------------------------------------------------------
// Criterion 3: invariants

fn criterion_3() -> bool {
    let t0 = Instant::now();
    let mut c = Checks::default();
    dog_zero_sum(&mut c);
    geometric_mean_bounds(&mut c);
    bar_orientations(&mut c);
    cope_self_match(&mut c);
    mi_bounds(&mut c);
    let elapsed = t0.elapsed();
    c.check(elapsed < Duration::from_secs(60), || {
        format!("property suite took {:.1} s", elapsed.as_secs_f64())
    });
    report(3, "property suite under 60 s", t0, &c)
}

fn dog_zero_sum(c: &mut Checks) {
    let mut worst: f64 = 0.0;
    for sigma in [0.8, 1.0, 1.8, 2.4, 3.3, 5.0] {
        for ratio in [0.3, 0.5, 0.8] {
            for pol in [Polarity::OnCenter, Polarity::OffCenter] {
                let k = dog_kernel(&DogParams::new(sigma, ratio, pol).unwrap(), 3.0).unwrap();
                let s = k.sum();
                worst = worst.max(s.abs());
                c.check(s.abs() < 1e-10, || {
                    format!("DoG sigma {sigma} ratio {ratio}: kernel sum {s:e}")
                });
            }
        }
    }
    c.note(format!("DoG kernels: max |sum| {worst:.1e} over 36 kernels"));
}

fn random_image(w: usize, h: usize, seed: u64) -> Image2D {
    uniform(w, h, &mut rng::stream(seed, 0))
}

fn uniform(w: usize, h: usize, r: &mut impl Rng) -> Image2D {
    Image2D::new(w, h, (0..w * h).map(|_| r.random::<f64>()).collect()).unwrap()
}

fn geometric_mean_bounds(c: &mut Checks) {
    let f = make_bank(
        &[2.0],
        &[vec![0.0, 3.0, 6.0]],
        &[FilterKind::Line],
        &BankOptions::default(),
    )
    .unwrap()
    .remove(0);
    let singles: Vec<CosfireFilter> = f
        .tuples()
        .iter()
        .map(|t| CosfireFilter::new(vec![*t], f.kind(), *f.dog(), *f.blur(), f.config_center()).unwrap())
        .collect();
    let mut worst_scale: f64 = 0.0;
    for seed in 0..20u64 {
        let img = random_image(40, 40, seed);
        let out = respond(&img, &f);
        let factors: Vec<Image2D> = singles.iter().map(|s| respond(&img, s)).collect();
        let mut bad = 0;
        for i in 0..out.data().len() {
            let lo = factors.iter().map(|m| m.data()[i]).fold(f64::INFINITY, f64::min);
            let hi = factors.iter().map(|m| m.data()[i]).fold(f64::NEG_INFINITY, f64::max);
            let v = out.data()[i];
            let above = v > hi.max(0.0) * (1.0 + 1e-12) + 1e-300;
            let below = lo > 0.0 && v < lo * (1.0 - 1e-12);
            bad += usize::from(above || below || v < 0.0);
        }
        c.check(bad == 0, || {
            format!("seed {seed}: {bad} pixels outside [min, max] of the tuple factors")
        });

        let gain = 0.05 + 0.9 * rng::stream(seed, 1).random::<f64>();
        let scaled = respond(&img.map(|v| gain * v), &f);
        let dev = out
            .data()
            .iter()
            .zip(scaled.data())
            .map(|(p, q)| (gain * p - q).abs())
            .fold(0.0, f64::max);
        worst_scale = worst_scale.max(dev);
        c.check(dev < 1e-6, || {
            format!("seed {seed}: gain {gain:.3} changes response by {dev:e}")
        });
    }
    c.note(format!(
        "geometric mean: bounds hold on 20 images; max scaling deviation {worst_scale:.1e}"
    ));
}

fn cope_self_match(c: &mut Checks) {
    let params = GammatoneParams {
        n_channels: 32,
        ..GammatoneParams::default()
    };
    let sr = 16_000;
    let hop = params.frame_samples(sr).1;
    let pad = |sig: &[f64], before: usize| {
        let mut s = vec![0.0; before];
        s.extend_from_slice(sig);
        s.extend(std::iter::repeat_n(0.0, 40 * hop));
        AudioClip::new(s, sr).unwrap()
    };
    let mut worst: f64 = 0.0;
    for class in 0..3 {
        let sig = Template::of_class(class).render(sr, 0.0);
        let tf = gammatonegram(&pad(&sig, 40 * hop), &params).unwrap();
        let f = configure_cope(&tf, &CopeConfig::default(), "x").unwrap();
        let Some(t0) = (0..tf.frames()).max_by(|&a, &b| {
            cope_response(&tf, &f, a)
                .total_cmp(&cope_response(&tf, &f, b))
                .then(b.cmp(&a))
        }) else {
            continue;
        };
        let r = cope_response(&tf, &f, t0);
        worst = worst.max((r - 1.0).abs());
        c.check((r - 1.0).abs() < 1e-6, || format!("class {class}: self response {r}"));
        for k in [1usize, 5, 11] {
            let ts = gammatonegram(&pad(&sig, (40 + k) * hop), &params).unwrap();
            let r = cope_response(&ts, &f, t0 + k);
            worst = worst.max((r - 1.0).abs());
            c.check((r - 1.0).abs() < 1e-6, || {
                format!("class {class}, shift {k}: response {r}")
            });
        }
        for gain in [0.01, 0.3, 7.0] {
            let tg = gammatonegram(&pad(&sig, 40 * hop).scaled(gain), &params).unwrap();
            let r = cope_response(&tg, &f, t0);
            worst = worst.max((r - 1.0).abs());
            c.check((r - 1.0).abs() < 1e-6, || {
                format!("class {class}, gain {gain}: response {r}")
            });
        }
    }
    c.note(format!("COPE self/shift/gain responses: max |r - 1| {worst:.1e}"));
}

fn mi_bounds(c: &mut Checks) {
    let mut r = rng::stream(BENCH_SEED, 3);
    for case in 0..200 {
        let nx = r.random_range(1..7usize);
        let ny = r.random_range(1..5usize);
        let table: Vec<Vec<usize>> = (0..nx)
            .map(|_| (0..ny).map(|_| r.random_range(0..20usize)).collect())
            .collect();
        if table.iter().flatten().sum::<usize>() == 0 {
            continue;
        }
        let mi = mi_from_counts(&table);
        let hx = entropy(&table.iter().map(|row| row.iter().sum()).collect::<Vec<usize>>());
        let hy = entropy(
            &(0..ny)
                .map(|j| table.iter().map(|row| row[j]).sum())
                .collect::<Vec<usize>>(),
        );
        c.check(mi >= -1e-12 && mi <= hx.min(hy) + 1e-12, || {
            format!("table {case}: MI {mi} outside [0, min({hx}, {hy})]")
        });
    }
    for n in [64usize, 100, 1000] {
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let copy: Vec<f64> = labels.iter().map(|&v| v as f64 * 3.0 - 1.0).collect();
        let mi = mutual_information(&copy, &labels, 2).unwrap();
        c.check((mi - 1.0).abs() < 1e-9, || {
            format!("copy of {n} balanced labels: MI {mi}")
        });
        let x: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let a = mutual_information(&x, &labels, 16).unwrap();
        let b = mutual_information(&x.iter().map(|v| v.exp() * 5.0 - 2.0).collect::<Vec<_>>(), &labels, 16).unwrap();
        c.check(a.to_bits() == b.to_bits(), || {
            format!("monotone transform changed MI: {a} vs {b}")
        });
        c.check((0.0..=1.0 + 1e-12).contains(&a), || format!("MI {a} outside [0, H(Y)]"));
    }
    c.note("MI: 200 random tables within [0, min(H(X), H(Y))]; copies give 1 bit".into());
}

// ---------------------------------------------------------------------------
// Criterion 4: oracle equivalence

fn criterion_4() -> bool {
    let t0 = Instant::now();
    let mut c = Checks::default();
    convolution_oracle(&mut c);
    configure_oracle(&mut c);
    peaks_oracle(&mut c);
    matching_oracle(&mut c);
    wrapper_oracle(&mut c);
    report(4, "oracle equivalence", t0, &c)
}

fn fold(mut i: isize, n: isize) -> isize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i;
        }
    }
}

/// Direct evaluation of `Σ k(i, j) img(x + cx − i, y + cy − j)`.
fn convolve_by_definition(img: &Image2D, k: &Image2D, border: BorderMode) -> Image2D {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (cx, cy) = (k.width() as isize / 2, k.height() as isize / 2);
    Image2D::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for j in 0..k.height() as isize {
            for i in 0..k.width() as isize {
                let (sx, sy) = (x as isize + cx - i, y as isize + cy - j);
                let v = match border {
                    BorderMode::Zero if sx < 0 || sy < 0 || sx >= w || sy >= h => 0.0,
                    BorderMode::Zero => img.get(sx as usize, sy as usize),
                    BorderMode::Replicate => img.get(sx.clamp(0, w - 1) as usize, sy.clamp(0, h - 1) as usize),
                    BorderMode::Reflect => img.get(fold(sx, w) as usize, fold(sy, h) as usize),
                };
                acc += k.get(i as usize, j as usize) * v;
            }
        }
        acc
    })
}

fn max_abs_diff(a: &Image2D, b: &Image2D) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn convolution_oracle(c: &mut Checks) {
    let mut worst: f64 = 0.0;
    for seed in 0..6u64 {
        let img = random_image(16, 16, 100 + seed);
        let mut r = rng::stream(seed, 9);
        let (kw, kh) = [(3, 3), (5, 5), (7, 3), (1, 9), (11, 11), (5, 1)][seed as usize];
        let k = uniform(kw, kh, &mut r).map(|v| v - 0.5);
        for border in [BorderMode::Zero, BorderMode::Replicate, BorderMode::Reflect] {
            let got = convolve(&img, &k, border).unwrap();
            let d = max_abs_diff(&got, &convolve_by_definition(&img, &k, border));
            worst = worst.max(d);
            c.check(d < 1e-9, || format!("convolve {kw}x{kh} {border:?}: deviation {d:e}"));
        }
        let kx: Vec<f64> = (0..5).map(|_| r.random::<f64>()).collect();
        let ky: Vec<f64> = (0..3).map(|_| r.random::<f64>()).collect();
        let outer = Image2D::from_fn(5, 3, |i, j| kx[i] * ky[j]);
        for border in [BorderMode::Zero, BorderMode::Replicate, BorderMode::Reflect] {
            let got = convolve_separable(&img, &kx, &ky, border).unwrap();
            let d = max_abs_diff(&got, &convolve_by_definition(&img, &outer, border));
            worst = worst.max(d);
            c.check(d < 1e-9, || format!("separable {border:?}: deviation {d:e}"));
        }
    }
    c.note(format!("convolution vs definition on 16x16: max deviation {worst:.1e}"));
}

/// Bars through the center are found where the circle crosses the bar axis.
fn configure_oracle(c: &mut Checks) {
    let dog = DogParams::with_sigma(2.4, Polarity::OnCenter).unwrap();
    for (angle, expect) in [(0.0, [0.0, PI]), (PI / 2.0, [PI / 2.0, 3.0 * PI / 2.0])] {
        let img = bar(64, 64, (32.0, 32.0), angle, 4.8, true);
        let f = configure(&img, (32, 32), &[0.0, 4.0], &dog, 0.5).unwrap();
        let got: Vec<(f64, f64)> = f.tuples().iter().map(|t| (t.rho, t.phi)).collect();
        let want = [(0.0, 0.0), (4.0, expect[0]), (4.0, expect[1])];
        let same = got.len() == 3
            && want
                .iter()
                .all(|w| got.iter().any(|g| (g.0 - w.0).abs() < 1e-9 && (g.1 - w.1).abs() < 1e-6));
        c.check(same, || {
            format!("bar at {angle:.3} rad: tuples {got:?}, expected {want:?}")
        });
    }
    for k in 0..8 {
        let angle = k as f64 * PI / 8.0;
        let img = bar(64, 64, (32.0, 32.0), angle, 4.8, true);
        let f = configure(&img, (32, 32), &[0.0, 6.0], &dog, 0.5).unwrap();
        let step = 1.0 / 6.0;
        for t in f.tuples().iter().filter(|t| t.rho > 0.0) {
            let d = (t.phi - angle).rem_euclid(PI);
            let off = d.min(PI - d);
            c.check(off <= step, || {
                format!(
                    "bar at {angle:.3} rad: tuple angle {:.4} is {off:.4} rad off axis",
                    t.phi
                )
            });
        }
        c.check(f.tuples().iter().filter(|t| t.rho > 0.0).count() == 2, || {
            format!("bar at {angle:.3} rad: {} tuples on the circle", f.tuples().len() - 1)
        });
    }
    c.note("configure: axis-aligned bars give the exact tuple sets; oblique bars within one angular step".into());
}

/// Peaks by definition: strict 8-neighbour maxima above the floor; a
/// candidate survives unless a surviving, earlier-ordered candidate lies
/// strictly closer than the minimum distance on both axes.
fn exhaustive_peaks(rows: &[Vec<f64>], floor: f64, md: (usize, usize)) -> Vec<EnergyPeak> {
    let (nt, nc) = (rows.len(), rows[0].len());
    let global = rows.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    if global <= 0.0 {
        return vec![];
    }
    let mut cands = Vec::new();
    for t in 0..nt {
        for ch in 0..nc {
            let v = rows[t][ch];
            let mut strict = true;
            for tt in t.saturating_sub(1)..=(t + 1).min(nt - 1) {
                for cc in ch.saturating_sub(1)..=(ch + 1).min(nc - 1) {
                    if (tt, cc) != (t, ch) && rows[tt][cc] >= v {
                        strict = false;
                    }
                }
            }
            if strict && v > 0.0 && v >= floor * global {
                cands.push(EnergyPeak {
                    frame: t,
                    channel: ch,
                    energy: v,
                });
            }
        }
    }
    let key = |p: &EnergyPeak| (std::cmp::Reverse(p.energy.to_bits()), p.frame, p.channel);
    cands.sort_by_key(key);
    let mut memo: Vec<Option<bool>> = vec![None; cands.len()];
    fn survives(i: usize, c: &[EnergyPeak], md: (usize, usize), memo: &mut Vec<Option<bool>>) -> bool {
        if let Some(v) = memo[i] {
            return v;
        }
        let v = !(0..i).any(|j| {
            c[j].frame.abs_diff(c[i].frame) < md.0
                && c[j].channel.abs_diff(c[i].channel) < md.1
                && survives(j, c, md, memo)
        });
        memo[i] = Some(v);
        v
    }
    (0..cands.len())
        .filter(|&i| survives(i, &cands, md, &mut memo))
        .map(|i| cands[i])
        .collect()
}

fn peaks_oracle(c: &mut Checks) {
    let mut r = rng::stream(BENCH_SEED, 4);
    let mut total = 0;
    for case in 0..64 {
        let rows: Vec<Vec<f64>> = (0..32)
            .map(|_| (0..16).map(|_| f64::from(r.random_range(0u8..6))).collect())
            .collect();
        let floor = r.random_range(0.05..0.95);
        let md = (r.random_range(1..5usize), r.random_range(1..4usize));
        let tf = TimeFrequencyMap::from_rows(&rows).unwrap();
        let got = detect_peaks(&tf, floor, md).unwrap();
        let want = exhaustive_peaks(&rows, floor, md);
        total += want.len();
        c.check(got == want, || {
            format!("case {case}: {} peaks, oracle {}", got.len(), want.len())
        });
    }
    c.note(format!("peaks vs exhaustive scan: 64 maps of 32x16, {total} peaks"));
}

/// Best one-to-one matching by lexicographically largest sorted IoU list.
fn exhaustive_matching(pred: &[Event], gt: &[Event]) -> Vec<f64> {
    fn go(g: usize, pred: &[Event], gt: &[Event], used: &mut Vec<bool>, cur: &mut Vec<f64>, best: &mut Vec<f64>) {
        if g == gt.len() {
            let mut s = cur.clone();
            s.sort_by(|a, b| b.total_cmp(a));
            if s.iter()
                .zip(best.iter())
                .find(|(a, b)| a != b)
                .map_or(s.len() > best.len(), |(a, b)| a > b)
            {
                *best = s;
            }
            return;
        }
        go(g + 1, pred, gt, used, cur, best);
        for p in 0..pred.len() {
            let v = iou(&pred[p], &gt[g]);
            if !used[p] && v > 0.0 {
                used[p] = true;
                cur.push(v);
                go(g + 1, pred, gt, used, cur, best);
                cur.pop();
                used[p] = false;
            }
        }
    }
    let mut best = Vec::new();
    go(0, pred, gt, &mut vec![false; pred.len()], &mut Vec::new(), &mut best);
    best
}

fn random_event(r: &mut impl Rng) -> Event {
    let s: f64 = r.random_range(0.0..4.0);
    Event::new(s, s + r.random_range(0.1..1.5), "x")
}

fn matching_oracle(c: &mut Checks) {
    let mut r = rng::stream(BENCH_SEED, 5);
    for case in 0..500 {
        let np = r.random_range(0..4usize);
        let ng = r.random_range(0..4usize);
        let pred: Vec<Event> = (0..np).map(|_| random_event(&mut r)).collect();
        let gt: Vec<Event> = (0..ng).map(|_| random_event(&mut r)).collect();
        let mut got: Vec<f64> = match_events(&pred, &gt).iter().map(|m| m.2).collect();
        got.sort_by(|a, b| b.total_cmp(a));
        let want = exhaustive_matching(&pred, &gt);
        c.check(got == want, || format!("case {case}: matched {got:?}, oracle {want:?}"));
    }
    c.note("event matching vs exhaustive search: 500 random cases of up to 3 events".into());
}

/// Lookup-table classifier: majority label per distinct value tuple on even
/// blocks of four rows, scored on odd blocks.
fn table_eval(x: &[Vec<f64>], y: &[usize], subset: &[usize]) -> f64 {
    let key = |i: usize| subset.iter().map(|&j| x[i][j].to_bits()).collect::<Vec<u64>>();
    let mut votes: BTreeMap<Vec<u64>, [usize; 2]> = BTreeMap::new();
    for i in (0..y.len()).filter(|i| (i / 4) % 2 == 0) {
        votes.entry(key(i)).or_default()[y[i]] += 1;
    }
    let test: Vec<usize> = (0..y.len()).filter(|i| (i / 4) % 2 == 1).collect();
    let hits = test
        .iter()
        .filter(|&&i| {
            let v = votes.get(&key(i)).copied().unwrap_or([0, 0]);
            usize::from(v[1] > v[0]) == y[i]
        })
        .count();
    hits as f64 / test.len() as f64
}

fn wrapper_oracle(c: &mut Checks) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for rep in 0..25usize {
        for a in 0..2usize {
            for b in 0..2usize {
                x.push(vec![a as f64, b as f64, 1.0, ((rep * 7 + a * 3 + b) % 5) as f64, 0.0]);
                y.push(a ^ b);
            }
        }
    }
    let d = x[0].len();
    let mut best = (f64::NEG_INFINITY, vec![]);
    for mask in 1u32..(1 << d) {
        let s: Vec<usize> = (0..d).filter(|j| mask & (1 << j) != 0).collect();
        if s.len() <= 2 {
            let a = table_eval(&x, &y, &s);
            if a > best.0 + 1e-12 {
                best = (a, s);
            }
        }
    }
    c.check(best.1 == vec![0, 1], || format!("brute force picked {:?}", best.1));
    let res = greedy_wrapper(d, |s| Ok(table_eval(&x, &y, s)), 2, 1).unwrap();
    let mut got = res.selected_indices.clone();
    got.sort();
    c.check(got == best.1, || {
        format!("wrapper picked {:?}, brute force {:?}", res.selected_indices, best.1)
    });
    c.check(res.scores.last() == Some(&best.0), || {
        format!("wrapper score {:?}, brute force {}", res.scores, best.0)
    });
    c.note(format!(
        "wrapper on XOR: {:?} with accuracy {:?} (brute force {:.2})",
        res.selected_indices, res.scores, best.0
    ));

    for case in 0..200u64 {
        let mut r = rng::stream(BENCH_SEED, 1000 + case);
        let d = r.random_range(2..7usize);
        let max_k = r.random_range(1..=d);
        let patience = r.random_range(0..3usize);
        let eval = |s: &[usize]| {
            let mask = s.iter().fold(0u64, |m, &j| m | 1 << j);
            f64::from(rng::stream(case, mask).random_range(0..11u8)) / 10.0
        };
        let got = greedy_wrapper(d, |s| Ok(eval(s)), max_k, patience).unwrap();
        let (picks, scores) = forward_selection(d, &eval, max_k, patience);
        c.check(got.selected_indices == picks && got.scores == scores, || {
            format!(
                "case {case}: wrapper {:?} {:?}, reference {picks:?} {scores:?}",
                got.selected_indices, got.scores
            )
        });
    }
    c.note("wrapper vs reference forward selection: 200 random set functions".into());
}

/// Plain forward selection: add the best candidate (first on ties) each
/// round, give up after `patience + 1` rounds without a gain above 1e-6 and
/// keep the prefix ending at the last gain.
fn forward_selection(
    d: usize,
    eval: &dyn Fn(&[usize]) -> f64,
    max_k: usize,
    patience: usize,
) -> (Vec<usize>, Vec<f64>) {
    let mut picks = Vec::new();
    let mut scores = Vec::new();
    let (mut best, mut keep, mut stale) = (f64::NEG_INFINITY, 0, 0);
    while picks.len() < max_k {
        let mut round: Option<(usize, f64)> = None;
        for j in (0..d).filter(|j| !picks.contains(j)) {
            let mut s = picks.clone();
            s.push(j);
            let v = eval(&s);
            if round.is_none_or(|(_, b)| v > b) {
                round = Some((j, v));
            }
        }
        let (j, v) = round.unwrap();
        picks.push(j);
        scores.push(v);
        if v > best + 1e-6 {
            best = v;
            keep = picks.len();
            stale = 0;
        } else {
            stale += 1;
            if stale > patience {
                break;
            }
        }
    }
    picks.truncate(keep);
    scores.truncate(keep);
    (picks, scores)
}

// ---------------------------------------------------------------------------
// Criterion 5: determinism

fn criterion_5() -> bool {
    let t0 = Instant::now();
    let mut c = Checks::default();
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images_ds");
    write_image_dataset(&images);
    let cfg = tmp.path().join("small.toml");
    std::fs::write(
        &cfg,
        "seed = 11\n[synth]\nnPerClass = 2\nsnrLevels = [5.0, -5.0]\n[gammatone]\nnChannels = 32\n\
         [filters]\nsigmas = [2.0]\nradii = [[0.0, 2.0, 4.0]]\n",
    )
    .unwrap();
    let runs: Vec<(String, Vec<&str>)> = vec![
        ("jobs-1-a".into(), vec!["--jobs", "1"]),
        ("jobs-1-b".into(), vec!["--jobs", "1"]),
        ("jobs-4".into(), vec!["--jobs", "4"]),
    ];
    let mut outputs = Vec::new();
    for (name, jobs) in &runs {
        let dir = tmp.path().join(name);
        std::fs::create_dir_all(&dir).unwrap();
        let ok = pipeline(&dir, &cfg, &images, jobs);
        c.check(ok, || format!("{name}: pipeline command failed"));
        outputs.push(collect_files(&dir));
    }
    let reference = &outputs[0];
    c.note(format!("{} output files per run, 3 runs", reference.len()));
    c.check(reference.len() >= 20, || {
        format!("only {} output files", reference.len())
    });
    for (run, files) in runs.iter().zip(&outputs).skip(1) {
        let names_a: Vec<&PathBuf> = reference.keys().collect();
        let names_b: Vec<&PathBuf> = files.keys().collect();
        c.check(names_a == names_b, || format!("{}: different output file sets", run.0));
        for (p, bytes) in reference {
            let same = files.get(p) == Some(bytes);
            c.check(same, || format!("{}: {} differs from jobs-1-a", run.0, p.display()));
        }
    }
    report(5, "byte-identical outputs across reruns and --jobs", t0, &c)
}

fn cli(args: &[&str], global: &[&str]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_protofeat"))
        .args(global)
        .args(args)
        .output()
        .expect("spawn protofeat");
    if !out.status.success() {
        eprintln!(
            "protofeat {} {}: {}",
            global.join(" "),
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    out.status.success()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn write_image_dataset(root: &Path) {
    for sub in ["images", "1st_manual", "mask"] {
        std::fs::create_dir_all(root.join(sub)).unwrap();
    }
    for (i, (angle, thick)) in [(0.5, 4.0), (2.1, 5.0)].into_iter().enumerate() {
        let id = format!("{:02}", i + 1);
        let mut r = rng::stream(5, i as u64);
        let b = bar(72, 72, (36.0, 36.0), angle, thick, false);
        let img = b
            .zip_map(&uniform(72, 72, &mut r), |v, u| 0.3 + 0.4 * v + 0.02 * (u - 0.5))
            .unwrap();
        let truth = b.map(|v| if v < 0.5 { 1.0 } else { 0.0 });
        let mask = Image2D::from_fn(72, 72, |x, y| {
            let d = ((x as f64 - 36.0).powi(2) + (y as f64 - 36.0).powi(2)).sqrt();
            if d < 33.0 {
                1.0
            } else {
                0.0
            }
        });
        save_png(&img, root.join("images").join(format!("{id}_test.png")), false).unwrap();
        save_binary_png(&truth, root.join("1st_manual").join(format!("{id}_manual1.png"))).unwrap();
        save_binary_png(&mask, root.join("mask").join(format!("{id}_test_mask.png"))).unwrap();
    }
}

fn pipeline(dir: &Path, cfg: &Path, images: &Path, jobs: &[&str]) -> bool {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let mut global = vec!["--config", path_str(cfg)];
    global.extend_from_slice(jobs);
    let audio = p("audio");
    let image0 = images.join("images").join("01_test.png");
    let mask0 = images.join("mask").join("01_test_mask.png");
    let steps: Vec<Vec<String>> = vec![
        vec!["synth", "audio", "--out", &audio],
        vec!["cope", "configure", "--dataset", &audio, "--out", &p("cope_bank.json")],
        vec![
            "cope",
            "train",
            "--dataset",
            &audio,
            "--bank",
            &p("cope_bank.json"),
            "--out",
            &p("model.json"),
        ],
        vec![
            "cope",
            "detect",
            "--bank",
            &p("cope_bank.json"),
            "--model",
            &p("model.json"),
            "--input",
            &audio,
            "--out",
            &p("events.csv"),
        ],
        vec![
            "cope",
            "evaluate",
            "--bank",
            &p("cope_bank.json"),
            "--model",
            &p("model.json"),
            "--dataset",
            &audio,
            "--out",
            &p("cope_eval.csv"),
            "--events",
            &p("eval_events.csv"),
        ],
        vec![
            "cope",
            "features",
            "--bank",
            &p("cope_bank.json"),
            "--dataset",
            &audio,
            "--out",
            &p("audio_features.csv"),
        ],
        vec![
            "featsel",
            "rank",
            "--features",
            &p("audio_features.csv"),
            "--out",
            &p("rank.json"),
        ],
        vec![
            "featsel",
            "wrap",
            "--features",
            &p("audio_features.csv"),
            "--out",
            &p("wrap.json"),
        ],
        vec![
            "render",
            "tfmap",
            "--input",
            &format!("{audio}/clips/clip_0000.wav"),
            "--out",
            &p("tfmap.png"),
        ],
        vec!["bcosfire", "configure", "--out", &p("bank.json")],
        vec![
            "bcosfire",
            "respond",
            "--bank",
            &p("bank.json"),
            "--image",
            path_str(&image0),
            "--mask",
            path_str(&mask0),
            "--out",
            &p("response.json"),
        ],
        vec![
            "bcosfire",
            "segment",
            "--bank",
            &p("bank.json"),
            "--input",
            path_str(images),
            "--out",
            &p("segmented"),
        ],
        vec![
            "bcosfire",
            "evaluate",
            "--bank",
            &p("bank.json"),
            "--dataset",
            path_str(images),
            "--sweep",
            "--out",
            &p("image_eval.csv"),
        ],
        vec![
            "bcosfire",
            "features",
            "--bank",
            &p("bank.json"),
            "--dataset",
            path_str(images),
            "--samples-per-image",
            "300",
            "--out",
            &p("image_features.csv"),
        ],
        vec![
            "featsel",
            "wrap",
            "--features",
            &p("image_features.csv"),
            "--out",
            &p("image_wrap.json"),
        ],
        vec![
            "render",
            "responsemap",
            "--response",
            &p("response.json"),
            "--out",
            &p("response.png"),
        ],
        vec![
            "render",
            "responsemap",
            "--bank",
            &p("bank.json"),
            "--image",
            path_str(&image0),
            "--out",
            &p("response_direct.png"),
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(str::to_string).collect())
    .collect();
    steps
        .iter()
        .all(|s| cli(&s.iter().map(String::as_str).collect::<Vec<_>>(), &global))
}

fn collect_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}
