use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use nframe::analysis::{
    accuracy_correlation, checkpoint_series, frame_cka, mle_id, stable_rank_curve, twonn_id, vary_k_sweep,
    IdEstimate, StableRankCurve, SyntheticManifold, MLE_DEFAULT_K, TWONN_DEFAULT_DISCARD,
};
use nframe::frame::{ring_centers, rotation_span_spectrum, FrameConfig, FrameKind};
use nframe::image_ops::synth::gaussian_blobs;
use nframe::image_ops::{load_image_dir, Image, ImageSet};
use nframe::linalg::{mc_residual_stable_rank, mp_residual_coefficient, mp_weight_coefficient};
use nframe::report::{self, ProbeSummary, Series};
use nframe::runtime::{
    build_fixture, load_bundle_dir, ActivationCache, FixtureSpec, ModelBundle,
};
use nframe::{Error, Result};
use serde_json::json;

use crate::config::{parse_frames, RunConfig};
use crate::RunArgs;

/// A run with flags and config file merged.
pub struct Run {
    pub models: Vec<PathBuf>,
    pub images: PathBuf,
    pub frames: Vec<FrameKind>,
    pub frame_config: FrameConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub plot: bool,
}

pub fn resolve(args: RunArgs, file: &RunConfig) -> Result<Run> {
    let models = if args.model.is_empty() {
        file.model.clone().unwrap_or_default()
    } else {
        args.model
    };
    if models.is_empty() {
        return Err(Error::Config("no --model given".into()));
    }
    let images = args
        .images
        .or_else(|| file.images.clone())
        .ok_or_else(|| Error::Config("no --images directory given".into()))?;
    let frame_specs = if !args.frame.is_empty() {
        args.frame
    } else {
        file.frames.clone().unwrap_or_else(|| vec!["augmentation".into()])
    };
    let frames = parse_frames(&frame_specs)?;
    let mut frame_config = match &args.frame_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            FrameConfig::from_toml(&text)?
        }
        None => file.frame.clone().unwrap_or_default(),
    };
    if let Some(dir) = args.frame_dir.or_else(|| file.frame_dir.clone()) {
        frame_config.external_root = Some(dir);
    }
    let seed = match args.seed.or(file.seed) {
        Some(s) => s,
        None if frames.iter().any(|k| k.is_stochastic()) => {
            return Err(Error::Config("noise and rotated frames need --seed".into()));
        }
        None => 0,
    };
    let out = args
        .out
        .or_else(|| file.out.clone())
        .ok_or_else(|| Error::Config("no --out directory given".into()))?;
    Ok(Run {
        models,
        images,
        frames,
        frame_config,
        seed,
        out,
        plot: args.plot || file.plot.unwrap_or(false),
    })
}

fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<String> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(path.display().to_string())
}

/// One compact JSON line, then a table for people.
fn emit(result: serde_json::Value, table: &str) {
    println!("{result}");
    print!("{table}");
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn single_model(run: &Run) -> Result<ModelBundle> {
    match run.models.as_slice() {
        [one] => load_bundle_dir(one),
        many => Err(Error::Config(format!("this command takes one --model, got {}", many.len()))),
    }
}

fn single_frame(run: &Run) -> Result<FrameKind> {
    match run.frames.as_slice() {
        [one] => Ok(*one),
        many => Err(Error::Config(format!("this command takes one frame kind, got {}", many.len()))),
    }
}

fn load_images(run: &Run, bundle: &ModelBundle) -> Result<ImageSet> {
    let set = load_image_dir(&run.images, Some(bundle.input_dims()))?;
    if set.images.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{} has {} decodable images, need at least 2",
            run.images.display(),
            set.images.len()
        )));
    }
    Ok(set)
}

fn curve_table(curves: &[StableRankCurve]) -> String {
    let mut out = String::new();
    for c in curves {
        let _ = writeln!(out, "{} / {} frame (k = {}, {} images)", c.model, c.frame, c.k, c.images.len());
        let _ = writeln!(out, "  {:<5} {:<24} {:>10} {:>10} {:>10} {:>4}", "layer", "name", "mean", "ci_low", "ci_high", "n");
        for t in &c.taps {
            let _ = writeln!(
                out,
                "  {:<5} {:<24} {:>10} {:>10} {:>10} {:>4}",
                t.layer_index,
                t.layer_name,
                fmt_opt(t.mean),
                fmt_opt(t.ci_low),
                fmt_opt(t.ci_high),
                t.n
            );
        }
        for s in &c.skipped {
            let _ = writeln!(out, "  skipped {}: {}", s.image, s.reason);
        }
    }
    out
}

fn chart(title: &str, names: &[String], curves: &[StableRankCurve], label: impl Fn(&StableRankCurve) -> String) -> String {
    let series: Vec<Series> = curves
        .iter()
        .map(|c| Series {
            name: label(c),
            values: c.means(),
        })
        .collect();
    report::line_chart(title, "stable rank", names, &series)
}

pub fn probe(run: &Run) -> Result<()> {
    let bundle = single_model(run)?;
    let set = load_images(run, &bundle)?;
    let curves = run
        .frames
        .iter()
        .map(|&kind| stable_rank_curve(&bundle, &set.images, kind, &run.frame_config, run.seed))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = ProbeSummary::new(bundle.name(), run.seed, &curves);
    summary.unreadable = set.skipped.clone();
    let mut outputs = vec![
        write_output(&run.out, "results.csv", &report::results_csv(&curves)?)?,
        write_output(&run.out, "summary.json", &report::to_json_bytes(&summary)?)?,
    ];
    if run.plot {
        let svg = chart(
            &format!("{}: stable rank by layer", bundle.name()),
            &bundle.manifest().layer_names(),
            &curves,
            |c| c.frame.to_string(),
        );
        outputs.push(write_output(&run.out, "curve.svg", svg.as_bytes())?);
    }
    let rows: usize = curves.iter().map(|c| c.images.len() * c.taps.len()).sum();
    emit(
        json!({
            "command": "probe",
            "model": bundle.name(),
            "images": set.images.len(),
            "rows": rows,
            "outputs": outputs,
        }),
        &curve_table(&curves),
    );
    Ok(())
}

pub fn cka(run: &Run) -> Result<()> {
    let [a, b] = run.models.as_slice() else {
        return Err(Error::Config(format!("cka takes exactly two --model flags, got {}", run.models.len())));
    };
    let kind = single_frame(run)?;
    let (bundle_a, bundle_b) = (load_bundle_dir(a)?, load_bundle_dir(b)?);
    let set = load_images(run, &bundle_a)?;
    let report = frame_cka(&bundle_a, &bundle_b, &set.images, kind, &run.frame_config, run.seed)?;
    let outputs = vec![
        write_output(&run.out, "cka.csv", &report::cka_csv(&report)?)?,
        write_output(&run.out, "cka.json", &report::to_json_bytes(&report)?)?,
        write_output(&run.out, "cka.svg", report::cka_heatmap(&report).as_bytes())?,
    ];
    let mut table = format!("frame CKA, {} (rows) vs {} (columns), {kind} frame\n", report.model_a, report.model_b);
    let _ = write!(table, "  {:<20}", "");
    for l in &report.layers_b {
        let _ = write!(table, " {:>8}", l.layer_index);
    }
    table.push('\n');
    for (i, l) in report.layers_a.iter().enumerate() {
        let _ = write!(table, "  {:<20}", l.layer_name);
        for v in &report.cka[i] {
            let _ = write!(table, " {:>8}", fmt_opt(*v));
        }
        table.push('\n');
    }
    emit(
        json!({
            "command": "cka",
            "model_a": report.model_a,
            "model_b": report.model_b,
            "skipped": report.skipped.len(),
            "outputs": outputs,
        }),
        &table,
    );
    Ok(())
}

pub fn series(run: &Run) -> Result<()> {
    let kind = single_frame(run)?;
    let bundles = run.models.iter().map(|m| load_bundle_dir(m)).collect::<Result<Vec<_>>>()?;
    let set = load_images(run, &bundles[0])?;
    let curves = checkpoint_series(&bundles, &set.images, kind, &run.frame_config, run.seed)?;
    let mut outputs = vec![write_output(&run.out, "series.csv", &report::curves_csv(&curves)?)?];
    if run.plot {
        let svg = chart("stable rank over checkpoints", &bundles[0].manifest().layer_names(), &curves, |c| {
            c.model.clone()
        });
        outputs.push(write_output(&run.out, "series.svg", svg.as_bytes())?);
    }
    let degenerate: Vec<&str> = curves
        .iter()
        .filter(|c| c.has_degenerate_layers())
        .map(|c| c.model.as_str())
        .collect();
    emit(
        json!({
            "command": "series",
            "checkpoints": curves.iter().map(|c| c.model.as_str()).collect::<Vec<_>>(),
            "degenerate": degenerate,
            "outputs": outputs,
        }),
        &curve_table(&curves),
    );
    Ok(())
}

pub fn correlate(run: &Run) -> Result<()> {
    let kind = single_frame(run)?;
    let bundles = run.models.iter().map(|m| load_bundle_dir(m)).collect::<Result<Vec<_>>>()?;
    let set = load_images(run, &bundles[0])?;
    let curves = bundles
        .iter()
        .map(|b| stable_rank_curve(b, &set.images, kind, &run.frame_config, run.seed))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<(Option<f64>, &StableRankCurve)> = bundles
        .iter()
        .zip(&curves)
        .map(|(b, c)| (b.manifest().top1_accuracy, c))
        .collect();
    let result = accuracy_correlation(&entries)?;
    let outputs = vec![write_output(&run.out, "correlation.json", &report::to_json_bytes(&result)?)?];
    let mut table = format!("stable rank vs top-1 accuracy over {} models\n", result.models.len());
    for t in &result.taps {
        let _ = writeln!(
            table,
            "  {:<5} {:<24} pearson {:>8} spearman {:>8} (n = {})",
            t.layer_index,
            t.layer_name,
            fmt_opt(t.pearson),
            fmt_opt(t.spearman),
            t.n_models
        );
    }
    emit(json!({ "command": "correlate", "models": result.models, "outputs": outputs }), &table);
    Ok(())
}

pub fn sweep_k(run: &Run, k_list: &[usize]) -> Result<()> {
    let bundle = single_model(run)?;
    let kind = single_frame(run)?;
    let set = load_images(run, &bundle)?;
    let curves = vary_k_sweep(&bundle, &set.images, kind, &run.frame_config, k_list, run.seed)?;
    let mut outputs = vec![write_output(&run.out, "sweep.csv", &report::curves_csv(&curves)?)?];
    if run.plot {
        let svg = chart(
            &format!("{}: {kind} frame, varying k", bundle.name()),
            &bundle.manifest().layer_names(),
            &curves,
            |c| format!("k = {}", c.k),
        );
        outputs.push(write_output(&run.out, "sweep.svg", svg.as_bytes())?);
    }
    emit(
        json!({ "command": "sweep-k", "model": bundle.name(), "k": k_list, "outputs": outputs }),
        &curve_table(&curves),
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct IdimArgs {
    /// Model bundle whose tap activations are the points.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Layer index: 0 for input pixels, otherwise a tap id. Defaults to the
    /// last tap.
    #[arg(long)]
    pub tap: Option<usize>,
    /// Sample points from `line`, `plane` or `cube5` instead of a model.
    #[arg(long, conflicts_with_all = ["model", "images"])]
    pub synthetic: Option<String>,
    #[arg(long, default_value_t = 5000)]
    pub points: usize,
    #[arg(long, default_value_t = 10)]
    pub ambient: usize,
    /// `twonn`, `mle` or `both`.
    #[arg(long, default_value = "both")]
    pub estimator: String,
    #[arg(long, default_value_t = MLE_DEFAULT_K)]
    pub neighbors: usize,
    #[arg(long, default_value_t = TWONN_DEFAULT_DISCARD)]
    pub discard: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Tap activations of every image, read through the activation cache when
/// `NFRAME_CACHE` is set.
fn tap_points(bundle: &ModelBundle, images: &ImageSet, tap: usize) -> Result<Vec<Vec<f64>>> {
    let ids = bundle.manifest().layer_ids();
    let slot = ids
        .iter()
        .position(|&id| id == tap)
        .ok_or_else(|| Error::Config(format!("model {} has no layer {tap}; layers are {ids:?}", bundle.name())))?;
    if slot == 0 {
        return Ok(images.images.iter().map(|r| r.image.as_slice().to_vec()).collect());
    }
    let key = format!("{}-{}", bundle.name(), bundle.graph_digest());
    let mut cache = ActivationCache::from_env(&key)?;
    let mut points: Vec<Option<Vec<f64>>> = Vec::with_capacity(images.images.len());
    for r in &images.images {
        let hit = match &cache {
            Some(c) => c.get(&r.id, tap)?,
            None => None,
        };
        points.push(hit.map(|v| v.into_iter().map(f64::from).collect()));
    }
    let missing: Vec<usize> = (0..points.len()).filter(|&i| points[i].is_none()).collect();
    for chunk in missing.chunks(32) {
        let batch: Vec<&Image> = chunk.iter().map(|&i| &images.images[i].image).collect();
        let acts = bundle.forward_images(&batch)?;
        for (&i, mut per_tap) in chunk.iter().zip(acts) {
            let v = per_tap.swap_remove(slot - 1);
            if let Some(c) = cache.as_mut() {
                c.insert(&images.images[i].id, tap, &v)?;
                // Cached values are f32; reread them so hits and misses agree.
                points[i] = c.get(&images.images[i].id, tap)?.map(|v| v.into_iter().map(f64::from).collect());
            } else {
                points[i] = Some(v);
            }
        }
    }
    Ok(points.into_iter().map(|p| p.expect("every point filled")).collect())
}

pub fn idim(args: &IdimArgs) -> Result<()> {
    let (source, points) = match (&args.synthetic, &args.model) {
        (Some(name), _) => {
            let manifold: SyntheticManifold = name.parse()?;
            (format!("synthetic {name} in R^{}", args.ambient), manifold.sample(args.points, args.ambient, args.seed)?)
        }
        (None, Some(model)) => {
            let bundle = load_bundle_dir(model)?;
            let dir = args.images.as_ref().ok_or_else(|| Error::Config("--model needs --images".into()))?;
            let set = load_image_dir(dir, Some(bundle.input_dims()))?;
            let tap = args.tap.unwrap_or_else(|| *bundle.manifest().layer_ids().last().expect("input layer"));
            (format!("{} layer {tap}", bundle.name()), tap_points(&bundle, &set, tap)?)
        }
        (None, None) => return Err(Error::Config("idim needs --model or --synthetic".into())),
    };
    let estimates: Vec<IdEstimate> = match args.estimator.as_str() {
        "twonn" => vec![twonn_id(&points, args.discard)?],
        "mle" => vec![mle_id(&points, args.neighbors)?],
        "both" => vec![twonn_id(&points, args.discard)?, mle_id(&points, args.neighbors)?],
        other => return Err(Error::Config(format!("unknown estimator {other:?}"))),
    };
    let result = json!({ "command": "idim", "source": source, "estimates": estimates });
    let mut table = format!("intrinsic dimension of {source}\n");
    for e in &estimates {
        let _ = writeln!(table, "  {:<6} {:>8.4} ({} points)", e.estimator.name(), e.value, e.points);
    }
    if let Some(out) = &args.out {
        write_output(out, "idim.json", &report::to_json_bytes(&result)?)?;
    }
    emit(result, &table);
    Ok(())
}

pub fn mp_check(n: usize, trials: usize, seed: u64) -> Result<()> {
    let mc = mc_residual_stable_rank(n, trials, seed)?;
    let (coef, weight) = (mp_residual_coefficient(), mp_weight_coefficient());
    let table = format!(
        "  {:<22} {:>10} {:>10}\n  {:<22} {:>10.5} {:>10.5}\n  {:<22} {:>10.5} {:>10.5}\n",
        "", "r(I+W)/n", "r(W)/n", "quarter-circle limit", coef, weight, format!("monte carlo (n={n})"), mc.residual, mc.weight
    );
    emit(
        json!({
            "command": "mp-check",
            "n": n,
            "trials": trials,
            "residual_coefficient": coef,
            "weight_coefficient": weight,
            "mc_residual": mc.residual,
            "mc_weight": mc.weight,
        }),
        &table,
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct Rank3Args {
    /// Use a seeded smooth synthetic image.
    #[arg(long, conflicts_with = "image")]
    pub synthetic: bool,
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Side of the synthetic image.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 7)]
    pub centers: usize,
    /// Distance of the centers from the image center, in pixels. Defaults to
    /// an eighth of the shorter side.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub degrees: f64,
    #[arg(long, default_value_t = 4)]
    pub upscale: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Blob count of the synthetic rank-3 image.
pub const RANK3_BLOBS: usize = 12;

pub fn rank3(args: &Rank3Args) -> Result<()> {
    let image = match (&args.image, args.synthetic) {
        (Some(path), _) => Image::load(path)?,
        (None, true) => gaussian_blobs(args.size, args.size, RANK3_BLOBS, args.seed)?,
        (None, false) => return Err(Error::Config("rank3 needs --synthetic or --image".into())),
    };
    let side = image.height().min(image.width()) as f64;
    let centers = ring_centers(args.centers, args.radius.unwrap_or(side / 8.0));
    let span = rotation_span_spectrum(&image, &centers, args.degrees, args.upscale)?;
    let s = span.spectrum.values();
    let ratio = if s.len() >= 4 { span.spectrum.ratio(3) } else { None };
    let mut table = format!("rotation tangents about {} centers\n", centers.len());
    for (i, v) in s.iter().enumerate() {
        let _ = writeln!(table, "  sigma_{:<3} {:>14.6e} {:>10.6}", i + 1, v, v / s[0].max(f64::MIN_POSITIVE));
    }
    emit(
        json!({
            "command": "rank3",
            "centers": centers,
            "singular_values": s,
            "sigma4_over_sigma1": ratio,
            "degenerate": span.degenerate,
            "border": span.border,
        }),
        &table,
    );
    Ok(())
}

pub fn fixture(out: &Path, seed: u64, arch: &str) -> Result<()> {
    let spec = match arch {
        "cnn" => FixtureSpec::cnn(seed),
        "linear" => FixtureSpec::linear(seed),
        other => return Err(Error::Config(format!("unknown fixture architecture {other:?}"))),
    };
    let fx = build_fixture(&spec)?;
    fx.write(out)?;
    let bundle = load_bundle_dir(out)?;
    let table = format!(
        "wrote {} ({} taps: {}) to {}\n",
        bundle.name(),
        bundle.tap_count(),
        bundle.manifest().layer_names()[1..].join(", "),
        out.display()
    );
    emit(
        json!({
            "command": "fixture",
            "name": bundle.name(),
            "taps": bundle.tap_count(),
            "digest": bundle.graph_digest(),
            "out": out.display().to_string(),
        }),
        &table,
    );
    Ok(())
}
