use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use flarecast_core::characterization::{write_geometry_csv, CalibrationInfo, NozzleReference};
use flarecast_core::evaluation::{
    aggregate_hausdorff, build_report, read_ground_truth, GeometrySet, ImageSource, MaskPair, ReportInput,
};
use flarecast_core::ingest::{
    augment_manifest, build_paired_dataset, default_tolerance, pad_manifest, split_dataset, CanvasSpec,
    DatasetManifest, ManifestEntry, PairDatasetOptions, PairingOptions,
};
use flarecast_core::metrics::{evaluate_pairs, write_quality_csv, ImagePairList};
use flarecast_core::nn::device_from_env;
use flarecast_core::pipeline::{
    characterize_masks, generate_synthetic_dataset, list_masks, run_pipeline, segment_images, translate_frames,
    PipelineConfig,
};
use flarecast_core::segmentation::{train_segmenter, RadiationMask, SegmentationModelSpec, Segmenter};
use flarecast_core::translation::{train_translator, DiscriminatorSpec, GeneratorSpec, Translator};
use flarecast_core::Image;

use crate::{
    CharacterizeArgs, Cli, Command, EvaluateArgs, IngestCommand, MetricsCommand, RunArgs, SegmentCommand,
    SegmentTrainArgs, SynthArgs, TranslateCommand, TranslateTrainArgs,
};

/// Share of a training manifest held out for validation when no
/// validation manifest is given.
const DEFAULT_VAL_FRACTION: f64 = 0.1;

struct Context {
    cfg: PipelineConfig,
    out: PathBuf,
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.propagate_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.paths.out_dir = out.clone();
    }
    let ctx = Context {
        out: cfg.paths.out_dir.clone(),
        cfg,
    };
    match cli.command {
        Command::Synth(args) => synth(&ctx, args),
        Command::Ingest(cmd) => ingest(&ctx, cmd),
        Command::Translate(TranslateCommand::Train(args)) => translate_train(&ctx, args),
        Command::Translate(TranslateCommand::Run {
            checkpoint,
            input,
            ir,
            brightness_ref,
        }) => translate_run(&ctx, &checkpoint, &input, ir.as_deref(), brightness_ref),
        Command::Segment(SegmentCommand::Train(args)) => segment_train(&ctx, args),
        Command::Segment(SegmentCommand::Run { checkpoint, input }) => segment_run(&ctx, &checkpoint, &input),
        Command::Characterize(args) => characterize(&ctx, args),
        Command::Evaluate(args) => evaluate(&ctx, args),
        Command::Metrics(MetricsCommand::Eval { pairs }) => metrics_eval(&ctx, &pairs),
        Command::Run(args) => run(ctx, args),
    }
}

fn parse_canvas(s: &str) -> Result<CanvasSpec> {
    let Some((w, h)) = s.split_once(['x', 'X']) else {
        bail!("canvas must be `WxH`, got `{s}`");
    };
    Ok(CanvasSpec::new(w.trim().parse()?, h.trim().parse()?))
}

/// `--out` names a file when it has the given extension, otherwise a
/// directory that receives `default_name`.
fn output_file(out: &Path, extension: &str, default_name: &str) -> PathBuf {
    if out.extension().is_some_and(|e| e.eq_ignore_ascii_case(extension)) {
        out.to_path_buf()
    } else {
        out.join(default_name)
    }
}

fn train_val(ctx: &Context, manifest: &Path, val: Option<&Path>) -> Result<(DatasetManifest, DatasetManifest)> {
    let train = DatasetManifest::load(manifest)?;
    match val {
        Some(v) => Ok((train, DatasetManifest::load(v)?)),
        None => {
            let parts = split_dataset(
                &train,
                &[1.0 - DEFAULT_VAL_FRACTION, DEFAULT_VAL_FRACTION],
                ctx.cfg.seed,
            )?;
            let [t, v]: [DatasetManifest; 2] = parts
                .try_into()
                .map_err(|_| anyhow!("split returned wrong part count"))?;
            if v.is_empty() {
                bail!("manifest too small to hold out a validation split; pass --val");
            }
            Ok((t, v))
        }
    }
}

fn synth(ctx: &Context, args: SynthArgs) -> Result<()> {
    let n = args.frames.unwrap_or(ctx.cfg.synth.frames);
    let scene = &ctx.cfg.synth.scene;
    let ds = generate_synthetic_dataset(scene, n, ctx.cfg.seed, &ctx.out)?;
    println!(
        "wrote {n} synthetic frames to {} (nozzle {},{}; {} px/m)",
        ds.manifest_path.display(),
        scene.nozzle.x,
        scene.nozzle.y,
        scene.pixels_per_metric
    );
    Ok(())
}

fn ingest(ctx: &Context, cmd: IngestCommand) -> Result<()> {
    let cfg = &ctx.cfg;
    match cmd {
        IngestCommand::Pair {
            visible,
            ir,
            tolerance,
            references,
            canvas,
            no_pad,
            experiment,
        } => {
            let references = match references {
                Some(p) => {
                    #[derive(serde::Deserialize)]
                    struct Refs {
                        visible: Vec<(f64, f64)>,
                        ir: Vec<(f64, f64)>,
                    }
                    let text = std::fs::read_to_string(&p)?;
                    let r: Refs = serde_json::from_str(&text)?;
                    Some((r.visible, r.ir))
                }
                None => None,
            };
            let canvas = match (canvas, no_pad) {
                (_, true) => None,
                (Some(s), false) => Some(parse_canvas(&s)?),
                (None, false) => Some(cfg.canvas.unwrap_or(CanvasSpec::translator_default())),
            };
            let opts = PairDatasetOptions {
                pairing: PairingOptions {
                    tolerance: tolerance
                        .or(cfg.ingest.tolerance)
                        .unwrap_or_else(|| default_tolerance(cfg.ingest.low_rate_fps)),
                    start_offset: cfg.ingest.start_offset,
                    low_rate: cfg.ingest.low_rate,
                },
                references,
                canvas,
                experiment: experiment.or_else(|| cfg.ingest.experiment.clone()),
                seed: cfg.seed,
            };
            let m = build_paired_dataset(&visible, &ir, &opts, &ctx.out)?;
            println!(
                "paired {} frames into {}",
                m.len(),
                ctx.out.join("manifest.json").display()
            );
        }
        IngestCommand::Pad { manifest, canvas } => {
            let canvas = match canvas {
                Some(s) => parse_canvas(&s)?,
                None => cfg.canvas.unwrap_or(CanvasSpec::translator_default()),
            };
            let m = pad_manifest(&DatasetManifest::load(&manifest)?, &canvas, &ctx.out)?;
            println!("padded {} frames onto {}x{}", m.len(), canvas.width, canvas.height);
        }
        IngestCommand::Augment { manifest } => {
            let m = augment_manifest(
                &DatasetManifest::load(&manifest)?,
                cfg.seed,
                &cfg.ingest.augment,
                &ctx.out,
            )?;
            println!("augmented to {} samples", m.len());
        }
        IngestCommand::Split { manifest, ratios } => {
            let ratios = ratios.unwrap_or_else(|| cfg.ingest.split_ratios.clone());
            let parts = split_dataset(&DatasetManifest::load(&manifest)?, &ratios, cfg.seed)?;
            for part in &parts {
                let label = part
                    .split_label
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "split".into());
                let path = ctx.out.join(format!("{label}.json"));
                part.save(&path)?;
                println!("{label}: {} samples -> {}", part.len(), path.display());
            }
        }
    }
    Ok(())
}

fn manifest_canvas(m: &DatasetManifest) -> Result<(usize, usize)> {
    if let Some(c) = m.canvas {
        return Ok((c.width, c.height));
    }
    let Some(first) = m.entries.first() else {
        bail!("manifest is empty");
    };
    Ok(Image::load(&first.visible)?.dims())
}

fn translate_train(ctx: &Context, args: TranslateTrainArgs) -> Result<()> {
    let (train, val) = train_val(ctx, &args.manifest, args.val.as_deref())?;
    let (w, h) = manifest_canvas(&train)?;
    let stage = &ctx.cfg.translation;
    let filters = args.filters.unwrap_or_else(|| stage.encoder_filters.clone());
    let g_spec = GeneratorSpec::mirrored(w, h, &filters);
    let d_spec = match args.disc_filters {
        Some(f) => DiscriminatorSpec::with_filters(&f),
        None => stage.discriminator.clone(),
    };
    let mut tc = stage.train.clone();
    if let Some(v) = args.epochs {
        tc.epochs = v;
    }
    if args.max_steps.is_some() {
        tc.max_steps = args.max_steps;
    }
    if let Some(v) = args.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = args.lr_gen {
        tc.lr_generator = v;
    }
    if let Some(v) = args.lr_disc {
        tc.lr_discriminator = v;
    }
    let device = device_from_env()?;
    let run = train_translator(&train, &val, &g_spec, &d_spec, &tc, &ctx.out, &device)?;
    println!(
        "translator: {} steps, best epoch {} (val L1 {:.4}) -> {}",
        run.steps,
        run.best_epoch,
        run.best_val_l1,
        run.checkpoint.display()
    );
    Ok(())
}

/// A manifest file, or a directory of visible PNGs with optional real IR
/// frames of the same names.
fn frames_input(input: &Path, ir: Option<&Path>) -> Result<DatasetManifest> {
    if input.is_file() {
        return Ok(DatasetManifest::load(input)?);
    }
    let entries = list_masks(input)?
        .into_iter()
        .map(|(id, path)| {
            let mut e = ManifestEntry::new(id.clone(), path);
            if let Some(dir) = ir {
                let p = dir.join(format!("{id}.png"));
                if p.is_file() {
                    e.ir = Some(p);
                }
            }
            e
        })
        .collect::<Vec<_>>();
    if entries.is_empty() {
        bail!("no PNG frames in {}", input.display());
    }
    Ok(DatasetManifest::new(entries, 0))
}

fn translate_run(
    ctx: &Context,
    checkpoint: &Path,
    input: &Path,
    ir: Option<&Path>,
    brightness_ref: Option<flarecast_core::translation::ReferenceMode>,
) -> Result<()> {
    if !checkpoint.is_file() {
        return Err(flarecast_core::Error::CheckpointNotFound("translation".into()).into());
    }
    let manifest = frames_input(input, ir)?;
    let mut policy = ctx.cfg.translation.brightness;
    if let Some(mode) = brightness_ref {
        policy.reference_mode = mode;
    }
    let translator = Translator::load(checkpoint, &device_from_env()?)?;
    let frames = translate_frames(&manifest, &translator, &policy, &ctx.out)?;
    let scaled = frames.iter().filter(|f| f.brightness_scaled).count();
    println!(
        "translated {} frames ({scaled} brightness-adjusted) -> {}",
        frames.len(),
        ctx.out.join("artificial_ir").display()
    );
    Ok(())
}

fn segment_train(ctx: &Context, args: SegmentTrainArgs) -> Result<()> {
    let (train, val) = train_val(ctx, &args.manifest, args.val.as_deref())?;
    let stage = &ctx.cfg.segmentation;
    let spec = SegmentationModelSpec::new(
        args.variant.unwrap_or(stage.variant),
        args.filters.as_deref().unwrap_or(&stage.filters),
        args.classes.unwrap_or(stage.num_classes),
    );
    let mut tc = stage.train.clone();
    if let Some(v) = args.max_epochs {
        tc.max_epochs = v;
    }
    if args.max_steps.is_some() {
        tc.max_steps = args.max_steps;
    }
    if let Some(v) = args.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = args.lr {
        tc.lr = v;
    }
    if let Some(v) = args.patience {
        tc.early_stopping_patience = v;
    }
    let device = device_from_env()?;
    let run = train_segmenter(&train, &val, &spec, &tc, &ctx.out, &device)?;
    let best = &run.history[run.best_epoch - 1];
    println!(
        "{} segmenter: {} steps, best epoch {} (val loss {:.4}, mIoU {:.4}) -> {}",
        spec.variant,
        run.steps,
        run.best_epoch,
        best.val_loss,
        best.val_miou,
        run.checkpoint.display()
    );
    Ok(())
}

fn segment_run(ctx: &Context, checkpoint: &Path, input: &Path) -> Result<()> {
    if !checkpoint.is_file() {
        return Err(flarecast_core::Error::CheckpointNotFound("segmentation".into()).into());
    }
    let segmenter = Segmenter::load(checkpoint, &device_from_env()?)?;
    let images = list_masks(input)?;
    if images.is_empty() {
        bail!("no PNG images in {}", input.display());
    }
    let masks = segment_images(&segmenter, &images, &ctx.out)?;
    println!("segmented {} images -> {}", masks.len(), ctx.out.display());
    Ok(())
}

fn nozzle_and_calibration(
    ctx: &Context,
    nozzle: Option<String>,
    ppm: Option<f64>,
) -> Result<(NozzleReference, CalibrationInfo)> {
    let nozzle = match nozzle {
        Some(s) => s.parse()?,
        None => match ctx.cfg.characterization.nozzle {
            Some(n) => n,
            None => bail!("nozzle position required (--nozzle x,y or characterization.nozzle)"),
        },
    };
    let Some(ppm) = ppm.or(ctx.cfg.characterization.pixels_per_metric) else {
        bail!("calibration required (--ppm or characterization.pixels_per_metric)");
    };
    Ok((nozzle, CalibrationInfo::from_ppm(ppm)?))
}

fn characterize(ctx: &Context, args: CharacterizeArgs) -> Result<()> {
    let (nozzle, cal) = nozzle_and_calibration(ctx, args.nozzle, args.ppm)?;
    let masks = list_masks(&args.masks)?;
    if masks.is_empty() {
        bail!("no masks in {}", args.masks.display());
    }
    let rows = characterize_masks(&masks, nozzle, &cal)?;
    let out = output_file(&ctx.out, "csv", "geometry.csv");
    write_geometry_csv(&out, &rows)?;
    println!("{} geometry rows -> {}", rows.len(), out.display());
    Ok(())
}

/// `VARIANT:SOURCE=FILE` or a bare file.
fn parse_geometry_spec(spec: &str, default_variant: &str) -> Result<(String, ImageSource, PathBuf)> {
    match spec.split_once('=') {
        Some((tag, path)) => {
            let Some((variant, source)) = tag.split_once(':') else {
                bail!("geometry tag must be `VARIANT:SOURCE`, got `{tag}`");
            };
            Ok((variant.to_string(), source.parse()?, PathBuf::from(path)))
        }
        None => Ok((
            default_variant.to_string(),
            ImageSource::GeneratedIr,
            PathBuf::from(spec),
        )),
    }
}

fn evaluate(ctx: &Context, args: EvaluateArgs) -> Result<()> {
    let default_variant = args
        .variant
        .clone()
        .unwrap_or_else(|| ctx.cfg.segmentation.variant.to_string());
    let mut geometry = Vec::new();
    for g in &args.geometry {
        let (model_variant, image_source, path) = parse_geometry_spec(g, &default_variant)?;
        geometry.push(GeometrySet {
            model_variant,
            image_source,
            rows: flarecast_core::characterization::read_geometry_csv(&path)?,
        });
    }
    let truth_path = args.truth.or_else(|| ctx.cfg.evaluation.ground_truth.clone());
    let ground_truth = match &truth_path {
        Some(p) => read_ground_truth(p)?,
        None => Vec::new(),
    };
    let experiments = match &args.experiment {
        Some(name) => geometry
            .iter()
            .flat_map(|g| g.rows.iter().map(|r| (r.frame_id.clone(), name.clone())))
            .collect(),
        None => Default::default(),
    };
    let mut hausdorff = Vec::new();
    if let (Some(a), Some(b)) = (&args.masks_a, &args.masks_b) {
        let b_masks: std::collections::BTreeMap<String, PathBuf> = list_masks(b)?.into_iter().collect();
        let mut pairs = Vec::new();
        for (id, pa) in list_masks(a)? {
            let Some(pb) = b_masks.get(&id) else { continue };
            pairs.push(MaskPair {
                experiment: args.experiment.clone().unwrap_or_else(|| "default".into()),
                model_variant: default_variant.clone(),
                a: RadiationMask::load(&pa)?.foreground_points(),
                b: RadiationMask::load(pb)?.foreground_points(),
                frame_id: id,
            });
        }
        if pairs.is_empty() {
            bail!("no mask ids shared between {} and {}", a.display(), b.display());
        }
        hausdorff = aggregate_hausdorff(&pairs)?;
    }
    let input = ReportInput {
        geometry,
        ground_truth,
        experiments,
        quality: Vec::new(),
        hausdorff,
    };
    let bundle = build_report(&input, &ctx.out)?;
    if !bundle.skipped_frames.is_empty() {
        eprintln!(
            "warning: {} frames without ground truth skipped",
            bundle.skipped_frames.len()
        );
    }
    println!("report: {} files -> {}", bundle.files.len(), ctx.out.display());
    Ok(())
}

fn metrics_eval(ctx: &Context, pairs: &Path) -> Result<()> {
    let list = ImagePairList::load(pairs)?;
    let rows = evaluate_pairs(&list)?;
    let out = output_file(&ctx.out, "csv", "quality.csv");
    write_quality_csv(&out, &rows)?;
    let flagged = rows.iter().filter(|r| r.psnr_below_benchmark()).count();
    println!("{} pairs ({flagged} below 30 dB PSNR) -> {}", rows.len(), out.display());
    Ok(())
}

fn run(mut ctx: Context, args: RunArgs) -> Result<()> {
    let cfg = &mut ctx.cfg;
    if let Some(p) = args.manifest {
        cfg.paths.input_manifest = Some(p);
    }
    if let Some(p) = args.translator {
        cfg.paths.translator_checkpoint = Some(p);
    }
    if !args.segmenter.is_empty() {
        cfg.paths.segmenter_checkpoints = args.segmenter;
    }
    if let Some(n) = args.nozzle {
        cfg.characterization.nozzle = Some(n.parse()?);
    }
    if let Some(ppm) = args.ppm {
        cfg.characterization.pixels_per_metric = Some(ppm);
    }
    if let Some(p) = args.truth {
        cfg.evaluation.ground_truth = Some(p);
    }
    if let Some(mode) = args.brightness_ref {
        cfg.translation.brightness.reference_mode = mode;
    }
    let Some(manifest_path) = &cfg.paths.input_manifest else {
        bail!("input frames required (--manifest or paths.input_manifest)");
    };
    let manifest = DatasetManifest::load(manifest_path)?;
    let run = run_pipeline(cfg, &manifest, &device_from_env()?)?;
    println!(
        "{} frames, {} geometry tables, {} report files -> {}",
        run.frames.len(),
        run.geometry.len(),
        run.report.files.len(),
        run.out_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canvas_parses_width_first() {
        let c = parse_canvas("64x128").unwrap();
        assert_eq!((c.width, c.height), (64, 128));
        assert!(parse_canvas("64,128").is_err());
    }

    #[test]
    fn geometry_spec_tags() {
        let (v, s, p) = parse_geometry_spec("attention_unet:original_ir=a/b.csv", "unet").unwrap();
        assert_eq!(
            (v.as_str(), s, p),
            ("attention_unet", ImageSource::OriginalIr, PathBuf::from("a/b.csv"))
        );
        let (v, s, _) = parse_geometry_spec("g.csv", "unet").unwrap();
        assert_eq!((v.as_str(), s), ("unet", ImageSource::GeneratedIr));
        assert!(parse_geometry_spec("unet=g.csv", "unet").is_err());
    }

    #[test]
    fn out_is_file_or_directory() {
        assert_eq!(output_file(Path::new("r.csv"), "csv", "q.csv"), PathBuf::from("r.csv"));
        assert_eq!(
            output_file(Path::new("dir"), "csv", "q.csv"),
            PathBuf::from("dir/q.csv")
        );
    }
}
