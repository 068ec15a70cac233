use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn flarecast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flarecast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("flarecast runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = flarecast(dir, args);
    assert!(
        out.status.success(),
        "flarecast {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Synthetic data plus briefly trained translator and segmenter.
struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new(frames: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        let n = frames.to_string();
        ok(d, &["synth", "--frames", &n, "--seed", "5", "--out", "data"]);
        ok(
            d,
            &[
                "ingest",
                "pad",
                "--manifest",
                "data/manifest.json",
                "--canvas",
                "64x128",
                "--out",
                "padded",
            ],
        );
        ok(
            d,
            &[
                "translate",
                "train",
                "--manifest",
                "padded/manifest.json",
                "--filters",
                "8,16,32",
                "--disc-filters",
                "8,16",
                "--max-steps",
                "6",
                "--lr-gen",
                "2e-4",
                "--lr-disc",
                "2e-3",
                "--seed",
                "5",
                "--out",
                "translator",
            ],
        );
        ok(
            d,
            &[
                "segment",
                "train",
                "--manifest",
                "data/manifest.json",
                "--filters",
                "8,16,32",
                "--max-steps",
                "6",
                "--lr",
                "3e-3",
                "--seed",
                "5",
                "--out",
                "segmenter",
            ],
        );
        Self { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn run(&self, out: &str) -> PathBuf {
        ok(
            self.path(),
            &[
                "run",
                "--manifest",
                "data/manifest.json",
                "--translator",
                "translator/translator.safetensors",
                "--segmenter",
                "segmenter/segmenter.safetensors",
                "--nozzle",
                "24,90",
                "--ppm",
                "10",
                "--truth",
                "data/ground_truth.csv",
                "--seed",
                "5",
                "--out",
                out,
            ],
        );
        self.path().join(out)
    }
}

fn csv_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for sub in ["geometry", "report"] {
        for e in std::fs::read_dir(root.join(sub)).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "csv") {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_twice_gives_identical_csvs() {
    let ws = Workspace::new(12);
    let a = ws.run("run_a");
    let b = ws.run("run_b");
    let files = csv_files(&a);
    assert!(files.iter().any(|f| f.starts_with("geometry")));
    assert!(files.iter().any(|f| f.ends_with("errors_length.csv")));
    assert_eq!(files, csv_files(&b));
    for f in &files {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{} differs",
            f.display()
        );
    }
    let geometry = std::fs::read_to_string(a.join("geometry/unet_generated_ir.csv")).unwrap();
    assert_eq!(
        geometry.lines().next(),
        Some("frame_id,length_m,area_m2,topmost_x,topmost_y")
    );
    assert_eq!(geometry.lines().count(), 13);
}

#[test]
fn stage_commands_compose() {
    let ws = Workspace::new(8);
    let d = ws.path();
    ok(
        d,
        &[
            "translate",
            "run",
            "--checkpoint",
            "translator/translator.safetensors",
            "--in",
            "data/manifest.json",
            "--brightness-ref",
            "paired",
            "--out",
            "translated",
        ],
    );
    assert_eq!(
        std::fs::read_dir(d.join("translated/artificial_ir")).unwrap().count(),
        8
    );

    ok(
        d,
        &[
            "segment",
            "run",
            "--checkpoint",
            "segmenter/segmenter.safetensors",
            "--in",
            "translated/artificial_ir",
            "--out",
            "masks_gen",
        ],
    );
    ok(
        d,
        &[
            "segment",
            "run",
            "--checkpoint",
            "segmenter/segmenter.safetensors",
            "--in",
            "translated/original_ir",
            "--out",
            "masks_orig",
        ],
    );

    let stdout = ok(
        d,
        &[
            "characterize",
            "--masks",
            "data/masks",
            "--nozzle",
            "24,90",
            "--ppm",
            "10",
            "--out",
            "truth_geometry.csv",
        ],
    );
    assert!(stdout.contains("8 geometry rows"));
    ok(
        d,
        &[
            "characterize",
            "--masks",
            "masks_gen",
            "--nozzle",
            "24,90",
            "--ppm",
            "10",
            "--out",
            "gen_geometry.csv",
        ],
    );

    ok(
        d,
        &[
            "evaluate",
            "--geometry",
            "oracle:original_ir=truth_geometry.csv",
            "--geometry",
            "unet:generated_ir=gen_geometry.csv",
            "--truth",
            "data/ground_truth.csv",
            "--masks-a",
            "masks_orig",
            "--masks-b",
            "masks_gen",
            "--variant",
            "unet",
            "--out",
            "eval",
        ],
    );
    let table = std::fs::read_to_string(d.join("eval/errors_length.csv")).unwrap();
    let oracle_mape: f64 = table
        .lines()
        .find(|l| l.starts_with("oracle,MAPE"))
        .and_then(|l| l.split(',').find_map(|c| c.parse().ok()))
        .expect("oracle MAPE cell");
    assert!(oracle_mape <= 2.0, "ground-truth masks give length MAPE {oracle_mape}%");
    assert!(d.join("eval/hausdorff.csv").is_file());
}

#[test]
fn metrics_eval_flags_low_psnr() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--frames", "2", "--seed", "1", "--out", "data"]);
    let pairs = r#"{"pairs": [
        {"id": "same", "reference": "data/ir/frame_0000.png", "candidate": "data/ir/frame_0000.png"},
        {"id": "other", "reference": "data/ir/frame_0000.png", "candidate": "data/visible/frame_0000.png"}
    ]}"#;
    std::fs::write(d.join("pairs.json"), pairs).unwrap();
    ok(d, &["metrics", "eval", "--pairs", "pairs.json", "--out", "quality.csv"]);
    let csv = std::fs::read_to_string(d.join("quality.csv")).unwrap();
    let same = csv.lines().find(|l| l.starts_with("same,")).unwrap();
    assert!(same.contains(",inf,"), "{same}");
    assert!(same.ends_with(",false"));
    assert!(csv.lines().any(|l| l.starts_with("mean,")));
    assert!(csv.lines().any(|l| l.starts_with("median,")));
}

#[test]
fn missing_checkpoint_exits_nonzero_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--frames", "1", "--out", "data"]);
    let out = flarecast(
        d,
        &[
            "run",
            "--manifest",
            "data/manifest.json",
            "--translator",
            "absent.safetensors",
            "--nozzle",
            "24,90",
            "--ppm",
            "10",
            "--out",
            "run",
        ],
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("checkpoint not found: translation"), "{stderr}");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("flarecast.toml"), "seed = 9\n[synth]\nframes = 3\n").unwrap();
    ok(d, &["--config", "flarecast.toml", "synth", "--out", "a"]);
    assert_eq!(std::fs::read_dir(d.join("a/visible")).unwrap().count(), 3);
    ok(
        d,
        &["--config", "flarecast.toml", "synth", "--frames", "2", "--out", "b"],
    );
    assert_eq!(std::fs::read_dir(d.join("b/visible")).unwrap().count(), 2);
    ok(d, &["--config", "flarecast.toml", "synth", "--seed", "9", "--out", "c"]);
    assert_eq!(
        std::fs::read(d.join("a/ground_truth.csv")).unwrap(),
        std::fs::read(d.join("c/ground_truth.csv")).unwrap()
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[translation]\nlearning_rate = 1.0\n").unwrap();
    let out = flarecast(dir.path(), &["--config", "bad.toml", "synth", "--out", "x"]);
    assert!(!out.status.success());
}
