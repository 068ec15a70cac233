use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characterization::NozzleReference;
use crate::error::{Error, Result};
use crate::evaluation::{write_ground_truth, GroundTruthRecord};
use crate::image::Image;
use crate::ingest::{DatasetManifest, ManifestEntry};
use crate::segmentation::{default_class_names, RadiationMask};

/// Pseudo-IR palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Colormap {
    #[default]
    Inferno,
    Gray,
}

const INFERNO: [(f64, [f64; 3]); 5] = [
    (0.0, [0.0, 0.0, 4.0]),
    (0.25, [87.0, 16.0, 110.0]),
    (0.5, [188.0, 55.0, 84.0]),
    (0.75, [249.0, 142.0, 9.0]),
    (1.0, [252.0, 255.0, 164.0]),
];

impl Colormap {
    /// RGB for `u` in `[0, 1]`.
    pub fn rgb(self, u: f64) -> [u8; 3] {
        let u = u.clamp(0.0, 1.0);
        match self {
            Colormap::Gray => {
                let v = (u * 255.0).round() as u8;
                [v, v, v]
            }
            Colormap::Inferno => {
                let i = INFERNO
                    .windows(2)
                    .position(|w| u <= w[1].0)
                    .unwrap_or(INFERNO.len() - 2);
                let (u0, c0) = INFERNO[i];
                let (u1, c1) = INFERNO[i + 1];
                let f = (u - u0) / (u1 - u0);
                let mix = |k: usize| (c0[k] + f * (c1[k] - c0[k])).round().clamp(0.0, 255.0) as u8;
                [mix(0), mix(1), mix(2)]
            }
        }
    }
}

/// Elliptical flame standing on a fixed nozzle. Intensity falls off as
/// `1 - r^2` with `r` the normalized elliptical radius; radiation zones are
/// bands of that intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSceneSpec {
    pub width: usize,
    pub height: usize,
    /// Pixel-corner coordinates of the fuel release point; the flame's
    /// lowest point sits on it.
    pub nozzle: NozzleReference,
    /// Horizontal semi-axis range in pixels.
    pub semi_axis_x: (f64, f64),
    /// Vertical semi-axis range in pixels.
    pub semi_axis_y: (f64, f64),
    /// Maximum horizontal offset of the flame base from the nozzle.
    pub center_jitter: f64,
    pub background: u8,
    /// Uniform noise amplitude added to the visible frame.
    pub noise: f64,
    /// Intensity boundaries between zones 1/2 and 2/3.
    pub zone_levels: (f64, f64),
    pub colormap: Colormap,
    pub pixels_per_metric: f64,
    pub fps: f64,
}

impl Default for SyntheticSceneSpec {
    fn default() -> Self {
        Self {
            width: 48,
            height: 96,
            nozzle: NozzleReference::new(24, 90),
            semi_axis_x: (8.0, 14.0),
            semi_axis_y: (22.0, 38.0),
            center_jitter: 0.0,
            background: 24,
            noise: 6.0,
            zone_levels: (1.0 / 3.0, 2.0 / 3.0),
            colormap: Colormap::Inferno,
            pixels_per_metric: 10.0,
            fps: 30.0,
        }
    }
}

/// Parameters of one rendered flame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlameParams {
    pub semi_x: f64,
    pub semi_y: f64,
    pub offset_x: f64,
}

impl FlameParams {
    pub fn true_length_px(&self) -> f64 {
        self.offset_x.hypot(2.0 * self.semi_y)
    }

    pub fn true_area_px(&self) -> f64 {
        std::f64::consts::PI * self.semi_x * self.semi_y
    }
}

pub struct RenderedScene {
    pub visible: Image,
    pub ir: Image,
    pub mask: RadiationMask,
    pub params: FlameParams,
}

impl SyntheticSceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synthetic scene: {m}")));
        if self.width == 0 || self.height == 0 {
            return bad("empty image");
        }
        let (ax, ay) = (self.semi_axis_x, self.semi_axis_y);
        if !(ax.0 > 0.0 && ax.0 <= ax.1 && ay.0 > 0.0 && ay.0 <= ay.1) {
            return bad("semi-axis ranges must be positive and ordered");
        }
        if !(self.center_jitter >= 0.0 && self.noise >= 0.0) {
            return bad("jitter and noise must be non-negative");
        }
        let (z1, z2) = self.zone_levels;
        if !(0.0 < z1 && z1 < z2 && z2 < 1.0) {
            return bad("zone levels must satisfy 0 < z1 < z2 < 1");
        }
        if !(self.pixels_per_metric > 0.0 && self.fps > 0.0) {
            return bad("pixels_per_metric and fps must be positive");
        }
        self.nozzle.check_bounds(self.width, self.height)?;
        let n = self.nozzle;
        let (x, y) = (n.x as f64, n.y as f64);
        if y - 2.0 * ay.1 < 0.0
            || x - ax.1 - self.center_jitter < 0.0
            || x + ax.1 + self.center_jitter > self.width as f64
        {
            return bad("largest flame does not fit in the frame");
        }
        Ok(())
    }

    pub fn sample_params(&self, rng: &mut impl Rng) -> FlameParams {
        let pick = |rng: &mut dyn rand::RngCore, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        FlameParams {
            semi_x: pick(rng, self.semi_axis_x),
            semi_y: pick(rng, self.semi_axis_y),
            offset_x: pick(rng, (-self.center_jitter, self.center_jitter)),
        }
    }

    pub fn render(&self, params: &FlameParams, rng: &mut impl Rng) -> Result<RenderedScene> {
        let (w, h) = (self.width, self.height);
        let cx = self.nozzle.x as f64 + params.offset_x;
        let cy = self.nozzle.y as f64 - params.semi_y;
        let heat = |x: usize, y: usize| -> Option<f64> {
            let dx = (x as f64 + 0.5 - cx) / params.semi_x;
            let dy = (y as f64 + 0.5 - cy) / params.semi_y;
            let r2 = dx * dx + dy * dy;
            (r2 <= 1.0).then_some(1.0 - r2)
        };
        let (z1, z2) = self.zone_levels;
        let bg = self.background as f64;
        let mut vis = Image::zeros(w, h, 3);
        let mut ir = Image::zeros(w, h, 3);
        let mut labels = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let t = heat(x, y);
                let n = if self.noise > 0.0 {
                    rng.random_range(-self.noise..=self.noise)
                } else {
                    0.0
                };
                let rgb = match t {
                    Some(t) => [
                        bg + (255.0 - bg) * (0.45 + 0.55 * t),
                        bg + (235.0 - bg) * t.powf(0.8),
                        bg + 140.0 * t * t,
                    ],
                    None => [bg, bg, bg + 12.0],
                };
                for (c, v) in rgb.into_iter().enumerate() {
                    vis.set(x, y, c, (v + n).round().clamp(0.0, 255.0) as u8);
                }
                let (u, label) = match t {
                    Some(t) => (
                        0.2 + 0.8 * t,
                        if t < z1 {
                            1
                        } else if t < z2 {
                            2
                        } else {
                            3
                        },
                    ),
                    None => (0.0, 0),
                };
                for (c, v) in self.colormap.rgb(u).into_iter().enumerate() {
                    ir.set(x, y, c, v);
                }
                labels.push(label);
            }
        }
        Ok(RenderedScene {
            visible: vis,
            ir,
            mask: RadiationMask::new(w, h, labels, default_class_names(4))?,
            params: *params,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub manifest_path: PathBuf,
    pub ground_truth: Vec<GroundTruthRecord>,
    pub ground_truth_path: PathBuf,
    pub params: Vec<FlameParams>,
}

#[derive(Serialize)]
struct SceneFile<'a> {
    spec: &'a SyntheticSceneSpec,
    seed: u64,
    frames: &'a [FlameParams],
}

pub const SYNTH_MANIFEST: &str = "manifest.json";
pub const SYNTH_GROUND_TRUTH: &str = "ground_truth.csv";
pub const SYNTH_SCENE: &str = "scene.json";

/// Renders `n` frames into `out_dir` (`visible/`, `ir/`, `masks/`) with a
/// manifest, ground-truth CSV and scene description.
pub fn generate_synthetic_dataset(
    spec: &SyntheticSceneSpec,
    n: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<SyntheticDataset> {
    if n == 0 {
        return Err(Error::InvalidInput("synthetic dataset needs n >= 1".into()));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut params = Vec::with_capacity(n);
    for i in 0..n {
        let p = spec.sample_params(&mut rng);
        let scene = spec.render(&p, &mut rng)?;
        let id = format!("frame_{i:04}");
        let vis = out_dir.join("visible").join(format!("{id}.png"));
        let ir = out_dir.join("ir").join(format!("{id}.png"));
        let mask = out_dir.join("masks").join(format!("{id}.png"));
        scene.visible.save(&vis)?;
        scene.ir.save(&ir)?;
        scene.mask.save(&mask)?;
        let t = i as f64 / spec.fps;
        let mut e = ManifestEntry::new(id.clone(), vis);
        e.ir = Some(ir);
        e.mask = Some(mask);
        e.experiment = Some("synthetic".into());
        e.visible_index = i;
        e.ir_index = i;
        e.visible_timestamp = t;
        e.ir_timestamp = t;
        entries.push(e);
        truth.push(GroundTruthRecord {
            frame_id: id,
            true_length_m: p.true_length_px() / spec.pixels_per_metric,
            true_area_m2: p.true_area_px() / (spec.pixels_per_metric * spec.pixels_per_metric),
        });
        params.push(p);
    }
    let manifest = DatasetManifest::new(entries, seed);
    let manifest_path = out_dir.join(SYNTH_MANIFEST);
    manifest.save(&manifest_path)?;
    let ground_truth_path = out_dir.join(SYNTH_GROUND_TRUTH);
    write_ground_truth(&ground_truth_path, &truth)?;
    let scene_path = out_dir.join(SYNTH_SCENE);
    let scene = SceneFile {
        spec,
        seed,
        frames: &params,
    };
    std::fs::write(&scene_path, serde_json::to_string_pretty(&scene)? + "\n").map_err(|e| Error::io(&scene_path, e))?;
    Ok(SyntheticDataset {
        manifest,
        manifest_path,
        ground_truth: truth,
        ground_truth_path,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_ground_truth() {
        let p = FlameParams {
            semi_x: 20.0,
            semi_y: 60.0,
            offset_x: 0.0,
        };
        let area_m2 = p.true_area_px() / 100.0;
        assert!((area_m2 - 37.699111843).abs() < 1e-8);
        assert_eq!(p.true_length_px(), 120.0);
    }

    #[test]
    fn zero_frames_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(generate_synthetic_dataset(&SyntheticSceneSpec::default(), 0, 1, dir.path()).is_err());
    }

    #[test]
    fn oversized_flame_rejected() {
        let spec = SyntheticSceneSpec {
            semi_axis_y: (10.0, 60.0),
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn same_seed_same_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec = SyntheticSceneSpec::default();
        generate_synthetic_dataset(&spec, 3, 7, a.path()).unwrap();
        generate_synthetic_dataset(&spec, 3, 7, b.path()).unwrap();
        for rel in [
            "visible/frame_0002.png",
            "ir/frame_0001.png",
            "masks/frame_0000.png",
            "ground_truth.csv",
            "manifest.json",
            "scene.json",
        ] {
            assert_eq!(
                std::fs::read(a.path().join(rel)).unwrap(),
                std::fs::read(b.path().join(rel)).unwrap(),
                "{rel}"
            );
        }
    }

    #[test]
    fn rendered_mask_tracks_analytic_geometry() {
        let spec = SyntheticSceneSpec {
            width: 200,
            height: 300,
            nozzle: NozzleReference::new(100, 290),
            semi_axis_x: (40.0, 40.0),
            semi_axis_y: (120.0, 120.0),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = spec.sample_params(&mut rng);
        let scene = spec.render(&p, &mut rng).unwrap();
        let count = scene.mask.labels().iter().filter(|&&l| l != 0).count() as f64;
        assert!((count - p.true_area_px()).abs() / p.true_area_px() < 0.01);
        assert!(scene.mask.labels().contains(&3));
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(Colormap::Inferno.rgb(0.0), [0, 0, 4]);
        assert_eq!(Colormap::Inferno.rgb(1.0), [252, 255, 164]);
        assert_eq!(Colormap::Gray.rgb(0.5), [128, 128, 128]);
    }
}
