use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetManifest, SplitLabel};
use crate::error::{Error, Result};

/// Per-split counts by largest remainder: floors first, then the leftover
/// samples go to the largest fractional parts (earlier split wins ties).
pub fn split_counts(n: usize, ratios: &[f64]) -> Result<Vec<usize>> {
    if ratios.is_empty() || ratios.len() > SplitLabel::ORDER.len() {
        return Err(Error::InvalidConfig(format!(
            "expected 1 to 3 split ratios, got {}",
            ratios.len()
        )));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidConfig("split ratios must be non-negative".into()));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidConfig(format!("split ratios sum to {sum}, expected 1")));
    }
    let raw: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|v| (v + 1e-9).floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - counts[a] as f64;
        let fb = raw[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut i = 0;
    while assigned < n {
        counts[order[i % order.len()]] += 1;
        assigned += 1;
        i += 1;
    }
    Ok(counts)
}

/// Shuffles under `seed` and partitions into train/val/test manifests in
/// ratio order.
pub fn split_dataset(manifest: &DatasetManifest, ratios: &[f64], seed: u64) -> Result<Vec<DatasetManifest>> {
    let counts = split_counts(manifest.len(), ratios)?;
    let mut entries = manifest.entries.clone();
    entries.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rest = entries.into_iter();
    Ok(counts
        .iter()
        .zip(SplitLabel::ORDER)
        .map(|(&count, label)| DatasetManifest {
            entries: rest.by_ref().take(count).collect(),
            split_label: Some(label),
            seed,
            canvas: manifest.canvas,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ManifestEntry;
    use std::collections::HashSet;

    fn manifest(n: usize) -> DatasetManifest {
        DatasetManifest::new(
            (0..n)
                .map(|i| ManifestEntry::new(format!("s{i}"), format!("{i}.png")))
                .collect(),
            0,
        )
    }

    #[test]
    fn translator_dataset_split() {
        let counts = split_counts(432, &[389.0 / 432.0, 43.0 / 432.0]).unwrap();
        assert_eq!(counts, [389, 43]);
    }

    #[test]
    fn eighty_twenty() {
        let parts = split_dataset(&manifest(10), &[0.8, 0.2], 5).unwrap();
        assert_eq!(parts[0].len(), 8);
        assert_eq!(parts[1].len(), 2);
        assert_eq!(parts[0].split_label, Some(SplitLabel::Train));
        assert_eq!(parts[1].split_label, Some(SplitLabel::Val));
    }

    #[test]
    fn partition_property() {
        let m = manifest(37);
        let parts = split_dataset(&m, &[0.8, 0.1, 0.1], 11).unwrap();
        let mut seen = HashSet::new();
        for p in &parts {
            for e in &p.entries {
                assert!(seen.insert(e.id.clone()), "duplicate {}", e.id);
            }
        }
        assert_eq!(seen.len(), m.len());
        assert_eq!(parts, split_dataset(&m, &[0.8, 0.1, 0.1], 11).unwrap());
    }

    #[test]
    fn bad_ratios_rejected() {
        assert!(split_dataset(&manifest(4), &[0.5, 0.4], 0).is_err());
        assert!(split_dataset(&manifest(4), &[0.5, 0.2, 0.2, 0.1], 0).is_err());
    }
}
