use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::hausdorff;
use crate::point::Point;

/// Foreground pixels of the masks obtained from the two image sources for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPair {
    pub frame_id: String,
    pub experiment: String,
    pub model_variant: String,
    pub a: Vec<Point>,
    pub b: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HausdorffGroup {
    pub experiment: String,
    pub model_variant: String,
    pub mean_hd: f64,
    pub min_hd: f64,
    pub max_hd: f64,
    pub n: usize,
}

/// Mean per-frame Hausdorff distance per `(experiment, model_variant)`,
/// ordered by those keys.
pub fn aggregate_hausdorff(pairs: &[MaskPair]) -> Result<Vec<HausdorffGroup>> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no mask pairs to aggregate".into()));
    }
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for p in pairs {
        let hd = hausdorff(&p.a, &p.b)
            .map_err(|e| e.at_stage("hausdorff", p.frame_id.clone()))?
            .value;
        groups
            .entry((p.experiment.clone(), p.model_variant.clone()))
            .or_default()
            .push(hd);
    }
    Ok(groups
        .into_iter()
        .map(|((experiment, model_variant), v)| HausdorffGroup {
            experiment,
            model_variant,
            mean_hd: v.iter().sum::<f64>() / v.len() as f64,
            min_hd: v.iter().copied().fold(f64::INFINITY, f64::min),
            max_hd: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n: v.len(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: &str, model: &str, a: &[(i64, i64)], b: &[(i64, i64)]) -> MaskPair {
        MaskPair {
            frame_id: id.into(),
            experiment: "e".into(),
            model_variant: model.into(),
            a: a.iter().map(|&p| p.into()).collect(),
            b: b.iter().map(|&p| p.into()).collect(),
        }
    }

    #[test]
    fn mean_of_three_and_five() {
        let g = aggregate_hausdorff(&[
            pair("0", "unet", &[(0, 0)], &[(3, 0)]),
            pair("1", "unet", &[(0, 0)], &[(3, 4)]),
        ])
        .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].mean_hd, g[0].min_hd, g[0].max_hd, g[0].n), (4.0, 3.0, 5.0, 2));
    }

    #[test]
    fn identical_pairs_zero_and_grouped() {
        let g = aggregate_hausdorff(&[
            pair("0", "unet", &[(1, 1)], &[(1, 1)]),
            pair("0", "attention_unet", &[(1, 1), (2, 2)], &[(2, 2), (1, 1)]),
        ])
        .unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|x| x.mean_hd == 0.0));
        assert_eq!(g[0].model_variant, "attention_unet");
    }

    #[test]
    fn empty_rejected() {
        assert!(aggregate_hausdorff(&[]).is_err());
        assert!(aggregate_hausdorff(&[pair("0", "u", &[], &[(0, 0)])]).is_err());
    }
}
