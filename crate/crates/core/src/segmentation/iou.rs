use crate::error::{Error, Result};

/// Per-class intersection and union pixel counts, accumulated over frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IouCounts {
    intersection: Vec<u64>,
    union: Vec<u64>,
}

impl IouCounts {
    pub fn new(num_classes: usize) -> Self {
        Self {
            intersection: vec![0; num_classes],
            union: vec![0; num_classes],
        }
    }

    pub fn add(&mut self, predicted: &[u8], truth: &[u8]) -> Result<()> {
        if predicted.len() != truth.len() {
            return Err(Error::dims(truth.len(), predicted.len()));
        }
        let k = self.intersection.len();
        for (&p, &t) in predicted.iter().zip(truth) {
            let (p, t) = (p as usize, t as usize);
            if p >= k || t >= k {
                return Err(Error::InvalidInput(format!(
                    "label {} out of range for {k} classes",
                    p.max(t)
                )));
            }
            if p == t {
                self.intersection[p] += 1;
                self.union[p] += 1;
            } else {
                self.union[p] += 1;
                self.union[t] += 1;
            }
        }
        Ok(())
    }

    /// IoU per class; `None` for classes absent from both prediction and truth.
    pub fn per_class(&self) -> Vec<Option<f64>> {
        self.intersection
            .iter()
            .zip(&self.union)
            .map(|(&i, &u)| (u > 0).then(|| i as f64 / u as f64))
            .collect()
    }

    /// Mean over classes that occur in prediction or truth.
    pub fn mean(&self) -> f64 {
        let present: Vec<f64> = self.per_class().into_iter().flatten().collect();
        if present.is_empty() {
            return 1.0;
        }
        present.iter().sum::<f64>() / present.len() as f64
    }
}

pub fn mean_iou(predicted: &[u8], truth: &[u8], num_classes: usize) -> Result<f64> {
    let mut c = IouCounts::new(num_classes);
    c.add(predicted, truth)?;
    Ok(c.mean())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_one() {
        assert_eq!(mean_iou(&[0, 1, 2, 2], &[0, 1, 2, 2], 4).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed() {
        // class 0: I=1, U=2; class 1: I=1, U=2
        let v = mean_iou(&[0, 1, 1], &[0, 0, 1], 2).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(mean_iou(&[5], &[0], 2).is_err());
        assert!(mean_iou(&[0, 0], &[0], 2).is_err());
    }
}
