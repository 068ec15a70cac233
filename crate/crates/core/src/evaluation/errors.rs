use crate::error::{Error, Result};

fn check(t: &[f64], p: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::InvalidInput("error metrics need at least one value".into()));
    }
    if t.len() != p.len() {
        return Err(Error::dims(t.len(), p.len()));
    }
    Ok(())
}

/// Mean absolute percentage error, relative to the true values `t`.
pub fn mape(t: &[f64], p: &[f64]) -> Result<f64> {
    check(t, p)?;
    let mut sum = 0.0;
    for (i, (&ti, &pi)) in t.iter().zip(p).enumerate() {
        if ti == 0.0 {
            return Err(Error::ZeroDenominator {
                series: "true",
                index: i,
            });
        }
        sum += (ti - pi).abs() / ti;
    }
    Ok(sum / t.len() as f64 * 100.0)
}

/// Root mean square percentage error, relative to the predicted values `p`.
pub fn rmspe(t: &[f64], p: &[f64]) -> Result<f64> {
    check(t, p)?;
    let mut sum = 0.0;
    for (i, (&ti, &pi)) in t.iter().zip(p).enumerate() {
        if pi == 0.0 {
            return Err(Error::ZeroDenominator {
                series: "predicted",
                index: i,
            });
        }
        let r = (ti - pi) / pi;
        sum += r * r;
    }
    Ok((sum / t.len() as f64).sqrt() * 100.0)
}

/// `rmspe - mape`; larger values indicate more spread in individual errors.
pub fn error_spread(mape_value: f64, rmspe_value: f64) -> f64 {
    rmspe_value - mape_value
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed() {
        let (t, p) = ([100.0, 200.0], [90.0, 210.0]);
        assert!((mape(&t, &p).unwrap() - 7.5).abs() < 1e-9);
        let expected = (((10.0f64 / 90.0).powi(2) + (10.0f64 / 210.0).powi(2)) / 2.0).sqrt() * 100.0;
        assert!((rmspe(&t, &p).unwrap() - expected).abs() < 1e-12);
        assert!((rmspe(&t, &p).unwrap() - 8.548).abs() < 1e-3);
        assert!((mape(&[50.0], &[60.0]).unwrap() - 20.0).abs() < 1e-12);
        assert!((rmspe(&[50.0], &[60.0]).unwrap() - 100.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators_name_the_index() {
        match mape(&[1.0, 0.0], &[1.0, 1.0]) {
            Err(Error::ZeroDenominator {
                series: "true",
                index: 1,
            }) => {}
            other => panic!("{other:?}"),
        }
        match rmspe(&[1.0, 1.0, 1.0], &[1.0, 1.0, 0.0]) {
            Err(Error::ZeroDenominator {
                series: "predicted",
                index: 2,
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spread_examples() {
        assert!((error_spread(4.591, 5.952) - 1.361).abs() < 1e-9);
        assert!((error_spread(25.845, 28.366) - 2.521).abs() < 1e-9);
        assert_eq!(error_spread(3.0, 3.0), 0.0);
    }

    #[test]
    fn length_mismatch_and_empty_rejected() {
        assert!(mape(&[], &[]).is_err());
        assert!(rmspe(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn series() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((0.1f64..100.0, 0.1f64..100.0), 1..20)
    }

    proptest! {
        #[test]
        fn scale_invariant(pairs in series(), k in 0.01f64..100.0) {
            let t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let ts: Vec<f64> = t.iter().map(|v| v * k).collect();
            let ps: Vec<f64> = p.iter().map(|v| v * k).collect();
            let (a, b) = (mape(&t, &p).unwrap(), mape(&ts, &ps).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            let (a, b) = (rmspe(&t, &p).unwrap(), rmspe(&ts, &ps).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn permutation_invariant(pairs in series(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { v.iter().copied().unzip() };
            let (t, p) = split(&pairs);
            let (ts, ps) = split(&shuffled);
            prop_assert!((mape(&t, &p).unwrap() - mape(&ts, &ps).unwrap()).abs() < 1e-9);
            prop_assert!((rmspe(&t, &p).unwrap() - rmspe(&ts, &ps).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn zero_iff_equal(t in proptest::collection::vec(0.1f64..100.0, 1..10)) {
            prop_assert_eq!(mape(&t, &t).unwrap(), 0.0);
            prop_assert_eq!(rmspe(&t, &t).unwrap(), 0.0);
            let mut p = t.clone();
            p[0] += 1.0;
            prop_assert!(mape(&t, &p).unwrap() > 0.0);
            prop_assert!(rmspe(&t, &p).unwrap() > 0.0);
        }
    }
}
