use super::{MetricName, MetricValue};
use crate::error::{Error, Result};
use crate::point::Point;

/// Grids above this many cells fall back to the pairwise scan.
const MAX_GRID_CELLS: i64 = 1 << 26;

/// Symmetric Hausdorff distance `max(h(A,B), h(B,A))` under the Euclidean norm.
///
/// Exact: squared distances are computed in integer arithmetic through a
/// separable distance transform over the bounding box of both sets.
pub fn hausdorff(a: &[Point], b: &[Point]) -> Result<MetricValue> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    let d2 = directed_sq(a, b).max(directed_sq(b, a));
    Ok(MetricValue::new(MetricName::Hd, (d2 as f64).sqrt()))
}

/// Directed distance `h(A,B) = max_a min_b |a - b|`.
pub fn directed_hausdorff(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok((directed_sq(a, b) as f64).sqrt())
}

fn directed_sq(from: &[Point], to: &[Point]) -> i64 {
    let (min_x, max_x, min_y, max_y) = from
        .iter()
        .chain(to)
        .fold((i64::MAX, i64::MIN, i64::MAX, i64::MIN), |(a, b, c, d), p| {
            (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y))
        });
    let w = max_x - min_x + 1;
    let h = max_y - min_y + 1;
    if w.saturating_mul(h) > MAX_GRID_CELLS {
        return directed_sq_scan(from, to);
    }
    let (w, h) = (w as usize, h as usize);
    let mut seeds = vec![false; w * h];
    for p in to {
        seeds[(p.y - min_y) as usize * w + (p.x - min_x) as usize] = true;
    }
    let dist = squared_distance_transform(&seeds, w, h);
    from.iter()
        .map(|p| dist[(p.y - min_y) as usize * w + (p.x - min_x) as usize])
        .max()
        .unwrap_or(0)
}

fn directed_sq_scan(from: &[Point], to: &[Point]) -> i64 {
    let mut worst = 0i64;
    for &p in from {
        let mut best = i64::MAX;
        for &q in to {
            best = best.min(p.distance_sq(q));
            if best <= worst {
                break;
            }
        }
        worst = worst.max(best);
    }
    worst
}

const UNREACHED: i64 = i64::MAX / 4;

/// Exact squared Euclidean distance to the nearest seed cell.
fn squared_distance_transform(seeds: &[bool], w: usize, h: usize) -> Vec<i64> {
    // column pass: vertical distance to nearest seed
    let mut col = vec![UNREACHED; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        for y in 0..h {
            if seeds[y * w + x] {
                last = Some(y);
            }
            if let Some(s) = last {
                let d = (y - s) as i64;
                col[y * w + x] = d * d;
            }
        }
        last = None;
        for y in (0..h).rev() {
            if seeds[y * w + x] {
                last = Some(y);
            }
            if let Some(s) = last {
                let d = (s - y) as i64;
                col[y * w + x] = col[y * w + x].min(d * d);
            }
        }
    }
    // row pass: lower envelope of parabolas
    let mut out = vec![UNREACHED; w * h];
    let mut v = vec![0usize; w];
    let mut z = vec![0f64; w + 1];
    for y in 0..h {
        let f = &col[y * w..(y + 1) * w];
        let mut k: isize = -1;
        for q in 0..w {
            if f[q] >= UNREACHED {
                continue;
            }
            loop {
                if k < 0 {
                    k = 0;
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                let p = v[k as usize];
                let s = ((f[q] + (q * q) as i64) - (f[p] + (p * p) as i64)) as f64 / (2 * (q - p)) as f64;
                if s <= z[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                v[k as usize] = q;
                z[k as usize] = s;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        if k < 0 {
            continue;
        }
        let mut j = 0usize;
        for q in 0..w {
            while z[j + 1] < q as f64 {
                j += 1;
            }
            let p = v[j];
            let d = q as i64 - p as i64;
            out[y * w + q] = d * d + f[p];
        }
    }
    out
}
