use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::segmentation::RadiationMask;

/// Closed polygon along pixel edges, vertices at pixel corners
/// (`0..=width`, `0..=height`), clockwise on screen, collinear points removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Point>,
    pub image_width: usize,
    pub image_height: usize,
}

impl Contour {
    /// Smallest `y`, ties broken by smallest `x`.
    pub fn topmost(&self) -> Option<Point> {
        self.points.iter().copied().min_by_key(|p| (p.y, p.x))
    }

    pub fn area_px(&self) -> f64 {
        let pts: Vec<[f64; 2]> = self.points.iter().map(|p| [p.x as f64, p.y as f64]).collect();
        shoelace_area(&pts)
    }
}

/// Absolute polygon area; fewer than 3 vertices give 0.
pub fn shoelace_area(points: &[[f64; 2]]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..points.len() {
        let [x0, y0] = points[i];
        let [x1, y1] = points[(i + 1) % points.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice.abs() / 2.0
}

/// Pixels of the largest 8-connected component of `foreground`; ties go to
/// the component found first in row-major order.
pub fn largest_component(foreground: &[bool], width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut seen = vec![false; foreground.len()];
    let mut best: Vec<(usize, usize)> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..foreground.len() {
        if !foreground[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % width, i / width);
            comp.push((x, y));
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        continue;
                    }
                    let j = ny as usize * width + nx as usize;
                    if foreground[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

// Directions: E, S, W, N. Right turn is +1.
const DX: [i64; 4] = [1, 0, -1, 0];
const DY: [i64; 4] = [0, 1, 0, -1];

/// External boundary of the largest connected foreground component, all
/// non-background classes merged. Holes are ignored.
pub fn extract_contour(mask: &RadiationMask) -> Result<Contour> {
    let (w, h) = (mask.width(), mask.height());
    let comp = largest_component(&mask.foreground(), w, h);
    if comp.is_empty() {
        return Err(Error::NoFlameDetected);
    }
    let mut member = vec![false; w * h];
    for &(x, y) in &comp {
        member[y * w + x] = true;
    }
    let inside =
        |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && member[y as usize * w + x as usize];

    // Outgoing boundary edges per corner vertex, one bit per direction.
    let vw = w + 1;
    let mut out = vec![0u8; vw * (h + 1)];
    let vid = |x: i64, y: i64| y as usize * vw + x as usize;
    for &(px, py) in &comp {
        let (x, y) = (px as i64, py as i64);
        if !inside(x, y - 1) {
            out[vid(x, y)] |= 1 << 0;
        }
        if !inside(x + 1, y) {
            out[vid(x + 1, y)] |= 1 << 1;
        }
        if !inside(x, y + 1) {
            out[vid(x + 1, y + 1)] |= 1 << 2;
        }
        if !inside(x - 1, y) {
            out[vid(x, y + 1)] |= 1 << 3;
        }
    }

    // The first pixel in scan order has its top-left corner on the outer boundary.
    let (sx, sy) = comp.iter().copied().min_by_key(|&(x, y)| (y, x)).expect("nonempty");
    let start = (sx as i64, sy as i64);
    let mut path: Vec<(Point, usize)> = Vec::new();
    let (mut x, mut y) = start;
    let mut dir = 0usize;
    loop {
        out[vid(x, y)] &= !(1 << dir);
        path.push((Point::new(x, y), dir));
        x += DX[dir];
        y += DY[dir];
        if (x, y) == start {
            break;
        }
        let avail = out[vid(x, y)];
        // Left turn first keeps diagonal neighbours inside the same boundary.
        dir = [(dir + 3) % 4, dir, (dir + 1) % 4]
            .into_iter()
            .find(|&d| avail & (1 << d) != 0)
            .ok_or_else(|| Error::InvalidInput("open boundary while tracing contour".into()))?;
    }

    let n = path.len();
    let points = (0..n)
        .filter(|&i| path[(i + n - 1) % n].1 != path[i].1)
        .map(|i| path[i].0)
        .collect();
    Ok(Contour {
        points,
        image_width: w,
        image_height: h,
    })
}
