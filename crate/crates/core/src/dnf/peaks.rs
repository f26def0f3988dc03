use super::Field;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Activation-weighted centroid in cell coordinates.
    pub x: f64,
    pub y: f64,
    /// Summed supra-threshold activation.
    pub mass: f64,
    pub max_activation: f64,
}

struct Region {
    first: usize,
    sx: f64,
    sy: f64,
    mass: f64,
    max: f64,
}

impl Region {
    fn centroid(&self) -> (f64, f64) {
        (self.sx / self.mass, self.sy / self.mass)
    }
}

/// Extracts 4-connected regions above `threshold`, weighting each cell by its
/// excess over the threshold. Regions whose centroids lie closer than
/// `min_separation` are merged into the heavier one. The result is sorted by
/// mass, heaviest first; equal masses keep row-major discovery order.
pub fn detect_peaks(field: &Field, threshold: f64, min_separation: f64) -> Vec<Peak> {
    let (w, h) = (field.resolution.width as usize, field.resolution.height as usize);
    let u = &field.u;
    let mut seen = vec![false; u.len()];
    let mut regions: Vec<Region> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..u.len() {
        if seen[start] || u[start] <= threshold {
            continue;
        }
        let mut reg = Region {
            first: start,
            sx: 0.0,
            sy: 0.0,
            mass: 0.0,
            max: f64::NEG_INFINITY,
        };
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let m = u[i] - threshold;
            reg.sx += m * x as f64;
            reg.sy += m * y as f64;
            reg.mass += m;
            reg.max = reg.max.max(u[i]);
            let mut visit = |j: usize| {
                if !seen[j] && u[j] > threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        regions.push(reg);
    }

    regions.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.first.cmp(&b.first)));
    let mut merged: Vec<Region> = Vec::new();
    for r in regions {
        let (cx, cy) = r.centroid();
        let target = merged.iter_mut().find(|m| {
            let (mx, my) = m.centroid();
            ((mx - cx).powi(2) + (my - cy).powi(2)).sqrt() < min_separation
        });
        match target {
            Some(m) => {
                m.sx += r.sx;
                m.sy += r.sy;
                m.mass += r.mass;
                m.max = m.max.max(r.max);
            }
            None => merged.push(r),
        }
    }
    merged.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.first.cmp(&b.first)));
    merged
        .iter()
        .map(|r| {
            let (x, y) = r.centroid();
            Peak {
                x,
                y,
                mass: r.mass,
                max_activation: r.max,
            }
        })
        .collect()
}
