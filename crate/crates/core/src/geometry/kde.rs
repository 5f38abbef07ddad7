use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::point::Point;

pub const DEFAULT_RESOLUTION: usize = 100;
/// Fraction of the bounding-box span added on every side of the grid.
pub const PADDING: f64 = 0.05;

/// Density sampled at cell centres. `values[j * nx + i]` is the density at
/// `(origin.x + (i + 0.5) * cell.x, origin.y + (j + 0.5) * cell.y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub origin: [f64; 2],
    pub cell: [f64; 2],
    /// `[nx, ny]`.
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn nx(&self) -> usize {
        self.shape[0]
    }

    pub fn ny(&self) -> usize {
        self.shape[1]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx() + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin[0] + (i as f64 + 0.5) * self.cell[0],
            self.origin[1] + (j as f64 + 0.5) * self.cell[1],
        )
    }

    /// Midpoint-rule integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell[0] * self.cell[1]
    }

    /// `(i, j)` of the largest value; the first one in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (idx, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = idx;
            }
        }
        (best % self.nx(), best / self.nx())
    }
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Scott's rule per axis (`n^(-1/6) σ`), combined by geometric mean. An axis
/// with zero spread is ignored; with no spread at all the bandwidth is 1.
pub fn scott_bandwidth(points: &[Point]) -> f64 {
    let factor = (points.len() as f64).powf(-1.0 / 6.0);
    let hx = factor * std_dev(points.iter().map(|p| p.x));
    let hy = factor * std_dev(points.iter().map(|p| p.y));
    match (hx > 0.0, hy > 0.0) {
        (true, true) => (hx * hy).sqrt(),
        (true, false) => hx,
        (false, true) => hy,
        (false, false) => 1.0,
    }
}

/// Grid extent along one axis: the data span padded by 5% per side, or a
/// span of `6h` centred on the data when it has no extent.
fn axis_extent(lo: f64, hi: f64, h: f64) -> (f64, f64) {
    let span = hi - lo;
    if span > 0.0 {
        (lo - PADDING * span, span * (1.0 + 2.0 * PADDING))
    } else {
        (lo - 3.0 * h, 6.0 * h)
    }
}

/// Isotropic Gaussian kernel density estimate on a regular grid.
pub fn kde_grid(
    points: &[Point],
    bandwidth: Option<f64>,
    resolution: usize,
) -> Result<DensityGrid, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    if resolution == 0 {
        return Err(GeometryError::InvalidResolution);
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(GeometryError::InvalidBandwidth(h)),
        None => scott_bandwidth(points),
    };

    let (min_x, max_x) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.x), hi.max(p.x))
    });
    let (min_y, max_y) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.y), hi.max(p.y))
    });
    let (x0, wx) = axis_extent(min_x, max_x, h);
    let (y0, wy) = axis_extent(min_y, max_y, h);
    let (nx, ny) = (resolution, resolution);
    let (dx, dy) = (wx / nx as f64, wy / ny as f64);

    // The kernel factorises over axes, so precompute per-point 1D weights.
    let inv = -0.5 / (h * h);
    let axis_weights = |origin: f64, step: f64, count: usize, coord: fn(&Point) -> f64| -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|p| {
                (0..count)
                    .map(|i| {
                        let d = origin + (i as f64 + 0.5) * step - coord(p);
                        (inv * d * d).exp()
                    })
                    .collect()
            })
            .collect()
    };
    let wxs = axis_weights(x0, dx, nx, |p| p.x);
    let wys = axis_weights(y0, dy, ny, |p| p.y);
    let norm = 1.0 / (2.0 * PI * h * h * points.len() as f64);

    let values: Vec<f64> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut row = vec![0.0; nx];
            for (wx, wy) in wxs.iter().zip(&wys) {
                let wy = wy[j];
                if wy == 0.0 {
                    continue;
                }
                for (r, w) in row.iter_mut().zip(wx) {
                    *r += w * wy;
                }
            }
            row.into_iter().map(move |v| v * norm)
        })
        .collect();

    Ok(DensityGrid {
        origin: [x0, y0],
        cell: [dx, dy],
        shape: [nx, ny],
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_peaks_at_its_cell() {
        let p = Point::new(2.5, -1.0);
        let g = kde_grid(&[p], None, 100).unwrap();
        let (i, j) = g.argmax();
        let c = g.cell_center(i, j);
        assert!((c.x - p.x).abs() <= 0.5 * g.cell[0] + 1e-12);
        assert!((c.y - p.y).abs() <= 0.5 * g.cell[1] + 1e-12);
        assert!(g.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn two_points_give_symmetric_maxima() {
        let pts = [Point::new(-10.0, 0.0), Point::new(10.0, 0.0)];
        let g = kde_grid(&pts, Some(1.0), 101).unwrap();
        let (i, j) = g.argmax();
        let mirror = g.value(g.nx() - 1 - i, j);
        assert!((mirror - g.value(i, j)).abs() < 1e-12 * g.value(i, j));
        // The midpoint is far below either peak.
        assert!(g.value(50, j) < 1e-6 * g.value(i, j));
    }

    #[test]
    fn scott_rule() {
        let pts: Vec<Point> = (0..64).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        let sx = std_dev(pts.iter().map(|p| p.x));
        let expected = 64f64.powf(-1.0 / 6.0) * (sx * 2.0 * sx).sqrt();
        assert!((scott_bandwidth(&pts) - expected).abs() < 1e-12);
        assert_eq!(scott_bandwidth(&[Point::ORIGIN]), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(kde_grid(&[], None, 10), Err(GeometryError::EmptyInput));
        assert_eq!(kde_grid(&[Point::ORIGIN], None, 0), Err(GeometryError::InvalidResolution));
        assert!(kde_grid(&[Point::ORIGIN], Some(-1.0), 10).is_err());
    }
}
