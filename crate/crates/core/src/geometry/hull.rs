use super::GeometryError;
use crate::point::Point;

/// z-component of `(a - o) × (b - o)`; positive for a left turn.
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull by Andrew's monotone chain.
///
/// Vertices are counter-clockwise, start at the lowest-x (then lowest-y)
/// point and contain no collinear triples. Fewer than three distinct points,
/// or a fully collinear set, yield the two extreme points (or the single
/// point).
pub fn convex_hull(points: &[Point]) -> Result<Vec<Point>, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(pts);
    }

    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);

    if lower.len() < 3 {
        log::warn!("convex hull of {} collinear points is a segment", pts.len());
    }
    Ok(lower)
}

/// True when `p` lies inside or on the convex polygon `hull` (CCW).
pub fn hull_contains(hull: &[Point], p: Point, tolerance: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0].dist2(p).sqrt() <= tolerance,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            let len = a.dist2(b).sqrt();
            let off_line = cross(a, b, p).abs() / len;
            let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len);
            off_line <= tolerance && (-tolerance..=1.0 + tolerance).contains(&t)
        }
        m => (0..m).all(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % m]);
            cross(a, b, p) >= -tolerance * a.dist2(b).sqrt()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(raw: &[(f64, f64)]) -> Vec<Point> {
        raw.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn triangle_is_itself() {
        let t = pts(&[(0.0, 0.0), (2.0, 0.0), (1.0, 3.0)]);
        assert_eq!(convex_hull(&t).unwrap(), t);
    }

    #[test]
    fn square_with_center() {
        let p = pts(&[(0.5, 0.5), (1.0, 1.0), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(
            convex_hull(&p).unwrap(),
            pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
        );
    }

    #[test]
    fn edge_midpoints_are_dropped() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0), (0.0, 1.0)]);
        assert_eq!(convex_hull(&p).unwrap().len(), 4);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(convex_hull(&[]), Err(GeometryError::EmptyInput));
        let one = pts(&[(3.0, 4.0), (3.0, 4.0)]);
        assert_eq!(convex_hull(&one).unwrap(), pts(&[(3.0, 4.0)]));
        let line = pts(&[(2.0, 2.0), (0.0, 0.0), (1.0, 1.0), (3.0, 3.0)]);
        assert_eq!(convex_hull(&line).unwrap(), pts(&[(0.0, 0.0), (3.0, 3.0)]));
        assert!(hull_contains(&convex_hull(&line).unwrap(), Point::new(1.5, 1.5), 1e-9));
    }

    proptest! {
        #[test]
        fn hull_contains_all_points_and_is_convex(
            raw in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..80)
        ) {
            let p: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let h = convex_hull(&p).unwrap();
            for q in &p {
                prop_assert!(hull_contains(&h, *q, 1e-9));
            }
            for v in &h {
                prop_assert!(p.contains(v));
            }
            if h.len() >= 3 {
                for i in 0..h.len() {
                    let turn = cross(h[i], h[(i + 1) % h.len()], h[(i + 2) % h.len()]);
                    prop_assert!(turn > 0.0);
                }
            }
        }
    }
}
