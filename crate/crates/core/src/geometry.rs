//! Planar convex hulls and containment tests.

/// Twice the signed area of triangle (o, a, b); positive when counter-clockwise.
#[inline]
pub fn orient(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, collinear
/// points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Whether `p` lies in the closed convex polygon `hull` (counter-clockwise).
///
/// Each edge test allows a slack of `rel_tol` times the edge length times
/// the point's distance scale, which absorbs the last-bit rounding of a
/// point computed on an edge.
pub fn in_convex_polygon(hull: &[[f64; 2]], p: [f64; 2], rel_tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => p == hull[0],
        _ => {
            let scale = hull
                .iter()
                .chain(std::iter::once(&p))
                .map(|q| q[0].abs().max(q[1].abs()))
                .fold(1.0, f64::max);
            (0..hull.len()).all(|i| {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                if hull.len() == 2 {
                    // degenerate hull: p must be on the segment
                    let o = orient(a, b, p).abs() <= rel_tol * len * scale;
                    let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
                    o && (-rel_tol..=1.0 + rel_tol).contains(&t)
                } else {
                    orient(a, b, p) >= -rel_tol * len * scale
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(in_convex_polygon(&h, [0.5, 0.5], 0.0));
        assert!(in_convex_polygon(&h, [1.0, 0.3], 0.0));
        assert!(!in_convex_polygon(&h, [1.0 + 1e-9, 0.3], 1e-12));
        assert!(!in_convex_polygon(&h, [-0.1, -0.1], 1e-12));
    }
}
