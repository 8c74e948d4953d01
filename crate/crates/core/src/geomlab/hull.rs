use crate::error::{Error, Result};
use crate::grid::{measure, polygon_area, polygon_signed_distance, Point, Region};

/// Counterclockwise convex hull by Andrew's monotone chain; collinear points
/// are dropped.
pub fn convex_hull_points(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Hull of all contour vertices, rasterized back onto the region's grid.
pub fn convex_hull(region: &Region) -> Result<Region> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let pts: Vec<Point> = region.contour_points().copied().collect();
    let hull = convex_hull_points(&pts);
    if hull.len() < 3 {
        return Err(Error::DegenerateShape("hull of the contour has no interior".into()));
    }
    let g = *region.grid();
    let phi = (0..g.len()).map(|k| polygon_signed_distance(&hull, g.point(k))).collect();
    Region::from_level_set(g, phi)
}

/// `(area(hull) - area) / area`, zero for convex regions up to discretization.
pub fn convexity_deficit(region: &Region) -> Result<f64> {
    let hull = convex_hull(region)?;
    let (a, _) = measure(region);
    let (ah, _) = measure(&hull);
    Ok(((ah - a) / a).max(0.0))
}

/// Relative area gap between a closed polygon and its hull.
pub fn polygon_convexity_deficit(poly: &[Point]) -> f64 {
    let a = polygon_area(poly).abs();
    if a == 0.0 {
        return 0.0;
    }
    let ah = polygon_area(&convex_hull_points(poly)).abs();
    ((ah - a) / a).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize, Grid, Shape};

    #[test]
    fn polygon_hull_is_idempotent() {
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        let h = convex_hull_points(&l);
        assert_eq!(h.len(), 5);
        assert!((polygon_area(&h) - 3.5).abs() < 1e-12);
        assert_eq!(convex_hull_points(&h), h);
        assert!((polygon_convexity_deficit(&l) - 0.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_region_is_rejected() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(matches!(convex_hull(&Region::empty(g)), Err(Error::EmptyRegion)));
    }

    #[test]
    fn disk_is_convex() {
        let g = Grid::new(128, 2.0).unwrap();
        let d = rasterize(&Shape::disk(1.2), &g).unwrap();
        assert!(convexity_deficit(&d).unwrap() < 1e-2);
    }
}
