//! Convex hull by Andrew's monotone chain with shoelace area.

use crate::error::{Error, Result};

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Hull vertices in counter-clockwise order. Collinear inputs collapse to
/// the two extreme points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }

    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Shoelace area of the convex hull; collinear point sets have area 0.0.
/// Fewer than 3 points is an error.
pub fn convex_hull_area(points: &[[f64; 2]]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Data(format!(
            "hull area needs at least 3 points, got {}",
            points.len()
        )));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Ok(0.0);
    }
    let mut twice_area = 0.0;
    for i in 0..hull.len() {
        let [x1, y1] = hull[i];
        let [x2, y2] = hull[(i + 1) % hull.len()];
        twice_area += x1 * y2 - x2 * y1;
    }
    Ok(twice_area.abs() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_has_unit_area() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((convex_hull_area(&pts).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_have_zero_area() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        assert_eq!(convex_hull_area(&pts).unwrap(), 0.0);
    }

    #[test]
    fn interior_points_do_not_change_the_hull() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.25, 0.75],
        ];
        assert!((convex_hull_area(&pts).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(convex_hull_area(&[[0.0, 0.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn area_is_rotation_invariant() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0], [1.0, 0.5]];
        let base = convex_hull_area(&pts).unwrap();
        let theta: f64 = 0.83;
        let rotated: Vec<[f64; 2]> = pts
            .iter()
            .map(|[x, y]| {
                [
                    x * theta.cos() - y * theta.sin(),
                    x * theta.sin() + y * theta.cos(),
                ]
            })
            .collect();
        let rot = convex_hull_area(&rotated).unwrap();
        assert!((base - rot).abs() < 1e-9);
    }
}
