use super::grid::Point;

/// Largest distance between two of the points; uses the convex hull in the
/// plane and a direct scan otherwise.
pub fn max_pairwise_distance(pts: &[Point], dim: usize) -> f64 {
    match dim {
        1 => {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            (hi - lo).max(0.0)
        }
        2 => brute(&convex_hull(pts), 2),
        _ => brute(pts, dim),
    }
}

fn brute(pts: &[Point], dim: usize) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let d2: f64 = (0..dim).map(|k| (a[k] - b[k]).powi(2)).sum();
            best = best.max(d2);
        }
    }
    best.sqrt()
}

/// Andrew's monotone chain; returns hull vertices counter-clockwise.
pub fn convex_hull(pts: &[Point]) -> Vec<Point> {
    let mut p: Vec<Point> = pts.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: &Point, a: &Point, b: &Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut h: Vec<Point> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = h.len();
        let iter: Box<dyn Iterator<Item = &Point>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for q in iter {
            while h.len() >= start + 2 && cross(&h[h.len() - 2], &h[h.len() - 1], q) <= 0.0 {
                h.pop();
            }
            h.push(*q);
        }
        h.pop();
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let mut pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        pts.push([0.5, 0.5, 0.0]);
        pts.push([0.2, 0.7, 0.0]);
        assert_eq!(convex_hull(&pts).len(), 4);
        assert!((max_pairwise_distance(&pts, 2) - 2f64.sqrt()).abs() < 1e-15);
    }
}
