//! Small-dimensional polytope helpers: vertex enumeration for 2-D half-space
//! systems, downward-closed convex hulls in 2-D and 3-D, areas and
//! vertex-set Hausdorff distances.

use crate::simplex::{in_convex_hull, in_downward_hull};

/// Absolute tolerance for vertex identification.
pub const VERTEX_TOL: f64 = 1e-9;

/// `a · x ≤ b` in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub a: [f64; 2],
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Vertices2 {
    Empty,
    Unbounded,
    /// Counterclockwise, starting from the lexicographically smallest vertex.
    Polygon(Vec<[f64; 2]>),
}

impl Vertices2 {
    pub fn points(&self) -> &[[f64; 2]] {
        match self {
            Vertices2::Polygon(v) => v,
            _ => &[],
        }
    }
}

fn satisfies(lines: &[Line], p: [f64; 2]) -> bool {
    lines
        .iter()
        .all(|l| l.a[0] * p[0] + l.a[1] * p[1] <= l.b + VERTEX_TOL * (1.0 + l.b.abs()))
}

/// Vertices of `{x ≥ 0 : a·x ≤ b for every line}`.
pub fn vertices_2d(lines: &[Line]) -> Vertices2 {
    let mut all: Vec<Line> = lines.to_vec();
    all.push(Line { a: [-1.0, 0.0], b: 0.0 });
    all.push(Line { a: [0.0, -1.0], b: 0.0 });

    let mut pts = Vec::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let (l1, l2) = (all[i], all[j]);
            let det = l1.a[0] * l2.a[1] - l1.a[1] * l2.a[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let x = (l1.b * l2.a[1] - l1.a[1] * l2.b) / det;
            let y = (l1.a[0] * l2.b - l1.b * l2.a[0]) / det;
            let p = [clean(x), clean(y)];
            if satisfies(&all, p) {
                pts.push(p);
            }
        }
    }
    if pts.is_empty() {
        return Vertices2::Empty;
    }
    let mut rays = vec![[1.0, 0.0], [0.0, 1.0]];
    for l in lines {
        for d in [[l.a[1], -l.a[0]], [-l.a[1], l.a[0]]] {
            if d[0] >= 0.0 && d[1] >= 0.0 && (d[0] > 0.0 || d[1] > 0.0) {
                rays.push(d);
            }
        }
    }
    let unbounded = rays.iter().any(|d| {
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        lines.iter().all(|l| (l.a[0] * d[0] + l.a[1] * d[1]) / n <= 1e-12)
    });
    if unbounded {
        return Vertices2::Unbounded;
    }
    Vertices2::Polygon(convex_hull_2d(&pts))
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else {
        v
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull; collinear and near-duplicate points dropped.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup_by(|a, b| (a[0] - b[0]).abs() <= VERTEX_TOL && (a[1] - b[1]).abs() <= VERTEX_TOL);
    if p.len() < 3 {
        return p;
    }
    let turn_tol = 1e-13;
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= turn_tol {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= turn_tol {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Vertices of the convex hull of `points` together with their projections
/// onto both axes and the origin, i.e. the smallest downward-closed convex
/// set in the nonnegative quadrant containing them.
pub fn downward_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut all = vec![[0.0, 0.0]];
    for p in points {
        let p = [p[0].max(0.0), p[1].max(0.0)];
        all.push(p);
        all.push([p[0], 0.0]);
        all.push([0.0, p[1]]);
    }
    convex_hull_2d(&all)
}

/// Shoelace area of a polygon given in order.
pub fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, q) = (vertices[i], vertices[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    twice.abs() / 2.0
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Hausdorff distance between two finite point sets (any dimension).
pub fn hausdorff<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_way = |x: &[P], y: &[P]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(p.as_ref(), q.as_ref())).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Is `p` inside the downward-closed convex hull of `vertices`?
pub fn downward_contains<P: AsRef<[f64]>>(vertices: &[P], p: &[f64], tol: f64) -> bool {
    let pts: Vec<Vec<f64>> = vertices.iter().map(|v| v.as_ref().to_vec()).collect();
    in_downward_hull(&pts, p, tol)
}

fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    (0..3).all(|k| a[k] >= b[k] - VERTEX_TOL)
}

/// Vertices of the smallest downward-closed convex set in the nonnegative
/// octant containing `points` (the hull of the boxes `[0, p]`), in
/// lexicographic order.
pub fn downward_hull_3d(points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let pts: Vec<[f64; 3]> = points.iter().map(|p| [p[0].max(0.0), p[1].max(0.0), p[2].max(0.0)]).collect();
    // Pareto-maximal points, then those not dominated by a mix of the others.
    let mut maximal: Vec<[f64; 3]> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let dominated = pts.iter().enumerate().any(|(j, q)| {
            j != i && dominates(q, p) && (!dominates(p, q) || j < i)
        });
        if !dominated {
            maximal.push(*p);
        }
    }
    let mut tops: Vec<[f64; 3]> = Vec::new();
    for (i, p) in maximal.iter().enumerate() {
        let others: Vec<Vec<f64>> = maximal
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| q.to_vec())
            .collect();
        if others.is_empty() || !in_downward_hull(&others, p, 1e-12) {
            tops.push(*p);
        }
    }
    // Every vertex is a corner of some box [0, top].
    let mut cands: Vec<[f64; 3]> = Vec::new();
    for t in &tops {
        for mask in 0..8u8 {
            let c = [
                if mask & 1 != 0 { t[0] } else { 0.0 },
                if mask & 2 != 0 { t[1] } else { 0.0 },
                if mask & 4 != 0 { t[2] } else { 0.0 },
            ];
            if !cands.iter().any(|q| dist(q, &c) <= VERTEX_TOL) {
                cands.push(c);
            }
        }
    }
    let mut out: Vec<[f64; 3]> = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        let others: Vec<Vec<f64>> = cands
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| q.to_vec())
            .collect();
        if others.is_empty() || !in_convex_hull(&others, c, 1e-12) {
            out.push(*c);
        }
    }
    out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2])));
    out
}
