//! Convex hulls in dimensions 1 to 3 as facet lists.

use std::collections::HashSet;

use crate::error::{param, Result};

/// `normal . x <= offset` on every facet, with unit outward normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    pub d: usize,
    pub facets: Vec<(Vec<f64>, f64)>,
}

impl Hull {
    /// A hull with empty interior: nothing is strictly inside.
    pub fn is_degenerate(&self) -> bool {
        self.facets.is_empty()
    }

    /// Strictly inside every facet by more than `margin`.
    pub fn strictly_inside(&self, x: &[f64], margin: f64) -> bool {
        !self.facets.is_empty()
            && self
                .facets
                .iter()
                .all(|(n, off)| n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() < off - margin)
    }

    pub fn build(points: &[Vec<f64>]) -> Result<Hull> {
        let d = points.first().map_or(0, Vec::len);
        match d {
            0 => Ok(Hull { d, facets: vec![] }),
            1 => Ok(hull_1d(points)),
            2 => Ok(hull_2d(points)),
            3 => Ok(hull_3d(points)),
            _ => param(format!("hulls are implemented for d <= 3, not d = {d}")),
        }
    }
}

fn hull_1d(points: &[Vec<f64>]) -> Hull {
    let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let facets = if hi > lo { vec![(vec![-1.0], -lo), (vec![1.0], hi)] } else { vec![] };
    Hull { d: 1, facets }
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Vertices of the 2-d hull in counter-clockwise order (monotone chain).
pub fn hull_2d_vertices(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross2(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn hull_2d(points: &[Vec<f64>]) -> Hull {
    let v = hull_2d_vertices(points);
    if v.len() < 3 {
        return Hull { d: 2, facets: vec![] };
    }
    let facets = (0..v.len())
        .map(|k| {
            let a = v[k];
            let b = v[(k + 1) % v.len()];
            let n = [b[1] - a[1], a[0] - b[0]];
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            let n = vec![n[0] / len, n[1] / len];
            let off = n[0] * a[0] + n[1] * a[1];
            (n, off)
        })
        .collect();
    Hull { d: 2, facets }
}

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: V3) -> f64 {
    dot3(a, a).sqrt()
}

struct Face {
    v: [usize; 3],
    n: V3,
    off: f64,
}

fn make_face(p: &[V3], a: usize, b: usize, c: usize) -> Face {
    let n = cross(sub(p[b], p[a]), sub(p[c], p[a]));
    let len = norm(n);
    let n = if len > 0.0 { [n[0] / len, n[1] / len, n[2] / len] } else { n };
    Face {
        v: [a, b, c],
        n,
        off: dot3(n, p[a]),
    }
}

/// Incremental 3-d hull. Returns a facet-free hull when all points are coplanar.
fn hull_3d(points: &[Vec<f64>]) -> Hull {
    let p: Vec<V3> = points.iter().map(|q| [q[0], q[1], q[2]]).collect();
    let scale = p.iter().flat_map(|q| q.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let eps = 1e-12 * scale;
    let degenerate = Hull { d: 3, facets: vec![] };
    if p.len() < 4 {
        return degenerate;
    }
    // initial simplex from extreme, far and non-coplanar points
    let i0 = 0;
    let Some(i1) = (0..p.len()).max_by(|&a, &b| norm(sub(p[a], p[i0])).total_cmp(&norm(sub(p[b], p[i0])))) else {
        return degenerate;
    };
    if norm(sub(p[i1], p[i0])) <= eps {
        return degenerate;
    }
    let line = sub(p[i1], p[i0]);
    let i2 = (0..p.len())
        .max_by(|&a, &b| norm(cross(line, sub(p[a], p[i0]))).total_cmp(&norm(cross(line, sub(p[b], p[i0])))))
        .unwrap();
    let plane = cross(line, sub(p[i2], p[i0]));
    if norm(plane) <= eps * scale {
        return degenerate;
    }
    let i3 = (0..p.len())
        .max_by(|&a, &b| {
            dot3(plane, sub(p[a], p[i0]))
                .abs()
                .total_cmp(&dot3(plane, sub(p[b], p[i0])).abs())
        })
        .unwrap();
    if dot3(plane, sub(p[i3], p[i0])).abs() / norm(plane) <= eps {
        return degenerate;
    }
    let simplex = [i0, i1, i2, i3];
    let centroid = simplex.iter().fold([0.0; 3], |acc, &i| {
        [acc[0] + p[i][0] / 4.0, acc[1] + p[i][1] / 4.0, acc[2] + p[i][2] / 4.0]
    });
    let mut faces: Vec<Face> = Vec::new();
    for &(a, b, c) in &[(i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)] {
        let f = make_face(&p, a, b, c);
        if dot3(f.n, centroid) - f.off > 0.0 {
            faces.push(make_face(&p, a, c, b));
        } else {
            faces.push(f);
        }
    }
    for (idx, &q) in p.iter().enumerate() {
        if simplex.contains(&idx) {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| dot3(f.n, q) - f.off > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for k in 0..3 {
                edges.insert((f.v[k], f.v[(k + 1) % 3]));
            }
        }
        let mut next: Vec<Face> = Vec::with_capacity(faces.len());
        let mut horizon = Vec::new();
        for (f, vis) in faces.into_iter().zip(visible) {
            if vis {
                for k in 0..3 {
                    let (a, b) = (f.v[k], f.v[(k + 1) % 3]);
                    if !edges.contains(&(b, a)) {
                        horizon.push((a, b));
                    }
                }
            } else {
                next.push(f);
            }
        }
        for (a, b) in horizon {
            next.push(make_face(&p, a, b, idx));
        }
        faces = next;
    }
    Hull {
        d: 3,
        facets: faces.into_iter().map(|f| (f.n.to_vec(), f.off)).collect(),
    }
}
