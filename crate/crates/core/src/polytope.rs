//! Volumes of bounded convex polytopes.
//!
//! Polytopes are handed in as vertex lists where each vertex carries a set of
//! integer labels; a label names a supporting hyperplane (a facet candidate).
//! The volume is accumulated as a cone from the centroid over each facet,
//! recursing into the facet with the same labels. This never needs facets to
//! be simplices, which matters for Voronoi cells whose facets are polygons.

use rustc_hash::FxHashMap;

use crate::linalg::{centroid, dot, norm, reject, solve, span_basis, sub};

const REL_TOL: f64 = 1e-9;

/// Volume of the polytope spanned by `points`, in its own affine hull.
/// `labels[i]` lists the supporting hyperplanes through `points[i]`.
pub(crate) fn labeled_volume(points: &[Vec<f64>], labels: &[Vec<u32>]) -> f64 {
    if points.len() <= 1 {
        return if points.is_empty() { 0.0 } else { 1.0 };
    }
    let scale = crate::linalg::extent(points.iter().map(|p| p.as_slice())).max(f64::MIN_POSITIVE);
    let all: Vec<usize> = (0..points.len()).collect();
    let k = affine_basis(points, &all, scale).len();
    let mut memo = FxHashMap::default();
    face_volume(points, labels, &all, k, scale, &mut memo)
}

fn affine_basis(points: &[Vec<f64>], face: &[usize], scale: f64) -> Vec<Vec<f64>> {
    let p0 = &points[face[0]];
    let diffs: Vec<Vec<f64>> = face[1..].iter().map(|&i| sub(&points[i], p0)).collect();
    span_basis(&diffs, REL_TOL * scale)
}

fn face_volume(
    points: &[Vec<f64>],
    labels: &[Vec<u32>],
    face: &[usize],
    k: usize,
    scale: f64,
    memo: &mut FxHashMap<Vec<usize>, f64>,
) -> f64 {
    match k {
        0 => return 1.0,
        1 => {
            let mut best = 0.0f64;
            for (a, &i) in face.iter().enumerate() {
                for &j in &face[a + 1..] {
                    best = best.max(crate::linalg::dist(&points[i], &points[j]));
                }
            }
            return best;
        }
        _ => {}
    }
    if let Some(&v) = memo.get(face) {
        return v;
    }
    let dim = points[face[0]].len();
    let apex = centroid(face.iter().map(|&i| points[i].as_slice()), dim);

    let mut candidates: Vec<u32> = face.iter().flat_map(|&i| labels[i].iter().copied()).collect();
    candidates.sort_unstable();
    candidates.dedup();

    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut total = 0.0;
    for label in candidates {
        let sub_face: Vec<usize> = face.iter().copied().filter(|&i| labels[i].contains(&label)).collect();
        if sub_face.len() < k || sub_face.len() == face.len() {
            continue;
        }
        if seen.contains(&sub_face) {
            continue;
        }
        let basis = affine_basis(points, &sub_face, scale);
        if basis.len() != k - 1 {
            continue;
        }
        let height = norm(&reject(&sub(&apex, &points[sub_face[0]]), &basis));
        let vol = face_volume(points, labels, &sub_face, k - 1, scale, memo);
        total += height * vol / k as f64;
        seen.push(sub_face);
    }
    memo.insert(face.to_vec(), total);
    total
}

/// Labels each vertex of a full-dimensional point set in R^m with the
/// supporting hyperplanes it lies on, found by brute force over m-subsets.
pub(crate) fn facet_labels(points: &[Vec<f64>]) -> Vec<Vec<u32>> {
    let n = points.len();
    let mut labels = vec![Vec::new(); n];
    let Some(m) = points.first().map(|p| p.len()) else {
        return labels;
    };
    if m == 0 || n <= m {
        return labels;
    }
    let scale = crate::linalg::extent(points.iter().map(|p| p.as_slice())).max(f64::MIN_POSITIVE);
    let tol = REL_TOL * scale;
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let p0 = &points[idx[0]];
        let diffs: Vec<Vec<f64>> = idx[1..].iter().map(|&i| sub(&points[i], p0)).collect();
        let basis = span_basis(&diffs, tol);
        if basis.len() == m - 1 {
            let normal = &crate::linalg::complement_basis(&basis, m)[0];
            let offset = dot(normal, p0);
            let (mut above, mut below) = (false, false);
            let mut tight = Vec::new();
            for (i, p) in points.iter().enumerate() {
                let s = dot(normal, p) - offset;
                if s > tol {
                    above = true;
                } else if s < -tol {
                    below = true;
                } else {
                    tight.push(i);
                }
            }
            if !(above && below) && !found.contains(&tight) {
                let id = found.len() as u32;
                for &i in &tight {
                    labels[i].push(id);
                }
                found.push(tight);
            }
        }
        // next m-combination of 0..n
        let mut i = m;
        loop {
            if i == 0 {
                return labels;
            }
            i -= 1;
            if idx[i] < n - m + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Volume of the convex hull of a full-dimensional point set in R^m.
pub(crate) fn vrep_volume(points: &[Vec<f64>]) -> f64 {
    let labels = facet_labels(points);
    labeled_volume(points, &labels)
}

/// Vertex enumeration for `{t : a_i . t <= b_i}` in R^m. Each vertex is
/// labelled with the constraints that are tight there.
pub(crate) fn hrep_vertices(a: &[Vec<f64>], b: &[f64], m: usize) -> (Vec<Vec<f64>>, Vec<Vec<u32>>) {
    let n = a.len();
    let mut verts: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Vec<u32>> = Vec::new();
    if m == 0 || n < m {
        return (verts, labels);
    }
    let slack_tol = |i: usize, t: &[f64]| REL_TOL * (norm(&a[i]) * (1.0 + norm(t)) + b[i].abs());
    let mut idx: Vec<usize> = (0..m).collect();
    let mut mat = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    loop {
        for (r, &ci) in idx.iter().enumerate() {
            mat[r * m..(r + 1) * m].copy_from_slice(&a[ci]);
            rhs[r] = b[ci];
        }
        if let Some(t) = solve(&mat, &rhs, m, 1e-11) {
            let feasible = (0..n).all(|i| dot(&a[i], &t) - b[i] <= slack_tol(i, &t));
            if feasible {
                let tight: Vec<u32> = (0..n)
                    .filter(|&i| (dot(&a[i], &t) - b[i]).abs() <= slack_tol(i, &t))
                    .map(|i| i as u32)
                    .collect();
                let merge_tol = REL_TOL * (1.0 + norm(&t));
                match verts.iter().position(|v| crate::linalg::dist(v, &t) <= merge_tol) {
                    Some(j) => {
                        for l in tight {
                            if !labels[j].contains(&l) {
                                labels[j].push(l);
                            }
                        }
                    }
                    None => {
                        verts.push(t);
                        labels.push(tight);
                    }
                }
            }
        }
        let mut i = m;
        loop {
            if i == 0 {
                return (verts, labels);
            }
            i -= 1;
            if idx[i] < n - m + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Volume of the bounded polytope `{t : a_i . t <= b_i}` in R^m.
pub(crate) fn hrep_volume(a: &[Vec<f64>], b: &[f64], m: usize) -> f64 {
    if m == 0 {
        // a point: feasible iff every constant constraint holds
        return if b.iter().all(|&bi| bi >= -REL_TOL) { 1.0 } else { 0.0 };
    }
    let (verts, labels) = hrep_vertices(a, b, m);
    if verts.len() <= m {
        return 0.0;
    }
    let scale = crate::linalg::extent(verts.iter().map(|p| p.as_slice())).max(f64::MIN_POSITIVE);
    let all: Vec<usize> = (0..verts.len()).collect();
    if affine_basis(&verts, &all, scale).len() < m {
        return 0.0;
    }
    labeled_volume(&verts, &labels)
}
