//! Small dense linear algebra on row-major slices.
//!
//! Everything here works on tiny matrices (at most a few dozen entries), so
//! plain partial-pivoting LU is both fast and accurate enough.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn centroid<'a, I>(points: I, dim: usize) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut c = vec![0.0; dim];
    let mut n = 0usize;
    for p in points {
        axpy(1.0, p, &mut c);
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        c.iter_mut().for_each(|x| *x *= inv);
    }
    c
}

/// Determinant of an `n x n` row-major matrix. The matrix is overwritten.
pub fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f != 0.0 {
                for k in col + 1..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
            }
        }
    }
    det
}

pub fn det(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    det_in_place(&mut m, n)
}

/// Solves `a x = b` for a square `n x n` system. Returns `None` when a pivot
/// vanishes relative to `rel_tol` times the largest entry.
pub fn solve(a: &[f64], b: &[f64], n: usize, rel_tol: f64) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return if n == 0 { Some(x) } else { None };
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best <= rel_tol * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    m[row * n + k] -= f * m[col * n + k];
                }
                x[row] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Removes from `v` its components along the orthonormal `basis` (twice, for
/// numerical stability) and returns the residual.
pub fn reject(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for e in basis {
            let c = dot(&r, e);
            axpy(-c, e, &mut r);
        }
    }
    r
}

/// Modified Gram–Schmidt in input order. Fails if some vector's residual is
/// below `rel_tol` times its own norm.
pub fn gram_schmidt(vectors: &[Vec<f64>], rel_tol: f64) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let n0 = norm(v);
        if n0 == 0.0 || !n0.is_finite() {
            return None;
        }
        let r = reject(v, &basis);
        let nr = norm(&r);
        if nr <= rel_tol * n0 {
            return None;
        }
        basis.push(r.into_iter().map(|x| x / nr).collect());
    }
    Some(basis)
}

/// Greedy orthonormal basis of the span of `vectors`: repeatedly takes the
/// vector with the largest residual. Vectors whose residual falls below
/// `abs_tol` are treated as dependent.
pub fn span_basis(vectors: &[Vec<f64>], abs_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut residuals: Vec<Vec<f64>> = vectors.to_vec();
    loop {
        let mut best = None;
        let mut best_norm = abs_tol;
        for (i, r) in residuals.iter().enumerate() {
            let n = norm(r);
            if n > best_norm {
                best_norm = n;
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        let e: Vec<f64> = residuals[i].iter().map(|x| x / best_norm).collect();
        // refine against existing basis once more
        let e = {
            let r = reject(&e, &basis);
            let n = norm(&r);
            r.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        for r in residuals.iter_mut() {
            let c = dot(r, &e);
            axpy(-c, &e, r);
        }
        basis.push(e);
    }
    basis
}

/// Extends an orthonormal basis of a subspace of R^dim with coordinate
/// vectors, picking at each step the axis with the largest residual.
/// Returns only the added complement vectors.
pub fn complement_basis(basis: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut full: Vec<Vec<f64>> = basis.to_vec();
    let mut out = Vec::with_capacity(dim.saturating_sub(basis.len()));
    while full.len() < dim {
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = 0.0;
        for axis in 0..dim {
            let mut e = vec![0.0; dim];
            e[axis] = 1.0;
            let r = reject(&e, &full);
            let n = norm(&r);
            if n > best_norm + 1e-12 {
                best_norm = n;
                best = Some(r);
            }
        }
        let r = best.expect("complement exists while basis is incomplete");
        let e: Vec<f64> = r.iter().map(|x| x / best_norm).collect();
        full.push(e.clone());
        out.push(e);
    }
    out
}

/// Characteristic length of a point set: largest coordinate extent.
pub fn extent<'a, I>(points: I) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for p in points {
        if lo.is_empty() {
            lo = p.to_vec();
            hi = p.to_vec();
        } else {
            for (k, &x) in p.iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
    }
    lo.iter().zip(&hi).fold(0.0f64, |acc, (a, b)| acc.max(b - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_of_known_matrices() {
        assert_eq!(det(&[2.0, 0.0, 0.0, 3.0], 2), 6.0);
        assert_eq!(det(&[0.0, 1.0, 1.0, 0.0], 2), -1.0);
        let m = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0];
        assert!((det(&m, 3) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_recovers_solution() {
        let a = [4.0, 1.0, 2.0, 3.0];
        let x = solve(&a, &[1.0, 2.0], 2, 1e-14).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(solve(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2, 1e-12).is_none());
    }

    #[test]
    fn complement_is_orthonormal() {
        let b = gram_schmidt(&[vec![1.0, 1.0, 0.0]], 1e-12).unwrap();
        let c = complement_basis(&b, 3);
        assert_eq!(c.len(), 2);
        for e in &c {
            assert!((norm(e) - 1.0).abs() < 1e-12);
            assert!(dot(e, &b[0]).abs() < 1e-12);
        }
        assert!(dot(&c[0], &c[1]).abs() < 1e-12);
    }

    #[test]
    fn span_basis_detects_rank() {
        let v = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(span_basis(&v, 1e-12).len(), 2);
    }
}
