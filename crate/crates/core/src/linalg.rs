//! Small vector helpers and multi-index combinatorics shared across modules.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, scaled to avoid overflow for very large coordinates.
pub fn norm(a: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * a.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Product of coordinate-wise binomials `C(α, β)`.
pub fn multi_binomial(alpha: &[u32], beta: &[u32]) -> f64 {
    alpha
        .iter()
        .zip(beta)
        .map(|(&a, &b)| binomial(a, b))
        .product()
}

/// All multi-indices `α ∈ ℕ^d` with `|α| ≤ order`, graded by total order.
pub fn multi_indices(dim: usize, order: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=order {
        let mut current = vec![0u32; dim];
        exact_order(dim, 0, total, &mut current, &mut out);
    }
    out
}

fn exact_order(dim: usize, axis: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if axis + 1 == dim {
        cur[axis] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[axis] = k;
        exact_order(dim, axis + 1, left - k, cur, out);
    }
}

/// All `β ≤ α` componentwise.
pub fn sub_indices(alpha: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(alpha.len())];
    for &a in alpha {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=a).map(move |b| {
                    let mut p = prefix.clone();
                    p.push(b);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn order(alpha: &[u32]) -> u32 {
    alpha.iter().sum()
}

/// Solve a small dense square system by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is numerically singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(row);
                for (x, p) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// `n` points evenly spaced over `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Cartesian product of per-axis coordinate lists, first axis slowest.
pub fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_counts() {
        // C(n + d, d) indices of order at most n.
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(sub_indices(&[2, 1]).len(), 6);
    }

    #[test]
    fn norm_survives_huge_coordinates() {
        let n = norm(&[3e200, 4e200]);
        assert!((n / 5e200 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solve_small_system() {
        let x = solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }
}
