//! Model outputs checked against independently written reference solutions.

use likesense::models::{fit_knn, fit_linear, knn_distance, KnnConfig};
use likesense::rng::seeded;
use rand::Rng as _;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Least squares with intercept via the normal equations on `[1, x]`.
fn ols_oracle(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len() + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (r, &t) in rows.iter().zip(y) {
        let z: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
        for i in 0..p {
            xty[i] += z[i] * t;
            for j in 0..p {
                xtx[i][j] += z[i] * z[j];
            }
        }
    }
    gauss_solve(xtx, xty)
}

fn predict_oracle(beta: &[f64], x: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

#[test]
fn linear_matches_gaussian_elimination_on_full_rank_data() {
    let mut r = seeded(101);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..6).map(|_| r.random_range(0.0..30.0)).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|x| 2.0 + 0.05 * x[0] - 0.02 * x[3] + r.random_range(-0.3..0.3)).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
    let m = fit_linear(&refs, &y, 6).unwrap();
    let beta = ols_oracle(&rows, &y);
    assert!(!m.damped);
    assert!((m.intercept - beta[0]).abs() < 1e-8, "{} vs {}", m.intercept, beta[0]);
    for (c, b) in m.coefficients.iter().zip(&beta[1..]) {
        assert!((c - b).abs() < 1e-9, "{c} vs {b}");
    }
}

#[test]
fn linear_on_simplex_rows_matches_reduced_oracle_predictions() {
    // proportions sum to one, so drop the last column to remove the gauge
    let mut r = seeded(102);
    let dim = 5;
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| r.random_range(0.0..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let y: Vec<f64> = rows.iter().map(|x| 3.0 + x[0] - 0.7 * x[2] + r.random_range(-0.2..0.2)).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
    let m = fit_linear(&refs, &y, dim).unwrap();
    let reduced: Vec<Vec<f64>> = rows.iter().map(|x| x[..dim - 1].to_vec()).collect();
    let beta = ols_oracle(&reduced, &y);
    for (x, xr) in rows.iter().zip(&reduced) {
        assert!((m.predict_raw(x) - predict_oracle(&beta, xr)).abs() < 1e-6);
    }
}

fn knn_oracle(rows: &[Vec<f64>], y: &[f64], q: &[f64], k: usize, penalty: f64) -> f64 {
    let supp = |v: &[f64]| v.iter().map(|&x| x != 0.0).collect::<Vec<_>>();
    let sq = supp(q);
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let e = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let mismatch = supp(r).iter().zip(&sq).filter(|(a, b)| a != b).count();
            (e + penalty * mismatch as f64, i)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d[..k].iter().map(|&(_, i)| y[i]).sum::<f64>() / k as f64
}

#[test]
fn knn_matches_brute_force() {
    let mut r = seeded(103);
    let sparse = |r: &mut likesense::rng::Rng| -> Vec<f64> {
        (0..7).map(|_| if r.random_bool(0.5) { 0.0 } else { r.random_range(0.0..1.0) }).collect()
    };
    let rows: Vec<Vec<f64>> = (0..120).map(|_| sparse(&mut r)).collect();
    let y: Vec<f64> = (0..120).map(|_| r.random_range(1.0..5.0)).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
    for (k, penalty) in [(1, 0.0), (5, 0.1), (12, 0.5)] {
        let m = fit_knn(&refs, &y, &KnnConfig { k, penalty }).unwrap();
        for _ in 0..50 {
            let q = sparse(&mut r);
            let want = knn_oracle(&rows, &y, &q, k, penalty);
            assert!((m.predict_raw(&q) - want).abs() < 1e-12, "k={k} penalty={penalty}");
        }
    }
}

#[test]
fn knn_distance_hand_values() {
    // euclid 0.5, supports {0,1} vs {0,2}: two mismatches
    let d = knn_distance(&[0.5, 0.5, 0.0], &[0.5, 0.0, 0.5], 0.1).unwrap();
    assert!((d - (0.5f64.sqrt() + 0.2)).abs() < 1e-15);
    assert!(knn_distance(&[1.0], &[1.0, 0.0], 0.1).is_err());
}
