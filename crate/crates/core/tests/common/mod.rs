#![allow(dead_code)]

use jointsgl::*;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

/// X, Y = X B + noise, with a sparse B.
pub fn linear_instance(seed: u64, n: usize, p: usize, q: usize) -> (PredictorMatrix<f64>, MultiResponse<f64>) {
    let mut r = rng(seed);
    let x = normal_matrix(&mut r, n, p);
    let b = Array2::from_shape_fn((p, q), |(j, _)| if j % 3 == 0 { r.random_range(-2.0..2.0) } else { 0.0 });
    let noise = normal_matrix(&mut r, n, q);
    let y = x.dot(&b) + noise;
    (PredictorMatrix::unnamed(x).unwrap(), MultiResponse::unnamed(y).unwrap())
}

pub fn survival_instance(seed: u64, n: usize, p: usize, effect: &[f64]) -> (PredictorMatrix<f64>, SurvivalOutcome<f64>) {
    let mut r = rng(seed);
    let x = normal_matrix(&mut r, n, p);
    let mut time = Array1::zeros(n);
    let mut event = vec![false; n];
    for i in 0..n {
        let eta: f64 = (0..p).map(|j| x[[i, j]] * effect.get(j).copied().unwrap_or(0.0)).sum();
        let u: f64 = r.random_range(1e-12..1.0);
        let t = -u.ln() / (0.1 * eta.exp());
        let cu: f64 = r.random_range(1e-12..1.0);
        let c = -cu.ln() / 0.03;
        time[i] = t.min(c);
        event[i] = t <= c;
    }
    (PredictorMatrix::unnamed(x).unwrap(), SurvivalOutcome::new(time, event).unwrap())
}

pub fn random_weights(seed: u64, p: usize, groups: usize) -> PenaltyWeights<f64> {
    let mut r = rng(seed);
    PenaltyWeights {
        feature_weights: Array1::from_shape_fn(p, |_| r.random_range(0.2..2.0)),
        group_weights: Array1::from_shape_fn(groups, |_| r.random_range(0.5..1.5)),
    }
}

/// Two overlapping row bands of a p × q coefficient array.
pub fn overlapping_blocks(p: usize, q: usize) -> BlockGroupStructure {
    let band = |lo: usize, hi: usize| (lo..hi).flat_map(|j| (0..q).map(move |k| (j, k))).collect::<Vec<_>>();
    let split = p * 3 / 5;
    let lo2 = p * 2 / 5;
    BlockGroupStructure::new(
        p,
        q,
        vec![
            BlockGroup { name: "a".into(), cells: band(0, split), x_group: Some(0) },
            BlockGroup { name: "b".into(), cells: band(lo2, p), x_group: Some(1) },
        ],
    )
    .unwrap()
}

/// Column-wise least squares by normal equations.
pub fn least_squares(x: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let (n, p) = x.dim();
    let xm = nalgebra::DMatrix::from_fn(n, p, |i, j| x[[i, j]]);
    let ym = nalgebra::DMatrix::from_fn(n, y.ncols(), |i, k| y[[i, k]]);
    let xtx = xm.transpose() * &xm;
    let xty = xm.transpose() * ym;
    let sol = xtx.cholesky().expect("full rank").solve(&xty);
    Array2::from_shape_fn((p, y.ncols()), |(j, k)| sol[(j, k)])
}

/// Breslow negative log partial likelihood (scaled by 1/n), its gradient and Hessian by
/// direct double sums over subjects.
pub fn naive_cox(x: &Array2<f64>, time: &[f64], event: &[bool], gamma: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let (n, p) = x.dim();
    let eta: Vec<f64> = (0..n).map(|i| (0..p).map(|j| x[[i, j]] * gamma[j]).sum()).collect();
    let (mut loss, mut grad, mut hess) = (0.0, vec![0.0; p], vec![vec![0.0; p]; p]);
    for i in 0..n {
        if !event[i] {
            continue;
        }
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![vec![0.0; p]; p];
        for k in 0..n {
            if time[k] >= time[i] {
                let w = eta[k].exp();
                s0 += w;
                for a in 0..p {
                    s1[a] += w * x[[k, a]];
                    for b in 0..p {
                        s2[a][b] += w * x[[k, a]] * x[[k, b]];
                    }
                }
            }
        }
        loss += s0.ln() - eta[i];
        for a in 0..p {
            grad[a] += s1[a] / s0 - x[[i, a]];
            for b in 0..p {
                hess[a][b] += s2[a][b] / s0 - s1[a] * s1[b] / (s0 * s0);
            }
        }
    }
    let nf = n as f64;
    (
        loss / nf,
        grad.iter().map(|g| g / nf).collect(),
        hess.iter().map(|r| r.iter().map(|h| h / nf).collect()).collect(),
    )
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}
