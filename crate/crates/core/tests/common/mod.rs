//! Independent oracles and fixtures shared by integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerolabel_core::classifiers::svm::DualSolution;
use zerolabel_core::Polarity;

pub fn pol(bit: u8) -> Polarity {
    Polarity::try_from(bit).unwrap()
}

/// The 4-point XOR set.
pub fn xor() -> (Vec<Vec<f64>>, Vec<Polarity>) {
    let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    (x, vec![pol(0), pol(1), pol(1), pol(0)])
}

fn kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-gamma * d).exp()
}

pub fn dual_objective(alpha: &[f64], x: &[Vec<f64>], ys: &[f64], gamma: f64) -> f64 {
    let mut quad = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            quad += alpha[i] * alpha[j] * ys[i] * ys[j] * kernel(&x[i], &x[j], gamma);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Maximizes the 4-variable XOR dual over a grid. Labels are (-,+,+,-), so
/// the equality constraint fixes α₃ = α₁ + α₂ − α₀.
pub fn xor_dual_grid(gamma: f64, c: f64, step: f64) -> (Vec<f64>, f64) {
    let (x, y) = xor();
    let ys: Vec<f64> = y.iter().map(|p| p.signed()).collect();
    let q: Vec<Vec<f64>> =
        (0..4).map(|i| (0..4).map(|j| ys[i] * ys[j] * kernel(&x[i], &x[j], gamma)).collect()).collect();
    let objective = |a: &[f64; 4]| {
        let mut quad = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                quad += a[i] * a[j] * q[i][j];
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let steps = (c / step).round() as usize;
    let mut best = (vec![0.0; 4], f64::NEG_INFINITY);
    for i in 0..=steps {
        for j in 0..=steps {
            for k in 0..=steps {
                let a = [i as f64 * step, j as f64 * step, k as f64 * step];
                let a3 = a[1] + a[2] - a[0];
                if !(0.0..=c).contains(&a3) {
                    continue;
                }
                let alpha = [a[0], a[1], a[2], a3];
                let obj = objective(&alpha);
                if obj > best.1 {
                    best = (alpha.to_vec(), obj);
                }
            }
        }
    }
    best
}

/// Decision value recomputed from a full dual solution.
pub fn decision(dual: &DualSolution, x: &[Vec<f64>], point: &[f64]) -> f64 {
    (0..x.len()).map(|i| dual.alpha[i] * dual.signed_labels[i] * kernel(&x[i], point, dual.gamma)).sum::<f64>()
        + dual.bias
}

/// Worst KKT violation over all training points.
pub fn kkt_violation(dual: &DualSolution, x: &[Vec<f64>], c: f64) -> f64 {
    let eps = 1e-8;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let margin = dual.signed_labels[i] * decision(dual, x, &x[i]);
        let a = dual.alpha[i];
        let v = if a <= eps {
            (1.0 - margin).max(0.0)
        } else if a >= c - eps {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Two Gaussian-ish blobs centred at ±`offset` on both axes.
pub fn blobs(seed: u64, n: usize, offset: f64, spread: f64) -> (Vec<Vec<f64>>, Vec<Polarity>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i % 2 == 0;
        let c = if positive { offset } else { -offset };
        let noise =
            |rng: &mut ChaCha8Rng| (0..3).map(|_| rng.gen_range(-spread..spread)).sum::<f64>() / 3.0 * 3.0_f64.sqrt();
        x.push(vec![c + noise(&mut rng), c + noise(&mut rng)]);
        y.push(Polarity::from_positive(positive));
    }
    (x, y)
}

/// Searches directions on a fine angular grid for a line that separates the
/// classes with the given margin. Returns true if one exists.
pub fn brute_force_separable(x: &[Vec<f64>], y: &[Polarity], margin: f64) -> bool {
    for step in 0..3600 {
        let theta = step as f64 * std::f64::consts::PI / 1800.0;
        let (u, v) = (theta.cos(), theta.sin());
        let proj = |r: &Vec<f64>| r[0] * u + r[1] * v;
        let max_neg =
            x.iter().zip(y).filter(|(_, p)| !p.is_positive()).map(|(r, _)| proj(r)).fold(f64::NEG_INFINITY, f64::max);
        let min_pos =
            x.iter().zip(y).filter(|(_, p)| p.is_positive()).map(|(r, _)| proj(r)).fold(f64::INFINITY, f64::min);
        if min_pos - max_neg >= margin {
            return true;
        }
    }
    false
}

pub fn accuracy(pred: &[Polarity], gold: &[Polarity]) -> f64 {
    pred.iter().zip(gold).filter(|(a, b)| a == b).count() as f64 / gold.len() as f64
}
