//! Soft-margin RBF support vector machine solved by SMO.
//!
//! The dual `min ½αᵀQα − eᵀα, 0 ≤ α ≤ C, yᵀα = 0` with `Q_ij = y_i y_j K_ij`
//! is optimized two coordinates at a time. The working pair is the maximal
//! KKT violator `i` plus the partner `j` giving the largest second-order
//! decrease; the solver stops once the violation gap falls below `tolerance`.
//! Labels are mapped {0,1} -> {-1,+1} on entry and back on prediction.

use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, require_both_classes, ClassifierError};
use crate::corpus::Polarity;

/// Support vectors need |α| above this to be kept.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    /// `1 / (dim · Var(X))` over all training entries.
    #[default]
    Scale,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    pub tolerance: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, gamma: Gamma::Scale, tolerance: 1e-3, max_passes: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i · y_i` per support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub converged: bool,
    /// Set when the training geometry was degenerate; prediction then
    /// returns this majority class.
    pub fallback: Option<Polarity>,
    pub iterations: usize,
}

/// Full dual solution, kept for diagnostics and KKT checks.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub signed_labels: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `exp(−γ‖x − y‖²)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(ClassifierError::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    Ok(rbf(x, y, gamma))
}

fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// The "scale" heuristic; 1.0 when the features have zero variance.
pub fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let dim = x.first().map_or(0, Vec::len);
    let count = (x.len() * dim) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (dim as f64 * var)
    } else {
        1.0
    }
}

pub fn train_svm(x: &[Vec<f64>], y: &[Polarity], config: &SvmConfig) -> Result<SvmModel, ClassifierError> {
    train_svm_with_dual(x, y, config).map(|(m, _)| m)
}

pub fn train_svm_with_dual(
    x: &[Vec<f64>],
    y: &[Polarity],
    config: &SvmConfig,
) -> Result<(SvmModel, DualSolution), ClassifierError> {
    check_training(x, y, 2)?;
    require_both_classes(y)?;
    let c = config.c;
    if c.is_nan() || c <= 0.0 || config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(ClassifierError::InvalidParameter("C and tolerance must be > 0".into()));
    }
    let gamma = match config.gamma {
        Gamma::Scale => scale_gamma(x),
        Gamma::Value(g) if g > 0.0 => g,
        Gamma::Value(g) => return Err(ClassifierError::InvalidParameter(format!("gamma must be > 0, got {g}"))),
    };
    let n = x.len();
    let ys: Vec<f64> = y.iter().map(|p| p.signed()).collect();

    if x.iter().all(|row| row == &x[0]) {
        // every pair has zero curvature: no separating function exists
        let positives = y.iter().filter(|p| p.is_positive()).count();
        let majority = Polarity::from_positive(2 * positives >= n);
        let model = SvmModel {
            support_vectors: Vec::new(),
            dual_coefficients: Vec::new(),
            bias: majority.signed(),
            gamma,
            c,
            converged: false,
            fallback: Some(majority),
            iterations: 0,
        };
        let dual = DualSolution {
            alpha: vec![0.0; n],
            signed_labels: ys,
            bias: model.bias,
            gamma,
            converged: false,
            iterations: 0,
        };
        return Ok((model, dual));
    }

    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        kernel[i * n + i] = 1.0;
        for j in 0..i {
            let k = rbf(&x[i], &x[j], gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let k = |i: usize, j: usize| kernel[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;
    let budget = config.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < budget {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if ys[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            if in_up && -ys[t] * grad[t] >= gmax {
                gmax = -ys[t] * grad[t];
                i_sel = Some(t);
            }
        }
        // j: best second-order partner in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                let in_low = if ys[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let yg = ys[t] * grad[t];
                gmax2 = gmax2.max(yg);
                let diff = gmax + yg;
                if diff > 0.0 {
                    let mut a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(diff * diff) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        if gmax + gmax2 < config.tolerance {
            converged = true;
            break;
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if ys[i] != ys[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += ys[t] * (ys[i] * k(i, t) * di + ys[j] * k(j, t) * dj);
        }
    }

    // bias from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if is_upper(alpha[t]) {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    let bias = -rho;

    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for t in 0..n {
        if alpha[t].abs() > SUPPORT_THRESHOLD {
            support_vectors.push(x[t].clone());
            dual_coefficients.push(alpha[t] * ys[t]);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without meeting tolerance {}", config.tolerance);
    }
    let model = SvmModel { support_vectors, dual_coefficients, bias, gamma, c, converged, fallback: None, iterations };
    let dual = DualSolution { alpha, signed_labels: ys, bias, gamma, converged, iterations };
    Ok((model, dual))
}

impl SvmModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    /// `Σ α_i y_i K(s_i, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        if let Some(dim) = self.dim() {
            check_dim(dim, x)?;
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias)
    }

    /// Sign of the decision value; zero maps to class 1.
    pub fn predict(&self, x: &[f64]) -> Result<Polarity, ClassifierError> {
        let value = self.decision_value(x)?;
        Ok(self.fallback.unwrap_or_else(|| class_of_decision(value)))
    }
}

pub fn class_of_decision(value: f64) -> Polarity {
    Polarity::from_positive(value >= 0.0)
}

pub fn predict_svm(model: &SvmModel, x: &[f64]) -> Result<Polarity, ClassifierError> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], 7.5).unwrap(), 1.0);
        assert_abs_diff_eq!(rbf_kernel(&[0.0, 0.0], &[0.0, 1.0], 1.0).unwrap(), 0.367_879, epsilon = 1e-6);
        assert!(matches!(
            rbf_kernel(&[0.0, 0.0], &[0.0, 1.0, 2.0], 1.0),
            Err(ClassifierError::DimensionMismatch { .. })
        ));
        assert!(rbf_kernel(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn decision_sign_rule() {
        assert_eq!(class_of_decision(2.3), Polarity::Positive);
        assert_eq!(class_of_decision(-0.1), Polarity::Negative);
        assert_eq!(class_of_decision(0.0), Polarity::Positive);
    }

    #[test]
    fn two_points_both_support() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let y = vec![Polarity::Negative, Polarity::Positive];
        let m = train_svm(&x, &y, &SvmConfig { gamma: Gamma::Value(0.5), ..Default::default() }).unwrap();
        assert_eq!(m.support_vectors.len(), 2);
        assert!(m.converged);
        assert_eq!(m.predict(&x[0]).unwrap(), Polarity::Negative);
        assert_eq!(m.predict(&x[1]).unwrap(), Polarity::Positive);
    }

    #[test]
    fn identical_features_fall_back_to_majority() {
        let x = vec![vec![1.0, 1.0]; 5];
        let y =
            vec![Polarity::Positive, Polarity::Negative, Polarity::Negative, Polarity::Positive, Polarity::Negative];
        let m = train_svm(&x, &y, &SvmConfig::default()).unwrap();
        assert!(!m.converged);
        assert_eq!(m.fallback, Some(Polarity::Negative));
        assert_eq!(m.predict(&[9.0, -3.0]).unwrap(), Polarity::Negative);
    }

    #[test]
    fn iteration_budget_flags_non_convergence() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
        let y: Vec<Polarity> = (0..30).map(|i| Polarity::from_positive(i % 3 == 0)).collect();
        let cfg = SvmConfig { c: 100.0, gamma: Gamma::Value(5.0), tolerance: 1e-9, max_passes: 0 };
        let m = train_svm(&x, &y, &cfg).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 1);
    }

    #[test]
    fn scale_gamma_definition() {
        // entries 0, 2, 0, 2: mean 1, var 1, dim 2 -> 1/2
        assert_abs_diff_eq!(scale_gamma(&[vec![0.0, 2.0], vec![0.0, 2.0]]), 0.5, epsilon = 1e-15);
        assert_eq!(scale_gamma(&[vec![3.0, 3.0]]), 1.0);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_svm(&x, &[Polarity::Negative; 2], &SvmConfig::default()),
            Err(ClassifierError::SingleClass)
        ));
    }
}
