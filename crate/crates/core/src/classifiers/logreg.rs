//! L2-regularized logistic regression trained by full-batch gradient descent.
//!
//! Objective: mean cross-entropy + (λ/2)‖w‖², bias unpenalized. Each epoch
//! takes a gradient step on the cross-entropy and applies the L2 term as its
//! exact proximal map, `w <- (w - η∇) / (1 + ηλ)`, which has the same fixed
//! points as plain gradient descent and stays stable for any λ.

use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, require_both_classes, ClassifierError};
use crate::corpus::Polarity;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    /// Inverse regularization strength; λ = 1 / (n · c) unless `l2_strength` is set.
    pub c: f64,
    pub l2_strength: Option<f64>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the objective changes by less than this between epochs.
    pub tolerance: f64,
    /// Scale each input row to unit L2 norm before training and prediction.
    pub normalize_rows: bool,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            c: 1.0,
            l2_strength: None,
            learning_rate: 0.1,
            max_epochs: 1000,
            tolerance: 1e-6,
            normalize_rows: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// The λ actually used.
    pub l2_strength: f64,
    pub config: LogisticConfig,
    pub epochs_run: usize,
    pub converged: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Mean cross-entropy plus (λ/2)‖w‖².
pub fn regularized_loss(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[Polarity], l2: f64) -> f64 {
    let n = x.len() as f64;
    let ce: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let z = dot(weights, row) + bias;
            softplus(z) - if label.is_positive() { z } else { 0.0 }
        })
        .sum::<f64>()
        / n;
    ce + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`regularized_loss`] as `(∂w, ∂b)`.
pub fn loss_gradient(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[Polarity], l2: f64) -> (Vec<f64>, f64) {
    let (mut gw, gb) = data_gradient(weights, bias, x, y);
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (gw, gb)
}

fn data_gradient(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[Polarity]) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let residual = sigmoid(dot(weights, row) + bias) - if label.is_positive() { 1.0 } else { 0.0 };
        for (g, v) in gw.iter_mut().zip(row) {
            *g += residual * v;
        }
        gb += residual;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

fn normalized(row: &[f64]) -> Vec<f64> {
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter().map(|v| v / norm).collect()
    } else {
        row.to_vec()
    }
}

pub fn train_logreg(x: &[Vec<f64>], y: &[Polarity], config: &LogisticConfig) -> Result<LogisticModel, ClassifierError> {
    train_logreg_traced(x, y, config).map(|(m, _)| m)
}

/// Trains and also returns the objective after initialization and after every epoch.
pub fn train_logreg_traced(
    x: &[Vec<f64>],
    y: &[Polarity],
    config: &LogisticConfig,
) -> Result<(LogisticModel, Vec<f64>), ClassifierError> {
    let dim = check_training(x, y, 2)?;
    require_both_classes(y)?;
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 || config.c.is_nan() || config.c <= 0.0 {
        return Err(ClassifierError::InvalidParameter("learning_rate and c must be > 0".into()));
    }
    let l2 = config.l2_strength.unwrap_or(1.0 / (x.len() as f64 * config.c));
    if l2.is_nan() || l2 < 0.0 {
        return Err(ClassifierError::InvalidParameter("l2_strength must be >= 0".into()));
    }
    let owned: Vec<Vec<f64>>;
    let x = if config.normalize_rows {
        owned = x.iter().map(|r| normalized(r)).collect();
        &owned[..]
    } else {
        x
    };

    let eta = config.learning_rate;
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut loss = regularized_loss(&weights, bias, x, y, l2);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut epochs_run = 0;
    for _ in 0..config.max_epochs {
        let (gw, gb) = data_gradient(&weights, bias, x, y);
        let shrink = 1.0 + eta * l2;
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w = (*w - eta * g) / shrink;
        }
        bias -= eta * gb;
        epochs_run += 1;
        let next = regularized_loss(&weights, bias, x, y, l2);
        trace.push(next);
        let delta = (loss - next).abs();
        loss = next;
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }
    if !loss.is_finite() {
        return Err(ClassifierError::NonFinite);
    }
    Ok((LogisticModel { weights, bias, l2_strength: l2, config: config.clone(), epochs_run, converged }, trace))
}

impl LogisticModel {
    /// Probability of the positive class.
    pub fn probability(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        check_dim(self.weights.len(), x)?;
        let z = if self.config.normalize_rows { dot(&self.weights, &normalized(x)) } else { dot(&self.weights, x) };
        Ok(sigmoid(z + self.bias))
    }

    /// Class 1 iff p >= 0.5.
    pub fn predict(&self, x: &[f64]) -> Result<(Polarity, f64), ClassifierError> {
        let p = self.probability(x)?;
        Ok((Polarity::from_positive(p >= 0.5), p))
    }
}

pub fn predict_logreg(model: &LogisticModel, x: &[f64]) -> Result<(Polarity, f64), ClassifierError> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(weights: Vec<f64>, bias: f64) -> LogisticModel {
        LogisticModel {
            weights,
            bias,
            l2_strength: 0.0,
            config: LogisticConfig::default(),
            epochs_run: 0,
            converged: true,
        }
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_abs_diff_eq!(sigmoid(10.0), 1.0 / (1.0 + (-10f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(sigmoid(10.0), 0.999_954_602_131_297_6, epsilon = 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn predict_rules() {
        assert_eq!(predict_logreg(&model(vec![0.0], 0.0), &[3.0]).unwrap(), (Polarity::Positive, 0.5));
        let (class, p) = predict_logreg(&model(vec![10.0], 0.0), &[1.0]).unwrap();
        assert_eq!(class, Polarity::Positive);
        assert_abs_diff_eq!(p, 0.99995, epsilon = 1e-5);
        assert_eq!(predict_logreg(&model(vec![10.0], 0.0), &[-1.0]).unwrap().0, Polarity::Negative);
        assert!(matches!(
            predict_logreg(&model(vec![1.0, 2.0], 0.0), &[1.0]),
            Err(ClassifierError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn untrained_model_predicts_half() {
        let x = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        let y = vec![Polarity::Positive, Polarity::Negative];
        let cfg = LogisticConfig { max_epochs: 0, ..Default::default() };
        let m = train_logreg(&x, &y, &cfg).unwrap();
        assert_eq!(m.probability(&[5.0, -3.0]).unwrap(), 0.5);
    }

    #[test]
    fn strong_regularization_shrinks_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let y: Vec<Polarity> = (0..40).map(|i| Polarity::from_positive(i % 2 == 0)).collect();
        let cfg = LogisticConfig { l2_strength: Some(1e9), ..Default::default() };
        let m = train_logreg(&x, &y, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-8), "{:?}", m.weights);
        for row in &x {
            assert_abs_diff_eq!(m.probability(row).unwrap(), 0.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_logreg(&x, &[Polarity::Positive; 2], &LogisticConfig::default()),
            Err(ClassifierError::SingleClass)
        ));
        let x = vec![vec![1.0], vec![f64::NAN]];
        assert!(matches!(
            train_logreg(&x, &[Polarity::Positive, Polarity::Negative], &LogisticConfig::default()),
            Err(ClassifierError::NonFinite)
        ));
        assert!(matches!(
            train_logreg(&[vec![1.0]], &[Polarity::Positive], &LogisticConfig::default()),
            Err(ClassifierError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn row_normalization_is_applied_at_prediction() {
        let x = vec![vec![3.0, 0.0], vec![0.0, 3.0], vec![2.0, 0.1], vec![0.1, 2.0]];
        let y = vec![Polarity::Positive, Polarity::Negative, Polarity::Positive, Polarity::Negative];
        let cfg = LogisticConfig { normalize_rows: true, ..Default::default() };
        let m = train_logreg(&x, &y, &cfg).unwrap();
        assert_eq!(m.probability(&[5.0, 0.0]).unwrap(), m.probability(&[1.0, 0.0]).unwrap());
    }
}
