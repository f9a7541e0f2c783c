//! Single-hidden-layer perceptron with softmax output, trained by Adam
//! on cross-entropy. Feature scaling is part of the classifier, so
//! callers hand in raw descriptors at train and test time alike. The
//! scaling divides by the per-feature training maximum and never
//! recenters: zero must stay zero, so the zero-padded tail blocks of a
//! truncated object's descriptor contribute no evidence instead of a
//! large spurious offset.

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    scale: Array1<f64>,
    /// Softmax temperature, fitted on held-out data after training.
    /// Memorized noise saturates the raw softmax; dividing the logits by
    /// the held-out-optimal temperature flattens exactly those outputs
    /// the held-out split contradicts.
    #[serde(default = "unit_temperature")]
    temperature: f64,
}

fn unit_temperature() -> f64 {
    1.0
}

/// Adam state for one parameter tensor.
struct Moments {
    m: Array2<f64>,
    v: Array2<f64>,
}

impl Moments {
    fn new(shape: (usize, usize)) -> Self {
        Self { m: Array2::zeros(shape), v: Array2::zeros(shape) }
    }

    fn step(&mut self, param: &mut Array2<f64>, grad: &Array2<f64>, lr: f64, t: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.m = &self.m * B1 + grad * (1.0 - B1);
        self.v = &self.v * B2 + &grad.mapv(|g| g * g) * (1.0 - B2);
        let m_hat = &self.m / (1.0 - B1.powf(t));
        let v_hat = &self.v / (1.0 - B2.powf(t));
        *param -= &(m_hat / (v_hat.mapv(f64::sqrt) + EPS) * lr);
    }
}

fn glorot_uniform(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

/// Row-wise softmax with max subtraction for stability.
fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

impl MlpClassifier {
    /// Train on row-major features and class indices in [0, n_classes).
    pub fn train(
        features: ArrayView2<'_, f64>,
        labels: &[usize],
        n_classes: usize,
        config: &ModelConfig,
        seed: u64,
    ) -> Result<Self> {
        let n = features.nrows();
        let d = features.ncols();
        if n == 0 || labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows for {} labels",
                n,
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y >= n_classes) {
            return Err(Error::ShapeMismatch("label index out of range".into()));
        }

        let scale = features
            .map_axis(Axis(0), |col| col.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
            .mapv(|s| if s > 0.0 { s } else { 1.0 });

        let hidden = config.hidden;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut w1 = glorot_uniform(d, hidden, &mut rng);
        let mut b1 = Array1::zeros(hidden);
        let mut w2 = glorot_uniform(hidden, n_classes, &mut rng);
        let mut b2 = Array1::zeros(n_classes);

        let mut mw1 = Moments::new((d, hidden));
        let mut mb1 = Moments::new((1, hidden));
        let mut mw2 = Moments::new((hidden, n_classes));
        let mut mb2 = Moments::new((1, n_classes));

        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0.0f64;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size.max(1)) {
                let xb = features.select(Axis(0), batch);
                let mut xb = &xb / &scale;
                if config.input_dropout > 0.0 {
                    let keep = 1.0 - config.input_dropout;
                    xb.mapv_inplace(|v| {
                        if rng.gen::<f64>() < keep {
                            v / keep
                        } else {
                            0.0
                        }
                    });
                }
                let bn = batch.len() as f64;

                let a1 = xb.dot(&w1) + &b1;
                let h = a1.mapv(|v| v.max(0.0));
                let mut probs = h.dot(&w2) + &b2;
                softmax_rows(&mut probs);

                // d(loss)/d(logits), loss = mean cross-entropy against
                // smoothed targets (1-eps on the class, eps spread
                // uniformly), which bounds the optimal logit gaps.
                let eps = config.label_smoothing;
                let mut dlogits = probs;
                if eps > 0.0 {
                    dlogits -= eps / n_classes as f64;
                }
                for (row, &idx) in batch.iter().enumerate() {
                    dlogits[(row, labels[idx])] -= 1.0 - eps;
                }
                dlogits /= bn;

                let dw2 = h.t().dot(&dlogits) + &w2 * config.weight_decay;
                let db2 = dlogits.sum_axis(Axis(0));
                let mut dh = dlogits.dot(&w2.t());
                dh.zip_mut_with(&a1, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                let dw1 = xb.t().dot(&dh) + &w1 * config.weight_decay;
                let db1 = dh.sum_axis(Axis(0));

                t += 1.0;
                let lr = config.learning_rate;
                mw1.step(&mut w1, &dw1, lr, t);
                mw2.step(&mut w2, &dw2, lr, t);
                let mut b1m = b1.clone().insert_axis(Axis(0));
                mb1.step(&mut b1m, &db1.insert_axis(Axis(0)), lr, t);
                b1 = b1m.index_axis_move(Axis(0), 0);
                let mut b2m = b2.clone().insert_axis(Axis(0));
                mb2.step(&mut b2m, &db2.insert_axis(Axis(0)), lr, t);
                b2 = b2m.index_axis_move(Axis(0), 0);
            }
        }

        Ok(Self { w1, b1, w2, b2, scale, temperature: 1.0 })
    }

    pub fn n_inputs(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.w2.ncols()
    }

    /// Pre-softmax scores for one raw (unscaled) feature vector.
    fn logits(&self, features: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if features.len() != self.n_inputs() {
            return Err(Error::ShapeMismatch(format!(
                "feature vector of length {}, classifier expects {}",
                features.len(),
                self.n_inputs()
            )));
        }
        let x = &features / &self.scale;
        let h = (x.dot(&self.w1) + &self.b1).mapv(|v| v.max(0.0));
        Ok(h.dot(&self.w2) + &self.b2)
    }

    /// Class probabilities for one raw (unscaled) feature vector.
    pub fn predict_proba(&self, features: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        let logits = self.logits(features)? / self.temperature;
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps = logits.mapv(|v| (v - max).exp());
        let sum = exps.sum();
        Ok(exps.iter().map(|&v| v / sum).collect())
    }

    /// Fits the softmax temperature to held-out examples by minimizing
    /// their mean negative log-likelihood, and returns the fitted value.
    /// Scaling logits by a shared positive factor never changes the
    /// argmax, so fitting moves confidence, not accuracy. The loss is
    /// convex in the inverse temperature, so a golden-section search
    /// over it finds the global optimum.
    pub fn fit_temperature(
        &mut self,
        features: ArrayView2<'_, f64>,
        labels: &[usize],
    ) -> Result<f64> {
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} holdout rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::ShapeMismatch("empty temperature holdout".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.n_classes()) {
            return Err(Error::ShapeMismatch(format!(
                "holdout label {bad} out of range for {} classes",
                self.n_classes()
            )));
        }

        let logits: Vec<Array1<f64>> = features
            .rows()
            .into_iter()
            .map(|row| self.logits(row))
            .collect::<Result<_>>()?;

        // Mean NLL as a function of the inverse temperature.
        let nll = |beta: f64| -> f64 {
            let mut total = 0.0;
            for (z, &y) in logits.iter().zip(labels) {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = (z.mapv(|v| (beta * (v - max)).exp())).sum().ln() + beta * max;
                total += lse - beta * z[y];
            }
            total / labels.len() as f64
        };

        let (mut lo, mut hi) = (0.02, 5.0);
        let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - inv_phi * (hi - lo);
        let mut b = lo + inv_phi * (hi - lo);
        let (mut fa, mut fb) = (nll(a), nll(b));
        while hi - lo > 1e-4 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - inv_phi * (hi - lo);
                fa = nll(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + inv_phi * (hi - lo);
                fb = nll(b);
            }
        }
        self.temperature = 2.0 / (lo + hi);
        Ok(self.temperature)
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Installs a temperature fitted on another instance of the same
    /// architecture, for the train-on-everything final model.
    pub(crate) fn set_temperature(&mut self, temperature: f64) {
        self.temperature = temperature;
    }

    /// Index of the most probable class, lowest index on ties.
    pub fn predict(&self, features: ArrayView1<'_, f64>) -> Result<usize> {
        let probs = self.predict_proba(features)?;
        Ok(argmax(&probs))
    }
}

/// Lowest index attaining the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
