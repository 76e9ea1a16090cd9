//! Softmax classifier head over the ten Z expectations, cross-entropy loss,
//! ADAM optimization, and multi-seed experiment runs.
//!
//! Runs are deterministic per seed: parameter initialization and batch order
//! come from dedicated ChaCha8 streams, per-sample gradients inside a batch
//! may be computed concurrently but are reduced in fixed index order, and the
//! optimizer step is single-threaded.

use crate::circuits::{self, CircuitError, CircuitMeta, CircuitTemplate};
use crate::data::{DataError, DatasetSplit, ImageSample};
use crate::qsim::{self, QsimError, Workspace};
use crate::rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::time::Instant;

/// Number of classes (= qubits read out).
pub const NUM_CLASSES: usize = 10;

/// Stream ids for per-seed randomness.
const STREAM_PARAM_INIT: u64 = 1;
const STREAM_BATCH_ORDER: u64 = 2;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("non-finite gradient component {index}; run aborted")]
    NonFiniteGradient { index: usize },
    #[error("gradient length {got} does not match parameter length {want}")]
    GradientLength { got: usize, want: usize },
}

/// Experiment configuration; defaults follow the training protocol
/// (learning rate 0.001, ADAM, 25 epochs, 5 seeds).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub meta: CircuitMeta,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    /// Optional desk-scale subset: number of training images; validation and
    /// test shrink proportionally (48 : 12 : 10).
    pub subset_train: Option<usize>,
}

impl TrainConfig {
    pub fn new(meta: CircuitMeta) -> Self {
        Self {
            meta,
            learning_rate: 0.001,
            epochs: 25,
            batch_size: 32,
            seeds: vec![0, 1, 2, 3, 4],
            subset_train: None,
        }
    }
}

/// Metrics of one epoch. Training loss and accuracy are running averages
/// over the epoch's batches (evaluated at the parameters each batch saw);
/// validation accuracy is measured after the epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// Full record of a single seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    pub test_acc: f64,
    pub wall_time_s: f64,
}

/// All runs of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub per_seed: Vec<RunMetrics>,
}

impl ExperimentResult {
    /// Per-epoch mean and population standard deviation of validation
    /// accuracy across seeds.
    pub fn val_mean_std(&self) -> Vec<(f64, f64)> {
        let epochs = self.per_seed[0].epochs.len();
        (0..epochs)
            .map(|e| {
                mean_std(
                    &self
                        .per_seed
                        .iter()
                        .map(|r| r.epochs[e].val_acc)
                        .collect::<Vec<_>>(),
                )
            })
            .collect()
    }

    /// Mean and population standard deviation of the final test accuracy.
    pub fn test_mean_std(&self) -> (f64, f64) {
        mean_std(
            &self
                .per_seed
                .iter()
                .map(|r| r.test_acc)
                .collect::<Vec<_>>(),
        )
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Numerically stable softmax (max subtraction); sums to 1 within 1e-12.
pub fn softmax_probs(expectations: &[f64]) -> Vec<f64> {
    let max = expectations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = expectations.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Cross-entropy `-ln probs[label]`, with the probability floored at 1e-30
/// before the logarithm.
pub fn cross_entropy(probs: &[f64], label: u8) -> f64 {
    -probs[label as usize].max(1e-30).ln()
}

/// Class probabilities for one sample: softmax over the Z expectations.
pub fn forward(
    circuit: &CircuitTemplate,
    sample: &ImageSample,
    params: &[f64],
) -> Result<Vec<f64>, TrainError> {
    let e = qsim::evaluate(circuit, &sample.angles, params)?;
    Ok(softmax_probs(e.values()))
}

/// ADAM optimizer state with bias correction;
/// `(β1, β2, ε) = (0.9, 0.999, 1e-7)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        learning_rate: f64,
    ) -> Result<(), TrainError> {
        if grads.len() != params.len() || params.len() != self.m.len() {
            return Err(TrainError::GradientLength {
                got: grads.len(),
                want: self.m.len(),
            });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(TrainError::NonFiniteGradient { index });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

/// Loss, loss gradient, and prediction correctness for one sample, computed
/// with one forward and one adjoint pass.
fn sample_loss_grad(
    circuit: &CircuitTemplate,
    sample: &ImageSample,
    params: &[f64],
    ws: &mut Workspace,
) -> Result<(f64, Vec<f64>, bool), TrainError> {
    let mut loss = 0.0;
    let mut correct = false;
    let label = sample.label as usize;
    let (_, grad) = qsim::evaluate_and_gradient(circuit, &sample.angles, params, ws, |e| {
        let probs = softmax_probs(e.values());
        loss = cross_entropy(&probs, sample.label);
        correct = argmax(&probs) == label;
        // d(-ln p_y)/dz = softmax(z) - onehot(y)
        probs
            .iter()
            .enumerate()
            .map(|(q, p)| p - if q == label { 1.0 } else { 0.0 })
            .collect()
    })?;
    Ok((loss, grad, correct))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose predicted class matches the label.
pub fn accuracy(
    circuit: &CircuitTemplate,
    samples: &[ImageSample],
    params: &[f64],
) -> Result<f64, TrainError> {
    let hits = samples
        .par_iter()
        .map_init(Workspace::new, |ws, s| {
            let e = qsim::evaluate_with_workspace(circuit, &s.angles, params, ws)?;
            Ok(usize::from(argmax(&softmax_probs(e.values())) == s.label as usize))
        })
        .collect::<Result<Vec<usize>, TrainError>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / samples.len() as f64)
}

fn train_single_run(
    circuit: &CircuitTemplate,
    config: &TrainConfig,
    data: &DatasetSplit,
    seed: u64,
) -> Result<RunMetrics, TrainError> {
    let start = Instant::now();
    let num_params = circuit.num_params();

    let mut init_rng = rng::stream_rng(seed, STREAM_PARAM_INIT);
    let mut params: Vec<f64> = (0..num_params)
        .map(|_| rng::uniform_in(&mut init_rng, 0.0, std::f64::consts::PI))
        .collect();

    let mut batch_rng = rng::stream_rng(seed, STREAM_BATCH_ORDER);
    let mut adam = AdamState::new(num_params);
    let mut epochs = Vec::with_capacity(config.epochs);

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    for _ in 0..config.epochs {
        rng::shuffle(&mut batch_rng, &mut order);
        let mut loss_sum = 0.0;
        let mut hit_sum = 0usize;
        for batch in order.chunks(config.batch_size) {
            let results = batch
                .par_iter()
                .map_init(Workspace::new, |ws, &i| {
                    sample_loss_grad(circuit, &data.train[i], &params, ws)
                })
                .collect::<Result<Vec<_>, TrainError>>()?;

            // Ordered reduction keeps runs bit-identical under any thread count.
            let mut grad_mean = vec![0.0; num_params];
            for (loss, grad, correct) in &results {
                loss_sum += loss;
                hit_sum += usize::from(*correct);
                for (acc, g) in grad_mean.iter_mut().zip(grad) {
                    *acc += g;
                }
            }
            let inv = 1.0 / results.len() as f64;
            for g in &mut grad_mean {
                *g *= inv;
            }
            adam.step(&mut params, &grad_mean, config.learning_rate)?;
        }
        epochs.push(EpochMetrics {
            train_loss: loss_sum / data.train.len() as f64,
            train_acc: hit_sum as f64 / data.train.len() as f64,
            val_acc: accuracy(circuit, &data.validation, &params)?,
        });
    }

    Ok(RunMetrics {
        seed,
        epochs,
        test_acc: accuracy(circuit, &data.test, &params)?,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Train the configured architecture once per seed and collect all metrics.
pub fn run_experiment(
    config: &TrainConfig,
    data: &DatasetSplit,
) -> Result<ExperimentResult, TrainError> {
    let circuit = circuits::build(config.meta)?;
    let subset;
    let data = match config.subset_train {
        Some(n) => {
            subset = data.head_subset(n)?;
            &subset
        }
        None => data,
    };
    let per_seed = config
        .seeds
        .iter()
        .map(|&seed| train_single_run(&circuit, config, data, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResult { per_seed })
}

/// Per-run metrics file: `epoch trainloss trainacc valacc`, one header line.
pub fn format_run_metrics(run: &RunMetrics) -> String {
    let mut out = String::from("epoch trainloss trainacc valacc\n");
    for (e, m) in run.epochs.iter().enumerate() {
        writeln!(
            out,
            "{} {:.6} {:.6} {:.6}",
            e + 1,
            m.train_loss,
            m.train_acc,
            m.val_acc
        )
        .unwrap();
    }
    out
}

/// Aggregated validation curve: `epoch vamean vastd`, one header line.
pub fn format_aggregate(result: &ExperimentResult) -> String {
    let mut out = String::from("epoch vamean vastd\n");
    for (e, (mean, std)) in result.val_mean_std().iter().enumerate() {
        writeln!(out, "{} {:.6} {:.6}", e + 1, mean, std).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{Architecture, EncodingKind, LayerDepth};
    use crate::data::IMAGE_PIXELS;

    #[test]
    fn softmax_of_constant_vector_is_uniform() {
        let p = softmax_probs(&[0.25; 10]);
        for v in &p {
            assert!((v - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_argmax_follows_expectations() {
        let mut z = vec![-1.0; 10];
        z[0] = 1.0;
        let p = softmax_probs(&z);
        assert_eq!(argmax(&p), 0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_matches_direct_exponentiation() {
        // Dual route without max subtraction; inputs are bounded in [-1, 1],
        // so the naive computation is itself accurate.
        let mut gen = rng::stream_rng(21, 0);
        for _ in 0..50 {
            let z: Vec<f64> = (0..10)
                .map(|_| rng::uniform_in(&mut gen, -1.0, 1.0))
                .collect();
            let stable = softmax_probs(&z);
            let exps: Vec<f64> = z.iter().map(|v| v.exp()).collect();
            let sum: f64 = exps.iter().sum();
            for (a, b) in stable.iter().zip(&exps) {
                assert!((a - b / sum).abs() < 1e-12);
            }
            assert!((stable.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_anchors() {
        let uniform = vec![0.1; 10];
        assert!((cross_entropy(&uniform, 3) - 10.0f64.ln()).abs() < 1e-12);
        let mut sure = vec![0.0; 10];
        sure[7] = 1.0;
        assert_eq!(cross_entropy(&sure, 7), 0.0);
        // Floor keeps the loss finite on zero probability.
        assert!(cross_entropy(&sure, 2).is_finite());
        assert!((cross_entropy(&sure, 2) - (-(1e-30f64.ln()))).abs() < 1e-9);
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut params = vec![0.4, -0.7, 1.1];
        let before = params.clone();
        let mut adam = AdamState::new(3);
        adam.step(&mut params, &[0.0, 0.0, 0.0], 0.01).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn adam_constant_gradient_step_approaches_lr() {
        // With a constant gradient the bias-corrected update tends to
        // lr·sign(g) componentwise.
        let mut params = vec![0.0, 0.0];
        let mut adam = AdamState::new(2);
        let grads = [0.3, -2.0];
        let lr = 0.01;
        let mut last = params.clone();
        let mut step = [0.0, 0.0];
        for _ in 0..2000 {
            last.copy_from_slice(&params);
            adam.step(&mut params, &grads, lr).unwrap();
            step = [params[0] - last[0], params[1] - last[1]];
        }
        assert!((step[0] + lr).abs() < 0.01 * lr, "step {step:?}");
        assert!((step[1] - lr).abs() < 0.01 * lr, "step {step:?}");
    }

    #[test]
    fn adam_three_step_trace_matches_scripted_recurrence() {
        // Toy quadratic f(p) = 0.5(p0² + 10·p1²), gradient (p0, 10·p1).
        let lr = 0.05;
        let mut params = vec![1.0, -0.5];
        let mut adam = AdamState::new(2);

        // Straight-line script of the same recurrence.
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-7);
        let mut sp = [1.0f64, -0.5];
        let mut m = [0.0f64, 0.0];
        let mut v = [0.0f64, 0.0];
        for t in 1..=3u32 {
            let g = [sp[0], 10.0 * sp[1]];
            for i in 0..2 {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / (1.0 - b1.powi(t as i32));
                let vh = v[i] / (1.0 - b2.powi(t as i32));
                sp[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }

        for _ in 0..3 {
            let g = vec![params[0], 10.0 * params[1]];
            adam.step(&mut params, &g, lr).unwrap();
        }
        assert!((params[0] - sp[0]).abs() < 1e-12);
        assert!((params[1] - sp[1]).abs() < 1e-12);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut params = vec![0.0];
        let mut adam = AdamState::new(1);
        let err = adam.step(&mut params, &[f64::NAN], 0.01).unwrap_err();
        assert!(matches!(err, TrainError::NonFiniteGradient { index: 0 }));
    }

    fn synthetic_split(n: usize) -> DatasetSplit {
        let mut gen = rng::stream_rng(3141, 0);
        let make = |gen: &mut rand_chacha::ChaCha8Rng, count: usize| {
            (0..count)
                .map(|i| {
                    let mut angles = [0.0; IMAGE_PIXELS];
                    for a in angles.iter_mut() {
                        *a = rng::uniform_in(gen, 0.0, std::f64::consts::PI);
                    }
                    ImageSample {
                        angles,
                        label: (i % 10) as u8,
                    }
                })
                .collect::<Vec<_>>()
        };
        DatasetSplit {
            train: make(&mut gen, n),
            validation: make(&mut gen, n / 4),
            test: make(&mut gen, n / 4),
            seed: 0,
        }
    }

    #[test]
    fn experiment_runs_are_deterministic() {
        let meta = CircuitMeta {
            architecture: Architecture::Idu,
            splits: 10,
            encoding: EncodingKind::Rx,
            depth: LayerDepth::Params20,
        };
        let mut config = TrainConfig::new(meta);
        config.epochs = 2;
        config.seeds = vec![7];
        let data = synthetic_split(48);

        let a = run_experiment(&config, &data).unwrap();
        let b = run_experiment(&config, &data).unwrap();
        assert_eq!(format_run_metrics(&a.per_seed[0]), format_run_metrics(&b.per_seed[0]));
        assert_eq!(a.per_seed[0].epochs, b.per_seed[0].epochs);
        assert_eq!(a.per_seed[0].test_acc, b.per_seed[0].test_acc);
        for m in &a.per_seed[0].epochs {
            assert!((0.0..=1.0).contains(&m.train_acc));
            assert!((0.0..=1.0).contains(&m.val_acc));
        }
    }

    #[test]
    fn metrics_files_have_expected_shape() {
        let run = RunMetrics {
            seed: 0,
            epochs: vec![
                EpochMetrics {
                    train_loss: 2.0,
                    train_acc: 0.25,
                    val_acc: 0.3,
                },
                EpochMetrics {
                    train_loss: 1.5,
                    train_acc: 0.5,
                    val_acc: 0.45,
                },
            ],
            test_acc: 0.5,
            wall_time_s: 1.0,
        };
        let text = format_run_metrics(&run);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "epoch trainloss trainacc valacc");
        assert_eq!(lines.next().unwrap(), "1 2.000000 0.250000 0.300000");

        let result = ExperimentResult {
            per_seed: vec![run.clone(), run],
        };
        let agg = format_aggregate(&result);
        assert!(agg.starts_with("epoch vamean vastd\n"));
        assert_eq!(agg.lines().count(), 3);
        let (mean, std) = result.test_mean_std();
        assert_eq!(mean, 0.5);
        assert_eq!(std, 0.0);
    }
}
