//! Trainability and expressibility analyses.
//!
//! The empirical Fisher information matrix at a parameter point θ is the
//! average over k samples of the outer product of log-likelihood gradients,
//! with inputs drawn from the dataset and labels sampled from the model
//! conditional. Its eigenvalue spectrum diagnoses parameter-space
//! distortion; the effective dimension summarizes expressibility as a
//! function of the parameter-space resolution n through the factor
//! `c_n = n / (2π ln n)`.

pub mod fourier;

use crate::circuits::CircuitTemplate;
use crate::qsim::{self, QsimError, Workspace};
use crate::rng;
use crate::train::softmax_probs;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("need at least {want} parameter points, got {got}")]
    TooFewThetas { got: usize, want: usize },
    #[error("sample budget {k} exceeds dataset size {available}")]
    SampleBudget { k: usize, available: usize },
    #[error("resolution n = {n} must be at least 3 for c_n to be usable")]
    ResolutionTooSmall { n: u64 },
    #[error("eigendecomposition failed for matrix {index}")]
    EigenFailed { index: usize },
    #[error("non-finite log-determinant at parameter point {theta_index} (n = {n})")]
    NonFiniteLogDet { theta_index: usize, n: u64 },
    #[error("Fourier grid of {points} evaluations over {dims} inputs exceeds the {max}-input limit")]
    GridTooLarge {
        dims: usize,
        points: u128,
        max: usize,
    },
    #[error("feature vector has length {got}, circuit expects {want}")]
    InputLength { got: usize, want: usize },
}

/// Empirical Fisher information estimate at one parameter point.
#[derive(Debug, Clone)]
pub struct FimEstimate {
    matrix: DMatrix<f64>,
    k: usize,
    theta: Vec<f64>,
}

impl FimEstimate {
    /// Wrap an externally produced matrix (tests, synthetic controls).
    pub fn from_matrix(matrix: DMatrix<f64>, k: usize, theta: Vec<f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols());
        Self { matrix, k, theta }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Largest absolute asymmetry `max |F - Fᵀ|`.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in (i + 1)..self.matrix.ncols() {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// Eigenvalues of the symmetrized matrix, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, AnalysisError> {
        symmetric_eigenvalues(&self.matrix, 0)
    }
}

fn symmetric_eigenvalues(matrix: &DMatrix<f64>, index: usize) -> Result<Vec<f64>, AnalysisError> {
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(AnalysisError::EigenFailed { index })?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(values)
}

/// Gradient of `ln p_θ(y|x)` (softmax log-likelihood) with respect to all
/// parameters, via the adjoint pass with cotangent `onehot(y) − probs`.
pub fn loglik_gradient(
    circuit: &CircuitTemplate,
    params: &[f64],
    features: &[f64],
    label: usize,
) -> Result<Vec<f64>, AnalysisError> {
    let mut ws = Workspace::new();
    loglik_gradient_ws(circuit, params, features, label, &mut ws)
}

fn loglik_gradient_ws(
    circuit: &CircuitTemplate,
    params: &[f64],
    features: &[f64],
    label: usize,
    ws: &mut Workspace,
) -> Result<Vec<f64>, AnalysisError> {
    let (_, grad) = qsim::evaluate_and_gradient(circuit, features, params, ws, |e| {
        let probs = softmax_probs(e.values());
        probs
            .iter()
            .enumerate()
            .map(|(q, p)| if q == label { 1.0 - p } else { -p })
            .collect()
    })?;
    Ok(grad)
}

/// Empirical FIM at `params`: draw `k` inputs from `inputs` without
/// replacement (stream 0 of `seed`), sample `y ~ p_θ(·|x)` (stream 1), and
/// average the outer products of the log-likelihood gradients.
pub fn empirical_fim(
    circuit: &CircuitTemplate,
    params: &[f64],
    inputs: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<FimEstimate, AnalysisError> {
    if k > inputs.len() {
        return Err(AnalysisError::SampleBudget {
            k,
            available: inputs.len(),
        });
    }
    let mut draw_rng = rng::stream_rng(seed, 0);
    let picks = rng::sample_indices(&mut draw_rng, inputs.len(), k);

    // Label sampling must see the forward probabilities, so it happens
    // sequentially; gradients then run in parallel.
    let mut label_rng = rng::stream_rng(seed, 1);
    let mut ws = Workspace::new();
    let mut tasks = Vec::with_capacity(k);
    for &i in &picks {
        let x = &inputs[i];
        if x.len() != circuit.num_features() {
            return Err(AnalysisError::InputLength {
                got: x.len(),
                want: circuit.num_features(),
            });
        }
        let e = qsim::evaluate_with_workspace(circuit, x, params, &mut ws)?;
        let probs = softmax_probs(e.values());
        tasks.push((i, rng::pick_weighted(&mut label_rng, &probs)));
    }

    let grads = tasks
        .par_iter()
        .map_init(Workspace::new, |ws, &(i, y)| {
            loglik_gradient_ws(circuit, params, &inputs[i], y, ws)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let d = circuit.num_params();
    let mut matrix = DMatrix::zeros(d, d);
    let weight = 1.0 / k as f64;
    for g in &grads {
        let v = DVector::from_column_slice(g);
        matrix.ger(weight, &v, &v, 1.0);
    }
    Ok(FimEstimate {
        matrix,
        k,
        theta: params.to_vec(),
    })
}

/// Empirical FIMs at `num_thetas` parameter points drawn uniformly from
/// `[0, π]^d` (stream 2 of `seed`); the FIM at point `s` uses `seed + s`.
pub fn fim_ensemble(
    circuit: &CircuitTemplate,
    inputs: &[Vec<f64>],
    num_thetas: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<FimEstimate>, AnalysisError> {
    let mut theta_rng = rng::stream_rng(seed, 2);
    let thetas: Vec<Vec<f64>> = (0..num_thetas)
        .map(|_| {
            (0..circuit.num_params())
                .map(|_| rng::uniform_in(&mut theta_rng, 0.0, std::f64::consts::PI))
                .collect()
        })
        .collect();
    thetas
        .iter()
        .enumerate()
        .map(|(s, theta)| empirical_fim(circuit, theta, inputs, k, seed + s as u64))
        .collect()
}

/// Synthetic control: FIM of unit-variance independent gradients
/// (standard normal via Box-Muller), which concentrates at the identity.
pub fn synthetic_unit_fim(d: usize, k: usize, seed: u64) -> FimEstimate {
    let mut gen = rng::stream_rng(seed, 0);
    let mut matrix = DMatrix::zeros(d, d);
    let weight = 1.0 / k as f64;
    for _ in 0..k {
        let g: Vec<f64> = (0..d)
            .map(|_| {
                let u1 = rng::uniform(&mut gen).max(1e-300);
                let u2 = rng::uniform(&mut gen);
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let v = DVector::from_column_slice(&g);
        matrix.ger(weight, &v, &v, 1.0);
    }
    FimEstimate {
        matrix,
        k,
        theta: vec![],
    }
}

/// Pooled eigenvalue histogram of several FIM estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumHistogram {
    /// `bins + 1` edges spanning `[0, cut]`.
    pub bin_edges: Vec<f64>,
    /// Eigenvalue count per bin (values below 0 count into the first bin).
    pub counts: Vec<usize>,
    /// Running totals per bin; ends at `total`.
    pub cumulative: Vec<usize>,
    /// Eigenvalues above `cut`, reported separately.
    pub above_cut: usize,
    /// Eigenvalues retained in the histogram.
    pub total: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Pool the eigenvalues of all estimates into a histogram over `[0, cut]`.
pub fn fim_spectrum(
    fims: &[FimEstimate],
    bins: usize,
    cut: f64,
) -> Result<SpectrumHistogram, AnalysisError> {
    assert!(bins > 0 && cut > 0.0);
    let mut counts = vec![0usize; bins];
    let mut above_cut = 0usize;
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_eigenvalue = f64::NEG_INFINITY;
    for (index, fim) in fims.iter().enumerate() {
        for lambda in symmetric_eigenvalues(&fim.matrix, index)? {
            min_eigenvalue = min_eigenvalue.min(lambda);
            max_eigenvalue = max_eigenvalue.max(lambda);
            if lambda > cut {
                above_cut += 1;
            } else {
                let bin = ((lambda.max(0.0) / cut) * bins as f64) as usize;
                counts[bin.min(bins - 1)] += 1;
            }
        }
    }
    let mut cumulative = Vec::with_capacity(bins);
    let mut running = 0usize;
    for &c in &counts {
        running += c;
        cumulative.push(running);
    }
    Ok(SpectrumHistogram {
        bin_edges: (0..=bins).map(|b| cut * b as f64 / bins as f64).collect(),
        counts,
        cumulative,
        above_cut,
        total: running,
        min_eigenvalue,
        max_eigenvalue,
    })
}

/// Normalized effective dimension at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct EffDimPoint {
    pub n: u64,
    pub c_n: f64,
    pub ed_normalized: f64,
}

/// Effective-dimension curve over the requested resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct EffDimCurve {
    pub points: Vec<EffDimPoint>,
    pub d: usize,
    pub num_theta_samples: usize,
}

/// `c_n = n / (2π ln n)`.
pub fn resolution_factor(n: u64) -> f64 {
    let nf = n as f64;
    nf / (2.0 * std::f64::consts::PI * nf.ln())
}

/// Normalized effective dimension from FIMs at `S ≥ 2` parameter points.
///
/// Matrices are normalized so the θ-averaged trace of `F̂` equals `d`; the
/// volume integral is the Monte-Carlo mean over the parameter points,
/// evaluated in log space: the integrand is half the log-determinant of
/// `I + c_n F̂(θ)` (diagonal jitter 1e-10) and the mean is taken with
/// log-mean-exp.
pub fn effective_dimension(
    fims: &[FimEstimate],
    n_list: &[u64],
) -> Result<EffDimCurve, AnalysisError> {
    if fims.len() < 2 {
        return Err(AnalysisError::TooFewThetas {
            got: fims.len(),
            want: 2,
        });
    }
    if let Some(&n) = n_list.iter().find(|&&n| n < 3) {
        return Err(AnalysisError::ResolutionTooSmall { n });
    }
    let d = fims[0].dim();
    let s_count = fims.len();
    let mean_trace = fims.iter().map(|f| f.matrix.trace()).sum::<f64>() / s_count as f64;
    // F̂ = d·F / mean-trace; an all-zero ensemble stays all-zero.
    let scale = if mean_trace == 0.0 {
        0.0
    } else {
        d as f64 / mean_trace
    };
    let spectra: Vec<Vec<f64>> = fims
        .iter()
        .enumerate()
        .map(|(index, fim)| {
            Ok(symmetric_eigenvalues(&fim.matrix, index)?
                .into_iter()
                .map(|l| l * scale)
                .collect())
        })
        .collect::<Result<_, AnalysisError>>()?;

    const JITTER: f64 = 1e-10;
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let c_n = resolution_factor(n);
        let mut integrands = Vec::with_capacity(s_count);
        for (theta_index, spectrum) in spectra.iter().enumerate() {
            let mut half_logdet = 0.0;
            for &lambda in spectrum {
                let term = 1.0 + JITTER + c_n * lambda;
                if term <= 0.0 || !term.is_finite() {
                    return Err(AnalysisError::NonFiniteLogDet { theta_index, n });
                }
                half_logdet += 0.5 * term.ln();
            }
            if !half_logdet.is_finite() {
                return Err(AnalysisError::NonFiniteLogDet { theta_index, n });
            }
            integrands.push(half_logdet);
        }
        let lme = log_mean_exp(&integrands);
        let ed = 2.0 * lme / c_n.ln();
        points.push(EffDimPoint {
            n,
            c_n,
            ed_normalized: ed / d as f64,
        });
    }
    Ok(EffDimCurve {
        points,
        d,
        num_theta_samples: s_count,
    })
}

fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (sum / values.len() as f64).ln()
}
