//! Multidimensional Fourier probe for small circuits.
//!
//! A circuit whose readout is `f(x) = ⟨Z_0⟩` is sampled on a regular grid
//! with `2B + 1` points per input dimension over `[0, 2π)` and transformed
//! with a multidimensional DFT, yielding coefficients indexed by integer
//! frequency vectors in `[-B, B]^dims`. Single-axis rotation encodings
//! confine the spectrum to `{-1, 0, 1}` per upload, and re-uploading a
//! feature N times extends its spectrum to `{-N, …, N}`; probing with a
//! larger B than the true bound makes the confinement measurable.

use super::AnalysisError;
use crate::circuits::{Architecture, CircuitMeta, CircuitTemplate, EncodingKind, LayerDepth};
use crate::qsim::{self, AngleSource, GateSpec, Workspace};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Largest number of input dimensions the grid probe accepts.
pub const MAX_PROBE_DIMS: usize = 6;

/// DFT coefficients of a circuit readout, indexed by frequency vectors.
#[derive(Debug, Clone)]
pub struct FourierSpectrum {
    dims: usize,
    bound: i32,
    coefficients: BTreeMap<Vec<i32>, Complex64>,
}

impl FourierSpectrum {
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Probe bound B: frequencies range over `[-B, B]` per dimension.
    pub fn bound(&self) -> i32 {
        self.bound
    }

    pub fn coefficient(&self, omega: &[i32]) -> Complex64 {
        self.coefficients
            .get(omega)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&Vec<i32>, &Complex64)> {
        self.coefficients.iter()
    }

    /// `Σ |c_ω|²` over all coefficients.
    pub fn total_energy(&self) -> f64 {
        self.coefficients.values().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ |c_ω|²` over coefficients with any component beyond `bound`.
    pub fn energy_outside(&self, bound: i32) -> f64 {
        self.coefficients
            .iter()
            .filter(|(omega, _)| omega.iter().any(|w| w.abs() > bound))
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// `max |c_{-ω} - conj(c_ω)|`; zero for real-valued readouts.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (omega, c) in &self.coefficients {
            let neg: Vec<i32> = omega.iter().map(|w| -w).collect();
            worst = worst.max((self.coefficient(&neg) - c.conj()).norm());
        }
        worst
    }

    /// Evaluate the Fourier sum `Σ_ω c_ω e^{i ω·x}` at an arbitrary point.
    pub fn reconstruct(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.dims);
        let mut acc = Complex64::new(0.0, 0.0);
        for (omega, c) in &self.coefficients {
            let phase: f64 = omega
                .iter()
                .zip(x)
                .map(|(&w, &xi)| w as f64 * xi)
                .sum();
            acc += c * Complex64::new(0.0, phase).exp();
        }
        acc
    }
}

fn toy_variational_layer(qubits: usize, layer: usize) -> Vec<GateSpec> {
    let mut gates = Vec::new();
    for q in 0..qubits {
        let base = 2 * (layer * qubits + q);
        gates.push(GateSpec::ry(q, AngleSource::Param(base)));
        gates.push(GateSpec::rz(q, AngleSource::Param(base + 1)));
    }
    for q in 0..qubits.saturating_sub(1) {
        gates.push(GateSpec::crz(q, q + 1, AngleSource::Fixed(std::f64::consts::PI)));
    }
    gates
}

/// Downsized interleaved circuit for spectrum probes: `rows` encoding rows
/// of `cols` distinct features (feature `rows·cols` total, gate on qubit
/// `c mod qubits`), each followed by one variational layer. Frequencies per
/// feature are confined to `{-1, 0, 1}`.
pub fn toy_idu_circuit(qubits: usize, rows: usize, cols: usize) -> CircuitTemplate {
    let mut gates = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            gates.push(GateSpec::rx(c % qubits, AngleSource::Feature(r * cols + c)));
        }
        gates.extend(toy_variational_layer(qubits, r));
    }
    CircuitTemplate::new(
        qubits,
        gates,
        rows * cols,
        2 * qubits * rows,
        CircuitMeta {
            architecture: Architecture::Idu,
            splits: rows,
            encoding: EncodingKind::Rx,
            depth: LayerDepth::Params20,
        },
    )
    .expect("toy construction is valid")
}

/// Downsized re-uploading circuit: the same `cols` features encoded
/// `reuploads` times with variational layers in between, so each feature's
/// spectrum extends to `{-reuploads, …, reuploads}`.
pub fn toy_dru_circuit(qubits: usize, reuploads: usize, cols: usize) -> CircuitTemplate {
    let mut gates = Vec::new();
    for r in 0..reuploads {
        for c in 0..cols {
            gates.push(GateSpec::rx(c % qubits, AngleSource::Feature(c)));
        }
        gates.extend(toy_variational_layer(qubits, r));
    }
    CircuitTemplate::new(
        qubits,
        gates,
        cols,
        2 * qubits * reuploads,
        CircuitMeta {
            architecture: Architecture::Dru,
            splits: reuploads,
            encoding: EncodingKind::Rx,
            depth: LayerDepth::Params20,
        },
    )
    .expect("toy construction is valid")
}

/// Sample `⟨Z_0⟩` of the circuit on the regular grid and return its DFT
/// coefficients over `[-B, B]^dims`, where `dims = circuit.num_features()`.
pub fn fourier_probe(
    circuit: &CircuitTemplate,
    params: &[f64],
    bound: usize,
) -> Result<FourierSpectrum, AnalysisError> {
    let dims = circuit.num_features();
    let grid = 2 * bound + 1;
    let points = (grid as u128).pow(dims as u32);
    if dims > MAX_PROBE_DIMS {
        return Err(AnalysisError::GridTooLarge {
            dims,
            points,
            max: MAX_PROBE_DIMS,
        });
    }
    let total = points as usize;

    // Sample the readout on the grid; index t encodes one grid coordinate
    // per dimension, dimension 0 fastest.
    let mut ws = Workspace::new();
    let mut values = Vec::with_capacity(total);
    let mut features = vec![0.0; dims];
    let step = 2.0 * std::f64::consts::PI / grid as f64;
    for t in 0..total {
        let mut rest = t;
        for f in features.iter_mut() {
            *f = (rest % grid) as f64 * step;
            rest /= grid;
        }
        let e = qsim::evaluate_with_workspace(circuit, &features, params, &mut ws)?;
        values.push(Complex64::new(e.values()[0], 0.0));
    }

    // Separable DFT: transform along one dimension at a time.
    let twiddle: Vec<Vec<Complex64>> = (0..grid)
        .map(|w| {
            (0..grid)
                .map(|t| {
                    Complex64::new(0.0, -2.0 * std::f64::consts::PI * (w * t) as f64 / grid as f64)
                        .exp()
                })
                .collect()
        })
        .collect();
    let mut buf = values;
    let mut scratch = vec![Complex64::new(0.0, 0.0); grid];
    let mut stride = 1usize;
    for _ in 0..dims {
        let block = stride * grid;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let line = base + offset;
                for (w, slot) in scratch.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for t in 0..grid {
                        acc += twiddle[w][t] * buf[line + t * stride];
                    }
                    *slot = acc;
                }
                for (w, &v) in scratch.iter().enumerate() {
                    buf[line + w * stride] = v;
                }
            }
        }
        stride *= grid;
    }

    // Normalize and re-index DFT bins to signed frequencies.
    let norm = 1.0 / total as f64;
    let mut coefficients = BTreeMap::new();
    for (t, &c) in buf.iter().enumerate() {
        let mut rest = t;
        let mut omega = Vec::with_capacity(dims);
        for _ in 0..dims {
            let w = rest % grid;
            rest /= grid;
            omega.push(if w <= bound { w as i32 } else { w as i32 - grid as i32 });
        }
        coefficients.insert(omega, c * norm);
    }
    Ok(FourierSpectrum {
        dims,
        bound: bound as i32,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::CircuitMeta;
    use crate::qsim::{AngleSource, GateSpec};

    #[test]
    fn cosine_readout_has_half_weight_at_unit_frequencies() {
        // Single RX(x): ⟨Z⟩ = cos x = e^{ix}/2 + e^{-ix}/2.
        let c = CircuitTemplate::new(
            1,
            vec![GateSpec::rx(0, AngleSource::Feature(0))],
            1,
            0,
            CircuitMeta::toy(),
        )
        .unwrap();
        let spec = fourier_probe(&c, &[], 1).unwrap();
        assert!((spec.coefficient(&[1]) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((spec.coefficient(&[-1]) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!(spec.coefficient(&[0]).norm() < 1e-12);
        let residual = spec.total_energy() - 0.5;
        assert!(residual.abs() < 1e-12);
        assert!(spec.hermitian_asymmetry() < 1e-14);
    }

    #[test]
    fn probe_rejects_wide_grids() {
        let gates = (0..7).map(|i| GateSpec::rx(0, AngleSource::Feature(i))).collect();
        let c = CircuitTemplate::new(1, gates, 7, 0, CircuitMeta::toy()).unwrap();
        assert!(matches!(
            fourier_probe(&c, &[], 1),
            Err(AnalysisError::GridTooLarge { dims: 7, .. })
        ));
    }

    #[test]
    fn reconstruction_interpolates_off_grid() {
        let gates = vec![
            GateSpec::rx(0, AngleSource::Feature(0)),
            GateSpec::ry(0, AngleSource::Param(0)),
            GateSpec::rx(0, AngleSource::Feature(1)),
        ];
        let c = CircuitTemplate::new(1, gates, 2, 1, CircuitMeta::toy()).unwrap();
        let params = [0.83];
        let spec = fourier_probe(&c, &params, 2).unwrap();
        let mut gen = crate::rng::stream_rng(5, 0);
        for _ in 0..20 {
            let x = [
                crate::rng::uniform_in(&mut gen, 0.0, 2.0 * std::f64::consts::PI),
                crate::rng::uniform_in(&mut gen, 0.0, 2.0 * std::f64::consts::PI),
            ];
            let direct = qsim::evaluate(&c, &x, &params).unwrap().values()[0];
            let rebuilt = spec.reconstruct(&x);
            assert!((rebuilt.re - direct).abs() < 1e-8);
            assert!(rebuilt.im.abs() < 1e-10);
        }
    }
}
