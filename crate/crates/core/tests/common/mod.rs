//! Shared test oracles, kept independent of the simulator's execution path.
//!
//! The matrix oracle builds every gate as an explicit kronecker-product
//! unitary and evolves the state by dense matrix-vector products; the
//! finite-difference helpers probe gradients numerically.

#![allow(dead_code)]

use idu_core::circuits::CircuitTemplate;
use idu_core::qsim::{AngleSource, GateKind, GateSpec};
use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Clone)]
pub struct CMat {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: [[Complex64; 2]; 2]) -> Self {
        Self {
            dim: 2,
            data: vec![rows[0][0], rows[0][1], rows[1][0], rows[1][1]],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn add(&mut self, other: &CMat) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            let mut acc = Complex64::new(0.0, 0.0);
            for (u, v) in row.iter().zip(x) {
                acc += u * v;
            }
            y[i] = acc;
        }
        y
    }
}

/// `kron(a, b)` with `b` occupying the low index bits.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let dim = a.dim * b.dim;
    let mut out = CMat::zeros(dim);
    for ia in 0..a.dim {
        for ja in 0..a.dim {
            let f = a.at(ia, ja);
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..b.dim {
                for jb in 0..b.dim {
                    out.data[(ia * b.dim + ib) * dim + (ja * b.dim + jb)] = f * b.at(ib, jb);
                }
            }
        }
    }
    out
}

fn rot_x(theta: f64) -> CMat {
    let (s, c) = (0.5 * theta).sin_cos();
    CMat::from_rows([
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ])
}

fn rot_y(theta: f64) -> CMat {
    let (s, c) = (0.5 * theta).sin_cos();
    CMat::from_rows([
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ])
}

fn rot_z(theta: f64) -> CMat {
    let (s, c) = (0.5 * theta).sin_cos();
    CMat::from_rows([
        [Complex64::new(c, -s), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(c, s)],
    ])
}

fn projector(bit: usize) -> CMat {
    let mut m = CMat::zeros(2);
    m.data[bit * 2 + bit] = Complex64::new(1.0, 0.0);
    m
}

/// Kron chain with the given per-qubit factors (qubit 0 = least significant).
fn chain(num_qubits: usize, factors: &dyn Fn(usize) -> CMat) -> CMat {
    let mut acc = factors(num_qubits - 1);
    for q in (0..num_qubits - 1).rev() {
        acc = kron(&acc, &factors(q));
    }
    acc
}

/// Full 2^n × 2^n unitary of one gate at a resolved angle.
pub fn gate_matrix(num_qubits: usize, gate: &GateSpec, angle: f64) -> CMat {
    match gate.kind {
        GateKind::Rx | GateKind::Ry | GateKind::Rz => {
            let g = match gate.kind {
                GateKind::Rx => rot_x(angle),
                GateKind::Ry => rot_y(angle),
                _ => rot_z(angle),
            };
            chain(num_qubits, &|q| {
                if q == gate.target {
                    g.clone()
                } else {
                    CMat::identity(2)
                }
            })
        }
        GateKind::Crz => {
            let control = gate.control.expect("CRZ has a control");
            let mut term0 = chain(num_qubits, &|q| {
                if q == control {
                    projector(0)
                } else {
                    CMat::identity(2)
                }
            });
            let rz = rot_z(angle);
            let term1 = chain(num_qubits, &|q| {
                if q == control {
                    projector(1)
                } else if q == gate.target {
                    rz.clone()
                } else {
                    CMat::identity(2)
                }
            });
            term0.add(&term1);
            term0
        }
    }
}

/// Evolve `|0…0⟩` through the circuit by dense matrix products.
pub fn matrix_oracle_state(
    circuit: &CircuitTemplate,
    features: &[f64],
    params: &[f64],
) -> Vec<Complex64> {
    let dim = 1 << circuit.num_qubits();
    let mut state = vec![Complex64::new(0.0, 0.0); dim];
    state[0] = Complex64::new(1.0, 0.0);
    for gate in circuit.gates() {
        let angle = match gate.source {
            AngleSource::Feature(i) => features[i],
            AngleSource::Param(i) => params[i],
            AngleSource::Fixed(v) => v,
        };
        let u = gate_matrix(circuit.num_qubits(), gate, angle);
        state = u.matvec(&state);
    }
    state
}

/// Per-qubit Z expectations from an amplitude vector.
pub fn z_expectations_of(state: &[Complex64], num_qubits: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_qubits];
    for (i, a) in state.iter().enumerate() {
        let p = a.norm_sqr();
        for (q, slot) in out.iter_mut().enumerate() {
            if (i >> q) & 1 == 0 {
                *slot += p;
            } else {
                *slot -= p;
            }
        }
    }
    out
}

/// Central finite differences of `f` with respect to `params`.
pub fn finite_difference_gradient<F>(params: &[f64], h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = vec![0.0; params.len()];
    let mut probe = params.to_vec();
    for i in 0..params.len() {
        probe[i] = params[i] + h;
        let up = f(&probe);
        probe[i] = params[i] - h;
        let down = f(&probe);
        probe[i] = params[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// `analytic` agrees with `reference` to relative tolerance with an
/// absolute floor.
pub fn assert_close_rel(analytic: &[f64], reference: &[f64], rel: f64, floor: f64, label: &str) {
    assert_eq!(analytic.len(), reference.len(), "{label}: length mismatch");
    for (i, (a, r)) in analytic.iter().zip(reference).enumerate() {
        let diff = (a - r).abs();
        assert!(
            diff < floor || diff / r.abs() < rel,
            "{label}: component {i}: analytic {a}, reference {r}, diff {diff}"
        );
    }
}

/// Uniform draws in `[0, π]` for synthetic features/parameters.
pub fn uniform_angles(rng: &mut rand_chacha::ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| idu_core::rng::uniform_in(rng, 0.0, std::f64::consts::PI))
        .collect()
}
