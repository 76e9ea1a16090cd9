//! Dense statevector simulation with analytic adjoint gradients.
//!
//! Amplitudes are stored as one contiguous `Vec<Complex64>` indexed so that
//! qubit `q` is bit `q` of the basis-state index (qubit 0 least significant).
//! Rotation conventions:
//!
//! - `R_a(θ) = exp(-iθA/2)` for `A ∈ {X, Y, Z}`,
//! - `CRZ(θ) = diag(1, 1, e^{-iθ/2}, e^{+iθ/2})` in (control, target)
//!   ordering, i.e. `R_z(θ)` on the target conditioned on the control.
//!
//! Gradients of weighted sums of per-qubit Z expectations are computed with a
//! reverse statevector pass costing O(#gates) gate applications in total,
//! exact to machine precision.

use crate::circuits::CircuitTemplate;
use num_complex::Complex64;

/// Largest supported register; 2^16 amplitudes is the resource guard.
pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QsimError {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(usize),
    #[error("gate target {target} out of range for {num_qubits} qubits")]
    InvalidTarget { target: usize, num_qubits: usize },
    #[error("invalid control {control} for target {target} on {num_qubits} qubits")]
    InvalidControl {
        control: usize,
        target: usize,
        num_qubits: usize,
    },
    #[error("single-qubit rotation carries a control qubit")]
    UnexpectedControl,
    #[error("controlled gate is missing its control qubit")]
    MissingControl,
    #[error("feature vector has length {got}, circuit expects {want}")]
    FeatureLength { got: usize, want: usize },
    #[error("parameter vector has length {got}, circuit expects {want}")]
    ParamLength { got: usize, want: usize },
    #[error("cotangent has length {got}, circuit has {want} qubits")]
    CotangentLength { got: usize, want: usize },
}

/// Gate alphabet of the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Crz,
}

/// Where a gate takes its rotation angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSource {
    /// Index into the per-sample feature vector.
    Feature(usize),
    /// Index into the trainable parameter vector.
    Param(usize),
    /// Constant angle in radians.
    Fixed(f64),
}

/// One gate of a circuit template, with its angle binding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub source: AngleSource,
}

impl GateSpec {
    pub fn rx(target: usize, source: AngleSource) -> Self {
        Self {
            kind: GateKind::Rx,
            target,
            control: None,
            source,
        }
    }

    pub fn ry(target: usize, source: AngleSource) -> Self {
        Self {
            kind: GateKind::Ry,
            target,
            control: None,
            source,
        }
    }

    pub fn rz(target: usize, source: AngleSource) -> Self {
        Self {
            kind: GateKind::Rz,
            target,
            control: None,
            source,
        }
    }

    pub fn crz(control: usize, target: usize, source: AngleSource) -> Self {
        Self {
            kind: GateKind::Crz,
            target,
            control: Some(control),
            source,
        }
    }

    /// Structural validity against a register size.
    pub fn validate(&self, num_qubits: usize) -> Result<(), QsimError> {
        if self.target >= num_qubits {
            return Err(QsimError::InvalidTarget {
                target: self.target,
                num_qubits,
            });
        }
        match (self.kind, self.control) {
            (GateKind::Crz, Some(c)) if c >= num_qubits || c == self.target => {
                Err(QsimError::InvalidControl {
                    control: c,
                    target: self.target,
                    num_qubits,
                })
            }
            (GateKind::Crz, None) => Err(QsimError::MissingControl),
            (GateKind::Rx | GateKind::Ry | GateKind::Rz, Some(_)) => {
                Err(QsimError::UnexpectedControl)
            }
            _ => Ok(()),
        }
    }
}

/// Per-qubit Pauli-Z expectation values, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationVector {
    values: Vec<f64>,
}

impl ExpectationVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Dense amplitude vector for an `n`-qubit register, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0⟩^⊗n`.
    pub fn zero(num_qubits: usize) -> Result<Self, QsimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::QubitCountOutOfRange(num_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Reset to `|0⟩^⊗n` without reallocating.
    pub fn reset(&mut self) {
        self.amps.fill(Complex64::new(0.0, 0.0));
        self.amps[0] = Complex64::new(1.0, 0.0);
    }

    /// Apply `gate` with a resolved `angle`, checking indices first.
    pub fn apply_gate(&mut self, gate: &GateSpec, angle: f64) -> Result<(), QsimError> {
        gate.validate(self.num_qubits)?;
        self.apply_resolved(gate, angle);
        Ok(())
    }

    /// Hot path used after the template has been validated once.
    fn apply_resolved(&mut self, gate: &GateSpec, angle: f64) {
        match gate.kind {
            GateKind::Rx => apply_rx(&mut self.amps, gate.target, angle),
            GateKind::Ry => apply_ry(&mut self.amps, gate.target, angle),
            GateKind::Rz => apply_rz(&mut self.amps, gate.target, angle),
            GateKind::Crz => apply_crz(&mut self.amps, gate.control.unwrap(), gate.target, angle),
        }
    }

    /// `⟨Z_q⟩` for every qubit.
    pub fn z_expectations(&self) -> ExpectationVector {
        let mut values = vec![0.0; self.num_qubits];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, slot) in values.iter_mut().enumerate() {
                let sign = 1.0 - 2.0 * ((i >> q) & 1) as f64;
                *slot += sign * p;
            }
        }
        ExpectationVector { values }
    }
}

// --- gate kernels -----------------------------------------------------------

#[inline]
fn half_angle(theta: f64) -> (f64, f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    (c, s)
}

fn apply_rx(amps: &mut [Complex64], target: usize, theta: f64) {
    let (c, s) = half_angle(theta);
    let step = 1 << target;
    for chunk in amps.chunks_exact_mut(2 * step) {
        let (lo, hi) = chunk.split_at_mut(step);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (ar, ai, br, bi) = (a.re, a.im, b.re, b.im);
            a.re = c * ar + s * bi;
            a.im = c * ai - s * br;
            b.re = s * ai + c * br;
            b.im = -s * ar + c * bi;
        }
    }
}

fn apply_ry(amps: &mut [Complex64], target: usize, theta: f64) {
    let (c, s) = half_angle(theta);
    let step = 1 << target;
    for chunk in amps.chunks_exact_mut(2 * step) {
        let (lo, hi) = chunk.split_at_mut(step);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (ar, ai, br, bi) = (a.re, a.im, b.re, b.im);
            a.re = c * ar - s * br;
            a.im = c * ai - s * bi;
            b.re = s * ar + c * br;
            b.im = s * ai + c * bi;
        }
    }
}

/// Multiply amplitudes by `ph0`/`ph1` according to the value of one bit.
fn apply_phase_by_bit(amps: &mut [Complex64], qubit: usize, ph0: Complex64, ph1: Complex64) {
    let step = 1 << qubit;
    for chunk in amps.chunks_exact_mut(2 * step) {
        let (lo, hi) = chunk.split_at_mut(step);
        for a in lo {
            *a *= ph0;
        }
        for a in hi {
            *a *= ph1;
        }
    }
}

fn apply_rz(amps: &mut [Complex64], target: usize, theta: f64) {
    let (c, s) = half_angle(theta);
    apply_phase_by_bit(
        amps,
        target,
        Complex64::new(c, -s),
        Complex64::new(c, s),
    );
}

fn apply_crz(amps: &mut [Complex64], control: usize, target: usize, theta: f64) {
    let (c, s) = half_angle(theta);
    let ph0 = Complex64::new(c, -s);
    let ph1 = Complex64::new(c, s);
    let cstep = 1 << control;
    if target < control {
        for chunk in amps.chunks_exact_mut(2 * cstep) {
            apply_phase_by_bit(&mut chunk[cstep..], target, ph0, ph1);
        }
    } else {
        // The target bit is constant inside each control-sized chunk.
        let tbit_of_chunk = 1 << (target - control - 1);
        for (ci, chunk) in amps.chunks_exact_mut(2 * cstep).enumerate() {
            let ph = if ci & tbit_of_chunk == 0 { ph0 } else { ph1 };
            for a in &mut chunk[cstep..] {
                *a *= ph;
            }
        }
    }
}

// --- circuit execution -------------------------------------------------------

/// Scratch buffers reused across evaluations to avoid per-sample allocation.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    state: Vec<Complex64>,
    costate: Vec<Complex64>,
    angles: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare_state(&mut self, num_qubits: usize) {
        let dim = 1 << num_qubits;
        self.state.clear();
        self.state.resize(dim, Complex64::new(0.0, 0.0));
        self.state[0] = Complex64::new(1.0, 0.0);
    }
}

fn check_lengths(
    circuit: &CircuitTemplate,
    features: &[f64],
    params: &[f64],
) -> Result<(), QsimError> {
    if features.len() != circuit.num_features() {
        return Err(QsimError::FeatureLength {
            got: features.len(),
            want: circuit.num_features(),
        });
    }
    if params.len() != circuit.num_params() {
        return Err(QsimError::ParamLength {
            got: params.len(),
            want: circuit.num_params(),
        });
    }
    Ok(())
}

fn resolve_angles(circuit: &CircuitTemplate, features: &[f64], params: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(circuit.gates().iter().map(|g| match g.source {
        AngleSource::Feature(i) => features[i],
        AngleSource::Param(i) => params[i],
        AngleSource::Fixed(v) => v,
    }));
}

fn run_forward(circuit: &CircuitTemplate, features: &[f64], params: &[f64], ws: &mut Workspace) {
    resolve_angles(circuit, features, params, &mut ws.angles);
    ws.prepare_state(circuit.num_qubits());
    for (gate, &angle) in circuit.gates().iter().zip(ws.angles.iter()) {
        apply_to(&mut ws.state, gate, angle);
    }
}

#[inline]
fn apply_to(amps: &mut [Complex64], gate: &GateSpec, angle: f64) {
    match gate.kind {
        GateKind::Rx => apply_rx(amps, gate.target, angle),
        GateKind::Ry => apply_ry(amps, gate.target, angle),
        GateKind::Rz => apply_rz(amps, gate.target, angle),
        GateKind::Crz => apply_crz(amps, gate.control.unwrap(), gate.target, angle),
    }
}

fn expectations_of(amps: &[Complex64], num_qubits: usize) -> ExpectationVector {
    let mut values = vec![0.0; num_qubits];
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        for (q, slot) in values.iter_mut().enumerate() {
            let sign = 1.0 - 2.0 * ((i >> q) & 1) as f64;
            *slot += sign * p;
        }
    }
    ExpectationVector { values }
}

/// Run the circuit on `|0⟩^⊗n` and return the per-qubit Z expectations.
///
/// Deterministic: identical inputs produce bit-identical outputs on one
/// platform.
pub fn evaluate(
    circuit: &CircuitTemplate,
    features: &[f64],
    params: &[f64],
) -> Result<ExpectationVector, QsimError> {
    let mut ws = Workspace::new();
    evaluate_with_workspace(circuit, features, params, &mut ws)
}

/// [`evaluate`] reusing caller-owned scratch buffers.
pub fn evaluate_with_workspace(
    circuit: &CircuitTemplate,
    features: &[f64],
    params: &[f64],
    ws: &mut Workspace,
) -> Result<ExpectationVector, QsimError> {
    check_lengths(circuit, features, params)?;
    run_forward(circuit, features, params, ws);
    Ok(expectations_of(&ws.state, circuit.num_qubits()))
}

/// Run the circuit and hand back the full statevector.
pub fn run_statevector(
    circuit: &CircuitTemplate,
    features: &[f64],
    params: &[f64],
) -> Result<StateVector, QsimError> {
    check_lengths(circuit, features, params)?;
    let mut ws = Workspace::new();
    run_forward(circuit, features, params, &mut ws);
    Ok(StateVector {
        num_qubits: circuit.num_qubits(),
        amps: ws.state,
    })
}

/// Gradient of `Σ_q cotangent_q · ⟨Z_q⟩` with respect to the parameters.
pub fn gradient(
    circuit: &CircuitTemplate,
    features: &[f64],
    params: &[f64],
    cotangent: &[f64],
) -> Result<Vec<f64>, QsimError> {
    let mut ws = Workspace::new();
    let cot = cotangent.to_vec();
    let (_, grad) = evaluate_and_gradient(circuit, features, params, &mut ws, move |_| cot)?;
    Ok(grad)
}

/// Forward evaluation followed by a reverse adjoint pass.
///
/// `cotangent_of` receives the expectations and returns the weights of the
/// objective `Σ_q w_q ⟨Z_q⟩`, which lets callers differentiate losses that
/// depend on the forward result (softmax heads) with a single forward pass.
pub fn evaluate_and_gradient<F>(
    circuit: &CircuitTemplate,
    features: &[f64],
    params: &[f64],
    ws: &mut Workspace,
    cotangent_of: F,
) -> Result<(ExpectationVector, Vec<f64>), QsimError>
where
    F: FnOnce(&ExpectationVector) -> Vec<f64>,
{
    check_lengths(circuit, features, params)?;
    run_forward(circuit, features, params, ws);
    let num_qubits = circuit.num_qubits();
    let expectations = expectations_of(&ws.state, num_qubits);
    let cotangent = cotangent_of(&expectations);
    if cotangent.len() != num_qubits {
        return Err(QsimError::CotangentLength {
            got: cotangent.len(),
            want: num_qubits,
        });
    }

    let mut grad = vec![0.0; circuit.num_params()];
    let gates = circuit.gates();
    let first_trainable = gates
        .iter()
        .position(|g| matches!(g.source, AngleSource::Param(_)));
    let Some(first_trainable) = first_trainable else {
        return Ok((expectations, grad));
    };

    // Costate λ = O|ψ⟩ for O = Σ_q w_q Z_q (diagonal, real factors).
    ws.costate.clear();
    ws.costate.extend(ws.state.iter().enumerate().map(|(i, a)| {
        let mut f = 0.0;
        for (q, w) in cotangent.iter().enumerate() {
            f += w * (1.0 - 2.0 * ((i >> q) & 1) as f64);
        }
        a * f
    }));

    // Reverse sweep. At the top of each iteration the buffers hold the state
    // and costate *after* gate k, which is exactly what the derivative
    // overlap Im⟨λ|A|ψ⟩ needs for R_a(θ) = exp(-iθA/2).
    for k in (first_trainable..gates.len()).rev() {
        let gate = &gates[k];
        if let AngleSource::Param(p) = gate.source {
            grad[p] += derivative_overlap(&ws.costate, &ws.state, gate);
        }
        if k == first_trainable {
            break;
        }
        let inv = -ws.angles[k];
        apply_to(&mut ws.state, gate, inv);
        apply_to(&mut ws.costate, gate, inv);
    }

    Ok((expectations, grad))
}

/// `Im ⟨λ| A |ψ⟩` for the generator `A` of the gate (`X`, `Y`, `Z`, or the
/// control-projected `Z`), which equals `d/dθ 2Re⟨λ|R(θ)|ψ_pre⟩` at the
/// current point.
fn derivative_overlap(costate: &[Complex64], state: &[Complex64], gate: &GateSpec) -> f64 {
    match gate.kind {
        GateKind::Rx => {
            let step = 1 << gate.target;
            let mut acc = 0.0;
            for (cc, sc) in costate
                .chunks_exact(2 * step)
                .zip(state.chunks_exact(2 * step))
            {
                let (cl, ch) = cc.split_at(step);
                let (sl, sh) = sc.split_at(step);
                for ((la, lb), (fa, fb)) in cl.iter().zip(ch).zip(sl.iter().zip(sh)) {
                    // Im(conj(λ_a)ψ_b + conj(λ_b)ψ_a)
                    acc += la.re * fb.im - la.im * fb.re + lb.re * fa.im - lb.im * fa.re;
                }
            }
            acc
        }
        GateKind::Ry => {
            let step = 1 << gate.target;
            let mut acc = 0.0;
            for (cc, sc) in costate
                .chunks_exact(2 * step)
                .zip(state.chunks_exact(2 * step))
            {
                let (cl, ch) = cc.split_at(step);
                let (sl, sh) = sc.split_at(step);
                for ((la, lb), (fa, fb)) in cl.iter().zip(ch).zip(sl.iter().zip(sh)) {
                    // Im(-i conj(λ_a)ψ_b + i conj(λ_b)ψ_a)
                    acc += -(la.re * fb.re + la.im * fb.im) + lb.re * fa.re + lb.im * fa.im;
                }
            }
            acc
        }
        GateKind::Rz => {
            let step = 1 << gate.target;
            let mut acc = 0.0;
            for (cc, sc) in costate
                .chunks_exact(2 * step)
                .zip(state.chunks_exact(2 * step))
            {
                let (cl, ch) = cc.split_at(step);
                let (sl, sh) = sc.split_at(step);
                for (l, f) in cl.iter().zip(sl) {
                    acc += l.re * f.im - l.im * f.re;
                }
                for (l, f) in ch.iter().zip(sh) {
                    acc -= l.re * f.im - l.im * f.re;
                }
            }
            acc
        }
        GateKind::Crz => {
            let control = gate.control.unwrap();
            let cmask = 1usize << control;
            let tmask = 1usize << gate.target;
            let mut acc = 0.0;
            for (i, (l, f)) in costate.iter().zip(state).enumerate() {
                if i & cmask != 0 {
                    let sign = if i & tmask == 0 { 1.0 } else { -1.0 };
                    acc += sign * (l.re * f.im - l.im * f.re);
                }
            }
            acc
        }
    }
}
