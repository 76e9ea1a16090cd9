//! Builders for the 10-qubit classifier architectures.
//!
//! An image is encoded row by row: encoding layer `r` carries the ten pixels
//! of row `r`, one rotation per qubit. Incremental data-uploading (IDU)
//! splits the ten encoding layers into `k` contiguous groups and places one
//! variational layer after each group, appending the remaining variational
//! layers at the end; data re-uploading (DRU) repeats the full encoding block
//! before every variational layer. Both carry exactly the same number of
//! trainable parameters, which is the premise of every comparison made with
//! them.

use crate::qsim::{AngleSource, GateKind, GateSpec, QsimError};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Qubits, image rows, and pixels per row all coincide for this model family.
pub const NUM_QUBITS: usize = 10;
pub const NUM_ROWS: usize = 10;
pub const ROW_WIDTH: usize = 10;
pub const NUM_FEATURES: usize = NUM_ROWS * ROW_WIDTH;
pub const NUM_LAYERS: usize = 10;

/// Valid encoding-block split counts.
pub const VALID_SPLITS: [usize; 5] = [1, 2, 4, 8, 10];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("split count {0} not one of {VALID_SPLITS:?}")]
    InvalidSplits(usize),
    #[error("gate {index}: {source}")]
    InvalidGate { index: usize, source: QsimError },
    #[error("gate {index} references feature {feature} but circuit has {num_features}")]
    FeatureOutOfRange {
        index: usize,
        feature: usize,
        num_features: usize,
    },
    #[error("gate {index} references parameter {param} but circuit has {num_params}")]
    ParamOutOfRange {
        index: usize,
        param: usize,
        num_params: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Architecture family of a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Idu,
    Dru,
}

/// How encoding gates carry pixel values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    /// One `R_x` per pixel.
    Rx,
    /// Alternating rows of `R_x` (even rows) and `R_y` (odd rows).
    RxRy,
    /// Like [`EncodingKind::RxRy`] with a fixed `CR_z` chain between each
    /// `R_x` row and the following `R_y` row.
    RxCrzRy,
}

/// Trainable parameters per variational layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerDepth {
    Params20,
    Params60,
}

impl LayerDepth {
    pub fn params_per_layer(self) -> usize {
        match self {
            LayerDepth::Params20 => 20,
            LayerDepth::Params60 => 60,
        }
    }

    /// Rotation pairs (RY, RZ) applied per qubit.
    fn pairs_per_qubit(self) -> usize {
        self.params_per_layer() / (2 * NUM_QUBITS)
    }
}

/// Construction metadata carried by every template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircuitMeta {
    pub architecture: Architecture,
    /// Encoding groups for IDU; encoding-block repetitions for DRU.
    pub splits: usize,
    pub encoding: EncodingKind,
    pub depth: LayerDepth,
}

impl CircuitMeta {
    /// Metadata for hand-built test circuits.
    pub fn toy() -> Self {
        CircuitMeta {
            architecture: Architecture::Idu,
            splits: 1,
            encoding: EncodingKind::Rx,
            depth: LayerDepth::Params20,
        }
    }
}

/// Immutable gate program with angle bindings; freely shareable.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitTemplate {
    num_qubits: usize,
    gates: Vec<GateSpec>,
    num_features: usize,
    num_params: usize,
    meta: CircuitMeta,
}

impl CircuitTemplate {
    pub fn new(
        num_qubits: usize,
        gates: Vec<GateSpec>,
        num_features: usize,
        num_params: usize,
        meta: CircuitMeta,
    ) -> Result<Self, CircuitError> {
        for (index, gate) in gates.iter().enumerate() {
            gate.validate(num_qubits)
                .map_err(|source| CircuitError::InvalidGate { index, source })?;
            match gate.source {
                AngleSource::Feature(feature) if feature >= num_features => {
                    return Err(CircuitError::FeatureOutOfRange {
                        index,
                        feature,
                        num_features,
                    });
                }
                AngleSource::Param(param) if param >= num_params => {
                    return Err(CircuitError::ParamOutOfRange {
                        index,
                        param,
                        num_params,
                    });
                }
                _ => {}
            }
        }
        Ok(Self {
            num_qubits,
            gates,
            num_features,
            num_params,
            meta,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn meta(&self) -> &CircuitMeta {
        &self.meta
    }

    /// Line-oriented text form, one gate per line:
    /// `KIND target [control] SOURCE index|value`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for gate in &self.gates {
            let kind = match gate.kind {
                GateKind::Rx => "RX",
                GateKind::Ry => "RY",
                GateKind::Rz => "RZ",
                GateKind::Crz => "CRZ",
            };
            write!(out, "{kind} {}", gate.target).unwrap();
            if let Some(control) = gate.control {
                write!(out, " {control}").unwrap();
            }
            match gate.source {
                AngleSource::Feature(i) => writeln!(out, " FEATURE {i}").unwrap(),
                AngleSource::Param(i) => writeln!(out, " PARAM {i}").unwrap(),
                AngleSource::Fixed(v) => writeln!(out, " FIXED {v:.17}").unwrap(),
            }
        }
        out
    }

    /// Parse the [`to_text`](Self::to_text) form. Register and vector sizes
    /// are recovered from the largest referenced indices; `meta` is the
    /// caller's claim about provenance.
    pub fn from_text(text: &str, meta: CircuitMeta) -> Result<Self, CircuitError> {
        let mut gates = Vec::new();
        let mut num_qubits = 0usize;
        let mut num_features = 0usize;
        let mut num_params = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_err = |message: String| CircuitError::Parse { line, message };
            let kind = match fields[0] {
                "RX" => GateKind::Rx,
                "RY" => GateKind::Ry,
                "RZ" => GateKind::Rz,
                "CRZ" => GateKind::Crz,
                other => return Err(parse_err(format!("unknown gate kind {other:?}"))),
            };
            let want = if kind == GateKind::Crz { 5 } else { 4 };
            if fields.len() != want {
                return Err(parse_err(format!(
                    "expected {want} fields for {}, found {}",
                    fields[0],
                    fields.len()
                )));
            }
            let target: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad target {:?}", fields[1])))?;
            let (control, src_at) = if kind == GateKind::Crz {
                let c: usize = fields[2]
                    .parse()
                    .map_err(|_| parse_err(format!("bad control {:?}", fields[2])))?;
                (Some(c), 3)
            } else {
                (None, 2)
            };
            let source = match fields[src_at] {
                "FEATURE" => AngleSource::Feature(
                    fields[src_at + 1]
                        .parse()
                        .map_err(|_| parse_err("bad feature index".into()))?,
                ),
                "PARAM" => AngleSource::Param(
                    fields[src_at + 1]
                        .parse()
                        .map_err(|_| parse_err("bad parameter index".into()))?,
                ),
                "FIXED" => AngleSource::Fixed(
                    fields[src_at + 1]
                        .parse()
                        .map_err(|_| parse_err("bad fixed angle".into()))?,
                ),
                other => return Err(parse_err(format!("unknown angle source {other:?}"))),
            };
            num_qubits = num_qubits.max(target + 1).max(control.map_or(0, |c| c + 1));
            match source {
                AngleSource::Feature(i) => num_features = num_features.max(i + 1),
                AngleSource::Param(i) => num_params = num_params.max(i + 1),
                AngleSource::Fixed(_) => {}
            }
            gates.push(GateSpec {
                kind,
                target,
                control,
                source,
            });
        }
        Self::new(num_qubits, gates, num_features, num_params, meta)
    }
}

/// Encoding gates for one image row. Qubit `q` carries pixel `(row, q)`,
/// i.e. feature `10·row + q`.
pub fn encoding_layer(row: usize, kind: EncodingKind) -> Vec<GateSpec> {
    assert!(row < NUM_ROWS, "row {row} out of range");
    let feature = |q: usize| AngleSource::Feature(ROW_WIDTH * row + q);
    match kind {
        EncodingKind::Rx => (0..NUM_QUBITS).map(|q| GateSpec::rx(q, feature(q))).collect(),
        EncodingKind::RxRy => {
            if row % 2 == 0 {
                (0..NUM_QUBITS).map(|q| GateSpec::rx(q, feature(q))).collect()
            } else {
                (0..NUM_QUBITS).map(|q| GateSpec::ry(q, feature(q))).collect()
            }
        }
        EncodingKind::RxCrzRy => {
            if row % 2 == 0 {
                let mut gates: Vec<GateSpec> =
                    (0..NUM_QUBITS).map(|q| GateSpec::rx(q, feature(q))).collect();
                gates.extend(crz_chain());
                gates
            } else {
                (0..NUM_QUBITS).map(|q| GateSpec::ry(q, feature(q))).collect()
            }
        }
    }
}

/// Nearest-neighbour open-chain entanglers at fixed angle π.
fn crz_chain() -> impl Iterator<Item = GateSpec> {
    (0..NUM_QUBITS - 1).map(|q| GateSpec::crz(q, q + 1, AngleSource::Fixed(PI)))
}

/// One variational layer: per-qubit RY/RZ rotation pairs followed by the
/// CRZ chain. Parameter indices occupy the contiguous block starting at
/// `params_per_layer · layer_index`.
pub fn variational_layer(layer_index: usize, depth: LayerDepth) -> Vec<GateSpec> {
    assert!(layer_index < NUM_LAYERS, "layer {layer_index} out of range");
    let base = depth.params_per_layer() * layer_index;
    let pairs = depth.pairs_per_qubit();
    let mut gates = Vec::with_capacity(depth.params_per_layer() + NUM_QUBITS - 1);
    for q in 0..NUM_QUBITS {
        for pair in 0..pairs {
            let p = base + 2 * pairs * q + 2 * pair;
            gates.push(GateSpec::ry(q, AngleSource::Param(p)));
            gates.push(GateSpec::rz(q, AngleSource::Param(p + 1)));
        }
    }
    gates.extend(crz_chain());
    gates
}

/// Contiguous encoding-group sizes for a split count, largest groups first.
fn group_sizes(splits: usize) -> Vec<usize> {
    let base = NUM_ROWS / splits;
    let extra = NUM_ROWS % splits;
    (0..splits)
        .map(|g| if g < extra { base + 1 } else { base })
        .collect()
}

/// Incremental data-uploading template: `k` contiguous encoding groups, one
/// variational layer after each, remaining variational layers appended.
pub fn build_idu(
    splits: usize,
    encoding: EncodingKind,
    depth: LayerDepth,
) -> Result<CircuitTemplate, CircuitError> {
    if !VALID_SPLITS.contains(&splits) {
        return Err(CircuitError::InvalidSplits(splits));
    }
    let mut gates = Vec::new();
    let mut row = 0;
    let mut layer = 0;
    for size in group_sizes(splits) {
        for _ in 0..size {
            gates.extend(encoding_layer(row, encoding));
            row += 1;
        }
        gates.extend(variational_layer(layer, depth));
        layer += 1;
    }
    while layer < NUM_LAYERS {
        gates.extend(variational_layer(layer, depth));
        layer += 1;
    }
    CircuitTemplate::new(
        NUM_QUBITS,
        gates,
        NUM_FEATURES,
        depth.params_per_layer() * NUM_LAYERS,
        CircuitMeta {
            architecture: Architecture::Idu,
            splits,
            encoding,
            depth,
        },
    )
}

/// Build the template described by `meta` (splits are ignored for DRU).
pub fn build(meta: CircuitMeta) -> Result<CircuitTemplate, CircuitError> {
    match meta.architecture {
        Architecture::Idu => build_idu(meta.splits, meta.encoding, meta.depth),
        Architecture::Dru => Ok(build_dru(meta.encoding, meta.depth)),
    }
}

/// Data re-uploading template: the full encoding block before every
/// variational layer, repeated until the parameter counts match IDU.
pub fn build_dru(encoding: EncodingKind, depth: LayerDepth) -> CircuitTemplate {
    let mut gates = Vec::new();
    for layer in 0..NUM_LAYERS {
        for row in 0..NUM_ROWS {
            gates.extend(encoding_layer(row, encoding));
        }
        gates.extend(variational_layer(layer, depth));
    }
    CircuitTemplate::new(
        NUM_QUBITS,
        gates,
        NUM_FEATURES,
        depth.params_per_layer() * NUM_LAYERS,
        CircuitMeta {
            architecture: Architecture::Dru,
            splits: NUM_LAYERS,
            encoding,
            depth,
        },
    )
    .expect("DRU construction is structurally valid")
}
