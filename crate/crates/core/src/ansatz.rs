//! Parameterized circuit templates: angle encoding, the QAOA latent circuit and
//! the hardware-efficient comparison circuits.
//!
//! Rotation gates use the half-angle convention `R(θ) = exp(-i θ/2 G)`. Operator
//! exponentials such as `exp(-i γ Z_i Z_j)` therefore bind as `ZZ(2γ)`; a template
//! records that factor as the `scale` of each parameterized gate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Error, Result};
use crate::quantum::{GateKind, GateOp, MAX_QUBITS};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitFamily {
    /// QAOA: `|+>^n`, then `p` rounds of cost and mixing layers.
    Ours,
    /// Per layer: RY on each qubit, CNOT chain.
    A,
    /// Per layer: RY then RZ on each qubit, CNOT chain.
    B,
    /// Per layer: RY on each qubit, CNOT ring, RZ on each qubit.
    C,
}

impl CircuitFamily {
    pub const ALL: [CircuitFamily; 4] =
        [CircuitFamily::A, CircuitFamily::B, CircuitFamily::C, CircuitFamily::Ours];

    /// Number of parameters for `n` qubits and `p` layers.
    pub fn slot_count(self, n_qubits: usize, layers: usize) -> usize {
        match self {
            CircuitFamily::Ours => 2 * layers,
            CircuitFamily::A => layers * n_qubits,
            CircuitFamily::B | CircuitFamily::C => 2 * layers * n_qubits,
        }
    }
}

impl fmt::Display for CircuitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CircuitFamily::Ours => "ours",
            CircuitFamily::A => "a",
            CircuitFamily::B => "b",
            CircuitFamily::C => "c",
        })
    }
}

impl FromStr for CircuitFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ours" | "qaoa" => Ok(CircuitFamily::Ours),
            "a" => Ok(CircuitFamily::A),
            "b" => Ok(CircuitFamily::B),
            "c" => Ok(CircuitFamily::C),
            other => Err(config(format!("unknown circuit family {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotRole {
    Gamma,
    Beta,
    Rotation,
}

/// One gate driven by a slot: the bound angle is `scale * params[slot]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotGate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSlot {
    pub index: usize,
    pub role: SlotRole,
    /// Every gate this slot feeds, in circuit order.
    pub gates: Vec<SlotGate>,
}

#[derive(Clone, Debug, PartialEq)]
enum TemplateOp {
    Fixed(GateKind, Vec<usize>),
    Param { kind: GateKind, targets: Vec<usize>, slot: usize, scale: f64 },
}

/// Symbolic gate sequence with parameter slots.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitTemplate {
    n_qubits: usize,
    layers: usize,
    family: CircuitFamily,
    slots: Vec<ParameterSlot>,
    ops: Vec<TemplateOp>,
}

/// Concrete gates plus, for every gate, the slot and scale that produced its angle.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCircuit<T> {
    pub gates: Vec<GateOp<T>>,
    pub sources: Vec<Option<(usize, T)>>,
}

/// Edges of the cost ring. Two qubits share a single edge.
pub fn ring_edges(n_qubits: usize) -> Vec<(usize, usize)> {
    match n_qubits {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        n => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    }
}

/// Longitudinal field on qubit `q` in the cost Hamiltonian.
///
/// Without a local term the QAOA state is invariant under global bit flip and
/// every per-qubit `<Z>` vanishes; distinct weights also break the ring's
/// rotation symmetry so each qubit reports a different value.
pub fn field_weight(qubit: usize, n_qubits: usize) -> f64 {
    (qubit + 1) as f64 / n_qubits as f64
}

impl CircuitTemplate {
    pub fn new(family: CircuitFamily, n_qubits: usize, layers: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(config(format!("qubit count {n_qubits} outside 1..={MAX_QUBITS}")));
        }
        if layers < 1 {
            return Err(config(format!("p = {layers}; at least one layer is required")));
        }
        let mut b = Builder::default();
        let n = n_qubits;
        match family {
            CircuitFamily::Ours => {
                for q in 0..n {
                    b.fixed(GateKind::H, vec![q]);
                }
                for k in 0..layers {
                    let gamma = k;
                    let beta = layers + k;
                    for (i, j) in ring_edges(n) {
                        b.param(GateKind::Zz, vec![i, j], gamma, 2.0);
                    }
                    for q in 0..n {
                        b.param(GateKind::Rz, vec![q], gamma, 2.0 * field_weight(q, n));
                    }
                    for q in 0..n {
                        b.param(GateKind::Rx, vec![q], beta, 2.0);
                    }
                }
            }
            CircuitFamily::A => {
                for k in 0..layers {
                    for q in 0..n {
                        b.param(GateKind::Ry, vec![q], k * n + q, 1.0);
                    }
                    b.cnot_chain(n, false);
                }
            }
            CircuitFamily::B => {
                for k in 0..layers {
                    let base = 2 * k * n;
                    for q in 0..n {
                        b.param(GateKind::Ry, vec![q], base + q, 1.0);
                    }
                    for q in 0..n {
                        b.param(GateKind::Rz, vec![q], base + n + q, 1.0);
                    }
                    b.cnot_chain(n, false);
                }
            }
            CircuitFamily::C => {
                for k in 0..layers {
                    let base = 2 * k * n;
                    for q in 0..n {
                        b.param(GateKind::Ry, vec![q], base + q, 1.0);
                    }
                    b.cnot_chain(n, true);
                    for q in 0..n {
                        b.param(GateKind::Rz, vec![q], base + n + q, 1.0);
                    }
                }
            }
        }
        let count = family.slot_count(n, layers);
        let mut slots: Vec<ParameterSlot> = (0..count)
            .map(|index| ParameterSlot {
                index,
                role: match family {
                    CircuitFamily::Ours if index < layers => SlotRole::Gamma,
                    CircuitFamily::Ours => SlotRole::Beta,
                    _ => SlotRole::Rotation,
                },
                gates: Vec::new(),
            })
            .collect();
        for op in &b.ops {
            if let TemplateOp::Param { kind, targets, slot, scale } = op {
                slots[*slot].gates.push(SlotGate {
                    kind: *kind,
                    targets: targets.clone(),
                    scale: *scale,
                });
            }
        }
        // n = 1 has no ring edges; gamma still drives the field term
        debug_assert!(slots.iter().all(|s| !s.gates.is_empty()));
        Ok(CircuitTemplate { n_qubits, layers, family, slots, ops: b.ops })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn family(&self) -> CircuitFamily {
        self.family
    }

    pub fn slots(&self) -> &[ParameterSlot] {
        &self.slots
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn gate_count(&self) -> usize {
        self.ops.len()
    }

    pub fn bind<T: Real>(&self, params: &[T]) -> Result<BoundCircuit<T>> {
        if params.len() != self.slots.len() {
            return Err(usage(format!(
                "family {} with n={}, p={} takes {} parameters, got {}",
                self.family,
                self.n_qubits,
                self.layers,
                self.slots.len(),
                params.len()
            )));
        }
        let mut gates = Vec::with_capacity(self.ops.len());
        let mut sources = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            match op {
                TemplateOp::Fixed(kind, targets) => {
                    gates.push(GateOp::new(*kind, targets, T::zero())?);
                    sources.push(None);
                }
                TemplateOp::Param { kind, targets, slot, scale } => {
                    let scale = T::lit(*scale);
                    gates.push(GateOp::new(*kind, targets, scale * params[*slot])?);
                    sources.push(Some((*slot, scale)));
                }
            }
        }
        Ok(BoundCircuit { gates, sources })
    }
}

#[derive(Default)]
struct Builder {
    ops: Vec<TemplateOp>,
}

impl Builder {
    fn fixed(&mut self, kind: GateKind, targets: Vec<usize>) {
        self.ops.push(TemplateOp::Fixed(kind, targets));
    }

    fn param(&mut self, kind: GateKind, targets: Vec<usize>, slot: usize, scale: f64) {
        self.ops.push(TemplateOp::Param { kind, targets, slot, scale });
    }

    fn cnot_chain(&mut self, n: usize, close_ring: bool) {
        for q in 0..n.saturating_sub(1) {
            self.fixed(GateKind::Cnot, vec![q, q + 1]);
        }
        if close_ring && n > 1 {
            self.fixed(GateKind::Cnot, vec![n - 1, 0]);
        }
    }
}

/// QAOA gate list for explicit `gammas` and `betas`.
pub fn build_qaoa<T: Real>(n_qubits: usize, layers: usize, gammas: &[T], betas: &[T]) -> Result<Vec<GateOp<T>>> {
    let template = CircuitTemplate::new(CircuitFamily::Ours, n_qubits, layers)?;
    if gammas.len() != layers || betas.len() != layers {
        return Err(usage(format!(
            "p = {layers} needs {layers} gammas and betas, got {} and {}",
            gammas.len(),
            betas.len()
        )));
    }
    let params: Vec<T> = gammas.iter().chain(betas).copied().collect();
    Ok(template.bind(&params)?.gates)
}

pub fn build_family<T: Real>(
    family: CircuitFamily,
    n_qubits: usize,
    layers: usize,
    params: &[T],
) -> Result<Vec<GateOp<T>>> {
    Ok(CircuitTemplate::new(family, n_qubits, layers)?.bind(params)?.gates)
}

/// One rotation per qubit, `values[i]` on qubit `i`.
pub fn angle_encode<T: Real>(values: &[T], n_qubits: usize, rotation: GateKind) -> Result<Vec<GateOp<T>>> {
    if values.len() != n_qubits {
        return Err(usage(format!(
            "angle encoding needs {n_qubits} values, got {}",
            values.len()
        )));
    }
    if !matches!(rotation, GateKind::Rx | GateKind::Ry | GateKind::Rz) {
        return Err(usage(format!("{rotation:?} is not a single-qubit rotation")));
    }
    values
        .iter()
        .enumerate()
        .map(|(q, &v)| GateOp::new(rotation, &[q], v))
        .collect()
}

/// Affine map of `[lo, hi]` onto `[0, 2π]`, clamped.
pub fn normalize_to_angle<T: Real>(raw: &[T], lo: T, hi: T) -> Result<Vec<T>> {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(config(format!("normalization range [{lo}, {hi}] is empty")));
    }
    let two_pi = T::TAU();
    Ok(raw
        .iter()
        .map(|&x| (two_pi * (x - lo) / (hi - lo)).max(T::zero()).min(two_pi))
        .collect())
}
