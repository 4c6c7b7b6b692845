//! Parameter-shift gradients of per-qubit `<Z>` and the chain rule that folds
//! them into a scalar loss gradient.
//!
//! Each rotation `R(φ) = exp(-i φ/2 G)` with `G² = I` satisfies
//! `∂f/∂φ = (f(φ + π/2) − f(φ − π/2)) / 2` exactly. A template parameter may drive
//! several gates (`φ_k = c_k θ`), in which case every gate is shifted on its own and
//! the contributions are summed with weight `c_k`.

use rayon::prelude::*;

use crate::ansatz::CircuitTemplate;
use crate::error::{usage, Error, Result};
use crate::quantum::{GateOp, Simulator};
use crate::scalar::Real;

/// Anything that can execute a gate list and report one expectation per qubit.
pub trait CircuitEvaluator<T>: Sync {
    fn n_qubits(&self) -> usize;

    /// `stream` selects an independent random stream for noisy backends.
    fn evaluate(&self, gates: &[GateOp<T>], stream: u64) -> Result<Vec<T>>;
}

impl<T: Real> CircuitEvaluator<T> for Simulator<T> {
    fn n_qubits(&self) -> usize {
        Simulator::n_qubits(self)
    }

    fn evaluate(&self, gates: &[GateOp<T>], stream: u64) -> Result<Vec<T>> {
        self.expectations(gates, stream)
    }
}

/// Both shifted evaluations of one parameterized gate.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftEvaluation<T> {
    pub parameter_index: usize,
    /// Position of the shifted gate in the full circuit (prelude included).
    pub gate_index: usize,
    /// `∂φ/∂θ` for this gate.
    pub scale: T,
    pub f_plus: Vec<T>,
    pub f_minus: Vec<T>,
}

impl<T: Real> ShiftEvaluation<T> {
    /// `(f₊ − f₋)/2` per qubit, i.e. the derivative w.r.t. the gate angle.
    pub fn gate_gradient(&self) -> Vec<T> {
        let half = T::lit(0.5);
        self.f_plus
            .iter()
            .zip(&self.f_minus)
            .map(|(&p, &m)| (p - m) * half)
            .collect()
    }
}

/// `∂<Z_row>/∂θ_col`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumJacobian<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> QuantumJacobian<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QuantumJacobian { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(usage(format!(
                "jacobian {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(QuantumJacobian { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    fn add(&mut self, row: usize, col: usize, v: T) {
        self.data[row * self.cols + col] += v;
    }
}

#[derive(Clone, Debug)]
pub struct PsrResult<T> {
    /// Unshifted per-qubit expectations.
    pub forward: Vec<T>,
    pub jacobian: QuantumJacobian<T>,
    pub shifts: Vec<ShiftEvaluation<T>>,
    /// Number of circuit executions performed.
    pub executions: usize,
}

/// Parameter-shift Jacobian of the template bound to `params`, run after `prelude`.
///
/// Executes the circuit once unshifted and twice per parameterized gate. Shifted
/// runs are independent and evaluated in parallel; results are merged by gate order.
/// Evaluation `k` uses random stream `stream_base + k`.
pub fn psr_gradient<T: Real, E: CircuitEvaluator<T>>(
    evaluator: &E,
    template: &CircuitTemplate,
    params: &[T],
    prelude: &[GateOp<T>],
    stream_base: u64,
) -> Result<PsrResult<T>> {
    if evaluator.n_qubits() != template.n_qubits() {
        return Err(usage(format!(
            "evaluator has {} qubits, template {}",
            evaluator.n_qubits(),
            template.n_qubits()
        )));
    }
    let bound = template.bind(params)?;
    let offset = prelude.len();
    let mut gates: Vec<GateOp<T>> = prelude.to_vec();
    gates.extend_from_slice(&bound.gates);

    let forward = evaluator.evaluate(&gates, stream_base)?;

    let shifted: Vec<(usize, usize, T)> = bound
        .sources
        .iter()
        .enumerate()
        .filter_map(|(i, src)| src.map(|(slot, scale)| (offset + i, slot, scale)))
        .collect();

    let shift = T::FRAC_PI_2();
    let shifts: Vec<ShiftEvaluation<T>> = shifted
        .par_iter()
        .enumerate()
        .map(|(k, &(gate_index, parameter_index, scale))| {
            let gate = gates[gate_index];
            let angle = gate.angle().ok_or_else(|| {
                Error::Internal(format!("shift requested on non-rotation gate {gate:?}"))
            })?;
            let mut local = gates.clone();
            local[gate_index] = gate.with_angle(angle + shift).expect("rotation");
            let k = k as u64;
            let f_plus = evaluator.evaluate(&local, stream_base + 1 + 2 * k)?;
            local[gate_index] = gate.with_angle(angle - shift).expect("rotation");
            let f_minus = evaluator.evaluate(&local, stream_base + 2 + 2 * k)?;
            Ok(ShiftEvaluation { parameter_index, gate_index, scale, f_plus, f_minus })
        })
        .collect::<Result<_>>()?;

    let mut jacobian = QuantumJacobian::zeros(template.n_qubits(), params.len());
    for s in &shifts {
        for (row, g) in s.gate_gradient().into_iter().enumerate() {
            jacobian.add(row, s.parameter_index, s.scale * g);
        }
    }
    Ok(PsrResult { forward, jacobian, executions: 1 + 2 * shifts.len(), shifts })
}

/// `downstreamᵀ · J`: the loss gradient with respect to the circuit parameters.
pub fn chain_loss_gradient<T: Real>(jacobian: &QuantumJacobian<T>, downstream: &[T]) -> Result<Vec<T>> {
    if downstream.len() != jacobian.rows() {
        return Err(usage(format!(
            "downstream gradient has {} entries, jacobian has {} rows",
            downstream.len(),
            jacobian.rows()
        )));
    }
    Ok((0..jacobian.cols())
        .map(|c| {
            downstream
                .iter()
                .enumerate()
                .map(|(r, &d)| d * jacobian.get(r, c))
                .sum()
        })
        .collect())
}

pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of `softmax(logits)` against `target`, with its logit gradient.
pub fn softmax_xent<T: Real>(logits: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    if logits.len() != target.len() {
        return Err(usage(format!(
            "logits have {} entries, target {}",
            logits.len(),
            target.len()
        )));
    }
    let probs = softmax(logits);
    let loss = -target
        .iter()
        .zip(&probs)
        .filter(|(&t, _)| t != T::zero())
        .map(|(&t, &p)| t * p.ln())
        .sum::<T>();
    let grad = probs.iter().zip(target).map(|(&p, &t)| p - t).collect();
    Ok((loss, grad))
}
