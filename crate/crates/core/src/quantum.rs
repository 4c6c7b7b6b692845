//! Dense statevector simulator.
//!
//! Qubit `q` is bit `q` of the amplitude index (little-endian), so on two
//! qubits the basis state `|q1 q0>` = `|10>` lives at index 2.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Result};
use crate::scalar::Real;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    Cnot,
    Rx,
    Ry,
    Rz,
    Zz,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Zz => 2,
            _ => 1,
        }
    }

    /// Whether the gate is `exp(-i θ/2 G)` for a generator `G` with eigenvalues ±1.
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Zz)
    }
}

/// A concrete gate with its qubit operands and, for rotations, an angle in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateOp<T> {
    H(usize),
    Cnot { control: usize, target: usize },
    Rx(usize, T),
    Ry(usize, T),
    Rz(usize, T),
    /// `exp(-i θ/2 Z⊗Z)`.
    Zz(usize, usize, T),
}

impl<T: Real> GateOp<T> {
    /// Builds a gate from its kind, operands and angle. `angle` is ignored for H and CNOT.
    pub fn new(kind: GateKind, targets: &[usize], angle: T) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(usage(format!(
                "{kind:?} takes {} qubit(s), got {}",
                kind.arity(),
                targets.len()
            )));
        }
        Ok(match kind {
            GateKind::H => GateOp::H(targets[0]),
            GateKind::Cnot => GateOp::Cnot { control: targets[0], target: targets[1] },
            GateKind::Rx => GateOp::Rx(targets[0], angle),
            GateKind::Ry => GateOp::Ry(targets[0], angle),
            GateKind::Rz => GateOp::Rz(targets[0], angle),
            GateKind::Zz => GateOp::Zz(targets[0], targets[1], angle),
        })
    }

    pub fn kind(&self) -> GateKind {
        match self {
            GateOp::H(_) => GateKind::H,
            GateOp::Cnot { .. } => GateKind::Cnot,
            GateOp::Rx(..) => GateKind::Rx,
            GateOp::Ry(..) => GateKind::Ry,
            GateOp::Rz(..) => GateKind::Rz,
            GateOp::Zz(..) => GateKind::Zz,
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match *self {
            GateOp::H(q) | GateOp::Rx(q, _) | GateOp::Ry(q, _) | GateOp::Rz(q, _) => vec![q],
            GateOp::Cnot { control, target } => vec![control, target],
            GateOp::Zz(a, b, _) => vec![a, b],
        }
    }

    pub fn angle(&self) -> Option<T> {
        match *self {
            GateOp::Rx(_, a) | GateOp::Ry(_, a) | GateOp::Rz(_, a) | GateOp::Zz(_, _, a) => Some(a),
            _ => None,
        }
    }

    /// Returns a copy with the rotation angle replaced; `None` for H and CNOT.
    pub fn with_angle(&self, angle: T) -> Option<Self> {
        match *self {
            GateOp::Rx(q, _) => Some(GateOp::Rx(q, angle)),
            GateOp::Ry(q, _) => Some(GateOp::Ry(q, angle)),
            GateOp::Rz(q, _) => Some(GateOp::Rz(q, angle)),
            GateOp::Zz(a, b, _) => Some(GateOp::Zz(a, b, angle)),
            _ => None,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let targets = self.targets();
        if let Some(&bad) = targets.iter().find(|&&q| q >= n_qubits) {
            return Err(usage(format!(
                "{:?} targets qubit {bad} on a {n_qubits}-qubit register",
                self.kind()
            )));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(usage(format!("{:?} operands must be distinct", self.kind())));
        }
        if let Some(a) = self.angle() {
            if !a.is_finite() {
                return Err(usage(format!("{:?} angle is not finite", self.kind())));
            }
        }
        Ok(())
    }
}

/// Complex amplitudes of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(config(format!(
                "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << n_qubits];
        amplitudes[0] = Complex::new(T::one(), T::zero());
        Ok(StateVector { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes. The length must be a power of two; no normalization is applied.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(usage(format!("amplitude count {len} is not 2^n for 1 <= n <= {MAX_QUBITS}")));
        }
        Ok(StateVector { n_qubits: len.trailing_zeros() as usize, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &GateOp<T>) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub fn apply_all<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a GateOp<T>>,
    {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    fn apply_unchecked(&mut self, gate: &GateOp<T>) {
        let half = T::lit(0.5);
        let zero = T::zero();
        match *gate {
            GateOp::H(q) => {
                let s = T::FRAC_1_SQRT_2();
                let c = |v: T| Complex::new(v, zero);
                self.apply_single(q, [[c(s), c(s)], [c(s), -c(s)]]);
            }
            GateOp::Rx(q, theta) => {
                let (sin, cos) = (theta * half).sin_cos();
                let c = Complex::new(cos, zero);
                let s = Complex::new(zero, -sin);
                self.apply_single(q, [[c, s], [s, c]]);
            }
            GateOp::Ry(q, theta) => {
                let (sin, cos) = (theta * half).sin_cos();
                let c = Complex::new(cos, zero);
                let s = Complex::new(sin, zero);
                self.apply_single(q, [[c, -s], [s, c]]);
            }
            GateOp::Rz(q, theta) => {
                let mask = 1usize << q;
                let (sin, cos) = (theta * half).sin_cos();
                let lo = Complex::new(cos, -sin);
                let hi = Complex::new(cos, sin);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    *a *= if i & mask == 0 { lo } else { hi };
                }
            }
            GateOp::Cnot { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
            GateOp::Zz(a, b, theta) => {
                let (ma, mb) = (1usize << a, 1usize << b);
                let (sin, cos) = (theta * half).sin_cos();
                let same = Complex::new(cos, -sin);
                let diff = Complex::new(cos, sin);
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    let parity = ((i & ma) != 0) ^ ((i & mb) != 0);
                    *amp *= if parity { diff } else { same };
                }
            }
        }
    }

    fn apply_single(&mut self, q: usize, m: [[Complex<T>; 2]; 2]) {
        let mask = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Exact `<Z_q>`.
    pub fn expect_z(&self, qubit: usize) -> Result<T> {
        if qubit >= self.n_qubits {
            return Err(usage(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        let mask = 1usize << qubit;
        let mut acc = T::zero();
        for (i, a) in self.amplitudes.iter().enumerate() {
            if i & mask == 0 {
                acc += a.norm_sqr();
            } else {
                acc -= a.norm_sqr();
            }
        }
        Ok(acc.max(-T::one()).min(T::one()))
    }

    /// `<Z_q>` for every qubit, in qubit order.
    pub fn expect_z_all(&self) -> Vec<T> {
        (0..self.n_qubits)
            .map(|q| self.expect_z(q).expect("qubit in range"))
            .collect()
    }

    /// Shot-sampled estimate of every `<Z_q>` from `shots` computational-basis draws.
    pub fn sample_expect_z<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<Vec<T>> {
        if shots == 0 {
            return Err(usage("shot count must be positive"));
        }
        let probs: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr().as_f64()).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let mut sums = vec![0i64; self.n_qubits];
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
            for (q, s) in sums.iter_mut().enumerate() {
                *s += if idx >> q & 1 == 0 { 1 } else { -1 };
            }
        }
        Ok(sums
            .into_iter()
            .map(|s| T::lit(s as f64 / shots as f64))
            .collect())
    }
}

/// Minimal gate-level noise: random Pauli errors after gates plus symmetric readout flips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel<T> {
    pub depolarizing_prob: T,
    pub readout_flip_prob: T,
}

impl<T: Real> Default for NoiseChannel<T> {
    fn default() -> Self {
        NoiseChannel { depolarizing_prob: T::zero(), readout_flip_prob: T::zero() }
    }
}

impl<T: Real> NoiseChannel<T> {
    pub fn new(depolarizing_prob: T, readout_flip_prob: T) -> Result<Self> {
        let ch = NoiseChannel { depolarizing_prob, readout_flip_prob };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |p: T| p >= T::zero() && p <= T::one();
        if !unit(self.depolarizing_prob) {
            return Err(config(format!(
                "depolarizing_prob {} outside [0, 1]",
                self.depolarizing_prob
            )));
        }
        if !unit(self.readout_flip_prob) {
            return Err(config(format!(
                "readout_flip_prob {} outside [0, 1]",
                self.readout_flip_prob
            )));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_prob == T::zero() && self.readout_flip_prob == T::zero()
    }

    /// Error channel for the gate that was just applied: each qubit the gate touched
    /// independently suffers a uniformly chosen Pauli (as a π rotation) with
    /// probability `depolarizing_prob`. Draws nothing from `rng` when the probability is zero.
    pub fn apply_after<R: Rng + ?Sized>(
        &self,
        state: &mut StateVector<T>,
        gate: &GateOp<T>,
        rng: &mut R,
    ) -> Result<()> {
        if self.depolarizing_prob == T::zero() {
            return Ok(());
        }
        let p = self.depolarizing_prob.as_f64();
        for q in gate.targets() {
            if rng.random::<f64>() < p {
                let pi = T::PI();
                let pauli = match rng.random_range(0..3) {
                    0 => GateOp::Rx(q, pi),
                    1 => GateOp::Ry(q, pi),
                    _ => GateOp::Rz(q, pi),
                };
                state.apply(&pauli)?;
            }
        }
        Ok(())
    }

    /// Readout flips with probability `r` scale an expectation by `1 - 2r`.
    pub fn readout(&self, expectation: T) -> T {
        (T::one() - T::lit(2.0) * self.readout_flip_prob) * expectation
    }
}

/// Executes gate lists from `|0...0>` and reports per-qubit `<Z>`.
///
/// With a noisy channel every execution draws from its own ChaCha stream
/// `(seed, stream)`, so results depend only on the arguments.
#[derive(Clone, Debug)]
pub struct Simulator<T> {
    n_qubits: usize,
    noise: NoiseChannel<T>,
    seed: u64,
    shots: Option<usize>,
}

impl<T: Real> Simulator<T> {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(config(format!(
                "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        Ok(Simulator { n_qubits, noise: NoiseChannel::default(), seed: 0, shots: None })
    }

    pub fn with_noise(mut self, noise: NoiseChannel<T>, seed: u64) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        self.seed = seed;
        Ok(self)
    }

    /// Switches measurement from exact expectations to `shots` samples.
    pub fn with_shots(mut self, shots: Option<usize>) -> Result<Self> {
        if shots == Some(0) {
            return Err(config("shots must be positive"));
        }
        self.shots = shots;
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn noise(&self) -> &NoiseChannel<T> {
        &self.noise
    }

    /// Final state after `gates`.
    pub fn run(&self, gates: &[GateOp<T>], stream: u64) -> Result<StateVector<T>> {
        let mut state = StateVector::zero(self.n_qubits)?;
        if self.noise.depolarizing_prob == T::zero() {
            state.apply_all(gates)?;
        } else {
            let mut rng = self.rng(stream);
            for g in gates {
                state.apply(g)?;
                self.noise.apply_after(&mut state, g, &mut rng)?;
            }
        }
        Ok(state)
    }

    /// Per-qubit `<Z>` after `gates`, including readout noise.
    pub fn expectations(&self, gates: &[GateOp<T>], stream: u64) -> Result<Vec<T>> {
        let state = self.run(gates, stream)?;
        let raw = match self.shots {
            None => state.expect_z_all(),
            Some(shots) => {
                let mut rng = self.rng(stream ^ 0x5a5a_5a5a_5a5a_5a5a);
                state.sample_expect_z(shots, &mut rng)?
            }
        };
        Ok(raw.into_iter().map(|e| self.noise.readout(e)).collect())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_state_layout() {
        let s = StateVector::<f64>::zero(1).unwrap();
        assert_eq!(s.amplitudes(), &[Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]);
        let s = StateVector::<f64>::zero(2).unwrap();
        assert_eq!(s.amplitudes().len(), 4);
        assert_eq!(s.amplitudes()[0], Complex::new(1.0, 0.0));
        let s = StateVector::<f64>::zero(3).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
    }

    #[test]
    fn zero_state_rejects_bad_counts() {
        assert!(matches!(StateVector::<f64>::zero(0), Err(crate::Error::Config(_))));
        assert!(matches!(StateVector::<f64>::zero(15), Err(crate::Error::Config(_))));
        assert!(StateVector::<f64>::zero(14).is_ok());
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::<f64>::zero(1).unwrap();
        s.apply(&GateOp::H(0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes()[0].re, r, 1e-15));
        assert!(close(s.amplitudes()[1].re, r, 1e-15));
        assert!(close(s.expect_z(0).unwrap(), 0.0, 1e-12));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |q1 q0> = |01> means q0 = 1: index 1. CNOT(q0 -> q1) gives index 3.
        let mut s = StateVector::<f64>::zero(2).unwrap();
        s.apply(&GateOp::Rx(0, PI)).unwrap();
        s.apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
        assert!(close(s.probabilities()[3], 1.0, 1e-15));
    }

    #[test]
    fn ry_half_pi() {
        let mut s = StateVector::<f64>::zero(1).unwrap();
        s.apply(&GateOp::Ry(0, FRAC_PI_2)).unwrap();
        assert!(close(s.amplitudes()[0].re, FRAC_PI_4.cos(), 1e-15));
        assert!(close(s.amplitudes()[1].re, FRAC_PI_4.sin(), 1e-15));
    }

    #[test]
    fn zz_on_zero_is_global_phase() {
        let theta = 0.9;
        let mut s = StateVector::<f64>::zero(2).unwrap();
        s.apply(&GateOp::Zz(0, 1, theta)).unwrap();
        let a = s.amplitudes()[0];
        assert!(close(a.re, (theta / 2.0).cos(), 1e-15));
        assert!(close(a.im, -(theta / 2.0).sin(), 1e-15));
        assert!(close(a.norm(), 1.0, 1e-15));
    }

    #[test]
    fn expect_z_of_ry_is_cos() {
        let theta = 0.7;
        let mut s = StateVector::<f64>::zero(1).unwrap();
        s.apply(&GateOp::Ry(0, theta)).unwrap();
        // 2x2 product by hand: RY|0> = (cos θ/2, sin θ/2).
        let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let oracle = c * c - sn * sn;
        assert!(close(s.expect_z(0).unwrap(), oracle, 1e-14));
        assert!(close(oracle, theta.cos(), 1e-14));
    }

    #[test]
    fn invalid_targets_are_usage_errors() {
        let mut s = StateVector::<f64>::zero(2).unwrap();
        assert!(matches!(s.apply(&GateOp::H(2)), Err(crate::Error::Usage(_))));
        assert!(matches!(
            s.apply(&GateOp::Cnot { control: 1, target: 1 }),
            Err(crate::Error::Usage(_))
        ));
        assert!(s.expect_z(5).is_err());
    }

    #[test]
    fn gate_new_checks_arity() {
        assert!(GateOp::<f64>::new(GateKind::Zz, &[0], 0.1).is_err());
        assert_eq!(
            GateOp::<f64>::new(GateKind::Ry, &[1], 0.3).unwrap(),
            GateOp::Ry(1, 0.3)
        );
    }

    #[test]
    fn identity_channel_leaves_state_untouched() {
        let ch = NoiseChannel::<f64>::new(0.0, 0.0).unwrap();
        let gates = [GateOp::H(0), GateOp::Zz(0, 1, 0.4), GateOp::Rx(1, 1.1)];
        let mut plain = StateVector::zero(2).unwrap();
        plain.apply_all(&gates).unwrap();
        let mut noisy = StateVector::zero(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in &gates {
            noisy.apply(g).unwrap();
            ch.apply_after(&mut noisy, g, &mut rng).unwrap();
        }
        assert_eq!(plain, noisy);
        assert_eq!(ch.readout(0.37), 0.37);
    }

    #[test]
    fn half_readout_flip_kills_expectations() {
        let ch = NoiseChannel::<f64>::new(0.0, 0.5).unwrap();
        let sim = Simulator::new(2).unwrap().with_noise(ch, 1).unwrap();
        let e = sim.expectations(&[GateOp::Ry(0, 0.3)], 0).unwrap();
        assert_eq!(e, vec![0.0, 0.0]);
    }

    #[test]
    fn full_depolarizing_is_reproducible() {
        let ch = NoiseChannel::<f64>::new(1.0, 0.0).unwrap();
        let gates = [GateOp::H(0), GateOp::Ry(1, 0.8), GateOp::Zz(0, 1, 0.5)];
        let sim = Simulator::new(2).unwrap().with_noise(ch, 11).unwrap();
        let a = sim.run(&gates, 4).unwrap();
        let b = sim.run(&gates, 4).unwrap();
        assert_eq!(a, b);
        let clean = Simulator::<f64>::new(2).unwrap().run(&gates, 4).unwrap();
        assert_ne!(a.probabilities(), clean.probabilities());
        assert!(close(a.norm_sqr(), 1.0, 1e-12));
    }

    #[test]
    fn channel_rejects_out_of_range() {
        assert!(NoiseChannel::<f64>::new(1.5, 0.0).is_err());
        assert!(NoiseChannel::<f64>::new(0.0, -0.1).is_err());
    }

    #[test]
    fn sampled_expectation_converges() {
        let mut s = StateVector::<f64>::zero(1).unwrap();
        s.apply(&GateOp::Ry(0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let est = s.sample_expect_z(20_000, &mut rng).unwrap()[0];
        assert!(close(est, 1.0f64.cos(), 0.03), "{est}");
    }

    #[test]
    fn basis_state_expectations_are_exact() {
        let mut s = StateVector::<f64>::zero(3).unwrap();
        s.apply(&GateOp::Rx(1, PI)).unwrap();
        assert_eq!(s.expect_z_all(), vec![1.0, -1.0, 1.0]);
    }
}
