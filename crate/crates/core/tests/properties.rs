use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use proptest::prelude::*;
use qcae_core::ansatz::build_qaoa;
use qcae_core::data::{add_gaussian_noise, filter_classes};
use qcae_core::gradient::{chain_loss_gradient, softmax, softmax_xent};
use qcae_core::nn::{conv_out, mse_loss, tconv_out};
use qcae_core::*;

fn gate_strategy(n: usize) -> impl Strategy<Value = GateOp<f64>> {
    (0..6usize, 0..n, 1..n.max(2), -7.0..7.0f64).prop_map(move |(kind, a, off, theta)| {
        let b = (a + off) % n;
        match kind {
            0 => GateOp::H(a),
            1 if n > 1 => GateOp::Cnot { control: a, target: b },
            2 => GateOp::Rx(a, theta),
            3 => GateOp::Ry(a, theta),
            4 => GateOp::Rz(a, theta),
            5 if n > 1 => GateOp::Zz(a, b, theta),
            _ => GateOp::Ry(a, theta),
        }
    })
}

fn circuit_strategy(max_gates: usize) -> impl Strategy<Value = (usize, Vec<GateOp<f64>>)> {
    (1..=4usize).prop_flat_map(move |n| (Just(n), prop::collection::vec(gate_strategy(n), 0..=max_gates)))
}

fn random_state(n: usize, seed: u64) -> StateVector64 {
    let mut s = seed | 1;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let amps: Vec<Complex64> = (0..1usize << n).map(|_| Complex64::new(next(), next())).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn max_diff(a: &StateVector64, b: &StateVector64) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_preserved((n, gates) in circuit_strategy(200)) {
        let mut s = StateVector64::zero(n).unwrap();
        s.apply_all(&gates).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        for q in 0..n {
            let e = s.expect_z(q).unwrap();
            prop_assert!((-1.0..=1.0).contains(&e));
        }
    }

    #[test]
    fn involutions_hold(n in 1..=4usize, seed in any::<u64>(), q in 0..4usize, theta in -7.0..7.0f64) {
        let q = q % n;
        let start = random_state(n, seed);
        let mut pairs = vec![
            (GateOp::H(q), GateOp::H(q)),
            (GateOp::Ry(q, theta), GateOp::Ry(q, -theta)),
        ];
        if n > 1 {
            let t = (q + 1) % n;
            pairs.push((GateOp::Cnot { control: q, target: t }, GateOp::Cnot { control: q, target: t }));
        }
        for (g1, g2) in pairs {
            let mut s = start.clone();
            s.apply(&g1).unwrap();
            s.apply(&g2).unwrap();
            prop_assert!(max_diff(&s, &start) < 1e-10);
        }
    }

    #[test]
    fn basis_states_read_plus_minus_one(n in 1..=4usize, index in any::<usize>()) {
        let index = index % (1 << n);
        let mut s = StateVector64::zero(n).unwrap();
        for q in 0..n {
            if index >> q & 1 == 1 {
                s.apply(&GateOp::Rx(q, std::f64::consts::PI)).unwrap();
            }
        }
        for q in 0..n {
            let want = if index >> q & 1 == 1 { -1.0 } else { 1.0 };
            prop_assert!((s.expect_z(q).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_templates_preserve_norm(
        fam in 0..4usize, n in 1..=4usize, p in 1..=5usize,
        raw in prop::collection::vec(-7.0..7.0f64, 40),
    ) {
        let family = CircuitFamily::ALL[fam];
        let t = CircuitTemplate::new(family, n, p).unwrap();
        let params: Vec<f64> = raw.iter().cycle().take(t.slot_count()).copied().collect();
        let bound = t.bind(&params).unwrap();
        let again = t.bind(&params).unwrap();
        prop_assert_eq!(&bound.gates, &again.gates);
        let s = Simulator64::new(n).unwrap().run(&bound.gates, 0).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn chain_is_linear(
        rows in 1..5usize, cols in 1..7usize, seed in any::<u64>(),
        a in -3.0..3.0f64, b in -3.0..3.0f64,
    ) {
        let s = random_state(4, seed);
        let vals: Vec<f64> = s.amplitudes().iter().flat_map(|c| [c.re, c.im]).collect();
        let take = |k: usize, off: usize| vals.iter().cycle().skip(off).take(k).copied().collect::<Vec<_>>();
        let j = QuantumJacobian::from_row_major(rows, cols, take(rows * cols, 0)).unwrap();
        let (d1, d2) = (take(rows, 5), take(rows, 11));
        let mix: Vec<f64> = d1.iter().zip(&d2).map(|(x, y)| a * x + b * y).collect();
        let lhs = chain_loss_gradient(&j, &mix).unwrap();
        let g1 = chain_loss_gradient(&j, &d1).unwrap();
        let g2 = chain_loss_gradient(&j, &d2).unwrap();
        for c in 0..cols {
            prop_assert!((lhs[c] - (a * g1[c] + b * g2[c])).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_sums_to_one(logits in prop::collection::vec(-50.0..50.0f64, 1..12), hot in any::<usize>()) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut target = vec![0.0; logits.len()];
        target[hot % logits.len()] = 1.0;
        let (loss, _) = softmax_xent(&logits, &target).unwrap();
        prop_assert!(loss >= 0.0);
    }

    #[test]
    fn mse_is_nonnegative_and_zero_iff_equal(
        a in prop::collection::vec(-5.0..5.0f64, 1..30),
        bump in 0usize..30, delta in 0.001..1.0f64,
    ) {
        let x = Tensor64::from_vec(a.clone());
        let (l, _) = mse_loss(&x, &x).unwrap();
        prop_assert_eq!(l, 0.0);
        let mut b = a.clone();
        let i = bump % b.len();
        b[i] += delta;
        let (l, _) = mse_loss(&x, &Tensor64::from_vec(b)).unwrap();
        prop_assert!(l > 0.0);
    }

    #[test]
    fn tconv_restores_conv_spatial_dims(size in 3..40usize, k in 1..4usize, stride in 1..3usize, pad in 0..2usize) {
        prop_assume!(pad < k);
        if let Some(out) = conv_out(size, k, stride, pad) {
            prop_assert_eq!(out, (size + 2 * pad - k) / stride + 1);
            let slack = (size + 2 * pad - k) % stride;
            prop_assert_eq!(tconv_out(out, k, stride, pad, slack), Some(size));
        }
    }

    #[test]
    fn noise_stays_in_unit_interval(seed in any::<u64>(), sigma in 0.0..2.0f64, level in 0.0..=1.0f64) {
        let im = Tensor64::filled(&[1, 6, 6], level);
        let out = add_gaussian_noise(&im, sigma, seed, 3);
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn slot_count_law() {
    for family in CircuitFamily::ALL {
        for n in 1..=4 {
            for p in 1..=5 {
                let t = CircuitTemplate::new(family, n, p).unwrap();
                let want = t.slot_count();
                assert_eq!(want, family.slot_count(n, p));
                for len in 0..=want + 2 {
                    let ok = t.bind(&vec![0.1f64; len]).is_ok();
                    assert_eq!(ok, len == want, "{family} n={n} p={p} len={len}");
                }
            }
        }
    }
}

#[test]
fn zero_qaoa_parameters_leave_z_at_zero() {
    for n in 1..=6 {
        for p in 1..=4 {
            let gates = build_qaoa::<f64>(n, p, &vec![0.0; p], &vec![0.0; p]).unwrap();
            let z = Simulator64::new(n).unwrap().expectations(&gates, 0).unwrap();
            assert!(z.iter().all(|v| v.abs() < 1e-12), "n={n} p={p}: {z:?}");
        }
    }
}

struct Counting<'a> {
    inner: &'a Simulator64,
    calls: AtomicUsize,
}

impl CircuitEvaluator<f64> for Counting<'_> {
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn evaluate(&self, gates: &[GateOp<f64>], stream: u64) -> Result<Vec<f64>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(gates, stream)
    }
}

#[test]
fn shift_bookkeeping_counts_executions() {
    for family in CircuitFamily::ALL {
        for (n, p) in [(2, 1), (3, 2), (4, 3)] {
            let t = CircuitTemplate::new(family, n, p).unwrap();
            let sim = Simulator64::new(n).unwrap();
            let counter = Counting { inner: &sim, calls: AtomicUsize::new(0) };
            let params: Vec<f64> = (0..t.slot_count()).map(|i| 0.3 + 0.1 * i as f64).collect();
            let r = psr_gradient(&counter, &t, &params, &[], 0).unwrap();
            let calls = counter.calls.load(Ordering::Relaxed);
            let gate_uses: usize = t.slots().iter().map(|s| s.gates.len()).sum();
            assert_eq!(calls, r.executions);
            assert_eq!(calls, 2 * gate_uses + 1);
            if family != CircuitFamily::Ours {
                // one gate per parameter
                assert_eq!(calls, 2 * t.slot_count() + 1);
            }
        }
    }
}

#[test]
fn filtering_is_idempotent_and_order_preserving() {
    let images: Vec<Tensor64> = (0..20).map(|i| Tensor64::filled(&[1, 2, 2], i as f64 / 20.0)).collect();
    let labels: Vec<u8> = (0..20).map(|i| (i * 7 % 10) as u8).collect();
    let set = MnistSet { rows: 2, cols: 2, images, labels };
    let once = filter_classes(&set, &[0, 1, 4], 100).unwrap().set;
    let twice = filter_classes(&once, &[0, 1, 4], 100).unwrap().set;
    assert_eq!(once.labels, twice.labels);
    assert_eq!(once.images, twice.images);
    let pos: Vec<f64> = once.images.iter().map(|t| t.data()[0]).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn clamped_fraction_grows_with_sigma() {
    let im = Tensor64::new(vec![1, 28, 28], (0..784).map(|i| (i % 28) as f64 / 27.0).collect()).unwrap();
    let clamped = |s: f64| {
        let out = add_gaussian_noise(&im, s, 11, 0);
        out.data().iter().filter(|&&v| v == 0.0 || v == 1.0).count()
    };
    let counts: Vec<usize> = [0.25, 0.5, 0.75, 1.0].into_iter().map(clamped).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}
