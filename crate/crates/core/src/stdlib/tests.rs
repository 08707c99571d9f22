use super::*;
use crate::circuit::{measure_gates, Circuit};
use crate::simulator::{apply, StateVector};
use num_complex::Complex64;

/// Checks that `gates` maps basis `k` to `e^{i phase(k)} |f(k)>` for every
/// `k` in `inputs`, all sharing one global phase.
fn assert_action(gates: &[Gate], n: usize, inputs: &[usize], f: impl Fn(usize) -> usize, phase: impl Fn(usize) -> f64) {
    let c = Circuit::from_gates(n, gates.to_vec());
    let mut global: Option<Complex64> = None;
    for &k in inputs {
        let out = apply(&c, &StateVector::basis(n, k).unwrap()).unwrap();
        let want = f(k);
        let amp = out.amps[want];
        assert!((amp.norm() - 1.0).abs() < 1e-9, "input {k:b}: |amp at {want:b}| = {}", amp.norm());
        let rel = amp * Complex64::from_polar(1.0, -phase(k));
        match global {
            None => global = Some(rel),
            Some(g) => assert!((g - rel).norm() < 1e-9, "input {k:b}: phase mismatch"),
        }
    }
}

fn all_ones(bits: usize, mask: usize) -> bool {
    bits & mask == mask
}

fn mcx_check(n: usize, variant: Variant) {
    let shape = Shape::Mcx { n };
    let op = sample_op(shape);
    let aux = aux_count(shape, variant).unwrap();
    let aux_q: Vec<usize> = (n + 1..n + 1 + aux).collect();
    let gates = generate(&op, variant, &aux_q).unwrap();
    let total = n + 1 + aux;
    let inputs: Vec<usize> = (0..1usize << (n + 1)).collect();
    let ctrl_mask = (1 << n) - 1;
    assert_action(&gates, total, &inputs, |k| if all_ones(k, ctrl_mask) { k ^ (1 << n) } else { k }, |_| 0.0);
}

#[test]
fn mcx_single_control_is_cx() {
    let vs = mcx_variants(1).unwrap();
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0].profile.counts.cx, 1);
    assert_eq!(vs[0].profile.aux, 0);
    assert_eq!(vs[0].profile.depth, 1);
    mcx_check(1, Variant::Direct);
}

#[test]
fn mcx_two_controls_is_toffoli() {
    let vs = mcx_variants(2).unwrap();
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0].profile.counts.cx, 6);
    assert_eq!(vs[0].profile.aux, 0);
    mcx_check(2, Variant::Direct);
}

#[test]
fn mcx_zero_controls_rejected() {
    assert!(mcx_variants(0).is_err());
    assert!(adder_variants(0).is_err());
}

#[test]
fn mcx_variants_match_oracle() {
    for n in 3..=6 {
        for v in variants_for(Shape::Mcx { n }) {
            if n + 1 + aux_count(Shape::Mcx { n }, v).unwrap() <= 12 {
                mcx_check(n, v);
            }
        }
    }
}

#[test]
fn mcx_six_controls_chain_beats_noaux() {
    let vs = mcx_variants(6).unwrap();
    let chain = vs.iter().find(|v| v.variant == Variant::Chain).unwrap();
    let noaux = vs.iter().find(|v| v.variant == Variant::NoAux).unwrap();
    assert_eq!(chain.profile.aux, 4);
    assert!(chain.profile.counts.cx < noaux.profile.counts.cx);
    mcx_check(6, Variant::Chain);
    mcx_check(6, Variant::NoAux);
}

#[test]
fn mcx_cx_non_increasing_in_aux() {
    for n in 4..=40 {
        let mut vs = mcx_variants(n).unwrap();
        vs.sort_by_key(|v| v.profile.aux);
        for w in vs.windows(2) {
            assert!(w[0].profile.aux < w[1].profile.aux, "n={n}");
            assert!(w[0].profile.counts.cx >= w[1].profile.counts.cx, "n={n}: {:?}", vs);
        }
    }
}

#[test]
fn dirty_ladders_restore_helpers() {
    // Helpers start in every basis state and must come back unchanged.
    for m in 3..=5 {
        let ctrls: Vec<usize> = (0..m).collect();
        let t = m;
        let dirty: Vec<usize> = (m + 1..2 * m - 1).collect();
        let mut b = GateBuf::new();
        construct::mcx_dirty(&mut b, &ctrls, t, &dirty);
        assert_eq!(measure_gates(&b.gates).counts.cx, 24 * (m as u64 - 2));
        let total = 2 * m - 1;
        let inputs: Vec<usize> = (0..1usize << total).collect();
        let mask = (1 << m) - 1;
        assert_action(&b.gates, total, &inputs, |k| if all_ones(k, mask) { k ^ (1 << t) } else { k }, |_| 0.0);
    }
    for m in 3..=7 {
        let ctrls: Vec<usize> = (0..m).collect();
        let mut b = GateBuf::new();
        construct::mcx_one_dirty(&mut b, &ctrls, m, m + 1);
        let inputs: Vec<usize> = (0..1usize << (m + 2)).collect();
        let mask = (1 << m) - 1;
        assert_action(&b.gates, m + 2, &inputs, |k| if all_ones(k, mask) { k ^ (1 << m) } else { k }, |_| 0.0);
    }
}

fn mcphase_check(theta: f64, m: usize, variant: Variant) {
    let op = LibOp::McPhase { theta, qubits: (0..m).collect() };
    let aux = aux_count(op.shape(), variant).unwrap();
    let gates = generate(&op, variant, &(m..m + aux).collect::<Vec<_>>()).unwrap();
    let inputs: Vec<usize> = (0..1usize << m).collect();
    let mask = (1 << m) - 1;
    assert_action(&gates, m + aux, &inputs, |k| k, |k| if all_ones(k, mask) { theta } else { 0.0 });
}

#[test]
fn mcphase_variants_match_oracle() {
    for m in 1..=6 {
        for v in variants_for(Shape::McPhase { m }) {
            mcphase_check(0.73, m, v);
            mcphase_check(std::f64::consts::PI, m, v);
        }
    }
}

#[test]
fn reflect_about_zero_three_qubits() {
    let op = LibOp::ReflectZero { controls: vec![], qubits: vec![0, 1, 2] };
    for v in variants_for(op.shape()) {
        let aux = aux_count(op.shape(), v).unwrap();
        let gates = generate(&op, v, &(3..3 + aux).collect::<Vec<_>>()).unwrap();
        let u = crate::simulator::unitary_of(&Circuit::from_gates(3 + aux, gates)).unwrap();
        // Restrict to aux = 0 and compare with I - 2|0><0| up to phase.
        let mut got = Vec::new();
        let mut want = Vec::new();
        for col in 0..8 {
            for row in 0..8 {
                got.push(u.get(row, col));
                let d = if row == col {
                    if row == 0 {
                        -1.0
                    } else {
                        1.0
                    }
                } else {
                    0.0
                };
                want.push(Complex64::new(d, 0.0));
            }
        }
        assert!(crate::simulator::distance_up_to_phase(&want, &got) < 1e-9, "variant {v}");
    }
}

#[test]
fn controlled_reflect_is_phase_on_zero_block() {
    let op = LibOp::ReflectZero { controls: vec![0], qubits: vec![1, 2] };
    for v in variants_for(op.shape()) {
        let aux = aux_count(op.shape(), v).unwrap();
        let gates = generate(&op, v, &(3..3 + aux).collect::<Vec<_>>()).unwrap();
        let inputs: Vec<usize> = (0..8).collect();
        assert_action(&gates, 3 + aux, &inputs, |k| k, |k| if k == 1 { std::f64::consts::PI } else { 0.0 });
    }
}

fn adder_check(ctrls: usize, w: usize, value: i64, variant: Variant) {
    let op = LibOp::AddConst { controls: (0..ctrls).collect(), target: (ctrls..ctrls + w).collect(), value };
    let aux = aux_count(op.shape(), variant).unwrap();
    let n = ctrls + w;
    let gates = generate(&op, variant, &(n..n + aux).collect::<Vec<_>>()).unwrap();
    let inputs: Vec<usize> = (0..1usize << n).collect();
    let cmask = (1 << ctrls) - 1;
    let modulus = 1i64 << w;
    assert_action(
        &gates,
        n + aux,
        &inputs,
        |k| {
            if !all_ones(k, cmask) {
                return k;
            }
            let x = (k >> ctrls) as i64;
            let y = (x + value).rem_euclid(modulus) as usize;
            (k & cmask) | (y << ctrls)
        },
        |_| 0.0,
    );
}

#[test]
fn adders_match_modular_addition() {
    for w in 1..=4 {
        for value in [-3i64, -1, 0, 1, 2, 5] {
            for v in [Variant::Qft, Variant::Ripple] {
                adder_check(0, w, value, v);
            }
        }
    }
}

#[test]
fn controlled_adders_match() {
    for w in 1..=3 {
        for value in [-1i64, 2, 3] {
            for c in 1..=2 {
                for v in variants_for(Shape::AddConst { c, w, value }) {
                    adder_check(c, w, value, v);
                }
            }
        }
    }
    adder_check(3, 2, 1, Variant::Qft);
}

#[test]
fn adder_width_one_is_trivial() {
    let op = LibOp::AddConst { controls: vec![], target: vec![0], value: 1 };
    let gates = generate(&op, Variant::Qft, &[]).unwrap();
    assert!(gates.iter().all(|g| g.class() == crate::circuit::GateClass::Single));
    adder_check(0, 1, 1, Variant::Qft);
    adder_check(0, 1, 1, Variant::Ripple);
}

#[test]
fn adder_width_five_tradeoff() {
    let vs = adder_variants(5).unwrap();
    let qft = vs.iter().find(|v| v.variant == Variant::Qft).unwrap();
    let rca = vs.iter().find(|v| v.variant == Variant::Ripple).unwrap();
    assert_eq!(qft.profile.aux, 0);
    assert_eq!(rca.profile.aux, 6);
    assert!(rca.profile.counts.cx < qft.profile.counts.cx);
}

#[test]
fn adder_scaling_orders() {
    // Quadratic against linear: doubling the width roughly quadruples the
    // Fourier adder and doubles the ripple adder.
    let cx =
        |w: usize, v: Variant| resource_profile(Shape::AddConst { c: 0, w, value: 1 }, v).unwrap().counts.cx as f64;
    let q = cx(32, Variant::Qft) / cx(16, Variant::Qft);
    let r = cx(32, Variant::Ripple) / cx(16, Variant::Ripple);
    assert!(q > 3.5 && q < 4.5, "{q}");
    assert!(r > 1.8 && r < 2.2, "{r}");
}

#[test]
fn profile_matches_generated_fragment() {
    let ops = vec![
        LibOp::H { q: 7 },
        LibOp::Rz { theta: 0.1, q: 2 },
        LibOp::Mcx { controls: vec![9, 3, 5, 1], target: 0 },
        LibOp::McPhase { theta: 1.0, qubits: vec![4, 2, 8] },
        LibOp::ReflectZero { controls: vec![11], qubits: vec![1, 2, 3, 4] },
        LibOp::AddConst { controls: vec![10], target: vec![0, 1, 2, 3, 4], value: 2 },
        LibOp::AddConst { controls: vec![], target: vec![0, 1, 2, 3, 4, 5], value: -1 },
    ];
    for op in ops {
        for v in variants_for(op.shape()) {
            let p = resource_profile(op.shape(), v).unwrap();
            let aux: Vec<usize> = (20..20 + p.aux).collect();
            let m = measure_gates(&generate(&op, v, &aux).unwrap());
            assert_eq!((m.depth, m.counts), (p.depth, p.counts), "{op:?} {v}");
        }
    }
}

#[test]
fn generate_rejects_wrong_aux() {
    let op = LibOp::Mcx { controls: vec![0, 1, 2, 3], target: 4 };
    assert!(generate(&op, Variant::Chain, &[5]).is_err());
    assert!(generate(&op, Variant::Qft, &[]).is_err());
}

#[test]
fn generation_is_deterministic() {
    let op = LibOp::AddConst { controls: vec![0], target: vec![1, 2, 3, 4], value: 3 };
    let a = generate(&op, Variant::Ripple, &[5, 6, 7, 8, 9]).unwrap();
    let b = generate(&op, Variant::Ripple, &[5, 6, 7, 8, 9]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn h_generates_single_gate() {
    assert_eq!(generate(&LibOp::H { q: 3 }, Variant::Direct, &[]).unwrap(), vec![Gate::H(3)]);
    let p = resource_profile(Shape::Mcx { n: 1 }, Variant::Direct).unwrap();
    assert_eq!((p.aux, p.depth, p.counts.cx), (0, 1, 1));
}

#[test]
fn chain_mcx_aux_returns_to_zero() {
    // Every control pattern with aux starting in |0> leaves aux in |0>.
    let op = LibOp::Mcx { controls: vec![0, 1, 2, 3], target: 4 };
    let gates = generate(&op, Variant::Chain, &[5, 6]).unwrap();
    let c = Circuit::from_gates(7, gates);
    for k in 0..32 {
        let out = apply(&c, &StateVector::basis(7, k).unwrap()).unwrap();
        for (idx, a) in out.amps.iter().enumerate() {
            if a.norm() > 1e-9 {
                assert_eq!(idx >> 5, 0);
            }
        }
    }
}
