mod common;

use common::*;
use qsynth::bench::*;
use qsynth::circuit::GateClass;
use qsynth::domains::{ConstraintSet, Objective};
use qsynth::solver::SolveOptions;
use qsynth::synth::synthesize;

fn circuit_of(model: &qsynth::model::Model, cons: ConstraintSet, obj: Objective) -> qsynth::circuit::Circuit {
    let s = synthesize(model, &cons, obj, &SolveOptions::default()).unwrap();
    s.circuit.expect("feasible")
}

#[test]
fn walk_matches_shift_operator() {
    for n in 2..=5 {
        for (cons, obj) in [
            (ConstraintSet::default(), Objective::Width),
            (ConstraintSet { max_width: Some(2 * n + 2), ..Default::default() }, Objective::Count(GateClass::Cx)),
        ] {
            let c = circuit_of(&build_walk_model(n), cons, obj);
            let got = functional_columns(&c, n + 1).unwrap();
            let d = qsynth::simulator::columns_distance_up_to_phase(&walk_columns(n), &got);
            assert!(d < 1e-9, "n={n} distance {d}");
        }
    }
}

#[test]
fn block_encoding_block_is_amat() {
    // Drop the extra `s` qubit: it only carries a Hadamard.
    let m = build_block_encoding_model(2);
    let c = circuit_of(&m, ConstraintSet::default(), Objective::Count(GateClass::Cx));
    let cols = functional_columns(&c, 6).unwrap();
    // Keep s = 0 inputs: s is the highest functional bit.
    let block = top_left_block(&cols, 2);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let want: Mat = amat(2).iter().map(|r| r.iter().map(|v| v * h).collect()).collect();
    assert!(distance_up_to_phase(&want, &block) < 1e-9);
}

#[test]
fn qsvt_block_matches_recursion() {
    let phases = random_phases(3, 7);
    let m = build_qsvt_model(2, &phases);
    let c = circuit_of(&m, ConstraintSet::default(), Objective::Count(GateClass::Cx));
    let cols = functional_columns(&c, 6).unwrap();
    let want = qsvt_degree3(&amat(2), &phases).unwrap();
    let d = distance_up_to_phase(&want, &top_left_block(&cols, 2));
    assert!(d < 1e-6, "distance {d}");
}

#[test]
fn qsvt_zero_phases_is_one_application() {
    let m = build_qsvt_model(2, &[0.0, 0.0]);
    let c = circuit_of(&m, ConstraintSet::default(), Objective::Count(GateClass::Cx));
    let cols = functional_columns(&c, 6).unwrap();
    assert!(distance_up_to_phase(&amat(2), &top_left_block(&cols, 2)) < 1e-9);
}
