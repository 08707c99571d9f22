mod common;

use common::{brute_force, random_instance, to_graph};
use qsynth::domains::{propagate, Domains, Objective, PropState};
use qsynth::solver::{solve, SolveOptions, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn branch_and_bound_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..300 {
        let inst = random_instance(&mut rng);
        let g = to_graph(&inst);
        let want = brute_force(&inst, &[]);
        let r = solve(&g, &inst.cons, inst.obj, &SolveOptions::default());
        match want {
            None => assert_eq!(r.status, Status::Infeasible, "case {case}: {inst:?}"),
            Some(v) => {
                assert_eq!(r.status, Status::Optimal, "case {case}: {inst:?}");
                if inst.obj != Objective::None {
                    assert_eq!(r.solution.unwrap().value, v, "case {case}: {inst:?}");
                }
            }
        }
    }
}

#[test]
fn propagation_never_prunes_supported_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..300 {
        let inst = random_instance(&mut rng);
        let g = to_graph(&inst);
        let mut d = Domains::new(&g);
        let frontier = vec![0; g.num_logical];
        let st = PropState {
            graph: &g,
            order: &g.top,
            frontier: &frontier,
            committed: Default::default(),
            allocated: g.num_functional,
        };
        propagate(&mut d, &st, &inst.cons, None);
        for n in 0..g.nodes.len() {
            for i in 0..g.nodes[n].options.len() {
                if !d.get(n).is_alive(i) {
                    assert_eq!(brute_force(&inst, &[(n, i)]), None, "case {case}: node {n} tuple {i} {inst:?}");
                }
            }
        }
    }
}
