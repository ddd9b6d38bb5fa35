use std::collections::BTreeSet;

use efsm_des::efsm::{Config, EfsmSdl, Machine};
use efsm_des::expr::all_valuations;
use efsm_des::mealy::{PairedEvent, TracePair};
use efsm_des::transform::{
    extract_controlled_des, extract_supervisor, lift_inputs, project_inputs, SupervisorState, DEFAULT_STATE_CAP,
};
use efsm_des_testkit::{oracle_step, random_sdl, rng};
use proptest::prelude::*;

/// Every trace of the EFSM with at most `len` inputs, computed with the
/// step oracle.
fn efsm_traces(m: &EfsmSdl, len: usize) -> BTreeSet<TracePair<String>> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![(m.init().clone(), TracePair::empty())];
    for depth in 0..=len {
        let mut next = Vec::new();
        for (c, t) in frontier {
            if depth < len {
                for i in &m.signature().inputs {
                    if let Some((c2, z, _)) = oracle_step(m, &c, i) {
                        let mut t2 = t.clone();
                        t2.push(i.clone(), z);
                        next.push((c2, t2));
                    }
                }
            }
            out.insert(t);
        }
        frontier = next;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn each_pair_becomes_two_des_transitions(seed in any::<u64>()) {
        let m = random_sdl(&mut rng(seed));
        let g = extract_controlled_des(&m);
        prop_assert_eq!(g.transition_count(), 2 * m.pairs().len());
        for p in m.pairs() {
            for bin in [true, false] {
                let b = p.branch(bin);
                let e = PairedEvent::new(p.input.clone(), bin);
                prop_assert_eq!(g.delta(&p.src, &e), Some(&b.dest));
                prop_assert_eq!(g.lambda(&p.src, &e), Some(b.output.as_str()));
            }
        }
    }

    #[test]
    fn supervisor_is_sound_and_aligned(seed in any::<u64>()) {
        let m = random_sdl(&mut rng(seed));
        let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
        let sig = m.signature();
        let expected = all_valuations(&sig.vars).len() * sig.states.len();
        prop_assert_eq!(phi.automaton().states().len(), expected);
        for x in phi.automaton().states() {
            let gamma = phi.psi(x);
            for e in gamma.iter() {
                prop_assert!(!gamma.enables(&e.partner()));
            }
            for e in phi.automaton().alphabet() {
                let Some(next) = phi.automaton().xi(x, e) else { continue };
                if !gamma.enables(e) {
                    continue;
                }
                let (c, _, bin) = oracle_step(&m, &x.config(), &e.base)
                    .expect("an enabled defined supervisor edge is an EFSM step");
                prop_assert_eq!(bin, e.bin);
                prop_assert_eq!(&SupervisorState::from(&c), next);
            }
            // Conversely every EFSM step is an enabled supervisor edge.
            for i in &sig.inputs {
                if let Some((c, _, bin)) = oracle_step(&m, &x.config(), i) {
                    let e = PairedEvent::new(i.clone(), bin);
                    prop_assert!(gamma.enables(&e));
                    prop_assert_eq!(phi.automaton().xi(x, &e), Some(&SupervisorState::from(&c)));
                }
            }
        }
    }

    #[test]
    fn coupled_system_reproduces_the_efsm(seed in any::<u64>(), word in proptest::collection::vec(0usize..2, 0..10)) {
        let m = random_sdl(&mut rng(seed));
        let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
        let g = extract_controlled_des(&m);
        let sys = phi.couple(&g).unwrap();
        let inputs: Vec<&str> = word.iter().map(|k| m.signature().inputs[k % m.signature().inputs.len()].as_str()).collect();

        // A run succeeds with output t iff the coupled system accepts the lifted word with output t.
        match m.run(&inputs) {
            Ok(trace) => {
                let lifted = lift_inputs(&m, m.init(), &inputs).unwrap();
                prop_assert_eq!(project_inputs(&lifted), trace.inputs.clone());
                prop_assert_eq!(sys.lambda_star(sys.initial(), &lifted), Some(trace.outputs));
            }
            Err(err) => {
                let ok = &inputs[..err.position];
                let lifted = lift_inputs(&m, m.init(), ok).unwrap();
                let reached = sys.delta_star(sys.initial(), &lifted).unwrap();
                // Nothing with base inputs[position] is possible there.
                for bin in [true, false] {
                    let e = PairedEvent::new(inputs[err.position], bin);
                    prop_assert!(sys.delta(&reached, &e).is_none());
                }
            }
        }
    }

    #[test]
    fn coupled_language_projects_onto_efsm_traces(seed in any::<u64>()) {
        let m = random_sdl(&mut rng(seed));
        let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
        let sys = phi.couple(&extract_controlled_des(&m)).unwrap();
        let projected: BTreeSet<TracePair<String>> = sys
            .enumerate_language(5)
            .into_iter()
            .map(|t| TracePair { inputs: project_inputs(&t.inputs), outputs: t.outputs })
            .collect();
        prop_assert_eq!(projected, efsm_traces(&m, 5));
    }

    #[test]
    fn coupled_states_are_aligned(seed in any::<u64>()) {
        let m = random_sdl(&mut rng(seed));
        let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
        let sys = phi.couple(&extract_controlled_des(&m)).unwrap();
        for (x, q) in sys.states() {
            prop_assert_eq!(x.proj_state(), q.as_str());
        }
    }

    #[test]
    fn lifting_is_unique(seed in any::<u64>(), word in proptest::collection::vec(0usize..2, 0..8)) {
        let m = random_sdl(&mut rng(seed));
        let inputs: Vec<&str> = word.iter().map(|k| m.signature().inputs[k % m.signature().inputs.len()].as_str()).collect();
        if let Ok(lifted) = lift_inputs(&m, m.init(), &inputs) {
            let mut c: Config = m.init().clone();
            for e in &lifted {
                let (next, _, bin) = oracle_step(&m, &c, &e.base).unwrap();
                prop_assert_eq!(bin, e.bin);
                c = next;
            }
        }
    }
}
