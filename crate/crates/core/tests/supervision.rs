use std::collections::BTreeSet;

use efsm_des::mealy::{MealyAutomaton, PairedEvent};
use efsm_des::supervisor::{sync_product, ControlPattern, PlainAutomaton, Supervisor, SupervisorError};
use efsm_des::transform::{extract_controlled_des, extract_supervisor, DEFAULT_STATE_CAP};
use efsm_des_testkit::{counter, random_mealy, random_pattern, random_supervisor, rng, small_alphabet};
use proptest::prelude::*;

fn edges<Q: Clone + Ord + std::fmt::Debug>(g: &MealyAutomaton<Q>) -> Vec<(Q, PairedEvent, Q, String)> {
    g.transitions()
        .map(|(q, e, to, z)| (q.clone(), e.clone(), to.clone(), z.to_string()))
        .collect()
}

/// Closes a supervisor's automaton under ψ by dropping every disabled edge,
/// keeping all states.
fn pruned(phi: &Supervisor<u32>) -> Supervisor<u32> {
    let s = phi.automaton();
    let mut out = PlainAutomaton::new(*s.initial(), s.alphabet().clone());
    for x in s.states() {
        out.add_state(*x);
    }
    for (x, e, to) in s.transitions() {
        if phi.psi(x).enables(e) {
            out.add_transition(*x, e.clone(), *to).unwrap();
        }
    }
    Supervisor::new(out, phi.patterns().clone()).unwrap()
}

proptest! {
    #[test]
    fn patterns_never_hold_a_conflicting_pair(
        events in proptest::collection::btree_set(proptest::sample::select(small_alphabet().into_iter().collect::<Vec<_>>()), 0..4)
    ) {
        let conflicting = events.iter().any(|e| events.contains(&e.partner()));
        match ControlPattern::new(events.iter().cloned()) {
            Ok(gamma) => {
                prop_assert!(!conflicting);
                prop_assert_eq!(gamma.iter().cloned().collect::<BTreeSet<_>>(), events);
            }
            Err(SupervisorError::ConflictingPair(_)) => prop_assert!(conflicting),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn random_patterns_are_conflict_free(seed in any::<u64>()) {
        let gamma = random_pattern(&mut rng(seed));
        for e in gamma.iter() {
            prop_assert!(!gamma.enables(&e.partner()));
        }
    }

    #[test]
    fn coupling_equals_product_with_reduced_supervisor(seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = random_supervisor(&mut r, 5);
        let g = random_mealy(&mut r, 4);
        let coupled = phi.couple(&g).unwrap();
        let via_reduce = sync_product(&phi.reduce(), &g).unwrap();
        prop_assert_eq!(coupled.states(), via_reduce.states());
        prop_assert_eq!(edges(&coupled), edges(&via_reduce));
        prop_assert_eq!(coupled.enumerate_language(10), via_reduce.enumerate_language(10));
    }

    #[test]
    fn coupled_transitions_are_enabled(seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = random_supervisor(&mut r, 5);
        let g = random_mealy(&mut r, 4);
        for ((x, q), e, (x2, q2), z) in phi.couple(&g).unwrap().transitions() {
            prop_assert!(phi.psi(x).enables(e));
            prop_assert_eq!(phi.automaton().xi(x, e), Some(x2));
            prop_assert_eq!(g.delta(q, e), Some(q2));
            prop_assert_eq!(g.lambda(q, e), Some(z));
        }
    }

    #[test]
    fn completeness_makes_coupling_a_plain_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = random_supervisor(&mut r, 5);
        let g = random_mealy(&mut r, 4);
        let complete = pruned(&phi);
        prop_assert!(complete.check_completeness_condition());
        prop_assert_eq!(
            complete.couple(&g).unwrap().enumerate_language(8),
            sync_product(complete.automaton(), &g).unwrap().enumerate_language(8)
        );
        if phi.check_completeness_condition() {
            prop_assert_eq!(
                phi.couple(&g).unwrap().enumerate_language(8),
                sync_product(phi.automaton(), &g).unwrap().enumerate_language(8)
            );
        }
        // The condition is exactly "no defined ξ edge is disabled".
        let violated = phi.automaton().transitions().any(|(x, e, _)| !phi.psi(x).enables(e));
        prop_assert_eq!(phi.check_completeness_condition(), !violated);
    }
}

#[test]
fn counter_reduction_and_coupling() {
    let m = counter();
    let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
    let g = extract_controlled_des(&m);
    let reduced = phi.reduce();
    assert_eq!(reduced.states().len(), 16);
    let coupled = phi.couple(&g).unwrap();
    assert_eq!(coupled.states().len(), 16);
    assert_eq!(coupled.enumerate_language(12), sync_product(&reduced, &g).unwrap().enumerate_language(12));
    assert!(!phi.check_completeness_condition());
}

#[test]
fn neutral_and_empty_synchronisation() {
    let mut r = rng(7);
    let g = random_mealy(&mut r, 4);
    let mut one = PlainAutomaton::new((), small_alphabet());
    for e in small_alphabet() {
        one.add_transition((), e, ()).unwrap();
    }
    let prod = sync_product(&one, &g).unwrap();
    assert_eq!(prod.enumerate_language(6), g.enumerate_language(6));
    let none = PlainAutomaton::new((), small_alphabet());
    assert_eq!(sync_product(&none, &g).unwrap().transition_count(), 0);
}
