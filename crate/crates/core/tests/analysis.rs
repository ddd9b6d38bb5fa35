use std::collections::BTreeSet;

use efsm_des::analysis::{
    check_equivalence, check_equivalence_with, derive_periodic, EquivOptions, Outcome, PeriodicError,
    DEFAULT_MAX_STEPS,
};
use efsm_des::efsm::{Config, EfsmSdl, Machine, Signature, TransitionPair};
use efsm_des::expr::{all_valuations, Valuation};
use efsm_des::mealy::MealyAutomaton;
use efsm_des::supervisor::sync_product;
use efsm_des::transform::{extract_controlled_des, extract_supervisor, DEFAULT_STATE_CAP};
use efsm_des_testkit::{counter, random_sdl, rng};
use proptest::prelude::*;

fn anchor(v: i64) -> Config {
    Config::new("I", Valuation::new().with("v", v))
}

#[test]
fn counter_periodic_factorisation() {
    let m = counter();
    let up = derive_periodic(&m, Some(&anchor(2)), DEFAULT_MAX_STEPS).unwrap();
    assert_eq!(up.render_input(), "a^2 (a^14)*");
    assert_eq!(up.render_output(), "m^2 (m^6 n^7 m)*");
    assert_eq!(up.render_combined(), "(a/m)^2 ((a/m)^6 (a/n)^7 (a/m))*");
    assert_eq!(up.anchor, anchor(2));

    // Auto-detection lands on the same split for this machine.
    let auto = derive_periodic(&m, None, DEFAULT_MAX_STEPS).unwrap();
    assert_eq!(auto, up);

    // The coupled system gives the same expressions.
    let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
    let sys = phi.couple(&extract_controlled_des(&m)).unwrap();
    let up2 = derive_periodic(&sys, Some(&anchor(2)), DEFAULT_MAX_STEPS).unwrap();
    assert_eq!(up2.render_input(), "a^2 (a^14)*");
    assert_eq!(up2.render_combined(), up.render_combined());

    assert!(matches!(
        derive_periodic(&m, Some(&anchor(9)), DEFAULT_MAX_STEPS),
        Err(PeriodicError::AnchorNotOnCycle(_))
    ));
    let err = derive_periodic(&m, None, 5).unwrap_err();
    assert_eq!(err, PeriodicError::TooLong(5));
}

#[test]
fn degenerate_machines_are_rejected() {
    let sig = || Signature::new(["P"], ["a"], ["m"], []);
    let stuck = EfsmSdl::new(sig(), vec![], Config::new("P", Valuation::new())).unwrap();
    assert!(matches!(derive_periodic(&stuck, None, 100), Err(PeriodicError::NotAutonomous { .. })));

    let two = EfsmSdl::new(
        Signature::new(["P"], ["a", "b"], ["m"], []),
        ["a", "b"]
            .iter()
            .map(|i| TransitionPair {
                src: "P".into(),
                input: (*i).into(),
                pred: "false".parse().unwrap(),
                then_branch: efsm_des::efsm::Branch::new("P", "m", Default::default()),
                else_branch: efsm_des::efsm::Branch::new("P", "m", Default::default()),
            })
            .collect(),
        Config::new("P", Valuation::new()),
    )
    .unwrap();
    assert!(matches!(derive_periodic(&two, None, 100), Err(PeriodicError::NotAutonomous { .. })));

    let looping = EfsmSdl::new(
        sig(),
        vec![TransitionPair {
            src: "P".into(),
            input: "a".into(),
            pred: "false".parse().unwrap(),
            then_branch: efsm_des::efsm::Branch::new("P", "m", Default::default()),
            else_branch: efsm_des::efsm::Branch::new("P", "m", Default::default()),
        }],
        Config::new("P", Valuation::new()),
    )
    .unwrap();
    let up = derive_periodic(&looping, None, 100).unwrap();
    assert_eq!(up.render_combined(), "((a/m))*");
}

#[test]
fn counter_equivalence() {
    let m = counter();
    for horizon in [0, 1, 17, 50, 100] {
        let report = check_equivalence(&m, &EquivOptions::new(horizon, 0)).unwrap();
        assert!(report.is_equivalent(), "{report}");
    }
    let report = check_equivalence(&m, &EquivOptions::new(0, 0)).unwrap();
    assert_eq!(report.checked, 1);
}

/// `G` with the output of `⟨a, true⟩` at `II` swapped.
fn mutated_des(m: &EfsmSdl) -> MealyAutomaton<String> {
    let g = extract_controlled_des(m);
    let mut out = MealyAutomaton::new(g.initial().clone(), g.alphabet().clone(), g.outputs().iter().cloned());
    for (q, e, to, z) in g.transitions() {
        let z = if q == "II" && e.bin { if z == "m" { "n" } else { "m" } } else { z };
        out.add_transition(q.clone(), e.clone(), to.clone(), z).unwrap();
    }
    out
}

#[test]
fn mutation_is_detected_and_replays() {
    let m = counter();
    let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
    let bad = phi.couple(&mutated_des(&m)).unwrap();
    let report = check_equivalence_with(&m, &bad, &EquivOptions::new(50, 0));
    let cx = report.counterexample().expect("the mutation changes an output");
    // I --a^8--> I,8 --a--> II,9 ... v decreases to 3 where the true branch fires.
    assert_eq!(cx.position, 15);
    assert_eq!(cx.efsm, Outcome::Fired { bin: true, output: "m".into() });
    assert_eq!(cx.des, Outcome::Fired { bin: true, output: "n".into() });
    assert!(cx.replays(&m, &bad));
    let json = report.to_json();
    assert_eq!(json["verdict"], "counterexample");
    assert_eq!(json["counterexample"]["position"], 15);
}

/// Number of configurations reachable from the initial one.
fn reachable_configs(m: &EfsmSdl) -> usize {
    let mut seen = BTreeSet::from([m.init().clone()]);
    let mut stack = vec![m.init().clone()];
    while let Some(c) = stack.pop() {
        for i in &m.signature().inputs {
            if let Ok((next, _)) = m.step(&c, i) {
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
    }
    seen.len()
}

fn single_input(seed: u64) -> EfsmSdl {
    let mut r = rng(seed);
    loop {
        let m = random_sdl(&mut r);
        if m.signature().inputs.len() == 1 {
            return m;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn periodic_factorisations_replay(seed in any::<u64>()) {
        let m = single_input(seed);
        match derive_periodic(&m, None, DEFAULT_MAX_STEPS) {
            Ok(up) => {
                prop_assert!(!up.period.is_empty());
                prop_assert!(up.prefix.len() + up.period.len() <= reachable_configs(&m) + 1);
                for k in 0..=5 {
                    let expected = up.unroll(k);
                    prop_assert_eq!(m.run(&expected.inputs).unwrap(), expected);
                }
                // Any configuration on the cycle works as an anchor.
                let on_cycle = m.execute(&up.unroll(1).inputs[..up.prefix.len() + up.period.len() / 2]).unwrap().config;
                let rotated = derive_periodic(&m, Some(&on_cycle), DEFAULT_MAX_STEPS).unwrap();
                prop_assert_eq!(rotated.period.len(), up.period.len());
                for k in 0..=3 {
                    let expected = rotated.unroll(k);
                    prop_assert_eq!(m.run(&expected.inputs).unwrap(), expected);
                }
            }
            Err(PeriodicError::Halts { step, .. } | PeriodicError::NotAutonomous { step, .. }) => {
                let inputs = vec![m.signature().inputs[0].clone(); step + 1];
                let err = m.run(&inputs).unwrap_err();
                prop_assert_eq!(err.position, step);
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn machines_are_equivalent_to_their_control_model(seed in any::<u64>()) {
        let m = random_sdl(&mut rng(seed));
        let report = check_equivalence(&m, &EquivOptions::new(6, 20)).unwrap();
        prop_assert!(report.is_equivalent(), "{}", report);
        // Against itself and against the reduced product the verdict is the same.
        prop_assert!(check_equivalence_with(&m, &m, &EquivOptions::new(6, 20)).is_equivalent());
        let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
        let reduced = sync_product(&phi.reduce(), &extract_controlled_des(&m)).unwrap();
        prop_assert_eq!(check_equivalence_with(&m, &reduced, &EquivOptions::new(6, 20)).verdict, report.verdict);
    }

    #[test]
    fn flipped_outputs_are_caught(seed in any::<u64>()) {
        let m = random_sdl(&mut rng(seed));
        let phi = extract_supervisor(&m, DEFAULT_STATE_CAP).unwrap();
        let g = extract_controlled_des(&m);
        let outputs: Vec<String> = g.outputs().iter().cloned().collect();
        prop_assume!(outputs.len() == 2);
        // Flip the first transition actually used by some coupled run.
        let sys = phi.couple(&g).unwrap();
        let Some(((_, q), e, _, _)) = sys.transitions().next() else { return Ok(()) };
        let (q, e) = (q.clone(), e.clone());
        let mut bad = MealyAutomaton::new(g.initial().clone(), g.alphabet().clone(), outputs.clone());
        for (p, f, to, z) in g.transitions() {
            let z = if *p == q && *f == e { if z == outputs[0] { outputs[1].as_str() } else { outputs[0].as_str() } } else { z };
            bad.add_transition(p.clone(), f.clone(), to.clone(), z).unwrap();
        }
        let bad_sys = phi.couple(&bad).unwrap();
        let horizon = sys.states().len() + 1;
        let report = check_equivalence_with(&m, &bad_sys, &EquivOptions::new(horizon.min(12), 200));
        if let Some(cx) = report.counterexample() {
            prop_assert!(cx.replays(&m, &bad_sys));
            prop_assert_ne!(&cx.efsm, &cx.des);
        } else {
            // Only possible when the exhaustive part could not reach the edge.
            prop_assert!(report.exhaustive_len < horizon);
        }
    }
}

#[test]
fn every_counter_configuration_is_covered() {
    let m = counter();
    let vals = all_valuations(&m.signature().vars);
    assert_eq!(vals.len(), 10);
    assert_eq!(reachable_configs(&m), 16);
}
