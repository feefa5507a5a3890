use proptest::prelude::*;

use kslab_core::inequalities::{
    builtin, negative_mass, positive_mass, Inequality, InequalityDef, ProbabilityTerm, Rational,
};
use kslab_core::montecarlo::{run, sample_setting, sample_setting_parallel, RngStream, RunConfig, Setting};
use kslab_core::quantum::{no_signaling_deviation, normalization_deviation, Experiment};
use kslab_core::{enumerate_joint, enumerate_party, EventAtom, JointAssignment, ModelClass, Slot};

const SLOTS: [&str; 4] = ["D0", "D1", "T0", "T1"];

fn outcome_strategy(slot: usize) -> BoxedStrategy<String> {
    match slot {
        0 | 1 => prop_oneof![Just("0".to_string()), Just("1".to_string())].boxed(),
        k => {
            let j = k - 2;
            prop::sample::select(vec!['a', 'b', 'c'])
                .prop_map(move |l| format!("{l}{j}"))
                .boxed()
        }
    }
}

fn atom_strategy(party: &'static str) -> impl Strategy<Value = EventAtom> {
    (0usize..4)
        .prop_flat_map(|slot| (Just(slot), outcome_strategy(slot)))
        .prop_map(move |(slot, out)| EventAtom::parse(party, SLOTS[slot], &out).unwrap())
}

fn term_strategy() -> impl Strategy<Value = ProbabilityTerm> {
    let atoms = prop_oneof![
        atom_strategy("A").prop_map(|a| vec![a]),
        atom_strategy("B").prop_map(|b| vec![b]),
        (atom_strategy("A"), atom_strategy("B")).prop_map(|(a, b)| vec![a, b]),
        (atom_strategy("B"), atom_strategy("A")).prop_map(|(b, a)| vec![b, a]),
    ];
    (-30i64..=30, 1i64..=12, atoms)
        .prop_map(|(n, d, atoms)| ProbabilityTerm::new(Rational::new(n, d), atoms).unwrap())
}

fn ineq_strategy() -> impl Strategy<Value = InequalityDef> {
    (
        "[a-zA-Z][a-zA-Z0-9_-]{0,12}",
        prop::collection::vec(term_strategy(), 1..12),
        (-5i64..=5, 1i64..=6),
        prop_oneof![Just(ModelClass::Realistic), Just(ModelClass::Noncontextual)],
    )
        .prop_map(|(name, terms, (bn, bd), class)| {
            InequalityDef::new(name, terms, Rational::new(bn, bd), class).unwrap()
        })
}

fn state_strategy() -> impl Strategy<Value = JointAssignment> {
    let all = enumerate_joint(ModelClass::Realistic);
    prop::sample::select(all)
}

fn slot_strategy() -> impl Strategy<Value = Slot> {
    prop::sample::select(Slot::ALL.to_vec())
}

/// Field position of an atom in `JointAssignment::fields()`.
fn field_of(a: &EventAtom) -> usize {
    let name = a.observable().to_string();
    let slot = SLOTS.iter().position(|s| name.starts_with(s)).unwrap();
    if name.ends_with('A') {
        slot
    } else {
        4 + slot
    }
}

fn string_match_value(ineq: &InequalityDef, s: &JointAssignment) -> Rational {
    let fields = s.fields();
    ineq.terms
        .iter()
        .filter(|t| t.atoms().iter().all(|a| fields[field_of(a)] == a.outcome_str()))
        .map(|t| t.coef())
        .sum()
}

proptest! {
    #[test]
    fn json_round_trip(ineq in ineq_strategy()) {
        let text = ineq.to_json();
        let back = InequalityDef::from_json(&text).unwrap();
        prop_assert_eq!(&back, &ineq);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn evaluate_matches_string_matching(ineq in ineq_strategy(), s in state_strategy()) {
        prop_assert_eq!(ineq.evaluate(&s), string_match_value(&ineq, &s));
    }

    #[test]
    fn value_within_coefficient_masses(ineq in ineq_strategy(), s in state_strategy()) {
        let v = ineq.evaluate(&s);
        prop_assert!(v <= positive_mass(&ineq));
        prop_assert!(v >= -negative_mass(&ineq));
    }

    #[test]
    fn joint_state_text_round_trip(s in state_strategy()) {
        let shown = s.to_string();
        prop_assert_eq!(shown.parse::<JointAssignment>().unwrap(), s);
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<JointAssignment>(&json).unwrap(), s);
    }

    #[test]
    fn no_signaling_and_normalization(v in 0.0f64..=1.0) {
        let table = Experiment::standard(v).unwrap().probability_table();
        prop_assert!(no_signaling_deviation(&table) < 1e-9);
        let (dev, min_p) = normalization_deviation(&table);
        prop_assert!(dev < 1e-9);
        prop_assert!(min_p > -1e-9);
    }

    #[test]
    fn conditional_value_times_marginal_is_base_value(v in 0.0f64..=1.0) {
        let exp = Experiment::standard(v).unwrap();
        let cond = builtin("lemma2a-conditional").unwrap();
        let base = builtin("lemma2b").unwrap();
        let marginal = exp.event_probability(&[cond.condition().unwrap()]).unwrap();
        let lhs = exp.quantum_value(&cond).unwrap() * marginal;
        prop_assert!((lhs - exp.quantum_value(&base).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn quantum_value_is_affine(v in 0.0f64..=1.0) {
        let exp = Experiment::standard(1.0).unwrap();
        for name in ["K", "lemma2a", "lemma3"] {
            let i = builtin(name).unwrap();
            let at = |x: f64| exp.with_visibility(x).unwrap().quantum_value(&i).unwrap();
            let chord = (1.0 - v) * at(0.0) + v * at(1.0);
            prop_assert!((at(v) - chord).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_independence(
        sa in slot_strategy(),
        sb in slot_strategy(),
        v in 0.0f64..=1.0,
        seed in any::<u64>(),
        n in 1u64..20_000,
        chunk in 1u64..7_000,
    ) {
        let exp = Experiment::standard(v).unwrap();
        let setting = Setting::new(sa, sb);
        let mut stream = RngStream::new(seed, setting.index());
        let sequential = sample_setting(&exp, setting, n, &mut stream).unwrap();
        let parallel = sample_setting_parallel(&exp, setting, n, seed, chunk).unwrap();
        prop_assert_eq!(&sequential, &parallel);
        prop_assert_eq!(parallel.total(), n);
        prop_assert_eq!(stream.position(), n);
    }

    #[test]
    fn estimate_within_coefficient_masses(v in 0.0f64..=1.0, seed in any::<u64>()) {
        let ineq = builtin("K").unwrap();
        let def = ineq.def().clone();
        let (table, rep) = run(&RunConfig::new(ineq, 5_000, seed).visibility(v)).unwrap();
        let lo: f64 = -(*negative_mass(&def).numer() as f64);
        let hi: f64 = *positive_mass(&def).numer() as f64;
        prop_assert!(rep.estimate >= lo && rep.estimate <= hi);
        prop_assert!(rep.stderr > 0.0);
        for s in &table.settings {
            prop_assert_eq!(s.total(), 5_000);
        }
    }
}

#[test]
fn noncontextual_joint_is_filter_of_realistic() {
    let nc = enumerate_joint(ModelClass::Noncontextual);
    let filtered: Vec<_> = enumerate_joint(ModelClass::Realistic)
        .into_iter()
        .filter(|s| s.is_in(ModelClass::Noncontextual))
        .collect();
    assert_eq!(nc, filtered);
}

#[test]
fn noncontextual_party_never_has_both_d_outcomes() {
    for p in enumerate_party(ModelClass::Noncontextual) {
        let f = p.fields();
        assert!(!(f[0] == "1" && f[1] == "1"), "{f:?}");
    }
}

#[test]
fn joint_enumeration_is_sorted_and_a_major() {
    let all = enumerate_joint(ModelClass::Realistic);
    assert!(all.windows(2).all(|w| w[0] < w[1]));
    let parties = enumerate_party(ModelClass::Realistic);
    for (k, s) in all.iter().enumerate() {
        assert_eq!(s.a, parties[k / 36]);
        assert_eq!(s.b, parties[k % 36]);
    }
}

#[test]
fn builtin_catalogue_round_trips_through_json() {
    for name in kslab_core::inequalities::BUILTIN_NAMES {
        let i = builtin(name).unwrap();
        let back = Inequality::from_json(&i.to_json()).unwrap();
        assert_eq!(back, i, "{name}");
    }
}
