mod common;

use common::oracle;
use mpagent_core::bench::{cop_of, extract_value, precision_of, scor_of, Property, TrialSet, Unit};
use mpagent_core::gateway::ScriptedBackend;
use mpagent_core::react::{
    parse_react_output, render_react_output, run_react_loop, AgentSpec, CollectingSink, Dispatcher, LoopContext,
    Outcome, ParsedAction, ToolDescriptor,
};
use mpagent_core::toolkit::schema_by_name;
use mpagent_core::xtal::{make_supercell, neighbor_list, volume, Site, StructureDoc};
use mpagent_core::StepClock;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

fn trials() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(prop::option::weighted(0.7, -500.0..500.0f64), 1..12)
}

proptest! {
    #[test]
    fn metrics_match_oracle(values in trials()) {
        let ts = TrialSet::from_values("q", &values).unwrap();
        let m = scor_of(&ts);
        let (p, c, conf, s) = oracle::scor(&values);
        match (m.precision, p) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0)),
            (None, None) => {}
            other => prop_assert!(false, "precision {:?}", other),
        }
        if let (Some(a), Some(b)) = (m.cop, c) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert_eq!(m.confidence, conf);
        prop_assert!((m.scor - s).abs() <= 1e-12);
    }

    #[test]
    fn scor_bounded_and_permutation_invariant(mut values in trials(), seed in any::<u64>()) {
        let a = scor_of(&TrialSet::from_values("q", &values).unwrap());
        prop_assert!((0.0..=1.0).contains(&a.scor));
        prop_assert!(a.scor <= a.confidence);
        use rand::seq::SliceRandom;
        values.shuffle(&mut StdRng::seed_from_u64(seed));
        let b = scor_of(&TrialSet::from_values("q", &values).unwrap());
        prop_assert!((a.scor - b.scor).abs() <= 1e-12);
        prop_assert_eq!(a.confidence, b.confidence);
    }

    #[test]
    fn cop_decreases_with_spread(p in 0.0..50.0f64, dp in 1e-6..10.0f64) {
        prop_assert!(cop_of(p + dp) < cop_of(p));
        prop_assert!(cop_of(p) <= 1.0 && cop_of(p) > 0.0);
    }

    #[test]
    fn identical_values_are_fully_consistent(x in -1e6..1e6f64, n in 1usize..10) {
        let ts = TrialSet::from_values("q", &vec![Some(x); n]).unwrap();
        prop_assert_eq!(scor_of(&ts).scor, 1.0);
        prop_assert_eq!(precision_of(&vec![x; n]).unwrap(), 0.0);
    }

    #[test]
    fn extraction_roundtrips_gpa_and_mbar(v in 1.0..900.0f64) {
        let v = (v * 10.0).round() / 10.0;
        let gpa = extract_value(&format!("K is {v} GPa."), Property::BulkModulus, Unit::GPa).unwrap();
        prop_assert_eq!(gpa.as_number(), Some(v));
        let mbar = extract_value(&format!("K is {} Mbar.", v / 100.0), Property::BulkModulus, Unit::GPa).unwrap();
        prop_assert!((mbar.as_number().unwrap() - v).abs() < 1e-9);
    }

    #[test]
    fn react_output_roundtrip(
        thought in prop::option::of("[A-Za-z][A-Za-z ,.]{0,40}[a-z]"),
        name in "[a-z][a-z_]{0,15}",
        arg in "[ -~]{0,30}",
        n in any::<i32>(),
        final_text in "[A-Za-z0-9][ -~]{0,60}",
        is_final in any::<bool>(),
    ) {
        let action = if is_final {
            ParsedAction::Final(final_text.trim_end().to_string())
        } else {
            ParsedAction::Invoke { name, input: json!({"q": arg, "n": n}) }
        };
        let text = render_react_output(thought.as_deref(), &action);
        let parsed = parse_react_output(&text).unwrap();
        prop_assert_eq!(parsed.action, action);
        prop_assert_eq!(parsed.thought.as_deref(), thought.as_deref());
    }

    #[test]
    fn loop_never_exceeds_step_budget(
        script in prop::collection::vec(0u8..4, 0..25),
        max_steps in 1u32..8,
    ) {
        let completions: Vec<String> = script.iter().map(|k| match k {
            0 => "Thought: call\nAction:\n```json\n{\"action\": \"echo\", \"action_input\": \"x\"}\n```".to_string(),
            1 => "no action here".to_string(),
            2 => "Action:\n```json\n{\"action\": \"nope\", \"action_input\": {}}\n```".to_string(),
            _ => "Final Answer: done".to_string(),
        }).collect();
        let first_final = script.iter().position(|k| *k == 3);
        let backend = ScriptedBackend::new(completions.clone());
        let sink = CollectingSink::default();
        let clock = StepClock::default();
        let ctx = LoopContext { session_id: "p", backend: &backend, sink: &sink, clock: &clock, workspace: None, depth: 0 };
        let spec = AgentSpec::assistant("A", "test agent", vec!["echo".into()]).with_max_steps(max_steps);
        let trace = run_react_loop(&spec, "go", &Echo, &ctx).unwrap();
        prop_assert!(trace.steps.len() <= max_steps as usize);
        trace.check_invariants().unwrap();
        match first_final {
            Some(i) if i < max_steps as usize => prop_assert!(matches!(trace.outcome, Outcome::Answered { .. }), "{:?}", trace.outcome),
            _ if script.len() < max_steps as usize => prop_assert!(matches!(trace.outcome, Outcome::BackendError { .. }), "{:?}", trace.outcome),
            _ => prop_assert_eq!(trace.outcome, Outcome::StepBudgetExhausted),
        }
        prop_assert_eq!(sink.events().iter().filter(|e| e.kind.is_terminal()).count(), 1);
    }

    #[test]
    fn validation_is_idempotent(
        ids in prop::collection::vec(1u32..100_000, 1..4),
        fields in prop::sample::subsequence(vec!["material_id", "formula_pretty", "nsites", "band_gap"], 1..4),
        limit in prop::option::of(1u32..1000),
        sort in prop::option::of(prop::sample::select(vec!["band_gap", "-band_gap", "nsites", "-energy_above_hull"])),
        gap_min in prop::option::of(0.0..5.0f64),
    ) {
        let schema = schema_by_name("search_materials_summary__get").unwrap();
        let mut args = json!({
            "material_ids": ids.iter().map(|i| format!("mp-{i}")).collect::<Vec<_>>().join(","),
            "fields": fields.join(","),
        });
        if let Some(l) = limit { args["limit"] = json!(l); }
        if let Some(s) = sort { args["sort_fields"] = json!(s); }
        if let Some(g) = gap_min { args["band_gap_min"] = json!(g); }
        let q = schema.validate_args(&args).unwrap();
        let again = schema.validate_args(&q.to_args()).unwrap();
        prop_assert_eq!(q.resolved_url("https://x.test"), again.resolved_url("https://x.test"));
        prop_assert_eq!(q, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn supercell_scales_volume_and_sites(seed in any::<u64>(), a in 1u32..4, b in 1u32..3, c in 1u32..3) {
        let s = oracle::random_cell(&mut StdRng::seed_from_u64(seed), 3);
        let sc = make_supercell(&s, [a, b, c]).unwrap();
        let k = (a * b * c) as f64;
        prop_assert!((volume(&sc) - k * volume(&s)).abs() <= 1e-9 * volume(&sc));
        prop_assert_eq!(sc.len(), s.len() * (a * b * c) as usize);
        let mut ca = s.composition();
        for v in ca.values_mut() { *v *= (a * b * c) as usize; }
        prop_assert_eq!(sc.composition(), ca);
    }

    #[test]
    fn neighbor_list_symmetric_and_translation_invariant(seed in any::<u64>(), cutoff in 1.0..5.0f64, shift in prop::array::uniform3(-3i32..3)) {
        let s = oracle::random_cell(&mut StdRng::seed_from_u64(seed), 6);
        let nl = neighbor_list(&s, cutoff);
        for n in &nl {
            let back = [-n.image[0], -n.image[1], -n.image[2]];
            prop_assert!(nl.iter().any(|m| m.i == n.j && m.j == n.i && m.image == back && (m.distance - n.distance).abs() < 1e-9));
        }
        let moved: Vec<Site> = s.sites().iter().map(|site| {
            let mut t = site.clone();
            for (f, d) in t.frac.iter_mut().zip(shift) { *f += d as f64; }
            t
        }).collect();
        let moved = StructureDoc::new(s.lattice().clone(), moved, None).unwrap();
        let key = |doc: &StructureDoc| {
            let mut d: Vec<(usize, usize, i64)> = neighbor_list(doc, cutoff)
                .iter()
                .filter(|n| (n.distance - cutoff).abs() > 1e-9)
                .map(|n| (n.i, n.j, (n.distance * 1e8).round() as i64))
                .collect();
            d.sort();
            d
        };
        prop_assert_eq!(key(&s), key(&moved));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn neighbor_list_matches_brute_force(seed in any::<u64>(), cutoff in 0.8..6.0f64) {
        let s = oracle::random_cell(&mut StdRng::seed_from_u64(seed), 8);
        prop_assert_eq!(oracle::neighbor_mismatches(&s, cutoff, 1e-9), 0);
    }
}

struct Echo;

impl Dispatcher for Echo {
    fn describe(&self, name: &str) -> Option<ToolDescriptor> {
        (name == "echo").then(|| ToolDescriptor { name: "echo".into(), description: "echoes".into(), args: json!({}) })
    }

    fn call_tool(&self, name: &str, input: &Value, _ctx: &LoopContext<'_>) -> String {
        format!("{name}: {input}")
    }
}
