//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach stdout; exits non-zero on any failure.

#[path = "../../core/tests/common/mod.rs"]
mod core_common;
mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use core_common::oracle;
use mpagent_core::bench::{cop_of, precision_of, scor_of, ScorReport, TrialSet};
use mpagent_core::react::{AgentAction, EventKind, Outcome};
use mpagent_core::xtal::{
    bond_angles, bond_angles_between, bond_lengths, insert_site, make_supercell, mean, parse_structure_doc, volume,
    Species, StructureDoc,
};
use mpagent_core::StepClock;
use mpagent_service::config::Config;
use mpagent_service::runtime::Runtime;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{label} = {got}, expected {want} ± {tol}"))
}

fn timed(label: &str, limit: Duration, start: Instant) -> Result<String, String> {
    let e = start.elapsed();
    ensure(e < limit, format!("{label} took {e:?}, limit {limit:?}"))?;
    Ok(format!("{:.0} ms", e.as_secs_f64() * 1e3))
}

fn structure(name: &str) -> StructureDoc {
    let path = common::repo().join("fixtures/structures").join(name);
    parse_structure_doc(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn metric_suite() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5c0e);
    for case in 0..1000 {
        let n_trials = rng.random_range(1..=12);
        let spread = 10f64.powf(rng.random_range(-3.0..3.0));
        let center = rng.random_range(-1e3..1e3);
        let values: Vec<Option<f64>> = (0..n_trials)
            .map(|_| rng.random_bool(0.75).then(|| center + spread * rng.random_range(-1.0..1.0)))
            .collect();
        let ts = TrialSet::from_values(format!("q{case}"), &values).unwrap();
        let m = scor_of(&ts);
        let (p, c, conf, s) = oracle::scor(&values);
        let valid: Vec<f64> = values.iter().flatten().copied().collect();
        match (precision_of(&valid).ok(), p) {
            (Some(a), Some(b)) => {
                ensure((a - b).abs() <= 1e-12 * b.max(1.0), format!("case {case}: precision {a} vs {b}"))?;
                ensure((cop_of(a) - oracle::cop(b)).abs() <= 1e-12, format!("case {case}: cop"))?;
            }
            (None, None) => {}
            other => return Err(format!("case {case}: precision presence {other:?}")),
        }
        ensure(m.precision.is_some() == c.is_some(), format!("case {case}: cop presence"))?;
        ensure(m.confidence == conf, format!("case {case}: confidence"))?;
        ensure((m.scor - s).abs() <= 1e-12, format!("case {case}: scor {} vs {s}", m.scor))?;
    }
    let none = scor_of(&TrialSet::from_values("none", &[None, None, None]).unwrap());
    ensure(none.scor == 0.0 && none.precision.is_none(), "n = 0 must give SCoR 0")?;
    let same = scor_of(&TrialSet::from_values("same", &[Some(39.23); 5]).unwrap());
    ensure(same.scor == 1.0, format!("identical responses gave SCoR {}", same.scor))?;
    let t = timed("metric suite", Duration::from_secs(5), start)?;
    Ok(format!("1000 trial sets within 1e-12, boundaries exact, {t}"))
}

fn bench_runtime() -> Runtime {
    let repo = common::repo();
    let text = format!(
        "[agents]\nbackend = \"bench\"\n[backends.bench]\nkind = \"replay\"\nfixture_path = \"{}\"\n[mp]\nmock_dataset = \"{}\"\n",
        repo.join("fixtures/llm/bench.jsonl").display(),
        repo.join("fixtures/mp/dataset.json").display()
    );
    Runtime::from_config(&Config::from_toml(&text, &repo.join("bench.toml")).unwrap(), None).unwrap()
}

/// Hand-computed from the fixture responses (values read off each sentence,
/// Mbar × 100 → GPa, standard error about the mean).
const EXPECTED_ROWS: [(&str, f64, f64, f64, f64, f64); 9] = [
    ("k-Ti", 2.733605677488983, 0.06498455338949694, 1.0, 0.06498455338949694, 0.45999999999999375),
    ("k-V", 5.989904701523496, 0.002503902656941011, 0.8, 0.0020031221255528086, 0.3750000000000284),
    ("k-Cr", 2.682647945594059, 0.06838184280954898, 1.0, 0.06838184280954898, 0.13999999999995794),
    ("k-Mn", 1.920503406227994, 0.1465331778458388, 0.8, 0.11722654227667105, 3.3000000000000114),
    ("k-Fe", 3.687817782917154, 0.02502655587422858, 1.0, 0.02502655587422858, 2.0999999999999943),
    ("k-Co", 2.728809264129687, 0.06529699486977594, 1.0, 0.06529699486977594, 0.18000000000000682),
    ("k-Ni", 3.644402100025001, 0.0261370325141455, 0.8, 0.020909626011316403, 4.099999999999994),
    ("k-Cu", 3.684426685388109, 0.02511156742577924, 0.8, 0.020089253940623393, 0.20000000000001705),
    ("ef-SiO2", 0.0051528915830499145, 0.9948603617886158, 0.8, 0.7958882894308927, 0.014924999999999855),
];
const EXPECTED_MEANS: (f64, f64, f64, f64, f64) =
    // summed in query-id order, as the report aggregates
    (3.0085856060975034, 0.15764844324159677, 0.8888888888888888, 0.13108964230312295, 1.207769444444445);

fn metric_table() -> Check {
    let runtime = bench_runtime();
    let queries = mpagent_core::bench::load_queries(&common::repo().join("fixtures/bench/queries.jsonl")).unwrap();
    ensure(queries.len() == 10, format!("{} queries", queries.len()))?;
    let report = mpagent_service::bench::run(&runtime, &queries, Some(5), 1, &StepClock::default()).map_err(|e| e.to_string())?;
    for (id, p, c, conf, s, ae) in EXPECTED_ROWS {
        let m = report.per_query.get(id).ok_or(format!("{id} missing"))?;
        let got = (m.precision.unwrap_or(f64::NAN), m.cop.unwrap_or(f64::NAN), m.confidence, m.scor, m.abs_error.unwrap_or(f64::NAN));
        ensure(got == (p, c, conf, s, ae), format!("{id}: got {got:?}, expected {:?}", (p, c, conf, s, ae)))?;
    }
    let a = &report.aggregate;
    let got = (
        a.mean_precision.unwrap_or(f64::NAN),
        a.mean_cop.unwrap_or(f64::NAN),
        a.mean_confidence.unwrap_or(f64::NAN),
        a.mean_scor.unwrap_or(f64::NAN),
        a.mae.unwrap_or(f64::NAN),
    );
    ensure(got == EXPECTED_MEANS, format!("aggregate {got:?} vs {EXPECTED_MEANS:?}"))?;
    let mag = report.categorical.get("mag-Fe").ok_or("mag-Fe missing")?;
    ensure(mag.predicted.as_deref() == Some("FM") && mag.n_valid == 3, format!("mag-Fe {mag:?}"))?;

    let json = report.to_json();
    let again = ScorReport::from_json(&json).map_err(|e| e.to_string())?.to_json();
    ensure(json == again, "report JSON is not stable under a round trip")?;
    let rerun = mpagent_service::bench::run(&runtime, &queries, Some(5), 4, &StepClock::default()).map_err(|e| e.to_string())?;
    let normalize = |r: &ScorReport| {
        let mut r = r.clone();
        r.run_config.parallelism = 1;
        r.to_json()
    };
    ensure(normalize(&rerun) == normalize(&report), "parallel rerun serialized differently")?;
    Ok(format!("10 queries match exactly (mean SCoR {:.6}, MAE {:.6}); report bytes stable", EXPECTED_MEANS.3, EXPECTED_MEANS.4))
}

fn geometry_si() -> Check {
    let start = Instant::now();
    let si = structure("mp-149.json");
    let v = volume(&si);
    within("volume", v, 40.33, 0.01)?;
    let bonds = bond_lengths(&si, "Si", "Si", 2.5);
    ensure(!bonds.is_empty(), "no Si–Si bonds")?;
    let b = mean(&bonds).unwrap();
    within("mean Si–Si", b, 2.36, 0.01)?;
    let angles = bond_angles(&si, "Si", 2.5);
    ensure(angles.len() == 12, format!("{} Si–Si–Si angles", angles.len()))?;
    for a in &angles {
        within("Si–Si–Si angle", *a, 109.47, 0.05)?;
    }
    let li = insert_site(&si, Species::element("Li").unwrap(), [0.5, 0.5, 0.5]).map_err(|e| e.to_string())?;
    let li_angles = bond_angles_between(&li, "Li", "Si", 2.5);
    ensure(li_angles.len() == 15, format!("{} Si–Li–Si angles", li_angles.len()))?;
    let min = li_angles.iter().copied().fold(f64::INFINITY, f64::min);
    within("min Si–Li–Si", min, 62.96, 0.1)?;
    let t = timed("geometry", Duration::from_secs(1), start)?;
    Ok(format!("V = {v:.3} Å³, Si–Si = {b:.4} Å, angle = {:.3}°, min Si–Li–Si = {min:.3}°, {t}", angles[0]))
}

fn supercell_count() -> Check {
    let s = structure("mp-3666.json");
    let sc = make_supercell(&s, [3, 3, 3]).map_err(|e| e.to_string())?;
    ensure(sc.len() == 270, format!("{} sites", sc.len()))?;
    Ok(format!("{} × 27 = {} sites", s.len(), sc.len()))
}

fn neighbor_oracle() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x6e1b);
    let mut pairs = 0;
    for case in 0..200 {
        let s = oracle::random_cell(&mut rng, 8);
        let cutoff = rng.random_range(1.0..6.0);
        let bad = oracle::neighbor_mismatches(&s, cutoff, 1e-9);
        ensure(bad == 0, format!("cell {case}: {bad} mismatches"))?;
        pairs += mpagent_core::xtal::neighbor_list(&s, cutoff).len();
    }
    let t = timed("neighbor oracle", Duration::from_secs(30), start)?;
    Ok(format!("200 cells, {pairs} pairs, 0 mismatches, {t}"))
}

const STEP0: &str = "Error on search_materials_summary__get: `fields` must be specified in the query. Please revise arguments or try smaller request by specifying 'limit' in request.";

fn self_correction() -> Check {
    let litao3 = core_common::replay("litao3-stable", core_common::LITAO3_QUESTION);
    let expert = litao3.trace.child_traces.iter().find(|t| t.agent == "MPSummaryExpert").ok_or("no MPSummaryExpert trace")?;
    ensure(expert.steps.len() == 3, format!("{} steps", expert.steps.len()))?;
    ensure(expert.steps[0].observation.as_deref() == Some(STEP0), format!("step 0: {:?}", expert.steps[0].observation))?;
    let AgentAction::ToolCall { input, .. } = &expert.steps[1].action else {
        return Err("step 1 is not a tool call".into());
    };
    let fields = input.get("fields").and_then(|f| f.as_str()).unwrap_or("");
    ensure(!fields.trim().is_empty(), "step 1 has no fields")?;
    let oxide = core_common::replay("si-o-stiffest", core_common::STIFFEST_OXIDE_QUESTION);
    ensure(oxide.trace.child_traces.len() == 2, format!("{} child traces", oxide.trace.child_traces.len()))?;
    ensure(matches!(oxide.trace.outcome, Outcome::Answered { .. }), format!("{:?}", oxide.trace.outcome))?;
    Ok(format!("3-step correction (fields = {fields:?}); supervisor: 2 children, answered"))
}

fn determinism() -> Check {
    for (session, q) in [("litao3-stable", core_common::LITAO3_QUESTION), ("si-o-stiffest", core_common::STIFFEST_OXIDE_QUESTION)] {
        let a = core_common::replay(session, q);
        let b = core_common::replay(session, q);
        ensure(a.trace.to_json() == b.trace.to_json(), format!("{session}: traces differ"))?;
        let ea = serde_json::to_string(&a.events).unwrap();
        let eb = serde_json::to_string(&b.events).unwrap();
        ensure(ea == eb, format!("{session}: event streams differ"))?;
    }
    Ok("traces and event streams byte-identical across replays".into())
}

async fn concurrent_sessions(app: &common::TestApp) -> Result<usize, String> {
    let mut tasks = Vec::new();
    for i in 0..8 {
        let router = app.router.clone();
        tasks.push(tokio::spawn(async move {
            let id = common::create_session(&router).await;
            let (q, pin) = if i % 2 == 0 {
                (common::STIFFEST_OXIDE_QUESTION, "si-o-stiffest")
            } else {
                (common::LITAO3_QUESTION, "litao3-stable")
            };
            let mut all = common::post_and_collect(&router, &id, q, pin).await;
            all.extend(common::post_and_collect(&router, &id, q, pin).await);
            (id, all)
        }));
    }
    let mut total = 0;
    for t in tasks {
        let (id, events) = t.await.map_err(|e| e.to_string())?;
        ensure(events.iter().all(|e| e.session_id == id), "foreign event in stream")?;
        ensure(events.iter().enumerate().all(|(i, e)| e.seq == i as u64), format!("{id}: seq gap"))?;
        let terminals: Vec<usize> =
            events.iter().enumerate().filter(|(_, e)| e.kind.is_terminal()).map(|(i, _)| i).collect();
        ensure(terminals.len() == 2, format!("{id}: {} terminal events over 2 messages", terminals.len()))?;
        ensure(terminals[1] == events.len() - 1, "stream does not end with its terminal event")?;
        ensure(events[terminals[0]].kind == EventKind::Final, "first message did not finish with final")?;
        total += events.len();
    }
    Ok(total)
}

const PIECES: [&str; 24] = [
    "..", ".", "...", "%2e%2e", "%2E%2E", "%2e", "..%2f", "%2f", "%2F..", "%5c", "..%5c..", "%00", "mp-3666.json",
    "log.jsonl", "workspace", "secret.txt", "out-link", "etc", "passwd", "~", "sub", "a b", "%252e%252e", "mp-3666.json%00",
];

async fn traversal_fuzz(app: &common::TestApp) -> Result<(usize, usize), String> {
    let id = common::create_session(&app.router).await;
    common::post_and_collect(&app.router, &id, common::LITAO3_QUESTION, "litao3-stable").await;
    let root = app.state.store.root().to_path_buf();
    let workspace = root.join(&id).join("workspace");
    std::fs::write(root.join("secret.txt"), "TOP-SECRET root").unwrap();
    std::fs::write(root.join(&id).join("secret.txt"), "TOP-SECRET session").unwrap();
    #[cfg(unix)]
    std::os::unix::fs::symlink(root.join("secret.txt"), workspace.join("out-link")).unwrap();
    let inside: Vec<Vec<u8>> = std::fs::read_dir(&workspace)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (!p.is_symlink() && p.is_file()).then(|| std::fs::read(p).unwrap())
        })
        .collect();

    let mut rng = StdRng::seed_from_u64(0x7a7a);
    let (mut escapes, mut served) = (0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(1..=5);
        let mut path = String::new();
        if rng.random_bool(0.1) {
            path.push('/');
        }
        for k in 0..n {
            if k > 0 {
                path.push_str(["/", "//", "%2f", "\\"][rng.random_range(0..4)]);
            }
            path.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        }
        // the store sees raw names too, not just what survives URL decoding
        if let Ok(p) = app.state.store.workspace_file(id.parse().unwrap(), &path) {
            if !p.starts_with(workspace.canonicalize().unwrap()) {
                escapes += 1;
            }
        }
        let uri = format!("/api/sessions/{id}/files/{}", path.replace('\\', "%5c").replace(' ', "%20"));
        let Ok(req) = Request::get(&uri).body(Body::empty()) else { continue };
        let (status, body) = common::call(&app.router, req).await;
        if status == StatusCode::OK {
            served += 1;
            if !inside.contains(&body) || body.windows(10).any(|w| w == b"TOP-SECRET") {
                escapes += 1;
            }
        }
    }
    ensure(served > 0, "fuzz never hit a legitimate file")?;
    Ok((escapes, served))
}

fn service() -> Check {
    let start = Instant::now();
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    rt.block_on(async {
        let app = common::replay_app();
        let total = concurrent_sessions(&app).await?;
        let (escapes, served) = traversal_fuzz(&app).await?;
        ensure(escapes == 0, format!("{escapes} traversal escapes"))?;
        ensure(app.llm.attempts() == 0, "replay touched the LLM transport")?;
        Ok(format!(
            "8 concurrent sessions, {total} events gap-free, 1 terminal per message; 1000 fuzzed paths, {served} served, 0 escapes, {:.0} ms",
            start.elapsed().as_secs_f64() * 1e3
        ))
    })
}

fn main() {
    // keep relative paths in fixtures meaningful regardless of cwd
    let _ = std::env::set_current_dir(Path::new(env!("CARGO_MANIFEST_DIR")));
    let criteria: [(&str, Criterion); 8] = [
        ("metric suite vs brute-force oracle", metric_suite),
        ("metric table round-trip", metric_table),
        ("geometry on mp-149", geometry_si),
        ("mp-3666 x (3,3,3) supercell", supercell_count),
        ("neighbor-list oracle", neighbor_oracle),
        ("self-correction replay", self_correction),
        ("replay determinism", determinism),
        ("service streams and confinement", service),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or("panic".into()))
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
