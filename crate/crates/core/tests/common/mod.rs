#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mpagent_core::gateway::{load_fixture, ReplayBackend};
use mpagent_core::react::{CollectingSink, LoopContext, LoopEvent, ReActTrace};
use mpagent_core::toolkit::{MockMaterialsServer, MpEndpoint, ToolEnv};
use mpagent_core::{AgentSystem, StepClock};

pub const MP_BASE: &str = "https://api.materialsproject.org";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn mock_server() -> MockMaterialsServer {
    MockMaterialsServer::load(MP_BASE, &fixtures().join("mp/dataset.json")).expect("dataset")
}

pub fn mock_system() -> AgentSystem {
    let env = ToolEnv::new(Arc::new(mock_server()), MpEndpoint { base_url: MP_BASE.into(), api_key: "test-key".into() });
    AgentSystem::standard(Arc::new(env)).expect("hierarchy")
}

pub fn transcripts() -> ReplayBackend {
    ReplayBackend::new(load_fixture(&fixtures().join("llm/transcripts.jsonl")).expect("fixture"))
}

pub struct Replayed {
    pub trace: ReActTrace,
    pub events: Vec<LoopEvent>,
    pub workspace: tempfile::TempDir,
}

/// Replays one recorded session against the mock API with a fresh clock.
pub fn replay(session: &str, question: &str) -> Replayed {
    let system = mock_system();
    let backend = transcripts().fork_pinned(session);
    let sink = CollectingSink::default();
    let clock = StepClock::default();
    let workspace = tempfile::tempdir().unwrap();
    let ctx = LoopContext {
        session_id: session,
        backend: &backend,
        sink: &sink,
        clock: &clock,
        workspace: Some(workspace.path()),
        depth: 0,
    };
    let trace = system.run(question, &ctx).expect("run");
    Replayed { trace, events: sink.events(), workspace }
}

pub const LITAO3_QUESTION: &str = "Get the structures of LiTaO3 from Materials Project and tell me which one is the stable phase.";
pub const STIFFEST_OXIDE_QUESTION: &str = "What's the stiffest material with the lowest formation energy in Si-O system?";

pub mod oracle {
    use std::collections::BTreeMap;

    use mpagent_core::xtal::{Lattice, Site, Species, StructureDoc};
    use rand::rngs::StdRng;
    use rand::Rng;

    /// Standard error via the pairwise form of the sample variance,
    /// Σ_{i<j} (x_i − x_j)² / (n(n − 1)).
    pub fn precision(values: &[f64]) -> Option<f64> {
        let n = values.len();
        match n {
            0 => None,
            1 => Some(0.0),
            _ => {
                let mut s = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        s += (values[i] - values[j]).powi(2);
                    }
                }
                let var = s / (n * (n - 1)) as f64;
                Some((var / n as f64).sqrt())
            }
        }
    }

    pub fn cop(p: f64) -> f64 {
        2f64.powf(-p * std::f64::consts::LOG2_E)
    }

    /// (precision, cop, confidence, scor) from per-trial values.
    pub fn scor(trials: &[Option<f64>]) -> (Option<f64>, Option<f64>, f64, f64) {
        let valid: Vec<f64> = trials.iter().flatten().copied().collect();
        let conf = valid.len() as f64 / trials.len() as f64;
        match precision(&valid) {
            Some(p) => (Some(p), Some(cop(p)), conf, cop(p) * conf),
            None => (None, None, conf, 0.0),
        }
    }

    fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    /// Skewed triclinic cell with up to `max_sites` sites; coordinates may
    /// fall outside [0, 1).
    pub fn random_cell(rng: &mut StdRng, max_sites: usize) -> StructureDoc {
        loop {
            let mut rows = [[0.0; 3]; 3];
            for (k, row) in rows.iter_mut().enumerate() {
                let len = rng.random_range(2.5..6.0);
                for (c, x) in row.iter_mut().enumerate() {
                    *x = if c == k { len } else { rng.random_range(-0.6..0.6) * len };
                }
            }
            let Ok(lattice) = Lattice::new(rows) else { continue };
            let spacing = [0, 1, 2].map(|k| {
                let v = dot(rows[0], cross(rows[1], rows[2])).abs();
                v / {
                    let c = cross(rows[(k + 1) % 3], rows[(k + 2) % 3]);
                    dot(c, c).sqrt()
                }
            });
            if spacing.iter().any(|h| *h < 1.2) {
                continue;
            }
            let n = rng.random_range(1..=max_sites);
            let sites: Vec<Site> = (0..n)
                .map(|_| {
                    let frac = [0; 3].map(|_| rng.random_range(-1.0..2.0));
                    Site::new(Species::element(["Si", "O", "Li"][rng.random_range(0..3)]).unwrap(), frac)
                })
                .collect();
            if let Ok(doc) = StructureDoc::new(lattice, sites, None) {
                return doc;
            }
        }
    }

    /// Every (i, j, image) within `cutoff`, by scanning a generous block of
    /// translations of the stored coordinates.
    pub fn neighbors(s: &StructureDoc, cutoff: f64) -> BTreeMap<(usize, usize, [i32; 3]), f64> {
        let rows = s.lattice().rows();
        let vol = dot(rows[0], cross(rows[1], rows[2])).abs();
        let reach = |k: usize| {
            let c = cross(rows[(k + 1) % 3], rows[(k + 2) % 3]);
            let h = vol / dot(c, c).sqrt();
            (cutoff / h).ceil() as i32 + 4
        };
        let r = [reach(0), reach(1), reach(2)];
        let mut out = BTreeMap::new();
        for (i, si) in s.sites().iter().enumerate() {
            for (j, sj) in s.sites().iter().enumerate() {
                for a in -r[0]..=r[0] {
                    for b in -r[1]..=r[1] {
                        for c in -r[2]..=r[2] {
                            if i == j && [a, b, c] == [0, 0, 0] {
                                continue;
                            }
                            let d = [
                                sj.frac[0] + a as f64 - si.frac[0],
                                sj.frac[1] + b as f64 - si.frac[1],
                                sj.frac[2] + c as f64 - si.frac[2],
                            ];
                            let cart = [0, 1, 2].map(|x| d[0] * rows[0][x] + d[1] * rows[1][x] + d[2] * rows[2][x]);
                            let dist = dot(cart, cart).sqrt();
                            if dist <= cutoff {
                                out.insert((i, j, [a, b, c]), dist);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Pairs present in only one list, or whose distances differ by more than
    /// `tol`. Pairs within `tol` of the cutoff are ignored on both sides.
    pub fn neighbor_mismatches(s: &StructureDoc, cutoff: f64, tol: f64) -> usize {
        let expected = neighbors(s, cutoff + tol);
        let got: BTreeMap<_, _> = mpagent_core::xtal::neighbor_list(s, cutoff + tol)
            .into_iter()
            .map(|n| ((n.i, n.j, n.image), n.distance))
            .collect();
        let near_edge = |d: f64| (d - cutoff).abs() <= tol;
        let mut bad = 0;
        for (k, d) in &expected {
            match got.get(k) {
                Some(g) if (g - d).abs() <= tol => {}
                Some(_) => bad += 1,
                None if near_edge(*d) || *d > cutoff => {}
                None => bad += 1,
            }
        }
        for (k, g) in &got {
            if !expected.contains_key(k) && !near_edge(*g) && *g <= cutoff {
                bad += 1;
            }
        }
        bad
    }
}
