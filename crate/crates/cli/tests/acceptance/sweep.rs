//! Randomized mutation sequences through the HTTP API. After every request
//! the piggybacked report is compared against a sweep over a model rebuilt
//! from the saved document, and every object's slot keys are compared
//! against the effective attributes computed from the document.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use umlpp_core::engine::{full_report, recompute_derived};
use umlpp_core::persist::{self, export_report, monitors_to_json, parse_report_json, report_to_json, ReportFormat};
use umlpp_core::{ProjectModel, Session};

use crate::client::Client;
use crate::edits::{effective_attributes, random_edit};
use crate::{fixture, Outcome};

const SEQUENCES: u64 = 1000;
const LIMIT: Duration = Duration::from_secs(30);

struct Run {
    elapsed: Duration,
    /// Time spent inside the mutation requests themselves.
    in_requests: Duration,
    mutations: usize,
    rejected: usize,
    objects_checked: usize,
    report_failure: Option<String>,
    slot_failure: Option<String>,
}

fn base_session(seed: u64) -> Session {
    let file = match seed % 3 {
        0 => return Session::new(ProjectModel::new("Random"), vec![]),
        1 => "cinema.umlpp.json",
        _ => "delegation.umlpp.json",
    };
    Session::load(&std::fs::read(fixture(file)).expect("fixture")).expect("fixture loads")
}

fn slot_mismatch(doc: &Value) -> Option<String> {
    for o in doc["objects"].as_array().into_iter().flatten() {
        let class = o["class"].as_str().unwrap();
        let want: BTreeSet<&str> = effective_attributes(doc, class).iter().map(|a| a["id"].as_str().unwrap()).collect();
        let have: BTreeSet<&str> = o["slots"].as_object().unwrap().keys().map(String::as_str).collect();
        if want != have {
            return Some(format!("object {} has slots {have:?}, effective attributes {want:?}", o["id"]));
        }
    }
    None
}

/// Compares the response to a sweep over the reloaded snapshot.
fn report_mismatch(client: &Client, resp: &Value) -> Option<String> {
    let snapshot = client.state.snapshot();
    let (mut model, _) = match persist::load(snapshot.save().as_bytes()) {
        Ok(m) => m,
        Err(e) => return Some(format!("saved snapshot does not load: {e}")),
    };
    let revision = resp["revision"].as_u64().unwrap();
    let (report, monitors) = full_report(&model, revision);

    let want = serde_json::to_string(&report_to_json(&report)).unwrap();
    let have = serde_json::to_string(&resp["report"]).unwrap();
    if want != have {
        return Some(format!("report differs at revision {revision}:\n  piggybacked {have}\n  sweep        {want}"));
    }
    let want_m = serde_json::to_string(&monitors_to_json(&monitors)).unwrap();
    let have_m = serde_json::to_string(&resp["monitors"]).unwrap();
    if want_m != have_m {
        return Some(format!("monitors differ at revision {revision}:\n  {have_m}\n  {want_m}"));
    }
    let parsed = parse_report_json(&have).expect("report parses");
    for format in [ReportFormat::Text, ReportFormat::Json] {
        if export_report(&parsed, format) != export_report(&report, format) {
            return Some(format!("{format:?} export differs at revision {revision}"));
        }
    }

    let stored = model.clone();
    recompute_derived(&mut model);
    if model != stored {
        return Some(format!("stored derived slots are stale at revision {revision}"));
    }
    None
}

fn run_sequence(seed: u64, run: &mut Run) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let client = Client::new(base_session(seed));
    let len = rng.gen_range(4..=16);
    let mut current = client.get("/api/report");
    for step in 0..len {
        let doc = client.get("/api/project");
        let edit = random_edit(&mut rng, &doc);
        let body = (!edit.body.is_null()).then_some(&edit.body);
        let sent = Instant::now();
        let (status, resp) = client.call(edit.method.clone(), &edit.uri, body);
        run.in_requests += sent.elapsed();
        let at = format!("seed {seed} step {step}: {} {} {}", edit.method, edit.uri, edit.body);
        let after = client.get("/api/report");
        if status == StatusCode::OK {
            run.mutations += 1;
            let prev = current["revision"].as_u64().unwrap();
            if resp["revision"].as_u64() != Some(prev + 1) {
                return Err(format!("{at}: revision {} after {prev}", resp["revision"]));
            }
            if after["report"] != resp["report"]
                || after["monitors"] != resp["monitors"]
                || after["revision"] != resp["revision"]
            {
                return Err(format!("{at}: GET /api/report disagrees with the response"));
            }
            if let Some(e) = report_mismatch(&client, &resp) {
                run.report_failure.get_or_insert(format!("{at}: {e}"));
            }
        } else {
            run.rejected += 1;
            if resp["error"]["code"].as_str().is_none() {
                return Err(format!("{at}: {status} without an error body: {resp}"));
            }
            if after != current || client.get("/api/project") != doc {
                return Err(format!("{at}: rejected request ({status}) changed state"));
            }
        }
        let doc = client.get("/api/project");
        run.objects_checked += doc["objects"].as_array().map_or(0, Vec::len);
        if let Some(e) = slot_mismatch(&doc) {
            run.slot_failure.get_or_insert(format!("{at}: {e}"));
        }
        current = after;
        if run.report_failure.is_some() && run.slot_failure.is_some() {
            break;
        }
    }
    Ok(())
}

fn run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let mut run = Run {
            elapsed: Duration::ZERO,
            in_requests: Duration::ZERO,
            mutations: 0,
            rejected: 0,
            objects_checked: 0,
            report_failure: None,
            slot_failure: None,
        };
        for seed in 0..SEQUENCES {
            if let Err(e) = run_sequence(seed, &mut run) {
                run.report_failure.get_or_insert(e);
            }
        }
        run.elapsed = start.elapsed();
        run
    })
}

pub fn report_equivalence() -> Outcome {
    let run = run();
    if let Some(e) = &run.report_failure {
        return Err(e.clone());
    }
    if run.in_requests >= LIMIT {
        return Err(format!("{SEQUENCES} sequences took {:.2?} in requests", run.in_requests));
    }
    Ok(format!(
        "{SEQUENCES} sequences, {} committed mutations identical to the sweep, {} rejected without effect, \
         {:.2?} in requests, {:.2?} including verification",
        run.mutations, run.rejected, run.in_requests, run.elapsed
    ))
}

pub fn slot_completeness() -> Outcome {
    let run = run();
    match &run.slot_failure {
        Some(e) => Err(e.clone()),
        None => Ok(format!("{} object states checked", run.objects_checked)),
    }
}
