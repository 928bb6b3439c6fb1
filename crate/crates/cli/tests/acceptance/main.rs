//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod client;
mod delegation;
mod edits;
mod expr_oracle;
mod multiplicity;
mod persistence;
mod rename;
mod sweep;

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use umlpp_core::{engine, persist, Value};

/// What a criterion reports on success; failures carry the first mismatch.
pub type Outcome = Result<String, String>;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn cinema_check() -> Outcome {
    let path = fixture("cinema.umlpp.json");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_umlpp")).arg("check").arg(&path).output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if out.status.code() != Some(1) {
        return Err(format!("exit status {:?}", out.status.code()));
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    if lines.len() != 1 {
        return Err(format!("expected one line, got {lines:?}"));
    }

    let (model, _) = persist::load(&std::fs::read(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let ticket = model.class_by_name("Ticket").ok_or("no Ticket class")?;
    let [constraint] = ticket.constraints.as_slice() else { return Err("Ticket needs exactly one constraint".into()) };
    let ticket2 = model.object_by_name("ticket2").ok_or("no ticket2")?;
    let message = match engine::evaluate(&model, &ticket2.id, &constraint.message) {
        Ok(Ok(Value::String(s))) => s,
        other => return Err(format!("message expression gave {other:?}")),
    };
    let expected = format!("VIOLATED ticket2 Ticket.{}: {message}", constraint.name);
    if lines[0] != expected {
        return Err(format!("got {:?}, want {expected:?}", lines[0]));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{expected:?} in {elapsed:.0?}"))
}

type Criterion = (u8, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "cinema fixture check", cinema_check),
        (2, "report equivalence", sweep::report_equivalence),
        (3, "slot completeness", sweep::slot_completeness),
        (4, "rename safety", rename::rename_safety),
        (5, "evaluator oracle", expr_oracle::evaluator_oracle),
        (6, "multiplicity oracle", multiplicity::multiplicity_oracle),
        (7, "delegation semantics", delegation::delegation_semantics),
        (8, "persistence round-trip", persistence::round_trip),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail}; {elapsed:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({detail}; {elapsed:.2?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
