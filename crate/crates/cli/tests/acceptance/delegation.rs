//! Lookup precedence, multi-hop delegation, receiver binding and cycle
//! rejection on the delegation fixture.

use axum::http::{Method, StatusCode};
use serde_json::json;
use umlpp_core::engine::{evaluate, invoke, resolve_feature};
use umlpp_core::expr::{FeatureKind, Resolution, UndefinedReason, Via};
use umlpp_core::model::KernelError;
use umlpp_core::{persist, ElementId, ProjectModel, Session, Value};

use crate::client::Client;
use crate::{fixture, Outcome};

fn load() -> ProjectModel {
    persist::load(&std::fs::read(fixture("delegation.umlpp.json")).unwrap()).unwrap().0
}

fn obj(m: &ProjectModel, name: &str) -> ElementId {
    m.object_by_name(name).unwrap_or_else(|| panic!("no object {name}")).id.clone()
}

fn eval(m: &ProjectModel, ctx: &str, src: &str) -> Result<Value, UndefinedReason> {
    evaluate(m, &obj(m, ctx), src).expect("well-typed").map_err(|u| u.reason)
}

fn call(m: &ProjectModel, ctx: &str, op: &str) -> Result<Value, UndefinedReason> {
    invoke(m, &obj(m, ctx), op, vec![]).expect("invocable").map_err(|u| u.reason)
}

fn text(s: &str) -> Result<Value, UndefinedReason> {
    Ok(Value::String(s.into()))
}

fn via(m: &ProjectModel, ctx: &str, name: &str) -> Option<Via> {
    match resolve_feature(m, &obj(m, ctx), name, FeatureKind::Attribute).outcome {
        Resolution::Found { via, .. } => Some(via),
        Resolution::NotFound { .. } => None,
    }
}

fn check(name: &str, ok: bool, failures: &mut Vec<String>) {
    if !ok {
        failures.push(name.to_owned());
    }
}

pub fn delegation_semantics() -> Outcome {
    let m = load();
    let mut failures = Vec::new();
    let mut cases = 0;
    let mut case = |name: &str, ok: bool| {
        cases += 1;
        check(name, ok, &mut failures);
    };

    let (person1, employee1) = (obj(&m, "person1"), obj(&m, "employee1"));
    case("own attribute wins over the delegate", via(&m, "employee1", "nickname") == Some(Via::Own));
    case("own attribute value", eval(&m, "employee1", "self.nickname") == text("emp"));
    case("inherited attribute wins over the delegate", via(&m, "student1", "name") == Some(Via::Inherited));
    case("inherited attribute value", eval(&m, "student1", "self.name") == text("Bo"));
    case(
        "one hop through the delegate",
        via(&m, "employee1", "name") == Some(Via::DelegateChain(vec![person1.clone()])),
    );
    case("one hop value", eval(&m, "employee1", "self.name") == text("Ada"));
    case(
        "two hops follow the bound delegates",
        via(&m, "manager1", "name") == Some(Via::DelegateChain(vec![employee1.clone(), person1.clone()])),
    );
    case("two hop value", eval(&m, "manager1", "self.name") == text("Ada"));
    case("first hop supplies what it owns", eval(&m, "manager1", "self.nickname") == text("emp"));
    case("delegated operation runs", call(&m, "manager1", "greet") == text("Hello, Ada"));
    case("self stays the receiver on a delegated call", call(&m, "employee1", "describe") == text("I am emp"));
    case("self stays the receiver two hops away", call(&m, "manager1", "describe") == text("I am emp"));
    case(
        "unbound delegate is missing-delegate",
        eval(&m, "employee2", "self.name") == Err(UndefinedReason::MissingDelegate),
    );

    let person = m.class_by_name("Person").unwrap().id.clone();
    let manager = m.class_by_name("Manager").unwrap().id.clone();
    let mut cyclic = m.clone();
    case(
        "class-level delegation cycle is rejected",
        matches!(cyclic.declare_delegation(&person, "boss", &manager), Err(KernelError::DelegationCycle(_)))
            && cyclic == m,
    );
    case(
        "class delegating to itself is rejected",
        matches!(cyclic.declare_delegation(&person, "me", &person), Err(KernelError::DelegationCycle(_))),
    );
    let student1 = obj(&m, "student1");
    case(
        "object bound as its own delegate is rejected",
        matches!(cyclic.set_delegate(&student1, "mentor", Some(&student1)), Err(KernelError::DelegateCycle(_))),
    );

    // The HTTP surface reports the same rejection and the same lookups.
    let client = Client::new(Session::new(m.clone(), vec![]));
    let (status, body) = client.call(
        Method::POST,
        &format!("/api/classes/{person}/delegations"),
        Some(&json!({ "name": "boss", "target": manager.as_str() })),
    );
    case(
        "API rejects the delegation cycle",
        status == StatusCode::UNPROCESSABLE_ENTITY && body["error"]["code"] == "DelegationCycle",
    );
    let (status, body) = client.call(
        Method::PATCH,
        &format!("/api/objects/{student1}/delegates/mentor"),
        Some(&json!({ "target": student1.as_str() })),
    );
    case(
        "API rejects the binding cycle",
        status == StatusCode::UNPROCESSABLE_ENTITY && body["error"]["code"] == "DelegateCycle",
    );
    let manager1 = obj(&m, "manager1");
    let (status, body) =
        client.call(Method::POST, &format!("/api/objects/{manager1}/invoke/greet"), Some(&json!({ "args": [] })));
    case(
        "API invoke goes through the delegates",
        status == StatusCode::OK && body["result"]["value"]["v"] == "Hello, Ada",
    );

    if failures.is_empty() {
        Ok(format!("{cases} cases"))
    } else {
        Err(format!("failed cases: {}", failures.join("; ")))
    }
}
