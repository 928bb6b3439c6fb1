//! Renames through the API must not change which constraints hold on
//! which objects.

use axum::http::{Method, StatusCode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use umlpp_core::model::{AssociationEnd, Multiplicity, SlotAction};
use umlpp_core::{DataType, ElementId, Money, ProjectModel, Session, TypeRef};

use crate::client::Client;
use crate::Outcome;

const RENAMES: usize = 200;

fn data(d: DataType) -> TypeRef {
    TypeRef::Data(d)
}

fn shop_project(rng: &mut ChaCha8Rng) -> Session {
    let mut session = Session::new(ProjectModel::new("Shop"), vec![]);
    session
        .apply("setup", &[], |m| {
            let shop = m.create_class("Shop", false, None)?.id;
            let order = m.create_class("Order", false, None)?.id;
            let rush = m.create_class("RushOrder", false, Some(&order))?.id;
            m.add_attribute(&shop, "budget", data(DataType::Integer), None)?;
            m.add_attribute(&shop, "limit", data(DataType::Integer), None)?;
            m.add_attribute(&order, "qty", data(DataType::Integer), None)?;
            m.add_attribute(&order, "price", data(DataType::MonetaryValue), None)?;
            m.add_attribute(&order, "cost", data(DataType::MonetaryValue), Some("self.price * self.qty"))?;
            m.add_attribute(&rush, "fee", data(DataType::Integer), None)?;
            let places = m.create_association(
                "Places",
                AssociationEnd { class: shop.clone(), role: "shop".into(), multiplicity: Multiplicity::OPTIONAL },
                AssociationEnd { class: order.clone(), role: "orders".into(), multiplicity: Multiplicity::MANY },
            )?;
            m.add_attribute(&shop, "total", data(DataType::Integer), Some("self.orders->collect(o | o.qty)->sum()"))?;
            m.add_constraint(
                &shop,
                "withinBudget",
                "self.total <= self.budget",
                "'Shop over budget: ' + self.total.toString()",
            )?;
            m.add_constraint(&shop, "fewOrders", "self.orders->size() <= self.limit", "'Shop has too many orders'")?;
            m.add_constraint(&shop, "allPositive", "self.orders->forAll(o | o.qty > 0)", "'Shop has an empty order'")?;
            m.add_constraint(&order, "positive", "self.qty > 0", "'Order qty ' + self.qty.toString()")?;
            m.add_constraint(&order, "affordable", "self.cost < 100.00 EUR", "'Order costs ' + self.cost.toString()")?;
            m.add_constraint(&order, "placed", "self.shop.budget > 0", "'Order shop has no budget'")?;
            m.add_constraint(&rush, "feeBelowQty", "self.fee < self.qty", "'RushOrder fee too high'")?;

            let int = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| {
                if rng.gen_bool(0.15) {
                    SlotAction::Clear
                } else {
                    SlotAction::Set(umlpp_core::Value::Integer(rng.gen_range(lo..=hi)))
                }
            };
            let shops: Vec<ElementId> = (0..rng.gen_range(1..=3))
                .map(|i| m.instantiate(&shop, &format!("shop{i}")).map(|o| o.id))
                .collect::<Result<_, _>>()?;
            for s in &shops {
                m.set_slot(s, "budget", int(rng, 0, 30))?;
                m.set_slot(s, "limit", int(rng, 0, 4))?;
            }
            for i in 0..rng.gen_range(1..=6) {
                let class = if rng.gen_bool(0.3) { &rush } else { &order };
                let o = m.instantiate(class, &format!("order{i}"))?.id;
                m.set_slot(&o, "qty", int(rng, -1, 9))?;
                if rng.gen_bool(0.85) {
                    let price = Money::new(rng.gen_range(-100..4000), 2, "EUR").expect("valid money");
                    m.set_slot(&o, "price", SlotAction::Set(umlpp_core::Value::Monetary(price)))?;
                }
                if class == &rush {
                    m.set_slot(&o, "fee", int(rng, 0, 5))?;
                }
                if rng.gen_bool(0.8) {
                    let s = shops.choose(rng).expect("at least one shop");
                    m.create_link(&places.id, s, &o)?;
                }
            }
            Ok(())
        })
        .expect("shop project builds");
    session
}

/// (constraint, object, status) triples of constraint entries, sorted.
fn constraint_multiset(report: &Value) -> Vec<(String, String, String)> {
    let mut out: Vec<_> = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["source"]["kind"] == "constraint")
        .map(|e| {
            (
                e["source"]["constraint"].as_str().unwrap().to_owned(),
                e["object"].as_str().unwrap().to_owned(),
                e["status"].as_str().unwrap().to_owned(),
            )
        })
        .collect();
    out.sort();
    out
}

fn fresh_name(rng: &mut ChaCha8Rng, capital: bool) -> String {
    let stem: String = (0..rng.gen_range(2..6)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
    let first = if capital { "Nx" } else { "nx" };
    format!("{first}{stem}")
}

fn random_rename(rng: &mut ChaCha8Rng, doc: &Value) -> (String, Value) {
    let classes = doc["classes"].as_array().unwrap();
    let assoc = &doc["associations"][0];
    match rng.gen_range(0..4) {
        0 => {
            let c = classes.choose(rng).unwrap();
            (format!("/api/classes/{}", c["id"].as_str().unwrap()), json!({ "name": fresh_name(rng, true) }))
        }
        1 => {
            let c = classes.choose(rng).unwrap();
            let a = c["attributes"].as_array().unwrap().choose(rng).unwrap();
            let uri = format!("/api/classes/{}/attributes/{}", c["id"].as_str().unwrap(), a["id"].as_str().unwrap());
            (uri, json!({ "name": fresh_name(rng, false) }))
        }
        2 => {
            let role = json!({ "role": fresh_name(rng, false) });
            let ends = if rng.gen_bool(0.5) { json!([role, {}]) } else { json!([{}, role]) };
            (format!("/api/associations/{}", assoc["id"].as_str().unwrap()), json!({ "ends": ends }))
        }
        _ => (format!("/api/associations/{}", assoc["id"].as_str().unwrap()), json!({ "name": fresh_name(rng, true) })),
    }
}

pub fn rename_safety() -> Outcome {
    let mut done = 0;
    let mut rewritten = 0;
    let mut violated = 0;
    let mut seed = 0u64;
    while done < RENAMES {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        seed += 1;
        let client = Client::new(shop_project(&mut rng));
        let mut before = constraint_multiset(&client.get("/api/report")["report"]);
        violated += before.iter().filter(|t| t.2 == "violated").count();
        for _ in 0..5 {
            let doc = client.get("/api/project");
            let (uri, body) = random_rename(&mut rng, &doc);
            let (status, resp) = client.call(Method::PATCH, &uri, Some(&body));
            if status == StatusCode::CONFLICT {
                continue;
            }
            if status != StatusCode::OK {
                return Err(format!("PATCH {uri} {body} failed with {status}: {resp}"));
            }
            let after = constraint_multiset(&resp["report"]);
            if after != before {
                return Err(format!(
                    "PATCH {uri} {body} changed constraint results:\n  before {before:?}\n  after  {after:?}"
                ));
            }
            let result = &resp["result"];
            rewritten += result["rewritten"]
                .as_array()
                .or_else(|| result["migration"]["rewritten"].as_array())
                .map_or(0, Vec::len);
            before = after;
            done += 1;
            if done == RENAMES {
                break;
            }
        }
    }
    Ok(format!("{done} renames over {seed} projects, {rewritten} expressions rewritten, {violated} violations tracked"))
}
