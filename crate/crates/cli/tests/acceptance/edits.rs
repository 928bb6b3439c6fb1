//! Random API edits chosen from the current project document.
//!
//! Edits are drawn from what exists, so most succeed, but a share of them
//! is deliberately invalid (name clashes, wrong types, dangling ids) to
//! exercise the rejection path too.

use axum::http::Method;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub struct Edit {
    pub method: Method,
    pub uri: String,
    pub body: Value,
}

fn edit(method: Method, uri: impl Into<String>, body: Value) -> Edit {
    Edit { method, uri: uri.into(), body }
}

fn arr<'a>(v: &'a Value, key: &str) -> &'a [Value] {
    v[key].as_array().map_or(&[], Vec::as_slice)
}

fn id(v: &Value) -> &str {
    v["id"].as_str().expect("element id")
}

pub fn class<'a>(doc: &'a Value, cid: &str) -> Option<&'a Value> {
    arr(doc, "classes").iter().find(|c| id(c) == cid)
}

/// Root-first superclass chain, computed from the document alone.
pub fn lineage<'a>(doc: &'a Value, cid: &str) -> Vec<&'a Value> {
    let mut chain = Vec::new();
    let mut cur = class(doc, cid);
    while let Some(c) = cur {
        if chain.iter().any(|seen: &&Value| id(seen) == id(c)) {
            break;
        }
        chain.push(c);
        cur = c["superclass"].as_str().and_then(|s| class(doc, s));
    }
    chain.reverse();
    chain
}

pub fn conforms(doc: &Value, sub: &str, sup: &str) -> bool {
    lineage(doc, sub).iter().any(|c| id(c) == sup)
}

pub fn effective_attributes<'a>(doc: &'a Value, cid: &str) -> Vec<&'a Value> {
    lineage(doc, cid).into_iter().flat_map(|c| arr(c, "attributes")).collect()
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> Option<&'a T> {
    items.choose(rng)
}

fn random_value(rng: &mut ChaCha8Rng, doc: &Value, ty: &Value) -> Value {
    match ty.as_str() {
        Some("Integer") => json!({ "kind": "integer", "v": rng.gen_range(-5..=5) }),
        Some("Float") => json!({ "kind": "float", "v": f64::from(rng.gen_range(-8..=8)) / 4.0 }),
        Some("String") => json!({ "kind": "string", "v": format!("s{}", rng.gen_range(0..5)) }),
        Some("Boolean") => json!({ "kind": "boolean", "v": rng.gen_bool(0.5) }),
        Some("Date") => {
            json!({ "kind": "date", "v": format!("2024-0{}-1{}", rng.gen_range(1..=9), rng.gen_range(0..=9)) })
        }
        Some("MonetaryValue") => {
            let cents: i64 = rng.gen_range(-300..=3000);
            let cur = if rng.gen_bool(0.1) { "USD" } else { "EUR" };
            let sign = if cents < 0 { "-" } else { "" };
            json!({ "kind": "monetary", "amount": format!("{sign}{}.{:02}", cents.abs() / 100, cents.abs() % 100), "currency": cur })
        }
        _ => {
            if let Some(eid) = ty["enumeration"].as_str() {
                let lits = arr(doc, "enumerations").iter().find(|e| id(e) == eid).map(|e| arr(e, "literals"));
                let lit = lits.and_then(|l| pick(rng, l)).cloned().unwrap_or(json!("X"));
                json!({ "kind": "enum", "enumeration": eid, "literal": lit })
            } else {
                let target = ty["class"].as_str().unwrap_or("");
                let fits: Vec<&Value> = arr(doc, "objects")
                    .iter()
                    .filter(|o| conforms(doc, o["class"].as_str().unwrap(), target))
                    .collect();
                let obj = if rng.gen_bool(0.9) { pick(rng, &fits).copied() } else { pick(rng, arr(doc, "objects")) };
                json!({ "kind": "ref", "object": obj.map_or("o0", id) })
            }
        }
    }
}

fn random_type(rng: &mut ChaCha8Rng, doc: &Value) -> Value {
    match rng.gen_range(0..10) {
        0..=3 => json!("Integer"),
        4 => json!("Float"),
        5 => json!("String"),
        6 => json!("Boolean"),
        7 => json!("MonetaryValue"),
        8 => match pick(rng, arr(doc, "enumerations")) {
            Some(e) => json!({ "enumeration": id(e) }),
            None => json!("Date"),
        },
        _ => match pick(rng, arr(doc, "classes")) {
            Some(c) => json!({ "class": id(c) }),
            None => json!("Integer"),
        },
    }
}

fn typed_attrs<'a>(doc: &'a Value, cid: &str, ty: &str) -> Vec<&'a Value> {
    effective_attributes(doc, cid).into_iter().filter(|a| a["type"] == ty).collect()
}

/// Roles navigable from `cid` with their far-end multiplicity.
fn roles(doc: &Value, cid: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for a in arr(doc, "associations") {
        let ends = arr(a, "ends");
        for from in 0..2 {
            if conforms(doc, cid, ends[from]["class"].as_str().unwrap()) {
                let to = &ends[1 - from];
                out.push((to["role"].as_str().unwrap().to_owned(), to["multiplicity"].as_str().unwrap().to_owned()));
            }
        }
    }
    out
}

const MULTIPLICITIES: [&str; 6] = ["0..1", "1", "*", "1..*", "0..2", "2..3"];

pub fn random_edit(rng: &mut ChaCha8Rng, doc: &Value) -> Edit {
    let classes = arr(doc, "classes");
    let objects = arr(doc, "objects");
    let assocs = arr(doc, "associations");
    let links = arr(doc, "links");
    let choice = rng.gen_range(0..40);
    let create_class = |rng: &mut ChaCha8Rng| {
        let mut body = json!({ "name": format!("C{}", rng.gen_range(0..8)), "abstract": rng.gen_bool(0.1) });
        if rng.gen_bool(0.3) {
            if let Some(c) = pick(rng, classes) {
                body["superclass"] = json!(id(c));
            }
        }
        edit(Method::POST, "/api/classes", body)
    };
    if classes.is_empty() {
        return create_class(rng);
    }
    let c = pick(rng, classes).unwrap();
    let cid = id(c);
    let cname = c["name"].as_str().unwrap();
    match choice {
        0..=2 => create_class(rng),
        3..=7 => {
            let name = format!("f{}", rng.gen_range(0..8));
            let mut body = json!({ "name": name, "type": random_type(rng, doc) });
            if rng.gen_bool(0.2) {
                let ints = typed_attrs(doc, cid, "Integer");
                let multi: Vec<_> = roles(doc, cid).into_iter().filter(|(_, m)| m != "1" && m != "0..1").collect();
                body["type"] = json!("Integer");
                body["derivation"] = json!(match (pick(rng, &ints), pick(rng, &multi)) {
                    (Some(a), _) if rng.gen_bool(0.6) => format!("self.{} * 2", a["name"].as_str().unwrap()),
                    (_, Some((role, _))) => format!("self.{role}->size()"),
                    _ => "1 + 1".to_owned(),
                });
            }
            edit(Method::POST, format!("/api/classes/{cid}/attributes"), body)
        }
        8..=9 => {
            let ints = typed_attrs(doc, cid, "Integer");
            let money = typed_attrs(doc, cid, "MonetaryValue");
            let multi: Vec<_> = roles(doc, cid).into_iter().filter(|(_, m)| m != "1" && m != "0..1").collect();
            let k = rng.gen_range(-2..=3);
            let (body, message) = match rng.gen_range(0..3) {
                0 if !money.is_empty() => {
                    let m = pick(rng, &money).unwrap()["name"].as_str().unwrap();
                    (format!("self.{m} > 0.00 EUR"), format!("'{cname} {m} is ' + self.{m}.toString()"))
                }
                1 if !multi.is_empty() => {
                    let (r, _) = pick(rng, &multi).unwrap();
                    (format!("self.{r}->size() < 3"), format!("'too many {r}'"))
                }
                _ => match pick(rng, &ints) {
                    Some(a) => {
                        let a = a["name"].as_str().unwrap();
                        (format!("self.{a} > {k}"), format!("'{a} = ' + self.{a}.toString()"))
                    }
                    None => (format!("{cname}.allInstances()->size() < 3"), "'crowded'".to_owned()),
                },
            };
            let name = format!("k{}", rng.gen_range(0..6));
            edit(
                Method::POST,
                format!("/api/classes/{cid}/constraints"),
                json!({ "name": name, "body": body, "message": message }),
            )
        }
        10 => {
            let ints = typed_attrs(doc, cid, "Integer");
            let body = match pick(rng, &ints) {
                Some(a) => format!("self.{} + 1", a["name"].as_str().unwrap()),
                None => "7".to_owned(),
            };
            let name = format!("op{}", rng.gen_range(0..4));
            edit(
                Method::POST,
                format!("/api/classes/{cid}/operations"),
                json!({ "name": name, "returnType": "Integer", "body": body, "monitored": rng.gen_bool(0.8) }),
            )
        }
        11..=15 => {
            let mut body = json!({ "class": cid });
            if rng.gen_bool(0.3) {
                body["diagram"] = json!("main");
                body["x"] = json!(rng.gen_range(0..500));
                body["y"] = json!(rng.gen_range(0..500));
            }
            edit(Method::POST, "/api/objects", body)
        }
        16..=23 if !objects.is_empty() => {
            let o = pick(rng, objects).unwrap();
            let attrs = effective_attributes(doc, o["class"].as_str().unwrap());
            let Some(a) = pick(rng, &attrs) else { return create_class(rng) };
            let name = a["name"].as_str().unwrap();
            let body = if rng.gen_bool(0.15) {
                json!({ "clear": true })
            } else if rng.gen_bool(0.05) {
                json!({ "set": { "kind": "string", "v": "wrong" } })
            } else {
                json!({ "set": random_value(rng, doc, &a["type"]) })
            };
            edit(Method::PATCH, format!("/api/objects/{}/slots/{name}", id(o)), body)
        }
        24..=25 => {
            let other = pick(rng, classes).unwrap();
            let body = json!({
                "name": format!("R{}", rng.gen_range(0..5)),
                "ends": [
                    { "class": cid, "role": format!("r{}", rng.gen_range(0..8)), "multiplicity": *pick(rng, &MULTIPLICITIES).unwrap() },
                    { "class": id(other), "role": format!("r{}", rng.gen_range(0..8)), "multiplicity": *pick(rng, &MULTIPLICITIES).unwrap() },
                ],
            });
            edit(Method::POST, "/api/associations", body)
        }
        26..=29 if !assocs.is_empty() && !objects.is_empty() => {
            let a = pick(rng, assocs).unwrap();
            let ends = arr(a, "ends");
            let end = |k: usize, rng: &mut ChaCha8Rng| {
                let fits: Vec<&Value> = objects
                    .iter()
                    .filter(|o| conforms(doc, o["class"].as_str().unwrap(), ends[k]["class"].as_str().unwrap()))
                    .collect();
                let o = if rng.gen_bool(0.9) { pick(rng, &fits).copied() } else { None };
                o.unwrap_or_else(|| pick(rng, objects).unwrap())
            };
            let (e1, e2) = (end(0, rng), end(1, rng));
            edit(Method::POST, "/api/links", json!({ "association": id(a), "end1": id(e1), "end2": id(e2) }))
        }
        30 if !links.is_empty() => {
            edit(Method::DELETE, format!("/api/links/{}", id(pick(rng, links).unwrap())), json!(null))
        }
        31 if !objects.is_empty() => {
            edit(Method::DELETE, format!("/api/objects/{}", id(pick(rng, objects).unwrap())), json!(null))
        }
        32 => match pick(rng, arr(c, "attributes")) {
            Some(a) if rng.gen_bool(0.5) => {
                edit(Method::DELETE, format!("/api/classes/{cid}/attributes/{}", id(a)), json!(null))
            }
            Some(a) => edit(
                Method::PATCH,
                format!("/api/classes/{cid}/attributes/{}", id(a)),
                json!({ "type": if rng.gen_bool(0.5) { "Float" } else { "String" } }),
            ),
            None => create_class(rng),
        },
        33 => {
            edit(Method::PATCH, format!("/api/classes/{cid}"), json!({ "name": format!("C{}", rng.gen_range(0..12)) }))
        }
        34 => {
            let sup = pick(rng, classes).map(id);
            let body = if rng.gen_bool(0.3) { json!({ "superclass": null }) } else { json!({ "superclass": sup }) };
            edit(Method::PATCH, format!("/api/classes/{cid}"), body)
        }
        35 => edit(Method::DELETE, format!("/api/classes/{cid}"), json!(null)),
        36 if !assocs.is_empty() => {
            let a = pick(rng, assocs).unwrap();
            let m = *pick(rng, &MULTIPLICITIES).unwrap();
            let ends =
                if rng.gen_bool(0.5) { json!([{ "multiplicity": m }, {}]) } else { json!([{}, { "multiplicity": m }]) };
            edit(Method::PATCH, format!("/api/associations/{}", id(a)), json!({ "ends": ends }))
        }
        37 => {
            let name = format!("E{}", rng.gen_range(0..3));
            let n = rng.gen_range(1..=3);
            let literals: Vec<String> = (0..n).map(|i| format!("L{i}")).collect();
            edit(Method::POST, "/api/enumerations", json!({ "name": name, "literals": literals }))
        }
        38 if !objects.is_empty() => {
            let el = if rng.gen_bool(0.5) { id(pick(rng, objects).unwrap()) } else { cid };
            let diagram = if rng.gen_bool(0.7) { "main" } else { "alt" };
            edit(
                Method::PATCH,
                format!("/api/diagrams/{diagram}/nodes/{el}"),
                json!({ "x": rng.gen_range(-50..900), "y": rng.gen_range(-50..900) }),
            )
        }
        39 => {
            let fresh = ["S0", "S1", "S2"].choose(rng).unwrap();
            edit(Method::PATCH, "/api/project", json!({ "name": fresh }))
        }
        _ => create_class(rng),
    }
}
