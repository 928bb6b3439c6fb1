//! Random link configurations checked against a nested-loop bound count
//! over the saved document.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use umlpp_core::engine::{check_multiplicities, full_report, ViolationSource};
use umlpp_core::model::{AssociationEnd, Multiplicity};
use umlpp_core::persist::{document_json, DiagramLayout};
use umlpp_core::{ElementId, ProjectModel};

use crate::edits::conforms;
use crate::Outcome;

const CONFIGURATIONS: u64 = 300;

type Finding = (String, String, usize, usize);

fn random_model(rng: &mut ChaCha8Rng) -> ProjectModel {
    let mut m = ProjectModel::new("Links");
    let p = m.create_class("P", false, None).unwrap().id;
    let q = m.create_class("Q", false, None).unwrap().id;
    let s = m.create_class("S", false, Some(&q)).unwrap().id;
    let classes = [p, q, s];
    let mut objects: Vec<(ElementId, ElementId)> = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        for i in 0..rng.gen_range(0..=4) {
            let o = m.instantiate(c, &format!("o{k}x{i}")).unwrap().id;
            objects.push((o, c.clone()));
        }
    }
    let mult = |rng: &mut ChaCha8Rng| {
        let lower = rng.gen_range(0..=2);
        let upper = match rng.gen_range(0..3) {
            0 => None,
            _ => Some(lower + rng.gen_range(0..=2)),
        };
        Multiplicity::new(lower, upper).unwrap_or(Multiplicity::MANY)
    };
    for a in 0..rng.gen_range(1..=3) {
        let c1 = classes.choose(rng).unwrap().clone();
        let c2 = if rng.gen_bool(0.25) { c1.clone() } else { classes.choose(rng).unwrap().clone() };
        let end1 = AssociationEnd { class: c1.clone(), role: format!("left{a}"), multiplicity: mult(rng) };
        let end2 = AssociationEnd { class: c2.clone(), role: format!("right{a}"), multiplicity: mult(rng) };
        let assoc = m.create_association(&format!("A{a}"), end1, end2).unwrap().id;
        let fits = |c: &ElementId, m: &ProjectModel| -> Vec<ElementId> {
            objects.iter().filter(|(_, oc)| m.conforms_to(oc, c)).map(|(o, _)| o.clone()).collect()
        };
        let (left, right) = (fits(&c1, &m), fits(&c2, &m));
        if left.is_empty() || right.is_empty() {
            continue;
        }
        for _ in 0..rng.gen_range(0..=8) {
            let (x, y) = (left.choose(rng).unwrap(), right.choose(rng).unwrap());
            // Duplicate links are rejected by the kernel; that is fine here.
            let _ = m.create_link(&assoc, x, y);
        }
    }
    m
}

fn admits(text: &str, count: usize) -> bool {
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo, hi),
        None => (text, text),
    };
    let lo: usize = if lo == "*" { 0 } else { lo.parse().unwrap() };
    count >= lo && (hi == "*" || count <= hi.parse::<usize>().unwrap())
}

fn oracle(doc: &Value) -> Vec<Finding> {
    let mut out = Vec::new();
    let s = |v: &Value| v.as_str().unwrap().to_owned();
    for o in doc["objects"].as_array().unwrap() {
        for a in doc["associations"].as_array().unwrap() {
            for from in 0..2 {
                if !conforms(doc, o["class"].as_str().unwrap(), a["ends"][from]["class"].as_str().unwrap()) {
                    continue;
                }
                let here = ["end1", "end2"][from];
                let mut count = 0;
                for l in doc["links"].as_array().unwrap() {
                    if l["association"] == a["id"] && l[here] == o["id"] {
                        count += 1;
                    }
                }
                let to = 1 - from;
                if !admits(a["ends"][to]["multiplicity"].as_str().unwrap(), count) {
                    out.push((s(&o["id"]), s(&a["id"]), to, count));
                }
            }
        }
    }
    out.sort();
    out
}

pub fn multiplicity_oracle() -> Outcome {
    let mut findings = 0;
    for seed in 0..CONFIGURATIONS {
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
        let m = random_model(&mut rng);
        let doc = document_json(&m, &[] as &[DiagramLayout]);
        let expected = oracle(&doc);
        let mut got: Vec<Finding> = check_multiplicities(&m)
            .into_iter()
            .map(|f| (f.object.to_string(), f.association.to_string(), f.end, f.count))
            .collect();
        got.sort();
        if got != expected {
            return Err(format!("configuration {seed}: engine {got:?}, oracle {expected:?}"));
        }
        let (report, _) = full_report(&m, 0);
        let mut reported: Vec<(String, String, usize)> = report
            .entries
            .iter()
            .filter_map(|v| match &v.source {
                ViolationSource::Multiplicity { association, end } => {
                    Some((v.object.to_string(), association.to_string(), *end))
                }
                _ => None,
            })
            .collect();
        reported.sort();
        let want: Vec<_> = expected.iter().map(|(o, a, e, _)| (o.clone(), a.clone(), *e)).collect();
        if reported != want {
            return Err(format!("configuration {seed}: report lists {reported:?}, oracle {want:?}"));
        }
        findings += expected.len();
    }
    Ok(format!("{CONFIGURATIONS} configurations, {findings} out-of-bound ends"))
}
