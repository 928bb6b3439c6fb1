//! Document round trips on generated projects, and exact decimal handling
//! of monetary amounts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umlpp_core::model::SlotAction;
use umlpp_core::persist::{self, DiagramLayout};
use umlpp_core::{DataType, Money, ProjectModel, Session, TypeRef, Value};

use crate::client::Client;
use crate::edits::random_edit;
use crate::Outcome;

const PROJECTS: u64 = 100;
const AMOUNTS: usize = 1000;
const CURRENCIES: [&str; 4] = ["EUR", "USD", "JPY", "CHF"];

fn generated_project(seed: u64) -> Session {
    let mut rng = ChaCha8Rng::seed_from_u64(30_000 + seed);
    let client = Client::new(Session::new(ProjectModel::new(format!("Gen{seed}")), vec![]));
    for _ in 0..rng.gen_range(10..=40) {
        let doc = client.get("/api/project");
        let edit = random_edit(&mut rng, &doc);
        let body = (!edit.body.is_null()).then_some(&edit.body);
        client.call(edit.method, &edit.uri, body);
    }
    client.state.snapshot()
}

/// Decimal text of `units * 10^-scale`, written digit by digit.
fn decimal(units: i128, scale: u32) -> String {
    let sign = if units < 0 { "-" } else { "" };
    let mut digits = units.unsigned_abs().to_string();
    let scale = scale as usize;
    if scale == 0 {
        return format!("{sign}{digits}");
    }
    while digits.len() <= scale {
        digits.insert(0, '0');
    }
    let (int, frac) = digits.split_at(digits.len() - scale);
    format!("{sign}{int}.{frac}")
}

fn amounts() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(40_000);
    let mut model = ProjectModel::new("Amounts");
    let class = model.create_class("Holding", false, None).map_err(|e| e.to_string())?.id;
    model.add_attribute(&class, "value", TypeRef::Data(DataType::MonetaryValue), None).map_err(|e| e.to_string())?;
    let mut expected = Vec::new();
    for i in 0..AMOUNTS {
        let units: i128 = match rng.gen_range(0..4) {
            0 => rng.gen_range(-1000..1000),
            1 => rng.gen_range(-10i128.pow(12)..10i128.pow(12)),
            2 => rng.gen_range(-10i128.pow(30)..10i128.pow(30)),
            _ => rng.gen_range(i128::MIN / 2..i128::MAX / 2),
        };
        let scale = rng.gen_range(0..=6);
        let currency = *CURRENCIES.choose(&mut rng).unwrap();
        let text = decimal(units, scale);
        let money = Money::new(units, scale, currency).map_err(|e| e.to_string())?;
        if money.amount_string() != text {
            return Err(format!("{units}e-{scale}: amount_string {} but expected {text}", money.amount_string()));
        }
        let parsed = Money::parse(&text, currency).map_err(|e| format!("{text}: {e}"))?;
        if parsed != money {
            return Err(format!("{text} parses to {parsed:?}"));
        }
        if money.to_string() != format!("{text} {currency}") {
            return Err(format!("{text} displays as {money}"));
        }
        let o = model.instantiate(&class, &format!("h{i}")).map_err(|e| e.to_string())?.id;
        model.set_slot(&o, "value", SlotAction::Set(Value::Monetary(money))).map_err(|e| e.to_string())?;
        expected.push((o, text, currency));
    }
    let saved = persist::save(&model, &[]);
    let json: serde_json::Value = serde_json::from_str(&saved).unwrap();
    let (loaded, _) = persist::load(saved.as_bytes()).map_err(|e| e.to_string())?;
    let attr = model.class(&class).unwrap().attributes[0].id.as_str().to_owned();
    for (k, (o, text, currency)) in expected.iter().enumerate() {
        let slot = &json["objects"][k]["slots"][&attr];
        if slot["amount"] != *text || slot["currency"] != *currency {
            return Err(format!("{text} {currency} saved as {slot}"));
        }
        let back = loaded.object(o).and_then(|obj| obj.slots.values().next()).and_then(|s| s.value().cloned());
        match back {
            Some(Value::Monetary(m)) if m.amount_string() == *text && m.currency() == *currency => {}
            other => return Err(format!("{text} {currency} loads back as {other:?}")),
        }
    }
    if loaded != model {
        return Err("amount project does not load back equal".into());
    }
    Ok(format!("{AMOUNTS} amounts exact"))
}

pub fn round_trip() -> Outcome {
    let mut elements = 0;
    for seed in 0..PROJECTS {
        let session = generated_project(seed);
        let bytes = session.save();
        let (model, layouts) = persist::load(bytes.as_bytes()).map_err(|e| format!("project {seed}: {e}"))?;
        if model != *session.model() {
            return Err(format!("project {seed}: loaded model differs"));
        }
        if layouts != session.layouts() {
            return Err(format!("project {seed}: loaded layouts differ"));
        }
        let again = persist::save(&model, &layouts as &[DiagramLayout]);
        if again != bytes {
            return Err(format!("project {seed}: second save differs from the first"));
        }
        let json: serde_json::Value = serde_json::from_str(&bytes).unwrap();
        elements += ["classes", "associations", "objects", "links", "enumerations"]
            .iter()
            .map(|k| json[k].as_array().map_or(0, Vec::len))
            .sum::<usize>();
    }
    let money = amounts()?;
    Ok(format!("{PROJECTS} projects ({elements} elements) byte-identical, {money}"))
}
