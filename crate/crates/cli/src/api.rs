//! HTTP/JSON service over one [`Session`].
//!
//! Every successful mutation answers with `{result, revision, report,
//! monitors}`, where `report` is the full sweep at `revision`. Errors answer
//! with `{"error": {code, message, path}}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer};
use serde_json::{json, Value as JsonValue};
use tower_http::services::ServeDir;
use umlpp_core::engine::{invoke, InvokeError, MonitorSnapshot, ViolationReport};
use umlpp_core::expr::{quote_string, ExprError};
use umlpp_core::model::{
    AssociationEnd, AttributeChange, KernelError, MigrationSummary, Multiplicity, OperationSpec, Param, RewrittenExpr,
    Slot, SlotAction,
};
use umlpp_core::persist::{
    association_to_json, class_to_json, document_json, enumeration_to_json, eval_result_to_json, link_to_json,
    monitors_to_json, object_to_json, report_to_json, type_from_json, value_from_json,
};
use umlpp_core::{ElementId, ProjectModel, Session, TypeRef};

#[derive(Clone)]
pub struct ApiState {
    inner: Arc<Mutex<Inner>>,
}

struct Inner {
    session: Session,
    save_to: Option<PathBuf>,
}

impl Inner {
    fn autosave(&self) {
        let Some(path) = &self.save_to else { return };
        let tmp = path.with_extension("tmp");
        let written = fs::write(&tmp, self.session.save()).and_then(|()| fs::rename(&tmp, path));
        if let Err(e) = written {
            tracing::error!(path = %path.display(), "autosave failed: {e}");
        }
    }
}

impl ApiState {
    /// `save_to` enables save-on-mutate.
    pub fn new(session: Session, save_to: Option<PathBuf>) -> Self {
        Self { inner: Arc::new(Mutex::new(Inner { session, save_to })) }
    }

    /// Copy of the current session.
    pub fn snapshot(&self) -> Session {
        self.lock().session.clone()
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    path: Option<String>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>, path: impl Into<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "BadRequest".into(),
            message: message.into(),
            path: Some(path.into()),
        }
    }

    fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self { status: StatusCode::NOT_FOUND, code: code.into(), message: message.into(), path: None }
    }
}

impl From<KernelError> for ApiError {
    fn from(e: KernelError) -> Self {
        let status = match &e {
            KernelError::UnknownElement(_)
            | KernelError::UnknownClass(_)
            | KernelError::UnknownSuperclass(_)
            | KernelError::UnknownObject(_)
            | KernelError::UnknownFeature(_) => StatusCode::NOT_FOUND,
            KernelError::NameTaken(_) | KernelError::DuplicateFeature(_) | KernelError::DuplicateLink => {
                StatusCode::CONFLICT
            }
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let path = match &e {
            KernelError::ParseError { site, .. } | KernelError::TypeError { site, .. } => Some(site.clone()),
            _ => None,
        };
        Self { status, code: e.code().into(), message: e.to_string(), path }
    }
}

impl From<InvokeError> for ApiError {
    fn from(e: InvokeError) -> Self {
        let status = match e {
            InvokeError::UnknownObject(_) | InvokeError::UnknownFeature(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self { status, code: e.code().into(), message: e.to_string(), path: None }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message, "path": self.path } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<JsonValue>, ApiError>;

/// The `/api` routes.
pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/api/project", get(get_project).patch(rename_project))
        .route("/api/palette", get(get_palette))
        .route("/api/report", get(get_report))
        .route("/api/classes", post(create_class))
        .route("/api/classes/{id}", patch(update_class).delete(delete_class))
        .route("/api/classes/{id}/attributes", post(create_attribute))
        .route("/api/classes/{id}/attributes/{fid}", patch(update_attribute).delete(delete_attribute))
        .route("/api/classes/{id}/operations", post(create_operation))
        .route("/api/classes/{id}/operations/{fid}", patch(update_operation).delete(delete_operation))
        .route("/api/classes/{id}/constraints", post(create_constraint))
        .route("/api/classes/{id}/constraints/{fid}", patch(update_constraint).delete(delete_constraint))
        .route("/api/classes/{id}/delegations", post(create_delegation))
        .route("/api/classes/{id}/delegations/{fid}", patch(update_delegation).delete(delete_delegation))
        .route("/api/associations", post(create_association))
        .route("/api/associations/{id}", patch(update_association).delete(delete_association))
        .route("/api/enumerations", post(create_enumeration))
        .route("/api/enumerations/{id}", patch(update_enumeration).delete(delete_enumeration))
        .route("/api/objects", post(create_object))
        .route("/api/objects/{id}", patch(update_object).delete(delete_object))
        .route("/api/objects/{id}/slots/{attr}", patch(update_slot))
        .route("/api/objects/{id}/delegates/{name}", patch(update_delegate))
        .route("/api/objects/{id}/invoke/{op}", post(invoke_operation))
        .route("/api/links", post(create_link))
        .route("/api/links/{id}", axum::routing::delete(delete_link))
        .route("/api/eval", post(eval))
        .route("/api/diagrams/{name}/nodes/{element}", patch(place_node))
        .route("/api/{*rest}", axum::routing::any(unknown_route))
        .with_state(state)
}

/// The API plus, when `ui_dir` is given, static files for everything else.
pub fn app(state: ApiState, ui_dir: Option<&Path>) -> Router {
    let api = router(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn unknown_route() -> ApiError {
    ApiError::not_found("NotFound", "no such endpoint")
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let raw: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(raw).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}"), ""))
}

/// Distinguishes an absent field (`None`) from an explicit null (`Some(None)`).
fn nullable<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d).map(Some)
}

fn envelope(result: JsonValue, revision: u64, report: &ViolationReport, monitors: &MonitorSnapshot) -> JsonValue {
    json!({
        "result": result,
        "revision": revision,
        "report": report_to_json(report),
        "monitors": monitors_to_json(monitors),
    })
}

fn mutate<T>(
    state: &ApiState,
    operation: &str,
    args: &[&str],
    edit: impl FnOnce(&mut ProjectModel) -> Result<T, KernelError>,
    render: impl FnOnce(&ProjectModel, T) -> JsonValue,
) -> ApiResult {
    let mut inner = state.lock();
    let m = inner.session.apply(operation, args, edit)?;
    let result = render(inner.session.model(), m.result);
    inner.autosave();
    Ok(Json(envelope(result, m.revision, &m.report, &m.monitors)))
}

fn parse_type(json: &JsonValue, path: &str) -> Result<TypeRef, ApiError> {
    type_from_json(json).map_err(|e| ApiError::bad_request(e, path))
}

fn rewritten_json(r: &[RewrittenExpr]) -> JsonValue {
    r.iter().map(|w| json!({ "site": w.label, "before": w.before, "after": w.after })).collect()
}

fn migration_json(s: &MigrationSummary) -> JsonValue {
    let pairs = |v: &[(ElementId, ElementId)]| -> JsonValue {
        v.iter().map(|(o, a)| json!({ "object": o.as_str(), "attribute": a.as_str() })).collect()
    };
    json!({
        "touchedObjects": s.touched_objects.iter().map(ElementId::as_str).collect::<Vec<_>>(),
        "addedSlots": s.added_slots,
        "removedSlots": s.removed_slots,
        "cleared": pairs(&s.cleared),
        "coerced": pairs(&s.coerced),
        "rewritten": rewritten_json(&s.rewritten),
    })
}

fn merge(into: &mut MigrationSummary, s: MigrationSummary) {
    for o in s.touched_objects {
        if !into.touched_objects.contains(&o) {
            into.touched_objects.push(o);
        }
    }
    into.added_slots += s.added_slots;
    into.removed_slots += s.removed_slots;
    into.cleared.extend(s.cleared);
    into.coerced.extend(s.coerced);
    into.rewritten.extend(s.rewritten);
}

/// JSON of one feature as it appears inside its class document.
fn feature_json(model: &ProjectModel, class: &ElementId, key: &str, feature: &ElementId) -> JsonValue {
    let Some(c) = model.class(class) else { return JsonValue::Null };
    class_to_json(c)[key]
        .as_array()
        .and_then(|fs| fs.iter().find(|f| f["id"] == feature.as_str()).cloned())
        .unwrap_or(JsonValue::Null)
}

/// Rejects a feature id that does not belong to the class in the URL.
fn check_owner(owner: Option<&ElementId>, class: &ElementId, feature: &ElementId) -> Result<(), KernelError> {
    if owner == Some(class) {
        Ok(())
    } else {
        Err(KernelError::UnknownElement(feature.clone()))
    }
}

// ---- reads

async fn get_project(State(s): State<ApiState>) -> Json<JsonValue> {
    let inner = s.lock();
    Json(document_json(inner.session.model(), inner.session.layouts()))
}

async fn get_palette(State(s): State<ApiState>) -> Json<JsonValue> {
    let inner = s.lock();
    let palette = inner.session.model().palette();
    Json(palette.into_iter().map(|(id, name)| json!({ "id": id.as_str(), "name": name })).collect())
}

async fn get_report(State(s): State<ApiState>) -> Json<JsonValue> {
    let inner = s.lock();
    let session = &inner.session;
    let (report, monitors) = session.report();
    let mut derived = Vec::new();
    for o in session.model().objects() {
        for (a, slot) in &o.slots {
            if let Slot::Computed(r) = slot {
                let mut entry = eval_result_to_json(r);
                entry["object"] = json!(o.id.as_str());
                entry["attribute"] = json!(a.as_str());
                derived.push(entry);
            }
        }
    }
    Json(json!({
        "revision": session.revision(),
        "report": report_to_json(report),
        "monitors": monitors_to_json(monitors),
        "derived": derived,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Rename {
    name: String,
}

async fn rename_project(State(s): State<ApiState>, bytes: Bytes) -> ApiResult {
    let req: Rename = body(&bytes)?;
    mutate(
        &s,
        "renameProject",
        &[&req.name],
        |m| {
            m.rename_project(&req.name);
            Ok(())
        },
        |m, ()| json!({ "name": m.name() }),
    )
}

// ---- classes

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewClass {
    name: String,
    #[serde(default, rename = "abstract")]
    is_abstract: bool,
    #[serde(default)]
    superclass: Option<String>,
}

async fn create_class(State(s): State<ApiState>, bytes: Bytes) -> ApiResult {
    let req: NewClass = body(&bytes)?;
    let sup = req.superclass.map(ElementId::new);
    mutate(
        &s,
        "createClass",
        &[&req.name],
        |m| m.create_class(&req.name, req.is_abstract, sup.as_ref()),
        |_, c| class_to_json(&c),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchClass {
    name: Option<String>,
    #[serde(rename = "abstract")]
    is_abstract: Option<bool>,
    #[serde(default, deserialize_with = "nullable")]
    superclass: Option<Option<String>>,
}

async fn update_class(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: PatchClass = body(&bytes)?;
    let cid = ElementId::new(id);
    mutate(
        &s,
        "updateClass",
        &[cid.as_str()],
        |m| {
            if m.class(&cid).is_none() {
                return Err(KernelError::UnknownElement(cid.clone()));
            }
            let mut next = m.clone();
            let mut summary = MigrationSummary::default();
            if let Some(name) = &req.name {
                summary.rewritten.extend(next.rename_element(&cid, name)?.rewritten);
            }
            if let Some(a) = req.is_abstract {
                next.set_abstract(&cid, a)?;
            }
            if let Some(sup) = &req.superclass {
                let sup = sup.as_deref().map(ElementId::new);
                merge(&mut summary, next.set_generalization(&cid, sup.as_ref())?);
            }
            *m = next;
            Ok(summary)
        },
        |m, summary| json!({ "class": m.class(&cid).map(class_to_json), "migration": migration_json(&summary) }),
    )
}

async fn delete_class(State(s): State<ApiState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let cid = ElementId::new(id);
    mutate(&s, "deleteClass", &[cid.as_str()], |m| m.delete_class(&cid), |_, ()| JsonValue::Null)
}

// ---- attributes

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewAttribute {
    name: String,
    #[serde(rename = "type")]
    ty: JsonValue,
    #[serde(default)]
    derivation: Option<String>,
}

async fn create_attribute(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: NewAttribute = body(&bytes)?;
    let ty = parse_type(&req.ty, "/type")?;
    let cid = ElementId::new(id);
    mutate(
        &s,
        "addAttribute",
        &[cid.as_str(), &req.name],
        |m| m.add_attribute(&cid, &req.name, ty, req.derivation.as_deref()),
        |m, (a, summary)| json!({ "attribute": feature_json(m, &cid, "attributes", &a.id), "migration": migration_json(&summary) }),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchAttribute {
    name: Option<String>,
    #[serde(rename = "type")]
    ty: Option<JsonValue>,
    #[serde(default, deserialize_with = "nullable")]
    derivation: Option<Option<String>>,
}

async fn update_attribute(
    State(s): State<ApiState>,
    UrlPath((id, fid)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: PatchAttribute = body(&bytes)?;
    let ty = req.ty.as_ref().map(|t| parse_type(t, "/type")).transpose()?;
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "updateAttribute",
        &[fid.as_str()],
        |m| {
            check_owner(m.attribute(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            let mut next = m.clone();
            let mut summary = MigrationSummary::default();
            if let Some(name) = &req.name {
                merge(&mut summary, next.update_attribute(&fid, AttributeChange::Rename(name.clone()))?);
            }
            if let Some(ty) = ty {
                merge(&mut summary, next.update_attribute(&fid, AttributeChange::Retype(ty))?);
            }
            if let Some(d) = req.derivation {
                merge(&mut summary, next.update_attribute(&fid, AttributeChange::SetDerived(d))?);
            }
            *m = next;
            Ok(summary)
        },
        |m, summary| json!({ "attribute": feature_json(m, &cid, "attributes", &fid), "migration": migration_json(&summary) }),
    )
}

async fn delete_attribute(State(s): State<ApiState>, UrlPath((id, fid)): UrlPath<(String, String)>) -> ApiResult {
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "removeAttribute",
        &[fid.as_str()],
        |m| {
            check_owner(m.attribute(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            m.remove_attribute(&fid)
        },
        |_, summary| json!({ "migration": migration_json(&summary) }),
    )
}

// ---- operations

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewParam {
    name: String,
    #[serde(rename = "type")]
    ty: JsonValue,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct NewOperation {
    name: String,
    #[serde(default)]
    params: Vec<NewParam>,
    return_type: JsonValue,
    body: String,
    #[serde(default)]
    monitored: bool,
}

async fn create_operation(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: NewOperation = body(&bytes)?;
    let mut params = Vec::new();
    for (i, p) in req.params.iter().enumerate() {
        params.push(Param { name: p.name.clone(), ty: parse_type(&p.ty, &format!("/params/{i}/type"))? });
    }
    let spec = OperationSpec {
        name: req.name.clone(),
        params,
        return_type: parse_type(&req.return_type, "/returnType")?,
        body: req.body,
        monitored: req.monitored,
    };
    let cid = ElementId::new(id);
    mutate(
        &s,
        "addOperation",
        &[cid.as_str(), &req.name],
        |m| m.add_operation(&cid, spec),
        |m, op| feature_json(m, &cid, "operations", &op.id),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchOperation {
    name: Option<String>,
    body: Option<String>,
    monitored: Option<bool>,
}

async fn update_operation(
    State(s): State<ApiState>,
    UrlPath((id, fid)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: PatchOperation = body(&bytes)?;
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "updateOperation",
        &[fid.as_str()],
        |m| {
            check_owner(m.operation(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            let mut next = m.clone();
            let mut rewritten = Vec::new();
            if let Some(name) = &req.name {
                rewritten = next.rename_element(&fid, name)?.rewritten;
            }
            if req.body.is_some() || req.monitored.is_some() {
                next.update_operation(&fid, req.body.clone(), req.monitored)?;
            }
            *m = next;
            Ok(rewritten)
        },
        |m, rewritten| json!({ "operation": feature_json(m, &cid, "operations", &fid), "rewritten": rewritten_json(&rewritten) }),
    )
}

async fn delete_operation(State(s): State<ApiState>, UrlPath((id, fid)): UrlPath<(String, String)>) -> ApiResult {
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "removeOperation",
        &[fid.as_str()],
        |m| {
            check_owner(m.operation(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            m.remove_operation(&fid)
        },
        |_, ()| JsonValue::Null,
    )
}

// ---- constraints

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewConstraint {
    name: String,
    body: String,
    #[serde(default)]
    message: Option<String>,
}

async fn create_constraint(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: NewConstraint = body(&bytes)?;
    let message = req.message.clone().unwrap_or_else(|| quote_string(&req.name));
    let cid = ElementId::new(id);
    mutate(
        &s,
        "addConstraint",
        &[cid.as_str(), &req.name],
        |m| m.add_constraint(&cid, &req.name, &req.body, &message),
        |m, k| feature_json(m, &cid, "constraints", &k.id),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchConstraint {
    name: Option<String>,
    body: Option<String>,
    message: Option<String>,
}

async fn update_constraint(
    State(s): State<ApiState>,
    UrlPath((id, fid)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: PatchConstraint = body(&bytes)?;
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "updateConstraint",
        &[fid.as_str()],
        |m| {
            check_owner(m.constraint(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            let mut next = m.clone();
            if let Some(name) = &req.name {
                next.rename_element(&fid, name)?;
            }
            if req.body.is_some() || req.message.is_some() {
                next.update_constraint(&fid, req.body.clone(), req.message.clone())?;
            }
            *m = next;
            Ok(())
        },
        |m, ()| feature_json(m, &cid, "constraints", &fid),
    )
}

async fn delete_constraint(State(s): State<ApiState>, UrlPath((id, fid)): UrlPath<(String, String)>) -> ApiResult {
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "removeConstraint",
        &[fid.as_str()],
        |m| {
            check_owner(m.constraint(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            m.remove_constraint(&fid)
        },
        |_, ()| JsonValue::Null,
    )
}

// ---- delegations

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewDelegation {
    name: String,
    target: String,
}

async fn create_delegation(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: NewDelegation = body(&bytes)?;
    let (cid, target) = (ElementId::new(id), ElementId::new(req.target));
    mutate(
        &s,
        "declareDelegation",
        &[cid.as_str(), &req.name, target.as_str()],
        |m| m.declare_delegation(&cid, &req.name, &target),
        |m, d| feature_json(m, &cid, "delegations", &d.id),
    )
}

async fn update_delegation(
    State(s): State<ApiState>,
    UrlPath((id, fid)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: Rename = body(&bytes)?;
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "renameDelegation",
        &[fid.as_str(), &req.name],
        |m| {
            check_owner(m.delegation(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            m.rename_element(&fid, &req.name)
        },
        |m, summary| json!({ "delegation": feature_json(m, &cid, "delegations", &fid), "rewritten": rewritten_json(&summary.rewritten) }),
    )
}

async fn delete_delegation(State(s): State<ApiState>, UrlPath((id, fid)): UrlPath<(String, String)>) -> ApiResult {
    let (cid, fid) = (ElementId::new(id), ElementId::new(fid));
    mutate(
        &s,
        "removeDelegation",
        &[fid.as_str()],
        |m| {
            check_owner(m.delegation(&fid).map(|(c, _)| &c.id), &cid, &fid)?;
            m.remove_delegation(&fid)
        },
        |_, summary| json!({ "migration": migration_json(&summary) }),
    )
}

// ---- associations

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewEnd {
    class: String,
    role: String,
    multiplicity: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewAssociation {
    name: String,
    ends: [NewEnd; 2],
}

fn parse_multiplicity(text: &str) -> Result<Multiplicity, KernelError> {
    Multiplicity::parse(text).ok_or_else(|| KernelError::BadMultiplicity(text.to_owned()))
}

async fn create_association(State(s): State<ApiState>, bytes: Bytes) -> ApiResult {
    let req: NewAssociation = body(&bytes)?;
    let [e1, e2] = req.ends;
    let end = |e: NewEnd| -> Result<AssociationEnd, KernelError> {
        Ok(AssociationEnd {
            class: ElementId::new(e.class),
            role: e.role,
            multiplicity: parse_multiplicity(&e.multiplicity)?,
        })
    };
    let (end1, end2) = (end(e1)?, end(e2)?);
    mutate(
        &s,
        "createAssociation",
        &[&req.name],
        |m| m.create_association(&req.name, end1, end2),
        |_, a| association_to_json(&a),
    )
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PatchEnd {
    role: Option<String>,
    multiplicity: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchAssociation {
    name: Option<String>,
    ends: Option<[PatchEnd; 2]>,
}

async fn update_association(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: PatchAssociation = body(&bytes)?;
    let aid = ElementId::new(id);
    mutate(
        &s,
        "updateAssociation",
        &[aid.as_str()],
        |m| {
            if m.association(&aid).is_none() {
                return Err(KernelError::UnknownElement(aid.clone()));
            }
            let mut next = m.clone();
            let mut rewritten = Vec::new();
            if let Some(name) = &req.name {
                rewritten.extend(next.rename_element(&aid, name)?.rewritten);
            }
            for (i, e) in req.ends.iter().flatten().enumerate() {
                if let Some(role) = &e.role {
                    rewritten.extend(next.rename_role(&aid, i, role)?.rewritten);
                }
                if let Some(text) = &e.multiplicity {
                    next.set_multiplicity(&aid, i, parse_multiplicity(text)?)?;
                }
            }
            *m = next;
            Ok(rewritten)
        },
        |m, rewritten| json!({ "association": m.association(&aid).map(association_to_json), "rewritten": rewritten_json(&rewritten) }),
    )
}

async fn delete_association(State(s): State<ApiState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let aid = ElementId::new(id);
    mutate(&s, "deleteAssociation", &[aid.as_str()], |m| m.delete_association(&aid), |_, ()| JsonValue::Null)
}

// ---- enumerations

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewEnumeration {
    name: String,
    literals: Vec<String>,
}

async fn create_enumeration(State(s): State<ApiState>, bytes: Bytes) -> ApiResult {
    let req: NewEnumeration = body(&bytes)?;
    mutate(
        &s,
        "createEnumeration",
        &[&req.name],
        |m| m.create_enumeration(&req.name, &req.literals),
        |_, e| enumeration_to_json(&e),
    )
}

async fn update_enumeration(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: Rename = body(&bytes)?;
    let eid = ElementId::new(id);
    mutate(
        &s,
        "renameEnumeration",
        &[eid.as_str(), &req.name],
        |m| {
            if m.enumeration(&eid).is_none() {
                return Err(KernelError::UnknownElement(eid.clone()));
            }
            m.rename_element(&eid, &req.name)
        },
        |m, summary| json!({ "enumeration": m.enumeration(&eid).map(enumeration_to_json), "rewritten": rewritten_json(&summary.rewritten) }),
    )
}

async fn delete_enumeration(State(s): State<ApiState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let eid = ElementId::new(id);
    mutate(&s, "deleteEnumeration", &[eid.as_str()], |m| m.delete_enumeration(&eid), |_, ()| JsonValue::Null)
}

// ---- objects

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewObject {
    class: String,
    name: Option<String>,
    diagram: Option<String>,
    x: Option<i64>,
    y: Option<i64>,
}

/// `ticket1`, `ticket2`, ...: the first free name derived from the class.
fn suggest_name(model: &ProjectModel, class: &str) -> String {
    let mut chars = class.chars();
    let stem: String = chars.next().map(|c| c.to_lowercase().chain(chars).collect()).unwrap_or_default();
    (1..).map(|n| format!("{stem}{n}")).find(|n| !model.name_in_use(n)).expect("unbounded range")
}

async fn create_object(State(s): State<ApiState>, bytes: Bytes) -> ApiResult {
    let req: NewObject = body(&bytes)?;
    let cid = ElementId::new(req.class);
    let mut inner = s.lock();
    let m = inner.session.apply("instantiate", &[cid.as_str()], |m| {
        let class = m.class(&cid).ok_or_else(|| KernelError::UnknownClass(cid.to_string()))?;
        let name = req.name.clone().unwrap_or_else(|| suggest_name(m, &class.name));
        m.instantiate(&cid, &name)
    })?;
    if let Some(diagram) = &req.diagram {
        let layouts = inner.session.layouts_mut();
        let idx = match layouts.iter().position(|l| &l.name == diagram) {
            Some(i) => i,
            None => {
                layouts.push(umlpp_core::persist::DiagramLayout::new(diagram.clone()));
                layouts.len() - 1
            }
        };
        layouts[idx].place(&m.result.id, req.x.unwrap_or(0), req.y.unwrap_or(0));
    }
    let result = inner.session.model().object(&m.result.id).map(object_to_json).unwrap_or(JsonValue::Null);
    inner.autosave();
    Ok(Json(envelope(result, m.revision, &m.report, &m.monitors)))
}

async fn update_object(State(s): State<ApiState>, UrlPath(id): UrlPath<String>, bytes: Bytes) -> ApiResult {
    let req: Rename = body(&bytes)?;
    let oid = ElementId::new(id);
    mutate(
        &s,
        "renameObject",
        &[oid.as_str(), &req.name],
        |m| {
            if m.object(&oid).is_none() {
                return Err(KernelError::UnknownObject(oid.to_string()));
            }
            m.rename_element(&oid, &req.name)
        },
        |m, _| m.object(&oid).map(object_to_json).unwrap_or(JsonValue::Null),
    )
}

async fn delete_object(State(s): State<ApiState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let oid = ElementId::new(id);
    mutate(&s, "deleteObject", &[oid.as_str()], |m| m.delete_object(&oid), |_, ()| JsonValue::Null)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotBody {
    set: Option<JsonValue>,
    #[serde(default)]
    clear: bool,
}

async fn update_slot(
    State(s): State<ApiState>,
    UrlPath((id, attr)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: SlotBody = body(&bytes)?;
    let action = match (req.set, req.clear) {
        (Some(v), false) => SlotAction::Set(value_from_json(&v).map_err(|e| ApiError::bad_request(e, "/set"))?),
        (None, true) => SlotAction::Clear,
        _ => return Err(ApiError::bad_request("exactly one of `set` or `clear: true` is required", "")),
    };
    let oid = ElementId::new(id);
    mutate(
        &s,
        "setSlot",
        &[oid.as_str(), &attr],
        |m| m.set_slot(&oid, &attr, action),
        |m, ()| m.object(&oid).map(object_to_json).unwrap_or(JsonValue::Null),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DelegateBody {
    target: Option<String>,
}

async fn update_delegate(
    State(s): State<ApiState>,
    UrlPath((id, name)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: DelegateBody = body(&bytes)?;
    let oid = ElementId::new(id);
    let target = req.target.map(ElementId::new);
    mutate(
        &s,
        "setDelegate",
        &[oid.as_str(), &name],
        |m| m.set_delegate(&oid, &name, target.as_ref()),
        |m, ()| m.object(&oid).map(object_to_json).unwrap_or(JsonValue::Null),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InvokeBody {
    #[serde(default)]
    args: Vec<JsonValue>,
}

fn result_json(model: &ProjectModel, r: &umlpp_core::expr::EvalResult) -> JsonValue {
    let mut out = eval_result_to_json(r);
    out["text"] = match r {
        Ok(v) => json!(model.render_value(v)),
        Err(u) => json!(format!("undefined: {}", u.reason.code())),
    };
    out
}

/// Read-only: the revision does not advance.
async fn invoke_operation(
    State(s): State<ApiState>,
    UrlPath((id, op)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: InvokeBody = body(&bytes)?;
    let mut args = Vec::new();
    for (i, a) in req.args.iter().enumerate() {
        args.push(value_from_json(a).map_err(|e| ApiError::bad_request(e, format!("/args/{i}")))?);
    }
    let inner = s.lock();
    let session = &inner.session;
    let r = invoke(session.model(), &ElementId::new(id), &op, args)?;
    let (report, monitors) = session.report();
    Ok(Json(envelope(result_json(session.model(), &r), session.revision(), report, monitors)))
}

// ---- links

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewLink {
    association: String,
    end1: String,
    end2: String,
}

async fn create_link(State(s): State<ApiState>, bytes: Bytes) -> ApiResult {
    let req: NewLink = body(&bytes)?;
    let (a, e1, e2) = (ElementId::new(req.association), ElementId::new(req.end1), ElementId::new(req.end2));
    mutate(
        &s,
        "createLink",
        &[a.as_str(), e1.as_str(), e2.as_str()],
        |m| m.create_link(&a, &e1, &e2),
        |_, l| link_to_json(&l),
    )
}

async fn delete_link(State(s): State<ApiState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let lid = ElementId::new(id);
    mutate(&s, "removeLink", &[lid.as_str()], |m| m.remove_link(&lid), |_, ()| JsonValue::Null)
}

// ---- evaluation and layout

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalBody {
    context: String,
    expr: String,
}

async fn eval(State(s): State<ApiState>, bytes: Bytes) -> ApiResult {
    let req: EvalBody = body(&bytes)?;
    let inner = s.lock();
    let session = &inner.session;
    let model = session.model();
    let ctx = ElementId::new(req.context);
    if model.object(&ctx).is_none() {
        return Err(KernelError::UnknownObject(ctx.to_string()).into());
    }
    let r = umlpp_core::engine::evaluate(model, &ctx, &req.expr).map_err(|e| {
        let code = match e {
            ExprError::Parse(_) => "ParseError",
            ExprError::Type(_) => "TypeError",
        };
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: code.into(),
            message: e.to_string(),
            path: Some("/expr".into()),
        }
    })?;
    Ok(Json(json!({ "result": result_json(model, &r), "revision": session.revision() })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeBody {
    x: i64,
    y: i64,
}

async fn place_node(
    State(s): State<ApiState>,
    UrlPath((name, element)): UrlPath<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: NodeBody = body(&bytes)?;
    let el = ElementId::new(element);
    let mut inner = s.lock();
    let m = inner.session.place_node(&name, &el, req.x, req.y)?;
    inner.autosave();
    let result = json!({ "diagram": name, "element": el.as_str(), "x": req.x, "y": req.y });
    Ok(Json(envelope(result, m.revision, &m.report, &m.monitors)))
}
