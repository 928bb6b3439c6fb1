//! Python bindings. `umlpp.Project` wraps an editing session: every edit
//! advances the revision and recomputes the violation report.

use chrono::Datelike;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDate, PyList};
use pyo3::IntoPyObjectExt;
use umlpp_core::engine::{self, InvokeError};
use umlpp_core::expr::{evaluate_literal, Undefined as CoreUndefined};
use umlpp_core::model::{AssociationEnd, Multiplicity, OperationSpec, Param, SlotAction};
use umlpp_core::persist::{export_report, monitors_to_json, report_to_json, ReportFormat};
use umlpp_core::{DataType, ElementId, KernelError, Money as CoreMoney, ProjectModel, Session, TypeRef, Value};

create_exception!(umlpp, ModelError, PyException, "A model edit was rejected.");
create_exception!(umlpp, LoadError, PyException, "A project document could not be loaded.");

fn model_err(e: KernelError) -> PyErr {
    ModelError::new_err(format!("{}: {e}", e.code()))
}

fn invoke_err(e: InvokeError) -> PyErr {
    ModelError::new_err(format!("{}: {e}", e.code()))
}

/// Exact monetary amount.
#[pyclass(module = "umlpp", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct Money(CoreMoney);

#[pymethods]
impl Money {
    #[new]
    fn new(amount: &str, currency: &str) -> PyResult<Self> {
        CoreMoney::parse(amount, currency).map(Money).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Decimal text with the scale as written, e.g. `"12.50"`.
    #[getter]
    fn amount(&self) -> String {
        self.0.amount_string()
    }

    #[getter]
    fn currency(&self) -> &str {
        self.0.currency()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Money('{}', '{}')", self.0.amount_string(), self.0.currency())
    }
}

/// Result of an expression that could not be evaluated. Falsy.
#[pyclass(module = "umlpp", frozen, get_all)]
pub struct Undefined {
    reason: String,
    detail: String,
}

#[pymethods]
impl Undefined {
    fn __bool__(&self) -> bool {
        false
    }

    fn __repr__(&self) -> String {
        format!("Undefined({}: {})", self.reason, self.detail)
    }
}

fn value_to_py(py: Python<'_>, model: &ProjectModel, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::String(s) => s.into_py_any(py),
        Value::Integer(i) => i.into_py_any(py),
        Value::Float(f) => f.into_py_any(py),
        Value::Boolean(b) => b.into_py_any(py),
        Value::Date(d) => PyDate::new(py, d.year(), d.month() as u8, d.day() as u8)?.into_py_any(py),
        Value::Monetary(m) => Money(m.clone()).into_py_any(py),
        Value::Enum { literal, .. } => literal.into_py_any(py),
        Value::Ref(id) => model.element_name(id).unwrap_or(id.as_str()).into_py_any(py),
        Value::Collection(items) => {
            let items = items.iter().map(|x| value_to_py(py, model, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_py_any(py)
        }
    }
}

fn result_to_py(py: Python<'_>, model: &ProjectModel, r: &Result<Value, CoreUndefined>) -> PyResult<Py<PyAny>> {
    match r {
        Ok(v) => value_to_py(py, model, v),
        Err(u) => Undefined { reason: u.reason.code().to_owned(), detail: u.detail.clone() }.into_py_any(py),
    }
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (v.to_string(),))?.unbind())
}

/// Converts a Python value to a model value of the declared type.
fn value_from_py(model: &ProjectModel, obj: &Bound<'_, PyAny>, ty: &TypeRef) -> PyResult<Value> {
    let type_error = || PyTypeError::new_err(format!("expected {}, got {}", model.type_ref_name(ty), obj));
    match ty {
        TypeRef::Data(DataType::Boolean) => obj.extract::<bool>().map(Value::Boolean).map_err(|_| type_error()),
        TypeRef::Data(DataType::Integer) => {
            if obj.is_instance_of::<pyo3::types::PyBool>() {
                return Err(type_error());
            }
            obj.extract::<i64>().map(Value::Integer).map_err(|_| type_error())
        }
        TypeRef::Data(DataType::Float) => obj.extract::<f64>().map(Value::Float).map_err(|_| type_error()),
        TypeRef::Data(DataType::String) => obj.extract::<String>().map(Value::String).map_err(|_| type_error()),
        TypeRef::Data(DataType::Date) => {
            let text: String = match obj.extract::<String>() {
                Ok(s) => s,
                Err(_) => obj.call_method0("isoformat").and_then(|s| s.extract()).map_err(|_| type_error())?,
            };
            evaluate_literal(model, &format!("@{}", text.trim_start_matches('@'))).map_err(PyValueError::new_err)
        }
        TypeRef::Data(DataType::MonetaryValue) => {
            if let Ok(m) = obj.cast::<Money>() {
                return Ok(Value::Monetary(m.get().0.clone()));
            }
            let text: String = obj.extract().map_err(|_| type_error())?;
            let (amount, currency) = text
                .rsplit_once(' ')
                .ok_or_else(|| PyValueError::new_err(format!("`{text}` is not `<amount> <CUR>`")))?;
            CoreMoney::parse(amount.trim(), currency.trim())
                .map(Value::Monetary)
                .map_err(|e| PyValueError::new_err(e.to_string()))
        }
        TypeRef::Enumeration(e) => {
            let literal: String = obj.extract().map_err(|_| type_error())?;
            let literal = literal.rsplit("::").next().unwrap_or(&literal).to_owned();
            Ok(Value::Enum { enumeration: e.clone(), literal })
        }
        TypeRef::Class(_) => {
            let name: String = obj.extract().map_err(|_| type_error())?;
            let id = object_id(model, &name)?;
            Ok(Value::Ref(id))
        }
    }
}

fn class_id(model: &ProjectModel, key: &str) -> PyResult<ElementId> {
    model
        .class_by_name(key)
        .map(|c| c.id.clone())
        .or_else(|| model.class(&ElementId::new(key)).map(|c| c.id.clone()))
        .ok_or_else(|| ModelError::new_err(format!("UnknownClass: no class `{key}`")))
}

fn object_id(model: &ProjectModel, key: &str) -> PyResult<ElementId> {
    model
        .object_by_name(key)
        .map(|o| o.id.clone())
        .or_else(|| model.object(&ElementId::new(key)).map(|o| o.id.clone()))
        .ok_or_else(|| ModelError::new_err(format!("UnknownObject: no object `{key}`")))
}

fn association_id(model: &ProjectModel, key: &str) -> PyResult<ElementId> {
    model
        .association_by_name(key)
        .map(|a| a.id.clone())
        .or_else(|| model.association(&ElementId::new(key)).map(|a| a.id.clone()))
        .ok_or_else(|| ModelError::new_err(format!("UnknownElement: no association `{key}`")))
}

/// `"Integer"`, `"MonetaryValue"`, ... or the name of a class or enumeration.
fn type_ref(model: &ProjectModel, name: &str) -> PyResult<TypeRef> {
    if let Some(d) = DataType::from_name(name) {
        return Ok(TypeRef::Data(d));
    }
    if let Some(e) = model.enumeration_by_name(name) {
        return Ok(TypeRef::Enumeration(e.id.clone()));
    }
    if let Some(c) = model.class_by_name(name) {
        return Ok(TypeRef::Class(c.id.clone()));
    }
    Err(ModelError::new_err(format!("UnknownType: no type `{name}`")))
}

fn multiplicity(text: &str) -> PyResult<Multiplicity> {
    Multiplicity::parse(text).ok_or_else(|| ModelError::new_err(format!("BadMultiplicity: `{text}`")))
}

/// An editable project.
#[pyclass(module = "umlpp")]
pub struct Project {
    session: Session,
}

impl Project {
    fn edit<T>(&mut self, op: &str, edit: impl FnOnce(&mut ProjectModel) -> Result<T, KernelError>) -> PyResult<T> {
        self.session.apply(op, &[], edit).map(|m| m.result).map_err(model_err)
    }

    fn model(&self) -> &ProjectModel {
        self.session.model()
    }
}

#[pymethods]
impl Project {
    #[new]
    fn new(name: &str) -> Self {
        Project { session: Session::new(ProjectModel::new(name), vec![]) }
    }

    /// Reads a `.umlpp.json` document from `path`.
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| LoadError::new_err(format!("{}: {e}", path.display())))?;
        Self::loads(&String::from_utf8_lossy(&bytes))
    }

    #[staticmethod]
    fn loads(text: &str) -> PyResult<Self> {
        Session::load(text.as_bytes()).map(|session| Project { session }).map_err(|e| LoadError::new_err(e.to_string()))
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        std::fs::write(&path, self.session.save()).map_err(|e| PyException::new_err(format!("{}: {e}", path.display())))
    }

    /// The canonical document text.
    fn dumps(&self) -> String {
        self.session.save()
    }

    #[getter]
    fn name(&self) -> String {
        self.model().name().to_owned()
    }

    #[getter]
    fn revision(&self) -> u64 {
        self.session.revision()
    }

    #[pyo3(signature = (name, is_abstract = false, superclass = None))]
    fn create_class(&mut self, name: &str, is_abstract: bool, superclass: Option<&str>) -> PyResult<String> {
        let sup = superclass.map(|s| class_id(self.model(), s)).transpose()?;
        let c = self.edit("createClass", |m| m.create_class(name, is_abstract, sup.as_ref()))?;
        Ok(c.id.to_string())
    }

    #[pyo3(signature = (class_name, name, type_name, derivation = None))]
    fn add_attribute(
        &mut self,
        class_name: &str,
        name: &str,
        type_name: &str,
        derivation: Option<&str>,
    ) -> PyResult<String> {
        let cid = class_id(self.model(), class_name)?;
        let ty = type_ref(self.model(), type_name)?;
        let (a, _) = self.edit("addAttribute", |m| m.add_attribute(&cid, name, ty, derivation))?;
        Ok(a.id.to_string())
    }

    /// `params` is a list of `(name, type_name)` pairs.
    #[pyo3(signature = (class_name, name, body, return_type, params = Vec::new(), monitored = false))]
    fn add_operation(
        &mut self,
        class_name: &str,
        name: &str,
        body: &str,
        return_type: &str,
        params: Vec<(String, String)>,
        monitored: bool,
    ) -> PyResult<String> {
        let model = self.model();
        let cid = class_id(model, class_name)?;
        let params = params
            .into_iter()
            .map(|(n, t)| Ok(Param { name: n, ty: type_ref(model, &t)? }))
            .collect::<PyResult<Vec<_>>>()?;
        let spec = OperationSpec {
            name: name.to_owned(),
            params,
            return_type: type_ref(model, return_type)?,
            body: body.to_owned(),
            monitored,
        };
        let op = self.edit("addOperation", |m| m.add_operation(&cid, spec))?;
        Ok(op.id.to_string())
    }

    /// The message is an expression; it defaults to the quoted name.
    #[pyo3(signature = (class_name, name, body, message = None))]
    fn add_constraint(&mut self, class_name: &str, name: &str, body: &str, message: Option<&str>) -> PyResult<String> {
        let cid = class_id(self.model(), class_name)?;
        let message = message.map_or_else(|| umlpp_core::expr::quote_string(name), str::to_owned);
        let k = self.edit("addConstraint", |m| m.add_constraint(&cid, name, body, &message))?;
        Ok(k.id.to_string())
    }

    /// Each end is `(class_name, role, multiplicity)`.
    fn create_association(
        &mut self,
        name: &str,
        end1: (String, String, String),
        end2: (String, String, String),
    ) -> PyResult<String> {
        let end = |(class, role, mult): (String, String, String)| -> PyResult<AssociationEnd> {
            Ok(AssociationEnd { class: class_id(self.model(), &class)?, role, multiplicity: multiplicity(&mult)? })
        };
        let (e1, e2) = (end(end1)?, end(end2)?);
        let a = self.edit("createAssociation", |m| m.create_association(name, e1, e2))?;
        Ok(a.id.to_string())
    }

    fn declare_delegation(&mut self, class_name: &str, name: &str, target: &str) -> PyResult<String> {
        let (cid, tid) = (class_id(self.model(), class_name)?, class_id(self.model(), target)?);
        let d = self.edit("declareDelegation", |m| m.declare_delegation(&cid, name, &tid))?;
        Ok(d.id.to_string())
    }

    fn instantiate(&mut self, class_name: &str, name: &str) -> PyResult<String> {
        let cid = class_id(self.model(), class_name)?;
        let o = self.edit("instantiate", |m| m.instantiate(&cid, name))?;
        Ok(o.id.to_string())
    }

    /// Sets a slot from a Python value; `None` clears it.
    fn set_slot(&mut self, object: &str, attribute: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let model = self.model();
        let oid = object_id(model, object)?;
        let action = if value.is_none() {
            SlotAction::Clear
        } else {
            let class = &model.object(&oid).expect("resolved above").class;
            let ty = model
                .effective_attributes(class)
                .into_iter()
                .find(|a| a.name == attribute)
                .map(|a| a.ty.clone())
                .ok_or_else(|| ModelError::new_err(format!("UnknownFeature: no attribute `{attribute}`")))?;
            SlotAction::Set(value_from_py(model, value, &ty)?)
        };
        self.edit("setSlot", |m| m.set_slot(&oid, attribute, action))
    }

    #[pyo3(signature = (object, delegation, target = None))]
    fn set_delegate(&mut self, object: &str, delegation: &str, target: Option<&str>) -> PyResult<()> {
        let oid = object_id(self.model(), object)?;
        let tid = target.map(|t| object_id(self.model(), t)).transpose()?;
        self.edit("setDelegate", |m| m.set_delegate(&oid, delegation, tid.as_ref()))
    }

    fn link(&mut self, association: &str, end1: &str, end2: &str) -> PyResult<String> {
        let model = self.model();
        let (a, x, y) = (association_id(model, association)?, object_id(model, end1)?, object_id(model, end2)?);
        let l = self.edit("createLink", |m| m.create_link(&a, &x, &y))?;
        Ok(l.id.to_string())
    }

    fn delete_object(&mut self, object: &str) -> PyResult<()> {
        let oid = object_id(self.model(), object)?;
        self.edit("deleteObject", |m| m.delete_object(&oid))
    }

    /// Renames any named element: class, feature, association, enumeration
    /// or object. Expressions that use the old name are rewritten.
    fn rename(&mut self, element_id: &str, new_name: &str) -> PyResult<()> {
        let id = ElementId::new(element_id);
        self.edit("rename", |m| m.rename_element(&id, new_name)).map(|_| ())
    }

    /// Evaluates `expr` with `self` bound to `context`.
    fn eval(&self, py: Python<'_>, context: &str, expr: &str) -> PyResult<Py<PyAny>> {
        let model = self.model();
        let ctx = object_id(model, context)?;
        let r = engine::evaluate(model, &ctx, expr).map_err(|e| PyValueError::new_err(e.to_string()))?;
        result_to_py(py, model, &r)
    }

    #[pyo3(signature = (object, operation, *args))]
    fn invoke(
        &self,
        py: Python<'_>,
        object: &str,
        operation: &str,
        args: Vec<Bound<'_, PyAny>>,
    ) -> PyResult<Py<PyAny>> {
        let model = self.model();
        let oid = object_id(model, object)?;
        let params = engine::operation_params(model, &oid, operation).unwrap_or_default();
        let values = args
            .iter()
            .enumerate()
            .map(|(i, a)| match params.get(i) {
                Some(p) => value_from_py(model, a, &p.ty),
                None => Err(PyTypeError::new_err(format!("`{operation}` takes {} argument(s)", params.len()))),
            })
            .collect::<PyResult<Vec<_>>>()?;
        let r = engine::invoke(model, &oid, operation, values).map_err(invoke_err)?;
        result_to_py(py, model, &r)
    }

    /// Report entries at the current revision, as dictionaries.
    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &report_to_json(self.session.report().0)["entries"])
    }

    /// The report as `VIOLATED ...` lines.
    fn report_text(&self) -> String {
        export_report(self.session.report().0, ReportFormat::Text)
    }

    fn monitors(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &monitors_to_json(self.session.report().1))
    }

    fn has_violations(&self) -> bool {
        self.session.report().0.has_violations()
    }

    /// Instantiable classes as `(id, name)` pairs.
    fn palette(&self) -> Vec<(String, String)> {
        self.model().palette().into_iter().map(|(id, name)| (id.to_string(), name)).collect()
    }

    fn classes(&self) -> Vec<(String, String)> {
        self.model().classes().map(|c| (c.id.to_string(), c.name.clone())).collect()
    }

    fn objects(&self) -> Vec<(String, String, String)> {
        let m = self.model();
        m.objects()
            .map(|o| (o.id.to_string(), o.name.clone(), m.class(&o.class).map_or_else(String::new, |c| c.name.clone())))
            .collect()
    }

    /// Current slot value, `None` if unset, or `Undefined` for a derived
    /// slot that could not be computed.
    fn slot(&self, py: Python<'_>, object: &str, attribute: &str) -> PyResult<Py<PyAny>> {
        self.eval(py, object, &format!("self.{attribute}")).map(|v| {
            let unset = v.bind(py).cast::<Undefined>().is_ok_and(|u| u.get().reason == "unset-slot");
            if unset {
                py.None()
            } else {
                v
            }
        })
    }

    fn __repr__(&self) -> String {
        format!("Project({:?}, revision={})", self.model().name(), self.session.revision())
    }
}

#[pymodule]
fn umlpp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Project>()?;
    m.add_class::<Money>()?;
    m.add_class::<Undefined>()?;
    m.add("ModelError", m.py().get_type::<ModelError>())?;
    m.add("LoadError", m.py().get_type::<LoadError>())?;
    Ok(())
}
