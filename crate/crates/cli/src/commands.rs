//! Headless subcommands. Each returns a process exit code and writes to the
//! given streams, so tests can drive them without spawning a process.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use umlpp_core::engine::{full_report, invoke, InvokeError};
use umlpp_core::expr::{evaluate_literal, ExprError};
use umlpp_core::model::ObjectInst;
use umlpp_core::persist::{self, export_report, ReportFormat};
use umlpp_core::{DataType, Money, ProjectModel, Session, TypeRef, Value};

use crate::api::{self, ApiState};

pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_VIOLATIONS: u8 = 1;
pub const EXIT_LOAD: u8 = 2;
pub const EXIT_USAGE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "umlpp", version, about = "Executable UML++ projects: check, evaluate, invoke, serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an empty project document.
    New { file: PathBuf },
    /// Evaluate every constraint and print the violation report.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate an expression with `self` bound to an object.
    Eval {
        file: PathBuf,
        #[arg(long)]
        context: String,
        expr: String,
    },
    /// Invoke an operation on an object.
    Invoke {
        file: PathBuf,
        #[arg(long)]
        object: String,
        #[arg(long)]
        op: String,
        /// `name=value`, one per parameter.
        #[arg(long = "arg")]
        args: Vec<String>,
    },
    /// Serve the HTTP API (and optionally the diagram UI).
    Serve {
        file: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long)]
        no_autosave: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_CLEAN };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            code
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match cli.command {
        Command::New { file } => new(&file, out, err),
        Command::Check { file, json } => check(&file, json, out, err),
        Command::Eval { file, context, expr } => eval(&file, &context, &expr, out, err),
        Command::Invoke { file, object, op, args } => invoke_op(&file, &object, &op, &args, out, err),
        Command::Serve { file, port, host, ui_dir, no_autosave } => {
            serve(&file, host.as_deref().unwrap_or("127.0.0.1"), port, ui_dir, !no_autosave, err)
        }
    }
}

fn load(file: &Path, err: &mut dyn Write) -> Result<Session, u8> {
    let bytes = fs::read(file).map_err(|e| {
        let _ = writeln!(err, "cannot read {}: {e}", file.display());
        EXIT_LOAD
    })?;
    Session::load(&bytes).map_err(|e| {
        let _ = writeln!(err, "{}: {e}", file.display());
        EXIT_LOAD
    })
}

pub fn new(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    if file.exists() {
        let _ = writeln!(err, "{} already exists", file.display());
        return EXIT_USAGE;
    }
    let name = file
        .file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.strip_suffix(persist::FILE_EXTENSION).unwrap_or(n).trim_end_matches('.'))
        .filter(|n| !n.is_empty())
        .unwrap_or("Untitled");
    let text = persist::save(&ProjectModel::new(name), &[]);
    match fs::OpenOptions::new().write(true).create_new(true).open(file).and_then(|mut f| f.write_all(text.as_bytes()))
    {
        Ok(()) => {
            let _ = writeln!(out, "created {}", file.display());
            EXIT_CLEAN
        }
        Err(e) => {
            let _ = writeln!(err, "cannot write {}: {e}", file.display());
            EXIT_USAGE
        }
    }
}

pub fn check(file: &Path, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let session = match load(file, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let (report, _) = full_report(session.model(), session.revision());
    let format = if json { ReportFormat::Json } else { ReportFormat::Text };
    let _ = out.write_all(export_report(&report, format).as_bytes());
    if report.has_violations() {
        EXIT_VIOLATIONS
    } else {
        EXIT_CLEAN
    }
}

fn find_object<'m>(model: &'m ProjectModel, name: &str, flag: &str, err: &mut dyn Write) -> Result<&'m ObjectInst, u8> {
    model.object_by_name(name).ok_or_else(|| {
        let names: Vec<&str> = model.objects().map(|o| o.name.as_str()).collect();
        let _ = writeln!(err, "no object named `{name}` (--{flag}); objects: {}", names.join(", "));
        EXIT_USAGE
    })
}

fn print_result(model: &ProjectModel, r: &Result<Value, umlpp_core::expr::Undefined>, out: &mut dyn Write) {
    let _ = match r {
        Ok(v) => writeln!(out, "{}", model.render_value(v)),
        Err(u) => writeln!(out, "undefined: {} ({})", u.reason.code(), u.detail),
    };
}

pub fn eval(file: &Path, context: &str, expr: &str, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let session = match load(file, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let model = session.model();
    let obj = match find_object(model, context, "context", err) {
        Ok(o) => o,
        Err(code) => return code,
    };
    match umlpp_core::engine::evaluate(model, &obj.id, expr) {
        Ok(r) => {
            print_result(model, &r, out);
            EXIT_CLEAN
        }
        Err(e @ (ExprError::Parse(_) | ExprError::Type(_))) => {
            let _ = writeln!(err, "{e}");
            EXIT_LOAD
        }
    }
}

pub fn invoke_op(
    file: &Path,
    object: &str,
    op: &str,
    raw_args: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> u8 {
    let session = match load(file, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let model = session.model();
    let obj = match find_object(model, object, "object", err) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let mut pairs = Vec::new();
    for a in raw_args {
        match a.split_once('=') {
            Some((k, v)) => pairs.push((k.trim(), v)),
            None => {
                let _ = writeln!(err, "argument `{a}` is not name=value");
                return EXIT_USAGE;
            }
        }
    }
    // Unresolvable here means unknown or behind an unbound delegate; the
    // engine tells the two apart.
    let Some(params) = umlpp_core::engine::operation_params(model, &obj.id, op) else {
        return match invoke(model, &obj.id, op, Vec::new()) {
            Ok(r) => {
                print_result(model, &r, out);
                EXIT_CLEAN
            }
            Err(e) => {
                let _ = writeln!(err, "{e}");
                EXIT_USAGE
            }
        };
    };
    let signature: Vec<String> = params.iter().map(|p| format!("{}: {}", p.name, model.type_ref_name(&p.ty))).collect();
    if pairs.len() != params.len() {
        let _ = writeln!(
            err,
            "{}",
            InvokeError::ArityMismatch { operation: op.to_owned(), expected: signature, given: pairs.len() }
        );
        return EXIT_USAGE;
    }
    let mut args = Vec::new();
    for p in &params {
        let Some((_, text)) = pairs.iter().find(|(k, _)| *k == p.name) else {
            let _ = writeln!(err, "missing argument `{}`; `{op}` takes ({})", p.name, signature.join(", "));
            return EXIT_USAGE;
        };
        match parse_arg(model, text, &p.ty) {
            Ok(v) => args.push(v),
            Err(msg) => {
                let _ = writeln!(err, "argument `{}`: {msg}", p.name);
                return EXIT_USAGE;
            }
        }
    }
    match invoke(model, &obj.id, op, args) {
        Ok(r) => {
            print_result(model, &r, out);
            EXIT_CLEAN
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_USAGE
        }
    }
}

/// Reads a command-line argument as a value of type `ty`. Data values use
/// expression literal syntax, with a few shell-friendly shortcuts: strings
/// may be unquoted, dates may omit `@`, enumeration literals may omit the
/// enumeration name, and objects are given by name.
pub fn parse_arg(model: &ProjectModel, text: &str, ty: &TypeRef) -> Result<Value, String> {
    let text = text.trim();
    match ty {
        TypeRef::Data(DataType::String) if !text.starts_with('\'') => Ok(Value::String(text.to_owned())),
        TypeRef::Data(DataType::Date) if !text.starts_with('@') => parse_arg(model, &format!("@{text}"), ty),
        TypeRef::Data(DataType::MonetaryValue) => {
            let (amount, currency) =
                text.rsplit_once(' ').ok_or_else(|| format!("`{text}` is not `<amount> <CUR>`"))?;
            Money::parse(amount.trim(), currency.trim()).map(Value::Monetary).map_err(|e| e.to_string())
        }
        TypeRef::Enumeration(e) => {
            let def = model.enumeration(e).ok_or("unknown enumeration")?;
            let literal = text.rsplit("::").next().unwrap_or(text);
            if def.literals.iter().any(|l| l == literal) {
                Ok(Value::Enum { enumeration: e.clone(), literal: literal.to_owned() })
            } else {
                Err(format!("`{text}` is not a literal of {} ({})", def.name, def.literals.join(", ")))
            }
        }
        TypeRef::Class(_) => {
            let obj = model.object_by_name(text).ok_or_else(|| format!("no object named `{text}`"))?;
            if model.value_conforms(&Value::Ref(obj.id.clone()), ty) {
                Ok(Value::Ref(obj.id.clone()))
            } else {
                Err(format!("`{text}` is not a {}", model.type_ref_name(ty)))
            }
        }
        TypeRef::Data(d) => {
            let v = evaluate_literal(model, text).map_err(|e| e.to_string())?;
            match (v, d) {
                (Value::Integer(i), DataType::Float) => Ok(Value::Float(i as f64)),
                (v, _) if model.value_conforms(&v, ty) => Ok(v),
                (v, _) => Err(format!("expected {d}, got {}", model.render_value(&v))),
            }
        }
    }
}

pub fn serve(file: &Path, host: &str, port: u16, ui_dir: Option<PathBuf>, autosave: bool, err: &mut dyn Write) -> u8 {
    let session = match load(file, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let addr: SocketAddr = match format!("{host}:{port}").parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "bad address {host}:{port}: {e}");
            return EXIT_USAGE;
        }
    };
    let state = ApiState::new(session, autosave.then(|| file.to_path_buf()));
    let app = api::app(state, ui_dir.as_deref());
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "cannot start runtime: {e}");
            return EXIT_USAGE;
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(addr).await {
            Ok(l) => l,
            Err(e) => {
                let _ = writeln!(err, "cannot bind {addr}: {e}");
                return EXIT_USAGE;
            }
        };
        tracing::info!(%addr, file = %file.display(), autosave, "serving");
        match axum::serve(listener, app).await {
            Ok(()) => EXIT_CLEAN,
            Err(e) => {
                let _ = writeln!(err, "server error: {e}");
                EXIT_USAGE
            }
        }
    })
}
