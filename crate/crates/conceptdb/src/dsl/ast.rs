use crate::expr::Expr;
use crate::schema::Accumulator;
use crate::value::{render_literal, Value};
use std::fmt;

/// Textual surface of a reference: `Product#0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefLit {
    pub set: String,
    pub ordinal: u64,
}

impl fmt::Display for RefLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.set, self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    SetDecl { name: String },
    FuncDecl { name: String, input: String, output: String },
    CalcDecl { name: String, input: String, output: String, expr: Expr },
    LinkDecl { name: String, input: String, target: String, matches: Vec<(Vec<String>, String)> },
    AggDecl {
        name: String,
        group: String,
        output: String,
        accumulator: Accumulator,
        fact: String,
        link: String,
        measure: Expr,
    },
    ProdDecl { name: String, components: Vec<String>, predicate: Option<Expr> },
    Add { set: String, assigns: Vec<(String, Value)> },
    Del { target: RefLit },
    Upd { target: RefLit, function: String, value: Value },
    Get { target: RefLit, path: Vec<String> },
    Show { set: String, paths: Vec<Vec<String>> },
    LoadCsv { set: String, file: String },
    SaveCsv { set: String, file: String },
    Dump { file: String },
    LoadSnapshot { file: String },
    Eval,
}

/// A parsed statement with the source position of its first token.
#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    pub line: u32,
    pub col: u32,
}

impl Statement {
    pub fn new(kind: StatementKind) -> Self {
        Statement { kind, line: 1, col: 1 }
    }
}

fn render_path(path: &[String]) -> String {
    path.join(".")
}

/// Canonical single-line text of a statement; re-parsing it yields a
/// structurally equal statement.
pub fn render(stmt: &Statement) -> String {
    use StatementKind::*;
    match &stmt.kind {
        SetDecl { name } => format!("SET {name};"),
        FuncDecl { name, input, output } => format!("FUNC {name}: {input} -> {output};"),
        CalcDecl { name, input, output, expr } => {
            format!("CALC {name}: {input} -> {output} = {expr};")
        }
        LinkDecl { name, input, target, matches } => {
            let ms: Vec<String> = matches
                .iter()
                .map(|(p, t)| format!("{} == {t}", render_path(p)))
                .collect();
            format!("LINK {name}: {input} -> {target} ON {};", ms.join(", "))
        }
        AggDecl { name, group, output, accumulator, fact, link, measure } => format!(
            "AGG {name}: {group} -> {output} = {}({fact}.{link}, {measure});",
            accumulator.keyword()
        ),
        ProdDecl { name, components, predicate } => {
            let mut s = format!("PROD {name} = {}", components.join(" * "));
            if let Some(p) = predicate {
                s.push_str(&format!(" WHERE {p}"));
            }
            s.push(';');
            s
        }
        Add { set, assigns } => {
            if assigns.is_empty() {
                format!("ADD {set};")
            } else {
                let parts: Vec<String> = assigns
                    .iter()
                    .map(|(f, v)| format!("{f}={}", render_literal(v)))
                    .collect();
                format!("ADD {set} ({});", parts.join(", "))
            }
        }
        Del { target } => format!("DEL {target};"),
        Upd { target, function, value } => {
            format!("UPD {target}.{function} = {};", render_literal(value))
        }
        Get { target, path } => format!("GET {target}.{};", render_path(path)),
        Show { set, paths } => {
            if paths.is_empty() {
                format!("SHOW {set};")
            } else {
                let ps: Vec<String> = paths.iter().map(|p| render_path(p)).collect();
                format!("SHOW {set} ({});", ps.join(", "))
            }
        }
        LoadCsv { set, file } => format!("LOAD {set} FROM {};", crate::value::render_string(file)),
        SaveCsv { set, file } => format!("SAVE {set} TO {};", crate::value::render_string(file)),
        Dump { file } => format!("DUMP {};", crate::value::render_string(file)),
        LoadSnapshot { file } => format!("LOAD FROM {};", crate::value::render_string(file)),
        Eval => "EVAL;".to_string(),
    }
}

/// Renders a whole script, one statement per line.
pub fn render_script(stmts: &[Statement]) -> String {
    let mut out = String::new();
    for s in stmts {
        out.push_str(&render(s));
        out.push('\n');
    }
    out
}
