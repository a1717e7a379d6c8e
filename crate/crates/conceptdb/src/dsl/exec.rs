use super::ast::{RefLit, Statement, StatementKind};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::io::{export_csv, import_csv, load_snapshot, save_snapshot};
use crate::schema::{FuncKey, FunctionKind, Node, Schema};
use crate::state::State;
use crate::value::{render_display, Ref};
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

/// A schema/state pair driven by parsed statements. One session backs both
/// the script runner and the REPL.
#[derive(Debug, Default)]
pub struct Session {
    pub schema: Schema,
    pub state: State,
}

impl Session {
    pub fn new() -> Self {
        Session { schema: Schema::new(), state: State::new() }
    }

    /// Runs one statement, printing its results to `out`. A failing statement
    /// leaves schema and state as they were.
    pub fn execute(&mut self, stmt: &Statement, out: &mut dyn Write) -> Result<()> {
        match &stmt.kind {
            StatementKind::SetDecl { name } => {
                self.schema.define_entity_set(name)?;
            }
            StatementKind::FuncDecl { name, input, output } => {
                self.schema.define_base_function(name, input, output)?;
            }
            StatementKind::CalcDecl { name, input, output, expr } => {
                self.schema.define_calc(name, input, output, expr.clone())?;
            }
            StatementKind::LinkDecl { name, input, target, matches } => {
                self.schema.define_link(name, input, target, matches.clone())?;
            }
            StatementKind::AggDecl { name, group, output, accumulator, fact, link, measure } => {
                self.schema.define_aggregate(
                    name,
                    group,
                    output,
                    fact,
                    link,
                    measure.clone(),
                    *accumulator,
                )?;
            }
            StatementKind::ProdDecl { name, components, predicate } => {
                let comps: Vec<&str> = components.iter().map(|s| s.as_str()).collect();
                self.schema.define_product(name, &comps, predicate.clone())?;
            }
            StatementKind::Add { set, assigns } => {
                let r = self.state.add_element(&self.schema, set)?;
                for (fname, value) in assigns {
                    let key = FuncKey::new(set.clone(), fname.clone());
                    if let Err(e) = self.state.set_value(&self.schema, &key, &r, value.clone()) {
                        // sugar for add + assignments: drop the fresh element
                        // so a failed ADD leaves no partial record
                        let _ = self.state.remove_element(&self.schema, &r);
                        return Err(e);
                    }
                }
                writeln!(out, "{r}")?;
            }
            StatementKind::Del { target } => {
                let r = resolve_ref(target);
                self.state.remove_element(&self.schema, &r)?;
            }
            StatementKind::Upd { target, function, value } => {
                let r = resolve_ref(target);
                let key = FuncKey::new(r.set.clone(), function.clone());
                self.state.set_value(&self.schema, &key, &r, value.clone())?;
            }
            StatementKind::Get { target, path } => {
                let r = resolve_ref(target);
                if self.path_is_stale(&r.set, path) {
                    evaluate(&self.schema, &mut self.state)?;
                }
                let v = self.state.eval_path(&self.schema, &r, path)?;
                writeln!(out, "{}", render_display(&v))?;
            }
            StatementKind::Show { set, paths } => {
                let text = self.show(set, paths)?;
                out.write_all(text.as_bytes())?;
            }
            StatementKind::LoadCsv { set, file } => {
                let f = File::open(Path::new(file))?;
                let n = import_csv(f, set, &mut self.schema, &mut self.state)?;
                writeln!(out, "{n} rows")?;
            }
            StatementKind::SaveCsv { set, file } => {
                // no paths in the statement form: export all base functions
                let paths: Vec<Vec<String>> = self
                    .schema
                    .functions_on(set)
                    .filter(|f| f.is_base())
                    .map(|f| vec![f.name.clone()])
                    .collect();
                let f = File::create(Path::new(file))?;
                let n = export_csv(set, &paths, &self.schema, &self.state, f)?;
                writeln!(out, "{n} rows")?;
            }
            StatementKind::Dump { file } => {
                let f = File::create(Path::new(file))?;
                save_snapshot(&self.schema, &mut self.state, f)?;
            }
            StatementKind::LoadSnapshot { file } => {
                let f = File::open(Path::new(file))?;
                let (schema, state) = load_snapshot(f)?;
                self.schema = schema;
                self.state = state;
            }
            StatementKind::Eval => {
                let report = evaluate(&self.schema, &mut self.state)?;
                out.write_all(report.render().as_bytes())?;
            }
        }
        Ok(())
    }

    /// Whether reading this path would touch a stale derived column.
    fn path_is_stale(&self, anchor: &str, path: &[String]) -> bool {
        let Ok(defs) = self.schema.resolve_path(anchor, path) else {
            return false;
        };
        defs.iter().any(|f| {
            if matches!(f.kind, FunctionKind::Projection { .. }) {
                self.state.is_stale(&Node::ProductSet(f.input.clone()))
            } else if f.is_derived() {
                self.state.is_stale(&Node::Function(f.key()))
            } else {
                false
            }
        })
    }

    fn show(&mut self, set: &str, paths: &[Vec<String>]) -> Result<String> {
        if self.schema.set(set).is_none() {
            return Err(Error::UnknownSet(set.to_string()));
        }
        let paths: Vec<Vec<String>> = if paths.is_empty() {
            self.schema.functions_on(set).map(|f| vec![f.name.clone()]).collect()
        } else {
            paths.to_vec()
        };
        if paths.iter().any(|p| self.path_is_stale(set, p)) {
            evaluate(&self.schema, &mut self.state)?;
        }

        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["ref".to_string()];
        header.extend(paths.iter().map(|p| p.join(".")));
        rows.push(header);
        for r in self.state.list_refs(&self.schema, set)? {
            let mut row = vec![r.to_string()];
            for p in &paths {
                let v = self.state.eval_path(&self.schema, &r, p)?;
                row.push(render_display(&v));
            }
            rows.push(row);
        }

        let cols = rows[0].len();
        let mut widths = vec![0usize; cols];
        for row in &rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let mut text = String::new();
        for (ri, row) in rows.iter().enumerate() {
            for (i, cell) in row.iter().enumerate() {
                let _ = write!(text, "{:<w$}", cell, w = widths[i]);
                if i + 1 < cols {
                    text.push_str("  ");
                }
            }
            text.push('\n');
            if ri == 0 {
                for (i, w) in widths.iter().enumerate() {
                    text.push_str(&"-".repeat(*w));
                    if i + 1 < cols {
                        text.push_str("--");
                    }
                }
                text.push('\n');
            }
        }
        Ok(text)
    }
}

fn resolve_ref(lit: &RefLit) -> Ref {
    Ref::new(lit.set.clone(), lit.ordinal)
}

/// Renders an execution error the way the CLI and REPL print it.
pub fn render_error(err: &Error, line: u32, col: u32) -> String {
    match err {
        // lex/parse errors carry their own position
        Error::LexError { line, col, msg } => format!("ERROR LexError: {msg} at {line}:{col}"),
        Error::ParseError { line, col, msg } => format!("ERROR ParseError: {msg} at {line}:{col}"),
        other => format!("ERROR {}: {other} at {line}:{col}", other.code()),
    }
}

/// Parses and runs a whole script, stopping at the first failing statement.
/// The error is the rendered `ERROR ...` line.
pub fn run_script(
    session: &mut Session,
    text: &str,
    out: &mut dyn Write,
) -> std::result::Result<(), String> {
    let stmts = crate::dsl::parse(text).map_err(|e| render_error(&e, 1, 1))?;
    for stmt in &stmts {
        session
            .execute(stmt, out)
            .map_err(|e| render_error(&e, stmt.line, stmt.col))?;
    }
    Ok(())
}
