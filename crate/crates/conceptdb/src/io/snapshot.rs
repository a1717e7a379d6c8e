use crate::dsl::ast::{render, Statement, StatementKind};
use crate::dsl::{parse, parse_literal_text};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::schema::{Decl, FuncKey, FunctionKind, Schema, SetKind};
use crate::state::State;
use crate::value::render_literal;
use std::io::{BufRead, BufReader, Read, Write};

const HEADER: &str = "COMSNAP 1";

/// Schema declarations as statements, in user-declaration order. Projections
/// are engine-generated and omitted; PROD recreates them.
fn schema_statements(schema: &Schema) -> Vec<Statement> {
    let mut out = Vec::new();
    for decl in schema.decls() {
        let kind = match decl {
            Decl::Set(name) => {
                let set = schema.set(name).expect("declared set exists");
                match &set.kind {
                    SetKind::Entity => StatementKind::SetDecl { name: name.clone() },
                    SetKind::Product { components, predicate } => StatementKind::ProdDecl {
                        name: name.clone(),
                        components: components.clone(),
                        predicate: predicate.clone(),
                    },
                    SetKind::Primitive => continue,
                }
            }
            Decl::Func(key) => {
                let f = schema.function(&key.input, &key.name).expect("declared function exists");
                match &f.kind {
                    FunctionKind::Base => StatementKind::FuncDecl {
                        name: f.name.clone(),
                        input: f.input.clone(),
                        output: f.output.clone(),
                    },
                    FunctionKind::Calc { expr } => StatementKind::CalcDecl {
                        name: f.name.clone(),
                        input: f.input.clone(),
                        output: f.output.clone(),
                        expr: expr.clone(),
                    },
                    FunctionKind::Link { target, matches } => StatementKind::LinkDecl {
                        name: f.name.clone(),
                        input: f.input.clone(),
                        target: target.clone(),
                        matches: matches.clone(),
                    },
                    FunctionKind::Aggregate { fact_set, grouping_link, measure, accumulator } => {
                        StatementKind::AggDecl {
                            name: f.name.clone(),
                            group: f.input.clone(),
                            output: f.output.clone(),
                            accumulator: *accumulator,
                            fact: fact_set.clone(),
                            link: grouping_link.clone(),
                            measure: measure.clone(),
                        }
                    }
                    FunctionKind::Projection { .. } => continue,
                }
            }
        };
        out.push(Statement::new(kind));
    }
    out
}

/// Writes the whole engine as line-oriented UTF-8 text: a version header,
/// schema statements, one `E` line per alive entity element and one `V` line
/// per non-Null base entry. Derived columns are recomputed on load, not
/// stored. Evaluates first so the state saved is a clean one.
pub fn save_snapshot<W: Write>(schema: &Schema, state: &mut State, mut writer: W) -> Result<()> {
    evaluate(schema, state)?;
    let mut text = String::new();
    text.push_str(HEADER);
    text.push('\n');
    for stmt in schema_statements(schema) {
        text.push_str(&render(&stmt));
        text.push('\n');
    }
    for set in schema.sets() {
        if !set.is_entity() {
            continue;
        }
        if let Some(reg) = state.registry(&set.name) {
            for &ord in reg.ordinals() {
                text.push_str(&format!("E {} {ord}\n", set.name));
            }
        }
    }
    for (f, ord, v) in state.base_entries(schema) {
        text.push_str(&format!("V {} {ord} {} {}\n", f.input, f.name, render_literal(v)));
    }
    writer.write_all(text.as_bytes())?;
    writer.flush()?;
    Ok(())
}

/// Reads a snapshot back into a fresh schema and state, then evaluates.
/// Ordinals are restored exactly as saved.
pub fn load_snapshot<R: Read>(reader: R) -> Result<(Schema, State)> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or(Error::SnapshotFormatError { line: 1, msg: "empty file".into() })?
        .map_err(Error::Io)?;
    if header != HEADER {
        if let Some(version) = header.strip_prefix("COMSNAP ") {
            return Err(Error::VersionMismatch(version.to_string()));
        }
        return Err(Error::SnapshotFormatError { line: 1, msg: "missing COMSNAP header".into() });
    }

    let mut schema = Schema::new();
    let mut state = State::new();
    let mut lineno: u32 = 1;
    for line in lines {
        lineno += 1;
        let line = line.map_err(Error::Io)?;
        if line.is_empty() {
            continue;
        }
        let at = |e: Error| match e {
            Error::SnapshotFormatError { .. } => e,
            other => Error::SnapshotFormatError { line: lineno, msg: other.to_string() },
        };
        if let Some(rest) = line.strip_prefix("E ") {
            let mut parts = rest.split_whitespace();
            let (Some(set), Some(ord), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::SnapshotFormatError { line: lineno, msg: "bad E line".into() });
            };
            let ord: u64 = ord.parse().map_err(|_| Error::SnapshotFormatError {
                line: lineno,
                msg: format!("bad ordinal `{ord}`"),
            })?;
            match schema.set(set) {
                Some(s) if s.is_entity() => {}
                _ => {
                    return Err(Error::SnapshotFormatError {
                        line: lineno,
                        msg: format!("`{set}` is not a declared entity set"),
                    })
                }
            }
            state.insert_exact_element(set, ord).map_err(at)?;
        } else if let Some(rest) = line.strip_prefix("V ") {
            let mut parts = rest.splitn(4, ' ');
            let (Some(set), Some(ord), Some(func), Some(lit)) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::SnapshotFormatError { line: lineno, msg: "bad V line".into() });
            };
            let ord: u64 = ord.parse().map_err(|_| Error::SnapshotFormatError {
                line: lineno,
                msg: format!("bad ordinal `{ord}`"),
            })?;
            let value = parse_literal_text(lit).map_err(at)?;
            let key = FuncKey::new(set, func);
            let r = crate::value::Ref::new(set, ord);
            state.set_value(&schema, &key, &r, value).map_err(at)?;
        } else {
            // a schema statement in DSL syntax
            let stmts = parse(&line).map_err(at)?;
            for stmt in stmts {
                apply_schema_statement(&mut schema, &stmt).map_err(at)?;
            }
        }
    }
    evaluate(&schema, &mut state)?;
    Ok((schema, state))
}

fn apply_schema_statement(schema: &mut Schema, stmt: &Statement) -> Result<()> {
    match &stmt.kind {
        StatementKind::SetDecl { name } => {
            schema.define_entity_set(name)?;
        }
        StatementKind::FuncDecl { name, input, output } => {
            schema.define_base_function(name, input, output)?;
        }
        StatementKind::CalcDecl { name, input, output, expr } => {
            schema.define_calc(name, input, output, expr.clone())?;
        }
        StatementKind::LinkDecl { name, input, target, matches } => {
            schema.define_link(name, input, target, matches.clone())?;
        }
        StatementKind::AggDecl { name, group, output, accumulator, fact, link, measure } => {
            schema.define_aggregate(name, group, output, fact, link, measure.clone(), *accumulator)?;
        }
        StatementKind::ProdDecl { name, components, predicate } => {
            let comps: Vec<&str> = components.iter().map(|s| s.as_str()).collect();
            schema.define_product(name, &comps, predicate.clone())?;
        }
        other => {
            return Err(Error::SnapshotFormatError {
                line: stmt.line,
                msg: format!("statement not allowed in a snapshot: {other:?}"),
            })
        }
    }
    Ok(())
}
