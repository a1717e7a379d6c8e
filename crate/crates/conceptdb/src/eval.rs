use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, UnOp};
use crate::schema::{Accumulator, FuncKey, FunctionKind, Node, Schema, SetKind};
use crate::state::{Column, State};
use crate::value::{Ref, Value, ValueKey};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct ReportEntry {
    pub name: String,
    pub kind: &'static str,
    pub rows: usize,
    pub duration: Duration,
}

/// What one evaluation pass recomputed. Clean nodes do not appear.
#[derive(Debug, Clone, Default)]
pub struct EvaluationReport {
    pub entries: Vec<ReportEntry>,
}

impl EvaluationReport {
    /// Fixed-width table: node, kind, rows, milliseconds.
    pub fn render(&self) -> String {
        let mut rows: Vec<[String; 4]> = vec![[
            "node".into(),
            "kind".into(),
            "rows".into(),
            "ms".into(),
        ]];
        for e in &self.entries {
            rows.push([
                e.name.clone(),
                e.kind.to_string(),
                e.rows.to_string(),
                format!("{:.3}", e.duration.as_secs_f64() * 1000.0),
            ]);
        }
        let mut widths = [0usize; 4];
        for row in &rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let mut out = String::new();
        for (ri, row) in rows.iter().enumerate() {
            for (i, cell) in row.iter().enumerate() {
                let _ = write!(out, "{:<w$}", cell, w = widths[i]);
                if i < 3 {
                    out.push_str("  ");
                }
            }
            out.push('\n');
            if ri == 0 {
                for (i, w) in widths.iter().enumerate() {
                    out.push_str(&"-".repeat(*w));
                    if i < 3 {
                        out.push_str("--");
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Recomputes every dirty derived node in dependency order. Afterwards all
/// derived columns are clean and products are populated.
pub fn evaluate(schema: &Schema, state: &mut State) -> Result<EvaluationReport> {
    let diags = schema.validate();
    if !diags.is_empty() {
        return Err(Error::InvalidInput(format!("schema invalid: {}", diags.join("; "))));
    }
    let order = schema.topo_order()?;
    let mut report = EvaluationReport::default();
    for node in order {
        if !state.is_stale(&node) {
            continue;
        }
        let started = Instant::now();
        let (name, kind, rows) = match &node {
            Node::ProductSet(set) => {
                let rows = populate_product(schema, state, set)?;
                (set.clone(), "product", rows)
            }
            Node::Function(key) => {
                let f = schema
                    .function(&key.input, &key.name)
                    .ok_or_else(|| Error::UnknownFunction {
                        input: key.input.clone(),
                        name: key.name.clone(),
                    })?;
                let column = match &f.kind {
                    FunctionKind::Calc { expr } => eval_calc(schema, state, &f.input, expr)?,
                    FunctionKind::Link { target, matches } => {
                        eval_link(schema, state, key, &f.input, target, matches)?
                    }
                    FunctionKind::Aggregate { fact_set, grouping_link, measure, accumulator } => {
                        eval_aggregate(
                            schema,
                            state,
                            &f.input,
                            &f.output,
                            fact_set,
                            grouping_link,
                            measure,
                            *accumulator,
                        )?
                    }
                    // base/projection columns are never recomputed here
                    _ => continue,
                };
                let rows = state.registry(&f.input).map(|r| r.len()).unwrap_or(0);
                state.replace_column(key.clone(), column);
                (key.to_string(), f.kind.name(), rows)
            }
            Node::Membership(_) => continue,
        };
        state.clear_dirty(&node);
        report.entries.push(ReportEntry { name, kind, rows, duration: started.elapsed() });
    }
    Ok(report)
}

/// Interprets an expression for one anchor element, with Null propagation.
pub fn eval_expr(schema: &Schema, state: &State, anchor: &Ref, expr: &Expr) -> Result<Value> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Path(segs) => state.eval_path(schema, anchor, segs),
        Expr::Unary(op, e) => Ok(apply_unary(*op, eval_expr(schema, state, anchor, e)?)),
        Expr::Binary(op, a, b) => {
            let va = eval_expr(schema, state, anchor, a)?;
            let vb = eval_expr(schema, state, anchor, b)?;
            Ok(apply_binary(*op, va, vb))
        }
    }
}

fn apply_unary(op: UnOp, v: Value) -> Value {
    match (op, v) {
        (_, Value::Null) => Value::Null,
        (UnOp::Neg, Value::Int(i)) => i.checked_neg().map(Value::Int).unwrap_or(Value::Null),
        (UnOp::Neg, Value::Float(f)) => Value::Float(-f),
        (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
        _ => Value::Null,
    }
}

/// Binary operators over values. Any Null operand yields Null, except AND/OR
/// which use three-valued logic. Division by zero yields Null.
pub fn apply_binary(op: BinOp, a: Value, b: Value) -> Value {
    match op {
        BinOp::And => return match (truth(&a), truth(&b)) {
            (Some(false), _) | (_, Some(false)) => Value::Bool(false),
            (Some(true), Some(true)) => Value::Bool(true),
            _ => Value::Null,
        },
        BinOp::Or => return match (truth(&a), truth(&b)) {
            (Some(true), _) | (_, Some(true)) => Value::Bool(true),
            (Some(false), Some(false)) => Value::Bool(false),
            _ => Value::Null,
        },
        _ => {}
    }
    if a.is_null() || b.is_null() {
        return Value::Null;
    }
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => arith(op, a, b),
        BinOp::Eq => Value::Bool(equal(&a, &b)),
        BinOp::Ne => Value::Bool(!equal(&a, &b)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => compare(op, &a, &b),
        BinOp::And | BinOp::Or => unreachable!(),
    }
}

fn truth(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        _ => None,
    }
}

fn equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Float(y)) => (*x as f64).to_bits() == y.to_bits(),
        (Value::Float(x), Value::Int(y)) => x.to_bits() == (*y as f64).to_bits(),
        _ => a.same(b),
    }
}

fn arith(op: BinOp, a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                BinOp::Add => x.checked_add(y),
                BinOp::Sub => x.checked_sub(y),
                BinOp::Mul => x.checked_mul(y),
                BinOp::Div => x.checked_div(y),
                _ => unreachable!(),
            };
            r.map(Value::Int).unwrap_or(Value::Null)
        }
        (a, b) => match (as_f64(&a), as_f64(&b)) {
            (Some(x), Some(y)) => match op {
                BinOp::Add => Value::Float(x + y),
                BinOp::Sub => Value::Float(x - y),
                BinOp::Mul => Value::Float(x * y),
                BinOp::Div => {
                    if y == 0.0 {
                        Value::Null
                    } else {
                        Value::Float(x / y)
                    }
                }
                _ => unreachable!(),
            },
            _ => Value::Null,
        },
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn compare(op: BinOp, a: &Value, b: &Value) -> Value {
    let ord = match (a, b) {
        (Value::Str(x), Value::Str(y)) => x.partial_cmp(y),
        (a, b) => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => x.partial_cmp(&y),
            _ => None,
        },
    };
    match ord {
        None => Value::Null,
        Some(o) => Value::Bool(match op {
            BinOp::Lt => o.is_lt(),
            BinOp::Le => o.is_le(),
            BinOp::Gt => o.is_gt(),
            BinOp::Ge => o.is_ge(),
            _ => unreachable!(),
        }),
    }
}

fn eval_calc(schema: &Schema, state: &State, input: &str, expr: &Expr) -> Result<Column> {
    let mut column = Column::default();
    if let Some(reg) = state.registry(input) {
        for &ord in reg.ordinals() {
            let anchor = Ref::new(input, ord);
            column.set(ord, eval_expr(schema, state, &anchor, expr)?);
        }
    }
    Ok(column)
}

fn eval_link(
    schema: &Schema,
    state: &State,
    key: &FuncKey,
    input: &str,
    target: &str,
    matches: &[(Vec<String>, String)],
) -> Result<Column> {
    // transient hash index over the target set
    let mut index: HashMap<Vec<ValueKey>, Vec<u64>> = HashMap::new();
    if let Some(reg) = state.registry(target) {
        'rows: for &ord in reg.ordinals() {
            let r = Ref::new(target, ord);
            let mut tuple = Vec::with_capacity(matches.len());
            for (_, tfn) in matches {
                let f = schema.function(target, tfn).ok_or_else(|| Error::UnknownFunction {
                    input: target.to_string(),
                    name: tfn.clone(),
                })?;
                let v = state.get_value(schema, &f.key(), &r)?;
                if v.is_null() {
                    continue 'rows; // a Null key value can never be matched
                }
                tuple.push(v.key());
            }
            index.entry(tuple).or_default().push(ord);
        }
    }

    let mut column = Column::default();
    if let Some(reg) = state.registry(input) {
        'inputs: for &ord in reg.ordinals() {
            let r = Ref::new(input, ord);
            let mut tuple = Vec::with_capacity(matches.len());
            for (path, _) in matches {
                let v = state.eval_path(schema, &r, path)?;
                if v.is_null() {
                    column.set(ord, Value::Null);
                    continue 'inputs;
                }
                tuple.push(v.key());
            }
            match index.get(&tuple).map(|v| v.as_slice()) {
                None | Some([]) => column.set(ord, Value::Null),
                Some([single]) => column.set(ord, Value::Ref(Ref::new(target, *single))),
                Some(_) => {
                    return Err(Error::LinkAmbiguous { function: key.to_string(), input: r })
                }
            }
        }
    }
    Ok(column)
}

#[allow(clippy::too_many_arguments)]
fn eval_aggregate(
    schema: &Schema,
    state: &State,
    group_set: &str,
    output: &str,
    fact_set: &str,
    grouping_link: &str,
    measure: &Expr,
    accumulator: Accumulator,
) -> Result<Column> {
    #[derive(Default, Clone)]
    struct Fold {
        count: u64,
        int_sum: i64,
        float_sum: f64,
        int_overflow: bool,
        min: Option<Value>,
        max: Option<Value>,
    }

    let link_key = FuncKey::new(fact_set, grouping_link);
    let mut folds: HashMap<u64, Fold> = HashMap::new();

    if let Some(facts) = state.registry(fact_set) {
        for &ford in facts.ordinals() {
            let fact = Ref::new(fact_set, ford);
            let group = state.get_value(schema, &link_key, &fact)?;
            let Value::Ref(g) = group else { continue }; // Null-linked facts are skipped
            let m = eval_expr(schema, state, &fact, measure)?;
            if m.is_null() {
                continue; // Null measures are skipped, also by COUNT
            }
            let fold = folds.entry(g.ordinal).or_default();
            fold.count += 1;
            match &m {
                Value::Int(i) => {
                    match fold.int_sum.checked_add(*i) {
                        Some(s) => fold.int_sum = s,
                        None => fold.int_overflow = true,
                    }
                    fold.float_sum += *i as f64;
                }
                Value::Float(f) => fold.float_sum += *f,
                _ => {}
            }
            let less = |a: &Value, b: &Value| match (as_f64(a), as_f64(b)) {
                (Some(x), Some(y)) => x < y,
                _ => false,
            };
            if fold.min.as_ref().map(|c| less(&m, c)).unwrap_or(true) {
                fold.min = Some(m.clone());
            }
            if fold.max.as_ref().map(|c| less(c, &m)).unwrap_or(true) {
                fold.max = Some(m);
            }
        }
    }

    let empty = Fold::default();
    let mut column = Column::default();
    if let Some(groups) = state.registry(group_set) {
        for &ord in groups.ordinals() {
            let fold = folds.get(&ord).unwrap_or(&empty);
            let widen = |v: &Value| -> Value {
                match v {
                    Value::Int(i) if output == "FLOAT" => Value::Float(*i as f64),
                    other => other.clone(),
                }
            };
            let v = match accumulator {
                Accumulator::Count => Value::Int(fold.count as i64),
                Accumulator::Sum => {
                    if output == "FLOAT" {
                        Value::Float(fold.float_sum)
                    } else if fold.int_overflow {
                        Value::Null
                    } else {
                        Value::Int(fold.int_sum)
                    }
                }
                Accumulator::Min => fold.min.as_ref().map(&widen).unwrap_or(Value::Null),
                Accumulator::Max => fold.max.as_ref().map(&widen).unwrap_or(Value::Null),
                Accumulator::Avg => {
                    if fold.count == 0 {
                        Value::Null
                    } else {
                        Value::Float(fold.float_sum / fold.count as f64)
                    }
                }
            };
            column.set(ord, v);
        }
    }
    Ok(column)
}

/// Replaces the product's population with the filtered cartesian combination
/// of its components. Prior product refs become invalid; ordinals restart at
/// zero so identical inputs yield identical ordinals.
fn populate_product(schema: &Schema, state: &mut State, set: &str) -> Result<usize> {
    let def = schema.set(set).ok_or_else(|| Error::UnknownSet(set.to_string()))?;
    let SetKind::Product { components, predicate } = &def.kind else {
        return Err(Error::InvalidInput(format!("`{set}` is not a product set")));
    };
    let components = components.clone();
    let predicate = predicate.clone();

    let component_refs: Vec<Vec<Ref>> = components
        .iter()
        .map(|c| {
            state
                .registry(c)
                .map(|r| r.ordinals().iter().map(|&o| Ref::new(c.clone(), o)).collect())
                .unwrap_or_default()
        })
        .collect();

    let projections: Vec<FuncKey> = schema
        .functions_on(set)
        .filter(|f| matches!(f.kind, FunctionKind::Projection { .. }))
        .map(|f| f.key())
        .collect();

    state.reset_product(set, schema);

    if component_refs.iter().any(|v| v.is_empty()) {
        return Ok(0);
    }

    let mut proj_columns: Vec<Column> = vec![Column::default(); projections.len()];
    let mut combo_idx = vec![0usize; components.len()];
    let mut rows = 0usize;
    loop {
        let combo: Vec<Ref> = combo_idx
            .iter()
            .enumerate()
            .map(|(i, &j)| component_refs[i][j].clone())
            .collect();
        let keep = match &predicate {
            None => true,
            Some(pred) => matches!(
                eval_combo_expr(schema, state, set, &combo, pred)?,
                Value::Bool(true)
            ),
        };
        if keep {
            let ord = state.product_push(set);
            for (i, col) in proj_columns.iter_mut().enumerate() {
                col.set(ord, Value::Ref(combo[i].clone()));
            }
            rows += 1;
        }
        // advance odometer: last component fastest
        let mut i = components.len();
        loop {
            if i == 0 {
                for (key, col) in projections.iter().zip(proj_columns) {
                    state.replace_column(key.clone(), col);
                }
                return Ok(rows);
            }
            i -= 1;
            combo_idx[i] += 1;
            if combo_idx[i] < component_refs[i].len() {
                break;
            }
            combo_idx[i] = 0;
        }
    }
}

/// Evaluates a product predicate against a candidate combination that is not
/// materialized yet: paths start at a projection, which maps straight to the
/// combination's component ref.
fn eval_combo_expr(
    schema: &Schema,
    state: &State,
    product: &str,
    combo: &[Ref],
    expr: &Expr,
) -> Result<Value> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Path(segs) => {
            let first = schema
                .function(product, &segs[0])
                .ok_or_else(|| Error::UnknownPathSegment {
                    set: product.to_string(),
                    segment: segs[0].clone(),
                })?;
            let FunctionKind::Projection { component_index } = first.kind else {
                return Err(Error::TypeMismatch(format!(
                    "product predicate path must start at a projection, `{}` is {}",
                    segs[0],
                    first.kind.name()
                )));
            };
            let anchor = combo[component_index].clone();
            if segs.len() == 1 {
                Ok(Value::Ref(anchor))
            } else {
                state.eval_path(schema, &anchor, &segs[1..])
            }
        }
        Expr::Unary(op, e) => Ok(apply_unary(*op, eval_combo_expr(schema, state, product, combo, e)?)),
        Expr::Binary(op, a, b) => {
            let va = eval_combo_expr(schema, state, product, combo, a)?;
            let vb = eval_combo_expr(schema, state, product, combo, b)?;
            Ok(apply_binary(*op, va, vb))
        }
    }
}
