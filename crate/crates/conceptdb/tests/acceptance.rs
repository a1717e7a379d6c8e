//! Acceptance suite. One test per criterion; each prints a single
//! `[PASS] ...` line on success (a failure panics and the harness reports it).
//!
//! All derived results are checked against independent oracles implemented
//! in this file: a per-row AST interpreter for calc expressions, a
//! nested-loop equi-match for links, a group scan for aggregates, and a
//! full enumeration for product sets.

use conceptdb::dsl::{parse, render_script, Session};
use conceptdb::io::{load_snapshot, save_snapshot};
use conceptdb::{
    evaluate, Accumulator, BinOp, Error, Expr, FuncKey, FunctionDef, FunctionKind, Ref, Schema,
    SetDef, SetKind, State, UnOp, Value,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::time::Instant;

const FLOAT_REL_TOL: f64 = 1e-9;

fn k(input: &str, name: &str) -> FuncKey {
    FuncKey::new(input, name)
}

fn float_close(a: f64, b: f64) -> bool {
    if a.to_bits() == b.to_bits() {
        return true;
    }
    (a - b).abs() <= FLOAT_REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Exact equality for INT/STR/BOOL/Ref; relative tolerance for FLOAT.
fn value_close(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Float(x), Value::Float(y)) => float_close(*x, *y),
        _ => a.same(b),
    }
}

// ---------------------------------------------------------------------------
// Independent per-row interpreter (oracle for calc expressions). Written
// from the documented semantics, not by calling into the engine: Null
// propagates through arithmetic and comparisons, AND/OR are three-valued,
// integer overflow and division by zero yield Null, mixed INT/FLOAT widens.
// ---------------------------------------------------------------------------

fn o_eval(expr: &Expr, row: &HashMap<String, Value>) -> Value {
    match expr {
        Expr::Lit(v) => v.clone(),
        Expr::Path(p) => {
            assert_eq!(p.len(), 1, "oracle rows only carry single-segment paths");
            row.get(&p[0]).cloned().unwrap_or(Value::Null)
        }
        Expr::Unary(op, e) => match (op, o_eval(e, row)) {
            (_, Value::Null) => Value::Null,
            (UnOp::Neg, Value::Int(i)) => i.checked_neg().map(Value::Int).unwrap_or(Value::Null),
            (UnOp::Neg, Value::Float(f)) => Value::Float(-f),
            (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
            _ => Value::Null,
        },
        Expr::Binary(op, a, b) => o_bin(*op, o_eval(a, row), o_eval(b, row)),
    }
}

fn o_num(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn o_bin(op: BinOp, a: Value, b: Value) -> Value {
    let truth = |v: &Value| match v {
        Value::Bool(x) => Some(*x),
        _ => None,
    };
    match op {
        BinOp::And => {
            return match (truth(&a), truth(&b)) {
                (Some(false), _) | (_, Some(false)) => Value::Bool(false),
                (Some(true), Some(true)) => Value::Bool(true),
                _ => Value::Null,
            }
        }
        BinOp::Or => {
            return match (truth(&a), truth(&b)) {
                (Some(true), _) | (_, Some(true)) => Value::Bool(true),
                (Some(false), Some(false)) => Value::Bool(false),
                _ => Value::Null,
            }
        }
        _ => {}
    }
    if a.is_null() || b.is_null() {
        return Value::Null;
    }
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
            if let (Value::Int(x), Value::Int(y)) = (&a, &b) {
                let r = match op {
                    BinOp::Add => x.checked_add(*y),
                    BinOp::Sub => x.checked_sub(*y),
                    BinOp::Mul => x.checked_mul(*y),
                    BinOp::Div => x.checked_div(*y),
                    _ => unreachable!(),
                };
                return r.map(Value::Int).unwrap_or(Value::Null);
            }
            match (o_num(&a), o_num(&b)) {
                (Some(x), Some(y)) => match op {
                    BinOp::Add => Value::Float(x + y),
                    BinOp::Sub => Value::Float(x - y),
                    BinOp::Mul => Value::Float(x * y),
                    BinOp::Div if y == 0.0 => Value::Null,
                    BinOp::Div => Value::Float(x / y),
                    _ => unreachable!(),
                },
                _ => Value::Null,
            }
        }
        BinOp::Eq | BinOp::Ne => {
            let eq = match (&a, &b) {
                (Value::Int(x), Value::Float(y)) => (*x as f64).to_bits() == y.to_bits(),
                (Value::Float(x), Value::Int(y)) => x.to_bits() == (*y as f64).to_bits(),
                _ => a.same(&b),
            };
            Value::Bool(if op == BinOp::Eq { eq } else { !eq })
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (&a, &b) {
                (Value::Str(x), Value::Str(y)) => x.partial_cmp(y),
                _ => match (o_num(&a), o_num(&b)) {
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
        BinOp::And | BinOp::Or => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Randomized instance: groups + facts with a link, calcs and aggregates,
// plus a small product. Deterministic for a given seed.
// ---------------------------------------------------------------------------

struct Instance {
    schema: Schema,
    state: State,
    groups: Vec<Ref>,
    facts: Vec<Ref>,
    calc_exprs: Vec<(String, Expr)>,
    has_product: bool,
    product_pred: Option<Expr>,
}

fn gen_num_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        match rng.gen_range(0..5) {
            0 => Expr::path(&["qty"]),
            1 => Expr::path(&["w"]),
            2 => Expr::path(&["fk"]),
            3 => Expr::Lit(Value::Int(rng.gen_range(-20..=20))),
            _ => Expr::Lit(Value::Float(rng.gen_range(-5.0..5.0))),
        }
    } else {
        let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.gen_range(0..4)];
        let e = Expr::Binary(
            op,
            Box::new(gen_num_expr(rng, depth - 1)),
            Box::new(gen_num_expr(rng, depth - 1)),
        );
        if rng.gen_bool(0.15) {
            Expr::Unary(UnOp::Neg, Box::new(e))
        } else {
            e
        }
    }
}

fn gen_bool_expr(rng: &mut ChaCha8Rng) -> Expr {
    let cmp = |rng: &mut ChaCha8Rng| {
        let op = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne]
            [rng.gen_range(0..6)];
        Expr::Binary(
            op,
            Box::new(gen_num_expr(rng, 1)),
            Box::new(gen_num_expr(rng, 1)),
        )
    };
    let mut e = cmp(rng);
    if rng.gen_bool(0.5) {
        let op = if rng.gen_bool(0.5) { BinOp::And } else { BinOp::Or };
        e = Expr::Binary(op, Box::new(e), Box::new(cmp(rng)));
    }
    if rng.gen_bool(0.2) {
        e = Expr::Unary(UnOp::Not, Box::new(e));
    }
    e
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schema = Schema::new();
    let mut state = State::new();

    schema.define_entity_set("Grp").unwrap();
    schema.define_base_function("gk", "Grp", "INT").unwrap();
    schema.define_base_function("label", "Grp", "STR").unwrap();
    schema.define_entity_set("Fact").unwrap();
    schema.define_base_function("fk", "Fact", "INT").unwrap();
    schema.define_base_function("qty", "Fact", "INT").unwrap();
    schema.define_base_function("w", "Fact", "FLOAT").unwrap();

    // distinct group keys so link matches are unique by construction
    let n_groups = rng.gen_range(1..=40);
    let mut keys: Vec<i64> = (0..(n_groups as i64 * 2)).collect();
    keys.shuffle(&mut rng);
    let mut groups = Vec::new();
    for i in 0..n_groups {
        let g = state.add_element(&schema, "Grp").unwrap();
        state
            .set_value(&schema, &k("Grp", "gk"), &g, Value::Int(keys[i]))
            .unwrap();
        if rng.gen_bool(0.85) {
            state
                .set_value(
                    &schema,
                    &k("Grp", "label"),
                    &g,
                    Value::Str(format!("g{}", rng.gen_range(0..100))),
                )
                .unwrap();
        }
        groups.push(g);
    }

    let n_facts = rng.gen_range(0..=100);
    let mut facts = Vec::new();
    for _ in 0..n_facts {
        let f = state.add_element(&schema, "Fact").unwrap();
        if rng.gen_bool(0.85) {
            // about half the keys exist in Grp, the rest miss
            let fk = rng.gen_range(0..(n_groups as i64 * 4).max(1));
            state
                .set_value(&schema, &k("Fact", "fk"), &f, Value::Int(fk))
                .unwrap();
        }
        if rng.gen_bool(0.85) {
            state
                .set_value(
                    &schema,
                    &k("Fact", "qty"),
                    &f,
                    Value::Int(rng.gen_range(-50..=50)),
                )
                .unwrap();
        }
        if rng.gen_bool(0.85) {
            state
                .set_value(
                    &schema,
                    &k("Fact", "w"),
                    &f,
                    Value::Float(rng.gen_range(-100.0..100.0)),
                )
                .unwrap();
        }
        facts.push(f);
    }

    // occasionally remove a few elements so ordinals are non-contiguous
    if rng.gen_bool(0.3) && !facts.is_empty() {
        for _ in 0..rng.gen_range(1..=3.min(facts.len())) {
            let i = rng.gen_range(0..facts.len());
            let f = facts.remove(i);
            state.remove_element(&schema, &f).unwrap();
        }
    }

    let mut calc_exprs = Vec::new();
    let num = gen_num_expr(&mut rng, 3);
    let ty = num.infer_type(&schema, "Fact").unwrap();
    schema.define_calc("c1", "Fact", &ty, num.clone()).unwrap();
    calc_exprs.push(("c1".to_string(), num));
    let boole = gen_bool_expr(&mut rng);
    schema.define_calc("c2", "Fact", "BOOL", boole.clone()).unwrap();
    calc_exprs.push(("c2".to_string(), boole));

    schema
        .define_link(
            "to_g",
            "Fact",
            "Grp",
            vec![(vec!["fk".to_string()], "gk".to_string())],
        )
        .unwrap();

    schema
        .define_aggregate(
            "sum_q",
            "Grp",
            "INT",
            "Fact",
            "to_g",
            Expr::path(&["qty"]),
            Accumulator::Sum,
        )
        .unwrap();
    schema
        .define_aggregate(
            "sum_w",
            "Grp",
            "FLOAT",
            "Fact",
            "to_g",
            Expr::path(&["w"]),
            Accumulator::Sum,
        )
        .unwrap();
    schema
        .define_aggregate(
            "cnt",
            "Grp",
            "INT",
            "Fact",
            "to_g",
            Expr::path(&["qty"]),
            Accumulator::Count,
        )
        .unwrap();
    schema
        .define_aggregate(
            "mn",
            "Grp",
            "FLOAT",
            "Fact",
            "to_g",
            Expr::path(&["w"]),
            Accumulator::Min,
        )
        .unwrap();
    schema
        .define_aggregate(
            "mx",
            "Grp",
            "FLOAT",
            "Fact",
            "to_g",
            Expr::path(&["w"]),
            Accumulator::Max,
        )
        .unwrap();
    schema
        .define_aggregate(
            "av",
            "Grp",
            "FLOAT",
            "Fact",
            "to_g",
            Expr::path(&["w"]),
            Accumulator::Avg,
        )
        .unwrap();

    // small product over two auxiliary sets, sometimes filtered
    let has_product = rng.gen_bool(0.8);
    let mut product_pred = None;
    if has_product {
        schema.define_entity_set("Ax").unwrap();
        schema.define_base_function("x", "Ax", "INT").unwrap();
        schema.define_entity_set("Bx").unwrap();
        schema.define_base_function("y", "Bx", "INT").unwrap();
        for _ in 0..rng.gen_range(0..=8) {
            let a = state.add_element(&schema, "Ax").unwrap();
            if rng.gen_bool(0.9) {
                state
                    .set_value(&schema, &k("Ax", "x"), &a, Value::Int(rng.gen_range(0..10)))
                    .unwrap();
            }
        }
        for _ in 0..rng.gen_range(0..=8) {
            let b = state.add_element(&schema, "Bx").unwrap();
            if rng.gen_bool(0.9) {
                state
                    .set_value(&schema, &k("Bx", "y"), &b, Value::Int(rng.gen_range(0..10)))
                    .unwrap();
            }
        }
        if rng.gen_bool(0.6) {
            product_pred = Some(Expr::Binary(
                BinOp::Lt,
                Box::new(Expr::path(&["ax", "x"])),
                Box::new(Expr::path(&["bx", "y"])),
            ));
        }
        schema
            .define_product("P", &["Ax", "Bx"], product_pred.clone())
            .unwrap();
    }

    Instance {
        schema,
        state,
        groups,
        facts,
        calc_exprs,
        has_product,
        product_pred,
    }
}

fn base_row(inst: &Instance, f: &Ref) -> HashMap<String, Value> {
    let mut row = HashMap::new();
    for name in ["fk", "qty", "w"] {
        row.insert(
            name.to_string(),
            inst.state
                .get_value(&inst.schema, &k("Fact", name), f)
                .unwrap(),
        );
    }
    row
}

// ---------------------------------------------------------------------------
// Criterion 1: identity stability
// ---------------------------------------------------------------------------

#[test]
fn c1_identity_stability() {
    let mut schema = Schema::new();
    schema.define_entity_set("Product").unwrap();
    schema.define_base_function("name", "Product", "STR").unwrap();
    schema.define_base_function("price", "Product", "FLOAT").unwrap();
    let mut state = State::new();
    let item = state.add_element(&schema, "Product").unwrap();
    state
        .set_value(&schema, &k("Product", "name"), &item, Value::Str("My Product".into()))
        .unwrap();
    state
        .set_value(&schema, &k("Product", "price"), &item, Value::Float(12.34))
        .unwrap();
    let membership_before = state.list_refs(&schema, "Product").unwrap();

    let t = Instant::now();
    state
        .set_value(&schema, &k("Product", "price"), &item, Value::Float(23.45))
        .unwrap();
    let elapsed = t.elapsed();

    assert_eq!(state.list_refs(&schema, "Product").unwrap(), membership_before);
    assert_eq!(
        state.get_value(&schema, &k("Product", "name"), &item).unwrap(),
        Value::Str("My Product".into())
    );
    assert_eq!(
        state.get_value(&schema, &k("Product", "price"), &item).unwrap(),
        Value::Float(23.45)
    );
    assert!(
        elapsed.as_micros() < 1000,
        "update took {elapsed:?}, expected < 1 ms"
    );
    println!("[PASS] 1 identity stability: update in {elapsed:?}, ref and membership unchanged");
}

// ---------------------------------------------------------------------------
// Criterion 2: oracle equivalence on randomized instances
// ---------------------------------------------------------------------------

#[test]
fn c2_oracle_equivalence() {
    let t = Instant::now();
    let cases = 200;
    for seed in 0..cases {
        let mut inst = random_instance(seed);
        evaluate(&inst.schema, &mut inst.state).unwrap();

        // calc oracle: independent per-row AST interpreter
        for f in &inst.facts {
            let row = base_row(&inst, f);
            for (name, expr) in &inst.calc_exprs {
                let got = inst.state.get_value(&inst.schema, &k("Fact", name), f).unwrap();
                let want = o_eval(expr, &row);
                assert!(
                    value_close(&got, &want),
                    "seed {seed}: calc {name} on {f}: engine {got:?} vs oracle {want:?}"
                );
            }
        }

        // link oracle: nested-loop equi-match over alive groups
        for f in &inst.facts {
            let fk = inst.state.get_value(&inst.schema, &k("Fact", "fk"), f).unwrap();
            let want = if fk.is_null() {
                Value::Null
            } else {
                let mut hits = Vec::new();
                for g in &inst.groups {
                    let gk = inst.state.get_value(&inst.schema, &k("Grp", "gk"), g).unwrap();
                    if gk.same(&fk) {
                        hits.push(g.clone());
                    }
                }
                match hits.as_slice() {
                    [] => Value::Null,
                    [one] => Value::Ref(one.clone()),
                    _ => panic!("seed {seed}: group keys were built distinct"),
                }
            };
            let got = inst.state.get_value(&inst.schema, &k("Fact", "to_g"), f).unwrap();
            assert_eq!(got, want, "seed {seed}: link on {f}");
        }

        // aggregate oracle: group scan, folding facts left to right
        for g in &inst.groups {
            let mut count: i64 = 0;
            let mut int_sum: i64 = 0;
            let mut float_sum: f64 = 0.0;
            let mut mn: Option<f64> = None;
            let mut mx: Option<f64> = None;
            for f in &inst.facts {
                let linked = inst.state.get_value(&inst.schema, &k("Fact", "to_g"), f).unwrap();
                if linked != Value::Ref(g.clone()) {
                    continue;
                }
                let qty = inst.state.get_value(&inst.schema, &k("Fact", "qty"), f).unwrap();
                if let Value::Int(q) = qty {
                    count += 1;
                    int_sum += q;
                }
                let w = inst.state.get_value(&inst.schema, &k("Fact", "w"), f).unwrap();
                if let Value::Float(x) = w {
                    float_sum += x;
                    mn = Some(mn.map_or(x, |m| m.min(x)));
                    mx = Some(mx.map_or(x, |m| m.max(x)));
                }
            }
            let read = |name: &str| inst.state.get_value(&inst.schema, &k("Grp", name), g).unwrap();
            assert_eq!(read("sum_q"), Value::Int(int_sum), "seed {seed}: SUM INT on {g}");
            assert_eq!(read("cnt"), Value::Int(count), "seed {seed}: COUNT on {g}");
            let got_sw = read("sum_w");
            assert!(
                value_close(&got_sw, &Value::Float(float_sum)),
                "seed {seed}: SUM FLOAT on {g}: {got_sw:?} vs {float_sum}"
            );
            let want_mn = mn.map(Value::Float).unwrap_or(Value::Null);
            let want_mx = mx.map(Value::Float).unwrap_or(Value::Null);
            assert_eq!(read("mn"), want_mn, "seed {seed}: MIN on {g}");
            assert_eq!(read("mx"), want_mx, "seed {seed}: MAX on {g}");
            let w_count = inst
                .facts
                .iter()
                .filter(|f| {
                    inst.state.get_value(&inst.schema, &k("Fact", "to_g"), f).unwrap()
                        == Value::Ref(g.clone())
                        && !inst.state.get_value(&inst.schema, &k("Fact", "w"), f).unwrap().is_null()
                })
                .count();
            let want_av = if w_count == 0 {
                Value::Null
            } else {
                Value::Float(float_sum / w_count as f64)
            };
            let got_av = read("av");
            assert!(
                value_close(&got_av, &want_av),
                "seed {seed}: AVG on {g}: {got_av:?} vs {want_av:?}"
            );
        }

        // product oracle: full enumeration, first component slowest
        if inst.has_product {
            let axs = inst.state.list_refs(&inst.schema, "Ax").unwrap();
            let bxs = inst.state.list_refs(&inst.schema, "Bx").unwrap();
            let mut expected = Vec::new();
            for a in &axs {
                for b in &bxs {
                    let keep = match &inst.product_pred {
                        None => true,
                        Some(_) => {
                            let x = inst.state.get_value(&inst.schema, &k("Ax", "x"), a).unwrap();
                            let y = inst.state.get_value(&inst.schema, &k("Bx", "y"), b).unwrap();
                            matches!(o_bin(BinOp::Lt, x, y), Value::Bool(true))
                        }
                    };
                    if keep {
                        expected.push((a.clone(), b.clone()));
                    }
                }
            }
            let combos = inst.state.list_refs(&inst.schema, "P").unwrap();
            assert_eq!(combos.len(), expected.len(), "seed {seed}: product size");
            for (i, c) in combos.iter().enumerate() {
                assert_eq!(c.ordinal, i as u64, "seed {seed}: product ordinals are dense");
                let pa = inst.state.get_value(&inst.schema, &k("P", "ax"), c).unwrap();
                let pb = inst.state.get_value(&inst.schema, &k("P", "bx"), c).unwrap();
                assert_eq!(pa, Value::Ref(expected[i].0.clone()), "seed {seed}: P#{i} first leg");
                assert_eq!(pb, Value::Ref(expected[i].1.clone()), "seed {seed}: P#{i} second leg");
            }
        }
    }
    let elapsed = t.elapsed();
    assert!(elapsed.as_secs() < 10, "suite took {elapsed:?}, expected < 10 s");
    println!("[PASS] 2 oracle equivalence: {cases} randomized instances in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// Criterion 3: composition coherence (eval_path vs nested get_value)
// ---------------------------------------------------------------------------

#[test]
fn c3_composition_coherence() {
    let mut checked = 0usize;
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0C0 + seed);
        let mut schema = Schema::new();
        let mut state = State::new();
        schema.define_entity_set("A").unwrap();
        schema.define_entity_set("B").unwrap();
        schema.define_entity_set("C").unwrap();
        schema.define_base_function("f", "A", "B").unwrap();
        schema.define_base_function("g", "B", "C").unwrap();
        schema.define_base_function("h", "C", "INT").unwrap();

        let cs: Vec<Ref> = (0..rng.gen_range(1..=10))
            .map(|_| state.add_element(&schema, "C").unwrap())
            .collect();
        for c in &cs {
            if rng.gen_bool(0.8) {
                state
                    .set_value(&schema, &k("C", "h"), c, Value::Int(rng.gen_range(-99..=99)))
                    .unwrap();
            }
        }
        let bs: Vec<Ref> = (0..rng.gen_range(1..=10))
            .map(|_| state.add_element(&schema, "B").unwrap())
            .collect();
        for b in &bs {
            if rng.gen_bool(0.8) {
                let c = cs.choose(&mut rng).unwrap().clone();
                state.set_value(&schema, &k("B", "g"), b, Value::Ref(c)).unwrap();
            }
        }
        let r#as: Vec<Ref> = (0..rng.gen_range(1..=10))
            .map(|_| state.add_element(&schema, "A").unwrap())
            .collect();
        for a in &r#as {
            if rng.gen_bool(0.8) {
                let b = bs.choose(&mut rng).unwrap().clone();
                state.set_value(&schema, &k("A", "f"), a, Value::Ref(b)).unwrap();
            }
        }

        let seg = |s: &str| s.to_string();
        for a in &r#as {
            // 2-segment path
            let via_path = state.eval_path(&schema, a, &[seg("f"), seg("g")]).unwrap();
            let nested = match state.get_value(&schema, &k("A", "f"), a).unwrap() {
                Value::Ref(b) => state.get_value(&schema, &k("B", "g"), &b).unwrap(),
                Value::Null => Value::Null,
                other => panic!("f yielded {other:?}"),
            };
            assert_eq!(via_path, nested, "seed {seed}: 2-segment path on {a}");

            // 3-segment path
            let via_path = state
                .eval_path(&schema, a, &[seg("f"), seg("g"), seg("h")])
                .unwrap();
            let nested = match state.get_value(&schema, &k("A", "f"), a).unwrap() {
                Value::Null => Value::Null,
                Value::Ref(b) => match state.get_value(&schema, &k("B", "g"), &b).unwrap() {
                    Value::Null => Value::Null,
                    Value::Ref(c) => state.get_value(&schema, &k("C", "h"), &c).unwrap(),
                    other => panic!("g yielded {other:?}"),
                },
                other => panic!("f yielded {other:?}"),
            };
            assert_eq!(via_path, nested, "seed {seed}: 3-segment path on {a}");
            checked += 2;
        }
    }
    println!("[PASS] 3 composition coherence: {checked} path/nested-get comparisons agree");
}

// ---------------------------------------------------------------------------
// Criterion 4: cascade soundness after randomized removals
// ---------------------------------------------------------------------------

#[test]
fn c4_cascade_soundness() {
    let mut scanned = 0usize;
    for seed in 0..25u64 {
        let mut inst = random_instance(0xCA5C + seed);
        evaluate(&inst.schema, &mut inst.state).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(0xDE1 + seed);
        // remove a random mix of groups and facts, in random order
        let mut victims: Vec<Ref> = Vec::new();
        for g in &inst.groups {
            if rng.gen_bool(0.4) {
                victims.push(g.clone());
            }
        }
        for f in &inst.facts {
            if rng.gen_bool(0.3) {
                victims.push(f.clone());
            }
        }
        victims.shuffle(&mut rng);
        for v in &victims {
            inst.state.remove_element(&inst.schema, v).unwrap();
        }
        evaluate(&inst.schema, &mut inst.state).unwrap();

        // full scan: every Ref reachable through any function must be alive
        let sets: Vec<String> = inst
            .schema
            .sets()
            .filter(|s| !s.is_primitive())
            .map(|s| s.name.clone())
            .collect();
        for set in &sets {
            for r in inst.state.list_refs(&inst.schema, set).unwrap() {
                for func in inst.schema.functions_on(set) {
                    let v = inst.state.get_value(&inst.schema, &func.key(), &r).unwrap();
                    scanned += 1;
                    if let Value::Ref(target) = v {
                        let alive = inst
                            .state
                            .registry(&target.set)
                            .map(|reg| reg.is_alive(target.ordinal))
                            .unwrap_or(false);
                        assert!(
                            alive,
                            "seed {seed}: dangling {target} via {}.{} on {r}",
                            set, func.name
                        );
                    }
                }
            }
        }
    }
    println!("[PASS] 4 cascade soundness: {scanned} cells scanned, no dangling refs");
}

// ---------------------------------------------------------------------------
// Criterion 5: determinism
// ---------------------------------------------------------------------------

#[test]
fn c5_determinism() {
    for seed in 0..20u64 {
        let mut one = random_instance(0xD0_0000 + seed);
        let mut two = random_instance(0xD0_0000 + seed);
        evaluate(&one.schema, &mut one.state).unwrap();
        evaluate(&two.schema, &mut two.state).unwrap();

        for func in one.schema.functions() {
            if !func.is_derived() {
                continue;
            }
            let a = one.state.raw_column_values(&func.key());
            let b = two.state.raw_column_values(&func.key());
            let (a, b) = (a.unwrap_or(&[]), b.unwrap_or(&[]));
            assert_eq!(a.len(), b.len(), "seed {seed}: {} column length", func.key());
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                let same = match (x, y) {
                    // byte-identical: floats compared on their bit patterns
                    (Value::Float(p), Value::Float(q)) => p.to_bits() == q.to_bits(),
                    _ => x == y,
                };
                assert!(same, "seed {seed}: {}[{i}]: {x:?} vs {y:?}", func.key());
            }
        }
        if one.has_product {
            assert_eq!(
                one.state.list_refs(&one.schema, "P").unwrap(),
                two.state.list_refs(&two.schema, "P").unwrap(),
                "seed {seed}: product ordinals differ"
            );
        }
    }
    println!("[PASS] 5 determinism: 20 instance pairs produced bit-identical derived columns");
}

// ---------------------------------------------------------------------------
// Criterion 6: snapshot fixpoint (save ∘ load ∘ save is byte-identical)
// ---------------------------------------------------------------------------

#[test]
fn c6_snapshot_fixpoint() {
    for seed in 0..50u64 {
        let mut inst = random_instance(0x5A4E + seed);
        // adversarial strings exercise the escaping rules
        let mut rng = ChaCha8Rng::seed_from_u64(0x5A4E + seed);
        let nasty = ["a\"b", "tab\there", "line\nbreak", "back\\slash", "κόσμος", ""];
        for g in inst.groups.clone() {
            if rng.gen_bool(0.4) {
                let s = nasty[rng.gen_range(0..nasty.len())].to_string();
                inst.state
                    .set_value(&inst.schema, &k("Grp", "label"), &g, Value::Str(s))
                    .unwrap();
            }
        }

        let mut first = Vec::new();
        save_snapshot(&inst.schema, &mut inst.state, &mut first).unwrap();
        let (schema2, mut state2) = load_snapshot(first.as_slice()).unwrap();
        let mut second = Vec::new();
        save_snapshot(&schema2, &mut state2, &mut second).unwrap();
        assert_eq!(
            String::from_utf8_lossy(&first),
            String::from_utf8_lossy(&second),
            "seed {seed}: snapshot not a fixpoint"
        );
        assert_eq!(first, second, "seed {seed}: snapshot bytes differ");
    }
    println!("[PASS] 6 snapshot fixpoint: 50 randomized engines, save∘load∘save byte-identical");
}

// ---------------------------------------------------------------------------
// Criterion 7: parser robustness (round-trip corpus + fuzzing)
// ---------------------------------------------------------------------------

const CORPUS: &[&str] = &[
    "SET Product;",
    "SET Product; SET OrderItem;",
    "FUNC name: Product -> STR;",
    "FUNC price: Product -> FLOAT; FUNC qty: OrderItem -> INT;",
    "CALC total: OrderItem -> FLOAT = qty * product.price;",
    "CALC flag: Item -> BOOL = NOT (a > 1 AND b <= 2.5);",
    "CALC nested: Item -> INT = ((a + b) * (c - d)) / e;",
    "CALC neg: Item -> INT = -a + -(b * c);",
    "CALC cmp: Item -> BOOL = a == b OR c != d OR e < f OR g >= h;",
    "LINK product: OrderItem -> Product ON pname == name;",
    "LINK loc: Shipment -> Warehouse ON city == city, country == country;",
    "LINK deep: X -> Y ON a.b.c == key;",
    "AGG revenue: Product -> FLOAT = SUM(OrderItem.product, amount);",
    "AGG n: Grp -> INT = COUNT(Fact.to_g, qty);",
    "AGG low: Grp -> FLOAT = MIN(Fact.to_g, w);",
    "AGG high: Grp -> FLOAT = MAX(Fact.to_g, w * 2.0);",
    "AGG mean: Grp -> FLOAT = AVG(Fact.to_g, w + 1.0);",
    "PROD Pair = A * B;",
    "PROD Triple = A * B * C;",
    "PROD Close = A * B WHERE ax.x < bx.y;",
    "ADD Product;",
    "ADD Product (name = \"My Product\", price = 12.34);",
    "ADD Item (v = NULL, w = TRUE, u = FALSE, n = -7);",
    "DEL Product#0;",
    "UPD Product#3.price = 23.45;",
    "UPD Item#1.r = Product#0;",
    "GET Product#0.price;",
    "GET OrderItem#2.product.price;",
    "SHOW Product;",
    "SHOW Product (name, price);",
    "EVAL;",
    "DUMP \"engine.snap\";",
    "LOAD Product FROM \"data.csv\";",
    "SAVE Product TO \"out.csv\";",
    "LOAD FROM \"engine.snap\";",
    "UPD Product#0.price = -1.5;",
    "-- comment only\nSET A; -- trailing\nFUNC x: A -> INT;",
    "ADD S (s = \"esc \\\" \\\\ \\n \\t done\");",
];

#[test]
fn c7_parser_robustness() {
    assert!(CORPUS.len() >= 30);
    for (i, script) in CORPUS.iter().enumerate() {
        let stmts = parse(script).unwrap_or_else(|e| panic!("corpus[{i}] failed: {e}"));
        let rendered = render_script(&stmts);
        let reparsed = parse(&rendered)
            .unwrap_or_else(|e| panic!("corpus[{i}] render not parseable: {e}\n{rendered}"));
        assert_eq!(
            rendered,
            render_script(&reparsed),
            "corpus[{i}] round-trip unstable"
        );
        assert_eq!(stmts.len(), reparsed.len(), "corpus[{i}] statement count");
    }

    // fuzzing: the lexer/parser must never panic, only report errors
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    let fragments = [
        "SET", "FUNC", "CALC", "LINK", "AGG", "PROD", "ADD", "DEL", "UPD", "GET", "SHOW",
        "LOAD", "SAVE", "DUMP", "EVAL", "ON", "WHERE", "FROM", "TO", "SUM", "COUNT", "MIN",
        "MAX", "AVG", "AND", "OR", "NOT", "TRUE", "FALSE", "NULL", "INT", "FLOAT", "STR",
        "BOOL", "->", "-", ";", ":", ",", ".", "#", "=", "==", "!=", "<=", ">=", "(", ")",
        "*", "/", "+", "\"", "\\", "x", "Item", "12", "3.4", "1e9", "\"str\"", "--", "\n",
        " ", "\t", "é", "⊗", "\u{0}",
    ];
    let n_inputs = 100_000;
    for _ in 0..n_inputs {
        let mut input = String::new();
        for _ in 0..rng.gen_range(0..20) {
            if rng.gen_bool(0.85) {
                input.push_str(fragments[rng.gen_range(0..fragments.len())]);
            } else {
                input.push(char::from_u32(rng.gen_range(0..0xD7FF)).unwrap_or('?'));
            }
        }
        match parse(&input) {
            Ok(_) => {}
            Err(Error::LexError { .. }) | Err(Error::ParseError { .. }) => {}
            Err(other) => panic!("parser returned a non-parse error: {other:?}\ninput: {input:?}"),
        }
    }
    println!(
        "[PASS] 7 parser robustness: {} scripts round-trip, {n_inputs} fuzz inputs without a crash",
        CORPUS.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: cycle rejection with the cycle named
// ---------------------------------------------------------------------------

#[test]
fn c8_cycle_rejection() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC1C1 + seed);
        // Incremental definition can only reference existing nodes, so cyclic
        // schemas are assembled wholesale through the raw constructors.
        let mut schema = Schema::new();
        schema.insert_raw_set(SetDef {
            name: "S".into(),
            kind: SetKind::Entity,
        });
        let n = rng.gen_range(2..=10);
        let names: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();

        // a guaranteed cycle over a random subset, plus random extra edges
        let len = rng.gen_range(1..=n);
        let mut cycle: Vec<usize> = (0..n).collect();
        cycle.shuffle(&mut rng);
        cycle.truncate(len);
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..len {
            edges[cycle[i]].push(cycle[(i + 1) % len]);
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(0.1) {
                    edges[i].push(j);
                }
            }
        }

        for (i, name) in names.iter().enumerate() {
            let mut expr = Expr::Lit(Value::Int(1));
            for &j in &edges[i] {
                expr = Expr::Binary(
                    BinOp::Add,
                    Box::new(expr),
                    Box::new(Expr::path(&[names[j].as_str()])),
                );
            }
            schema.insert_raw_function(FunctionDef {
                name: name.clone(),
                input: "S".into(),
                output: "INT".into(),
                kind: FunctionKind::Calc { expr },
            });
        }

        match schema.topo_order() {
            Err(Error::CycleDetected(members)) => {
                assert!(!members.is_empty(), "seed {seed}: cycle reported empty");
                let known: Vec<String> = names.iter().map(|n| format!("S.{n}")).collect();
                for m in &members {
                    assert!(
                        known.contains(m),
                        "seed {seed}: reported member {m} is not a schema node"
                    );
                }
            }
            other => panic!("seed {seed}: expected CycleDetected, got {other:?}"),
        }
    }
    println!("[PASS] 8 cycle rejection: 100 cyclic schemas rejected, each with the cycle named");
}

// ---------------------------------------------------------------------------
// Criterion 9: performance smoke test
// ---------------------------------------------------------------------------

#[test]
fn c9_performance_smoke() {
    let mut schema = Schema::new();
    schema.define_entity_set("Grp").unwrap();
    schema.define_base_function("gk", "Grp", "INT").unwrap();
    schema.define_entity_set("Fact").unwrap();
    schema.define_base_function("fk", "Fact", "INT").unwrap();
    schema.define_base_function("qty", "Fact", "INT").unwrap();
    schema
        .define_link("to_g", "Fact", "Grp", vec![(vec!["fk".into()], "gk".into())])
        .unwrap();
    schema
        .define_calc(
            "amount",
            "Fact",
            "INT",
            Expr::Binary(
                BinOp::Mul,
                Box::new(Expr::path(&["qty"])),
                Box::new(Expr::Lit(Value::Int(3))),
            ),
        )
        .unwrap();
    schema
        .define_aggregate(
            "total",
            "Grp",
            "INT",
            "Fact",
            "to_g",
            Expr::path(&["amount"]),
            Accumulator::Sum,
        )
        .unwrap();

    let mut state = State::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9E4F);
    let n_groups = 100i64;
    for i in 0..n_groups {
        let g = state.add_element(&schema, "Grp").unwrap();
        state.set_value(&schema, &k("Grp", "gk"), &g, Value::Int(i)).unwrap();
    }
    let n_facts = 100_000usize;
    for _ in 0..n_facts {
        let f = state.add_element(&schema, "Fact").unwrap();
        state
            .set_value(&schema, &k("Fact", "fk"), &f, Value::Int(rng.gen_range(0..n_groups)))
            .unwrap();
        state
            .set_value(&schema, &k("Fact", "qty"), &f, Value::Int(rng.gen_range(1..100)))
            .unwrap();
    }

    let t = Instant::now();
    let report = evaluate(&schema, &mut state).unwrap();
    let elapsed = t.elapsed();
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "evaluation took {elapsed:?}, expected < 5 s"
    );
    assert!(!report.render().is_empty());

    // sanity: totals add up across all groups
    let grand: i64 = state
        .list_refs(&schema, "Grp")
        .unwrap()
        .iter()
        .map(|g| match state.get_value(&schema, &k("Grp", "total"), g).unwrap() {
            Value::Int(i) => i,
            other => panic!("total yielded {other:?}"),
        })
        .sum();
    let oracle: i64 = state
        .list_refs(&schema, "Fact")
        .unwrap()
        .iter()
        .map(|f| match state.get_value(&schema, &k("Fact", "qty"), f).unwrap() {
            Value::Int(q) => q * 3,
            other => panic!("qty yielded {other:?}"),
        })
        .sum();
    assert_eq!(grand, oracle);
    println!("[PASS] 9 performance smoke: {n_facts} facts, link+calc+SUM evaluated in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// Anchor scenario end-to-end through the script language
// ---------------------------------------------------------------------------

#[test]
fn anchor_scenario_via_script() {
    let mut session = Session::new();
    let mut out = Vec::new();
    conceptdb::dsl::run_script(
        &mut session,
        "SET Product;\n\
         FUNC name: Product -> STR;\n\
         FUNC price: Product -> FLOAT;\n\
         ADD Product (name = \"My Product\", price = 12.34);\n\
         GET Product#0.price;\n\
         UPD Product#0.price = 23.45;\n\
         GET Product#0.price;\n\
         GET Product#0.name;",
        &mut out,
    )
    .unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("Product#0"));
    assert!(text.contains("12.34"));
    assert!(text.contains("23.45"));
    assert!(text.contains("My Product"));
    println!("[PASS] anchor scenario: price 12.34 -> 23.45 with identity and name unchanged");
}
