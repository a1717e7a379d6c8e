//! Calc functions: derived columns computed row by row from an expression
//! over same-set functions. Nulls propagate; division by zero yields Null.

use conceptdb::{evaluate, BinOp, Expr, FuncKey, Schema, State, Value};

fn main() -> conceptdb::Result<()> {
    let mut schema = Schema::new();
    schema.define_entity_set("OrderItem")?;
    schema.define_base_function("qty", "OrderItem", "INT")?;
    schema.define_base_function("unit_price", "OrderItem", "FLOAT")?;

    // amount = qty * unit_price (INT widens to FLOAT)
    schema.define_calc(
        "amount",
        "OrderItem",
        "FLOAT",
        Expr::Binary(
            BinOp::Mul,
            Box::new(Expr::path(&["qty"])),
            Box::new(Expr::path(&["unit_price"])),
        ),
    )?;

    let mut state = State::new();
    let qty = FuncKey::new("OrderItem", "qty");
    let unit = FuncKey::new("OrderItem", "unit_price");
    let rows = [(Some(3), Some(9.99)), (Some(2), None), (None, Some(4.5))];
    let mut refs = Vec::new();
    for (q, p) in rows {
        let r = state.add_element(&schema, "OrderItem")?;
        if let Some(q) = q {
            state.set_value(&schema, &qty, &r, Value::Int(q))?;
        }
        if let Some(p) = p {
            state.set_value(&schema, &unit, &r, Value::Float(p))?;
        }
        refs.push(r);
    }

    let report = evaluate(&schema, &mut state)?;
    print!("{}", report.render());

    let amount = FuncKey::new("OrderItem", "amount");
    for r in &refs {
        println!("{r}: amount = {:?}", state.get_value(&schema, &amount, r)?);
    }
    Ok(())
}
