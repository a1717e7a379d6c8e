//! Aggregate functions: fold a measure over the facts that reach each group
//! element through a grouping link. SUM over an empty group is a typed zero;
//! MIN/MAX/AVG are Null; Null measures are skipped, also by COUNT.

use conceptdb::{evaluate, Accumulator, BinOp, Expr, FuncKey, Schema, State, Value};

fn main() -> conceptdb::Result<()> {
    let mut schema = Schema::new();
    schema.define_entity_set("Product")?;
    schema.define_base_function("name", "Product", "STR")?;
    schema.define_base_function("price", "Product", "FLOAT")?;
    schema.define_entity_set("OrderItem")?;
    schema.define_base_function("pname", "OrderItem", "STR")?;
    schema.define_base_function("qty", "OrderItem", "INT")?;
    schema.define_link(
        "product",
        "OrderItem",
        "Product",
        vec![(vec!["pname".to_string()], "name".to_string())],
    )?;
    // the measure may be any expression over the fact set, paths included
    let amount = Expr::Binary(
        BinOp::Mul,
        Box::new(Expr::path(&["qty"])),
        Box::new(Expr::path(&["product", "price"])),
    );
    schema.define_aggregate(
        "revenue", "Product", "FLOAT", "OrderItem", "product", amount, Accumulator::Sum,
    )?;
    schema.define_aggregate(
        "orders", "Product", "INT", "OrderItem", "product",
        Expr::path(&["qty"]), Accumulator::Count,
    )?;

    let mut state = State::new();
    let name = FuncKey::new("Product", "name");
    let price = FuncKey::new("Product", "price");
    let mut products = Vec::new();
    for (n, p) in [("apple", 1.2), ("pear", 2.5), ("plum", 3.0)] {
        let r = state.add_element(&schema, "Product")?;
        state.set_value(&schema, &name, &r, Value::Str(n.into()))?;
        state.set_value(&schema, &price, &r, Value::Float(p))?;
        products.push((n, r));
    }
    let pname = FuncKey::new("OrderItem", "pname");
    let qty = FuncKey::new("OrderItem", "qty");
    for (n, q) in [("apple", 3), ("pear", 1), ("apple", 2)] {
        let r = state.add_element(&schema, "OrderItem")?;
        state.set_value(&schema, &pname, &r, Value::Str(n.into()))?;
        state.set_value(&schema, &qty, &r, Value::Int(q))?;
    }

    evaluate(&schema, &mut state)?;

    let revenue = FuncKey::new("Product", "revenue");
    let orders = FuncKey::new("Product", "orders");
    for (n, r) in &products {
        println!(
            "{n}: revenue = {:?}, orders = {:?}",
            state.get_value(&schema, &revenue, r)?,
            state.get_value(&schema, &orders, r)?,
        );
    }
    Ok(())
}
