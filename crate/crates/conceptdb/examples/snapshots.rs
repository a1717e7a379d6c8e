//! Text snapshots: the whole engine — schema and base state — serializes to
//! a plain-text format. Derived data is not stored; loading replays the
//! schema, restores elements and base values, and re-evaluates. Saving what
//! was just loaded reproduces the bytes exactly.

use conceptdb::io::{load_snapshot, save_snapshot};
use conceptdb::{Accumulator, Expr, FuncKey, Schema, State, Value};

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
    schema.define_aggregate(
        "sold", "Product", "INT", "OrderItem", "product",
        Expr::path(&["qty"]), Accumulator::Sum,
    )?;

    let mut state = State::new();
    let name = FuncKey::new("Product", "name");
    let price = FuncKey::new("Product", "price");
    let p = state.add_element(&schema, "Product")?;
    state.set_value(&schema, &name, &p, Value::Str("My \"quoted\" Product".into()))?;
    state.set_value(&schema, &price, &p, Value::Float(12.34))?;
    let pname = FuncKey::new("OrderItem", "pname");
    let qty = FuncKey::new("OrderItem", "qty");
    let i = state.add_element(&schema, "OrderItem")?;
    state.set_value(&schema, &pname, &i, Value::Str("My \"quoted\" Product".into()))?;
    state.set_value(&schema, &qty, &i, Value::Int(7))?;

    let mut bytes = Vec::new();
    save_snapshot(&schema, &mut state, &mut bytes)?;
    println!("--- snapshot ---");
    print!("{}", String::from_utf8_lossy(&bytes));
    println!("----------------");

    let (schema2, mut state2) = load_snapshot(bytes.as_slice())?;
    let sold = state2.get_value(&schema2, &FuncKey::new("Product", "sold"), &p)?;
    println!("derived value after reload: sold = {sold:?}");

    let mut again = Vec::new();
    save_snapshot(&schema2, &mut state2, &mut again)?;
    println!("save-load-save is byte-identical: {}", bytes == again);
    Ok(())
}
