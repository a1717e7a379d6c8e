//! Link functions: entity-valued derived columns that match source values to
//! a unique target element — the model's replacement for foreign keys.

use conceptdb::{evaluate, FuncKey, Schema, State, Value};

fn main() -> conceptdb::Result<()> {
    let mut schema = Schema::new();
    schema.define_entity_set("Product")?;
    schema.define_base_function("name", "Product", "STR")?;
    schema.define_base_function("price", "Product", "FLOAT")?;
    schema.define_entity_set("OrderItem")?;
    schema.define_base_function("pname", "OrderItem", "STR")?;

    // product = the unique Product whose name equals this item's pname
    schema.define_link(
        "product",
        "OrderItem",
        "Product",
        vec![(vec!["pname".to_string()], "name".to_string())],
    )?;

    let mut state = State::new();
    let name = FuncKey::new("Product", "name");
    let price = FuncKey::new("Product", "price");
    for (n, p) in [("apple", 1.2), ("pear", 2.5)] {
        let r = state.add_element(&schema, "Product")?;
        state.set_value(&schema, &name, &r, Value::Str(n.into()))?;
        state.set_value(&schema, &price, &r, Value::Float(p))?;
    }

    let pname = FuncKey::new("OrderItem", "pname");
    let mut items = Vec::new();
    for n in ["pear", "apple", "durian"] {
        let r = state.add_element(&schema, "OrderItem")?;
        state.set_value(&schema, &pname, &r, Value::Str(n.into()))?;
        items.push(r);
    }

    evaluate(&schema, &mut state)?;

    let product = FuncKey::new("OrderItem", "product");
    for r in &items {
        // no matching target → Null, one match → that ref
        println!("{r}: product = {:?}", state.get_value(&schema, &product, r)?);
        // paths compose through the link with Null propagation
        let p = state.eval_path(&schema, r, &["product".into(), "price".into()])?;
        println!("{r}: product.price = {p:?}");
    }
    Ok(())
}
