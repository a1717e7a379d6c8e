//! Product sets: derived sets holding the filtered cartesian combination of
//! their components, with auto-generated projection functions back to each
//! component — the model's restricted join.

use conceptdb::{evaluate, BinOp, Expr, FuncKey, Schema, State, Value};

fn main() -> conceptdb::Result<()> {
    let mut schema = Schema::new();
    schema.define_entity_set("Warehouse")?;
    schema.define_base_function("capacity", "Warehouse", "INT")?;
    schema.define_entity_set("Product")?;
    schema.define_base_function("volume", "Product", "INT")?;

    // every (warehouse, product) pair where the product fits; the predicate
    // refers to the components through the projections "warehouse"/"product"
    let fits = Expr::Binary(
        BinOp::Ge,
        Box::new(Expr::path(&["warehouse", "capacity"])),
        Box::new(Expr::path(&["product", "volume"])),
    );
    schema.define_product("Placement", &["Warehouse", "Product"], Some(fits))?;

    let mut state = State::new();
    let capacity = FuncKey::new("Warehouse", "capacity");
    for c in [10, 50] {
        let w = state.add_element(&schema, "Warehouse")?;
        state.set_value(&schema, &capacity, &w, Value::Int(c))?;
    }
    let volume = FuncKey::new("Product", "volume");
    for v in [5, 30, 100] {
        let p = state.add_element(&schema, "Product")?;
        state.set_value(&schema, &volume, &p, Value::Int(v))?;
    }

    evaluate(&schema, &mut state)?;

    for combo in state.list_refs(&schema, "Placement")? {
        let w = state.eval_path(&schema, &combo, &["warehouse".into(), "capacity".into()])?;
        let p = state.eval_path(&schema, &combo, &["product".into(), "volume".into()])?;
        println!("{combo}: capacity {w:?} holds volume {p:?}");
    }

    // adding a component element and re-evaluating repopulates the product
    let p = state.add_element(&schema, "Product")?;
    state.set_value(&schema, &volume, &p, Value::Int(1))?;
    evaluate(&schema, &mut state)?;
    println!("combinations after adding a product: {}", state.count(&schema, "Placement")?);
    Ok(())
}
