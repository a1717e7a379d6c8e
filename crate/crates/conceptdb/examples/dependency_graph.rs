//! The derivation engine: derived nodes form a dependency graph evaluated in
//! topological order; mutations dirty only the affected downstream nodes,
//! and cyclic definitions are rejected with the cycle named.

use conceptdb::{evaluate, BinOp, Expr, FuncKey, Node, Schema, State, Value};

fn main() -> conceptdb::Result<()> {
    let mut schema = Schema::new();
    schema.define_entity_set("Item")?;
    schema.define_base_function("a", "Item", "INT")?;
    schema.define_base_function("b", "Item", "INT")?;
    let add = |l: &str, r: &str| {
        Expr::Binary(BinOp::Add, Box::new(Expr::path(&[l])), Box::new(Expr::path(&[r])))
    };
    schema.define_calc("c", "Item", "INT", add("a", "b"))?;
    schema.define_calc("d", "Item", "INT", add("c", "a"))?;

    println!("evaluation order:");
    for node in schema.topo_order()? {
        println!("  {node}");
    }

    let mut state = State::new();
    let r = state.add_element(&schema, "Item")?;
    state.set_value(&schema, &FuncKey::new("Item", "a"), &r, Value::Int(1))?;
    state.set_value(&schema, &FuncKey::new("Item", "b"), &r, Value::Int(2))?;
    let report = evaluate(&schema, &mut state)?;
    print!("{}", report.render());

    // updating `b` dirties c and d but not unrelated nodes; a second
    // evaluation recomputes exactly the dirty closure
    state.set_value(&schema, &FuncKey::new("Item", "b"), &r, Value::Int(10))?;
    println!("c stale after update: {}", state.is_stale(&Node::Function(FuncKey::new("Item", "c"))));
    let report = evaluate(&schema, &mut state)?;
    print!("{}", report.render());
    println!("d = {:?}", state.get_value(&schema, &FuncKey::new("Item", "d"), &r)?);

    // a definition can only reference nodes that already exist, so a loop
    // cannot even be expressed incrementally — the self-reference is refused
    let loopy = schema.define_calc("e", "Item", "INT", add("e", "a"));
    println!("self-referential calc: {loopy:?}");
    Ok(())
}
