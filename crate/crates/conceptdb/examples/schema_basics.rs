//! Sets, base functions, and the four primitive operations: add and remove
//! elements, set and get values. Updating a property never changes the
//! element's identity.

use conceptdb::{FuncKey, Schema, State, Value};

fn main() -> conceptdb::Result<()> {
    let mut schema = Schema::new();
    schema.define_entity_set("Product")?;
    schema.define_base_function("name", "Product", "STR")?;
    schema.define_base_function("price", "Product", "FLOAT")?;

    let mut state = State::new();
    let item = state.add_element(&schema, "Product")?;
    println!("created {item}");

    let name = FuncKey::new("Product", "name");
    let price = FuncKey::new("Product", "price");

    // unassigned properties read as Null
    println!("name before assignment: {:?}", state.get_value(&schema, &name, &item)?);

    state.set_value(&schema, &name, &item, Value::Str("My Product".into()))?;
    state.set_value(&schema, &price, &item, Value::Float(12.34))?;
    println!("name:  {:?}", state.get_value(&schema, &name, &item)?);
    println!("price: {:?}", state.get_value(&schema, &price, &item)?);

    // an update rewrites the column cell; the ref and membership stay put
    state.set_value(&schema, &price, &item, Value::Float(23.45))?;
    println!("price after update: {:?}", state.get_value(&schema, &price, &item)?);
    println!("members: {:?}", state.list_refs(&schema, "Product")?);

    // removing an element clears its entries and cascades Null into any
    // column that pointed at it
    state.remove_element(&schema, &item)?;
    println!("members after removal: {:?}", state.list_refs(&schema, "Product")?);

    // ordinals are never reused within a session
    let next = state.add_element(&schema, "Product")?;
    println!("fresh element gets a fresh ordinal: {next}");
    Ok(())
}
