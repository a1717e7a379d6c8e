//! CSV import with whole-file type inference, and export of arbitrary paths
//! (derived columns included). Empty fields are Null and do not influence
//! the inferred column type.

use conceptdb::io::{export_csv, import_csv};
use conceptdb::{evaluate, Accumulator, Expr, Schema, State};

const PRODUCTS: &str = "name,price\napple,1.2\npear,2.5\nplum,\n";
const ITEMS: &str = "pname,qty\napple,3\npear,1\napple,2\n";

fn main() -> conceptdb::Result<()> {
    let mut schema = Schema::new();
    let mut state = State::new();

    // import creates the sets' functions from the headers; `price` infers
    // FLOAT even though one field is empty, `qty` infers INT
    schema.define_entity_set("Product")?;
    let n = import_csv(PRODUCTS.as_bytes(), "Product", &mut schema, &mut state)?;
    println!("imported {n} products");
    schema.define_entity_set("OrderItem")?;
    let n = import_csv(ITEMS.as_bytes(), "OrderItem", &mut schema, &mut state)?;
    println!("imported {n} order items");

    schema.define_link(
        "product",
        "OrderItem",
        "Product",
        vec![(vec!["pname".to_string()], "name".to_string())],
    )?;
    schema.define_aggregate(
        "orders", "Product", "INT", "OrderItem", "product",
        Expr::path(&["qty"]), Accumulator::Count,
    )?;
    evaluate(&schema, &mut state)?;

    // export follows paths, so derived and linked values come along;
    // Nulls become empty fields again
    let paths = vec![
        vec!["name".to_string()],
        vec!["price".to_string()],
        vec!["orders".to_string()],
    ];
    let mut out = Vec::new();
    export_csv("Product", &paths, &schema, &state, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));

    let item_paths = vec![
        vec!["pname".to_string()],
        vec!["product".to_string(), "price".to_string()],
    ];
    let mut out = Vec::new();
    export_csv("OrderItem", &item_paths, &schema, &state, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
