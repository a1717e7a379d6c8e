//! The script language: every capability is reachable through statements.
//! `Session` keeps the schema and state across statements; `run_script`
//! executes a whole text, writing results to any `Write`.

use conceptdb::dsl::{run_script, Session};
use std::io::{self, Write};

const SCRIPT: &str = r#"
-- schema
SET Product;
FUNC name: Product -> STR;
FUNC price: Product -> FLOAT;
SET OrderItem;
FUNC pname: OrderItem -> STR;
FUNC qty: OrderItem -> INT;
LINK product: OrderItem -> Product ON pname == name;
CALC amount: OrderItem -> FLOAT = qty * product.price;
AGG revenue: Product -> FLOAT = SUM(OrderItem.product, amount);

-- data
ADD Product (name = "apple", price = 1.2);
ADD Product (name = "pear", price = 2.5);
ADD OrderItem (pname = "apple", qty = 3);
ADD OrderItem (pname = "pear", qty = 1);
ADD OrderItem (pname = "apple", qty = 2);

-- reads trigger an implicit EVAL when derived data is stale
GET OrderItem#0.amount;
GET Product#0.revenue;
SHOW Product (name, price, revenue);

-- updates mark downstream nodes dirty; the next read recomputes
UPD Product#0.price = 2.0;
GET Product#0.revenue;
"#;

fn main() {
    let mut session = Session::new();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if let Err(line) = run_script(&mut session, SCRIPT, &mut out) {
        let _ = writeln!(out, "{line}");
        std::process::exit(1);
    }
}
