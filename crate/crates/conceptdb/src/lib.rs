//! An in-memory, columnar data engine built on two constructs: sets whose
//! immutable elements represent that entities exist, and mutable functions
//! between sets that represent how entities are characterized. Updating a
//! property never touches the element itself; new data is inferred by
//! deriving new functions (calc, link, aggregate) and new sets (products)
//! from existing ones.
//!
//! The crate ships a library API, a small script/REPL language (see
//! [`dsl`]), CSV import/export and text snapshots (see [`io`]), and runnable
//! examples, one per capability, under `examples/`.
//!
//! ```
//! use conceptdb::{evaluate, Accumulator, Expr, FuncKey, Schema, State, Value};
//!
//! let mut schema = Schema::new();
//! schema.define_entity_set("Product").unwrap();
//! schema.define_base_function("name", "Product", "STR").unwrap();
//! schema.define_base_function("price", "Product", "FLOAT").unwrap();
//!
//! let mut state = State::new();
//! let item = state.add_element(&schema, "Product").unwrap();
//! state.set_value(&schema, &FuncKey::new("Product", "price"), &item, Value::Float(12.34)).unwrap();
//! // changing the price does not change the element's identity
//! state.set_value(&schema, &FuncKey::new("Product", "price"), &item, Value::Float(23.45)).unwrap();
//! assert_eq!(state.list_refs(&schema, "Product").unwrap(), vec![item.clone()]);
//!
//! schema.define_calc("twice", "Product", "FLOAT",
//!     Expr::Binary(conceptdb::BinOp::Mul,
//!         Box::new(Expr::path(&["price"])),
//!         Box::new(Expr::Lit(Value::Float(2.0))))).unwrap();
//! evaluate(&schema, &mut state).unwrap();
//! assert_eq!(
//!     state.get_value(&schema, &FuncKey::new("Product", "twice"), &item).unwrap(),
//!     Value::Float(46.9),
//! );
//! # let _ = Accumulator::Sum;
//! ```

pub mod dsl;
pub mod error;
pub mod eval;
pub mod expr;
pub mod io;
pub mod schema;
pub mod state;
pub mod value;

pub use error::{Error, Result};
pub use eval::{evaluate, EvaluationReport};
pub use expr::{BinOp, Expr, UnOp};
pub use schema::{Accumulator, FuncKey, FunctionDef, FunctionKind, Node, Schema, SetDef, SetKind};
pub use state::{ObjectView, State};
pub use value::{Ref, Value};
