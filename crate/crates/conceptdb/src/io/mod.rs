//! CSV import/export and whole-engine snapshot persistence.

mod csv;
mod snapshot;

pub use csv::{export_csv, import_csv};
pub use snapshot::{load_snapshot, save_snapshot};
