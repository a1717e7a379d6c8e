use crate::error::{Error, Result};
use crate::schema::{FuncKey, Schema};
use crate::state::State;
use crate::value::{render_float, Value};
use std::io::{Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Inferred {
    Int,
    Float,
    Bool,
    Str,
}

impl Inferred {
    fn name(self) -> &'static str {
        match self {
            Inferred::Int => "INT",
            Inferred::Float => "FLOAT",
            Inferred::Bool => "BOOL",
            Inferred::Str => "STR",
        }
    }
}

/// Type of a whole column: INT if everything parses as an integer, else FLOAT
/// if everything parses as a number, else BOOL for true/false, else STR.
/// Empty fields are Null and excluded from inference.
fn infer_column(values: &[&str]) -> Inferred {
    let nonempty: Vec<&&str> = values.iter().filter(|v| !v.is_empty()).collect();
    if nonempty.is_empty() {
        return Inferred::Str;
    }
    if nonempty.iter().all(|v| v.parse::<i64>().is_ok()) {
        return Inferred::Int;
    }
    if nonempty.iter().all(|v| v.parse::<f64>().is_ok()) {
        return Inferred::Float;
    }
    if nonempty.iter().all(|v| v.eq_ignore_ascii_case("true") || v.eq_ignore_ascii_case("false")) {
        return Inferred::Bool;
    }
    Inferred::Str
}

fn parse_field(raw: &str, ty: &str) -> Result<Value> {
    if raw.is_empty() {
        return Ok(Value::Null);
    }
    match ty {
        "INT" => raw
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| Error::TypeMismatch(format!("`{raw}` is not an INT"))),
        "FLOAT" => raw
            .parse::<f64>()
            .map(Value::Float)
            .map_err(|_| Error::TypeMismatch(format!("`{raw}` is not a FLOAT"))),
        "BOOL" => Ok(Value::Bool(raw.eq_ignore_ascii_case("true"))),
        _ => Ok(Value::Str(raw.to_string())),
    }
}

/// Imports an RFC-4180 CSV stream into an entity set. The first record is the
/// header; missing base functions are created with inferred output types.
pub fn import_csv<R: Read>(
    reader: R,
    set: &str,
    schema: &mut Schema,
    state: &mut State,
) -> Result<usize> {
    match schema.set(set) {
        Some(s) if s.is_entity() => {}
        Some(_) => return Err(Error::NotEntitySet(set.to_string())),
        None => return Err(Error::UnknownSet(set.to_string())),
    }

    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::CsvFormatError { record: 0, msg: e.to_string() })?
        .iter()
        .map(|h| h.to_string())
        .collect();

    // the whole file is needed before types can be inferred
    let mut records: Vec<Vec<String>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::CsvFormatError { record: i as u64 + 1, msg: e.to_string() })?;
        records.push(rec.iter().map(|f| f.to_string()).collect());
    }

    // decide the target type per column, creating functions as needed
    let mut column_types: Vec<String> = Vec::with_capacity(headers.len());
    let mut to_create: Vec<(String, String)> = Vec::new();
    for (ci, header) in headers.iter().enumerate() {
        let fields: Vec<&str> = records.iter().map(|r| r[ci].as_str()).collect();
        let inferred = infer_column(&fields);
        match schema.function(set, header) {
            Some(f) => {
                let ok = f.output == inferred.name()
                    || (f.output == "FLOAT" && inferred == Inferred::Int)
                    || f.output == "STR";
                if !ok {
                    return Err(Error::TypeMismatch(format!(
                        "column `{header}` inferred as {} but function `{header}` on `{set}` yields {}",
                        inferred.name(),
                        f.output
                    )));
                }
                column_types.push(f.output.clone());
            }
            None => {
                to_create.push((header.clone(), inferred.name().to_string()));
                column_types.push(inferred.name().to_string());
            }
        }
    }
    for (name, output) in to_create {
        schema.define_base_function(&name, set, &output)?;
    }

    let mut imported = 0usize;
    for record in &records {
        let r = state.add_element(schema, set)?;
        for (ci, raw) in record.iter().enumerate() {
            let value = match parse_field(raw, &column_types[ci]) {
                Ok(v) => v,
                Err(e) => {
                    let _ = state.remove_element(schema, &r);
                    return Err(e);
                }
            };
            if value.is_null() {
                continue;
            }
            let key = FuncKey::new(set, headers[ci].clone());
            if let Err(e) = state.set_value(schema, &key, &r, value) {
                let _ = state.remove_element(schema, &r);
                return Err(e);
            }
        }
        imported += 1;
    }
    Ok(imported)
}

fn render_csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => render_float(*f),
        Value::Str(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Ref(r) => r.to_string(),
    }
}

/// Exports one record per alive element in ordinal order; the header is the
/// dot-joined path names. Requires clean derived columns along the paths.
pub fn export_csv<W: Write>(
    set: &str,
    paths: &[Vec<String>],
    schema: &Schema,
    state: &State,
    writer: W,
) -> Result<usize> {
    for p in paths {
        schema.resolve_path(set, p)?;
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let header: Vec<String> = paths.iter().map(|p| p.join(".")).collect();
    wtr.write_record(&header).map_err(csv_io)?;
    let mut rows = 0usize;
    for r in state.list_refs(schema, set)? {
        let mut record = Vec::with_capacity(paths.len());
        for p in paths {
            record.push(render_csv_field(&state.eval_path(schema, &r, p)?));
        }
        wtr.write_record(&record).map_err(csv_io)?;
        rows += 1;
    }
    wtr.flush()?;
    Ok(rows)
}

fn csv_io(e: csv::Error) -> Error {
    Error::CsvFormatError { record: 0, msg: e.to_string() }
}
