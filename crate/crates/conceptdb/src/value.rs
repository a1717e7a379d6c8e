use std::fmt;

/// Opaque surrogate identifier of a set element. Refs never change after
/// creation; equality is (set, ordinal) equality. Ordinals grow monotonically
/// per set and are never reused within a session.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ref {
    pub set: String,
    pub ordinal: u64,
}

impl Ref {
    pub fn new(set: impl Into<String>, ordinal: u64) -> Self {
        Ref { set: set.into(), ordinal }
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.set, self.ordinal)
    }
}

/// A single function output. `Null` marks "not yet assigned" (or a propagated
/// missing value); it is not a member of any primitive domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Ref(Ref),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Name of the primitive set this value belongs to, or the target set
    /// name for a ref. Null has no type.
    pub fn type_name(&self) -> Option<&str> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some("INT"),
            Value::Float(_) => Some("FLOAT"),
            Value::Str(_) => Some("STR"),
            Value::Bool(_) => Some("BOOL"),
            Value::Ref(r) => Some(&r.set),
        }
    }

    /// Equality used by link matching and `==`/`!=` in expressions: floats
    /// compare by their 64-bit pattern, everything else structurally.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (a, b) => a == b,
        }
    }

    /// Hashable form of a value, consistent with [`Value::same`].
    pub fn key(&self) -> ValueKey {
        match self {
            Value::Null => ValueKey::Null,
            Value::Int(i) => ValueKey::Int(*i),
            Value::Float(f) => ValueKey::Float(f.to_bits()),
            Value::Str(s) => ValueKey::Str(s.clone()),
            Value::Bool(b) => ValueKey::Bool(*b),
            Value::Ref(r) => ValueKey::Ref(r.clone()),
        }
    }
}

/// Value reduced to a hashable key; floats are keyed by bit pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueKey {
    Null,
    Int(i64),
    Float(u64),
    Str(String),
    Bool(bool),
    Ref(Ref),
}

/// Renders a float with the shortest digits that round-trip, always keeping a
/// decimal point so the text re-parses as a FLOAT literal.
pub fn render_float(f: f64) -> String {
    let s = format!("{f}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Literal syntax for a value, as used by scripts and snapshots.
pub fn render_literal(v: &Value) -> String {
    match v {
        Value::Null => "NULL".to_string(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => render_float(*f),
        Value::Str(s) => render_string(s),
        Value::Bool(true) => "TRUE".to_string(),
        Value::Bool(false) => "FALSE".to_string(),
        Value::Ref(r) => r.to_string(),
    }
}

pub fn render_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// How a value appears in printed output: NULL bare, strings quoted, floats
/// shortest round-trip.
pub fn render_display(v: &Value) -> String {
    render_literal(v)
}
