use crate::error::{Error, Result};
use crate::schema::{FuncKey, FunctionDef, FunctionKind, Node, Schema, SetKind};
use crate::value::{Ref, Value};
use std::collections::{HashMap, HashSet, VecDeque};

/// Alive elements of one entity or product set. Ordinals grow monotonically
/// and are never reused within a session; removal leaves a gap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    alive: Vec<u64>,
    alive_index: HashSet<u64>,
    next: u64,
}

impl Registry {
    pub fn len(&self) -> usize {
        self.alive.len()
    }
    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }
    pub fn is_alive(&self, ordinal: u64) -> bool {
        self.alive_index.contains(&ordinal)
    }
    pub fn ordinals(&self) -> &[u64] {
        &self.alive
    }

    fn insert_fresh(&mut self) -> u64 {
        let ord = self.next;
        self.next += 1;
        self.alive.push(ord);
        self.alive_index.insert(ord);
        ord
    }

    /// Restores a specific ordinal (snapshot load). Keeps `alive` sorted.
    fn insert_exact(&mut self, ordinal: u64) -> Result<()> {
        if self.alive_index.contains(&ordinal) {
            return Err(Error::InvalidInput(format!("ordinal {ordinal} already alive")));
        }
        let pos = self.alive.partition_point(|&o| o < ordinal);
        self.alive.insert(pos, ordinal);
        self.alive_index.insert(ordinal);
        if ordinal >= self.next {
            self.next = ordinal + 1;
        }
        Ok(())
    }

    fn remove(&mut self, ordinal: u64) {
        self.alive.retain(|&o| o != ordinal);
        self.alive_index.remove(&ordinal);
    }

    fn clear(&mut self) {
        self.alive.clear();
        self.alive_index.clear();
        self.next = 0;
    }
}

/// One stored function: a dense ordinal-indexed column. Entries beyond the
/// written range read as Null.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Column {
    values: Vec<Value>,
}

impl Column {
    pub fn get(&self, ordinal: u64) -> &Value {
        self.values.get(ordinal as usize).unwrap_or(&Value::Null)
    }

    pub fn set(&mut self, ordinal: u64, value: Value) {
        let idx = ordinal as usize;
        if idx >= self.values.len() {
            if value.is_null() {
                return;
            }
            self.values.resize(idx + 1, Value::Null);
        }
        self.values[idx] = value;
    }
}

/// The data state: alive elements per set plus one column per stored
/// function. Derived columns live here too, guarded by dirty flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct State {
    registries: HashMap<String, Registry>,
    columns: HashMap<FuncKey, Column>,
    dirty: HashSet<Node>,
    generations: HashMap<Node, u64>,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    pub fn registry(&self, set: &str) -> Option<&Registry> {
        self.registries.get(set)
    }

    fn registry_mut(&mut self, set: &str) -> &mut Registry {
        self.registries.entry(set.to_string()).or_default()
    }

    pub fn column(&self, key: &FuncKey) -> Option<&Column> {
        self.columns.get(key)
    }

    pub fn is_dirty(&self, node: &Node) -> bool {
        self.dirty.contains(node)
    }

    /// A derived node is stale if it was explicitly invalidated or has never
    /// been computed at all (definitions start stale).
    pub fn is_stale(&self, node: &Node) -> bool {
        self.dirty.contains(node) || self.generation(node) == 0
    }

    /// Recompute counter per derived node; bumped by the evaluator.
    pub fn generation(&self, node: &Node) -> u64 {
        self.generations.get(node).copied().unwrap_or(0)
    }

    fn require_alive(&self, r: &Ref) -> Result<()> {
        match self.registries.get(&r.set) {
            Some(reg) if reg.is_alive(r.ordinal) => Ok(()),
            _ => Err(Error::DeadRef(r.clone())),
        }
    }

    // ---- the four primitive operations -------------------------------------

    pub fn add_element(&mut self, schema: &Schema, set: &str) -> Result<Ref> {
        match schema.set(set) {
            Some(s) if s.is_entity() => {}
            Some(_) => return Err(Error::NotEntitySet(set.to_string())),
            None => return Err(Error::UnknownSet(set.to_string())),
        }
        let ord = self.registry_mut(set).insert_fresh();
        self.mark_downstream_dirty(schema, &Node::Membership(set.to_string()));
        Ok(Ref::new(set, ord))
    }

    pub fn remove_element(&mut self, schema: &Schema, r: &Ref) -> Result<()> {
        self.require_alive(r)?;
        self.registry_mut(&r.set).remove(r.ordinal);
        // the element's own column entries vanish
        for f in schema.functions_on(&r.set) {
            if let Some(col) = self.columns.get_mut(&f.key()) {
                col.set(r.ordinal, Value::Null);
            }
        }
        // cascade-nullify inbound references, marking the touched columns dirty sources
        let mut touched: Vec<FuncKey> = Vec::new();
        for f in schema.functions() {
            if f.output != r.set {
                continue;
            }
            if let Some(col) = self.columns.get_mut(&f.key()) {
                let mut hit = false;
                for v in col.values.iter_mut() {
                    if matches!(v, Value::Ref(x) if x == r) {
                        *v = Value::Null;
                        hit = true;
                    }
                }
                if hit {
                    touched.push(f.key());
                }
            }
        }
        self.mark_downstream_dirty(schema, &Node::Membership(r.set.clone()));
        for key in touched {
            self.mark_downstream_dirty(schema, &Node::Function(key));
        }
        Ok(())
    }

    pub fn set_value(&mut self, schema: &Schema, func: &FuncKey, r: &Ref, value: Value) -> Result<()> {
        let f = schema
            .function(&func.input, &func.name)
            .ok_or_else(|| Error::UnknownFunction { input: func.input.clone(), name: func.name.clone() })?;
        if !f.is_base() {
            return Err(Error::NotBaseFunction(func.to_string()));
        }
        self.require_alive(r)?;
        if r.set != f.input {
            return Err(Error::TypeMismatch(format!(
                "{r} is not an element of `{}`",
                f.input
            )));
        }
        let value = check_assignable(schema, f, value)?;
        if let Value::Ref(target) = &value {
            self.require_alive(target)?;
        }
        self.columns.entry(func.clone()).or_default().set(r.ordinal, value);
        self.mark_downstream_dirty(schema, &Node::Function(func.clone()));
        Ok(())
    }

    pub fn get_value(&self, schema: &Schema, func: &FuncKey, r: &Ref) -> Result<Value> {
        let f = schema
            .function(&func.input, &func.name)
            .ok_or_else(|| Error::UnknownFunction { input: func.input.clone(), name: func.name.clone() })?;
        self.require_alive(r)?;
        if r.set != f.input {
            return Err(Error::TypeMismatch(format!("{r} is not an element of `{}`", f.input)));
        }
        if f.is_derived() && self.is_stale(&Node::Function(func.clone())) {
            return Err(Error::StaleDerived(func.to_string()));
        }
        if matches!(f.kind, FunctionKind::Projection { .. })
            && self.is_stale(&Node::ProductSet(f.input.clone()))
        {
            return Err(Error::StaleDerived(func.to_string()));
        }
        Ok(self.columns.get(func).map(|c| c.get(r.ordinal).clone()).unwrap_or(Value::Null))
    }

    // ---- path reads and object views ---------------------------------------

    /// Sequential function application with Null propagation.
    pub fn eval_path(&self, schema: &Schema, r: &Ref, path: &[String]) -> Result<Value> {
        if path.is_empty() {
            return Err(Error::InvalidInput("empty path".into()));
        }
        let mut current = Value::Ref(r.clone());
        for seg in path {
            let anchor = match &current {
                Value::Null => return Ok(Value::Null),
                Value::Ref(x) => x.clone(),
                other => {
                    return Err(Error::TypeMismatch(format!(
                        "cannot apply `{seg}` to non-reference value {other:?}"
                    )))
                }
            };
            let f = schema.function(&anchor.set, seg).ok_or_else(|| Error::UnknownPathSegment {
                set: anchor.set.clone(),
                segment: seg.clone(),
            })?;
            current = self.get_value(schema, &f.key(), &anchor)?;
        }
        Ok(current)
    }

    /// Snapshot view of one element: its ref plus current outputs of the
    /// requested functions. Later writes do not alter the view.
    pub fn materialize_object(
        &self,
        schema: &Schema,
        r: &Ref,
        functions: &[String],
    ) -> Result<ObjectView> {
        self.require_alive(r)?;
        let mut fields = Vec::with_capacity(functions.len());
        for name in functions {
            let f = schema.function(&r.set, name).ok_or_else(|| Error::UnknownFunction {
                input: r.set.clone(),
                name: name.clone(),
            })?;
            fields.push((name.clone(), self.get_value(schema, &f.key(), r)?));
        }
        Ok(ObjectView { reference: r.clone(), fields })
    }

    pub fn count(&self, schema: &Schema, set: &str) -> Result<usize> {
        match schema.set(set) {
            Some(s) if !s.is_primitive() => {}
            _ => return Err(Error::UnknownSet(set.to_string())),
        }
        Ok(self.registries.get(set).map(|r| r.len()).unwrap_or(0))
    }

    pub fn list_refs(&self, schema: &Schema, set: &str) -> Result<Vec<Ref>> {
        match schema.set(set) {
            Some(s) if !s.is_primitive() => {}
            _ => return Err(Error::UnknownSet(set.to_string())),
        }
        Ok(self
            .registries
            .get(set)
            .map(|r| r.ordinals().iter().map(|&o| Ref::new(set, o)).collect())
            .unwrap_or_default())
    }

    // ---- evaluator-side access ---------------------------------------------

    pub(crate) fn insert_exact_element(&mut self, set: &str, ordinal: u64) -> Result<()> {
        self.registry_mut(set).insert_exact(ordinal)
    }

    pub(crate) fn replace_column(&mut self, key: FuncKey, column: Column) {
        self.columns.insert(key, column);
    }

    pub(crate) fn reset_product(&mut self, set: &str, schema: &Schema) {
        self.registry_mut(set).clear();
        for f in schema.functions_on(set) {
            self.columns.remove(&f.key());
        }
    }

    pub(crate) fn product_push(&mut self, set: &str) -> u64 {
        self.registry_mut(set).insert_fresh()
    }

    pub(crate) fn clear_dirty(&mut self, node: &Node) {
        self.dirty.remove(node);
        *self.generations.entry(node.clone()).or_default() += 1;
    }

    /// Raw dense column contents, used by determinism checks.
    pub fn raw_column_values(&self, key: &FuncKey) -> Option<&[Value]> {
        self.columns.get(key).map(|c| c.values.as_slice())
    }

    /// Marks every evaluated node reachable downstream of `source` dirty.
    fn mark_downstream_dirty(&mut self, schema: &Schema, source: &Node) {
        let order = match schema.topo_order() {
            Ok(o) => o,
            Err(_) => return, // cyclic schema cannot be evaluated anyway
        };
        let mut reverse: HashMap<Node, Vec<Node>> = HashMap::new();
        for node in &order {
            if let Ok(deps) = schema.dependencies(node) {
                for d in deps {
                    reverse.entry(d).or_default().push(node.clone());
                }
            }
        }
        let mut queue: VecDeque<Node> = VecDeque::new();
        queue.push_back(source.clone());
        let mut seen: HashSet<Node> = HashSet::new();
        while let Some(n) = queue.pop_front() {
            if let Some(children) = reverse.get(&n) {
                for c in children {
                    if seen.insert(c.clone()) {
                        self.dirty.insert(c.clone());
                        queue.push_back(c.clone());
                    }
                }
            }
        }
    }

    /// Base-state view used by snapshots: (set, ordinal, function, value) for
    /// every non-Null base entry, in declaration order.
    pub fn base_entries<'a>(&'a self, schema: &'a Schema) -> Vec<(&'a FunctionDef, u64, &'a Value)> {
        let mut out = Vec::new();
        for f in schema.functions() {
            if !f.is_base() {
                continue;
            }
            let Some(col) = self.columns.get(&f.key()) else { continue };
            if let Some(reg) = self.registries.get(&f.input) {
                for &ord in reg.ordinals() {
                    let v = col.get(ord);
                    if !v.is_null() {
                        out.push((f, ord, v));
                    }
                }
            }
        }
        out
    }
}

/// A reference paired with a snapshot of function outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectView {
    pub reference: Ref,
    pub fields: Vec<(String, Value)>,
}

fn check_assignable(schema: &Schema, f: &FunctionDef, value: Value) -> Result<Value> {
    match (&value, schema.set(&f.output).map(|s| &s.kind)) {
        (Value::Null, _) => Ok(value),
        (Value::Int(i), Some(SetKind::Primitive)) if f.output == "FLOAT" => Ok(Value::Float(*i as f64)),
        (v, _) => match v.type_name() {
            Some(t) if t == f.output => Ok(value),
            Some(t) => Err(Error::TypeMismatch(format!(
                "function `{}` expects {}, got {t}",
                f.key(),
                f.output
            ))),
            None => Ok(value),
        },
    }
}
