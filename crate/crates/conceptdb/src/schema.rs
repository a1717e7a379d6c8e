use crate::error::{Error, Result};
use crate::expr::Expr;
use indexmap::IndexMap;
use std::collections::{HashMap, HashSet};
use std::fmt;

pub const PRIMITIVES: [&str; 4] = ["INT", "FLOAT", "STR", "BOOL"];

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Primitive,
    Entity,
    Product {
        components: Vec<String>,
        predicate: Option<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetDef {
    pub name: String,
    pub kind: SetKind,
}

impl SetDef {
    pub fn is_primitive(&self) -> bool {
        matches!(self.kind, SetKind::Primitive)
    }
    pub fn is_entity(&self) -> bool {
        matches!(self.kind, SetKind::Entity)
    }
    pub fn is_product(&self) -> bool {
        matches!(self.kind, SetKind::Product { .. })
    }
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SetKind::Primitive => "primitive",
            SetKind::Entity => "entity",
            SetKind::Product { .. } => "product",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulator {
    Sum,
    Count,
    Min,
    Max,
    Avg,
}

impl Accumulator {
    pub fn keyword(self) -> &'static str {
        match self {
            Accumulator::Sum => "SUM",
            Accumulator::Count => "COUNT",
            Accumulator::Min => "MIN",
            Accumulator::Max => "MAX",
            Accumulator::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    Base,
    Calc {
        expr: Expr,
    },
    Link {
        target: String,
        /// (source path anchored at the input set, function name on the target set)
        matches: Vec<(Vec<String>, String)>,
    },
    Aggregate {
        fact_set: String,
        grouping_link: String,
        measure: Expr,
        accumulator: Accumulator,
    },
    /// Engine-generated component accessor of a product set.
    Projection {
        component_index: usize,
    },
}

impl FunctionKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionKind::Base => "base",
            FunctionKind::Calc { .. } => "calc",
            FunctionKind::Link { .. } => "link",
            FunctionKind::Aggregate { .. } => "aggregate",
            FunctionKind::Projection { .. } => "projection",
        }
    }
}

/// A function f: input -> output. Names are scoped per input set.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub input: String,
    pub output: String,
    pub kind: FunctionKind,
}

impl FunctionDef {
    pub fn key(&self) -> FuncKey {
        FuncKey {
            input: self.input.clone(),
            name: self.name.clone(),
        }
    }
    pub fn is_base(&self) -> bool {
        matches!(self.kind, FunctionKind::Base)
    }
    /// Stored directly by users (base) or filled during product population
    /// (projection); everything else is computed by the evaluator.
    pub fn is_derived(&self) -> bool {
        matches!(
            self.kind,
            FunctionKind::Calc { .. } | FunctionKind::Link { .. } | FunctionKind::Aggregate { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncKey {
    pub input: String,
    pub name: String,
}

impl FuncKey {
    pub fn new(input: impl Into<String>, name: impl Into<String>) -> Self {
        FuncKey { input: input.into(), name: name.into() }
    }
}

impl fmt::Display for FuncKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.input, self.name)
    }
}

/// Node in the dependency graph: stored or derived functions, derived set
/// populations, and per-set membership sources (add/remove of elements).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Function(FuncKey),
    ProductSet(String),
    /// Source node: the alive-element registry of an entity set.
    Membership(String),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Function(k) => write!(f, "{k}"),
            Node::ProductSet(s) => write!(f, "{s}"),
            Node::Membership(s) => write!(f, "members({s})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Set(String),
    Func(FuncKey),
}

/// The model: a collection of sets and a collection of functions between
/// them. The schema carries no data; see [`crate::state::State`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    sets: IndexMap<String, SetDef>,
    functions: IndexMap<FuncKey, FunctionDef>,
    /// User-declaration order, replayed by snapshots.
    decls: Vec<Decl>,
}

impl Schema {
    pub fn new() -> Self {
        let mut s = Schema::default();
        for p in PRIMITIVES {
            s.sets.insert(
                p.to_string(),
                SetDef { name: p.to_string(), kind: SetKind::Primitive },
            );
        }
        s
    }

    pub fn set(&self, name: &str) -> Option<&SetDef> {
        self.sets.get(name)
    }

    pub fn function(&self, input: &str, name: &str) -> Option<&FunctionDef> {
        self.functions.get(&FuncKey::new(input, name))
    }

    pub fn sets(&self) -> impl Iterator<Item = &SetDef> {
        self.sets.values()
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.functions.values()
    }

    /// Functions taking `set` as input, in definition order.
    pub fn functions_on(&self, set: &str) -> impl Iterator<Item = &FunctionDef> {
        let set = set.to_string();
        self.functions.values().filter(move |f| f.input == set)
    }

    pub fn decls(&self) -> &[Decl] {
        &self.decls
    }

    fn require_set(&self, name: &str) -> Result<&SetDef> {
        self.set(name).ok_or_else(|| Error::UnknownSet(name.to_string()))
    }

    /// Resolves a dot path anchored at `anchor`, returning the traversed
    /// function defs in order.
    pub fn resolve_path(&self, anchor: &str, path: &[String]) -> Result<Vec<&FunctionDef>> {
        let mut set = anchor.to_string();
        let mut out = Vec::with_capacity(path.len());
        for seg in path {
            let f = self.function(&set, seg).ok_or_else(|| Error::UnknownPathSegment {
                set: set.clone(),
                segment: seg.clone(),
            })?;
            set = f.output.clone();
            out.push(f);
        }
        Ok(out)
    }

    pub fn path_output(&self, anchor: &str, path: &[String]) -> Result<String> {
        Ok(self
            .resolve_path(anchor, path)?
            .last()
            .map(|f| f.output.clone())
            .unwrap_or_else(|| anchor.to_string()))
    }

    // ---- definition operations -------------------------------------------

    pub fn define_entity_set(&mut self, name: &str) -> Result<&SetDef> {
        if self.sets.contains_key(name) {
            return Err(Error::DuplicateSet(name.to_string()));
        }
        let def = SetDef { name: name.to_string(), kind: SetKind::Entity };
        self.sets.insert(name.to_string(), def);
        self.decls.push(Decl::Set(name.to_string()));
        Ok(&self.sets[name])
    }

    pub fn define_base_function(&mut self, name: &str, input: &str, output: &str) -> Result<&FunctionDef> {
        let inp = self.require_set(input)?;
        if inp.is_primitive() {
            return Err(Error::InvalidInput(format!(
                "primitive set `{input}` cannot carry functions"
            )));
        }
        self.require_set(output)?;
        self.insert_function(FunctionDef {
            name: name.to_string(),
            input: input.to_string(),
            output: output.to_string(),
            kind: FunctionKind::Base,
        })
    }

    pub fn define_calc(&mut self, name: &str, input: &str, output: &str, expr: Expr) -> Result<&FunctionDef> {
        let inp = self.require_set(input)?;
        if inp.is_primitive() {
            return Err(Error::InvalidInput(format!(
                "primitive set `{input}` cannot carry functions"
            )));
        }
        self.require_set(output)?;
        let t = expr.infer_type(self, input)?;
        if !type_compatible(&t, output) {
            return Err(Error::TypeMismatch(format!(
                "calc `{name}` declared {output} but expression has type {t}"
            )));
        }
        let def = FunctionDef {
            name: name.to_string(),
            input: input.to_string(),
            output: output.to_string(),
            kind: FunctionKind::Calc { expr },
        };
        self.insert_derived(def)
    }

    pub fn define_link(
        &mut self,
        name: &str,
        input: &str,
        target: &str,
        matches: Vec<(Vec<String>, String)>,
    ) -> Result<&FunctionDef> {
        let inp = self.require_set(input)?;
        if inp.is_primitive() {
            return Err(Error::InvalidInput(format!(
                "primitive set `{input}` cannot carry functions"
            )));
        }
        let tgt = self.require_set(target)?;
        if tgt.is_primitive() {
            return Err(Error::TypeMismatch(format!(
                "link target `{target}` must be an entity or product set"
            )));
        }
        if matches.is_empty() {
            return Err(Error::EmptyMatchList);
        }
        for (path, tfn) in &matches {
            let src_type = self.path_output(input, path)?;
            let tf = self
                .function(target, tfn)
                .ok_or_else(|| Error::UnknownFunction { input: target.to_string(), name: tfn.clone() })?;
            if !type_compatible(&src_type, &tf.output) {
                return Err(Error::TypeMismatch(format!(
                    "link `{name}`: source path `{}` has type {src_type} but target function `{tfn}` yields {}",
                    path.join("."),
                    tf.output
                )));
            }
        }
        let def = FunctionDef {
            name: name.to_string(),
            input: input.to_string(),
            output: target.to_string(),
            kind: FunctionKind::Link { target: target.to_string(), matches },
        };
        self.insert_derived(def)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn define_aggregate(
        &mut self,
        name: &str,
        group_set: &str,
        output: &str,
        fact_set: &str,
        grouping_link: &str,
        measure: Expr,
        accumulator: Accumulator,
    ) -> Result<&FunctionDef> {
        self.require_set(group_set)?;
        self.require_set(output)?;
        self.require_set(fact_set)?;
        let link = self
            .function(fact_set, grouping_link)
            .ok_or_else(|| Error::UnknownFunction {
                input: fact_set.to_string(),
                name: grouping_link.to_string(),
            })?;
        if link.output != group_set {
            return Err(Error::TypeMismatch(format!(
                "grouping link `{grouping_link}` maps {fact_set} to {}, not to {group_set}",
                link.output
            )));
        }
        let mt = measure.infer_type(self, fact_set)?;
        match accumulator {
            Accumulator::Count => {
                if output != "INT" {
                    return Err(Error::TypeMismatch(format!(
                        "COUNT aggregate `{name}` must output INT, not {output}"
                    )));
                }
            }
            Accumulator::Avg => {
                if mt != "INT" && mt != "FLOAT" {
                    return Err(Error::TypeMismatch(format!(
                        "AVG needs a numeric measure, got {mt}"
                    )));
                }
                if output != "FLOAT" {
                    return Err(Error::TypeMismatch(format!(
                        "AVG aggregate `{name}` must output FLOAT, not {output}"
                    )));
                }
            }
            Accumulator::Sum | Accumulator::Min | Accumulator::Max => {
                if mt != "INT" && mt != "FLOAT" {
                    return Err(Error::TypeMismatch(format!(
                        "{} needs a numeric measure, got {mt}",
                        accumulator.keyword()
                    )));
                }
                if !type_compatible(&mt, output) {
                    return Err(Error::TypeMismatch(format!(
                        "aggregate `{name}` declared {output} but measure has type {mt}"
                    )));
                }
            }
        }
        let def = FunctionDef {
            name: name.to_string(),
            input: group_set.to_string(),
            output: output.to_string(),
            kind: FunctionKind::Aggregate {
                fact_set: fact_set.to_string(),
                grouping_link: grouping_link.to_string(),
                measure,
                accumulator,
            },
        };
        self.insert_derived(def)
    }

    pub fn define_product(
        &mut self,
        name: &str,
        components: &[&str],
        predicate: Option<Expr>,
    ) -> Result<&SetDef> {
        if self.sets.contains_key(name) {
            return Err(Error::DuplicateSet(name.to_string()));
        }
        if components.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "product `{name}` needs at least 2 components, got {}",
                components.len()
            )));
        }
        for c in components {
            let s = self.require_set(c)?;
            if s.is_primitive() {
                return Err(Error::InvalidInput(format!(
                    "product component `{c}` must be an entity or product set"
                )));
            }
        }

        // register set + projections first so the predicate can resolve
        let def = SetDef {
            name: name.to_string(),
            kind: SetKind::Product {
                components: components.iter().map(|c| c.to_string()).collect(),
                predicate: None,
            },
        };
        self.sets.insert(name.to_string(), def);
        self.decls.push(Decl::Set(name.to_string()));
        for (i, proj) in projection_names(components).into_iter().enumerate() {
            let f = FunctionDef {
                name: proj,
                input: name.to_string(),
                output: components[i].to_string(),
                kind: FunctionKind::Projection { component_index: i },
            };
            let key = f.key();
            self.functions.insert(key.clone(), f);
            self.decls.push(Decl::Func(key));
        }

        if let Some(pred) = predicate {
            let check = (|| -> Result<()> {
                let t = pred.infer_type(self, name)?;
                if t != "BOOL" {
                    return Err(Error::TypeMismatch(format!(
                        "product predicate must be BOOL, got {t}"
                    )));
                }
                // paths must go through a projection of this product
                for (inp, fname) in pred.function_refs(self, name)? {
                    if inp == name {
                        let f = &self.functions[&FuncKey::new(&inp, &fname)];
                        if !matches!(f.kind, FunctionKind::Projection { .. }) {
                            return Err(Error::TypeMismatch(format!(
                                "product predicate may reference only projection paths; `{fname}` is {}",
                                f.kind.name()
                            )));
                        }
                    }
                }
                Ok(())
            })();
            if let Err(e) = check {
                self.rollback_set(name);
                return Err(e);
            }
            if let SetKind::Product { predicate, .. } = &mut self.sets[name].kind {
                *predicate = Some(pred);
            }
            if let Err(e) = self.topo_order() {
                self.rollback_set(name);
                return Err(e);
            }
        }
        Ok(&self.sets[name])
    }

    fn rollback_set(&mut self, name: &str) {
        self.functions.retain(|k, _| k.input != name);
        self.sets.shift_remove(name);
        self.decls.retain(|d| match d {
            Decl::Set(s) => s != name,
            Decl::Func(k) => k.input != name,
        });
    }

    /// Drops a derived function. Used by tests and the add/remove restore
    /// property; base functions and projections cannot be removed.
    pub fn remove_derived(&mut self, input: &str, name: &str) -> Result<FunctionDef> {
        let key = FuncKey::new(input, name);
        match self.functions.get(&key) {
            None => Err(Error::UnknownFunction { input: input.into(), name: name.into() }),
            Some(f) if !f.is_derived() => Err(Error::NotBaseFunction(format!("{key}"))),
            Some(_) => {
                let f = self.functions.shift_remove(&key).unwrap();
                self.decls.retain(|d| d != &Decl::Func(key.clone()));
                Ok(f)
            }
        }
    }

    fn insert_function(&mut self, def: FunctionDef) -> Result<&FunctionDef> {
        let key = def.key();
        if self.functions.contains_key(&key) {
            return Err(Error::DuplicateFunction { input: def.input, name: def.name });
        }
        self.functions.insert(key.clone(), def);
        self.decls.push(Decl::Func(key.clone()));
        Ok(&self.functions[&key])
    }

    fn insert_derived(&mut self, def: FunctionDef) -> Result<&FunctionDef> {
        let key = def.key();
        if self.functions.contains_key(&key) {
            return Err(Error::DuplicateFunction { input: def.input, name: def.name });
        }
        self.functions.insert(key.clone(), def);
        if let Err(e) = self.topo_order() {
            self.functions.shift_remove(&key);
            return Err(e);
        }
        self.decls.push(Decl::Func(key.clone()));
        Ok(&self.functions[&key])
    }

    // ---- dependency graph --------------------------------------------------

    /// Inserts a set definition without validation. For constructing schemas
    /// wholesale; run [`Schema::validate`] afterwards.
    pub fn insert_raw_set(&mut self, def: SetDef) {
        let name = def.name.clone();
        self.sets.insert(name.clone(), def);
        self.decls.push(Decl::Set(name));
    }

    /// Inserts a function definition without type or cycle checks. For
    /// constructing schemas wholesale; run [`Schema::validate`] afterwards.
    pub fn insert_raw_function(&mut self, def: FunctionDef) {
        let key = def.key();
        self.functions.insert(key.clone(), def);
        self.decls.push(Decl::Func(key));
    }

    /// Graph node a function reference resolves to. Projections have no
    /// column of their own; they are filled when their product is populated.
    fn function_node(&self, key: FuncKey) -> Node {
        match self.functions.get(&key) {
            Some(f) if matches!(f.kind, FunctionKind::Projection { .. }) => {
                Node::ProductSet(f.input.clone())
            }
            _ => Node::Function(key),
        }
    }

    /// Direct dependencies of a derived node.
    pub fn dependencies(&self, node: &Node) -> Result<Vec<Node>> {
        let mut deps = Vec::new();
        match node {
            Node::Membership(_) => {}
            Node::ProductSet(name) => {
                let set = self.require_set(name)?;
                if let SetKind::Product { components, predicate } = &set.kind {
                    for c in components {
                        deps.push(self.population_node(c)?);
                    }
                    if let Some(pred) = predicate {
                        for (inp, fname) in pred.function_refs(self, name)? {
                            // projections of this product are filled during
                            // population itself, not separate dependencies
                            if inp != *name {
                                deps.push(self.function_node(FuncKey::new(inp, fname)));
                            }
                        }
                    }
                }
            }
            Node::Function(key) => {
                let f = self
                    .functions
                    .get(key)
                    .ok_or_else(|| Error::UnknownFunction { input: key.input.clone(), name: key.name.clone() })?;
                match &f.kind {
                    FunctionKind::Base => {
                        deps.push(self.population_node(&f.input)?);
                    }
                    FunctionKind::Projection { .. } => {
                        deps.push(Node::ProductSet(f.input.clone()));
                    }
                    FunctionKind::Calc { expr } => {
                        deps.push(self.population_node(&f.input)?);
                        for (inp, fname) in expr.function_refs(self, &f.input)? {
                            deps.push(self.function_node(FuncKey::new(inp, fname)));
                        }
                    }
                    FunctionKind::Link { target, matches } => {
                        deps.push(self.population_node(&f.input)?);
                        deps.push(self.population_node(target)?);
                        for (path, tfn) in matches {
                            for fd in self.resolve_path(&f.input, path)? {
                                deps.push(self.function_node(fd.key()));
                            }
                            if self.function(target, tfn).is_some() {
                                deps.push(self.function_node(FuncKey::new(target.clone(), tfn.clone())));
                            }
                        }
                    }
                    FunctionKind::Aggregate { fact_set, grouping_link, measure, .. } => {
                        deps.push(self.population_node(&f.input)?);
                        deps.push(self.population_node(fact_set)?);
                        deps.push(self.function_node(FuncKey::new(fact_set.clone(), grouping_link.clone())));
                        for (inp, fname) in measure.function_refs(self, fact_set)? {
                            deps.push(self.function_node(FuncKey::new(inp, fname)));
                        }
                    }
                }
            }
        }
        deps.sort();
        deps.dedup();
        Ok(deps)
    }

    fn population_node(&self, set: &str) -> Result<Node> {
        let s = self.require_set(set)?;
        Ok(if s.is_product() {
            Node::ProductSet(set.to_string())
        } else {
            Node::Membership(set.to_string())
        })
    }

    /// All nodes the evaluator must compute, ordered so each appears after
    /// everything it depends on. Fails with the cycle members if the graph
    /// has a cycle.
    pub fn topo_order(&self) -> Result<Vec<Node>> {
        let mut nodes: Vec<Node> = Vec::new();
        for s in self.sets.values() {
            if s.is_product() {
                nodes.push(Node::ProductSet(s.name.clone()));
            }
        }
        for f in self.functions.values() {
            if f.is_derived() {
                nodes.push(Node::Function(f.key()));
            }
        }

        let mut deps: HashMap<Node, Vec<Node>> = HashMap::new();
        for n in &nodes {
            let d = self
                .dependencies(n)?
                .into_iter()
                .filter(|d| is_evaluated(self, d))
                .collect();
            deps.insert(n.clone(), d);
        }

        // iterative DFS with an explicit stack for cycle reporting
        let mut order = Vec::with_capacity(nodes.len());
        let mut mark: HashMap<Node, u8> = HashMap::new(); // 1 = on stack, 2 = done
        for start in &nodes {
            if mark.get(start).copied() == Some(2) {
                continue;
            }
            let mut stack: Vec<(Node, usize)> = vec![(start.clone(), 0)];
            mark.insert(start.clone(), 1);
            while let Some((node, idx)) = stack.pop() {
                let children = &deps[&node];
                if idx < children.len() {
                    let child = children[idx].clone();
                    stack.push((node, idx + 1));
                    match mark.get(&child).copied() {
                        Some(2) => {}
                        Some(1) => {
                            let mut cycle: Vec<String> = stack
                                .iter()
                                .map(|(n, _)| n.to_string())
                                .skip_while(|n| *n != child.to_string())
                                .collect();
                            cycle.push(child.to_string());
                            return Err(Error::CycleDetected(cycle));
                        }
                        _ => {
                            mark.insert(child.clone(), 1);
                            stack.push((child, 0));
                        }
                    }
                } else {
                    mark.insert(node.clone(), 2);
                    order.push(node);
                }
            }
        }
        Ok(order)
    }

    /// Structural diagnostics. Empty iff the schema is well-formed.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        for f in self.functions.values() {
            if self.set(&f.input).is_none() {
                diags.push(format!("function {} has unknown input set {}", f.key(), f.input));
            }
            if self.set(&f.output).is_none() {
                diags.push(format!("function {} has unknown output set {}", f.key(), f.output));
            }
        }
        for s in self.sets.values() {
            if let SetKind::Product { components, .. } = &s.kind {
                for c in components {
                    if self.set(c).is_none() {
                        diags.push(format!("product {} has unknown component {c}", s.name));
                    }
                }
            }
        }
        if diags.is_empty() {
            match self.topo_order() {
                Ok(_) => {}
                Err(e) => diags.push(e.to_string()),
            }
            let mut rec = HashSet::new();
            for s in self.sets.values() {
                if self.product_contains(&s.name, &s.name, &mut rec) {
                    diags.push(format!("product {} contains itself as a component", s.name));
                }
            }
        }
        diags
    }

    fn product_contains(&self, root: &str, current: &str, seen: &mut HashSet<String>) -> bool {
        if let Some(SetDef { kind: SetKind::Product { components, .. }, .. }) = self.set(current) {
            for c in components {
                if c == root {
                    return true;
                }
                if seen.insert(c.clone()) && self.product_contains(root, c, seen) {
                    return true;
                }
            }
        }
        false
    }
}

fn is_evaluated(schema: &Schema, node: &Node) -> bool {
    match node {
        Node::Membership(_) => false,
        Node::ProductSet(_) => true,
        Node::Function(k) => schema
            .function(&k.input, &k.name)
            .map(|f| f.is_derived() || matches!(f.kind, FunctionKind::Projection { .. }))
            .unwrap_or(false),
    }
}

fn type_compatible(actual: &str, declared: &str) -> bool {
    actual == declared || (actual == "INT" && declared == "FLOAT")
}

/// Projection names: lower-cased component set name, with 1-based numeric
/// suffixes when the same component appears more than once.
pub fn projection_names(components: &[&str]) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for c in components {
        *counts.entry(c.to_lowercase()).or_default() += 1;
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    components
        .iter()
        .map(|c| {
            let base = c.to_lowercase();
            if counts[&base] > 1 {
                let n = seen.entry(base.clone()).or_default();
                *n += 1;
                format!("{base}{n}")
            } else {
                base
            }
        })
        .collect()
}
