use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::value::{render_literal, Value};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "AND",
            BinOp::Or => "OR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

/// Expression AST used by calc functions, aggregate measures and product
/// predicates. Paths are dot-separated chains of function names anchored at
/// the expression's input set.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Path(Vec<String>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn path(segments: &[&str]) -> Expr {
        Expr::Path(segments.iter().map(|s| s.to_string()).collect())
    }

    /// Every function reference inside the expression, as (input set, name)
    /// pairs, resolved against `anchor`. The expression must type-check.
    pub fn function_refs(&self, schema: &Schema, anchor: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        self.collect_refs(schema, anchor, &mut out)?;
        Ok(out)
    }

    fn collect_refs(&self, schema: &Schema, anchor: &str, out: &mut Vec<(String, String)>) -> Result<()> {
        match self {
            Expr::Lit(_) => Ok(()),
            Expr::Path(segs) => {
                let mut set = anchor.to_string();
                for seg in segs {
                    let f = schema.function(&set, seg).ok_or_else(|| Error::UnknownPathSegment {
                        set: set.clone(),
                        segment: seg.clone(),
                    })?;
                    out.push((set.clone(), seg.clone()));
                    set = f.output.clone();
                }
                Ok(())
            }
            Expr::Unary(_, e) => e.collect_refs(schema, anchor, out),
            Expr::Binary(_, a, b) => {
                a.collect_refs(schema, anchor, out)?;
                b.collect_refs(schema, anchor, out)
            }
        }
    }

    /// Static result type, as a set name. Numeric operators combine INT and
    /// FLOAT (mixed operands widen to FLOAT); comparisons yield BOOL; AND/OR/
    /// NOT demand BOOL operands.
    pub fn infer_type(&self, schema: &Schema, anchor: &str) -> Result<String> {
        match self {
            Expr::Lit(v) => match v.type_name() {
                Some(t) => Ok(t.to_string()),
                None => Err(Error::TypeMismatch(
                    "NULL literal has no type and cannot appear in expressions".into(),
                )),
            },
            Expr::Path(segs) => {
                let mut set = anchor.to_string();
                for seg in segs {
                    let f = schema.function(&set, seg).ok_or_else(|| Error::UnknownPathSegment {
                        set: set.clone(),
                        segment: seg.clone(),
                    })?;
                    set = f.output.clone();
                }
                Ok(set)
            }
            Expr::Unary(UnOp::Neg, e) => {
                let t = e.infer_type(schema, anchor)?;
                if t == "INT" || t == "FLOAT" {
                    Ok(t)
                } else {
                    Err(Error::TypeMismatch(format!("unary `-` needs INT or FLOAT, got {t}")))
                }
            }
            Expr::Unary(UnOp::Not, e) => {
                let t = e.infer_type(schema, anchor)?;
                if t == "BOOL" {
                    Ok(t)
                } else {
                    Err(Error::TypeMismatch(format!("NOT needs BOOL, got {t}")))
                }
            }
            Expr::Binary(op, a, b) => {
                let ta = a.infer_type(schema, anchor)?;
                let tb = b.infer_type(schema, anchor)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => match (ta.as_str(), tb.as_str()) {
                        ("INT", "INT") => Ok("INT".into()),
                        ("INT" | "FLOAT", "INT" | "FLOAT") => Ok("FLOAT".into()),
                        _ => Err(Error::TypeMismatch(format!(
                            "`{}` needs numeric operands, got {ta} and {tb}",
                            op.symbol()
                        ))),
                    },
                    BinOp::Eq | BinOp::Ne => {
                        let numeric = |t: &str| t == "INT" || t == "FLOAT";
                        if ta == tb || (numeric(&ta) && numeric(&tb)) {
                            Ok("BOOL".into())
                        } else {
                            Err(Error::TypeMismatch(format!(
                                "`{}` needs matching operand types, got {ta} and {tb}",
                                op.symbol()
                            )))
                        }
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        let numeric = |t: &str| t == "INT" || t == "FLOAT";
                        if (numeric(&ta) && numeric(&tb)) || (ta == "STR" && tb == "STR") {
                            Ok("BOOL".into())
                        } else {
                            Err(Error::TypeMismatch(format!(
                                "`{}` needs numeric or STR operands, got {ta} and {tb}",
                                op.symbol()
                            )))
                        }
                    }
                    BinOp::And | BinOp::Or => {
                        if ta == "BOOL" && tb == "BOOL" {
                            Ok("BOOL".into())
                        } else {
                            Err(Error::TypeMismatch(format!(
                                "`{}` needs BOOL operands, got {ta} and {tb}",
                                op.symbol()
                            )))
                        }
                    }
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Or, ..) => 1,
            Expr::Binary(BinOp::And, ..) => 2,
            Expr::Binary(BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, ..) => 3,
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 4,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 5,
            Expr::Unary(..) => 6,
            Expr::Lit(_) | Expr::Path(_) => 7,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{}", render_literal(v)),
            Expr::Path(segs) => write!(f, "{}", segs.join(".")),
            Expr::Unary(op, e) => {
                let sym = match op {
                    UnOp::Neg => "-",
                    UnOp::Not => "NOT ",
                };
                if e.precedence() < self.precedence() {
                    write!(f, "{sym}({e})")
                } else {
                    write!(f, "{sym}{e}")
                }
            }
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                if a.precedence() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // binary ops are left-associative; parenthesize an equal-
                // precedence right child to keep the shape on re-parse
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}
