use super::ast::{RefLit, Statement, StatementKind};
use super::lex::{tokenize, Tok, Token};
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, UnOp};
use crate::schema::Accumulator;
use crate::value::Value;

pub fn parse(text: &str) -> Result<Vec<Statement>> {
    let tokens = tokenize(text)?;
    Parser { tokens, pos: 0 }.script()
}

/// Parses a single bare literal (used by snapshot V-lines).
pub fn parse_literal_text(text: &str) -> Result<Value> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let v = p.literal()?;
    p.expect(&Tok::Eof)?;
    Ok(v)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> Error {
        let t = self.peek();
        Error::ParseError {
            line: t.line,
            col: t.col,
            msg: format!("expected {expected}, found {}", t.tok.describe()),
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<Token> {
        if self.at(tok) {
            Ok(self.bump())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("identifier")),
        }
    }

    /// Type position: a primitive keyword or a set identifier.
    fn type_name(&mut self) -> Result<String> {
        match &self.peek().tok {
            Tok::Keyword(k @ ("INT" | "FLOAT" | "STR" | "BOOL")) => {
                let k = k.to_string();
                self.bump();
                Ok(k)
            }
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("type (INT, FLOAT, STR, BOOL or a set name)")),
        }
    }

    fn string(&mut self) -> Result<String> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("string literal")),
        }
    }

    fn script(&mut self) -> Result<Vec<Statement>> {
        let mut out = Vec::new();
        while !self.at(&Tok::Eof) {
            let t = self.peek().clone();
            let kind = self.statement()?;
            self.expect(&Tok::Semi)?;
            out.push(Statement { kind, line: t.line, col: t.col });
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<StatementKind> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Keyword("SET") => {
                self.bump();
                Ok(StatementKind::SetDecl { name: self.ident()? })
            }
            Tok::Keyword("FUNC") => {
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                let input = self.ident()?;
                self.expect(&Tok::Arrow)?;
                let output = self.type_name()?;
                Ok(StatementKind::FuncDecl { name, input, output })
            }
            Tok::Keyword("CALC") => {
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                let input = self.ident()?;
                self.expect(&Tok::Arrow)?;
                let output = self.type_name()?;
                self.expect(&Tok::Assign)?;
                let expr = self.expr()?;
                Ok(StatementKind::CalcDecl { name, input, output, expr })
            }
            Tok::Keyword("LINK") => {
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                let input = self.ident()?;
                self.expect(&Tok::Arrow)?;
                let target = self.ident()?;
                self.expect(&Tok::Keyword("ON"))?;
                let mut matches = vec![self.link_match()?];
                while self.eat(&Tok::Comma) {
                    matches.push(self.link_match()?);
                }
                Ok(StatementKind::LinkDecl { name, input, target, matches })
            }
            Tok::Keyword("AGG") => {
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                let group = self.ident()?;
                self.expect(&Tok::Arrow)?;
                let output = self.type_name()?;
                self.expect(&Tok::Assign)?;
                let accumulator = self.accumulator()?;
                self.expect(&Tok::LParen)?;
                let fact = self.ident()?;
                self.expect(&Tok::Dot)?;
                let link = self.ident()?;
                self.expect(&Tok::Comma)?;
                let measure = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(StatementKind::AggDecl { name, group, output, accumulator, fact, link, measure })
            }
            Tok::Keyword("PROD") => {
                self.bump();
                let name = self.ident()?;
                self.expect(&Tok::Assign)?;
                let mut components = vec![self.ident()?];
                self.expect(&Tok::Star)?;
                components.push(self.ident()?);
                while self.eat(&Tok::Star) {
                    components.push(self.ident()?);
                }
                let predicate = if self.eat(&Tok::Keyword("WHERE")) {
                    Some(self.expr()?)
                } else {
                    None
                };
                Ok(StatementKind::ProdDecl { name, components, predicate })
            }
            Tok::Keyword("ADD") => {
                self.bump();
                let set = self.ident()?;
                let mut assigns = Vec::new();
                if self.eat(&Tok::LParen) {
                    loop {
                        let f = self.ident()?;
                        self.expect(&Tok::Assign)?;
                        let v = self.literal()?;
                        assigns.push((f, v));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(&Tok::RParen)?;
                }
                Ok(StatementKind::Add { set, assigns })
            }
            Tok::Keyword("DEL") => {
                self.bump();
                Ok(StatementKind::Del { target: self.ref_lit()? })
            }
            Tok::Keyword("UPD") => {
                self.bump();
                let target = self.ref_lit()?;
                self.expect(&Tok::Dot)?;
                let function = self.ident()?;
                self.expect(&Tok::Assign)?;
                let value = self.literal()?;
                Ok(StatementKind::Upd { target, function, value })
            }
            Tok::Keyword("GET") => {
                self.bump();
                let target = self.ref_lit()?;
                self.expect(&Tok::Dot)?;
                let path = self.path()?;
                Ok(StatementKind::Get { target, path })
            }
            Tok::Keyword("SHOW") => {
                self.bump();
                let set = self.ident()?;
                let mut paths = Vec::new();
                if self.eat(&Tok::LParen) {
                    paths.push(self.path()?);
                    while self.eat(&Tok::Comma) {
                        paths.push(self.path()?);
                    }
                    self.expect(&Tok::RParen)?;
                }
                Ok(StatementKind::Show { set, paths })
            }
            Tok::Keyword("LOAD") => {
                self.bump();
                if self.eat(&Tok::Keyword("FROM")) {
                    Ok(StatementKind::LoadSnapshot { file: self.string()? })
                } else {
                    let set = self.ident()?;
                    self.expect(&Tok::Keyword("FROM"))?;
                    Ok(StatementKind::LoadCsv { set, file: self.string()? })
                }
            }
            Tok::Keyword("SAVE") => {
                self.bump();
                let set = self.ident()?;
                self.expect(&Tok::Keyword("TO"))?;
                Ok(StatementKind::SaveCsv { set, file: self.string()? })
            }
            Tok::Keyword("DUMP") => {
                self.bump();
                Ok(StatementKind::Dump { file: self.string()? })
            }
            Tok::Keyword("EVAL") => {
                self.bump();
                Ok(StatementKind::Eval)
            }
            _ => Err(self.error("a statement keyword")),
        }
    }

    fn accumulator(&mut self) -> Result<Accumulator> {
        let acc = match &self.peek().tok {
            Tok::Keyword("SUM") => Accumulator::Sum,
            Tok::Keyword("COUNT") => Accumulator::Count,
            Tok::Keyword("MIN") => Accumulator::Min,
            Tok::Keyword("MAX") => Accumulator::Max,
            Tok::Keyword("AVG") => Accumulator::Avg,
            _ => return Err(self.error("SUM, COUNT, MIN, MAX or AVG")),
        };
        self.bump();
        Ok(acc)
    }

    fn link_match(&mut self) -> Result<(Vec<String>, String)> {
        let path = self.path()?;
        self.expect(&Tok::EqEq)?;
        let target = self.ident()?;
        Ok((path, target))
    }

    fn path(&mut self) -> Result<Vec<String>> {
        let mut segs = vec![self.ident()?];
        while self.eat(&Tok::Dot) {
            segs.push(self.ident()?);
        }
        Ok(segs)
    }

    fn ref_lit(&mut self) -> Result<RefLit> {
        let set = self.ident()?;
        self.expect(&Tok::Hash)?;
        match self.peek().tok.clone() {
            Tok::Int(i) if i >= 0 => {
                self.bump();
                Ok(RefLit { set, ordinal: i as u64 })
            }
            _ => Err(self.error("non-negative ordinal")),
        }
    }

    fn literal(&mut self) -> Result<Value> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Minus => {
                self.bump();
                match self.peek().tok.clone() {
                    Tok::Int(i) => {
                        self.bump();
                        Ok(Value::Int(-i))
                    }
                    Tok::Float(f) => {
                        self.bump();
                        Ok(Value::Float(-f))
                    }
                    _ => Err(self.error("numeric literal after `-`")),
                }
            }
            Tok::Int(i) => {
                // Ident#Int would be a ref literal, but Int can also stand alone
                self.bump();
                Ok(Value::Int(i))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Value::Float(f))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            Tok::Keyword("TRUE") => {
                self.bump();
                Ok(Value::Bool(true))
            }
            Tok::Keyword("FALSE") => {
                self.bump();
                Ok(Value::Bool(false))
            }
            Tok::Keyword("NULL") => {
                self.bump();
                Ok(Value::Null)
            }
            Tok::Ident(_) => {
                let r = self.ref_lit()?;
                Ok(Value::Ref(crate::value::Ref::new(r.set, r.ordinal)))
            }
            _ => Err(self.error("literal")),
        }
    }

    // precedence climbing: OR < AND < comparisons < additive < multiplicative < unary
    fn expr(&mut self) -> Result<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::Keyword("OR")) {
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.cmp_expr()?;
        while self.eat(&Tok::Keyword("AND")) {
            let rhs = self.cmp_expr()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek().tok {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                Tok::Lt => BinOp::Lt,
                Tok::LtEq => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::GtEq => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let rhs = self.add_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Keyword("NOT")) {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary_expr()?)));
        }
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary_expr()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        match t.tok {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Lit(Value::Int(i)))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Expr::Lit(Value::Float(f)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Value::Str(s)))
            }
            Tok::Keyword("TRUE") => {
                self.bump();
                Ok(Expr::Lit(Value::Bool(true)))
            }
            Tok::Keyword("FALSE") => {
                self.bump();
                Ok(Expr::Lit(Value::Bool(false)))
            }
            Tok::Keyword("NULL") => {
                self.bump();
                Ok(Expr::Lit(Value::Null))
            }
            Tok::Ident(_) => Ok(Expr::Path(self.path()?)),
            _ => Err(self.error("expression")),
        }
    }
}
