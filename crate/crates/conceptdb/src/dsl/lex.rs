use crate::error::{Error, Result};

pub const KEYWORDS: &[&str] = &[
    "SET", "FUNC", "CALC", "LINK", "AGG", "PROD", "ON", "WHERE", "ADD", "DEL", "UPD", "GET",
    "SHOW", "LOAD", "SAVE", "DUMP", "EVAL", "FROM", "TO", "SUM", "COUNT", "MIN", "MAX", "AVG",
    "AND", "OR", "NOT", "TRUE", "FALSE", "NULL", "INT", "FLOAT", "STR", "BOOL",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Keyword(&'static str),
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Arrow,     // ->
    Dot,
    Comma,
    Semi,
    Colon,
    LParen,
    RParen,
    LBracket,
    RBracket,
    EqEq,
    NotEq,
    LtEq,
    GtEq,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Assign,    // =
    Hash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Keyword(k) => (*k).to_string(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Float(f) => format!("decimal {f}"),
            Tok::Str(_) => "string".to_string(),
            Tok::Arrow => "`->`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::LtEq => "`<=`".into(),
            Tok::GtEq => "`>=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Hash => "`#`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { chars: text.chars().peekable(), line: 1, col: 1 }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();
    loop {
        while matches!(cur.peek(), Some(c) if c.is_whitespace()) {
            cur.bump();
        }
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, line, col });
            return Ok(out);
        };
        let tok = match c {
            '-' => {
                cur.bump();
                match cur.peek() {
                    Some('-') => {
                        while matches!(cur.peek(), Some(c) if c != '\n') {
                            cur.bump();
                        }
                        continue;
                    }
                    Some('>') => {
                        cur.bump();
                        Tok::Arrow
                    }
                    _ => Tok::Minus,
                }
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => {
                            return Err(Error::LexError {
                                line,
                                col,
                                msg: "unterminated string".into(),
                            })
                        }
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => {
                                return Err(Error::LexError {
                                    line,
                                    col: cur.col.saturating_sub(1),
                                    msg: format!("illegal escape {other:?}"),
                                })
                            }
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut num = String::new();
                while matches!(cur.peek(), Some(d) if d.is_ascii_digit()) {
                    num.push(cur.bump().unwrap());
                }
                // a dot followed by a digit continues the number; otherwise it
                // belongs to a path
                let mut is_float = false;
                if cur.peek() == Some('.') {
                    let mut ahead = cur.chars.clone();
                    ahead.next();
                    if matches!(ahead.peek(), Some(d) if d.is_ascii_digit()) {
                        is_float = true;
                        num.push(cur.bump().unwrap());
                        while matches!(cur.peek(), Some(d) if d.is_ascii_digit()) {
                            num.push(cur.bump().unwrap());
                        }
                    }
                }
                if is_float {
                    match num.parse::<f64>() {
                        Ok(f) => Tok::Float(f),
                        Err(_) => {
                            return Err(Error::LexError {
                                line,
                                col,
                                msg: format!("bad decimal literal `{num}`"),
                            })
                        }
                    }
                } else {
                    match num.parse::<i64>() {
                        Ok(i) => Tok::Int(i),
                        Err(_) => {
                            return Err(Error::LexError {
                                line,
                                col,
                                msg: format!("integer literal `{num}` out of range"),
                            })
                        }
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    word.push(cur.bump().unwrap());
                }
                match KEYWORDS.iter().find(|k| **k == word) {
                    Some(k) => Tok::Keyword(k),
                    None => Tok::Ident(word),
                }
            }
            _ => {
                cur.bump();
                match c {
                    '.' => Tok::Dot,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '+' => Tok::Plus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '#' => Tok::Hash,
                    '=' => {
                        if cur.peek() == Some('=') {
                            cur.bump();
                            Tok::EqEq
                        } else {
                            Tok::Assign
                        }
                    }
                    '!' => {
                        if cur.peek() == Some('=') {
                            cur.bump();
                            Tok::NotEq
                        } else {
                            return Err(Error::LexError {
                                line,
                                col,
                                msg: "expected `=` after `!`".into(),
                            });
                        }
                    }
                    '<' => {
                        if cur.peek() == Some('=') {
                            cur.bump();
                            Tok::LtEq
                        } else {
                            Tok::Lt
                        }
                    }
                    '>' => {
                        if cur.peek() == Some('=') {
                            cur.bump();
                            Tok::GtEq
                        } else {
                            Tok::Gt
                        }
                    }
                    other => {
                        return Err(Error::LexError {
                            line,
                            col,
                            msg: format!("illegal character `{other}`"),
                        })
                    }
                }
            }
        };
        out.push(Token { tok, line, col });
    }
}
