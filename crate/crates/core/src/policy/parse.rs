//! Recursive-descent parser for the policy DSL.

use super::{is_identifier, Attribute, PolicyError, PolicyNode, PROTECTION_ATTRIBUTE};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, PolicyError> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
                continue;
            }
            '(' | ')' | ',' => {
                chars.next();
                column += 1;
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Comma,
                };
                out.push(Token {
                    tok,
                    line: tl,
                    column: tc,
                });
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(ident),
                    line: tl,
                    column: tc,
                });
            }
            _ => {
                return Err(PolicyError::ParseError {
                    line,
                    column,
                    expected: expected(&["attribute", "(", ")", ",", "kofn"]),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

fn expected(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const START: &[&str] = &["attribute", "(", "kofn"];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, items: &[&str]) -> PolicyError {
        let t = self.peek();
        PolicyError::ParseError {
            line: t.line,
            column: t.column,
            expected: expected(items),
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), PolicyError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self) -> Result<PolicyNode, PolicyError> {
        match self.peek().tok.clone() {
            Tok::LParen => self.group(),
            Tok::Ident(name) if name == "kofn" && *self.peek_at(1) == Tok::LParen => self.kofn(),
            Tok::Ident(name) if name == "AND" || name == "OR" => Err(self.error(START)),
            Tok::Ident(name) => {
                self.bump();
                if name == PROTECTION_ATTRIBUTE {
                    return Err(PolicyError::ReservedAttribute(name));
                }
                debug_assert!(is_identifier(&name));
                Ok(PolicyNode::Leaf(Attribute::new(name)?))
            }
            _ => Err(self.error(START)),
        }
    }

    // '(' expr ((AND expr)+ | (OR expr)+)? ')'
    fn group(&mut self) -> Result<PolicyNode, PolicyError> {
        self.expect(Tok::LParen, "(")?;
        let mut children = vec![self.expr()?];
        let mut op: Option<String> = None;
        loop {
            match self.peek().tok.clone() {
                Tok::RParen => {
                    self.bump();
                    break;
                }
                Tok::Ident(word) if word == "AND" || word == "OR" => {
                    match &op {
                        Some(current) if *current != word => {
                            return Err(self.error(&[current.as_str(), ")"]));
                        }
                        _ => op = Some(word),
                    }
                    self.bump();
                    children.push(self.expr()?);
                }
                _ => {
                    return Err(match &op {
                        Some(current) => self.error(&[current.as_str(), ")"]),
                        None => self.error(&["AND", "OR", ")"]),
                    })
                }
            }
        }
        match op.as_deref() {
            None => Ok(children.pop().expect("one child")),
            Some("AND") => PolicyNode::and(children),
            _ => PolicyNode::or(children),
        }
    }

    // kofn '(' INT ',' expr (',' expr)* ')'
    fn kofn(&mut self) -> Result<PolicyNode, PolicyError> {
        self.bump();
        self.expect(Tok::LParen, "(")?;
        let threshold = match self.peek().tok.clone() {
            Tok::Ident(n) if n.bytes().all(|c| c.is_ascii_digit()) => {
                let t = n.parse::<usize>().map_err(|_| self.error(&["threshold"]))?;
                self.bump();
                t
            }
            _ => return Err(self.error(&["threshold"])),
        };
        self.expect(Tok::Comma, ",")?;
        let mut children = vec![self.expr()?];
        loop {
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                    children.push(self.expr()?);
                }
                Tok::RParen => {
                    self.bump();
                    break;
                }
                _ => return Err(self.error(&[",", ")"])),
            }
        }
        PolicyNode::gate(threshold, children)
    }
}

/// Parses policy text into a tree. `AND`/`OR` chains become single gates.
pub fn parse_policy(text: &str) -> Result<PolicyNode, PolicyError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let node = parser.expr()?;
    if parser.peek().tok != Tok::Eof {
        return Err(parser.error(&["end of input"]));
    }
    Ok(node)
}
