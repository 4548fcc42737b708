//! Hand-rolled lexer and recursive-descent parsers for the textual formats:
//! processes, session types, typing contexts, functional terms, and
//! functional types. `--` starts a line comment in every format. The wildcard
//! `_` denotes a fresh name at each occurrence.

use std::collections::BTreeMap;
use std::fmt;

use crate::lastn::term::{FunType, Term};
use crate::name::{Label, Name};
use crate::process::Process;
use crate::types::{Priority, SessionType, TypingContext};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u64),
    LPar,
    RPar,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Colon,
    ColonEq,
    Semi,
    Dot,
    Pipe,
    Star,
    Percent,
    Plus,
    Amp,
    Tilde,
    Lt,
    Gt,
    Swap,
    Eq,
    Lambda,
    Bang,
    Query,
    Lollipop,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(t) => return write!(f, "'{t}'"),
            Tok::Nat(n) => return write!(f, "'{n}'"),
            Tok::LPar => "'('",
            Tok::RPar => "')'",
            Tok::LBrack => "'['",
            Tok::RBrack => "']'",
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
            Tok::Comma => "','",
            Tok::Colon => "':'",
            Tok::ColonEq => "':='",
            Tok::Semi => "';'",
            Tok::Dot => "'.'",
            Tok::Pipe => "'|'",
            Tok::Star => "'*'",
            Tok::Percent => "'%'",
            Tok::Plus => "'+'",
            Tok::Amp => "'&'",
            Tok::Tilde => "'~'",
            Tok::Lt => "'<'",
            Tok::Gt => "'>'",
            Tok::Swap => "'<>'",
            Tok::Eq => "'='",
            Tok::Lambda => "'\\'",
            Tok::Bang => "'!'",
            Tok::Query => "'?'",
            Tok::Lollipop => "'-o'",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, msg: msg.into() }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if c == b'-' && self.peek2() == Some(b'-') {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let tok = if is_ident_start(c) {
                let start = self.pos;
                while self.peek().is_some_and(is_ident_char) {
                    self.bump();
                }
                let text = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ident bytes are ascii")
                    .to_string();
                Tok::Ident(text)
            } else if c.is_ascii_digit() {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let n = text
                    .parse::<u64>()
                    .map_err(|_| self.err(format!("number out of range: {text}")))?;
                Tok::Nat(n)
            } else {
                self.bump();
                match c {
                    b'(' => Tok::LPar,
                    b')' => Tok::RPar,
                    b'[' => Tok::LBrack,
                    b']' => Tok::RBrack,
                    b'{' => Tok::LBrace,
                    b'}' => Tok::RBrace,
                    b',' => Tok::Comma,
                    b';' => Tok::Semi,
                    b'.' => Tok::Dot,
                    b'|' => Tok::Pipe,
                    b'*' => Tok::Star,
                    b'%' => Tok::Percent,
                    b'+' => Tok::Plus,
                    b'&' => Tok::Amp,
                    b'~' => Tok::Tilde,
                    b'>' => Tok::Gt,
                    b'=' => Tok::Eq,
                    b'\\' => Tok::Lambda,
                    b'!' => Tok::Bang,
                    b'?' => Tok::Query,
                    b':' => {
                        if self.peek() == Some(b'=') {
                            self.bump();
                            Tok::ColonEq
                        } else {
                            Tok::Colon
                        }
                    }
                    b'<' => {
                        if self.peek() == Some(b'>') {
                            self.bump();
                            Tok::Swap
                        } else {
                            Tok::Lt
                        }
                    }
                    b'-' => {
                        if self.peek() == Some(b'o')
                            && !self.peek2().is_some_and(is_ident_char)
                        {
                            self.bump();
                            Tok::Lollipop
                        } else {
                            return Err(self.err("unexpected '-'"));
                        }
                    }
                    other => {
                        return Err(self.err(format!(
                            "unexpected character '{}'",
                            other as char
                        )))
                    }
                }
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

struct P {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl P {
    fn new(src: &str) -> Result<P, ParseError> {
        Ok(P { toks: Lexer::new(src).tokens()?, pos: 0 })
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(t)) if t == kw)
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        let t = self
            .peek()
            .cloned()
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!("expected {want}, found {t}"))),
            None => Err(self.err(format!("expected {want}, found end of input"))),
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.done() {
            Ok(())
        } else {
            Err(self.err(format!(
                "expected end of input, found {}",
                self.peek().unwrap()
            )))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.next()? {
            Tok::Ident(t) => Ok(t),
            t => Err(ParseError {
                line: self.toks[self.pos - 1].1,
                col: self.toks[self.pos - 1].2,
                msg: format!("expected identifier, found {t}"),
            }),
        }
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        let t = self.ident()?;
        Ok(if t == "_" { Name::fresh("_") } else { Name::intern(&t) })
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        Ok(Label::new(&self.ident()?))
    }

    // ---- processes ----

    fn process(&mut self) -> Result<Process, ParseError> {
        match self.peek() {
            Some(Tok::Nat(0)) => {
                self.pos += 1;
                Ok(Process::Inact)
            }
            Some(Tok::LPar) => {
                self.pos += 1;
                let mut parts = vec![self.process()?];
                while self.eat(&Tok::Pipe) {
                    parts.push(self.process()?);
                }
                self.expect(Tok::RPar)?;
                Ok(if parts.len() == 1 {
                    parts.pop().unwrap()
                } else {
                    Process::par_all(parts)
                })
            }
            Some(Tok::Ident(kw)) => match kw.as_str() {
                "send" => {
                    self.pos += 1;
                    let subject = self.name()?;
                    self.expect(Tok::LBrack)?;
                    let payload = self.name()?;
                    self.expect(Tok::Comma)?;
                    let cont = self.name()?;
                    self.expect(Tok::RBrack)?;
                    Ok(Process::send(subject, payload, cont))
                }
                "recv" => {
                    self.pos += 1;
                    let subject = self.name()?;
                    self.expect(Tok::LPar)?;
                    let payload = self.name()?;
                    self.expect(Tok::Comma)?;
                    let cont = self.name()?;
                    self.expect(Tok::RPar)?;
                    self.expect(Tok::Dot)?;
                    let body = self.process()?;
                    Ok(Process::recv(subject, payload, cont, body))
                }
                "sel" => {
                    self.pos += 1;
                    let subject = self.name()?;
                    self.expect(Tok::LBrack)?;
                    let cont = self.name()?;
                    self.expect(Tok::RBrack)?;
                    self.expect(Tok::Lt)?;
                    let label = self.label()?;
                    Ok(Process::sel(subject, cont, label))
                }
                "bra" => {
                    self.pos += 1;
                    let subject = self.name()?;
                    self.expect(Tok::LPar)?;
                    let binder = self.name()?;
                    self.expect(Tok::RPar)?;
                    self.expect(Tok::Gt)?;
                    self.expect(Tok::LBrace)?;
                    let mut branches: Vec<(Label, Process)> = Vec::new();
                    loop {
                        let label = self.label()?;
                        self.expect(Tok::Colon)?;
                        let body = self.process()?;
                        if branches.iter().any(|(l, _)| *l == label) {
                            return Err(self.err(format!("duplicate label '{label}'")));
                        }
                        branches.push((label, body));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace)?;
                    Ok(Process::bra(subject, binder, branches))
                }
                "new" => {
                    self.pos += 1;
                    self.expect(Tok::LPar)?;
                    let a = self.name()?;
                    let ann = if self.eat(&Tok::Colon) {
                        Some(self.session_type()?)
                    } else {
                        None
                    };
                    let b = self.name()?;
                    self.expect(Tok::RPar)?;
                    let body = self.process()?;
                    Ok(match ann {
                        Some(t) => Process::res_ann(a, b, t, body),
                        None => Process::res(a, b, body),
                    })
                }
                "fwd" => {
                    self.pos += 1;
                    self.expect(Tok::LBrack)?;
                    let a = self.name()?;
                    self.expect(Tok::Swap)?;
                    let b = self.name()?;
                    self.expect(Tok::RBrack)?;
                    Ok(Process::fwd(a, b))
                }
                other => Err(self.err(format!("expected a process, found '{other}'"))),
            },
            Some(t) => Err(self.err(format!("expected a process, found {t}"))),
            None => Err(self.err("expected a process, found end of input")),
        }
    }

    // ---- session types ----

    fn priority_bracket(&mut self) -> Result<Option<Priority>, ParseError> {
        if !self.eat(&Tok::LBrack) {
            return Ok(None);
        }
        let p = match self.next()? {
            Tok::Nat(n) => Priority::Const(n),
            Tok::Ident(t) if t == "omega" => Priority::Omega,
            Tok::Ident(t) => Priority::Var(t),
            t => return Err(self.err(format!("expected a priority, found {t}"))),
        };
        self.expect(Tok::RBrack)?;
        Ok(Some(p))
    }

    fn type_branches(&mut self) -> Result<BTreeMap<Label, SessionType>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = BTreeMap::new();
        loop {
            let label = self.label()?;
            self.expect(Tok::Colon)?;
            let t = self.session_type()?;
            if out.insert(label.clone(), t).is_some() {
                return Err(self.err(format!("duplicate label '{label}'")));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn type_factor(&mut self) -> Result<SessionType, ParseError> {
        match self.next()? {
            Tok::Ident(t) if t == "end" => Ok(SessionType::Closed),
            Tok::Ident(t) => Ok(SessionType::opaque(&t)),
            Tok::Tilde => {
                let t = self.ident()?;
                Ok(SessionType::Opaque { name: t, dualized: true })
            }
            Tok::Plus => {
                let pri = self.priority_bracket()?;
                let branches = self.type_branches()?;
                Ok(SessionType::Plus { pri, branches })
            }
            Tok::Amp => {
                let pri = self.priority_bracket()?;
                let branches = self.type_branches()?;
                Ok(SessionType::With { pri, branches })
            }
            Tok::LPar => {
                let t = self.session_type()?;
                self.expect(Tok::RPar)?;
                Ok(t)
            }
            t => Err(self.err(format!("expected a type, found {t}"))),
        }
    }

    fn session_type(&mut self) -> Result<SessionType, ParseError> {
        let left = self.type_factor()?;
        let connective = match self.peek() {
            Some(Tok::Star) => Some(true),
            Some(Tok::Percent) => Some(false),
            _ => None,
        };
        match connective {
            None => Ok(left),
            Some(is_tensor) => {
                self.pos += 1;
                let pri = self.priority_bracket()?;
                let right = self.session_type()?;
                Ok(if is_tensor {
                    SessionType::Tensor {
                        pri,
                        payload: Box::new(left),
                        cont: Box::new(right),
                    }
                } else {
                    SessionType::Par {
                        pri,
                        payload: Box::new(left),
                        cont: Box::new(right),
                    }
                })
            }
        }
    }

    // ---- functional terms ----

    fn binder_with_ann(&mut self) -> Result<(Name, Option<FunType>), ParseError> {
        let n = self.name()?;
        let ann = if self.eat(&Tok::Colon) {
            Some(self.fun_type()?)
        } else {
            None
        };
        Ok((n, ann))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Lambda) => {
                self.pos += 1;
                let (param, ann) = self.binder_with_ann()?;
                self.expect(Tok::Dot)?;
                let body = self.term()?;
                Ok(Term::Abs { param, ann, body: Box::new(body) })
            }
            Some(Tok::Ident(kw)) if kw == "let" => {
                self.pos += 1;
                self.expect(Tok::LPar)?;
                let (left, left_ann) = self.binder_with_ann()?;
                self.expect(Tok::Comma)?;
                let (right, right_ann) = self.binder_with_ann()?;
                self.expect(Tok::RPar)?;
                self.expect(Tok::Eq)?;
                let pair = self.term()?;
                if !self.at_kw("in") {
                    return Err(self.err("expected 'in'"));
                }
                self.pos += 1;
                let body = self.term()?;
                Ok(Term::LetPair {
                    left,
                    left_ann,
                    right,
                    right_ann,
                    pair: Box::new(pair),
                    body: Box::new(body),
                })
            }
            Some(Tok::Ident(kw)) if kw == "spawn" => {
                self.pos += 1;
                let child = self.app_term()?;
                self.expect(Tok::Semi)?;
                let cont = self.term()?;
                Ok(Term::spawn(child, cont))
            }
            Some(Tok::Ident(kw)) if kw == "close" => {
                self.pos += 1;
                let subject = self.app_term()?;
                self.expect(Tok::Semi)?;
                let cont = self.term()?;
                Ok(Term::close(subject, cont))
            }
            _ => self.app_term(),
        }
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Some(Tok::LPar) => true,
            Some(Tok::Ident(t)) => !matches!(t.as_str(), "in" | "let" | "spawn" | "close"),
            _ => false,
        }
    }

    fn app_term(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.atom_term()?;
        while self.starts_atom() {
            let arg = self.atom_term()?;
            acc = Term::app(acc, arg);
        }
        Ok(acc)
    }

    fn atom_term(&mut self) -> Result<Term, ParseError> {
        let mut base = match self.peek() {
            Some(Tok::LPar) => {
                self.pos += 1;
                if self.eat(&Tok::RPar) {
                    Term::UnitVal
                } else {
                    let first = self.term()?;
                    if self.eat(&Tok::Comma) {
                        let second = self.term()?;
                        self.expect(Tok::RPar)?;
                        Term::pair(first, second)
                    } else {
                        self.expect(Tok::RPar)?;
                        first
                    }
                }
            }
            Some(Tok::Ident(kw)) => match kw.as_str() {
                "new" => {
                    self.pos += 1;
                    Term::New
                }
                "send" => {
                    self.pos += 1;
                    let payload = self.atom_term()?;
                    let channel = self.atom_term()?;
                    Term::send(payload, channel)
                }
                "recv" => {
                    self.pos += 1;
                    Term::recv(self.atom_term()?)
                }
                "select" => {
                    self.pos += 1;
                    let label = self.label()?;
                    Term::select(label, self.atom_term()?)
                }
                "case" => {
                    self.pos += 1;
                    let subject = self.atom_term()?;
                    self.expect(Tok::LBrace)?;
                    let mut branches: Vec<(Label, Term)> = Vec::new();
                    loop {
                        let label = self.label()?;
                        self.expect(Tok::Colon)?;
                        let body = self.term()?;
                        if branches.iter().any(|(l, _)| *l == label) {
                            return Err(self.err(format!("duplicate label '{label}'")));
                        }
                        branches.push((label, body));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace)?;
                    Term::case(subject, branches)
                }
                _ => Term::var(self.name()?),
            },
            Some(t) => return Err(self.err(format!("expected a term, found {t}"))),
            None => return Err(self.err("expected a term, found end of input")),
        };
        while self.peek() == Some(&Tok::LBrack) {
            self.pos += 1;
            let var = self.name()?;
            self.expect(Tok::ColonEq)?;
            let arg = self.term()?;
            self.expect(Tok::RBrack)?;
            base = Term::subst_frame(base, var, arg);
        }
        Ok(base)
    }

    // ---- functional types ----

    fn fun_type(&mut self) -> Result<FunType, ParseError> {
        let left = self.fun_times()?;
        if self.eat(&Tok::Lollipop) {
            let right = self.fun_type()?;
            Ok(FunType::arrow(left, right))
        } else {
            Ok(left)
        }
    }

    fn fun_times(&mut self) -> Result<FunType, ParseError> {
        let left = self.fun_atom()?;
        if self.eat(&Tok::Star) {
            let right = self.fun_times()?;
            Ok(FunType::prod(left, right))
        } else {
            Ok(left)
        }
    }

    fn fun_branches(&mut self) -> Result<BTreeMap<Label, FunType>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = BTreeMap::new();
        loop {
            let label = self.label()?;
            self.expect(Tok::Colon)?;
            let t = self.fun_type()?;
            if out.insert(label.clone(), t).is_some() {
                return Err(self.err(format!("duplicate label '{label}'")));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn fun_atom(&mut self) -> Result<FunType, ParseError> {
        match self.next()? {
            Tok::Nat(1) => Ok(FunType::Unit),
            Tok::Ident(t) if t == "end" => Ok(FunType::End),
            Tok::Ident(t) => Ok(FunType::TVar(t)),
            Tok::Bang => {
                let payload = self.fun_atom()?;
                self.expect(Tok::Dot)?;
                let cont = self.fun_atom()?;
                Ok(FunType::out(payload, cont))
            }
            Tok::Query => {
                let payload = self.fun_atom()?;
                self.expect(Tok::Dot)?;
                let cont = self.fun_atom()?;
                Ok(FunType::inp(payload, cont))
            }
            Tok::Plus => Ok(FunType::Choice(self.fun_branches()?)),
            Tok::Amp => Ok(FunType::Offer(self.fun_branches()?)),
            Tok::LPar => {
                let t = self.fun_type()?;
                self.expect(Tok::RPar)?;
                Ok(t)
            }
            t => Err(self.err(format!("expected a type, found {t}"))),
        }
    }
}

pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let mut p = P::new(src)?;
    let out = p.process()?;
    p.expect_end()?;
    Ok(out)
}

pub fn parse_type(src: &str) -> Result<SessionType, ParseError> {
    let mut p = P::new(src)?;
    let out = p.session_type()?;
    p.expect_end()?;
    Ok(out)
}

/// A context file is a sequence of `name : type` entries; commas, semicolons,
/// and newlines between entries are all acceptable separators.
pub fn parse_context(src: &str) -> Result<TypingContext, ParseError> {
    let mut p = P::new(src)?;
    let mut ctx = TypingContext::new();
    while !p.done() {
        let (line, col) = p.here();
        let name = p.name()?;
        p.expect(Tok::Colon)?;
        let t = p.session_type()?;
        if ctx.insert(name, t).is_err() {
            return Err(ParseError {
                line,
                col,
                msg: format!("duplicate context entry '{}'", name.origin()),
            });
        }
        while p.eat(&Tok::Comma) || p.eat(&Tok::Semi) {}
    }
    Ok(ctx)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = P::new(src)?;
    let out = p.term()?;
    p.expect_end()?;
    Ok(out)
}

pub fn parse_funtype(src: &str) -> Result<FunType, ParseError> {
    let mut p = P::new(src)?;
    let out = p.fun_type()?;
    p.expect_end()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::print::{print_process, print_type};
    use crate::process::alpha_eq;

    #[test]
    fn parses_every_process_form() {
        let src = "new (x y) (send x[a,b] | recv y(v,w). (sel w[c] < go | bra v(z) > { go: fwd [z<>c], halt: 0 }))";
        let p = parse_process(src).unwrap();
        let reparsed = parse_process(&print_process(&p)).unwrap();
        assert!(alpha_eq(&p, &reparsed));
    }

    #[test]
    fn comments_and_wildcards() {
        let src = "-- top comment\nrecv x(_,_). 0 -- trailing";
        let p = parse_process(src).unwrap();
        match &p {
            Process::Recv { payload, cont, .. } => assert_ne!(payload, cont),
            _ => panic!("expected an input"),
        }
    }

    #[test]
    fn types_round_trip() {
        for src in [
            "end",
            "end *[1] end",
            "(end %[2] end) * end",
            "+[p]{go: end, halt: end * end}",
            "&{l: ~T %[0] end}",
            "T * ~T",
        ] {
            let t = parse_type(src).unwrap();
            assert_eq!(print_type(&t), src, "round trip for {src}");
        }
    }

    #[test]
    fn annotated_restriction() {
        let p = parse_process("new (x: end *[3] end y) (send x[a,b] | recv y(v,w). 0)").unwrap();
        match &p {
            Process::Res { ann: Some(t), .. } => {
                assert_eq!(print_type(t), "end *[3] end");
            }
            _ => panic!("expected an annotated restriction"),
        }
    }

    #[test]
    fn context_entries() {
        let ctx = parse_context("a : end\nb : end * end -- payload\n").unwrap();
        assert_eq!(ctx.len(), 2);
        assert_eq!(ctx.lookup(Name::intern("a")), Some(&SessionType::Closed));
    }

    #[test]
    fn term_golden_source() {
        let t = parse_term("(\\x. x (\\y. y)) ((\\w. w) (\\z. z))").unwrap();
        match &t {
            Term::App(f, a) => {
                assert!(matches!(**f, Term::Abs { .. }));
                assert!(matches!(**a, Term::App(..)));
            }
            _ => panic!("expected an application"),
        }
        let printed = crate::lastn::print_term(&t);
        let reparsed = parse_term(&printed).unwrap();
        assert!(crate::lastn::term::term_alpha_eq(&t, &reparsed));
    }

    #[test]
    fn term_session_forms() {
        let src = "let (x: !1.end, y) = new in spawn (\\u. u) (send () x); close y; ()";
        let t = parse_term(src).unwrap();
        match &t {
            Term::LetPair { left_ann: Some(ann), pair, body, .. } => {
                assert_eq!(*ann, FunType::out(FunType::Unit, FunType::End));
                assert!(matches!(**pair, Term::New));
                assert!(matches!(**body, Term::Spawn { .. }));
            }
            _ => panic!("expected a pair split"),
        }
    }

    #[test]
    fn funtype_round_trip() {
        for src in ["1", "T * S -o !T.S", "+{a: end, b: ?1.end}", "&{l: end}", "(1 -o 1) * 1"] {
            let t = parse_funtype(src).unwrap();
            assert_eq!(crate::lastn::print_funtype(&t), src);
        }
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_process("send x[a b]").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.msg.contains("','"));
        assert!(parse_type("end *").is_err());
        assert!(parse_term("let (x, y) = new").is_err());
    }
}
