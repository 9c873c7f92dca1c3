//! Program text → validated AST.
//!
//! Grammar (whitespace-insensitive, `//` line comments):
//!
//! ```text
//! program  := item*
//! item     := ".decl" NAME "(" attr ("," attr)* ")"
//!           | ".input" NAME STRING
//!           | ".output" NAME STRING
//!           | atom ":-" literal ("," literal)* "."
//! literal  := "!"? atom
//! atom     := NAME "(" term ("," term)* ")"
//! term     := VAR | "_" | UINT | STRING
//! ```
//!
//! Variables start lowercase; `_`-prefixed names are anonymous wildcards.
//! Declarations may appear anywhere in the file. Validation resolves relation
//! names, checks arities, enforces range restriction (head variables and
//! variables under negation need a positive occurrence), and rejects recursion
//! — rule dependencies must form a DAG, which also keeps negation stratified
//! for free.

use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Index into [`Program::decls`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RelId(pub usize);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown relation '{name}'")]
    UnknownRelation { pos: Pos, name: String },
    #[error("{pos}: relation '{name}' is already declared")]
    DuplicateDecl { pos: Pos, name: String },
    #[error("{pos}: relation '{name}' expects {expected} arguments, got {got}")]
    WrongArity {
        pos: Pos,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{pos}: unsafe rule: {msg}")]
    UnsafeRule { pos: Pos, msg: String },
    #[error("recursion through relation '{name}' is not supported")]
    Recursion { name: String },
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        pos,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub attrs: Vec<String>,
}

impl Decl {
    pub fn arity(&self) -> usize {
        self.attrs.len()
    }
}

/// `.input` / `.output` directive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoDirective {
    pub rel: RelId,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Wildcard,
    /// Integer and quoted-string constants, uniformly the token to intern.
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub rel: RelId,
    pub args: Vec<Term>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub negated: bool,
    pub atom: Atom,
}

/// A rule; body literals stay in declared order — that order is the join plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
    pub pos: Pos,
}

impl Rule {
    pub fn positive(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().filter(|l| !l.negated)
    }

    pub fn negated(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().filter(|l| l.negated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub inputs: Vec<IoDirective>,
    pub outputs: Vec<IoDirective>,
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn decl(&self, rel: RelId) -> &Decl {
        &self.decls[rel.0]
    }

    pub fn rel_id(&self, name: &str) -> Option<RelId> {
        self.decls.iter().position(|d| d.name == name).map(RelId)
    }
}

// ---- lexing ----

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Directive(String),
    Ident(String),
    Wildcard,
    Const(String),
    LParen,
    RParen,
    Comma,
    ColonDash,
    Bang,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Directive(d) => write!(f, ".{d}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Wildcard => write!(f, "'_'"),
            Tok::Const(c) => write!(f, "constant '{c}'"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::Comma => write!(f, "','"),
            Tok::ColonDash => write!(f, "':-'"),
            Tok::Bang => write!(f, "'!'"),
            Tok::Dot => write!(f, "'.'"),
        }
    }
}

struct Lexer<'a> {
    src: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.src.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn lex(mut self) -> Result<Vec<(Tok, Pos)>, ParseError> {
        let mut out = Vec::new();
        loop {
            // Skip whitespace and // comments.
            match self.src.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                    continue;
                }
                Some('/') => {
                    let pos = self.pos();
                    self.bump();
                    if self.src.peek() == Some(&'/') {
                        while let Some(c) = self.bump() {
                            if c == '\n' {
                                break;
                            }
                        }
                        continue;
                    }
                    return Err(syntax(pos, "unexpected character '/'"));
                }
                Some(_) => {}
                None => return Ok(out),
            }
            let pos = self.pos();
            let c = self.bump().unwrap();
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '!' => Tok::Bang,
                ':' => {
                    if self.src.peek() == Some(&'-') {
                        self.bump();
                        Tok::ColonDash
                    } else {
                        return Err(syntax(pos, "expected ':-'"));
                    }
                }
                '.' => {
                    if self.src.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                        let mut name = String::new();
                        while self.src.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                            name.push(self.bump().unwrap());
                        }
                        Tok::Directive(name)
                    } else {
                        Tok::Dot
                    }
                }
                '"' => {
                    let mut text = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some('"') => text.push('"'),
                                Some('\\') => text.push('\\'),
                                other => {
                                    return Err(syntax(
                                        pos,
                                        format!("unknown escape '\\{}'", other.unwrap_or(' ')),
                                    ))
                                }
                            },
                            Some('\n') | None => {
                                return Err(syntax(pos, "unterminated string literal"))
                            }
                            Some(c) => text.push(c),
                        }
                    }
                    Tok::Const(text)
                }
                c if c.is_ascii_digit() => {
                    let mut num = String::from(c);
                    while self.src.peek().is_some_and(|c| c.is_ascii_digit()) {
                        num.push(self.bump().unwrap());
                    }
                    Tok::Const(num)
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut name = String::from(c);
                    while self
                        .src
                        .peek()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                    {
                        name.push(self.bump().unwrap());
                    }
                    if name.starts_with('_') {
                        Tok::Wildcard
                    } else {
                        Tok::Ident(name)
                    }
                }
                c => return Err(syntax(pos, format!("unexpected character '{c}'"))),
            };
            out.push((tok, pos));
        }
    }
}

// ---- parsing ----

#[derive(Debug)]
struct RawAtom {
    name: String,
    args: Vec<Term>,
    pos: Pos,
}

#[derive(Debug)]
enum Item {
    Decl { decl: Decl, pos: Pos },
    Input { name: String, path: String, pos: Pos },
    Output { name: String, path: String, pos: Pos },
    Rule { head: RawAtom, body: Vec<(bool, RawAtom)>, pos: Pos },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn end_pos(&self) -> Pos {
        self.toks
            .last()
            .map(|&(_, p)| p)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, ParseError> {
        match self.next() {
            Some((tok, pos)) if tok == want => Ok(pos),
            Some((tok, pos)) => Err(syntax(pos, format!("expected {want}, found {tok}"))),
            None => Err(syntax(self.end_pos(), format!("expected {want}, found end of file"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.next() {
            Some((Tok::Ident(s), pos)) => Ok((s, pos)),
            Some((tok, pos)) => Err(syntax(pos, format!("expected {what}, found {tok}"))),
            None => Err(syntax(self.end_pos(), format!("expected {what}, found end of file"))),
        }
    }

    fn items(mut self) -> Result<Vec<Item>, ParseError> {
        let mut items = Vec::new();
        while let Some(tok) = self.peek() {
            let item = match tok {
                Tok::Directive(_) => self.directive()?,
                Tok::Ident(_) => self.rule()?,
                _ => {
                    let (tok, pos) = self.next().unwrap();
                    return Err(syntax(pos, format!("expected a directive or rule, found {tok}")));
                }
            };
            items.push(item);
        }
        Ok(items)
    }

    fn directive(&mut self) -> Result<Item, ParseError> {
        let (dir, pos) = match self.next() {
            Some((Tok::Directive(d), pos)) => (d, pos),
            _ => unreachable!("caller peeked a directive"),
        };
        match dir.as_str() {
            "decl" => {
                let (name, _) = self.expect_ident("relation name")?;
                self.expect(Tok::LParen)?;
                let mut attrs = Vec::new();
                loop {
                    let (attr, apos) = self.expect_ident("attribute name")?;
                    if attrs.contains(&attr) {
                        return Err(syntax(apos, format!("duplicate attribute '{attr}'")));
                    }
                    attrs.push(attr);
                    match self.next() {
                        Some((Tok::Comma, _)) => continue,
                        Some((Tok::RParen, _)) => break,
                        Some((tok, pos)) => {
                            return Err(syntax(pos, format!("expected ',' or ')', found {tok}")))
                        }
                        None => return Err(syntax(self.end_pos(), "unclosed declaration")),
                    }
                }
                Ok(Item::Decl {
                    decl: Decl { name, attrs },
                    pos,
                })
            }
            "input" | "output" => {
                let (name, _) = self.expect_ident("relation name")?;
                let path = match self.next() {
                    Some((Tok::Const(p), _)) => p,
                    Some((tok, pos)) => {
                        return Err(syntax(pos, format!("expected a quoted file path, found {tok}")))
                    }
                    None => return Err(syntax(self.end_pos(), "expected a quoted file path")),
                };
                if dir == "input" {
                    Ok(Item::Input { name, path, pos })
                } else {
                    Ok(Item::Output { name, path, pos })
                }
            }
            other => Err(syntax(pos, format!("unknown directive '.{other}'"))),
        }
    }

    fn rule(&mut self) -> Result<Item, ParseError> {
        let head = self.atom()?;
        let pos = head.pos;
        match self.next() {
            Some((Tok::ColonDash, _)) => {}
            Some((Tok::Dot, dpos)) => {
                return Err(syntax(
                    dpos,
                    "facts without a body are not supported; load ground tuples via .input",
                ))
            }
            Some((tok, tpos)) => return Err(syntax(tpos, format!("expected ':-', found {tok}"))),
            None => return Err(syntax(self.end_pos(), "expected ':-', found end of file")),
        }
        let mut body = Vec::new();
        loop {
            let negated = if self.peek() == Some(&Tok::Bang) {
                self.next();
                true
            } else {
                false
            };
            body.push((negated, self.atom()?));
            match self.next() {
                Some((Tok::Comma, _)) => continue,
                Some((Tok::Dot, _)) => break,
                Some((tok, pos)) => {
                    return Err(syntax(pos, format!("expected ',' or '.', found {tok}")))
                }
                None => return Err(syntax(self.end_pos(), "rule is missing its final '.'")),
            }
        }
        Ok(Item::Rule { head, body, pos })
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let (name, pos) = self.expect_ident("relation name")?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        loop {
            let term = match self.next() {
                Some((Tok::Ident(s), ipos)) => {
                    if s.chars().next().is_some_and(|c| c.is_uppercase()) {
                        return Err(syntax(
                            ipos,
                            format!(
                                "'{s}' is not a variable (variables start lowercase); \
                                 quote it to make it a constant"
                            ),
                        ));
                    }
                    Term::Var(s)
                }
                Some((Tok::Wildcard, _)) => Term::Wildcard,
                Some((Tok::Const(c), _)) => Term::Const(c),
                Some((tok, pos)) => {
                    return Err(syntax(
                        pos,
                        format!("expected a variable, '_', or constant, found {tok}"),
                    ))
                }
                None => return Err(syntax(self.end_pos(), "unclosed atom")),
            };
            args.push(term);
            match self.next() {
                Some((Tok::Comma, _)) => continue,
                Some((Tok::RParen, _)) => break,
                Some((tok, pos)) => {
                    return Err(syntax(pos, format!("expected ',' or ')', found {tok}")))
                }
                None => return Err(syntax(self.end_pos(), "unclosed atom")),
            }
        }
        Ok(RawAtom { name, args, pos })
    }
}

// ---- validation ----

fn resolve_atom(
    raw: RawAtom,
    by_name: &HashMap<String, RelId>,
    decls: &[Decl],
) -> Result<Atom, ParseError> {
    let rel = *by_name
        .get(&raw.name)
        .ok_or_else(|| ParseError::UnknownRelation {
            pos: raw.pos,
            name: raw.name.clone(),
        })?;
    if raw.args.len() != decls[rel.0].arity() {
        return Err(ParseError::WrongArity {
            pos: raw.pos,
            name: raw.name,
            expected: decls[rel.0].arity(),
            got: raw.args.len(),
        });
    }
    Ok(Atom {
        rel,
        args: raw.args,
        pos: raw.pos,
    })
}

fn check_rule_safety(rule: &Rule, decls: &[Decl]) -> Result<(), ParseError> {
    let unsafe_rule = |msg: String| ParseError::UnsafeRule {
        pos: rule.pos,
        msg,
    };
    let mut positive_vars: Vec<&str> = Vec::new();
    for lit in rule.positive() {
        for term in &lit.atom.args {
            if let Term::Var(v) = term {
                positive_vars.push(v);
            }
        }
    }
    for term in &rule.head.args {
        match term {
            Term::Wildcard => {
                return Err(unsafe_rule(format!(
                    "wildcard in the head of '{}'",
                    decls[rule.head.rel.0].name
                )))
            }
            Term::Var(v) if !positive_vars.contains(&v.as_str()) => {
                return Err(unsafe_rule(format!(
                    "head variable '{v}' has no positive occurrence in the body"
                )))
            }
            _ => {}
        }
    }
    for lit in rule.negated() {
        for term in &lit.atom.args {
            if let Term::Var(v) = term {
                if !positive_vars.contains(&v.as_str()) {
                    return Err(unsafe_rule(format!(
                        "variable '{v}' under negation has no positive occurrence"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Rejects any cycle in the relation dependency graph (edges body → head).
/// Acyclicity also keeps negation stratified: a negated relation can never
/// transitively depend on the head negating it.
fn check_acyclic(decls: &[Decl], rules: &[Rule]) -> Result<(), ParseError> {
    let n = decls.len();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for rule in rules {
        for lit in &rule.body {
            let from = lit.atom.rel.0;
            let to = rule.head.rel.0;
            if !succ[from].contains(&to) {
                succ[from].push(to);
            }
        }
    }
    // Iterative three-color DFS.
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color = vec![Color::White; n];
    for start in 0..n {
        if color[start] != Color::White {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        color[start] = Color::Gray;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                match color[w] {
                    Color::White => {
                        color[w] = Color::Gray;
                        stack.push((w, 0));
                    }
                    Color::Gray => {
                        return Err(ParseError::Recursion {
                            name: decls[w].name.clone(),
                        })
                    }
                    Color::Black => {}
                }
            } else {
                color[v] = Color::Black;
                stack.pop();
            }
        }
    }
    Ok(())
}

/// Parses and validates a program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = Lexer::new(src).lex()?;
    let items = Parser { toks, at: 0 }.items()?;

    let mut decls: Vec<Decl> = Vec::new();
    let mut by_name: HashMap<String, RelId> = HashMap::new();
    for item in &items {
        if let Item::Decl { decl, pos } = item {
            if by_name.contains_key(&decl.name) {
                return Err(ParseError::DuplicateDecl {
                    pos: *pos,
                    name: decl.name.clone(),
                });
            }
            if decl.attrs.len() > crate::search::MAX_ATTRS as usize {
                return Err(syntax(
                    *pos,
                    format!(
                        "relation '{}' has {} attributes (limit {})",
                        decl.name,
                        decl.attrs.len(),
                        crate::search::MAX_ATTRS
                    ),
                ));
            }
            by_name.insert(decl.name.clone(), RelId(decls.len()));
            decls.push(decl.clone());
        }
    }

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut rules = Vec::new();
    for item in items {
        match item {
            Item::Decl { .. } => {}
            Item::Input { name, path, pos } => {
                let rel = *by_name.get(&name).ok_or(ParseError::UnknownRelation {
                    pos,
                    name: name.clone(),
                })?;
                inputs.push(IoDirective { rel, path });
            }
            Item::Output { name, path, pos } => {
                let rel = *by_name.get(&name).ok_or(ParseError::UnknownRelation {
                    pos,
                    name: name.clone(),
                })?;
                outputs.push(IoDirective { rel, path });
            }
            Item::Rule { head, body, pos } => {
                let head = resolve_atom(head, &by_name, &decls)?;
                let body = body
                    .into_iter()
                    .map(|(negated, raw)| {
                        Ok(Literal {
                            negated,
                            atom: resolve_atom(raw, &by_name, &decls)?,
                        })
                    })
                    .collect::<Result<Vec<_>, ParseError>>()?;
                let rule = Rule { head, body, pos };
                check_rule_safety(&rule, &decls)?;
                rules.push(rule);
            }
        }
    }

    check_acyclic(&decls, &rules)?;

    Ok(Program {
        decls,
        inputs,
        outputs,
        rules,
    })
}
