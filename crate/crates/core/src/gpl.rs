//! A first-order Gaussian probabilistic language.
//!
//! ```text
//! e ::= let x = e in e | e ; e | e =:= e | e + e | a * e | pi0 e | pi1 e
//!     | x | <real> | normal() | () | (e) | (e, e)
//! ```
//!
//! Precedence from loosest to tightest: `let`, `;` (right-associative),
//! `=:=`, `+`, scaling by a literal, projections. `--` starts a line
//! comment. Programs compile to diagrams; inference interprets the diagram
//! and splits the resulting state into a posterior and a score.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::diagram::{add_bus, const_diagram, copy_bus, discard_bus, Diagram, DiagramError, Generator};
use crate::quadrel::{interpret, QuadRelError};
use crate::quadstate::QuadState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GplError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("type error ({rule}) in `{term}`: {message}")]
    Type {
        rule: &'static str,
        term: String,
        message: String,
    },
    #[error("observations are contradictory")]
    InfeasibleObservation,
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Relation(#[from] QuadRelError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GplTerm {
    Var(String),
    Add(Box<GplTerm>, Box<GplTerm>),
    Scale(f64, Box<GplTerm>),
    Const(f64),
    Pair(Box<GplTerm>, Box<GplTerm>),
    Unit,
    Let(String, Box<GplTerm>, Box<GplTerm>),
    Seq(Box<GplTerm>, Box<GplTerm>),
    Proj(u8, Box<GplTerm>),
    Normal,
    Observe(Box<GplTerm>, Box<GplTerm>),
}

impl fmt::Display for GplTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GplTerm::Var(x) => f.write_str(x),
            GplTerm::Add(a, b) => write!(f, "({} + {})", a, b),
            GplTerm::Scale(k, a) => write!(f, "{:?} * {}", k, a),
            GplTerm::Const(c) => write!(f, "{:?}", c),
            GplTerm::Pair(a, b) => write!(f, "({}, {})", a, b),
            GplTerm::Unit => f.write_str("()"),
            GplTerm::Let(x, s, t) => write!(f, "let {} = {} in {}", x, s, t),
            GplTerm::Seq(a, b) => write!(f, "({}; {})", a, b),
            GplTerm::Proj(i, a) => write!(f, "pi{} {}", i, a),
            GplTerm::Normal => f.write_str("normal()"),
            GplTerm::Observe(a, b) => write!(f, "({} =:= {})", a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GplType {
    R,
    I,
    Pair(Box<GplType>, Box<GplType>),
}

impl GplType {
    /// Number of wires carrying a value of this type.
    pub fn dim(&self) -> usize {
        match self {
            GplType::R => 1,
            GplType::I => 0,
            GplType::Pair(a, b) => a.dim() + b.dim(),
        }
    }
}

impl fmt::Display for GplType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GplType::R => f.write_str("R"),
            GplType::I => f.write_str("I"),
            GplType::Pair(a, b) => write!(f, "({} * {})", a, b),
        }
    }
}

/// Typing context; later entries shadow earlier ones.
pub type Context = Vec<(String, GplType)>;

// ---------------------------------------------------------------------------
// lexing and parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Let,
    In,
    Normal,
    Proj(u8),
    LParen,
    RParen,
    Comma,
    Semi,
    Plus,
    Star,
    Eq,
    Observe,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, GplError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: String| GplError::Syntax { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
            || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.'));
        if starts_number {
            let mut j = i + 1;
            while j < chars.len() {
                let d = chars[j];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let v = text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(l0, c0, format!("invalid number `{}`", text)))?;
            out.push((Tok::Num(v), l0, c0));
            col += j - i;
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let tok = match word.as_str() {
                "let" => Tok::Let,
                "in" => Tok::In,
                "normal" => Tok::Normal,
                "pi0" | "π0" => Tok::Proj(0),
                "pi1" | "π1" => Tok::Proj(1),
                _ => Tok::Ident(word),
            };
            out.push((tok, l0, c0));
            col += j - i;
            i = j;
            continue;
        }
        let (tok, n) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            '+' => (Tok::Plus, 1),
            '*' | '·' => (Tok::Star, 1),
            '=' if chars.get(i + 1) == Some(&':') && chars.get(i + 2) == Some(&'=') => (Tok::Observe, 3),
            '=' => (Tok::Eq, 1),
            other => return Err(err(l0, c0, format!("unexpected character `{}`", other))),
        };
        out.push((tok, l0, c0));
        i += n;
        col += n;
    }
    out.push((Tok::End, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: String) -> Result<T, GplError> {
        let (_, line, column) = self.toks[self.pos];
        Err(GplError::Syntax { line, column, message })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), GplError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {}, found {}", what, describe(self.peek())))
        }
    }

    fn expr(&mut self) -> Result<GplTerm, GplError> {
        if *self.peek() == Tok::Let {
            self.bump();
            let name = match self.bump() {
                Tok::Ident(x) => x,
                other => {
                    self.pos -= 1;
                    return self.err(format!("expected a variable name, found {}", describe(&other)));
                }
            };
            self.expect(Tok::Eq, "`=`")?;
            let bound = self.expr()?;
            self.expect(Tok::In, "`in`")?;
            let body = self.expr()?;
            return Ok(GplTerm::Let(name, Box::new(bound), Box::new(body)));
        }
        let first = self.observe()?;
        if *self.peek() == Tok::Semi {
            self.bump();
            let rest = self.expr()?;
            return Ok(GplTerm::Seq(Box::new(first), Box::new(rest)));
        }
        Ok(first)
    }

    fn observe(&mut self) -> Result<GplTerm, GplError> {
        let lhs = self.sum()?;
        if *self.peek() == Tok::Observe {
            self.bump();
            let rhs = self.sum()?;
            return Ok(GplTerm::Observe(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<GplTerm, GplError> {
        let mut t = self.term()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.term()?;
            t = GplTerm::Add(Box::new(t), Box::new(rhs));
        }
        Ok(t)
    }

    fn term(&mut self) -> Result<GplTerm, GplError> {
        if let Tok::Num(k) = *self.peek() {
            if self.toks.get(self.pos + 1).map(|t| &t.0) == Some(&Tok::Star) {
                self.pos += 2;
                let body = self.term()?;
                return Ok(GplTerm::Scale(k, Box::new(body)));
            }
        }
        self.unary()
    }

    fn unary(&mut self) -> Result<GplTerm, GplError> {
        if let Tok::Proj(i) = *self.peek() {
            self.bump();
            let body = self.unary()?;
            return Ok(GplTerm::Proj(i, Box::new(body)));
        }
        let t = self.atom()?;
        if *self.peek() == Tok::Star {
            return self.err("only a numeric literal can scale an expression".to_string());
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<GplTerm, GplError> {
        match self.bump() {
            Tok::Num(v) => Ok(GplTerm::Const(v)),
            Tok::Ident(x) => Ok(GplTerm::Var(x)),
            Tok::Normal => {
                self.expect(Tok::LParen, "`(` after normal")?;
                self.expect(Tok::RParen, "`)` after normal(")?;
                Ok(GplTerm::Normal)
            }
            Tok::LParen => {
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(GplTerm::Unit);
                }
                let first = self.expr()?;
                match self.bump() {
                    Tok::RParen => Ok(first),
                    Tok::Comma => {
                        let second = self.expr()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(GplTerm::Pair(Box::new(first), Box::new(second)))
                    }
                    other => {
                        self.pos -= 1;
                        self.err(format!("expected `)` or `,`, found {}", describe(&other)))
                    }
                }
            }
            other => {
                if other != Tok::End {
                    self.pos -= 1;
                }
                self.err(format!("expected an expression, found {}", describe(&other)))
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(x) => format!("`{}`", x),
        Tok::Num(v) => format!("`{}`", v),
        Tok::Let => "`let`".into(),
        Tok::In => "`in`".into(),
        Tok::Normal => "`normal`".into(),
        Tok::Proj(i) => format!("`pi{}`", i),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Star => "`*`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Observe => "`=:=`".into(),
        Tok::End => "end of input".into(),
    }
}

pub fn parse_gpl(src: &str) -> Result<GplTerm, GplError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let t = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// typing

fn type_err<T>(rule: &'static str, term: &GplTerm, message: String) -> Result<T, GplError> {
    Err(GplError::Type {
        rule,
        term: term.to_string(),
        message,
    })
}

fn expect_type(rule: &'static str, term: &GplTerm, found: &GplType, want: &GplType) -> Result<(), GplError> {
    if found == want {
        Ok(())
    } else {
        type_err(rule, term, format!("expected {}, found {}", want, found))
    }
}

pub fn typecheck(ctx: &Context, t: &GplTerm) -> Result<GplType, GplError> {
    use GplType::*;
    Ok(match t {
        GplTerm::Var(x) => match ctx.iter().rev().find(|(n, _)| n == x) {
            Some((_, ty)) => ty.clone(),
            None => return type_err("var", t, format!("unbound variable `{}`", x)),
        },
        GplTerm::Unit => I,
        GplTerm::Const(_) | GplTerm::Normal => R,
        GplTerm::Pair(a, b) => Pair(Box::new(typecheck(ctx, a)?), Box::new(typecheck(ctx, b)?)),
        GplTerm::Add(a, b) => {
            expect_type("add", a, &typecheck(ctx, a)?, &R)?;
            expect_type("add", b, &typecheck(ctx, b)?, &R)?;
            R
        }
        GplTerm::Scale(_, a) => {
            expect_type("scale", a, &typecheck(ctx, a)?, &R)?;
            R
        }
        GplTerm::Observe(a, b) => {
            expect_type("observe", a, &typecheck(ctx, a)?, &R)?;
            expect_type("observe", b, &typecheck(ctx, b)?, &R)?;
            I
        }
        GplTerm::Seq(a, b) => {
            expect_type("seq", a, &typecheck(ctx, a)?, &I)?;
            typecheck(ctx, b)?
        }
        GplTerm::Let(x, s, body) => {
            let sigma = typecheck(ctx, s)?;
            let mut inner = ctx.clone();
            inner.push((x.clone(), sigma));
            typecheck(&inner, body)?
        }
        GplTerm::Proj(i, e) => match typecheck(ctx, e)? {
            Pair(a, b) => {
                if *i == 0 {
                    *a
                } else {
                    *b
                }
            }
            other => return type_err("proj", e, format!("expected a pair, found {}", other)),
        },
    })
}

// ---------------------------------------------------------------------------
// compilation

fn ctx_dim(ctx: &Context) -> usize {
    ctx.iter().map(|(_, t)| t.dim()).sum()
}

/// Runs `a` and `b` on copies of the context, side by side.
fn fork(d: usize, a: Diagram, b: Diagram) -> Result<Diagram, GplError> {
    Ok(Diagram::seq(copy_bus(d), Diagram::par(a, b))?)
}

/// Compiles a well-typed term to a diagram `dim(ctx) → dim(type)`.
pub fn compile(ctx: &Context, t: &GplTerm) -> Result<Diagram, GplError> {
    typecheck(ctx, t)?;
    compile_checked(ctx, t)
}

fn compile_checked(ctx: &Context, t: &GplTerm) -> Result<Diagram, GplError> {
    let d = ctx_dim(ctx);
    Ok(match t {
        GplTerm::Var(x) => {
            let k = ctx.iter().rposition(|(n, _)| n == x).expect("typechecked");
            Diagram::par_all(ctx.iter().enumerate().map(|(i, (_, ty))| {
                if i == k {
                    Diagram::id(ty.dim())
                } else {
                    discard_bus(ty.dim())
                }
            }))
        }
        GplTerm::Unit => discard_bus(d),
        GplTerm::Const(c) => Diagram::seq(discard_bus(d), const_diagram(&[*c]))?,
        GplTerm::Normal => Diagram::seq(discard_bus(d), Diagram::gen(Generator::Normal))?,
        GplTerm::Add(a, b) => Diagram::seq(
            fork(d, compile_checked(ctx, a)?, compile_checked(ctx, b)?)?,
            add_bus(1),
        )?,
        GplTerm::Scale(k, a) => Diagram::seq(compile_checked(ctx, a)?, Diagram::scalar(*k))?,
        GplTerm::Pair(a, b) => fork(d, compile_checked(ctx, a)?, compile_checked(ctx, b)?)?,
        GplTerm::Seq(a, b) => fork(d, compile_checked(ctx, a)?, compile_checked(ctx, b)?)?,
        GplTerm::Let(x, s, body) => {
            let sigma = typecheck(ctx, s)?;
            let mut inner = ctx.clone();
            inner.push((x.clone(), sigma));
            Diagram::seq(
                fork(d, Diagram::id(d), compile_checked(ctx, s)?)?,
                compile_checked(&inner, body)?,
            )?
        }
        GplTerm::Proj(i, e) => {
            let (a, b) = match typecheck(ctx, e)? {
                GplType::Pair(a, b) => (a.dim(), b.dim()),
                _ => unreachable!("typechecked"),
            };
            let keep = if *i == 0 {
                Diagram::par(Diagram::id(a), discard_bus(b))
            } else {
                Diagram::par(discard_bus(a), Diagram::id(b))
            };
            Diagram::seq(compile_checked(ctx, e)?, keep)?
        }
        GplTerm::Observe(a, b) => Diagram::seq_all([
            fork(d, compile_checked(ctx, a)?, compile_checked(ctx, b)?)?,
            Diagram::par(Diagram::id(1), Diagram::scalar(-1.0)),
            Diagram::gen(Generator::Add),
            Diagram::gen(Generator::Cozero),
        ])?,
    })
}

// ---------------------------------------------------------------------------
// inference

#[derive(Debug, Clone)]
pub struct InferenceResult {
    /// Normalized posterior over the program's output wires (score 0).
    pub posterior: QuadState,
    /// Negative log normalization constant.
    pub score: f64,
    pub ty: GplType,
}

/// Exact inference for a closed program.
pub fn infer(program: &GplTerm) -> Result<InferenceResult, GplError> {
    let ctx = Context::new();
    let ty = typecheck(&ctx, program)?;
    let d = compile_checked(&ctx, program)?;
    let state = interpret(&d)?.into_name();
    if state.is_infeasible() {
        return Err(GplError::InfeasibleObservation);
    }
    Ok(InferenceResult {
        score: state.score(),
        posterior: state.without_score(),
        ty,
    })
}

/// Parses, typechecks and runs inference on program text.
pub fn infer_source(src: &str) -> Result<InferenceResult, GplError> {
    infer(&parse_gpl(src)?)
}
