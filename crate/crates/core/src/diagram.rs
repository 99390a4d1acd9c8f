//! String diagrams over the GQA generators, kept as well-typed term trees.
//!
//! The text format is
//!
//! ```text
//! d ::= copy | discard | add | zero | one | normal
//!     | merge | any | coadd | cozero
//!     | scalar(<real>) | id(<nat>) | swap | empty
//!     | coscalar(<real>) | coone | conormal
//!     | d ; d | d * d | ( d )
//! ```
//!
//! `*` (parallel) binds tighter than `;` (sequential); both associate to the
//! left. `#` starts a comment running to the end of the line. The last three
//! forms are sugar and expand to composites of the primitive generators.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{Matrix, Subspace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagramError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("arity mismatch: `{term}` has {left_cod} outputs but `{next}` expects {right_dom} inputs")]
    ArityMismatch {
        term: String,
        left_cod: usize,
        next: String,
        right_dom: usize,
    },
}

/// An atomic box. The first seven are the causal generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    Copy,
    Discard,
    Add,
    Zero,
    Scalar(f64),
    One,
    Normal,
    Merge,
    Any,
    Coadd,
    Cozero,
}

impl Generator {
    /// `(inputs, outputs)`.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Generator::Copy => (1, 2),
            Generator::Discard => (1, 0),
            Generator::Add => (2, 1),
            Generator::Zero => (0, 1),
            Generator::Scalar(_) => (1, 1),
            Generator::One => (0, 1),
            Generator::Normal => (0, 1),
            Generator::Merge => (2, 1),
            Generator::Any => (0, 1),
            Generator::Coadd => (1, 2),
            Generator::Cozero => (1, 0),
        }
    }

    pub fn is_causal(self) -> bool {
        !matches!(
            self,
            Generator::Merge | Generator::Any | Generator::Coadd | Generator::Cozero
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::Copy => "copy",
            Generator::Discard => "discard",
            Generator::Add => "add",
            Generator::Zero => "zero",
            Generator::Scalar(_) => "scalar",
            Generator::One => "one",
            Generator::Normal => "normal",
            Generator::Merge => "merge",
            Generator::Any => "any",
            Generator::Coadd => "coadd",
            Generator::Cozero => "cozero",
        }
    }

    fn from_name(s: &str) -> Option<Generator> {
        Some(match s {
            "copy" => Generator::Copy,
            "discard" => Generator::Discard,
            "add" => Generator::Add,
            "zero" => Generator::Zero,
            "one" => Generator::One,
            "normal" => Generator::Normal,
            "merge" => Generator::Merge,
            "any" => Generator::Any,
            "coadd" => Generator::Coadd,
            "cozero" => Generator::Cozero,
            _ => return None,
        })
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Scalar(k) => write!(f, "scalar({:?})", k),
            g => f.write_str(g.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Gen(Generator),
    Id(usize),
    Swap,
    Empty,
    Seq(Box<Diagram>, Box<Diagram>),
    Par(Box<Diagram>, Box<Diagram>),
}

/// A well-typed diagram `dom → cod`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    node: Node,
    dom: usize,
    cod: usize,
}

impl Diagram {
    pub fn gen(g: Generator) -> Diagram {
        let (dom, cod) = g.arity();
        Diagram {
            node: Node::Gen(g),
            dom,
            cod,
        }
    }

    pub fn id(n: usize) -> Diagram {
        Diagram {
            node: Node::Id(n),
            dom: n,
            cod: n,
        }
    }

    pub fn swap() -> Diagram {
        Diagram {
            node: Node::Swap,
            dom: 2,
            cod: 2,
        }
    }

    pub fn empty() -> Diagram {
        Diagram {
            node: Node::Empty,
            dom: 0,
            cod: 0,
        }
    }

    pub fn scalar(k: f64) -> Diagram {
        Diagram::gen(Generator::Scalar(k))
    }

    /// `f ; g`, defined when `cod(f) = dom(g)`.
    pub fn seq(f: Diagram, g: Diagram) -> Result<Diagram, DiagramError> {
        if f.cod != g.dom {
            return Err(DiagramError::ArityMismatch {
                term: f.to_string(),
                left_cod: f.cod,
                next: g.to_string(),
                right_dom: g.dom,
            });
        }
        let (dom, cod) = (f.dom, g.cod);
        Ok(Diagram {
            node: Node::Seq(Box::new(f), Box::new(g)),
            dom,
            cod,
        })
    }

    /// `f * g`, always defined.
    pub fn par(f: Diagram, g: Diagram) -> Diagram {
        let (dom, cod) = (f.dom + g.dom, f.cod + g.cod);
        Diagram {
            node: Node::Par(Box::new(f), Box::new(g)),
            dom,
            cod,
        }
    }

    /// Method form of [`Diagram::seq`].
    pub fn then(self, g: Diagram) -> Result<Diagram, DiagramError> {
        Diagram::seq(self, g)
    }

    /// Method form of [`Diagram::par`].
    pub fn beside(self, g: Diagram) -> Diagram {
        Diagram::par(self, g)
    }

    /// Sequential composite of a nonempty chain.
    pub fn seq_all<I: IntoIterator<Item = Diagram>>(parts: I) -> Result<Diagram, DiagramError> {
        let mut it = parts.into_iter();
        let first = it.next().unwrap_or_else(|| Diagram::id(0));
        it.try_fold(first, Diagram::seq)
    }

    /// Parallel composite; the empty list gives `empty`.
    pub fn par_all<I: IntoIterator<Item = Diagram>>(parts: I) -> Diagram {
        let mut it = parts.into_iter();
        match it.next() {
            None => Diagram::empty(),
            Some(first) => it.fold(first, Diagram::par),
        }
    }

    /// `n` parallel copies of `d`.
    pub fn repeat(d: &Diagram, n: usize) -> Diagram {
        Diagram::par_all((0..n).map(|_| d.clone()))
    }

    #[inline]
    pub fn dom(&self) -> usize {
        self.dom
    }

    #[inline]
    pub fn cod(&self) -> usize {
        self.cod
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    /// Number of generator occurrences.
    pub fn size(&self) -> usize {
        match &self.node {
            Node::Gen(_) => 1,
            Node::Seq(a, b) | Node::Par(a, b) => a.size() + b.size(),
            _ => 0,
        }
    }

    /// Nesting depth of the term tree.
    pub fn depth(&self) -> usize {
        match &self.node {
            Node::Seq(a, b) | Node::Par(a, b) => 1 + a.depth().max(b.depth()),
            _ => 0,
        }
    }

    /// First generator outside the causal fragment, in left-to-right order.
    pub fn first_noncausal(&self) -> Option<Generator> {
        match &self.node {
            Node::Gen(g) if !g.is_causal() => Some(*g),
            Node::Seq(a, b) | Node::Par(a, b) => a.first_noncausal().or_else(|| b.first_noncausal()),
            _ => None,
        }
    }

    pub fn is_causal(&self) -> bool {
        self.first_noncausal().is_none()
    }
}

// ---------------------------------------------------------------------------
// wiring helpers

/// Routes input wire `p[i]` to output `i`, using adjacent swaps only.
///
/// Panics if `p` is not a permutation.
pub fn permutation(p: &[usize]) -> Diagram {
    let n = p.len();
    let mut seen = alloc::vec![false; n];
    for &x in p {
        assert!(x < n && !seen[x], "not a permutation: {:?}", p);
        seen[x] = true;
    }
    let mut cur: Vec<usize> = (0..n).collect();
    let mut steps = Vec::new();
    for (i, &want) in p.iter().enumerate() {
        let mut j = cur.iter().position(|&w| w == want).unwrap();
        while j > i {
            cur.swap(j - 1, j);
            steps.push(Diagram::par_all([
                Diagram::id(j - 1),
                Diagram::swap(),
                Diagram::id(n - j - 1),
            ]));
            j -= 1;
        }
    }
    if steps.is_empty() {
        return Diagram::id(n);
    }
    Diagram::seq_all(steps).expect("swap layers share width")
}

/// Exchanges a bus of width `a` with one of width `b`.
pub fn swap_bus(a: usize, b: usize) -> Diagram {
    let p: Vec<usize> = (a..a + b).chain(0..a).collect();
    permutation(&p)
}

/// `n → 2n`, duplicating the whole bus: `x ↦ (x, x)`.
pub fn copy_bus(n: usize) -> Diagram {
    let p: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
    Diagram::seq(Diagram::repeat(&Diagram::gen(Generator::Copy), n), permutation(&p))
        .expect("copy bus widths agree")
}

pub fn discard_bus(n: usize) -> Diagram {
    Diagram::repeat(&Diagram::gen(Generator::Discard), n)
}

/// `2n → n`, `(x, y) ↦ x + y`.
pub fn add_bus(n: usize) -> Diagram {
    let p: Vec<usize> = (0..n).flat_map(|i| [i, n + i]).collect();
    Diagram::seq(permutation(&p), Diagram::repeat(&Diagram::gen(Generator::Add), n))
        .expect("add bus widths agree")
}

pub fn normals(n: usize) -> Diagram {
    Diagram::repeat(&Diagram::gen(Generator::Normal), n)
}

/// `1 → k` fan-out (discard when `k = 0`).
fn fan_out(k: usize) -> Diagram {
    match k {
        0 => Diagram::gen(Generator::Discard),
        1 => Diagram::id(1),
        _ => Diagram::seq(
            Diagram::gen(Generator::Copy),
            Diagram::par(Diagram::id(1), fan_out(k - 1)),
        )
        .unwrap(),
    }
}

/// `k → 1` sum (zero when `k = 0`).
fn fan_in(k: usize) -> Diagram {
    match k {
        0 => Diagram::gen(Generator::Zero),
        1 => Diagram::id(1),
        _ => Diagram::seq(
            Diagram::par(fan_in(k - 1), Diagram::id(1)),
            Diagram::gen(Generator::Add),
        )
        .unwrap(),
    }
}

/// Diagram `m → k` denoting `x ↦ A·x` for a `k × m` matrix.
pub fn matrix_diagram(a: &Matrix) -> Diagram {
    let (k, m) = (a.rows(), a.cols());
    // one copy of input j per nonzero entry in column j, ordered by row
    let mut terms: Vec<(usize, usize)> = Vec::new();
    let mut fans = Vec::new();
    let mut scales = Vec::new();
    for j in 0..m {
        let rows: Vec<usize> = (0..k).filter(|&i| a[(i, j)] != 0.0).collect();
        fans.push(fan_out(rows.len()));
        for i in rows {
            terms.push((i, j));
            let v = a[(i, j)];
            scales.push(if v == 1.0 { Diagram::id(1) } else { Diagram::scalar(v) });
        }
    }
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by_key(|&t| (terms[t].0, terms[t].1));
    let counts: Vec<usize> = (0..k).map(|i| terms.iter().filter(|t| t.0 == i).count()).collect();
    let sums = Diagram::par_all(counts.into_iter().map(fan_in));
    Diagram::seq_all([
        Diagram::par_all(fans),
        Diagram::par_all(scales),
        permutation(&order),
        sums,
    ])
    .expect("matrix diagram layers agree")
}

/// State `0 → n` denoting the point `c`.
pub fn const_diagram(c: &[f64]) -> Diagram {
    Diagram::par_all(c.iter().map(|&v| {
        if v == 0.0 {
            Diagram::gen(Generator::Zero)
        } else if v == 1.0 {
            Diagram::gen(Generator::One)
        } else {
            Diagram::seq(Diagram::gen(Generator::One), Diagram::scalar(v)).unwrap()
        }
    }))
}

/// State `0 → n` denoting the indicator of the subspace `S`.
pub fn subspace_diagram(s: &Subspace) -> Diagram {
    let r = s.rank();
    Diagram::seq(
        Diagram::repeat(&Diagram::gen(Generator::Any), r),
        matrix_diagram(s.basis()),
    )
    .expect("basis has rank columns")
}

/// Mirror image of `scalar(k)`: relates `x` to `y` when `x = k·y`.
pub fn coscalar(k: f64) -> Diagram {
    use Generator::*;
    let fresh = Diagram::seq(Diagram::gen(Any), Diagram::gen(Copy)).unwrap();
    let tie = Diagram::seq(Diagram::gen(Merge), Diagram::gen(Discard)).unwrap();
    Diagram::seq_all([
        Diagram::par(Diagram::id(1), fresh),
        Diagram::par_all([Diagram::id(1), Diagram::scalar(k), Diagram::id(1)]),
        Diagram::par(tie, Diagram::id(1)),
    ])
    .unwrap()
}

/// Effect `1 → 0` that ties its input to the state `s : 0 → 1`.
fn co_state(s: Diagram) -> Diagram {
    Diagram::seq_all([
        Diagram::par(Diagram::id(1), s),
        Diagram::gen(Generator::Merge),
        Diagram::gen(Generator::Discard),
    ])
    .unwrap()
}

/// Effect `[x = 1]`.
pub fn coone() -> Diagram {
    co_state(Diagram::gen(Generator::One))
}

/// Effect `x ↦ ½x²`.
pub fn conormal() -> Diagram {
    co_state(Diagram::gen(Generator::Normal))
}

// ---------------------------------------------------------------------------
// printing

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Gen(g) => write!(f, "{}", g),
            Node::Id(n) => write!(f, "id({})", n),
            Node::Swap => f.write_str("swap"),
            Node::Empty => f.write_str("empty"),
            Node::Seq(a, b) => {
                write!(f, "{} ; ", a)?;
                if matches!(b.node, Node::Seq(..)) {
                    write!(f, "({})", b)
                } else {
                    write!(f, "{}", b)
                }
            }
            Node::Par(a, b) => {
                if matches!(a.node, Node::Seq(..)) {
                    write!(f, "({})", a)?;
                } else {
                    write!(f, "{}", a)?;
                }
                f.write_str(" * ")?;
                if matches!(b.node, Node::Seq(..) | Node::Par(..)) {
                    write!(f, "({})", b)
                } else {
                    write!(f, "{}", b)
                }
            }
        }
    }
}

pub fn print_diagram(d: &Diagram) -> String {
    d.to_string()
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    LParen,
    RParen,
    Semi,
    Star,
    End,
}

struct Lexer<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
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

    fn next_token(&mut self) -> Result<(Tok, usize, usize), DiagramError> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let c = match self.chars.peek() {
            None => return Ok((Tok::End, line, col)),
            Some(&c) => c,
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ';' => {
                self.bump();
                Tok::Semi
            }
            '*' => {
                self.bump();
                Tok::Star
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut s = String::new();
                let mut prev = ' ';
                while let Some(&c) = self.chars.peek() {
                    let sign_ok = (c == '-' || c == '+') && (s.is_empty() || prev == 'e' || prev == 'E');
                    if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || sign_ok {
                        s.push(c);
                        prev = c;
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Num(s)
            }
            other => {
                return Err(DiagramError::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{}`", other),
                })
            }
        };
        Ok((tok, line, col))
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn err<T>(&self, message: String) -> Result<T, DiagramError> {
        let (_, line, column) = self.toks[self.pos];
        Err(DiagramError::Syntax {
            line,
            column,
            message,
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), DiagramError> {
        if *self.peek() == t {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {}, found {:?}", what, self.peek()))
        }
    }

    fn seq(&mut self) -> Result<Diagram, DiagramError> {
        let mut d = self.par()?;
        while *self.peek() == Tok::Semi {
            self.pos += 1;
            let rhs = self.par()?;
            d = Diagram::seq(d, rhs)?;
        }
        Ok(d)
    }

    fn par(&mut self) -> Result<Diagram, DiagramError> {
        let mut d = self.atom()?;
        while *self.peek() == Tok::Star {
            self.pos += 1;
            let rhs = self.atom()?;
            d = Diagram::par(d, rhs);
        }
        Ok(d)
    }

    fn number_arg(&mut self) -> Result<f64, DiagramError> {
        self.expect(Tok::LParen, "`(`")?;
        let v = match self.peek().clone() {
            Tok::Num(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                _ => return self.err(format!("invalid real literal `{}`", s)),
            },
            other => return self.err(format!("expected a real literal, found {:?}", other)),
        };
        self.pos += 1;
        self.expect(Tok::RParen, "`)`")?;
        Ok(v)
    }

    fn atom(&mut self) -> Result<Diagram, DiagramError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.pos += 1;
                let d = self.seq()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(d)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(g) = Generator::from_name(&name) {
                    return Ok(Diagram::gen(g));
                }
                match name.as_str() {
                    "swap" => Ok(Diagram::swap()),
                    "empty" => Ok(Diagram::empty()),
                    "coone" | "cofoot" => Ok(coone()),
                    "conormal" => Ok(conormal()),
                    "scalar" => Ok(Diagram::scalar(self.number_arg()?)),
                    "coscalar" => Ok(coscalar(self.number_arg()?)),
                    "id" => {
                        self.expect(Tok::LParen, "`(`")?;
                        let n = match self.peek().clone() {
                            Tok::Num(s) => match s.parse::<usize>() {
                                Ok(n) => n,
                                Err(_) => return self.err(format!("invalid wire count `{}`", s)),
                            },
                            other => return self.err(format!("expected a wire count, found {:?}", other)),
                        };
                        self.pos += 1;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(Diagram::id(n))
                    }
                    _ => {
                        self.pos -= 1;
                        self.err(format!("unknown generator `{}`", name))
                    }
                }
            }
            other => self.err(format!("expected a diagram, found {:?}", other)),
        }
    }
}

/// Parses the text format; arity errors name the offending subterms.
pub fn parse_diagram(text: &str) -> Result<Diagram, DiagramError> {
    let mut lx = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut toks = Vec::new();
    loop {
        let t = lx.next_token()?;
        let end = t.0 == Tok::End;
        toks.push(t);
        if end {
            break;
        }
    }
    let mut p = Parser { toks, pos: 0 };
    let d = p.seq()?;
    if *p.peek() != Tok::End {
        return p.err(format!("unexpected trailing {:?}", p.peek()));
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Graphviz export

struct DotBuilder {
    nodes: Vec<String>,
    edges: Vec<String>,
    next: usize,
}

impl DotBuilder {
    fn walk(&mut self, d: &Diagram, inputs: Vec<(String, usize)>) -> Vec<(String, usize)> {
        match &d.node {
            Node::Gen(g) => {
                let id = format!("g{}", self.next);
                self.next += 1;
                self.nodes.push(format!("  {} [label=\"{}\"];", id, g));
                for (k, (src, port)) in inputs.into_iter().enumerate() {
                    self.edges.push(format!("  {} -> {} [taillabel=\"{}\", headlabel=\"{}\"];", src, id, port, k));
                }
                (0..d.cod).map(|k| (id.clone(), k)).collect()
            }
            Node::Id(_) | Node::Empty => inputs,
            Node::Swap => {
                let mut v = inputs;
                v.swap(0, 1);
                v
            }
            Node::Seq(a, b) => {
                let mid = self.walk(a, inputs);
                self.walk(b, mid)
            }
            Node::Par(a, b) => {
                let mut left = inputs;
                let right = left.split_off(a.dom);
                let mut out = self.walk(a, left);
                out.extend(self.walk(b, right));
                out
            }
        }
    }
}

/// Graphviz digraph: one node per generator occurrence (`g0`, `g1`, … in
/// left-to-right order), boundary wires as point nodes `in*`/`out*`.
pub fn export_dot(d: &Diagram) -> String {
    let mut b = DotBuilder {
        nodes: Vec::new(),
        edges: Vec::new(),
        next: 0,
    };
    let mut boundary = Vec::new();
    for i in 0..d.dom {
        boundary.push(format!("  in{} [shape=point];", i));
    }
    let inputs = (0..d.dom).map(|i| (format!("in{}", i), 0)).collect();
    let outputs = b.walk(d, inputs);
    for (i, (src, port)) in outputs.into_iter().enumerate() {
        boundary.push(format!("  out{} [shape=point];", i));
        b.edges.push(format!("  {} -> out{} [taillabel=\"{}\"];", src, i, port));
    }
    let mut s = String::from("digraph gqa {\n");
    if !b.nodes.is_empty() || !boundary.is_empty() {
        s.push_str("  rankdir=LR;\n");
    }
    for line in boundary.iter().chain(&b.nodes).chain(&b.edges) {
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("}\n");
    s
}
