//! Arithmetic expression DSL for problem descriptions.
//!
//! Expressions over the variables `t` and `y` describe the coefficient, the
//! forcing terms and the boundary nonlinearities of a problem instance. The
//! grammar (EBNF, whitespace-insensitive):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = factor , { ("*" | "/") , factor } ;
//! factor  = "-" , factor | power ;
//! power   = atom , [ "^" , factor ] ;            (* right-associative *)
//! atom    = number | "t" | "y" | call | "(" , expr , ")" ;
//! call    = function , "(" , expr , { "," , expr } , ")" ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2 = -4` and `2^3^2 = 512`.
//! Functions: `exp`, `log`, `sin`, `cos`, `sqrt`, `abs` (one argument),
//! `min`, `max` (two), `clamp(x, lo, hi)` and
//! `ramp(x, x0, x1) = clamp((x - x0)/(x1 - x0), 0, 1)` (three).

use core::fmt;

use crate::error::{DomainErrorKind, Error, Result};
use crate::real::{real, Real};

/// A variable of the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    Y,
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Built-in functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Min,
    Max,
    Clamp,
    Ramp,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "clamp" => Func::Clamp,
            "ramp" => Func::Ramp,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Clamp => "clamp",
            Func::Ramp => "ramp",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Exp | Func::Log | Func::Sin | Func::Cos | Func::Sqrt | Func::Abs => 1,
            Func::Min | Func::Max => 2,
            Func::Clamp | Func::Ramp => 3,
        }
    }
}

/// AST node. Spans are byte offsets into the original source.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: (usize, usize),
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    /// Nonnegative numeric literal (negation is a separate node).
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

// Structural equality, ignoring spans. Literals compare bitwise.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Num(a), NodeKind::Num(b)) => a.to_bits() == b.to_bits(),
            (NodeKind::Var(a), NodeKind::Var(b)) => a == b,
            (NodeKind::Neg(a), NodeKind::Neg(b)) => a == b,
            (NodeKind::Bin(op_a, la, ra), NodeKind::Bin(op_b, lb, rb)) => {
                op_a == op_b && la == lb && ra == rb
            }
            (NodeKind::Call(fa, aa), NodeKind::Call(fb, ab)) => fa == fb && aa == ab,
            _ => false,
        }
    }
}

/// A parsed, immutable expression. Evaluation is reentrant.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

impl Expr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluate at `(t, y)`. Deterministic; identical inputs give bit-identical
    /// results.
    pub fn eval<T: Real>(&self, t: T, y: T) -> Result<T> {
        eval_node(&self.root, t, y)
    }

    /// `(uses_t, uses_y)`.
    pub fn free_vars(&self) -> (bool, bool) {
        let mut uses = (false, false);
        collect_vars(&self.root, &mut uses);
        uses
    }

    pub fn uses_y(&self) -> bool {
        self.free_vars().1
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn collect_vars(node: &Node, uses: &mut (bool, bool)) {
    match &node.kind {
        NodeKind::Num(_) => {}
        NodeKind::Var(Var::T) => uses.0 = true,
        NodeKind::Var(Var::Y) => uses.1 = true,
        NodeKind::Neg(c) => collect_vars(c, uses),
        NodeKind::Bin(_, l, r) => {
            collect_vars(l, uses);
            collect_vars(r, uses);
        }
        NodeKind::Call(_, args) => {
            for a in args {
                collect_vars(a, uses);
            }
        }
    }
}

fn domain_error<T>(kind: DomainErrorKind, node: &Node, t: impl Real, y: impl Real) -> Result<T> {
    Err(Error::Domain {
        kind,
        subexpr: node_to_string(node),
        t: t.as_f64(),
        y: y.as_f64(),
    })
}

fn eval_node<T: Real>(node: &Node, t: T, y: T) -> Result<T> {
    let value = match &node.kind {
        NodeKind::Num(x) => real(*x),
        NodeKind::Var(Var::T) => t,
        NodeKind::Var(Var::Y) => y,
        NodeKind::Neg(c) => -eval_node(c, t, y)?,
        NodeKind::Bin(op, l, r) => {
            let a = eval_node(l, t, y)?;
            let b = eval_node(r, t, y)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == T::zero() {
                        return domain_error(DomainErrorKind::DivisionByZero, node, t, y);
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        NodeKind::Call(func, args) => {
            let mut vals = [T::zero(); 3];
            for (slot, arg) in vals.iter_mut().zip(args.iter()) {
                *slot = eval_node(arg, t, y)?;
            }
            match func {
                Func::Exp => vals[0].exp(),
                Func::Log => {
                    if vals[0] <= T::zero() {
                        return domain_error(DomainErrorKind::LogNonPositive, node, t, y);
                    }
                    vals[0].ln()
                }
                Func::Sin => vals[0].sin(),
                Func::Cos => vals[0].cos(),
                Func::Sqrt => {
                    if vals[0] < T::zero() {
                        return domain_error(DomainErrorKind::SqrtNegative, node, t, y);
                    }
                    vals[0].sqrt()
                }
                Func::Abs => vals[0].abs(),
                Func::Min => vals[0].min(vals[1]),
                Func::Max => vals[0].max(vals[1]),
                Func::Clamp => vals[0].max(vals[1]).min(vals[2]),
                Func::Ramp => {
                    let width = vals[2] - vals[1];
                    if width == T::zero() {
                        return domain_error(DomainErrorKind::DivisionByZero, node, t, y);
                    }
                    ((vals[0] - vals[1]) / width).max(T::zero()).min(T::one())
                }
            }
        }
    };
    if !value.is_finite() {
        return domain_error(DomainErrorKind::NonFinite, node, t, y);
    }
    Ok(value)
}

// ---------------------------------------------------------------------------
// Pretty-printing. `parse(to_string(e))` is structurally identical to `e`.
// ---------------------------------------------------------------------------

fn precedence(node: &Node) -> u8 {
    match &node.kind {
        NodeKind::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        NodeKind::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        NodeKind::Neg(_) => 3,
        NodeKind::Bin(BinOp::Pow, ..) => 4,
        NodeKind::Num(_) | NodeKind::Var(_) | NodeKind::Call(..) => 5,
    }
}

fn write_child(node: &Node, parens: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if parens {
        write!(f, "(")?;
        write_node(node, f)?;
        write!(f, ")")
    } else {
        write_node(node, f)
    }
}

fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &node.kind {
        NodeKind::Num(x) => write!(f, "{x}"),
        NodeKind::Var(Var::T) => write!(f, "t"),
        NodeKind::Var(Var::Y) => write!(f, "y"),
        NodeKind::Neg(c) => {
            write!(f, "-")?;
            // Parenthesize +,-,*,/ children (grammar binds "-" below them)
            // and nested negations (readability).
            write_child(c, precedence(c) <= 2 || matches!(c.kind, NodeKind::Neg(_)), f)
        }
        NodeKind::Bin(op, l, r) => match op {
            BinOp::Add | BinOp::Sub => {
                write_child(l, false, f)?;
                write!(f, " {} ", if *op == BinOp::Add { "+" } else { "-" })?;
                write_child(r, precedence(r) <= 1, f)
            }
            BinOp::Mul | BinOp::Div => {
                write_child(l, precedence(l) < 2, f)?;
                write!(f, "{}", if *op == BinOp::Mul { "*" } else { "/" })?;
                write_child(r, precedence(r) <= 2, f)
            }
            BinOp::Pow => {
                write_child(l, precedence(l) < 5, f)?;
                write!(f, "^")?;
                // The exponent slot accepts unary minus and nested powers.
                write_child(r, precedence(r) <= 2, f)
            }
        },
        NodeKind::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_node(a, f)?;
            }
            write!(f, ")")
        }
    }
}

fn node_to_string(node: &Node) -> String {
    struct Wrap<'a>(&'a Node);
    impl fmt::Display for Wrap<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_node(self.0, f)
        }
    }
    Wrap(node).to_string()
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(x) => format!("number `{x}`"),
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    start: usize,
    end: usize,
}

fn lex(source: &str) -> Result<Vec<Token>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                let kind = match b {
                    b'+' => TokenKind::Plus,
                    b'-' => TokenKind::Minus,
                    b'*' => TokenKind::Star,
                    b'/' => TokenKind::Slash,
                    b'^' => TokenKind::Caret,
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    _ => TokenKind::Comma,
                };
                i += 1;
                tokens.push(Token {
                    kind,
                    start,
                    end: i,
                });
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Optional exponent: e / E, optional sign, then digits.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    expected: "a numeric literal".into(),
                    found: format!("`{text}`"),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Num(value),
                    start,
                    end: i,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[start..i].to_string()),
                    start,
                    end: i,
                });
            }
            _ => {
                let ch = source[start..].chars().next().unwrap();
                return Err(Error::Syntax {
                    offset: start,
                    expected: "a number, identifier or operator".into(),
                    found: format!("`{ch}`"),
                });
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        start: source.len(),
        end: source.len(),
    });
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> Error {
        let t = self.peek();
        Error::Syntax {
            offset: t.start,
            expected: expected.into(),
            found: t.kind.describe(),
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Token> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.error(expected))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut node = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            let span = (node.span.0, rhs.span.1);
            node = Node {
                kind: NodeKind::Bin(op, Box::new(node), Box::new(rhs)),
                span,
            };
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node> {
        let mut node = self.factor()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            let span = (node.span.0, rhs.span.1);
            node = Node {
                kind: NodeKind::Bin(op, Box::new(node), Box::new(rhs)),
                span,
            };
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Node> {
        if self.peek().kind == TokenKind::Minus {
            let start = self.bump().start;
            let inner = self.factor()?;
            let span = (start, inner.span.1);
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek().kind == TokenKind::Caret {
            self.bump();
            let exponent = self.factor()?;
            let span = (base.span.0, exponent.span.1);
            return Ok(Node {
                kind: NodeKind::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)),
                span,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let token = self.peek().clone();
        match token.kind {
            TokenKind::Num(value) => {
                self.bump();
                Ok(Node {
                    kind: NodeKind::Num(value),
                    span: (token.start, token.end),
                })
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect(TokenKind::RParen, "`)`")?;
                Ok(Node {
                    kind: inner.kind,
                    span: (token.start, close.end),
                })
            }
            TokenKind::Ident(ref name) => {
                self.bump();
                match name.as_str() {
                    "t" => Ok(Node {
                        kind: NodeKind::Var(Var::T),
                        span: (token.start, token.end),
                    }),
                    "y" => Ok(Node {
                        kind: NodeKind::Var(Var::Y),
                        span: (token.start, token.end),
                    }),
                    other => {
                        let func = Func::from_name(other).ok_or(Error::UnknownIdentifier {
                            name: other.to_string(),
                            offset: token.start,
                        })?;
                        self.expect(TokenKind::LParen, "`(`")?;
                        let mut args = vec![self.expr()?];
                        while self.peek().kind == TokenKind::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                        let close = self.expect(TokenKind::RParen, "`)` or `,`")?;
                        if args.len() != func.arity() {
                            return Err(Error::WrongArity {
                                name: func.name().into(),
                                expected: func.arity(),
                                got: args.len(),
                                offset: token.start,
                            });
                        }
                        Ok(Node {
                            kind: NodeKind::Call(func, args),
                            span: (token.start, close.end),
                        })
                    }
                }
            }
            _ => Err(self.error("a number, `t`, `y`, a function call, `(` or `-`")),
        }
    }
}

/// Parse an expression source string.
pub fn parse(source: &str) -> Result<Expr> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let root = parser.expr()?;
    if parser.peek().kind != TokenKind::Eof {
        return Err(parser.error("an operator or end of input"));
    }
    Ok(Expr { root })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, t: f64, y: f64) -> f64 {
        parse(src).unwrap().eval(t, y).unwrap()
    }

    #[test]
    fn spec_examples() {
        assert_eq!(ev("2*t + 1", 0.5, 0.0), 2.0);
        assert_eq!(ev("exp(0)", 0.0, 0.0), 1.0);
        assert_eq!(ev("ramp(y, 1, 2)", 0.0, 1.5), 0.5);
        assert_eq!(ev("t*y", 0.25, 4.0), 1.0);
        assert_eq!(ev("min(3, 0.4 + 2.6*ramp(y,1,2))", 0.0, 0.0), 0.4);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4", 0.0, 0.0), 14.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("2*-3", 0.0, 0.0), -6.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("8/4/2", 0.0, 0.0), 1.0);
    }

    #[test]
    fn division_by_zero_names_subexpression() {
        let e = parse("1/(t-0.5)").unwrap();
        let err = e.eval(0.5f64, 0.0).unwrap_err();
        match err {
            Error::Domain { kind, subexpr, t, .. } => {
                assert_eq!(kind, DomainErrorKind::DivisionByZero);
                assert!(subexpr.contains('/'), "subexpr = {subexpr}");
                assert_eq!(t, 0.5);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            parse("log(t)").unwrap().eval(0.0f64, 0.0),
            Err(Error::Domain {
                kind: DomainErrorKind::LogNonPositive,
                ..
            })
        ));
        assert!(matches!(
            parse("sqrt(t - 1)").unwrap().eval(0.0f64, 0.0),
            Err(Error::Domain {
                kind: DomainErrorKind::SqrtNegative,
                ..
            })
        ));
        // 0^(-1) overflows to infinity.
        assert!(matches!(
            parse("t^-1").unwrap().eval(0.0f64, 0.0),
            Err(Error::Domain {
                kind: DomainErrorKind::NonFinite,
                ..
            })
        ));
    }

    #[test]
    fn syntax_error_reports_offset_and_expectation() {
        match parse("1/(y-1") {
            Err(Error::Syntax {
                offset, expected, ..
            }) => {
                assert_eq!(offset, 6);
                assert!(expected.contains(')'), "expected = {expected}");
            }
            other => panic!("unexpected: {other:?}"),
        }
        match parse("2 +* 3") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_and_arity() {
        assert!(matches!(
            parse("foo(1)"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(parse("z + 1"), Err(Error::UnknownIdentifier { .. })));
        match parse("min(1, 2, 3)") {
            Err(Error::WrongArity { name, expected, got, .. }) => {
                assert_eq!(name, "min");
                assert_eq!(expected, 2);
                assert_eq!(got, 3);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn free_variables() {
        assert_eq!(parse("2*t + 1").unwrap().free_vars(), (true, false));
        assert_eq!(parse("ramp(y,1,2)").unwrap().free_vars(), (false, true));
        assert_eq!(parse("t*y").unwrap().free_vars(), (true, true));
        assert_eq!(parse("3").unwrap().free_vars(), (false, false));
    }

    #[test]
    fn eval_is_pure() {
        let e = parse("exp(sin(t) + cos(y))^1.5 / (1 + t*y)").unwrap();
        let a: f64 = e.eval(0.3, 0.7).unwrap();
        for _ in 0..10 {
            let b: f64 = e.eval(0.3, 0.7).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn generic_eval_matches_f32() {
        let e = parse("0.5*t + y").unwrap();
        let a: f32 = e.eval(0.5f32, 1.0).unwrap();
        assert_eq!(a, 1.25f32);
    }

    #[test]
    fn ramp_degenerate_width_is_domain_error() {
        assert!(matches!(
            parse("ramp(y, 1, 1)").unwrap().eval(0.0f64, 2.0),
            Err(Error::Domain {
                kind: DomainErrorKind::DivisionByZero,
                ..
            })
        ));
    }

    // --- round-trip property --------------------------------------------

    fn leaf() -> impl Strategy<Value = Node> {
        prop_oneof![
            (0u32..=9999u32, 0u32..=99u32).prop_map(|(a, b)| {
                let value = f64::from(a) / 100.0 + f64::from(b) * 0.001;
                Node {
                    kind: NodeKind::Num(value),
                    span: (0, 0),
                }
            }),
            Just(Node {
                kind: NodeKind::Var(Var::T),
                span: (0, 0),
            }),
            Just(Node {
                kind: NodeKind::Var(Var::Y),
                span: (0, 0),
            }),
        ]
    }

    fn arb_node() -> impl Strategy<Value = Node> {
        leaf().prop_recursive(5, 64, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), 0u8..5).prop_map(|(l, r, op)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]
                        [op as usize];
                    Node {
                        kind: NodeKind::Bin(op, Box::new(l), Box::new(r)),
                        span: (0, 0),
                    }
                }),
                inner.clone().prop_map(|c| Node {
                    kind: NodeKind::Neg(Box::new(c)),
                    span: (0, 0),
                }),
                inner.clone().prop_map(|c| Node {
                    kind: NodeKind::Call(Func::Exp, vec![c]),
                    span: (0, 0),
                }),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                    kind: NodeKind::Call(Func::Min, vec![a, b]),
                    span: (0, 0),
                }),
                (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| Node {
                    kind: NodeKind::Call(Func::Clamp, vec![a, b, c]),
                    span: (0, 0),
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn pretty_print_round_trips(root in arb_node()) {
            let expr = Expr { root };
            let printed = expr.to_string();
            let reparsed = parse(&printed).unwrap_or_else(|e| {
                panic!("`{printed}` failed to reparse: {e}")
            });
            prop_assert_eq!(&reparsed, &expr, "printed: {}", printed);
        }
    }

    #[test]
    fn pretty_print_round_trips_spec_strings() {
        for src in [
            "2*t + 1",
            "min(3, 0.4 + 2.6*ramp(y,1,2))",
            "1/(t-0.5)",
            "2^3^2",
            "-(2^2)",
            "(1 + t)*(2 - y)/3",
            "clamp(y, 0, 8) - -t",
        ] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            assert_eq!(reparsed, e, "src={src} printed={printed}");
        }
    }
}
