//! Text front end for procedures.
//!
//! ```text
//! file    := stmt ((';' | newline) stmt)*        one output per statement
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 'x'<k> | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `#` comments run to the end of the line. Newlines inside parentheses are
//! whitespace.

use thiserror::Error;

use super::{EvalProcedure, NodeId, Opcode, ProcBuilder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unknown identifier `{name}`")]
    UnknownIdentifier {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:{column}: `{func}` takes {expected} argument(s), got {got}")]
    Arity {
        line: usize,
        column: usize,
        func: String,
        expected: usize,
        got: usize,
    },
}

impl ParseError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, column, .. }
            | ParseError::UnknownIdentifier { line, column, .. }
            | ParseError::Arity { line, column, .. } => (*line, *column),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Sep,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0i32;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok| {
            out.push(Token {
                tok,
                line: l0,
                column: c0,
            })
        };
        match c {
            '\n' => {
                if depth == 0 {
                    push(Tok::Sep);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_whitespace() => {}
            ';' => push(Tok::Sep),
            '+' => push(Tok::Plus),
            '-' => push(Tok::Minus),
            '*' => push(Tok::Star),
            '/' => push(Tok::Slash),
            ',' => push(Tok::Comma),
            '(' => {
                depth += 1;
                push(Tok::LParen)
            }
            ')' => {
                depth -= 1;
                push(Tok::RParen)
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    line: l0,
                    column: c0,
                    message: format!("malformed number `{s}`"),
                })?;
                out.push(Token {
                    tok: Tok::Num(v),
                    line: l0,
                    column: c0,
                });
                col += i - start;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(s),
                    line: l0,
                    column: c0,
                });
                col += i - start;
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    line: l0,
                    column: c0,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    n: Option<usize>,
    max_var: usize,
    b: &'a mut ProcBuilder,
}

enum Ast {
    Num(f64),
    Var(usize),
    Neg(Box<Ast>),
    Bin(Opcode, Box<Ast>, Box<Ast>),
    Call(Opcode, Vec<Ast>),
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, t: &Token, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(self.err(&t, format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => Opcode::Add,
                Tok::Minus => Opcode::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => Opcode::Mul,
                Tok::Slash => Opcode::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(match inner {
                Ast::Num(v) => Ast::Num(-v),
                other => Ast::Neg(Box::new(other)),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        let t = self.bump();
        match t.tok.clone() {
            Tok::Num(v) => Ok(Ast::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    self.call(&t, &name)
                } else {
                    self.variable(&t, &name)
                }
            }
            Tok::Eof => Err(self.err(&t, "unexpected end of input")),
            other => Err(self.err(&t, format!("unexpected token {other:?}"))),
        }
    }

    fn variable(&mut self, t: &Token, name: &str) -> Result<Ast, ParseError> {
        let unknown = || ParseError::UnknownIdentifier {
            line: t.line,
            column: t.column,
            name: name.to_string(),
        };
        let k: usize = name
            .strip_prefix('x')
            .and_then(|d| d.parse().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(unknown)?;
        if let Some(n) = self.n {
            if k > n {
                return Err(unknown());
            }
        }
        self.max_var = self.max_var.max(k);
        Ok(Ast::Var(k - 1))
    }

    fn call(&mut self, t: &Token, name: &str) -> Result<Ast, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        let arity = |expected: usize, args: &Vec<Ast>| {
            if args.len() != expected {
                Err(ParseError::Arity {
                    line: t.line,
                    column: t.column,
                    func: name.to_string(),
                    expected,
                    got: args.len(),
                })
            } else {
                Ok(())
            }
        };
        let op = match name {
            "abs" => Opcode::Abs,
            "sin" => Opcode::Sin,
            "cos" => Opcode::Cos,
            "exp" => Opcode::Exp,
            "log" => Opcode::Log,
            "sqrt" => Opcode::Sqrt,
            "sqr" => Opcode::Square,
            "recip" => Opcode::Recip,
            "min" => Opcode::Min,
            "max" => Opcode::Max,
            "pow" => {
                arity(2, &args)?;
                let k = match args[1] {
                    Ast::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i64,
                    _ => {
                        return Err(self.err(t, "pow exponent must be an integer literal"));
                    }
                };
                let base = args.swap_remove(0);
                return Ok(match k {
                    0 => Ast::Num(1.0),
                    1 => base,
                    -1 => Ast::Call(Opcode::Recip, vec![base]),
                    k if k >= 2 => Ast::Call(Opcode::PowInt(k as u32), vec![base]),
                    k => Ast::Call(
                        Opcode::Recip,
                        vec![Ast::Call(Opcode::PowInt((-k) as u32), vec![base])],
                    ),
                });
            }
            _ => {
                if let Some(id) = self.b.custom_by_name(name) {
                    let expected = self.b.customs[id.0].arity();
                    arity(expected, &args)?;
                    return Ok(Ast::Call(Opcode::Custom(id), args));
                }
                return Err(ParseError::UnknownIdentifier {
                    line: t.line,
                    column: t.column,
                    name: name.to_string(),
                });
            }
        };
        arity(op.arity().unwrap(), &args)?;
        Ok(Ast::Call(op, args))
    }

    fn statements(&mut self) -> Result<Vec<Ast>, ParseError> {
        let mut outs = Vec::new();
        loop {
            while self.peek().tok == Tok::Sep {
                self.bump();
            }
            if self.peek().tok == Tok::Eof {
                return Ok(outs);
            }
            outs.push(self.expr()?);
            let t = self.peek().clone();
            match t.tok {
                Tok::Sep | Tok::Eof => {}
                _ => return Err(self.err(&t, "expected `;`, newline or end of input")),
            }
        }
    }
}

fn emit(b: &mut ProcBuilder, ast: &Ast) -> NodeId {
    match ast {
        Ast::Num(v) => b.constant(*v),
        Ast::Var(k) => b.input(*k),
        Ast::Neg(a) => {
            let a = emit(b, a);
            b.unary(Opcode::Neg, a)
        }
        Ast::Bin(op, l, r) => {
            let l = emit(b, l);
            let r = emit(b, r);
            b.binary(*op, l, r)
        }
        Ast::Call(op, args) => {
            let ids: Vec<NodeId> = args.iter().map(|a| emit(b, a)).collect();
            b.push(*op, &ids)
        }
    }
}

fn parse_into(
    text: &str,
    n: Option<usize>,
    builder: Option<ProcBuilder>,
) -> Result<EvalProcedure, ParseError> {
    let toks = lex(text)?;
    let mut scratch = builder.clone().unwrap_or_else(|| ProcBuilder::new(0));
    let mut p = Parser {
        toks,
        pos: 0,
        n,
        max_var: 0,
        b: &mut scratch,
    };
    let outs = p.statements()?;
    if outs.is_empty() {
        let t = p.peek().clone();
        return Err(p.err(&t, "no output expressions"));
    }
    let dim = n.unwrap_or(p.max_var);
    let mut b = match builder {
        Some(mut b) => {
            b.n = dim;
            b
        }
        None => ProcBuilder::new(dim),
    };
    // Inputs first so that node i < n is input i.
    for k in 0..dim {
        b.input(k);
    }
    let ids: Vec<NodeId> = outs.iter().map(|a| emit(&mut b, a)).collect();
    Ok(b.finish(&ids).expect("parser emits well-formed nodes"))
}

/// Parses one or more output expressions over inputs `x1..xn`.
pub fn parse_expression(text: &str, n: usize) -> Result<EvalProcedure, ParseError> {
    parse_into(text, Some(n), None)
}

/// Parses a function file. The input dimension is `n` if given, otherwise the
/// largest variable index that occurs. Custom elementals already registered in
/// `builder` may be called by name.
pub fn parse_function_file(
    text: &str,
    n: Option<usize>,
    builder: Option<ProcBuilder>,
) -> Result<EvalProcedure, ParseError> {
    parse_into(text, n, builder)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_unary_minus() {
        let p = parse_expression("1 + 2*x1 - -x2/4", 2).unwrap();
        assert_eq!(p.eval(&[3.0, 8.0]).unwrap(), vec![9.0]);
        let p = parse_expression("-0.5", 0).unwrap();
        assert_eq!(p.eval(&[]).unwrap(), vec![-0.5]);
    }

    #[test]
    fn multi_output_with_comments() {
        let text = "# rotation-free test\nx1 + x2  # first\n\nsqr(x1); pow(x2, 3)\n";
        let p = parse_function_file(text, None, None).unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.m(), 3);
        assert_eq!(p.eval(&[2.0, 3.0]).unwrap(), vec![5.0, 4.0, 27.0]);
    }

    #[test]
    fn newline_inside_parentheses_is_whitespace() {
        let p = parse_function_file("max(x1,\n x2)", None, None).unwrap();
        assert_eq!(p.m(), 1);
        assert_eq!(p.eval(&[1.0, -2.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn max_is_kept_until_lowered() {
        let p = parse_expression("max(x1, x2)", 2).unwrap();
        assert!(p.has_minmax());
        assert_eq!(p.s(), 0);
        let q = super::super::lower_minmax(&p);
        assert!(!q.has_minmax());
        assert_eq!(q.s(), 1);
    }

    #[test]
    fn pow_variants() {
        let p = parse_expression("pow(x1, 0) + pow(x1, 1) + pow(x1, 2) + pow(x1, -2)", 1).unwrap();
        assert_eq!(p.eval(&[2.0]).unwrap(), vec![1.0 + 2.0 + 4.0 + 0.25]);
        assert!(parse_expression("pow(x1, 1.5)", 1).is_err());
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_expression("(abs(x1) +\n  * 2)", 1).unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 2, column: 3, .. }));

        let e = parse_expression("x1 + y", 1).unwrap_err();
        assert!(matches!(e, ParseError::UnknownIdentifier { column: 6, .. }));

        let e = parse_expression("x3", 2).unwrap_err();
        assert!(matches!(e, ParseError::UnknownIdentifier { .. }));

        let e = parse_expression("sin(x1, x1)", 1).unwrap_err();
        assert!(matches!(
            e,
            ParseError::Arity {
                expected: 1,
                got: 2,
                ..
            }
        ));

        let e = parse_expression("foo(x1)", 1).unwrap_err();
        assert!(matches!(e, ParseError::UnknownIdentifier { .. }));

        assert!(parse_expression("(x1", 1).is_err());
        assert!(parse_expression("x1 $ 2", 1).is_err());
        assert!(parse_expression("", 1).is_err());
    }

    #[test]
    fn scientific_literals() {
        let p = parse_expression("1e-3 * x1 + 2.5E2", 1).unwrap();
        assert_eq!(p.eval(&[1000.0]).unwrap(), vec![251.0]);
    }
}
