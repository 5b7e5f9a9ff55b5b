//! Pratt parser for the component expression language.
//!
//! Precedence, tightest first: `^` (right-assoc), unary `-`, `* /`, `+ -`.

use super::ast::{BinOp, Expr, Func};
use super::lexer::{tokenize, Token, TokenKind};
use crate::error::{Error, Result};

/// Variable names accepted by the parser: always `x1..x{dim}`, plus optional aliases.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VarTable {
    dim: usize,
    aliases: Vec<String>,
}

impl VarTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            aliases: Vec::new(),
        }
    }

    /// `aliases[i]` names coordinate `i`; its length fixes the dimension.
    pub fn with_aliases<S: AsRef<str>>(aliases: &[S]) -> Self {
        Self {
            dim: aliases.len(),
            aliases: aliases.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn aliases(&self) -> &[String] {
        &self.aliases
    }

    fn lookup(&self, name: &str, position: usize) -> Result<usize> {
        if let Some(i) = self.aliases.iter().position(|a| a == name) {
            return Ok(i);
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(k) = digits.parse::<usize>() {
                    if (1..=self.dim).contains(&k) {
                        return Ok(k - 1);
                    }
                }
            }
        }
        Err(Error::UnknownVariable {
            name: name.to_string(),
            position,
        })
    }
}

/// Parses `src` over coordinates `x1..x{dim}`.
pub fn parse(src: &str, dim: usize) -> Result<Expr> {
    parse_with(src, &VarTable::new(dim))
}

pub fn parse_with(src: &str, vars: &VarTable) -> Result<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        vars,
        end: src.len(),
    };
    let expr = p.expr_bp(0)?;
    if let Some(tok) = p.peek() {
        return Err(Error::Parse {
            position: tok.position,
            expected: "operator or end of input".into(),
        });
    }
    Ok(expr)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: &'a VarTable,
    end: usize,
}

const PREFIX_NEG_BP: u8 = 5;

fn infix_bp(op: &str) -> Option<(BinOp, u8, u8)> {
    Some(match op {
        "+" => (BinOp::Add, 1, 2),
        "-" => (BinOp::Sub, 1, 2),
        "*" => (BinOp::Mul, 3, 4),
        "/" => (BinOp::Div, 3, 4),
        "^" => (BinOp::Pow, 8, 7),
        _ => return None,
    })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<&'a Token> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(Error::Parse {
                position: self.here(),
                expected: what.into(),
            }),
        }
    }

    fn expr_bp(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = self.prefix()?;
        while let Some(tok) = self.peek() {
            if tok.kind != TokenKind::Operator {
                break;
            }
            let (op, l_bp, r_bp) = infix_bp(&tok.lexeme).expect("lexer only emits known operators");
            if l_bp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr_bp(r_bp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr> {
        let position = self.here();
        let Some(tok) = self.next() else {
            return Err(Error::Parse {
                position,
                expected: "an operand".into(),
            });
        };
        match tok.kind {
            TokenKind::Number => Ok(Expr::Const(tok.number().expect("validated by lexer"))),
            TokenKind::Operator if tok.lexeme == "-" => {
                let operand = self.expr_bp(PREFIX_NEG_BP)?;
                Ok(Expr::Neg(Box::new(operand)))
            }
            TokenKind::Operator if tok.lexeme == "+" => self.expr_bp(PREFIX_NEG_BP),
            TokenKind::LParen => {
                let inner = self.expr_bp(0)?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Identifier => self.identifier(tok),
            _ => Err(Error::Parse {
                position: tok.position,
                expected: "an operand".into(),
            }),
        }
    }

    fn identifier(&mut self, tok: &Token) -> Result<Expr> {
        if let Some(func) = Func::from_name(&tok.lexeme) {
            self.expect(TokenKind::LParen, "`(` after function name")?;
            let arg = self.expr_bp(0)?;
            self.expect(TokenKind::RParen, "`)`")?;
            return Ok(Expr::call(func, arg));
        }
        if tok.lexeme == "pi" && !self.vars.aliases().iter().any(|a| a == "pi") {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        self.vars.lookup(&tok.lexeme, tok.position).map(Expr::Var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::eval_scalar;

    fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    #[test]
    fn multiplication_binds_tighter_than_addition() {
        let e = parse("x1+x2*x3", 3).unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinOp::Add,
                var(0),
                Expr::binary(BinOp::Mul, var(1), var(2))
            )
        );
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse("2^3^2", 1).unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinOp::Pow,
                Expr::Const(2.0),
                Expr::binary(BinOp::Pow, Expr::Const(3.0), Expr::Const(2.0))
            )
        );
        // hand evaluation: 3^2 = 9, 2^9 = 512 (left-assoc would give 64)
        assert_eq!(eval_scalar(&e, &[0.0]).unwrap(), 512.0);
    }

    #[test]
    fn unary_minus_sits_between_power_and_product() {
        assert_eq!(
            parse("-x1^2", 1).unwrap(),
            Expr::Neg(Box::new(Expr::binary(BinOp::Pow, var(0), Expr::Const(2.0))))
        );
        assert_eq!(
            parse("-x1*x2", 2).unwrap(),
            Expr::binary(BinOp::Mul, Expr::Neg(Box::new(var(0))), var(1))
        );
        assert_eq!(
            parse("2^-x1", 1).unwrap(),
            Expr::binary(BinOp::Pow, Expr::Const(2.0), Expr::Neg(Box::new(var(0))))
        );
    }

    #[test]
    fn subtraction_and_division_are_left_associative() {
        let e = parse("x1-x2-x3", 3).unwrap();
        assert_eq!(eval_scalar(&e, &[10.0, 3.0, 2.0]).unwrap(), 5.0);
        let e = parse("x1/x2/x3", 3).unwrap();
        assert_eq!(eval_scalar(&e, &[12.0, 3.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn out_of_range_variable() {
        assert_eq!(
            parse("sin(x9)", 2),
            Err(Error::UnknownVariable {
                name: "x9".into(),
                position: 4
            })
        );
        assert!(matches!(parse("x0", 2), Err(Error::UnknownVariable { .. })));
        assert!(matches!(parse("foo", 2), Err(Error::UnknownVariable { .. })));
    }

    #[test]
    fn aliases_resolve_to_indices() {
        let vars = VarTable::with_aliases(&["r", "theta"]);
        let e = parse_with("r^2*sin(theta)", &vars).unwrap();
        assert_eq!(e.arity(), 2);
        let same = parse_with("x1^2*sin(x2)", &vars).unwrap();
        assert_eq!(e, same);
    }

    #[test]
    fn malformed_inputs_report_positions() {
        assert_eq!(
            parse("x1+", 1),
            Err(Error::Parse {
                position: 3,
                expected: "an operand".into()
            })
        );
        assert!(matches!(parse("(x1", 1), Err(Error::Parse { position: 3, .. })));
        assert!(matches!(parse("x1 x1", 1), Err(Error::Parse { position: 3, .. })));
        assert!(matches!(parse("sin x1", 1), Err(Error::Parse { position: 4, .. })));
        assert!(matches!(parse("1,2", 1), Err(Error::Parse { position: 1, .. })));
        assert!(matches!(parse("", 1), Err(Error::Parse { position: 0, .. })));
    }

    #[test]
    fn pretty_print_round_trips() {
        for src in ["x1+x2*x3", "-x1^2/(x2-3)", "2^3^2", "sqrt(abs(x1))*exp(-x2)", "pi*x1"] {
            let e = parse(src, 3).unwrap();
            assert_eq!(parse(&e.to_string(), 3).unwrap(), e, "{src}");
        }
    }
}
