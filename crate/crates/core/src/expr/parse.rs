use thiserror::Error;

use super::{BinOp, Binding, Expr, Func};

/// Parse failure with a character position into the source text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unbound identifier `{name}` at position {position}")]
    Unbound { name: String, position: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '*' | '\u{00d7}' => Tok::Star,
            '/' | '\u{00f7}' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                // optional exponent: e[+-]digits
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    position: start,
                    expected: vec!["number"],
                    found: format!("`{text}`"),
                })?;
                i = j;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                i = j;
                out.push((Tok::Ident(text), start));
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    position: start,
                    expected: vec!["number", "identifier", "operator", "`(`"],
                    found: format!("`{other}`"),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [&'a str],
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn position(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            position: self.position(),
            expected,
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let position = self.position();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.error(vec!["`(`"]));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                let binding = if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Binding::Coord(i)
                } else if let Some(i) = self.params.iter().position(|c| *c == name) {
                    Binding::Param(i)
                } else {
                    return Err(ParseError::Unbound { name, position });
                };
                Ok(Expr::Var { name, binding })
            }
            _ => Err(self.error(vec!["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(vec!["`)`", "operator"]))
        }
    }
}

/// Parse `source` binding identifiers to `coords` first, then `params`.
pub fn parse(source: &str, coords: &[&str], params: &[&str]) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser { toks, pos: 0, coords, params };
    let e = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(vec!["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_power_node() {
        let e = parse("z^2", &["x", "y", "z"], &[]).unwrap();
        assert_eq!(e, Expr::pow(Expr::coord("z", 2), Expr::Num(2.0)));
    }

    #[test]
    fn example_metric_component_is_a_quotient() {
        let e = parse("exp(2*a*x)/z^2", &["x", "y", "z"], &["a"]).unwrap();
        match e {
            Expr::Binary(BinOp::Div, num, den) => {
                assert!(matches!(*num, Expr::Call(Func::Exp, _)));
                assert!(matches!(*den, Expr::Binary(BinOp::Pow, _, _)));
            }
            other => panic!("expected quotient, got {other:?}"),
        }
    }

    #[test]
    fn unbound_identifier_reports_name_and_position() {
        let err = parse("y + q", &["x", "y", "z"], &[]).unwrap_err();
        assert_eq!(err, ParseError::Unbound { name: "q".into(), position: 4 });
    }

    #[test]
    fn syntax_errors_carry_expected_set() {
        match parse("x + * y", &["x", "y"], &[]).unwrap_err() {
            ParseError::Syntax { position, expected, .. } => {
                assert_eq!(position, 4);
                assert!(expected.contains(&"identifier"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("(x", &["x"], &[]), Err(ParseError::Syntax { position: 2, .. })));
        assert!(matches!(parse("x y", &["x", "y"], &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("exp x", &["x"], &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("", &["x"], &[]), Err(ParseError::Syntax { position: 0, .. })));
    }

    #[test]
    fn unicode_minus_and_whitespace() {
        let a = parse("x − 2 *  y", &["x", "y"], &[]).unwrap();
        let b = parse("x-2*y", &["x", "y"], &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3*x", &["x"], &[]).unwrap();
        assert_eq!(e.eval(&[2.0], &[]).unwrap(), 3e-3);
    }
}
