// Recursive-descent parser for the formula syntax.
//
//   implies := or ( "->" implies )?
//   or      := and ( "|" and )*
//   and     := unary ( "&" unary )*
//   unary   := ( "!" | "<>" ) unary | atom
//   atom    := IDENT | "(" implies ")"
//
// Unicode aliases: ¬ ∧ ∨ → ◊ (◇ is accepted as well).

use std::fmt;

use super::Formula;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the input where the unexpected token starts.
    pub offset: usize,
    pub found: String,
    pub expected: Vec<&'static str>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at byte {}: found {}, expected one of: {}",
            self.offset,
            self.found,
            self.expected.join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    Possibly,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Not => "`!`".into(),
            Tok::Possibly => "`<>`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

const OPERAND: &[&str] = &["identifier", "`!`", "`<>`", "`(`"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(at, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = at;
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = i + c.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            toks.push((at, Tok::Ident(text[at..end].to_owned())));
            continue;
        }
        chars.next();
        let tok = match c {
            '!' | '¬' => Tok::Not,
            '◊' | '◇' => Tok::Possibly,
            '&' | '∧' => Tok::And,
            '|' | '∨' => Tok::Or,
            '→' => Tok::Implies,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' if matches!(chars.peek(), Some(&(_, '>'))) => {
                chars.next();
                Tok::Implies
            }
            '<' if matches!(chars.peek(), Some(&(_, '>'))) => {
                chars.next();
                Tok::Possibly
            }
            other => {
                return Err(ParseError {
                    offset: at,
                    found: format!("character `{other}`"),
                    expected: vec!["identifier", "operator", "`(`", "`)`"],
                })
            }
        };
        toks.push((at, tok));
    }
    toks.push((text.len(), Tok::Eof));
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].1.clone();
        if tok != Tok::Eof {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        let (offset, tok) = &self.toks[self.pos];
        ParseError {
            offset: *offset,
            found: tok.describe(),
            expected: expected.to_vec(),
        }
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Possibly => {
                self.bump();
                Ok(Formula::possibly(self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implies()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["`&`", "`|`", "`->`", "`)`"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(OPERAND)),
        }
    }
}

/// Parses a formula. Precedence, tightest first: `!`/`<>`, `&`, `|`, `->`.
/// `&` and `|` associate to the left, `->` to the right.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let formula = parser.implies()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.error(&["`&`", "`|`", "`->`", "end of input"]));
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(s: &str) -> Formula {
        Formula::var(s)
    }

    #[test]
    fn parses_implication() {
        assert_eq!(
            parse("p -> q").unwrap(),
            Formula::implies(var("p"), var("q"))
        );
    }

    #[test]
    fn parses_possible_determination() {
        let expected = Formula::or(
            Formula::not(var("p")),
            Formula::possibly(Formula::and(var("q"), var("r"))),
        );
        assert_eq!(parse("!p | <>(q & r)").unwrap(), expected);
        assert_eq!(parse("¬p ∨ ◊(q ∧ r)").unwrap(), expected);
    }

    #[test]
    fn atom() {
        assert_eq!(parse("p").unwrap(), var("p"));
        assert_eq!(parse("  _x1 ").unwrap(), var("_x1"));
    }

    #[test]
    fn implication_is_right_associative() {
        let f = parse("p -> q -> r").unwrap();
        assert_eq!(
            f,
            Formula::implies(var("p"), Formula::implies(var("q"), var("r")))
        );
        assert_eq!(parse(&f.to_string()).unwrap(), f);
        assert_eq!(f.to_string(), "p -> q -> r");
    }

    #[test]
    fn conjunction_binds_tighter_than_disjunction() {
        assert_eq!(
            parse("p | q & r").unwrap(),
            Formula::or(var("p"), Formula::and(var("q"), var("r")))
        );
        assert_eq!(
            parse("p & q | r -> s").unwrap(),
            Formula::implies(
                Formula::or(Formula::and(var("p"), var("q")), var("r")),
                var("s")
            )
        );
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse("").unwrap_err();
        assert_eq!(err.offset, 0);
        assert_eq!(err.found, "end of input");
        assert!(err.expected.contains(&"identifier"));
        assert!(parse("   ").is_err());
    }

    #[test]
    fn error_offsets() {
        let err = parse("p & ").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse("p q").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.expected.contains(&"end of input"));
        let err = parse("(p | q").unwrap_err();
        assert_eq!(err.offset, 6);
        assert!(err.expected.contains(&"`)`"));
        let err = parse("p - q").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse("¬¬ 3").unwrap_err();
        assert_eq!(err.offset, 5);
    }
}
