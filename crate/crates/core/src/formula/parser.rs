//! Recursive-descent parser for the formula grammar
//!
//! ```text
//! formula := conj ('|' conj)*
//! conj    := unary ('&' unary)*
//! unary   := '~' unary | '[]' unary | '<>' unary | atom
//! atom    := 'true' | 'false' | ident | '(' formula ')'
//! ```
//!
//! Binary operators associate to the left. Offsets in errors are byte
//! offsets into the input.

use std::sync::Arc;

use super::Formula;
use crate::error::{Error, Result};
use crate::kripke::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    True,
    False,
    Not,
    And,
    Or,
    Box,
    Diamond,
    LParen,
    RParen,
    Ident(String),
}

fn describe(tok: Option<&(usize, Token)>) -> String {
    match tok {
        None => "end of input".into(),
        Some((_, t)) => match t {
            Token::True => "`true`".into(),
            Token::False => "`false`".into(),
            Token::Not => "`~`".into(),
            Token::And => "`&`".into(),
            Token::Or => "`|`".into(),
            Token::Box => "`[]`".into(),
            Token::Diamond => "`<>`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Ident(name) => format!("`{name}`"),
        },
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'~' => Token::Not,
            b'&' => Token::And,
            b'|' => Token::Or,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'[' if bytes.get(i + 1) == Some(&b']') => {
                i += 1;
                Token::Box
            }
            b'<' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Token::Diamond
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                match &text[start..=i] {
                    "true" => Token::True,
                    "false" => Token::False,
                    name => Token::Ident(name.to_string()),
                }
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    vocabulary: Option<&'a Vocabulary>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, expected: &str) -> Error {
        Error::Syntax {
            offset: self.offset(),
            message: format!(
                "expected {expected}, found {}",
                describe(self.tokens.get(self.pos))
            ),
        }
    }

    fn formula(&mut self) -> Result<Arc<Formula>> {
        let mut left = self.conj()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            let right = self.conj()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn conj(&mut self) -> Result<Arc<Formula>> {
        let mut left = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Arc<Formula>> {
        match self.peek() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::Box) => {
                self.pos += 1;
                Ok(Formula::boxed(self.unary()?))
            }
            Some(Token::Diamond) => {
                self.pos += 1;
                Ok(Formula::diamond(self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Arc<Formula>> {
        let f = match self.peek().cloned() {
            Some(Token::True) => Formula::top(),
            Some(Token::False) => Formula::bottom(),
            Some(Token::Ident(name)) => {
                if let Some(v) = self.vocabulary {
                    if !v.contains(&name) {
                        return Err(Error::UnknownProposition(name));
                    }
                }
                Formula::prop(name)
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error("`)`"));
                }
                inner
            }
            _ => return Err(self.error("formula")),
        };
        self.pos += 1;
        Ok(f)
    }
}

fn run(text: &str, vocabulary: Option<&Vocabulary>) -> Result<Arc<Formula>> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
        vocabulary,
    };
    let f = p.formula()?;
    if p.pos != p.tokens.len() {
        return Err(p.error("end of input"));
    }
    Ok(f)
}

/// Parses a formula whose propositions must come from `vocabulary`.
pub fn parse(text: &str, vocabulary: &Vocabulary) -> Result<Arc<Formula>> {
    run(text, Some(vocabulary))
}

/// Parses a formula accepting any proposition name.
pub fn parse_unchecked(text: &str) -> Result<Arc<Formula>> {
    run(text, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let v = Vocabulary::new(["p", "q"]);
        assert_eq!(
            *parse("<>p", &v).unwrap(),
            Formula::Diamond(Formula::prop("p"))
        );
        assert_eq!(
            parse("[] (p | ~q)", &v).unwrap(),
            Formula::boxed(Formula::or(
                Formula::prop("p"),
                Formula::not(Formula::prop("q"))
            ))
        );
        assert_eq!(
            parse("p &", &v),
            Err(Error::Syntax {
                offset: 3,
                message: "expected formula, found end of input".into()
            })
        );
    }

    #[test]
    fn errors() {
        let v = Vocabulary::new(["p"]);
        assert_eq!(parse("q", &v), Err(Error::UnknownProposition("q".into())));
        assert!(matches!(
            parse("(p", &v),
            Err(Error::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("p p", &v),
            Err(Error::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("p $", &v),
            Err(Error::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("[p]", &v),
            Err(Error::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse("", &v),
            Err(Error::Syntax { offset: 0, .. })
        ));
    }

    #[test]
    fn whitespace_and_associativity() {
        let f = parse_unchecked(" a|b |c ").unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::or(Formula::prop("a"), Formula::prop("b")),
                Formula::prop("c")
            )
        );
        assert_eq!(
            *parse_unchecked("true&false").unwrap(),
            Formula::And(Formula::top(), Formula::bottom())
        );
        assert_eq!(
            *parse_unchecked("~[]<>x_1").unwrap(),
            *Formula::not(Formula::boxed(Formula::diamond(Formula::prop("x_1"))))
        );
    }
}
