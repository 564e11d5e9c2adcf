use std::collections::BTreeSet;

use super::ast::{Expr, OrganizationClass, Predicate, PropertyPath, Requirement};
use super::lexer::{tokenize, Tok, Token};
use super::{DslError, ErrorKind};
use crate::value::Value;

/// Parses every class definition in a `.ocls` document.
pub fn parse_classes(text: &str) -> Result<Vec<OrganizationClass>, DslError> {
    let mut parser = Parser::new(text)?;
    let mut classes = Vec::new();
    while parser.peek() != &Tok::Eof {
        classes.push(parser.class_def()?);
    }
    Ok(classes)
}

/// Parses a document holding exactly one class definition.
pub fn parse_class(text: &str) -> Result<OrganizationClass, DslError> {
    let mut parser = Parser::new(text)?;
    let class = parser.class_def()?;
    parser.expect_eof()?;
    Ok(class)
}

/// Parses a single requirement such as `service:strategicGoal = "growth"`.
pub fn parse_requirement(text: &str) -> Result<Requirement, DslError> {
    let mut parser = Parser::new(text)?;
    let req = parser.requirement()?;
    parser.expect_eof()?;
    Ok(req)
}

/// Parses a bare expression (the body of a class without braces).
pub fn parse_expr(text: &str) -> Result<Expr, DslError> {
    let mut parser = Parser::new(text)?;
    let expr = parser.body(&Tok::Eof)?;
    parser.expect_eof()?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

enum Operand {
    Scalar(Value),
    Set(BTreeSet<Value>),
}

impl Parser {
    fn new(text: &str) -> Result<Self, DslError> {
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
        })
    }

    fn current(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek(&self) -> &Tok {
        &self.current().tok
    }

    fn advance(&mut self) -> Token {
        let tok = self.current().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn error_at(&self, token: &Token, kind: ErrorKind, message: impl Into<String>) -> DslError {
        DslError {
            kind,
            line: token.line,
            column: token.column,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> DslError {
        let token = self.current();
        self.error_at(
            token,
            ErrorKind::Syntax,
            format!("expected {expected}, found {}", token.tok.describe()),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Token, DslError> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expect_eof(&self) -> Result<(), DslError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn class_def(&mut self) -> Result<OrganizationClass, DslError> {
        self.expect(Tok::Class, "`class`")?;
        let name = match self.peek().clone() {
            Tok::Str(s) => s,
            Tok::Word(w) if !w.contains(':') => w,
            _ => return Err(self.unexpected("a class name")),
        };
        self.advance();
        self.expect(Tok::LBrace, "`{`")?;
        let expr = self.body(&Tok::RBrace)?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(OrganizationClass { name, expr })
    }

    /// One or more juxtaposed expressions, combined with AND.
    fn body(&mut self, end: &Tok) -> Result<Expr, DslError> {
        let mut items = vec![self.or_expr()?];
        while self.peek() != end && *self.peek() != Tok::Eof {
            items.push(self.or_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items)
        })
    }

    fn or_expr(&mut self) -> Result<Expr, DslError> {
        let mut items = vec![self.and_expr()?];
        while *self.peek() == Tok::Or {
            self.advance();
            items.push(self.and_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Or(items)
        })
    }

    fn and_expr(&mut self) -> Result<Expr, DslError> {
        let mut items = vec![self.unary()?];
        while *self.peek() == Tok::And {
            self.advance();
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items)
        })
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        match self.peek() {
            Tok::Not => {
                self.advance();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.or_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Ok(Expr::Req(self.requirement()?)),
        }
    }

    fn requirement(&mut self) -> Result<Requirement, DslError> {
        let path_token = self.current().clone();
        let path = match &path_token.tok {
            Tok::Word(w) => PropertyPath::parse(w).map_err(|e| {
                self.error_at(&path_token, ErrorKind::Syntax, e.to_string())
            })?,
            _ => return Err(self.unexpected("a property path")),
        };
        self.advance();

        let op = self.advance();
        let predicate = match op.tok {
            Tok::Exists => Predicate::Exists,
            Tok::Eq | Tok::Ne | Tok::Contains => {
                let (at, operand) = self.operand()?;
                let value = match operand {
                    Operand::Scalar(v) => v,
                    Operand::Set(_) => {
                        return Err(self.error_at(
                            &at,
                            ErrorKind::Type,
                            format!("{} takes a single value, not a set", op.tok.describe()),
                        ))
                    }
                };
                match op.tok {
                    Tok::Eq => Predicate::Equals(value),
                    Tok::Ne => Predicate::NotEquals(value),
                    _ => Predicate::ContainsElement(value),
                }
            }
            Tok::Lt | Tok::Le | Tok::Ge => {
                let (at, operand) = self.operand()?;
                let value = match operand {
                    Operand::Scalar(v @ (Value::Number(_) | Value::Date(_))) => v,
                    _ => {
                        return Err(self.error_at(
                            &at,
                            ErrorKind::Type,
                            format!("{} needs a number or a date", op.tok.describe()),
                        ))
                    }
                };
                match op.tok {
                    Tok::Lt => Predicate::LessThan(value),
                    Tok::Le => Predicate::AtMost(value),
                    _ => Predicate::AtLeast(value),
                }
            }
            Tok::Includes => {
                let (at, operand) = self.operand()?;
                match operand {
                    Operand::Set(set) if !set.is_empty() => Predicate::IncludesAll(set),
                    Operand::Set(_) => {
                        return Err(self.error_at(&at, ErrorKind::Type, "`includes` needs a nonempty set"))
                    }
                    Operand::Scalar(_) => {
                        return Err(self.error_at(
                            &at,
                            ErrorKind::Type,
                            "`includes` needs a set operand such as {\"a\", \"b\"}",
                        ))
                    }
                }
            }
            Tok::Matches => {
                let (at, operand) = self.operand()?;
                let pattern = match operand {
                    Operand::Scalar(Value::Text(p)) => p,
                    _ => {
                        return Err(self.error_at(&at, ErrorKind::Type, "`matches` needs a string pattern"))
                    }
                };
                let predicate = Predicate::Matches(pattern);
                predicate
                    .check()
                    .map_err(|e| self.error_at(&at, ErrorKind::Type, e))?;
                predicate
            }
            _ => {
                return Err(self.error_at(
                    &op,
                    ErrorKind::Syntax,
                    format!("expected an operator after `{path}`, found {}", op.tok.describe()),
                ))
            }
        };
        Ok(Requirement { path, predicate })
    }

    fn operand(&mut self) -> Result<(Token, Operand), DslError> {
        let at = self.current().clone();
        if at.tok == Tok::LBrace {
            self.advance();
            let mut set = BTreeSet::new();
            if *self.peek() != Tok::RBrace {
                set.insert(self.scalar()?);
                while *self.peek() == Tok::Comma {
                    self.advance();
                    set.insert(self.scalar()?);
                }
            }
            self.expect(Tok::RBrace, "`,` or `}`")?;
            return Ok((at, Operand::Set(set)));
        }
        Ok((at, Operand::Scalar(self.scalar()?)))
    }

    fn scalar(&mut self) -> Result<Value, DslError> {
        let value = match self.peek() {
            Tok::Str(s) => Value::Text(s.clone()),
            Tok::Num(n) => Value::Number(*n),
            Tok::Date(d) => Value::Date(*d),
            Tok::Bool(b) => Value::Bool(*b),
            _ => return Err(self.unexpected("a value (string, number, date or boolean)")),
        };
        self.advance();
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POLISH: &str = r#"class "Polish Software Company" { organization:profile:localization = "Poland"  competence:name includes {"Java programming"}  capability:name includes {"Server administration"} }"#;

    #[test]
    fn three_leaf_conjunction() {
        let class = parse_class(POLISH).unwrap();
        assert_eq!(class.name, "Polish Software Company");
        let Expr::And(items) = &class.expr else {
            panic!("expected AND, got {:?}", class.expr)
        };
        assert_eq!(items.len(), 3);
        assert_eq!(
            items[0],
            Expr::Req(Requirement::new("organization:profile:localization", Predicate::Equals(Value::text("Poland"))).unwrap())
        );
        assert_eq!(
            items[1],
            Expr::Req(
                Requirement::new(
                    "competence:name",
                    Predicate::IncludesAll(BTreeSet::from([Value::text("Java programming")]))
                )
                .unwrap()
            )
        );
    }

    #[test]
    fn missing_operand_is_a_syntax_error() {
        let err = parse_class("class X { a:b = }").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Syntax);
        assert_eq!((err.line, err.column), (1, 17));
    }

    #[test]
    fn includes_with_scalar_is_a_type_error() {
        let err = parse_class("class X { a:b includes \"x\" }").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Type);
    }

    #[test]
    fn order_needs_number() {
        let err = parse_class("class X { a:b >= \"ten\" }").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Type);
        assert!(parse_class("class X { a:b >= 2009-11-01 }").is_ok());
    }

    #[test]
    fn precedence_not_and_or() {
        let expr = parse_expr("NOT a = 1 AND b = 2 OR c = 3").unwrap();
        let Expr::Or(items) = expr else { panic!() };
        let Expr::And(conj) = &items[0] else { panic!() };
        assert!(matches!(conj[0], Expr::Not(_)));
    }

    #[test]
    fn parentheses_keep_nesting() {
        let expr = parse_expr("(a = 1 AND b = 2) AND c = 3").unwrap();
        let Expr::And(items) = expr else { panic!() };
        assert_eq!(items.len(), 2);
        assert!(matches!(items[0], Expr::And(_)));
    }

    #[test]
    fn several_classes_and_comments() {
        let text = "# first\nclass A { x:y exists }\n# second\nclass \"B c\" {\n  x:y = 1\n  x:z < 4\n}\n";
        let classes = parse_classes(text).unwrap();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[1].name, "B c");
    }

    #[test]
    fn error_positions_on_later_lines() {
        let err = parse_class("class A {\n  x:y = 1\n  x:z ~ 2\n}").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Lexical);
        assert_eq!((err.line, err.column), (3, 7));
    }

    #[test]
    fn invalid_regex_is_a_type_error() {
        let err = parse_class(r#"class A { x:y matches "(" }"#).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Type);
    }

    #[test]
    fn reserved_word_is_not_a_path() {
        assert!(parse_requirement("exists exists").is_err());
        assert!(parse_requirement("service:strategicGoal = \"growth\"").is_ok());
    }
}
