//! Prefix expression syntax:
//!
//! ```text
//! expr  := "delta" "[" num ("," num)* "]"
//!        | "abs" "(" expr ")"
//!        | ("join" | "meet" | "add") "(" expr ("," expr)+ ")"
//!        | "scale" "(" num "," expr ")"
//!        | "powsum" "(" num ("," num "," expr)+ ")"
//!        | name
//! ```
//!
//! `join`, `meet` and `add` with more than two arguments fold from the left.
//! A bare `name` refers to a previously bound expression.

use std::collections::HashMap;

use super::LatticeExpr;
use crate::error::{Error, Result};
use crate::spaces::Space;

/// Parses an expression; when `space` is given, generator lengths must match its dimension.
pub fn parse_expr(src: &str, space: Option<&Space>) -> Result<LatticeExpr> {
    parse_expr_with(src, space.map(Space::dim), &HashMap::new())
}

/// Parses with named sub-expressions in scope.
pub fn parse_expr_with(
    src: &str,
    dim: Option<usize>,
    names: &HashMap<String, LatticeExpr>,
) -> Result<LatticeExpr> {
    let mut p = Parser {
        src,
        pos: 0,
        dim,
        names,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    dim: Option<usize>,
    names: &'a HashMap<String, LatticeExpr>,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn ident(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected an expression"));
        }
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(self.rest().len());
        let text = &self.rest()[..len];
        let v: f64 = text
            .parse()
            .map_err(|_| self.error(format!("expected a number, found {text:?}")))?;
        if !v.is_finite() {
            return Err(self.error("number is not finite"));
        }
        self.pos += len;
        Ok(v)
    }

    fn check_dim(&mut self, e: &LatticeExpr, at: usize) -> Result<()> {
        match self.dim {
            Some(d) if d != e.dim() => Err(Error::Parse {
                pos: at,
                msg: format!("dimension mismatch: expected {d}, got {}", e.dim()),
            }),
            Some(_) => Ok(()),
            None => {
                self.dim = Some(e.dim());
                Ok(())
            }
        }
    }

    fn expr(&mut self) -> Result<LatticeExpr> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident()?.to_string();
        let e = match name.as_str() {
            "delta" => {
                self.expect('[')?;
                let mut coords = vec![self.number()?];
                while self.peek() == Some(',') {
                    self.pos += 1;
                    coords.push(self.number()?);
                }
                self.expect(']')?;
                LatticeExpr::generator(coords)
            }
            "abs" => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(')')?;
                e.abs()
            }
            "scale" => {
                self.expect('(')?;
                let c = self.number()?;
                self.expect(',')?;
                let e = self.expr()?;
                self.expect(')')?;
                e.scale(c)
            }
            "join" | "meet" | "add" => {
                self.expect('(')?;
                let mut acc = self.expr()?;
                let mut count = 1;
                while self.peek() == Some(',') {
                    self.pos += 1;
                    let next = self.expr()?;
                    acc = match name.as_str() {
                        "join" => acc.join(&next),
                        "meet" => acc.meet(&next),
                        _ => acc.add(&next),
                    };
                    count += 1;
                }
                self.expect(')')?;
                if count < 2 {
                    return Err(Error::Parse {
                        pos: start,
                        msg: format!("{name} needs at least two arguments"),
                    });
                }
                acc
            }
            "powsum" => {
                self.expect('(')?;
                let p = self.number()?;
                if p < 1.0 {
                    return Err(self.error("powsum exponent must be at least 1"));
                }
                let mut terms = Vec::new();
                while self.peek() == Some(',') {
                    self.pos += 1;
                    let c = self.number()?;
                    self.expect(',')?;
                    terms.push((c, self.expr()?));
                }
                self.expect(')')?;
                if terms.is_empty() {
                    return Err(Error::Parse {
                        pos: start,
                        msg: "powsum needs at least one term".into(),
                    });
                }
                LatticeExpr::power_sum(p, terms)
            }
            other => match self.names.get(other) {
                Some(e) => e.clone(),
                None => {
                    return Err(Error::Parse {
                        pos: start,
                        msg: format!("unknown name {other:?}"),
                    })
                }
            },
        };
        self.check_dim(&e, start)?;
        Ok(e)
    }
}
