//! One-line text grammar for space descriptions:
//!
//! ```text
//! space    := "lp(" exponent "," int ")"
//!           | "sup(" int "," space ")"
//!           | "dsum(" exponent "," space "," space ")"
//!           | "fmod(" int "," space ")"
//! exponent := real >= 1 | "inf"
//! ```
//!
//! Whitespace is allowed between tokens.

use super::NormedSpaceSpec;
use crate::error::{Error, Result};

pub(super) fn parse(input: &str) -> Result<NormedSpaceSpec> {
    let mut p = Parser { src: input, pos: 0 };
    let space = p.space()?;
    p.skip_ws();
    if p.pos != input.len() {
        return Err(p.error("trailing input after space description"));
    }
    Ok(space)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Grammar { position: self.pos, message: message.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-' | '_')))
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn exponent(&mut self) -> Result<f64> {
        let start = self.pos;
        let w = self.word();
        if w.eq_ignore_ascii_case("inf") {
            return Ok(f64::INFINITY);
        }
        match w.parse::<f64>() {
            Ok(p) if p.is_finite() && p >= 1.0 => Ok(p),
            _ => {
                self.pos = start;
                Err(self.error(format!("expected an exponent >= 1 or `inf`, found `{w}`")))
            }
        }
    }

    fn count(&mut self) -> Result<usize> {
        let start = self.pos;
        let w = self.word();
        match w.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => {
                self.pos = start;
                Err(self.error(format!("expected a positive integer, found `{w}`")))
            }
        }
    }

    fn space(&mut self) -> Result<NormedSpaceSpec> {
        let start = self.pos;
        let head = self.word();
        let spec = match head {
            "lp" => {
                self.expect("(")?;
                let p = self.exponent()?;
                self.expect(",")?;
                let d = self.count()?;
                self.expect(")")?;
                NormedSpaceSpec::lp(p, d)
            }
            "sup" => {
                self.expect("(")?;
                let n = self.count()?;
                self.expect(",")?;
                let inner = self.space()?;
                self.expect(")")?;
                NormedSpaceSpec::sup_tuple(n, inner)
            }
            "dsum" => {
                self.expect("(")?;
                let p = self.exponent()?;
                self.expect(",")?;
                let left = self.space()?;
                self.expect(",")?;
                let right = self.space()?;
                self.expect(")")?;
                NormedSpaceSpec::direct_sum(p, left, right)
            }
            "fmod" => {
                self.expect("(")?;
                let n = self.count()?;
                self.expect(",")?;
                let fiber = self.space()?;
                self.expect(")")?;
                NormedSpaceSpec::function_module(n, fiber)
            }
            other => {
                self.pos = start;
                return Err(self.error(format!("unknown space constructor `{other}`")));
            }
        };
        spec.map_err(|e| Error::Grammar { position: start, message: e.to_string() })
    }
}
