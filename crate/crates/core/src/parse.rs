//! Hand-rolled recursive descent for the series and exponent text forms.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exponent::{Exponent, Q};

pub(crate) struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Cursor {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    pub(crate) fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    pub(crate) fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.fail(format!("expected '{}'", c as char))
        }
    }

    pub(crate) fn finish(&mut self) -> Result<()> {
        if self.peek().is_some() {
            self.fail("trailing input")
        } else {
            Ok(())
        }
    }

    fn natural(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail("expected digits");
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("digit string"))
    }

    pub(crate) fn usize(&mut self) -> Result<usize> {
        let n = self.natural()?;
        match usize::try_from(n) {
            Ok(v) => Ok(v),
            Err(_) => self.fail("index too large"),
        }
    }

    /// `-? digits ('/' digits)?`, optionally wrapped in parentheses.
    pub(crate) fn rational(&mut self) -> Result<Q> {
        if self.eat(b'(') {
            let r = self.rational()?;
            self.expect(b')')?;
            return Ok(r);
        }
        let neg = self.eat(b'-');
        let num = self.natural()?;
        let den = if self.eat(b'/') {
            let d = self.natural()?;
            if d.is_zero() {
                return self.fail("zero denominator");
            }
            d
        } else {
            BigInt::from(1)
        };
        let r = Q::new(num, den);
        Ok(if neg { -r } else { r })
    }

    pub(crate) fn exponent(&mut self) -> Result<Exponent> {
        self.expect(b'(')?;
        let mut coords = vec![self.rational()?];
        while self.eat(b',') {
            coords.push(self.rational()?);
        }
        self.expect(b')')?;
        Ok(Exponent::new(coords))
    }

    pub(crate) fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(word.as_bytes()) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{q, qr};

    #[test]
    fn rationals() {
        assert_eq!(Cursor::new("3/2").rational().unwrap(), qr(3, 2));
        assert_eq!(Cursor::new("(-1/2)").rational().unwrap(), qr(-1, 2));
        assert_eq!(Cursor::new("-3").rational().unwrap(), q(-3));
        assert!(Cursor::new("1/0").rational().is_err());
        assert!(Cursor::new("x").rational().is_err());
    }
}
