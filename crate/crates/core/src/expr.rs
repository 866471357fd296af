//! Tiny parser for field elements written as polynomials in `L` (the inflation factor),
//! e.g. `L^2 - L`, `2L+1`, `(L^3-L^2-L)`, `1/(3L^2-2L-1)`.

use crate::numberfield::{FieldElement, NumberField};

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    field: &'a NumberField,
}

pub(crate) fn parse_field_expr(text: &str, field: &NumberField) -> Result<FieldElement, String> {
    let mut p = Parser {
        chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
        pos: 0,
        field,
    };
    if p.chars.is_empty() {
        return Err("empty expression".into());
    }
    let v = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(format!("unexpected '{}' in '{}'", p.chars[p.pos], text.trim()));
    }
    Ok(v)
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<FieldElement, String> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                '-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<FieldElement, String> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = self.field.mul(&acc, &self.unary()?);
                }
                Some('/') => {
                    self.pos += 1;
                    let den = self.unary()?;
                    acc = self.field.div(&acc, &den).map_err(|e| e.to_string())?;
                }
                // implicit product: 2L, 3(L+1), L(L-1)
                Some(c) if c.is_ascii_digit() || c == 'L' || c == '(' => {
                    acc = self.field.mul(&acc, &self.power()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<FieldElement, String> {
        let base = self.primary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let e = self.integer()?;
            let e = u32::try_from(e).map_err(|_| "exponent too large".to_string())?;
            return Ok(self.field.pow(&base, e));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<FieldElement, String> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn primary(&mut self) -> Result<FieldElement, String> {
        match self.peek() {
            Some('L') => {
                self.pos += 1;
                Ok(self.field.lambda())
            }
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err("missing ')'".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                let n = i64::try_from(n).map_err(|_| "integer too large".to_string())?;
                Ok(self.field.int(n))
            }
            Some(c) => Err(format!("unexpected '{c}'")),
            None => Err("unexpected end of expression".into()),
        }
    }

    fn integer(&mut self) -> Result<u64, String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err("expected an integer".into());
        }
        self.chars[start..self.pos]
            .iter()
            .collect::<String>()
            .parse()
            .map_err(|e| format!("{e}"))
    }
}

#[cfg(test)]
mod tests {
    use crate::numberfield::{IntPoly, NumberField};

    #[test]
    fn parses_polynomials() {
        let f = NumberField::new(IntPoly::from_i64(&[-1, -1, -1, 1]), 1.839_286_755_214_161);
        assert_eq!(f.parse("L^2 - L").unwrap(), f.from_ints(&[0, -1, 1]));
        assert_eq!(f.parse("2L+1").unwrap(), f.from_ints(&[1, 2]));
        assert_eq!(f.parse("L(L-1)").unwrap(), f.from_ints(&[0, -1, 1]));
        assert_eq!(f.parse("-L^2").unwrap(), f.from_ints(&[0, 0, -1]));
        assert_eq!(f.parse("L^3").unwrap(), f.from_ints(&[1, 1, 1]));
        let theta = f.parse("1/(3L^2-2L-1)").unwrap();
        assert_eq!(f.mul(&theta, &f.from_ints(&[-1, -2, 3])), f.one());
        assert!(f.parse("L +").is_err());
        assert!(f.parse("x").is_err());
        assert!(f.parse("").is_err());
    }
}
