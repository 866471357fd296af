//! Substitution rules and the rule-file format.
//!
//! ```text
//! # Tribonacci
//! name: tribonacci
//! a -> ab ; b -> ac
//! c -> a
//! lengths: L, L^2-L, 1
//! ```

use crate::error::RuleError;
use serde::Serialize;
use std::fmt;

const RESERVED: &[char] = &[';', '#', '-', '>', ':', ','];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubstitutionRule {
    pub name: String,
    pub letters: Vec<char>,
    pub images: Vec<Vec<usize>>,
    /// Optional tile-length override, one polynomial-in-`L` expression per letter.
    pub lengths: Option<Vec<String>>,
}

impl SubstitutionRule {
    /// Builds a rule from images given as index sequences; letters are `a, b, c, …`.
    pub fn from_images(name: &str, images: Vec<Vec<usize>>) -> Result<Self, RuleError> {
        if images.is_empty() {
            return Err(RuleError::Empty);
        }
        let n = images.len();
        let letters: Vec<char> = (0..n)
            .map(|i| char::from_u32('a' as u32 + i as u32).unwrap_or('?'))
            .collect();
        for (j, img) in images.iter().enumerate() {
            if img.is_empty() {
                return Err(RuleError::EmptyImage(letters[j]));
            }
            if let Some(&bad) = img.iter().find(|&&i| i >= n) {
                return Err(RuleError::UnknownLetter {
                    letter: char::from_u32('a' as u32 + bad as u32).unwrap_or('?'),
                    line: 0,
                    column: 0,
                });
            }
        }
        let rule = SubstitutionRule {
            name: name.to_string(),
            letters,
            images,
            lengths: None,
        };
        rule.check_dead_letters()?;
        Ok(rule)
    }

    pub fn alphabet_size(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, i: usize) -> char {
        self.letters[i]
    }

    pub fn image(&self, j: usize) -> &[usize] {
        &self.images[j]
    }

    /// Applies the substitution to a word.
    pub fn apply(&self, word: &[usize]) -> Vec<usize> {
        word.iter()
            .flat_map(|&a| self.images[a].iter().copied())
            .collect()
    }

    /// The rule `ϱ^p` on the same alphabet.
    pub fn power(&self, p: usize) -> SubstitutionRule {
        let images = (0..self.alphabet_size())
            .map(|j| {
                let mut w = vec![j];
                for _ in 0..p {
                    w = self.apply(&w);
                }
                w
            })
            .collect();
        SubstitutionRule {
            name: if p == 1 {
                self.name.clone()
            } else {
                format!("{}^{p}", self.name)
            },
            letters: self.letters.clone(),
            images,
            lengths: self.lengths.clone(),
        }
    }

    pub fn word_to_string(&self, word: &[usize]) -> String {
        word.iter().map(|&i| self.letters[i]).collect()
    }

    fn check_dead_letters(&self) -> Result<(), RuleError> {
        let mut seen = vec![false; self.alphabet_size()];
        for img in &self.images {
            for &i in img {
                seen[i] = true;
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(RuleError::DeadLetter(self.letters[i])),
            None => Ok(()),
        }
    }
}

impl fmt::Display for SubstitutionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(j, img)| format!("{} -> {}", self.letters[j], self.word_to_string(img)))
            .collect();
        write!(f, "{}", parts.join(" ; "))
    }
}

/// Parses rule-file text.
pub fn parse_rule(text: &str) -> Result<SubstitutionRule, RuleError> {
    let mut name = String::new();
    let mut lengths = None;
    // (letter, image chars with positions), in definition order
    let mut defs: Vec<(char, Vec<(char, usize, usize)>)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("name:") {
            name = rest.trim().to_string();
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("lengths:") {
            let exprs: Vec<String> = rest.split(',').map(|s| s.trim().to_string()).collect();
            if exprs.iter().any(|e| e.is_empty()) {
                return Err(RuleError::Lengths(format!("empty entry on line {line_no}")));
            }
            lengths = Some(exprs);
            continue;
        }
        let mut offset = 0;
        for stmt in line.split(';') {
            let col0 = offset;
            offset += stmt.chars().count() + 1;
            if stmt.trim().is_empty() {
                continue;
            }
            defs.push(parse_statement(stmt, line_no, col0)?);
        }
    }
    if defs.is_empty() {
        return Err(RuleError::Empty);
    }
    let letters: Vec<char> = defs.iter().map(|d| d.0).collect();
    for (i, &c) in letters.iter().enumerate() {
        if letters[..i].contains(&c) {
            return Err(RuleError::DuplicateLetter(c));
        }
    }
    let mut images = Vec::with_capacity(defs.len());
    for (lhs, img) in &defs {
        if img.is_empty() {
            return Err(RuleError::EmptyImage(*lhs));
        }
        let mut w = Vec::with_capacity(img.len());
        for &(c, line, column) in img {
            let idx = letters
                .iter()
                .position(|&l| l == c)
                .ok_or(RuleError::UnknownLetter {
                    letter: c,
                    line,
                    column,
                })?;
            w.push(idx);
        }
        images.push(w);
    }
    if let Some(l) = &lengths {
        if l.len() != letters.len() {
            return Err(RuleError::Lengths(format!(
                "{} expressions for {} letters",
                l.len(),
                letters.len()
            )));
        }
    }
    let rule = SubstitutionRule {
        name,
        letters,
        images,
        lengths,
    };
    rule.check_dead_letters()?;
    Ok(rule)
}

type Statement = (char, Vec<(char, usize, usize)>);

fn parse_statement(stmt: &str, line: usize, col0: usize) -> Result<Statement, RuleError> {
    let chars: Vec<(usize, char)> = stmt
        .chars()
        .enumerate()
        .map(|(i, c)| (col0 + i + 1, c))
        .collect();
    let mut it = chars.iter().filter(|(_, c)| !c.is_whitespace()).peekable();
    let syntax = |column: usize, message: &str| RuleError::Syntax {
        line,
        column,
        message: message.to_string(),
    };
    let &(col, lhs) = it.next().ok_or_else(|| syntax(col0 + 1, "expected a letter"))?;
    if RESERVED.contains(&lhs) {
        return Err(syntax(col, "expected a letter"));
    }
    match (it.next(), it.next()) {
        (Some(&(_, '-')), Some(&(_, '>'))) => {}
        (Some(&(c, _)), _) => return Err(syntax(c, "expected '->'")),
        (None, _) => return Err(syntax(col + 1, "expected '->'")),
    }
    let mut image = Vec::new();
    for &(c, ch) in it {
        if RESERVED.contains(&ch) {
            return Err(syntax(c, &format!("unexpected '{ch}'")));
        }
        image.push((ch, line, c));
    }
    Ok((lhs, image))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fibonacci_and_tribonacci() {
        let f = parse_rule("a -> ab ; b -> a").unwrap();
        assert_eq!(f.alphabet_size(), 2);
        assert_eq!(f.images, vec![vec![0, 1], vec![0]]);
        let t = parse_rule("# tribonacci\na -> ab ; b -> ac ; c -> a\n").unwrap();
        assert_eq!(t.images, vec![vec![0, 1], vec![0, 2], vec![0]]);
        assert_eq!(t.to_string(), "a -> ab ; b -> ac ; c -> a");
    }

    #[test]
    fn name_and_lengths() {
        let r = parse_rule("name: fib\na -> ab\nb -> a\nlengths: L, 1").unwrap();
        assert_eq!(r.name, "fib");
        assert_eq!(r.lengths, Some(vec!["L".to_string(), "1".to_string()]));
        assert!(matches!(
            parse_rule("a -> ab ; b -> a\nlengths: L"),
            Err(RuleError::Lengths(_))
        ));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse_rule("a -> "), Err(RuleError::EmptyImage('a')));
        assert_eq!(
            parse_rule("a -> ab ; b -> ax"),
            Err(RuleError::UnknownLetter {
                letter: 'x',
                line: 1,
                column: 17
            })
        );
        assert!(matches!(
            parse_rule("a => b"),
            Err(RuleError::Syntax { line: 1, column: 3, .. })
        ));
        assert_eq!(parse_rule("a -> a ; a -> a"), Err(RuleError::DuplicateLetter('a')));
        assert_eq!(parse_rule("a -> a ; b -> a"), Err(RuleError::DeadLetter('b')));
        assert_eq!(parse_rule("# nothing"), Err(RuleError::Empty));
    }

    #[test]
    fn powers_concatenate_images() {
        let f = parse_rule("a -> ab ; b -> a").unwrap();
        let f2 = f.power(2);
        assert_eq!(f.word_to_string(&f2.images[0]), "aba");
        assert_eq!(f.word_to_string(&f2.images[1]), "ab");
    }
}
