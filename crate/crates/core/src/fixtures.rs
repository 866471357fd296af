//! Bundled rule files.

use crate::error::{Error, OracleError};
use crate::system::System;

pub struct Fixture {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! fixture {
    ($name:literal) => {
        Fixture {
            name: $name,
            text: include_str!(concat!("../../../fixtures/", $name, ".rule")),
        }
    };
}

pub const FIXTURES: &[Fixture] = &[
    fixture!("fibonacci"),
    fixture!("pisa_2"),
    fixture!("pisa_3"),
    fixture!("pisa_4"),
    fixture!("pisa_5"),
    fixture!("pisa_6"),
    fixture!("tribonacci"),
    fixture!("twisted_tribonacci"),
    fixture!("pisa4"),
    fixture!("twisted_fib_ext"),
    fixture!("rho_prime"),
    fixture!("rho_tilde"),
];

pub fn list_fixtures() -> &'static [Fixture] {
    FIXTURES
}

pub fn fixture_text(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|f| f.name == name).map(|f| f.text)
}

pub fn load_fixture(name: &str) -> Result<System, Error> {
    let text = fixture_text(name).ok_or_else(|| OracleError::UnknownSystem(name.to_string()))?;
    System::from_text(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_builds() {
        for f in FIXTURES {
            let s = load_fixture(f.name).unwrap_or_else(|e| panic!("{}: {e}", f.name));
            assert_eq!(s.name(), f.name);
        }
        assert!(load_fixture("nope").is_err());
    }

    #[test]
    fn twisted_tribonacci_images() {
        let s = load_fixture("twisted_tribonacci").unwrap();
        assert_eq!(s.rule.to_string(), "a -> ba ; b -> ac ; c -> a");
    }
}
