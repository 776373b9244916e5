//! Design, prior and range arguments.

use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use robust_doe::{fixtures, parse_design, Design, Error, PriorSpec, Result};

/// Loads a design from a file path, falling back to a built-in fixture name.
pub fn load_design(arg: &str) -> Result<Design> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::Argument(format!("{arg}: {e}")))?;
        let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
        return parse_design(label, &text).map_err(|e| Error::Argument(format!("{arg}: {e}")));
    }
    fixtures::design(arg).map_err(|_| Error::Argument(format!("{arg}: no such file or fixture")))
}

pub fn load_designs(specs: &[String]) -> Result<Vec<Design>> {
    specs.iter().map(|s| load_design(s)).collect()
}

/// `equal`, `pi1=.5,pi2=.25`, inline JSON, or a JSON file.
pub fn parse_prior(text: &str) -> Result<PriorSpec> {
    let text = text.trim();
    let prior = if text.eq_ignore_ascii_case("equal") {
        PriorSpec::Equal
    } else if text.starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("prior: {e}")))?
    } else if text.contains('=') {
        let (mut pi1, mut pi2) = (None, None);
        for part in text.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("prior: expected key=value, got '{part}'")))?;
            let value: f64 =
                value.trim().parse().map_err(|_| Error::Argument(format!("prior: bad number '{value}'")))?;
            match key.trim() {
                "pi1" => pi1 = Some(value),
                "pi2" => pi2 = Some(value),
                other => return Err(Error::Argument(format!("prior: unknown key '{other}'"))),
            }
        }
        match (pi1, pi2) {
            (Some(a), Some(b)) => PriorSpec::hierarchical(a, b),
            _ => return Err(Error::Argument("prior: both pi1 and pi2 are required".into())),
        }
    } else {
        let raw = fs::read_to_string(text).map_err(|e| Error::Argument(format!("prior file {text}: {e}")))?;
        serde_json::from_str(&raw).map_err(|e| Error::Argument(format!("prior file {text}: {e}")))?
    };
    prior.validate()?;
    Ok(prior)
}

/// Projection sizes: a list like `2,3,5`, a range `2..5` (inclusive), or `m`.
#[derive(Debug, Clone, PartialEq)]
pub enum KSpec {
    All,
    Values(Vec<usize>),
}

impl KSpec {
    pub fn resolve(&self, m: usize) -> Vec<usize> {
        match self {
            KSpec::All => vec![m],
            KSpec::Values(v) => v.iter().map(|&k| if k == 0 { m } else { k }).collect(),
        }
    }
}

pub fn parse_k(text: &str) -> std::result::Result<KSpec, String> {
    let text = text.trim();
    if text == "m" {
        return Ok(KSpec::All);
    }
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = parse_range_ends(lo, hi.trim_start_matches('='))?;
        return Ok(KSpec::Values((lo..=hi).collect()));
    }
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        // "m" inside a list is encoded as 0 and resolved per design
        out.push(if part == "m" { 0 } else { parse_positive(part)? });
    }
    Ok(KSpec::Values(out))
}

pub fn parse_range(text: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let (lo, hi) = text.split_once("..").ok_or_else(|| format!("expected a range like 2..5, got '{text}'"))?;
    let (lo, hi) = parse_range_ends(lo, hi.trim_start_matches('='))?;
    Ok(lo..=hi)
}

fn parse_range_ends(lo: &str, hi: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = (parse_positive(lo.trim())?, parse_positive(hi.trim())?);
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_positive(text: &str) -> std::result::Result<usize, String> {
    match text.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got '{text}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priors() {
        assert_eq!(parse_prior("equal").unwrap(), PriorSpec::Equal);
        assert_eq!(parse_prior("pi1=.5,pi2=.25").unwrap(), PriorSpec::hierarchical(0.5, 0.25));
        assert_eq!(
            parse_prior(r#"{"mode":"hierarchical","pi1":0.3,"pi2":0.1}"#).unwrap(),
            PriorSpec::hierarchical(0.3, 0.1)
        );
        assert!(parse_prior("pi1=.5").is_err());
        assert!(parse_prior("pi1=1.5,pi2=.1").is_err());
    }

    #[test]
    fn ks() {
        assert_eq!(parse_k("m").unwrap(), KSpec::All);
        assert_eq!(parse_k("2..4").unwrap(), KSpec::Values(vec![2, 3, 4]));
        assert_eq!(parse_k("2,5").unwrap().resolve(7), vec![2, 5]);
        assert_eq!(parse_k("3,m").unwrap().resolve(7), vec![3, 7]);
        assert!(parse_k("0").is_err());
        assert!(parse_k("5..2").is_err());
        assert_eq!(parse_range("2..=3").unwrap(), 2..=3);
    }

    #[test]
    fn fixture_fallback() {
        assert_eq!(load_design("B_1").unwrap().runs(), 14);
        assert!(load_design("no_such_design").is_err());
    }
}
