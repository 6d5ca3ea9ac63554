//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! name = dam-p2
//! [a]            # following keys are read as `a.<key>`
//! kind = power
//! p = 2
//! ```
//!
//! Keys may also be written fully qualified (`a.p = 2`) anywhere. A key may
//! appear once; every key must be consumed by the scenario builder, so a
//! typo is reported with its line rather than silently ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line in the source, when the error is tied to one.
    pub line: Option<usize>,
    pub message: String,
    /// The file the text came from.
    pub file: Option<String>,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
            file: None,
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
            file: None,
        }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}: ")?;
        }
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed entries, consumed key by key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        ConfigError::at(line, format!("unterminated section header `{body}`"))
                    })?
                    .trim();
                if !valid_key(name) {
                    return Err(ConfigError::at(line, format!("bad section name `{name}`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| {
                ConfigError::at(line, format!("expected `key = value`, got `{body}`"))
            })?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(ConfigError::at(line, format!("bad key `{key}`")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("key `{key}` has no value")));
            }
            let full = if section.is_empty() || key.contains('.') {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if let Some(prev) = entries.get(&full) {
                let Entry { line: first, .. } = prev;
                return Err(ConfigError::at(
                    line,
                    format!("duplicate key `{full}` (first set on line {first})"),
                ));
            }
            entries.insert(
                full,
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(Self { entries })
    }

    /// `self` with every key of `over` replacing or adding to it.
    pub fn overlay(mut self, over: Config) -> Self {
        self.entries.extend(over.entries);
        self
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Removes `key`, returning its raw value and line.
    pub fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key).map(|e| (e.value, e.line))
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    pub fn parse_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        let Some((v, line)) = self.take(key) else {
            return Ok(None);
        };
        v.parse().map(Some).map_err(|_| {
            ConfigError::at(
                line,
                format!("`{key}`: cannot read `{v}` as {}", type_name::<T>()),
            )
        })
    }

    pub fn value_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.parse_value(key)?.unwrap_or(default))
    }

    /// Whitespace- or comma-separated numbers.
    pub fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((v, line)) = self.take(key) else {
            return Ok(None);
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| ConfigError::at(line, format!("`{key}`: `{s}` is not a number")))
            })
            .collect::<Result<Vec<f64>, _>>()
            .map(Some)
    }

    /// A list of exactly `n` numbers.
    pub fn fixed_list(&mut self, key: &str, n: usize) -> Result<Option<Vec<f64>>, ConfigError> {
        let line = self.line_of(key);
        match self.list(key)? {
            Some(v) if v.len() != n => Err(ConfigError {
                line,
                message: format!("`{key}` needs {n} numbers, got {}", v.len()),
                file: None,
            }),
            other => Ok(other),
        }
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    /// Fails on the first key nobody asked for.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            Some((key, e)) => Err(ConfigError::at(e.line, format!("unknown key `{key}`"))),
            None => Ok(()),
        }
    }
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| !part.is_empty())
        && k.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "f64" => "a number",
        "usize" | "u64" => "a nonnegative integer",
        "bool" => "true or false",
        other => other,
    }
}

/// An error tied to the line of `key` in the source, if known.
pub fn error_for(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
        file: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_qualified_keys() {
        let mut c =
            Config::parse("name = x\n[a]\nkind = power # p-Laplacian\np = 3\nfield.kind = shear\n")
                .unwrap();
        assert_eq!(c.take_str("name").as_deref(), Some("x"));
        assert_eq!(c.take_str("a.kind").as_deref(), Some("power"));
        assert_eq!(c.parse_value::<f64>("a.p").unwrap(), Some(3.0));
        assert_eq!(c.take_str("field.kind").as_deref(), Some("shear"));
        c.finish().unwrap();
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Config::parse("a = 1\n\n  oops\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = Config::parse("a = 1\n[b\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = Config::parse("a = 1\na = 2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.to_string().contains("line 1"));
        let mut c = Config::parse("\n[solver]\nomega = fast\n").unwrap();
        let e = c.parse_value::<f64>("solver.omega").unwrap_err();
        assert_eq!(
            e.to_string(),
            "line 3: `solver.omega`: cannot read `fast` as a number"
        );
        let c = Config::parse("x = 1\ntypo = 2\n").unwrap();
        let mut c = c;
        c.take("x");
        assert_eq!(c.finish().unwrap_err().line, Some(2));
    }

    #[test]
    fn lists() {
        let mut c = Config::parse("w = 0.2, 0.8\nk = 0.1 0.2 0.3\n").unwrap();
        assert_eq!(c.fixed_list("w", 2).unwrap(), Some(vec![0.2, 0.8]));
        assert!(c.fixed_list("k", 2).is_err());
    }

    #[test]
    fn overlay_replaces() {
        let base = Config::parse("a = 1\nb = 2\n").unwrap();
        let mut c = base.overlay(Config::parse("b = 3\n").unwrap());
        assert_eq!(c.take_str("a").as_deref(), Some("1"));
        assert_eq!(c.take_str("b").as_deref(), Some("3"));
    }
}
