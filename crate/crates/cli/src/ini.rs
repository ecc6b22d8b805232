//! Flat `key = value` files with `[section]` headers. `#` and `;` start
//! comments; keys before any header belong to the unnamed section `""`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IniError {
    Syntax { line: usize, message: String },
    MissingKey { section: String, key: String },
    BadValue { line: usize, section: String, key: String, message: String },
}

impl fmt::Display for IniError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IniError::Syntax { line, message } => write!(f, "line {line}: {message}"),
            IniError::MissingKey { section, key } => {
                write!(f, "missing required key \"{key}\" in section [{section}]")
            }
            IniError::BadValue {
                line,
                section,
                key,
                message,
            } => write!(f, "line {line}: [{section}] {key}: {message}"),
        }
    }
}

impl std::error::Error for IniError {}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self, IniError> {
        let mut ini = Ini::default();
        let mut current = String::new();
        ini.sections.entry(current.clone()).or_default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = match raw.find(['#', ';']) {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| IniError::Syntax {
                    line,
                    message: format!("unterminated section header {body:?}"),
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(IniError::Syntax {
                        line,
                        message: "empty section name".into(),
                    });
                }
                current = name.to_string();
                ini.sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| IniError::Syntax {
                line,
                message: format!("expected `key = value`, got {body:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(IniError::Syntax {
                    line,
                    message: "empty key".into(),
                });
            }
            let section = ini.sections.get_mut(&current).expect("section exists");
            if let Some(prev) = section.get(key) {
                return Err(IniError::Syntax {
                    line,
                    message: format!("duplicate key {key:?} (first set on line {})", prev.line),
                });
            }
            section.insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
        }
        Ok(ini)
    }

    /// Inserts or replaces a value, e.g. for command-line overrides. Such
    /// entries report line 0 in errors.
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections.entry(section.to_string()).or_default().insert(
            key.to_string(),
            Entry {
                value: value.into(),
                line: 0,
            },
        );
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn parse_entry<T: FromStr>(&self, section: &str, key: &str, e: &Entry) -> Result<T, IniError>
    where
        T::Err: fmt::Display,
    {
        e.value.parse().map_err(|err: T::Err| IniError::BadValue {
            line: e.line,
            section: section.to_string(),
            key: key.to_string(),
            message: format!("cannot parse {:?}: {err}", e.value),
        })
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, IniError>
    where
        T::Err: fmt::Display,
    {
        self.entry(section, key)
            .map(|e| self.parse_entry(section, key, e))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T, IniError>
    where
        T::Err: fmt::Display,
    {
        self.get(section, key)?.ok_or_else(|| IniError::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })
    }

    /// Looks in `section` first, then in each fallback section in order.
    pub fn get_inherited<T: FromStr>(
        &self,
        sections: &[&str],
        key: &str,
    ) -> Result<Option<T>, IniError>
    where
        T::Err: fmt::Display,
    {
        for s in sections {
            if let Some(v) = self.get(s, key)? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    /// Comma-separated list; an `a:step:b` item expands to the inclusive
    /// range.
    pub fn get_list(&self, section: &str, key: &str) -> Result<Option<Vec<usize>>, IniError> {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        let bad = |message: String| IniError::BadValue {
            line: e.line,
            section: section.to_string(),
            key: key.to_string(),
            message,
        };
        let mut out = Vec::new();
        for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer {s:?}")));
            match parts.as_slice() {
                [v] => out.push(num(v)?),
                [a, step, b] => {
                    let (a, step, b) = (num(a)?, num(step)?, num(b)?);
                    if step == 0 || a > b {
                        return Err(bad(format!("bad range {item:?}")));
                    }
                    out.extend((a..=b).step_by(step));
                }
                _ => return Err(bad(format!("bad list item {item:?}"))),
            }
        }
        if out.is_empty() {
            return Err(bad("empty list".into()));
        }
        Ok(Some(out))
    }

    pub fn require_list(&self, section: &str, key: &str) -> Result<Vec<usize>, IniError> {
        self.get_list(section, key)?.ok_or_else(|| IniError::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })
    }
}
