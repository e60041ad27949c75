//! Flat `key=value` config files and flag/file/default resolution.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Display};
use std::path::Path;
use std::str::FromStr;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter { .. } | Error::LevelOverflow { .. } => EXIT_CONFIG,
            Error::Io(_) | Error::Malformed { .. } | Error::VersionMismatch { .. } => EXIT_IO,
            _ => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parsed config file: `key = value` per line, `#` starts a comment.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = HashMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected key=value", no + 1)))?;
            let key = k.trim().replace('_', "-");
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::config(format!("config key '{key}' given twice")));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Resolves each option as flag, else config file, else default, and keeps
/// the resolved values for the output header.
#[derive(Debug, Default)]
pub struct Resolver {
    file: ConfigFile,
    used: HashSet<String>,
    echo: BTreeMap<String, String>,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::config(format!("config key '{key}': cannot parse '{raw}'")))
}

impl Resolver {
    pub fn new(file: ConfigFile) -> Self {
        Resolver {
            file,
            ..Default::default()
        }
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.file.entries.get(key) {
            Some(raw) => {
                self.used.insert(key.to_string());
                parse_value(key, raw).map(Some)
            }
            None => Ok(None),
        }
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let file = self.from_file(key)?;
        let v = flag.or(file).unwrap_or(default);
        self.echo.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn get_opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let file = self.from_file(key)?;
        let v = flag.or(file);
        if let Some(v) = &v {
            self.echo.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    /// Like [`Resolver::get_opt`] but kept out of the echo; for settings that
    /// cannot change results.
    pub fn get_quiet<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let file = self.from_file(key)?;
        Ok(flag.or(file))
    }

    pub fn get_bool(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        let file: Option<bool> = self.from_file(key)?;
        let v = flag || file.unwrap_or(false);
        self.echo.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn get_list<T: FromStr + Display + Clone>(
        &mut self,
        key: &str,
        flag: Vec<T>,
        default: Vec<T>,
    ) -> CliResult<Vec<T>> {
        let file = match self.file.entries.get(key).cloned() {
            Some(raw) => {
                self.used.insert(key.to_string());
                Some(
                    raw.split(',')
                        .map(|s| parse_value(key, s))
                        .collect::<CliResult<Vec<T>>>()?,
                )
            }
            None => None,
        };
        let v = if !flag.is_empty() {
            flag
        } else {
            file.unwrap_or(default)
        };
        if !v.is_empty() {
            let shown: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            self.echo.insert(key.to_string(), shown.join(","));
        }
        Ok(v)
    }

    /// Fails on config keys that no option consumed.
    pub fn finish(&self) -> CliResult<()> {
        let mut unknown: Vec<&String> = self
            .file
            .entries
            .keys()
            .filter(|k| !self.used.contains(*k))
            .collect();
        unknown.sort();
        if let Some(k) = unknown.first() {
            return Err(CliError::config(format!("unknown config key '{k}'")));
        }
        Ok(())
    }

    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.echo
    }
}
