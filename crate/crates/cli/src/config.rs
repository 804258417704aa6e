//! Flat `key = value` configuration with `--key value` overrides.
//!
//! Keys use underscores in files and either underscores or dashes on the
//! command line: `block_length = 14` and `--block-length 14` are the same.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches, Command};
use sha2::{Digest, Sha256};
use wcopula::model::parse_key_values;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Value,
    /// Names an input file; its contents enter the configuration hash.
    Input,
    /// Names an output location; excluded from the hash.
    Output,
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub default: Option<&'static str>,
    pub kind: Kind,
}

pub const fn value(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, help, default, kind: Kind::Value }
}

pub const fn input(name: &'static str, help: &'static str) -> Key {
    Key { name, help, default: None, kind: Kind::Input }
}

pub const fn output(name: &'static str, help: &'static str) -> Key {
    Key { name, help, default: None, kind: Kind::Output }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

/// Adds one `--key <VALUE>` option per key, plus `--config`.
pub fn add_keys(mut cmd: Command, keys: &'static [Key]) -> Command {
    cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value file supplying defaults; command-line options take precedence"),
    );
    for k in keys {
        let mut help = k.help.to_string();
        if let Some(d) = k.default {
            help.push_str(&format!(" [default: {d}]"));
        }
        let mut arg = Arg::new(k.name).long(flag_name(k.name)).value_name("VALUE").action(ArgAction::Set).help(help);
        if k.name.contains('_') {
            arg = arg.alias(k.name);
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

/// Resolved settings of one command run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub command: &'static str,
    keys: &'static [Key],
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    pub fn resolve(command: &'static str, keys: &'static [Key], m: &ArgMatches) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let mut base = PathBuf::from(".");
        if let Some(path) = m.get_one::<String>("config") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
            let entries = parse_key_values(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            for (key, v, line) in entries {
                let norm = key.replace('-', "_");
                let k = keys.iter().find(|k| k.name == norm).ok_or_else(|| {
                    CliError::Usage(format!(
                        "{path}, line {line}: unknown key `{key}` for `{command}`; known keys are {}",
                        keys.iter().map(|k| k.name).collect::<Vec<_>>().join(", ")
                    ))
                })?;
                values.insert(k.name, v);
            }
            // relative paths in a config file are read relative to that file
            base = Path::new(path).parent().map(Path::to_path_buf).unwrap_or(base);
        }
        let mut s = Settings { command, keys, values };
        let from_file: Vec<&'static str> = s.values.keys().copied().collect();
        for k in keys {
            if let Some(v) = m.get_one::<String>(k.name) {
                s.values.insert(k.name, v.clone());
            } else if from_file.contains(&k.name) && k.kind != Kind::Value {
                let p = base.join(&s.values[k.name]);
                s.values.insert(k.name, p.to_string_lossy().into_owned());
            } else if !s.values.contains_key(k.name) {
                if let Some(d) = k.default {
                    s.values.insert(k.name, d.to_string());
                }
            }
        }
        Ok(s)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn string(&self, key: &str) -> Result<String, CliError> {
        self.raw(key)
            .map(str::to_string)
            .ok_or_else(|| CliError::Usage(format!("`{}` needs --{}", self.command, flag_name(key))))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.string(key).map(PathBuf::from)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.string(key)?;
        raw.parse()
            .map_err(|_| CliError::Usage(format!("--{} expects a {}, got `{raw}`", flag_name(key), type_label::<T>())))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        if self.has(key) {
            self.get(key).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let raw = self.string(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| {
                    CliError::Usage(format!("--{} expects a comma-separated list, cannot read `{s}`", flag_name(key)))
                })
            })
            .collect()
    }

    /// Short hash of the settings: values as given, input files by content,
    /// output locations left out.
    pub fn hash(&self) -> Result<String, CliError> {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        for k in self.keys {
            let Some(v) = self.raw(k.name) else { continue };
            h.update(b"\n");
            h.update(k.name.as_bytes());
            h.update(b"=");
            match k.kind {
                Kind::Value => h.update(v.as_bytes()),
                Kind::Input => {
                    let bytes = std::fs::read(v).map_err(|e| CliError::Usage(format!("cannot read {v}: {e}")))?;
                    h.update(Sha256::digest(&bytes));
                }
                Kind::Output => h.update(b"-"),
            }
        }
        let digest = h.finalize();
        Ok(digest.iter().take(6).map(|b| format!("{b:02x}")).collect())
    }
}

fn type_label<T>() -> &'static str {
    let name = std::any::type_name::<T>();
    if name.contains("f64") {
        "number"
    } else if name.contains("usize") || name.contains("u64") {
        "non-negative integer"
    } else {
        "value"
    }
}
