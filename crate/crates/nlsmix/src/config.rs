//! Flat `key=value` config files. Each entry becomes `--key value`, spliced
//! in front of the explicit flags so that the command line wins.

use std::ffi::OsString;
use std::path::Path;

use crate::cli::COMMANDS;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub entries: Vec<(String, String)>,
}

pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    let mut out = ConfigFile::default();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got {raw:?}", no + 1)))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim().to_string();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", no + 1)));
        }
        if key == "command" {
            out.command = Some(value);
        } else {
            out.entries.push((key, value));
        }
    }
    Ok(out)
}

impl ConfigFile {
    fn flags(&self) -> Vec<OsString> {
        let mut out = Vec::new();
        for (k, v) in &self.entries {
            match v.as_str() {
                "true" => out.push(format!("--{k}").into()),
                "false" => {}
                _ => {
                    out.push(format!("--{k}").into());
                    out.push(v.into());
                }
            }
        }
        out
    }
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Returns the argument vector clap should see.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args[1..]) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", Path::new(&path).display())))?;
    let cfg = parse(&text)?;
    let mut rest: Vec<OsString> = args[1..].to_vec();
    let explicit = rest.first().map(|a| a.to_string_lossy().into_owned()).filter(|a| COMMANDS.contains(&a.as_str()));
    let command = match (explicit, &cfg.command) {
        (Some(c), _) => {
            rest.remove(0);
            c
        }
        (None, Some(c)) if COMMANDS.contains(&c.as_str()) => c.clone(),
        (None, Some(c)) => return Err(CliError::Config(format!("unknown command {c:?} in config"))),
        (None, None) => return Err(CliError::Config("no command given on the command line or in the config".into())),
    };
    let mut out = vec![args[0].clone(), command.into()];
    out.extend(cfg.flags());
    out.extend(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let cfg = parse("# sweep\ncommand = sweep\nt_min=0.5 # low end\n\nno-cache=true\n").unwrap();
        assert_eq!(cfg.command.as_deref(), Some("sweep"));
        assert_eq!(cfg.entries, vec![("t-min".into(), "0.5".into()), ("no-cache".into(), "true".into())]);
        assert!(parse("oops").is_err());
    }

    #[test]
    fn explicit_flags_follow_config_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "command=scan\nt=2\nno-crit=false\n").unwrap();
        let args: Vec<OsString> = ["nlsmix", "--config", path.to_str().unwrap(), "--t", "5"].iter().map(OsString::from).collect();
        let out = expand(args).unwrap();
        let out: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(out[1], "scan");
        assert_eq!(&out[2..4], ["--t", "2"]);
        assert_eq!(&out[out.len() - 2..], ["--t", "5"]);
    }
}
