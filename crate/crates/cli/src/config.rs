//! `--config FILE` support: a JSON object whose keys are long flag names
//! (`out-inliers` or `out_inliers`). Values fill every flag that was not
//! given on the command line; arrays become comma lists.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{ArgMatches, Command, CommandFactory, FromArgMatches};
use serde_json::Value;

use crate::args::Cli;

pub fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    let mut cmd = Cli::command();
    let matches = cmd.try_get_matches_from_mut(argv.clone())?;
    let Some(path) = config_path(&matches) else {
        return Cli::from_arg_matches(&matches).map_err(|e| e.format(&mut cmd));
    };
    let extra = config_flags(&cmd, &matches, &path).map_err(|msg| cmd.error(ErrorKind::InvalidValue, msg))?;
    let mut argv = argv;
    argv.extend(extra);
    let matches = cmd.try_get_matches_from_mut(argv)?;
    Cli::from_arg_matches(&matches).map_err(|e| e.format(&mut cmd))
}

fn config_path(matches: &ArgMatches) -> Option<PathBuf> {
    let sub = matches.subcommand().map(|(_, m)| m);
    sub.and_then(|m| m.get_one::<PathBuf>("config"))
        .or_else(|| matches.get_one::<PathBuf>("config"))
        .cloned()
}

fn config_flags(cmd: &Command, matches: &ArgMatches, path: &PathBuf) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let json: Value = serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
    let Value::Object(entries) = json else {
        return Err(format!("config {} must hold a JSON object", path.display()));
    };
    let (sub_name, sub_matches) = matches.subcommand().ok_or("no subcommand given")?;
    let sub_cmd = cmd.find_subcommand(sub_name).ok_or("unknown subcommand")?;

    let mut flags = Vec::new();
    for (key, value) in entries {
        let id = key.replace('-', "_");
        let global = cmd.get_arguments().find(|a| a.get_id() == id.as_str());
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_id() == id.as_str())
            .or(global)
            .ok_or_else(|| format!("config key '{key}' is not a flag of {sub_name}"))?;
        let Some(long) = arg.get_long() else {
            return Err(format!("config key '{key}' is positional; pass it on the command line"));
        };
        if id == "config" {
            continue;
        }
        let explicit = sub_matches.value_source(&id) == Some(ValueSource::CommandLine)
            || (global.is_some() && matches.value_source(&id) == Some(ValueSource::CommandLine));
        if explicit {
            continue;
        }
        let text = match value {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => {
                flags.push(format!("--{long}").into());
                continue;
            }
            Value::Array(items) => items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(","),
            other => scalar(&other)?,
        };
        flags.push(format!("--{long}={text}").into());
    }
    Ok(flags)
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}
