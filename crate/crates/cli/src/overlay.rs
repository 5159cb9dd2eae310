//! `--config FILE` support: a TOML table per subcommand whose keys are flag
//! names. The table is expanded into flags placed right after the subcommand
//! name, so any flag given on the command line comes later and wins.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

/// Top-level flags that take a value and may precede the subcommand.
const VALUE_FLAGS: [&str; 1] = ["--config"];

/// Removes `--config FILE` from the arguments before the subcommand.
pub fn take_config(args: &mut Vec<OsString>) -> Result<Option<PathBuf>> {
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if let Some(v) = arg.strip_prefix("--config=") {
            let path = PathBuf::from(v);
            args.remove(i);
            return Ok(Some(path));
        }
        if arg == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a file");
            }
            let path = PathBuf::from(args.remove(i + 1));
            args.remove(i);
            return Ok(Some(path));
        }
        if !arg.starts_with('-') {
            break;
        }
        i += if VALUE_FLAGS.contains(&arg.as_str()) { 2 } else { 1 };
    }
    Ok(None)
}

fn scalar(key: &str, v: &toml::Value) -> Result<Option<String>> {
    Ok(Some(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(_) => return Ok(None),
        toml::Value::Array(items) => {
            items.iter().map(|x| scalar(key, x).map(|s| s.unwrap_or_default())).collect::<Result<Vec<_>>>()?.join(",")
        }
        _ => bail!("config key {key:?}: unsupported value"),
    }))
}

/// Flags for the subcommand path (e.g. `["eval"]` or `["import", "pope"]`).
pub fn expand(text: &str, path: &[String]) -> Result<Vec<OsString>> {
    let root: toml::Table = text.parse().context("config file is not valid TOML")?;
    let mut table = &root;
    for name in path {
        match table.get(name) {
            Some(toml::Value::Table(t)) => table = t,
            Some(_) => bail!("config section [{name}] must be a table"),
            None => return Ok(Vec::new()),
        }
    }
    let mut out = Vec::new();
    for (key, value) in table {
        if matches!(value, toml::Value::Table(_)) {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match (value, scalar(key, value)?) {
            (toml::Value::Boolean(true), _) => out.push(flag.into()),
            (toml::Value::Boolean(false), _) => {}
            (_, Some(v)) => {
                out.push(flag.into());
                out.push(v.into());
            }
            (_, None) => {}
        }
    }
    Ok(out)
}

/// Index just past the subcommand path in `args`, and the path itself.
pub fn subcommand_path(args: &[OsString], nested: &[&str]) -> (usize, Vec<String>) {
    let mut path = Vec::new();
    let mut idx = 1;
    while idx < args.len() {
        let a = args[idx].to_string_lossy();
        if a.starts_with('-') {
            idx += 1;
            continue;
        }
        path.push(a.into_owned());
        idx += 1;
        if path.len() == 1 && nested.contains(&path[0].as_str()) {
            if let Some(next) = args.get(idx) {
                let n = next.to_string_lossy();
                if !n.starts_with('-') {
                    path.push(n.into_owned());
                    idx += 1;
                }
            }
        }
        break;
    }
    (idx, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn extracts_config() {
        let mut a = os(&["bin", "--config", "c.toml", "eval", "--alpha", "1"]);
        assert_eq!(take_config(&mut a).unwrap(), Some(PathBuf::from("c.toml")));
        assert_eq!(a, os(&["bin", "eval", "--alpha", "1"]));
        let mut b = os(&["bin", "--config=x.toml", "inspect"]);
        assert_eq!(take_config(&mut b).unwrap(), Some(PathBuf::from("x.toml")));
        let mut c = os(&["bin", "eval", "--config", "late.toml"]);
        assert_eq!(take_config(&mut c).unwrap(), None);
    }

    #[test]
    fn expands_section() {
        let text = "[eval]\nalpha = 0.5\nmethods = [\"original\", \"entropy-fusion\"]\nnormalize_naive = true\nmock = false\n[import.pope]\nsplit = \"random\"\n";
        let got = expand(text, &["eval".into()]).unwrap();
        assert_eq!(got, os(&["--alpha", "0.5", "--methods", "original,entropy-fusion", "--normalize-naive"]));
        let nested = expand(text, &["import".into(), "pope".into()]).unwrap();
        assert_eq!(nested, os(&["--split", "random"]));
        assert!(expand(text, &["inspect".into()]).unwrap().is_empty());
    }

    #[test]
    fn finds_subcommand() {
        let a = os(&["bin", "import", "pope", "--input", "x"]);
        assert_eq!(subcommand_path(&a, &["import"]), (3, vec!["import".to_string(), "pope".to_string()]));
        let b = os(&["bin", "eval", "--mock"]);
        assert_eq!(subcommand_path(&b, &["import"]), (2, vec!["eval".to_string()]));
    }
}
