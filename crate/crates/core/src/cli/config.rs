//! `--config <file>` support.
//!
//! The file is TOML: top-level keys set global flags and a table named after
//! a subcommand sets that subcommand's flags, e.g.
//!
//! ```toml
//! seed = 7
//! [gen]
//! users = 10
//! class-mix = [0.2, 0.4, 0.4]
//! ```
//!
//! Entries are turned into flags placed before the ones given on the command
//! line; since repeated flags override earlier ones, the command line wins.
//! Unknown keys surface as unknown flags.

use std::ffi::OsString;
use std::path::PathBuf;

const SUBCOMMANDS: [&str; 8] = ["gen", "featurize", "train", "nimlp", "evaluate", "probe", "analyze", "report"];
const GLOBAL_VALUED: [&str; 4] = ["--out", "--seed", "--threads", "--config"];

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn subcommand_index(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if SUBCOMMANDS.contains(&s.as_ref()) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn to_flags(table: &toml::Table, skip_tables: bool) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (k, v) in table {
        let flag = format!("--{}", k.replace('_', "-"));
        let value = match v {
            toml::Value::Table(_) if skip_tables => continue,
            toml::Value::Table(_) => return Err(format!("nested table `{k}` is not allowed here")),
            toml::Value::Boolean(true) => {
                out.push(OsString::from(flag));
                continue;
            }
            toml::Value::Boolean(false) => continue,
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    toml::Value::String(s) => Ok(s.clone()),
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::Float(f) => Ok(f.to_string()),
                    _ => Err(format!("unsupported list item in `{k}`")),
                })
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            toml::Value::Datetime(d) => d.to_string(),
        };
        out.push(OsString::from(flag));
        out.push(OsString::from(value));
    }
    Ok(out)
}

/// Splice config-file flags into `argv`.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let table: toml::Table = text.parse().map_err(|e| format!("bad config {}: {e}", path.display()))?;
    for k in table.keys() {
        if matches!(table[k], toml::Value::Table(_)) && !SUBCOMMANDS.contains(&k.as_str()) {
            return Err(format!("unknown section [{k}] in {}", path.display()));
        }
    }
    let globals = to_flags(&table, true)?;
    let Some(sub) = subcommand_index(&argv) else {
        // let clap report the missing subcommand
        return Ok(argv);
    };
    let name = argv[sub].to_string_lossy().to_string();
    let local = match table.get(&name) {
        Some(toml::Value::Table(t)) => to_flags(t, false)?,
        _ => Vec::new(),
    };
    let mut out = Vec::with_capacity(argv.len() + globals.len() + local.len());
    out.push(argv[0].clone());
    out.extend(globals);
    out.extend_from_slice(&argv[1..sub]);
    out.push(argv[sub].clone());
    out.extend(local);
    out.extend_from_slice(&argv[sub + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_follow_config_entries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "seed = 3\n[gen]\nusers = 4\nclass_mix = [0.2, 0.4, 0.4]\n").unwrap();
        let argv = os(&["tm", "--config", p.to_str().unwrap(), "gen", "--users", "5"]);
        let out = expand(argv).unwrap();
        let s: Vec<String> = out.iter().map(|o| o.to_string_lossy().to_string()).collect();
        let users = s.iter().rposition(|a| a == "--users").unwrap();
        assert_eq!(s[users + 1], "5");
        assert!(s.contains(&"--seed".to_string()) && s.contains(&"0.2,0.4,0.4".to_string()));
    }
}
