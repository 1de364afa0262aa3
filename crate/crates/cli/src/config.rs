//! Flat `key=value` run configuration: the seven model parameters plus namespaced options.

use std::collections::BTreeMap;
use std::str::FromStr;

use ddilab_core::model::PARAM_KEYS;
use ddilab_core::ModelParams;

use crate::CliError;

/// Option keys accepted besides the model parameters.
pub const OPTION_KEYS: &[&str] = &[
    "kinetics.u0",
    "kinetics.v0",
    "kinetics.w0",
    "kinetics.t_end",
    "kinetics.rel_tol",
    "pattern.n_grid",
    "pattern.modes",
    "pattern.orientation",
    "spectrum.n_min",
    "spectrum.n_max",
    "spectrum.intervals",
    "spectrum.modes",
    "spectrum.n_grid",
    "sim.n_grid",
    "sim.dt",
    "sim.t_end",
    "sim.scheme",
    "sim.record_every",
    "sim.seed",
    "sim.init",
    "sim.amplitude",
    "sim.probe",
    "sim.modes",
];

fn known(key: &str) -> bool {
    PARAM_KEYS.contains(&key) || OPTION_KEYS.contains(&key)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    options: BTreeMap<String, String>,
}

/// Raw entries keyed by name, each with its source line (0 for overrides).
type Entries = BTreeMap<String, (usize, String)>;

fn parse_entries(text: &str) -> Result<Entries, CliError> {
    let mut out = Entries::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {line}: expected key=value, got `{body}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if !known(k) {
            return Err(CliError::Usage(format!("config line {line}: unknown key `{k}`")));
        }
        if let Some((first, _)) = out.get(k) {
            return Err(CliError::Usage(format!("config: key `{k}` given twice (lines {first} and {line})")));
        }
        out.insert(k.to_string(), (line, v.to_string()));
    }
    Ok(out)
}

impl Config {
    /// Builds a configuration from optional file text plus `--set` overrides.
    /// Without a file the reference parameter set at γ = 20 is the base.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self, CliError> {
        let mut entries = match text {
            Some(t) => parse_entries(t)?,
            None => {
                let base = ModelParams::reference(20.0);
                PARAM_KEYS.iter().zip(base.values()).map(|(k, v)| (k.to_string(), (0, v.to_string()))).collect()
            }
        };
        for o in overrides {
            let (k, v) =
                o.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{o}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !known(k) {
                return Err(CliError::Usage(format!("--set: unknown key `{k}`")));
            }
            entries.insert(k.to_string(), (0, v.to_string()));
        }
        let mut vals = [0.0; 7];
        for (slot, key) in vals.iter_mut().zip(PARAM_KEYS) {
            let (line, raw) = entries.get(key).ok_or_else(|| CliError::Usage(format!("config: missing key `{key}`")))?;
            *slot = raw.parse().map_err(|_| bad_value(key, *line, raw))?;
        }
        let params = ModelParams::new(vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6])
            .map_err(|e| CliError::Usage(format!("config: {e}")))?;
        let options =
            entries.into_iter().filter(|(k, _)| !PARAM_KEYS.contains(&k.as_str())).map(|(k, (_, v))| (k, v)).collect();
        Ok(Self { params, options })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(known(key), "{key}");
        self.options.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| bad_value(key, 0, s)),
        }
    }

    /// Echo of every effective setting, sorted, for run metadata.
    pub fn echo(&self) -> String {
        let mut s = self.params.to_kv_string();
        for (k, v) in &self.options {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    /// A copy with extra overrides applied (used by `sweep`).
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut text = self.echo();
        let mut sets = Vec::new();
        for (k, v) in overrides {
            sets.push(format!("{k}={v}"));
        }
        text.push('\n');
        Self::load(Some(&text), &sets)
    }
}

fn bad_value(key: &str, line: usize, raw: &str) -> CliError {
    if line > 0 {
        CliError::Usage(format!("config line {line}: bad value `{raw}` for `{key}`"))
    } else {
        CliError::Usage(format!("bad value `{raw}` for `{key}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "a=3\nd_c=1\nd_b=1\nd=1\nd_g=1\nkappa0=2\ngamma=20\n";

    #[test]
    fn minimal_file_uses_defaults() {
        let c = Config::load(Some(MINIMAL), &[]).unwrap();
        assert_eq!(c.params, ModelParams::reference(20.0));
        assert_eq!(c.get("sim.n_grid", 512usize).unwrap(), 512);
    }

    #[test]
    fn duplicate_names_both_lines() {
        let err = Config::load(Some(&format!("{MINIMAL}a=4\n")), &[]).unwrap_err();
        assert!(err.to_string().contains("lines 1 and 8"), "{err}");
    }

    #[test]
    fn invalid_gamma_is_rejected() {
        let err = Config::load(Some(MINIMAL), &["gamma=-1".into()]).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
    }

    #[test]
    fn unknown_key_is_usage() {
        assert!(matches!(Config::load(Some("foo=1"), &[]), Err(CliError::Usage(_))));
        assert!(matches!(Config::load(None, &["sim.bogus=1".into()]), Err(CliError::Usage(_))));
    }

    #[test]
    fn overrides_round_trip_through_echo() {
        let c = Config::load(None, &["sim.t_end=3".into()]).unwrap();
        let d = c.with_overrides(&[("gamma".into(), "10".into())]).unwrap();
        assert_eq!(d.params.gamma, 10.0);
        assert_eq!(d.get("sim.t_end", 0.0).unwrap(), 3.0);
    }
}
