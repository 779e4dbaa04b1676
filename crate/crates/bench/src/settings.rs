//! Key-value settings shared by the config file and the command line.
//!
//! A config file holds one `key = value` per line using the long flag names
//! (`cr = 0.5,0.6`, `atoms-per-iter = 4`); `#` starts a comment. Command-line
//! values are merged over file values before [`spec_from_settings`] runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{BenchError, Result};
use crate::spec::{Algorithm, ExperimentSpec, InputSpec};

pub type Settings = BTreeMap<String, String>;

pub const RUN_KEYS: [&str; 13] = [
    "algorithm",
    "input",
    "cr",
    "seed",
    "t",
    "lambda",
    "atoms-per-iter",
    "residual-tol",
    "wavelet-order",
    "percent-prd",
    "phi-per-segment",
    "format",
    "out",
];

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

pub fn parse_settings(text: &str, origin: &Path) -> Result<Settings> {
    let mut out = Settings::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(BenchError::Config(format!(
                "{}:{}: expected key = value",
                origin.display(),
                no + 1
            )));
        };
        let key = normalize(k);
        if !RUN_KEYS.contains(&key.as_str()) {
            return Err(BenchError::Config(format!("{}:{}: unknown key '{key}'", origin.display(), no + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load_settings(path: &Path) -> Result<Settings> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    parse_settings(&text, path)
}

fn parsed<T: FromStr>(s: &Settings, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    s.get(key)
        .map(|v| v.parse::<T>().map_err(|e| BenchError::Config(format!("{key} = '{v}': {e}"))))
        .transpose()
}

fn flag(s: &Settings, key: &str) -> Result<bool> {
    match s.get(key).map(|v| v.trim().to_ascii_lowercase()) {
        None => Ok(false),
        Some(v) => match v.as_str() {
            "1" | "true" | "yes" | "on" => Ok(true),
            "0" | "false" | "no" | "off" | "" => Ok(false),
            _ => Err(BenchError::Config(format!("{key} = '{v}' is not a boolean"))),
        },
    }
}

pub fn parse_cr_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| BenchError::Config(format!("bad compression ratio '{}'", p.trim())))
        })
        .collect()
}

fn required<'a>(s: &'a Settings, key: &str) -> Result<&'a str> {
    s.get(key)
        .map(String::as_str)
        .ok_or_else(|| BenchError::Config(format!("missing required setting '{key}'")))
}

pub fn spec_from_settings(s: &Settings) -> Result<ExperimentSpec> {
    let algorithm: Algorithm = required(s, "algorithm")?.parse()?;
    let input: InputSpec = required(s, "input")?.parse()?;
    let cr = parse_cr_list(required(s, "cr")?)?;
    let mut spec = ExperimentSpec::new(algorithm, input, cr);
    spec.output_path = PathBuf::from(required(s, "out")?);
    if let Some(v) = parsed(s, "seed")? {
        spec.seed = v;
    }
    if let Some(v) = parsed(s, "t")? {
        spec.t = v;
    }
    if let Some(v) = parsed(s, "lambda")? {
        spec.lambda = v;
    }
    if let Some(v) = parsed(s, "atoms-per-iter")? {
        spec.atoms_per_iter = v;
    }
    if let Some(v) = parsed(s, "residual-tol")? {
        spec.residual_tol = v;
    }
    if let Some(v) = parsed(s, "wavelet-order")? {
        spec.wavelet_order = v;
    }
    spec.percent_prd = flag(s, "percent-prd")?;
    spec.per_segment_phi = flag(s, "phi-per-segment")?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_errors() {
        let text = "# sweep\nalgorithm = sgap\ninput = synth:60,2,2,50\ncr = 0.5, 0.7\natoms_per_iter = 3\nout = /tmp/x\npercent-prd = true\n";
        let s = parse_settings(text, Path::new("c.cfg")).unwrap();
        let spec = spec_from_settings(&s).unwrap();
        assert_eq!(spec.algorithm, Algorithm::Sgap);
        assert_eq!(spec.cr_grid, vec![0.5, 0.7]);
        assert_eq!(spec.atoms_per_iter, 3);
        assert!(spec.percent_prd && !spec.per_segment_phi);

        let err = parse_settings("algorithm = gap\nbogus = 1\n", Path::new("c.cfg")).unwrap_err();
        assert!(err.to_string().contains("c.cfg:2"));
        let mut s2 = s.clone();
        s2.insert("cr".into(), "0.5,1.5".into());
        assert!(spec_from_settings(&s2).unwrap_err().is_config());
        s2.remove("cr");
        assert!(spec_from_settings(&s2).unwrap_err().to_string().contains("'cr'"));
    }
}
