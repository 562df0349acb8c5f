//! Run configuration files: TOML, with `key.path=value` overrides applied
//! before the typed parse so every field can be set from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use arcalis_core::calibration::Calibration;
use arcalis_core::system::{Mode, SystemConfig};
use arcalis_core::workload::{OpRatio, WorkloadMix, DEFAULT_REQUESTS, DEFAULT_SEED};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub preset: String,
    /// Replaces the preset's operation list, e.g. `[{ op = "get", ratio = 1.0 }]`.
    pub ops: Option<Vec<OpRatio>>,
    /// Write share (SET or StorePost); reads take the rest.
    pub set_ratio: Option<f64>,
    pub key_size: Option<u32>,
    pub value_size: Option<u32>,
    pub keyspace: Option<u64>,
    pub zipf_s: Option<f64>,
    pub post_text_len: Option<u32>,
    pub posts_per_read: Option<u32>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            preset: "memc_low".into(),
            ops: None,
            set_ratio: None,
            key_size: None,
            value_size: None,
            keyspace: None,
            zipf_s: None,
            post_text_len: None,
            posts_per_read: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workload: WorkloadSpec,
    pub seed: u64,
    pub requests: u64,
    /// Calibration profile loaded underneath `system.calibration`.
    pub calibration_file: Option<PathBuf>,
    pub system: SystemConfig,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workload: WorkloadSpec::default(),
            seed: DEFAULT_SEED,
            requests: DEFAULT_REQUESTS,
            calibration_file: None,
            system: SystemConfig::default(),
            output: OutputSpec::default(),
        }
    }
}

/// A resolved run: everything the simulator needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedRun {
    pub system: SystemConfig,
    pub mix: WorkloadMix,
    pub output: OutputSpec,
}

impl ResolvedRun {
    /// SHA-256 over the canonical TOML of the system config and mix.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canon<'a> {
            system: &'a SystemConfig,
            workload: &'a WorkloadMix,
        }
        let text = toml::to_string(&Canon { system: &self.system, workload: &self.mix })
            .expect("configs always serialize");
        hex(&Sha256::digest(text.as_bytes()))
    }

    pub fn with_mode(&self, mode: Mode) -> ResolvedRun {
        let mut r = self.clone();
        r.system.mode = mode;
        r
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedRun, CliError> {
        let w = &self.workload;
        let mut mix = WorkloadMix::preset(&w.preset).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(ops) = &w.ops {
            mix.ops = ops.clone();
            mix.name = format!("{}_custom", w.preset);
        }
        if let Some(r) = w.set_ratio {
            mix.set_write_ratio(r);
        }
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = w.$f { mix.$f = v; } )* };
        }
        over!(key_size, value_size, keyspace, zipf_s, post_text_len, posts_per_read);
        let mix = mix.with_requests(self.requests).with_seed(self.seed);
        mix.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.system.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(ResolvedRun { system: self.system, mix, output: self.output.clone() })
    }
}

/// Parse `a.b.c=value`. The value is read as a TOML literal when it parses
/// as one and as a bare string otherwise.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = s.split_once('=').ok_or_else(|| CliError::Config(format!("override {s:?} lacks '='")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Config(format!("bad override key {key:?}")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((path, value))
}

pub fn set_path(table: &mut Table, path: &[String], value: Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut t = table;
    for p in parents {
        let entry = t.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        t = entry.as_table_mut().ok_or_else(|| CliError::Config(format!("{p} is not a table")))?;
    }
    t.insert(last.clone(), value);
    Ok(())
}

/// Overlay `top` onto `base`, recursing into tables.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Build a config table from an optional file plus overrides, then type it.
/// Relative calibration paths resolve against the config file's directory.
pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match file {
        Some(p) => read_table(p)?,
        None => Table::new(),
    };
    for o in overrides {
        let (path, v) = parse_override(o)?;
        set_path(&mut table, &path, v)?;
    }
    if let Some(cal) = table.get("calibration_file").and_then(Value::as_str) {
        let mut p = PathBuf::from(cal);
        if p.is_relative() {
            if let Some(dir) = file.and_then(Path::parent) {
                p = dir.join(p);
            }
        }
        let mut cal_table = read_table(&p)?;
        let system = table.entry("system").or_insert_with(|| Value::Table(Table::new()));
        let system = system.as_table_mut().ok_or_else(|| CliError::Config("system is not a table".into()))?;
        if let Some(Value::Table(inline)) = system.remove("calibration") {
            merge(&mut cal_table, inline);
        }
        system.insert("calibration".into(), Value::Table(cal_table));
    }
    Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

pub fn load_calibration(path: &Path) -> Result<Calibration, CliError> {
    Value::Table(read_table(path)?).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

pub fn calibration_toml(c: &Calibration) -> String {
    toml::to_string(c).expect("calibration always serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = load(None, &["system.latency.uc_interconnect_ns=700".into(), "workload.preset=post_mid".into()]).unwrap();
        assert_eq!(cfg.system.latency.uc_interconnect_ns, 700);
        assert_eq!(cfg.workload.preset, "post_mid");
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(load(None, &["system.latency.warp=1".into()]).is_err());
        assert!(load(None, &["nonsense=1".into()]).is_err());
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn bare_words_become_strings() {
        assert_eq!(parse_override("a=baseline").unwrap().1, Value::String("baseline".into()));
        assert_eq!(parse_override("a=5").unwrap().1, Value::Integer(5));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = RunConfig::default().resolve().unwrap();
        let mut b = RunConfig::default();
        b.seed = 2;
        assert_eq!(a.fingerprint(), RunConfig::default().resolve().unwrap().fingerprint());
        assert_ne!(a.fingerprint(), b.resolve().unwrap().fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }
}
