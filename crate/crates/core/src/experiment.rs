//! Batch experiments: config files, built-in presets and the on-disk layout
//! of a finished run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ite::{GroundState, MAX_ED_QUBITS};
use crate::mqite::{run_mqite, MQITEConfig, RunRecord};
use crate::problems::{nuclear_data_checksum, ProblemSpec};
use crate::qse::{build_subspace, solve_gev, QseResult, DEFAULT_SVD_CUT};

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    1
}

fn default_cut() -> f64 {
    DEFAULT_SVD_CUT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QseSettings {
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_cut")]
    pub svd_cut: f64,
}

impl Default for QseSettings {
    fn default() -> Self {
        QseSettings { stride: 1, svd_cut: DEFAULT_SVD_CUT }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub mqite: MQITEConfig,
    /// Output directory; callers supply one when absent.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    /// Also write `ite_trajectory.csv`.
    #[serde(default = "default_true")]
    pub compare_ite: bool,
    #[serde(default)]
    pub qse: Option<QseSettings>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.mqite.validate()?;
        if let Some(q) = &self.qse {
            if q.stride == 0 {
                return Err(Error::InvalidArgument("qse.stride must be at least 1".into()));
            }
            if !(q.svd_cut > 0.0) {
                return Err(Error::InvalidArgument("qse.svd_cut must be positive".into()));
            }
        }
        Ok(())
    }

    /// QSE settings when post-processing is requested either way.
    pub fn qse_settings(&self) -> Option<QseSettings> {
        match (&self.qse, self.mqite.qse_enabled) {
            (Some(q), _) => Some(q.clone()),
            (None, true) => Some(QseSettings::default()),
            (None, false) => None,
        }
    }
}

/// Built-in configurations, sorted by name.
pub fn presets() -> Vec<(&'static str, ExperimentConfig)> {
    let base = |problem, mqite| ExperimentConfig { problem, mqite, outputs: None, compare_ite: true, qse: None };
    let mut v = vec![
        (
            "maxcut-10",
            ExperimentConfig {
                qse: Some(QseSettings::default()),
                ..base(
                    // seed 15 is the widest-gap instance among seeds 0..20; it is converged by T = 3
                    ProblemSpec::Maxcut { n: 10, k: 3, j: 1.0, seed: 15 },
                    MQITEConfig { delta: 0.1, total_time: 3.0, epsilon: 2, eta_cap: 100, chi: 1000, qse_enabled: true, ..Default::default() },
                )
            },
        ),
        (
            "nuclear-pshell",
            base(
                ProblemSpec::NuclearPshell { occupied: None },
                MQITEConfig { delta: 0.05, total_time: 1.0, epsilon: 3, eta_cap: 36, chi: 1000, ..Default::default() },
            ),
        ),
        (
            "tfim-10",
            base(
                ProblemSpec::Tfim { n: 10, j: 1.0, h_x: 1.0 },
                MQITEConfig { delta: 0.1, total_time: 3.0, epsilon: 2, eta_cap: 100, chi: 1000, ..Default::default() },
            ),
        ),
        (
            "validation-6q",
            base(
                ProblemSpec::Validation6q,
                MQITEConfig { delta: 0.3, total_time: 3.0, epsilon: 2, eta_cap: 100, chi: 100, ..Default::default() },
            ),
        ),
    ];
    v.sort_by_key(|(name, _)| *name);
    v
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    presets()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{name}`")))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub problem: String,
    pub seed: u64,
    pub crate_version: String,
    /// Seconds since the Unix epoch at start and end of the run.
    pub started: u64,
    pub finished: u64,
    pub hamiltonian_sha256: String,
    pub data_sha256: Option<String>,
    /// SHA-256 of every other file written to the output directory.
    pub files: BTreeMap<String, String>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub record: RunRecord,
    pub exact: Option<GroundState>,
    pub qse: Option<QseResult>,
    pub manifest: Manifest,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the experiment without touching the disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<(RunRecord, Option<GroundState>, Option<QseResult>)> {
    cfg.validate()?;
    let problem = cfg.problem.build()?;
    let h = &problem.hamiltonian;
    let exact = if h.n() <= MAX_ED_QUBITS { Some(problem.exact_ground()?) } else { None };
    let mut mq = cfg.mqite.clone();
    if mq.prep.is_none() {
        mq.prep = Some(problem.prep.clone());
    }
    info!("{}: {} qubits, {} terms, {} sweeps", cfg.problem.name(), h.n(), h.len(), mq.sweeps());
    let record = run_mqite(h, &mq, exact.as_ref())?;
    let qse = match cfg.qse_settings() {
        Some(q) => Some(solve_gev(&build_subspace(&record, h, q.stride)?, q.svd_cut)?),
        None => None,
    };
    Ok((record, exact, qse))
}

/// Runs the experiment and writes its artifacts into `out`, creating it if needed.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let started = now();
    let (record, exact, qse) = execute(cfg)?;
    fs::create_dir_all(out)?;
    let mut files = BTreeMap::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        fs::write(out.join(name), &bytes)?;
        files.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    };
    put("run.json", record.to_json()?.into_bytes())?;
    let mut buf = Vec::new();
    record.write_trajectory_csv(&mut buf)?;
    put("trajectory.csv", buf)?;
    if cfg.compare_ite {
        let mut buf = Vec::new();
        record.write_ite_csv(&mut buf)?;
        put("ite_trajectory.csv", buf)?;
    }
    let mut buf = Vec::new();
    record.write_gates_csv(&mut buf)?;
    put("gates.csv", buf)?;
    if let Some(q) = &qse {
        put("qse.json", serde_json::to_string_pretty(q)?.into_bytes())?;
    }
    let problem = cfg.problem.build()?;
    if let Some(g) = &problem.graph {
        put("graph.csv", g.edges_csv().into_bytes())?;
    }
    let manifest = Manifest {
        problem: cfg.problem.name().to_string(),
        seed: cfg.mqite.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        hamiltonian_sha256: sha256_hex(problem.hamiltonian.to_text().as_bytes()),
        data_sha256: matches!(cfg.problem, ProblemSpec::NuclearPshell { .. }).then(|| nuclear_data_checksum().to_string()),
        files,
        config: cfg.clone(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(Outcome { record, exact, qse, manifest })
}

/// Process exit status for an error: 2 for bad input, 3 for numerical failure, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::Annihilated { .. } | Error::NotNormalized(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_sorted_and_valid() {
        let p = presets();
        let names: Vec<_> = p.iter().map(|(n, _)| *n).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(names, ["maxcut-10", "nuclear-pshell", "tfim-10", "validation-6q"]);
        for (_, c) in &p {
            c.validate().unwrap();
            let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
            assert_eq!(&back, c);
        }
        let m = preset("maxcut-10").unwrap().mqite;
        assert_eq!((m.delta, m.total_time, m.chi, m.epsilon, m.eta_cap), (0.1, 3.0, 1000, 2, 100));
        assert_eq!(preset("nuclear-pshell").unwrap().mqite.delta, 0.05);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&preset("tfim-10").unwrap().to_json().unwrap()).unwrap();
        v["mqite"]["detla"] = 0.1.into();
        let e = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        let mut v: serde_json::Value = serde_json::from_str(&preset("tfim-10").unwrap().to_json().unwrap()).unwrap();
        v["extra"] = 1.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn small_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a/b");
        let cfg = ExperimentConfig {
            problem: ProblemSpec::Tfim { n: 3, j: 1.0, h_x: 1.0 },
            mqite: MQITEConfig { delta: 0.1, total_time: 0.3, ..Default::default() },
            outputs: None,
            compare_ite: true,
            qse: Some(QseSettings::default()),
        };
        let o = run_experiment(&cfg, &out).unwrap();
        for f in ["run.json", "trajectory.csv", "ite_trajectory.csv", "gates.csv", "qse.json", "manifest.json"] {
            assert!(out.join(f).exists(), "{f}");
        }
        assert_eq!(o.record.sweeps.len(), 4);
        assert!(o.qse.unwrap().energy <= o.record.final_sweep().energy + 1e-9);
        let m: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.files["trajectory.csv"], sha256_hex(&fs::read(out.join("trajectory.csv")).unwrap()));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
    }
}
