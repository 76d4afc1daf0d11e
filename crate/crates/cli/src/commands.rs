use crate::config::{MatchSource, ProviderName, RunConfig};
use psreg_core::dataset::{
    generate_sample, read_sample, write_sample, DatasetSample, GenerationParams, LobeLabels, Patient, PatientConfig,
};
use psreg_core::geometry::{write_ply_cloud, write_tet_mesh, PlyEncoding};
use psreg_core::matching::{CorrespondenceSet, OracleFeatureParams};
use psreg_core::metrics::{aggregate, Report, SampleRecord};
use psreg_core::phantom::Phantom;
use psreg_core::workflow::{
    gt_correspondences, match_sample, read_match_metrics, read_reg_metrics, register_sample, write_match_outcome,
    write_oracle_features, write_register_outcome, MatchOptions, Provider, RegisterOptions, MATCHES_FILE,
    MATCH_METRICS_FILE, REGISTRATION_DIR, REG_METRICS_FILE,
};
use psreg_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const TIMINGS_LOG: &str = "timings.log";
pub const ORACLE_FEATURES_FILE: &str = "oracle_features.bin";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

/// Failures that carry their own exit code.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// Evaluation finished but some samples lacked outputs.
    Incomplete(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(Error::Config(_)) => 2,
            Failure::Core(Error::NotConverged { .. } | Error::Indefinite { .. } | Error::Singular(_)) => 4,
            Failure::Core(
                Error::Io { .. }
                | Error::Parse { .. }
                | Error::InvalidInput(_)
                | Error::Schema(_)
                | Error::Element { .. }
                | Error::Crop(_)
                | Error::Json { .. },
            ) => 3,
            Failure::Incomplete(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Incomplete(names) => write!(f, "incomplete samples excluded: {}", names.join(", ")),
        }
    }
}

pub fn sample_dir_name(seed: u64) -> String {
    format!("sample_{seed:06}")
}

fn log_timing(dir: &Path, line: &str) -> Result<()> {
    let path = dir.join(TIMINGS_LOG);
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::Io { path: path.clone(), source: e })?;
    writeln!(f, "{line}").map_err(|e| Error::Io { path, source: e })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn require<'a, T>(value: &'a Option<T>, what: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::Config(format!("no {what} given (flag or run config)")))
}

pub fn load_patient(cfg: &RunConfig) -> Result<Patient> {
    let path = require(&cfg.patient, "patient")?;
    Patient::load(&PatientConfig::from_file(path)?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Writes samples `seed..seed + count` under `out`, one directory each.
pub fn generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = require(&cfg.out, "output directory")?;
    let patient = load_patient(cfg)?;
    create_dir(out)?;
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + cfg.count as u64).collect();
    let results: Vec<Result<(PathBuf, f64)>> = pool(cfg.workers)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let t = Instant::now();
                let sample = generate_sample(&patient, seed)?;
                let dir = out.join(sample_dir_name(seed));
                write_sample(&sample, &dir)?;
                Ok((dir, t.elapsed().as_secs_f64()))
            })
            .collect()
    });
    let mut dirs = Vec::with_capacity(results.len());
    for r in results {
        let (dir, secs) = r?;
        let name = dir.file_name().unwrap().to_string_lossy().to_string();
        println!("generated {name} in {secs:.3} s");
        log_timing(out, &format!("generate {name} {secs:.6}"))?;
        dirs.push(dir);
    }
    Ok(dirs)
}

fn match_options(cfg: &RunConfig, sample_dir: &Path) -> Result<MatchOptions> {
    let m = &cfg.matching;
    let provider = match m.provider {
        ProviderName::Fpfh => Provider::Fpfh,
        ProviderName::FeaturesFile => Provider::FeaturesFile(require(&m.features, "features file")?.clone()),
        ProviderName::Oracle => Provider::FeaturesFile(sample_dir.join(ORACLE_FEATURES_FILE)),
        ProviderName::Network => Provider::Network {
            weights: require(&m.weights, "weights file")?.clone(),
            heads: m.heads,
            voxel_size: m.voxel_size,
        },
    };
    Ok(MatchOptions {
        provider,
        matching: m.matching(),
        fpfh: m.fpfh,
    })
}

/// Matches one sample directory and writes `matches.json` and its metrics.
pub fn match_dir(cfg: &RunConfig, sample_dir: &Path, sample: &DatasetSample) -> Result<()> {
    if cfg.matching.provider == ProviderName::Oracle {
        write_oracle_features(sample, &cfg.matching.oracle, &sample_dir.join(ORACLE_FEATURES_FILE))?;
    }
    let outcome = match_sample(sample, &match_options(cfg, sample_dir)?)?;
    write_match_outcome(sample_dir, &outcome)?;
    let m = outcome.metrics;
    println!(
        "{}: MS {:.2} %  IR {:.2} %  matches {}",
        sample_dir.display(),
        m.matching_score,
        m.inlier_ratio,
        m.predicted_count
    );
    Ok(())
}

pub fn match_command(cfg: &RunConfig, sample_dir: &Path) -> Result<()> {
    let sample = read_sample(sample_dir)?;
    let t = Instant::now();
    match_dir(cfg, sample_dir, &sample)?;
    log_timing(sample_dir, &format!("match {:.6}", t.elapsed().as_secs_f64()))
}

/// Registers one sample; `matches_file` overrides the configured match source.
pub fn register_dir(
    cfg: &RunConfig,
    patient: &Patient,
    sample_dir: &Path,
    sample: &DatasetSample,
    matches_file: Option<&Path>,
    out: &Path,
) -> Result<()> {
    psreg_core::workflow::check_patient(patient, sample)?;
    let matches = match (matches_file, cfg.registration.matches) {
        (Some(path), _) => CorrespondenceSet::read_json(path)?,
        (None, MatchSource::Gt) => gt_correspondences(sample),
        (None, MatchSource::Predicted) => CorrespondenceSet::read_json(sample_dir.join(MATCHES_FILE))?,
    };
    let options = RegisterOptions {
        registration: cfg.registration.fem,
        prealign: cfg.registration.prealign,
    };
    let outcome = register_sample(&patient.volume, sample, &matches, &options)?;
    write_register_outcome(out, sample, &outcome)?;
    let m = &outcome.metrics;
    println!(
        "{}: TRE {:.3} mm (unregistered {:.3} mm)  FRE {:.3} mm  HD {:.3} mm",
        sample_dir.display(),
        m.tre.mean,
        m.tre_initial.mean,
        m.fre.mean,
        m.hausdorff
    );
    Ok(())
}

pub fn register_command(cfg: &RunConfig, sample_dir: &Path, matches_file: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let patient = load_patient(cfg)?;
    let sample = read_sample(sample_dir)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| sample_dir.join(REGISTRATION_DIR));
    let t = Instant::now();
    register_dir(cfg, &patient, sample_dir, &sample, matches_file, &out)?;
    log_timing(sample_dir, &format!("register {:.6}", t.elapsed().as_secs_f64()))
}

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    report: &'a Report,
    incomplete: &'a [String],
}

/// Aggregates every sample directory under `run`. Samples missing an output
/// that other samples have are reported as incomplete and left out.
pub fn evaluate(run: &Path) -> std::result::Result<Report, Failure> {
    let entries = fs::read_dir(run).map_err(|e| Error::Io {
        path: run.to_path_buf(),
        source: e,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("meta.json").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no sample directories", run.display())).into());
    }
    let stages = [MATCH_METRICS_FILE.to_string(), format!("{REGISTRATION_DIR}/{REG_METRICS_FILE}")];
    let expected: Vec<&String> = stages.iter().filter(|s| dirs.iter().any(|d| d.join(s).is_file())).collect();
    if expected.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no sample has metrics yet", run.display())).into());
    }
    let mut records = Vec::new();
    let mut incomplete = Vec::new();
    for dir in &dirs {
        let name = dir.file_name().unwrap().to_string_lossy().to_string();
        if expected.iter().any(|s| !dir.join(s).is_file()) {
            incomplete.push(name);
            continue;
        }
        let mut values = BTreeMap::new();
        if dir.join(MATCH_METRICS_FILE).is_file() {
            read_match_metrics(dir)?.record_values(&mut values);
        }
        let reg = dir.join(REGISTRATION_DIR);
        if reg.join(REG_METRICS_FILE).is_file() {
            read_reg_metrics(&reg)?.record_values(&mut values);
        }
        records.push(SampleRecord { sample: name, values });
    }
    if records.is_empty() {
        return Err(Failure::Incomplete(incomplete));
    }
    let report = aggregate(records)?;
    let json = serde_json::to_string_pretty(&ReportFile {
        report: &report,
        incomplete: &incomplete,
    })
    .expect("report serializes");
    let write = |name: &str, text: String| {
        let path = run.join(name);
        fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
    };
    write(REPORT_JSON, json + "\n")?;
    write(REPORT_TXT, report.table())?;
    print!("{}", report.table());
    if incomplete.is_empty() {
        Ok(report)
    } else {
        Err(Failure::Incomplete(incomplete))
    }
}

/// generate, match, register and evaluate in one run.
pub fn pipeline(cfg: &RunConfig) -> std::result::Result<Report, Failure> {
    let out = require(&cfg.out, "output directory")?.clone();
    let patient = load_patient(cfg)?;
    create_dir(&out)?;
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + cfg.count as u64).collect();
    let results: Vec<Result<(String, [f64; 3])>> = pool(cfg.workers)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let name = sample_dir_name(seed);
                let dir = out.join(&name);
                let t = Instant::now();
                let sample = generate_sample(&patient, seed)?;
                write_sample(&sample, &dir)?;
                let t_gen = t.elapsed().as_secs_f64();
                let t = Instant::now();
                match_dir(cfg, &dir, &sample)?;
                let t_match = t.elapsed().as_secs_f64();
                let t = Instant::now();
                register_dir(cfg, &patient, &dir, &sample, None, &dir.join(REGISTRATION_DIR))?;
                Ok((name, [t_gen, t_match, t.elapsed().as_secs_f64()]))
            })
            .collect()
    });
    let mut first_error = None;
    for r in results {
        match r {
            Ok((name, [g, m, reg])) => log_timing(&out, &format!("pipeline {name} {g:.6} {m:.6} {reg:.6}"))?,
            Err(e) => {
                eprintln!("error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e.into());
    }
    evaluate(&out)
}

/// Writes a synthetic liver-like patient: surface PLY, tet mesh, lobe labels
/// and a `patient.toml` referencing them.
pub fn phantom(out: &Path, surface_frequency: usize, tet_resolution: usize) -> Result<PathBuf> {
    if surface_frequency == 0 || tet_resolution == 0 {
        return Err(Error::Config("phantom resolutions must be positive".into()));
    }
    create_dir(out)?;
    let p = Phantom::liver(surface_frequency, tet_resolution);
    let cloud = p.surface.to_cloud();
    write_ply_cloud(out.join("surface.ply"), &cloud, Some(&p.surface.faces), PlyEncoding::BinaryF64)?;
    write_tet_mesh(out.join("volume.tet"), &p.volume)?;
    let labels = serde_json::to_string(&p.lobe_labels).expect("labels serialize");
    let labels_path = out.join("lobe_labels.json");
    fs::write(&labels_path, labels + "\n").map_err(|e| Error::Io {
        path: labels_path,
        source: e,
    })?;
    let config = PatientConfig {
        surface_mesh: "surface.ply".into(),
        tet_mesh: "volume.tet".into(),
        lobe_labels: LobeLabels::File("lobe_labels.json".into()),
        generation: GenerationParams::default(),
    };
    let path = out.join("patient.toml");
    fs::write(&path, config.to_toml_string()).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!(
        "phantom: {} surface vertices, {} tetrahedra -> {}",
        p.surface.vertices.len(),
        p.volume.tets.len(),
        path.display()
    );
    Ok(path)
}

pub fn oracle_features(sample_dir: &Path, out: Option<&Path>, params: &OracleFeatureParams) -> Result<PathBuf> {
    let sample = read_sample(sample_dir)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| sample_dir.join(ORACLE_FEATURES_FILE));
    write_oracle_features(&sample, params, &path)?;
    println!("oracle features -> {}", path.display());
    Ok(path)
}
