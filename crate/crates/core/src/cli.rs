//! Command-line front end: JSON run configuration, command dispatch and
//! output files.
//!
//! All lengths in configs, medium files and outputs are in wavelengths
//! (internally `k = 2 pi`). Output files are `<out>.<suffix>`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use nalgebra::Unit;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherence::{
    classify_emission, coherence_report, integrated, Classification, DensityOfStates, Detector, EmitterPair,
};
use crate::em2d::{Dir2, PolMode, Vec2};
use crate::error::{Error, Result};
use crate::io::{self, TOOL_VERSION};
use crate::scan::{
    self, alpha_bare_for_k_ell, classification_map, diffusion_diagnostics, dos_maps, find_extremal_detectors, g2_map,
    generate_medium, position_digest, FixedEmitter, GridSpec, MapGrid, MediumParams, ScanningEmitter, SearchOptions,
    SearchRegion, SearchTarget,
};
use crate::solver::{Medium2D, Rect, SystemFactorization, CONDITION_WARN};
use crate::validate;

pub const CONFIG_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        Error::Geometry(_) | Error::Packing { .. } => EXIT_GEOMETRY,
        Error::Io { .. } => EXIT_IO,
        Error::SpecFun(_)
        | Error::Singular { .. }
        | Error::DegenerateScatterer
        | Error::UndefinedCorrelation(_)
        | Error::UndefinedProjection
        | Error::FarFieldValidity(_) => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GenMedium,
    Diagnose,
    G2,
    G2Map,
    DosMaps,
    FindDetectors,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GenMedium => "gen-medium",
            Command::Diagnose => "diagnose",
            Command::G2 => "g2",
            Command::G2Map => "g2-map",
            Command::DosMaps => "dos-maps",
            Command::FindDetectors => "find-detectors",
            Command::Validate => "validate",
        }
    }
}

/// Parameters for a generated medium. `alpha_bare` wins over `k_ell`
/// when both are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub seed: u64,
    pub n_scatterers: usize,
    pub region: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_bare: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_ell: Option<f64>,
    pub exclusion_radius: f64,
    pub mode: PolMode,
}

impl Default for GenerateSpec {
    fn default() -> Self {
        GenerateSpec {
            seed: 42,
            n_scatterers: 300,
            region: Rect::centered(6.0, 6.0),
            alpha_bare: None,
            k_ell: Some(5.0),
            exclusion_radius: 0.05,
            mode: PolMode::Te,
        }
    }
}

impl GenerateSpec {
    pub fn params(&self) -> Result<MediumParams> {
        let alpha_bare = match (self.alpha_bare, self.k_ell) {
            (Some(a), _) => a,
            (None, Some(k_ell)) => alpha_bare_for_k_ell(k_ell, self.n_scatterers, &self.region, self.mode, 1.0)?,
            (None, None) => return Err(Error::Config("medium.generate needs alpha_bare or k_ell".into())),
        };
        Ok(MediumParams {
            seed: self.seed,
            n_scatterers: self.n_scatterers,
            region: self.region,
            alpha_bare,
            exclusion_radius: self.exclusion_radius,
            mode: self.mode,
            wavelength: 1.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MediumSpec {
    Generate(GenerateSpec),
    /// Medium file written by `gen-medium`.
    File(PathBuf),
}

impl Default for MediumSpec {
    fn default() -> Self {
        MediumSpec::Generate(GenerateSpec::default())
    }
}

/// Complex number as `[re, im]`.
pub type ComplexSpec = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub r: [f64; 2],
    /// Dipole orientation; normalized on use (ignored in TM).
    pub u: [f64; 2],
    pub p: ComplexSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmittersSpec {
    pub fixed: EmitterSpec,
    /// Second emitter; for maps only `u` and `p` are used.
    pub second: EmitterSpec,
}

impl Default for EmittersSpec {
    fn default() -> Self {
        EmittersSpec {
            fixed: EmitterSpec { r: [0.0, 0.0], u: [1.0, 0.0], p: [1.0, 0.0] },
            second: EmitterSpec { r: [1.0, 0.0], u: [1.0, 0.0], p: [1.0, 0.0] },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub r: [f64; 2],
    /// Selected field component (ignored in TM).
    pub e: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorsSpec {
    pub a: DetectorSpec,
    pub b: DetectorSpec,
}

impl Default for DetectorsSpec {
    fn default() -> Self {
        DetectorsSpec {
            a: DetectorSpec { r: [0.0, 10.0], e: [1.0, 0.0] },
            b: DetectorSpec { r: [0.0, -10.0], e: [1.0, 0.0] },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub region: SearchRegion,
    pub target: SearchTarget,
    pub coarse: usize,
    pub e_a: [f64; 2],
    pub e_b: [f64; 2],
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            region: SearchRegion::Ring { center: [0.0, 0.0], radius: 10.0 },
            target: SearchTarget::Maximize,
            coarse: 64,
            e_a: [1.0, 0.0],
            e_b: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub tol_super: f64,
    pub tol_sub: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tol_super: crate::coherence::DEFAULT_TOL_SUPER, tol_sub: crate::coherence::DEFAULT_TOL_SUB }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    pub seed: u64,
    pub random_cases: usize,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec { seed: 2024, random_cases: 2000 }
    }
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_out() -> String {
    "g2scatter".into()
}

fn default_wavelength_nm() -> f64 {
    698.0
}

/// Versioned run configuration. Every field except `version` has a
/// default; the defaults reproduce the disordered-medium map setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub medium: MediumSpec,
    #[serde(default)]
    pub emitters: EmittersSpec,
    #[serde(default)]
    pub detectors: DetectorsSpec,
    #[serde(default = "scan::default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub search: SearchSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub validate: ValidateSpec,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Physical wavelength, used for labels only.
    #[serde(default = "default_wavelength_nm")]
    pub wavelength_nm: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            command: None,
            medium: MediumSpec::default(),
            emitters: EmittersSpec::default(),
            detectors: DetectorsSpec::default(),
            grid: scan::default_grid(),
            search: SearchSpec::default(),
            thresholds: Thresholds::default(),
            validate: ValidateSpec::default(),
            out: default_out(),
            threads: None,
            wavelength_nm: default_wavelength_nm(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Parser)]
#[command(name = "g2scatter", version, about = "Photon correlations of two emitters in 2D scattering media")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<CliCommand>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the medium seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (output does not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output path prefix.
    #[arg(long, global = true)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CliCommand {
    /// Generate a random medium and write it as JSON.
    GenMedium,
    /// Diffusive-regime diagnostics and conditioning of a medium.
    Diagnose,
    /// Correlation report for two emitters and two detectors.
    G2,
    /// Integrated correlation map with one emitter fixed.
    G2Map,
    /// LDOS and CDOS maps.
    DosMaps,
    /// Detector pair maximizing or minimizing g2.
    FindDetectors,
    /// Run the self-check suite.
    Validate,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::GenMedium => Command::GenMedium,
            CliCommand::Diagnose => Command::Diagnose,
            CliCommand::G2 => Command::G2,
            CliCommand::G2Map => Command::G2Map,
            CliCommand::DosMaps => Command::DosMaps,
            CliCommand::FindDetectors => Command::FindDetectors,
            CliCommand::Validate => Command::Validate,
        }
    }
}

/// Merges flags into the config file (or the defaults).
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match (cli.command.map(Command::from), cfg.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!(
                "command {} on the command line conflicts with {} in the config",
                a.name(),
                b.name()
            )))
        }
        (Some(a), _) => cfg.command = Some(a),
        (None, Some(_)) => {}
        (None, None) => return Err(Error::Config("no command given".into())),
    }
    if let Some(seed) = cli.seed {
        match &mut cfg.medium {
            MediumSpec::Generate(g) => g.seed = seed,
            MediumSpec::File(_) => return Err(Error::Config("--seed needs a generated medium".into())),
        }
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cfg.threads == Some(0) {
        return Err(Error::Config("threads must be positive".into()));
    }
    Ok(cfg)
}

fn dir(v: [f64; 2], what: &str) -> Result<Dir2> {
    let v = Vec2::new(v[0], v[1]);
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Config(format!("{what} must be a nonzero finite vector")));
    }
    Ok(Unit::new_normalize(v))
}

fn point(v: [f64; 2]) -> Vec2 {
    Vec2::new(v[0], v[1])
}

fn cplx(v: ComplexSpec) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// Medium described by a config, plus its digest.
pub fn build_medium(cfg: &RunConfig) -> Result<Medium2D> {
    match &cfg.medium {
        MediumSpec::Generate(g) => generate_medium(&g.params()?),
        MediumSpec::File(path) => {
            let text =
                fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
            let m: Medium2D =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if (m.k - 2.0 * std::f64::consts::PI).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "{}: medium files must use wavelength units (k = 2 pi)",
                    path.display()
                )));
            }
            Ok(m)
        }
    }
}

fn emitter_pair(cfg: &RunConfig) -> Result<EmitterPair> {
    let e = &cfg.emitters;
    Ok(EmitterPair {
        r1: point(e.fixed.r),
        r2: point(e.second.r),
        u1: dir(e.fixed.u, "emitters.fixed.u")?,
        u2: dir(e.second.u, "emitters.second.u")?,
        p1: cplx(e.fixed.p),
        p2: cplx(e.second.p),
    })
}

fn detector(d: &DetectorSpec, what: &str) -> Result<Detector> {
    Ok(Detector { r: point(d.r), e: dir(d.e, what)? })
}

/// Key/value provenance lines common to every run.
pub struct Provenance {
    pub lines: Vec<(String, String)>,
}

impl Provenance {
    fn new(cfg: &RunConfig, medium: &Medium2D, k_ell: Option<f64>) -> Self {
        let seed = medium.metadata.seed.map_or("none".to_string(), |s| s.to_string());
        let params = serde_json::to_string(&cfg.medium).expect("medium spec serializes");
        let lines = vec![
            ("tool".into(), TOOL_VERSION.to_string()),
            ("command".into(), cfg.command.map_or("none", Command::name).to_string()),
            ("seed".into(), seed),
            ("mode".into(), medium.mode.name().to_string()),
            ("n_scatterers".into(), medium.scatterers.len().to_string()),
            ("medium_digest".into(), position_digest(medium)),
            ("k_ell".into(), k_ell.map_or("none".to_string(), |v| format!("{v:?}"))),
            ("wavelength_nm".into(), format!("{:?}", cfg.wavelength_nm)),
            ("parameters".into(), params),
        ];
        Provenance { lines }
    }

    pub fn header(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }

    fn json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.lines.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect(),
        )
    }
}

fn out_path(cfg: &RunConfig, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", cfg.out))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn k_ell_of(medium: &Medium2D) -> Result<Option<f64>> {
    if medium.scatterers.is_empty() {
        Ok(None)
    } else {
        Ok(Some(diffusion_diagnostics(medium)?.k_ell))
    }
}

fn assemble(medium: Medium2D) -> Result<SystemFactorization> {
    let fact = SystemFactorization::assemble(medium)?;
    if fact.condition_estimate() > CONDITION_WARN {
        warn!("interaction matrix is ill-conditioned ({:e})", fact.condition_estimate());
    }
    Ok(fact)
}

fn stamp(grid: &mut MapGrid, k_ell: Option<f64>, prov: &Provenance) {
    grid.metadata.k_ell = k_ell;
    grid.metadata.parameters = prov.lines.iter().find(|(k, _)| k == "parameters").map(|(_, v)| v.clone());
}

fn export_raster(cfg: &RunConfig, grid: &MapGrid, stem: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let csv = out_path(cfg, &format!("{stem}.csv"));
    let pgm = out_path(cfg, &format!("{stem}.pgm"));
    io::export_csv(grid, &csv)?;
    io::export_pgm(grid, &pgm)?;
    written.push(csv);
    written.push(io::mask_path(&pgm));
    written.push(pgm);
    Ok(())
}

/// Summary of a finished run.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit: i32,
    pub header: String,
    pub summary: serde_json::Value,
    pub files: Vec<PathBuf>,
}

/// Executes a resolved configuration in the current thread pool.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    let command = cfg.command.ok_or_else(|| Error::Config("no command given".into()))?;
    if command == Command::Validate {
        return run_validate(cfg);
    }
    let medium = build_medium(cfg)?;
    let k_ell = k_ell_of(&medium)?;
    let prov = Provenance::new(cfg, &medium, k_ell);
    let mut files = Vec::new();
    let mut summary = serde_json::Map::new();
    summary.insert("provenance".into(), prov.json());

    match command {
        Command::GenMedium => {
            let path = out_path(cfg, "medium.json");
            write_json(&path, &medium)?;
            files.push(path);
        }
        Command::Diagnose => {
            let diag = if medium.scatterers.is_empty() { None } else { Some(diffusion_diagnostics(&medium)?) };
            let fact = assemble(medium)?;
            summary.insert("diagnostics".into(), serde_json::to_value(diag).expect("serializes"));
            summary.insert("condition_estimate".into(), fact.condition_estimate().into());
        }
        Command::G2 => {
            let fact = assemble(medium)?;
            let em = emitter_pair(cfg)?;
            let da = detector(&cfg.detectors.a, "detectors.a.e")?;
            let db = detector(&cfg.detectors.b, "detectors.b.e")?;
            let t = cfg.thresholds;
            let rep = coherence_report(&fact, &em, &da, &db, t.tol_super, t.tol_sub)?;
            let det = integrated(&fact, &em)?;
            let dos = DensityOfStates::compute(&fact, &em)?;
            let class = classify_emission(&fact, &em, t.tol_super, t.tol_sub)?;
            summary.insert(
                "detectors".into(),
                serde_json::json!({
                    "g2": rep.g2,
                    "amplitude_residual": rep.amplitude_residual,
                    "phase_residual": rep.phase_residual,
                    "subradiance_residual": rep.subradiance_residual,
                    "projected_state": [
                        [rep.projected_amplitudes.0.re, rep.projected_amplitudes.0.im],
                        [rep.projected_amplitudes.1.re, rep.projected_amplitudes.1.im]
                    ],
                    "classification": class_name(rep.classification),
                }),
            );
            summary.insert(
                "integrated".into(),
                serde_json::json!({
                    "p1": det.p1,
                    "p2": det.p2,
                    "big_g2": det.big_g2,
                    "classification": class_name(class.classification),
                    "power_imbalance": class.power_imbalance,
                    "cdos_deficit": class.cdos_deficit,
                }),
            );
            summary.insert("density_of_states".into(), serde_json::to_value(dos).expect("serializes"));
            let path = out_path(cfg, "g2.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
        Command::G2Map => {
            let fact = assemble(medium)?;
            let e = &cfg.emitters;
            let fixed =
                FixedEmitter { r: point(e.fixed.r), u: dir(e.fixed.u, "emitters.fixed.u")?, p: cplx(e.fixed.p) };
            let scanning = ScanningEmitter { u: dir(e.second.u, "emitters.second.u")?, p: cplx(e.second.p) };
            let mut map = g2_map(&fact, &fixed, &scanning, &cfg.grid)?;
            stamp(&mut map, k_ell, &prov);
            let class = classification_map(&map, cfg.thresholds.tol_super, cfg.thresholds.tol_sub);
            summary.insert("g2".into(), raster_summary(&map));
            export_raster(cfg, &map, "g2", &mut files)?;
            export_raster(cfg, &class, "class", &mut files)?;
        }
        Command::DosMaps => {
            let fact = assemble(medium)?;
            let e = &cfg.emitters;
            let (mut ldos, mut cdos) = dos_maps(
                &fact,
                &point(e.fixed.r),
                &dir(e.fixed.u, "emitters.fixed.u")?,
                &dir(e.second.u, "emitters.second.u")?,
                &cfg.grid,
            )?;
            stamp(&mut ldos, k_ell, &prov);
            stamp(&mut cdos, k_ell, &prov);
            summary.insert("ldos".into(), raster_summary(&ldos));
            summary.insert("cdos".into(), raster_summary(&cdos));
            export_raster(cfg, &ldos, "ldos", &mut files)?;
            export_raster(cfg, &cdos, "cdos", &mut files)?;
        }
        Command::FindDetectors => {
            let fact = assemble(medium)?;
            let em = emitter_pair(cfg)?;
            let s = &cfg.search;
            let opts =
                SearchOptions { coarse: s.coarse, e_a: dir(s.e_a, "search.e_a")?, e_b: dir(s.e_b, "search.e_b")? };
            let found = find_extremal_detectors(&fact, &em, &s.region, s.target, &opts)?;
            summary.insert(
                "detectors".into(),
                serde_json::json!({
                    "a": [found.da.r[0], found.da.r[1]],
                    "b": [found.db.r[0], found.db.r[1]],
                    "g2": found.g2,
                }),
            );
            let path = out_path(cfg, "detectors.json");
            write_json(&path, &summary)?;
            files.push(path);
        }
        Command::Validate => unreachable!(),
    }
    Ok(RunOutcome { exit: EXIT_OK, header: prov.header(), summary: serde_json::Value::Object(summary), files })
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::Superradiant => "superradiant",
        Classification::Subradiant => "subradiant",
        Classification::Intermediate => "intermediate",
    }
}

fn raster_summary(grid: &MapGrid) -> serde_json::Value {
    let finite: Vec<f64> = grid.values.iter().copied().filter(|v| !v.is_nan()).collect();
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    serde_json::json!({
        "nx": grid.spec.nx,
        "ny": grid.spec.ny,
        "missing": grid.values.len() - finite.len(),
        "min": if finite.is_empty() { None } else { Some(min) },
        "max": if finite.is_empty() { None } else { Some(max) },
    })
}

fn run_validate(cfg: &RunConfig) -> Result<RunOutcome> {
    let checks = validate::run_suite(cfg.validate.seed, cfg.validate.random_cases)?;
    let all = checks.iter().all(|c| c.passed);
    let mut header = format!("# tool: {TOOL_VERSION}\n# command: validate\n# seed: {}\n", cfg.validate.seed);
    for c in &checks {
        let _ = writeln!(
            header,
            "{} {} worst={:e} tol={:e} cases={}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance,
            c.cases
        );
    }
    Ok(RunOutcome {
        exit: if all { EXIT_OK } else { EXIT_NUMERICAL },
        header,
        summary: serde_json::json!({ "passed": all, "checks": checks }),
        files: Vec::new(),
    })
}

/// Runs a resolved configuration inside a pool sized by `threads`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    info!("running {} on {} threads", cfg.command.map_or("none", Command::name), pool.current_num_threads());
    pool.install(|| execute(cfg))
}

/// Full entry point: parses `args`, runs, prints, returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = resolve(&cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            print!("{}", o.header);
            println!("{}", serde_json::to_string_pretty(&o.summary).expect("summary serializes"));
            for f in &o.files {
                println!("# wrote: {}", f.display());
            }
            o.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
