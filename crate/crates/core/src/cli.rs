//! Deterministic job runner behind the `planar-opoly` binary.
//!
//! Every subcommand reads one JSON config, validates it, and writes CSV
//! (17 significant digits) or JSON files into the output directory.  Each
//! file starts with a metadata header carrying the crate version and the
//! SHA-256 of the canonical config; there is no timestamp, so identical
//! configs give byte-identical files.
//!
//! Exit codes: 0 success, 2 schema violation (with the field path),
//! 3 numerical stage failure (with the stage tag).

use crate::acceptance;
use crate::droplet::{Droplet, DropletOptions};
use crate::error::Error;
use crate::expansion::{expand, CoefficientPayload, QuasiPolynomial};
use crate::flow::{delta_m, FlowFamily, FlowOptions};
use crate::oracle::{compute_moments, gram_schmidt, QuadratureConfig};
use crate::potential::Potential;
use crate::universality::{
    berezin_density, compare_erf, real_grid, rescaled_density, square_grid, DensitySource,
    ExpansionDensity, GinibreKernel, KernelSource, OracleKernel,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Subcommands of the runner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Droplet,
    Expand,
    Oracle,
    Density,
    Berezin,
    Flow,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Droplet => "droplet",
            Command::Expand => "expand",
            Command::Oracle => "oracle",
            Command::Density => "density",
            Command::Berezin => "berezin",
            Command::Flow => "flow",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Stage { .. } => 3,
        }
    }

    fn schema(path: &str, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    fn io(e: std::io::Error, what: &Path) -> Self {
        CliError::Stage {
            stage: "io".into(),
            message: format!("{}: {e}", what.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Stage {
            stage: e.stage().into(),
            message: e.to_string(),
        }
    }
}

fn default_potential() -> Potential {
    Potential::ginibre()
}
fn default_kappa() -> usize {
    1
}
fn default_modes() -> usize {
    256
}
fn default_digits() -> u32 {
    150
}

/// Top-level job configuration.  Unknown fields are rejected everywhere.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default = "default_potential")]
    pub potential: Potential,
    /// Mass `τ`; alternatively give `n` and `m` (then `τ = n/m`).
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: usize,
    /// Circle-function resolution (power of two).
    #[serde(default = "default_modes")]
    pub n_modes: usize,
    /// Decimal digits of the oracle arithmetic.
    #[serde(default = "default_digits")]
    pub digits: u32,
    /// Admissible mass window `[τ_lo, τ_hi]` for this potential; the
    /// resolved `τ` must lie inside it.  Absent means unrestricted.
    #[serde(default)]
    pub tau_window: Option<[f64; 2]>,
    #[serde(default)]
    pub droplet: DropletSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub berezin: BerezinSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropletSection {
    /// Masses whose boundary curves are emitted.
    pub taus: Vec<f64>,
    pub points: usize,
}

impl Default for DropletSection {
    fn default() -> Self {
        DropletSection {
            taus: vec![0.25, 0.5, 0.75, 1.0],
            points: 256,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Highest degree of the reference polynomials.
    pub n_max: usize,
    /// Degrees compared against the quasipolynomials.
    pub degrees: Vec<usize>,
    /// Level `|φ_τ(z)|` of the comparison curve.
    pub curve_radius: f64,
    pub points: usize,
    pub quadrature: QuadratureConfig,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            n_max: 40,
            degrees: vec![36, 38, 40],
            curve_radius: 1.4,
            points: 64,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySourceKind {
    /// Closed-form Ginibre kernel (Ginibre potential only).
    Exact,
    /// Extended-precision oracle kernel.
    Oracle,
    /// Sum of quasipolynomials over the boundary window.
    Expansion,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub source: DensitySourceKind,
    /// Requested base point; snapped onto `∂S` within `snap_tol`.
    pub z0: C64,
    pub snap_tol: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_points: usize,
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection {
            source: DensitySourceKind::Exact,
            z0: C64::new(1.0, 0.0),
            snap_tol: 1e-6,
            xi_min: -3.0,
            xi_max: 3.0,
            xi_points: 121,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerezinSection {
    pub source: DensitySourceKind,
    pub z0: C64,
    /// Centre and half-width of the square grid.
    pub center: C64,
    pub half_width: f64,
    pub points: usize,
}

impl Default for BerezinSection {
    fn default() -> Self {
        BerezinSection {
            source: DensitySourceKind::Exact,
            z0: C64::new(1.0, 0.0),
            center: C64::new(1.0, 0.0),
            half_width: 0.5,
            points: 101,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    /// Half-width of the `t` window; defaults to `δ_m` when `m` is given.
    pub half_width: Option<f64>,
    /// Number of curves emitted, evenly spaced in `t`.
    pub curves: usize,
    pub points: usize,
    pub options: FlowOptions,
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection {
            half_width: None,
            curves: 11,
            points: 256,
            options: FlowOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Criteria to run; empty means all.
    pub criteria: Vec<String>,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            criteria: Vec::new(),
        }
    }
}

/// Parses a config, reporting the JSON path of the first violation.
pub fn parse_config(text: &str) -> Result<JobConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: JobConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::schema(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl JobConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::schema("tau", "must be positive and finite"));
            }
        }
        if let Some(m) = self.m {
            if !(m > 0.0 && m.is_finite()) {
                return Err(CliError::schema("m", "must be positive and finite"));
            }
        }
        if self.n == Some(0) {
            return Err(CliError::schema("n", "must be positive"));
        }
        if self.tau.is_some() && self.n.is_some() {
            return Err(CliError::schema(
                "tau",
                "give either tau or (n, m), not both",
            ));
        }
        if self.n.is_some() != self.m.is_some() && self.tau.is_none() {
            return Err(CliError::schema(
                if self.n.is_some() { "m" } else { "n" },
                "n and m must be given together",
            ));
        }
        if let Some([lo, hi]) = self.tau_window {
            if !(0.0 < lo && lo < hi && hi.is_finite()) {
                return Err(CliError::schema(
                    "tau_window",
                    "must be [lo, hi] with 0 < lo < hi",
                ));
            }
            let t = self.tau();
            if !(lo <= t && t <= hi) {
                let path = if self.tau.is_some() { "tau" } else { "n" };
                return Err(CliError::schema(
                    path,
                    format!("τ = {t} lies outside tau_window [{lo}, {hi}]"),
                ));
            }
        }
        if !self.n_modes.is_power_of_two() || self.n_modes < 16 {
            return Err(CliError::schema("n_modes", "must be a power of two ≥ 16"));
        }
        if !(10..=2000).contains(&self.digits) {
            return Err(CliError::schema("digits", "must lie in 10..=2000"));
        }
        if self.droplet.points == 0 {
            return Err(CliError::schema("droplet.points", "must be positive"));
        }
        for (i, t) in self.droplet.taus.iter().enumerate() {
            if !(*t > 0.0 && t.is_finite()) {
                return Err(CliError::schema(
                    &format!("droplet.taus[{i}]"),
                    "must be positive",
                ));
            }
        }
        if self.oracle.points == 0 {
            return Err(CliError::schema("oracle.points", "must be positive"));
        }
        if !(self.oracle.curve_radius > 1.0) {
            return Err(CliError::schema("oracle.curve_radius", "must exceed 1"));
        }
        for (i, n) in self.oracle.degrees.iter().enumerate() {
            if *n == 0 || *n > self.oracle.n_max {
                return Err(CliError::schema(
                    &format!("oracle.degrees[{i}]"),
                    "must lie in 1..=n_max",
                ));
            }
        }
        if self.oracle.quadrature.order < 2 {
            return Err(CliError::schema(
                "oracle.quadrature.order",
                "must be at least 2",
            ));
        }
        if !(self.oracle.quadrature.panel_scale > 0.0) {
            return Err(CliError::schema(
                "oracle.quadrature.panel_scale",
                "must be positive",
            ));
        }
        if let Some(a) = self.oracle.quadrature.angular_nodes {
            if !a.is_power_of_two() {
                return Err(CliError::schema(
                    "oracle.quadrature.angular_nodes",
                    "must be a power of two",
                ));
            }
        }
        let d = &self.density;
        if d.xi_points == 0 || !(d.xi_max >= d.xi_min) {
            return Err(CliError::schema(
                "density.xi_points",
                "need xi_points > 0 and xi_min ≤ xi_max",
            ));
        }
        if !(d.snap_tol > 0.0) {
            return Err(CliError::schema("density.snap_tol", "must be positive"));
        }
        if self.berezin.points < 2 || !(self.berezin.half_width > 0.0) {
            return Err(CliError::schema(
                "berezin.points",
                "need points ≥ 2 and half_width > 0",
            ));
        }
        if let Some(h) = self.flow.half_width {
            if !(h > 0.0 && h < 1.0) {
                return Err(CliError::schema("flow.half_width", "must lie in (0, 1)"));
            }
        }
        if self.flow.curves == 0 || self.flow.points == 0 {
            return Err(CliError::schema(
                "flow.curves",
                "curves and points must be positive",
            ));
        }
        let o = &self.flow.options;
        if o.n_t < 3 || o.n_t % 2 == 0 {
            return Err(CliError::schema("flow.options.n_t", "must be odd and ≥ 3"));
        }
        if !o.n_modes.is_power_of_two() {
            return Err(CliError::schema(
                "flow.options.n_modes",
                "must be a power of two",
            ));
        }
        if o.jet_order < 2 {
            return Err(CliError::schema(
                "flow.options.jet_order",
                "must be at least 2",
            ));
        }
        for (i, c) in self.verify.criteria.iter().enumerate() {
            if !acceptance::ALL.contains(&c.as_str()) {
                return Err(CliError::schema(
                    &format!("verify.criteria[{i}]"),
                    format!("unknown criterion {c}"),
                ));
            }
        }
        Ok(())
    }

    /// Canonical serialization used for hashing.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn droplet_options(&self) -> DropletOptions {
        DropletOptions {
            n_modes: self.n_modes,
            ..DropletOptions::default()
        }
    }

    fn tau(&self) -> f64 {
        match (self.tau, self.n, self.m) {
            (Some(t), _, _) => t,
            (None, Some(n), Some(m)) => n as f64 / m,
            _ => 1.0,
        }
    }

    fn require_m(&self, cmd: Command) -> Result<f64, CliError> {
        self.m
            .ok_or_else(|| CliError::schema("m", format!("`{}` needs n and m", cmd.name())))
    }
}

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv {
    body: String,
}

impl Csv {
    fn new(cmd: Command, cfg: &JobConfig, columns: &[&str]) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "# planar-opoly {VERSION} subcommand={} config_sha256={}",
            cmd.name(),
            cfg.hash()
        );
        let _ = writeln!(body, "{}", columns.join(","));
        Csv { body }
    }

    fn row(&mut self, vals: &[f64]) {
        let cells: Vec<String> = vals.iter().map(|v| fmt17(*v)).collect();
        let _ = writeln!(self.body, "{}", cells.join(","));
    }

    fn raw(&mut self, cells: &[String]) {
        let _ = writeln!(self.body, "{}", cells.join(","));
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    config_sha256: String,
    config: &'a JobConfig,
}

fn write_json<T: Serialize>(
    out: &Path,
    name: &str,
    cmd: Command,
    cfg: &JobConfig,
    data: &T,
) -> Result<PathBuf, CliError> {
    #[derive(Serialize)]
    struct Doc<'a, T: Serialize> {
        meta: Meta<'a>,
        data: &'a T,
    }
    let doc = Doc {
        meta: Meta {
            tool: "planar-opoly",
            version: VERSION,
            subcommand: cmd.name(),
            config_sha256: cfg.hash(),
            config: cfg,
        },
        data,
    };
    let path = out.join(name);
    let text = serde_json::to_string_pretty(&doc).expect("payload serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| CliError::io(e, &path))?;
    Ok(path)
}

fn write_csv(out: &Path, name: &str, csv: Csv) -> Result<PathBuf, CliError> {
    let path = out.join(name);
    std::fs::write(&path, csv.body).map_err(|e| CliError::io(e, &path))?;
    Ok(path)
}

/// Result of a successful run: written files and human-readable lines.
#[derive(Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
}

/// Reads the config at `config_path` and runs `cmd`, writing into `out`.
pub fn run(cmd: Command, config_path: &Path, out: &Path) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::schema(
            "<file>",
            format!("cannot read {}: {e}", config_path.display()),
        )
    })?;
    let cfg = parse_config(&text)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(e, out))?;
    run_config(cmd, &cfg, out)
}

pub fn run_config(cmd: Command, cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    match cmd {
        Command::Droplet => run_droplet(cfg, out),
        Command::Expand => run_expand(cfg, out),
        Command::Oracle => run_oracle(cfg, out),
        Command::Density => run_density(cfg, out),
        Command::Berezin => run_berezin(cfg, out),
        Command::Flow => run_flow(cfg, out),
        Command::Verify => run_verify(cfg, out),
    }
}

fn run_droplet(cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    let cmd = Command::Droplet;
    let mut csv = Csv::new(cmd, cfg, &["tau", "theta", "x", "y"]);
    #[derive(Serialize)]
    struct Summary {
        tau: f64,
        conformal_radius: f64,
        area_over_pi: f64,
        residual: f64,
        /// `psi[i] = [re, im]` of the coefficient of `w^{1-i}`.
        psi: Vec<[f64; 2]>,
    }
    let mut summary = Vec::new();
    for &tau in &cfg.droplet.taus {
        let d = Droplet::compute(&cfg.potential, tau, &cfg.droplet_options())?;
        for j in 0..cfg.droplet.points {
            let th = 2.0 * PI * j as f64 / cfg.droplet.points as f64;
            let z = d.boundary_point(th);
            csv.row(&[tau, th, z.re, z.im]);
        }
        summary.push(Summary {
            tau,
            conformal_radius: d.conformal_radius(),
            area_over_pi: d.area_over_pi(),
            residual: d.residual,
            psi: d.psi.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        });
    }
    let mut rep = RunReport::default();
    rep.files.push(write_csv(out, "droplet.csv", csv)?);
    rep.files
        .push(write_json(out, "droplet.json", cmd, cfg, &summary)?);
    rep.messages
        .push(format!("{} boundary curves", cfg.droplet.taus.len()));
    Ok(rep)
}

fn run_expand(cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    let cmd = Command::Expand;
    let d = Droplet::compute(&cfg.potential, cfg.tau(), &cfg.droplet_options())?;
    d.check_cutoff_domain()?;
    let coeffs = expand(&d, cfg.kappa)?;
    let payload = CoefficientPayload::from(&coeffs);
    let mut rep = RunReport::default();
    rep.files
        .push(write_json(out, "coefficients.json", cmd, cfg, &payload)?);
    rep.messages
        .push(format!("κ = {}, c = {:?}", cfg.kappa, coeffs.c));
    Ok(rep)
}

fn run_oracle(cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    let cmd = Command::Oracle;
    let m = cfg.require_m(cmd)?;
    let g = compute_moments(
        &cfg.potential,
        m,
        cfg.oracle.n_max,
        &cfg.oracle.quadrature,
        cfg.digits,
    )?;
    let ops = gram_schmidt(&g, &cfg.potential)?;
    let mut csv = Csv::new(
        cmd,
        cfg,
        &[
            "n",
            "theta",
            "x",
            "y",
            "oracle_log_abs",
            "quasi_log_abs",
            "rel_dev",
        ],
    );
    #[derive(Serialize)]
    struct Summary {
        m: f64,
        n_max: usize,
        digits: u32,
        self_estimate: f64,
        gram_residual: f64,
        log_leading: Vec<f64>,
        max_rel_dev: Vec<(usize, f64)>,
    }
    let mut devs = Vec::new();
    for &n in &cfg.oracle.degrees {
        let q = QuasiPolynomial::build(&cfg.potential, n, m, cfg.kappa, &cfg.droplet_options())?;
        let mut worst = 0.0f64;
        for j in 0..cfg.oracle.points {
            let th = 2.0 * PI * j as f64 / cfg.oracle.points as f64;
            let z = q
                .droplet
                .psi
                .eval(C64::from_polar(cfg.oracle.curve_radius, th))?;
            let lp = ops.eval(n, z).ln();
            let lq = q.eval_log(z)?;
            let dev = ((lq - lp).exp() - 1.0).norm();
            worst = worst.max(dev);
            csv.row(&[n as f64, th, z.re, z.im, lp.re, lq.re, dev]);
        }
        devs.push((n, worst));
    }
    let summary = Summary {
        m,
        n_max: cfg.oracle.n_max,
        digits: cfg.digits,
        self_estimate: g.self_estimate,
        gram_residual: ops.residual,
        log_leading: ops.log_leading.clone(),
        max_rel_dev: devs.clone(),
    };
    let mut rep = RunReport::default();
    rep.files.push(write_csv(out, "oracle_compare.csv", csv)?);
    rep.files
        .push(write_json(out, "oracle.json", cmd, cfg, &summary)?);
    rep.messages
        .push(format!("max relative deviation per degree: {devs:?}"));
    Ok(rep)
}

fn kernel_source(
    cfg: &JobConfig,
    kind: DensitySourceKind,
    cmd: Command,
) -> Result<Box<dyn KernelSource>, CliError> {
    let m = cfg.require_m(cmd)?;
    match kind {
        DensitySourceKind::Exact => {
            if cfg.potential != Potential::ginibre() {
                return Err(CliError::schema(
                    "potential",
                    "the exact kernel is available for the Ginibre potential only",
                ));
            }
            if m.fract() != 0.0 {
                return Err(CliError::schema("m", "the exact kernel needs an integer m"));
            }
            let mut k = GinibreKernel::new(m as usize);
            k.count = cfg.n.unwrap_or(m as usize);
            Ok(Box::new(k))
        }
        DensitySourceKind::Oracle => {
            let count = cfg.n.unwrap_or(m.round() as usize);
            let g = compute_moments(
                &cfg.potential,
                m,
                count - 1,
                &cfg.oracle.quadrature,
                cfg.digits,
            )?;
            Ok(Box::new(OracleKernel::new(
                gram_schmidt(&g, &cfg.potential)?,
                count,
            )?))
        }
        DensitySourceKind::Expansion => Err(CliError::schema(
            "berezin.source",
            "the expansion provides densities, not kernels",
        )),
    }
}

fn run_density(cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    let cmd = Command::Density;
    let sec = &cfg.density;
    let m = cfg.require_m(cmd)?;
    let src: Box<dyn DensitySource> = match sec.source {
        DensitySourceKind::Expansion => {
            if m.fract() != 0.0 {
                return Err(CliError::schema(
                    "m",
                    "the expansion density needs an integer m",
                ));
            }
            Box::new(ExpansionDensity::build(
                &cfg.potential,
                m as usize,
                cfg.kappa,
                &cfg.droplet_options(),
            )?)
        }
        kind => {
            let k = kernel_source(cfg, kind, cmd)?;
            Box::new(KernelAsDensity(k))
        }
    };
    // the density is taken at the edge of S_1 (the m-point ensemble)
    let d = Droplet::compute(&cfg.potential, 1.0, &cfg.droplet_options())?;
    let xi = real_grid(sec.xi_min, sec.xi_max, sec.xi_points);
    let prof = rescaled_density(src.as_ref(), &d, sec.z0, &xi, sec.snap_tol)?;
    let cmp = compare_erf(&prof);
    let mut csv = Csv::new(cmd, cfg, &["xi", "rho", "erf_ref", "abs_err"]);
    for r in &cmp.rows {
        csv.row(&[r.xi.re, r.rho, r.erf_ref, r.abs_err]);
    }
    let mut rep = RunReport::default();
    rep.files.push(write_csv(out, "density.csv", csv)?);
    rep.messages.push(format!(
        "{} at z0 = {} (snapped): sup |rho - erf| = {:.4e}",
        prof.provenance, prof.z0, cmp.sup_error
    ));
    Ok(rep)
}

struct KernelAsDensity(Box<dyn KernelSource>);

impl DensitySource for KernelAsDensity {
    fn m(&self) -> f64 {
        self.0.m()
    }
    fn potential(&self) -> &Potential {
        self.0.potential()
    }
    fn provenance(&self) -> &'static str {
        self.0.provenance()
    }
    fn weighted_density(&self, z: C64) -> crate::error::Result<f64> {
        self.0.weighted_density(z)
    }
}

fn run_berezin(cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    let cmd = Command::Berezin;
    let sec = &cfg.berezin;
    let src = kernel_source(cfg, sec.source, cmd)?;
    let (pts, da) = square_grid(sec.center, sec.half_width, sec.points);
    let field = berezin_density(src.as_ref(), sec.z0, &pts)?;
    let mut csv = Csv::new(cmd, cfg, &["x", "y", "berezin"]);
    for (z, v) in field.points.iter().zip(&field.values) {
        csv.row(&[z.re, z.im, *v]);
    }
    let mass: f64 = field.values.iter().sum::<f64>() * da;
    let mut rep = RunReport::default();
    rep.files.push(write_csv(out, "berezin.csv", csv)?);
    rep.messages
        .push(format!("mass captured by the grid: {mass:.6}"));
    Ok(rep)
}

fn run_flow(cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    let cmd = Command::Flow;
    let sec = &cfg.flow;
    let half = match (sec.half_width, cfg.m) {
        (Some(h), _) => h,
        (None, Some(m)) => delta_m(m),
        (None, None) => {
            return Err(CliError::schema(
                "flow.half_width",
                "give flow.half_width or m",
            ))
        }
    };
    let d = Droplet::compute(&cfg.potential, cfg.tau(), &cfg.droplet_options())?;
    let fam = FlowFamily::solve(&d, half, &sec.options)?;
    let mut local = Csv::new(cmd, cfg, &["t", "theta", "x", "y"]);
    let mut mapped = Csv::new(cmd, cfg, &["t", "theta", "x", "y"]);
    for i in 0..sec.curves {
        let t = if sec.curves == 1 {
            0.0
        } else {
            -half + 2.0 * half * i as f64 / (sec.curves - 1) as f64
        };
        let curve = fam.curve(t, sec.points)?;
        for (j, w) in curve.iter().enumerate() {
            let th = 2.0 * PI * j as f64 / sec.points as f64;
            local.row(&[t, th, w.re, w.im]);
            let z = d.psi.eval(*w)?;
            mapped.row(&[t, th, z.re, z.im]);
        }
    }
    let mut rep = RunReport::default();
    rep.files.push(write_csv(out, "flow_curves.csv", local)?);
    rep.files
        .push(write_csv(out, "flow_curves_mapped.csv", mapped)?);
    let lr = fam.level_residual.iter().cloned().fold(0.0, f64::max);
    rep.messages.push(format!(
        "{} Picard iterations, level-curve residual {lr:.3e}",
        fam.increments.len()
    ));
    Ok(rep)
}

fn run_verify(cfg: &JobConfig, out: &Path) -> Result<RunReport, CliError> {
    let cmd = Command::Verify;
    let ids: Vec<String> = if cfg.verify.criteria.is_empty() {
        acceptance::ALL.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.verify.criteria.clone()
    };
    let mut csv = Csv::new(cmd, cfg, &["id", "pass", "metric", "value", "bound"]);
    let mut rep = RunReport::default();
    for id in &ids {
        let o = acceptance::run(id);
        rep.messages.push(o.line());
        if o.metrics.is_empty() {
            csv.raw(&[
                o.id.clone(),
                o.pass.to_string(),
                "error".into(),
                "NaN".into(),
                quote(&o.detail),
            ]);
        }
        for mtr in &o.metrics {
            csv.raw(&[
                o.id.clone(),
                o.pass.to_string(),
                mtr.name.clone(),
                fmt17(mtr.value),
                quote(mtr.bound.as_deref().unwrap_or("")),
            ]);
        }
    }
    rep.files.push(write_csv(out, "acceptance.csv", csv)?);
    Ok(rep)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_carry_the_field_path() {
        let e = parse_config(r#"{"density": {"xi_points": "many"}}"#).unwrap_err();
        match e {
            CliError::Schema { path, .. } => assert_eq!(path, "density.xi_points"),
            other => panic!("{other}"),
        }
        assert_eq!(parse_config("{").unwrap_err().exit_code(), 2);
        let e = parse_config(r#"{"n_modes": 100}"#).unwrap_err();
        assert!(matches!(e, CliError::Schema { ref path, .. } if path == "n_modes"));
        let e = parse_config(r#"{"bogus": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn empty_config_is_valid_and_hash_is_stable() {
        let a = parse_config("{}").unwrap();
        let b = parse_config("{ }\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.potential, Potential::ginibre());
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn tau_outside_the_admissible_window_is_a_schema_error() {
        let ok = parse_config(r#"{"tau": 1.1, "tau_window": [0.9, 1.2]}"#);
        assert!(ok.is_ok());
        let e = parse_config(r#"{"n": 60, "m": 40, "tau_window": [0.9, 1.2]}"#).unwrap_err();
        assert!(matches!(e, CliError::Schema { ref path, .. } if path == "n"));
        let e = parse_config(r#"{"tau_window": [1.2, 0.9]}"#).unwrap_err();
        assert!(matches!(e, CliError::Schema { ref path, .. } if path == "tau_window"));
    }
}
