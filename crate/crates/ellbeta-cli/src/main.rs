//! Command-line harness: runs identity batteries and integral
//! verifications from flags or a JSON config, emits machine-readable
//! reports, and manages the golden oracle fixture.
//!
//! Exit codes: 0 all pass, 1 numerical failure, 2 domain violation,
//! 3 configuration error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use ellbeta::error::Error;
use ellbeta::fixtures;
use ellbeta::identities::{
    default_selection, run_battery, sample_params, FamilyKind, SampleCtx,
};
use ellbeta::kernels::{
    validate_domain, AnParams, AnSymParams, CnParams, DnParams, FamilyParams, ModifiedParams,
    QReducedParams, UnivariateParams,
};
use ellbeta::quadrature::{
    eval_integral, telescope_check, GridOptions, ShiftBase,
};
use ellbeta::special::{BaseSet, OmegaTriple};
use ellbeta::wire::cpx_vec;

const EXIT_NUMERICAL: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "ellbeta")]
#[command(about = "Verified evaluation of elliptic beta integrals and their identities")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonOpts {
    /// Integral family: univariate | cn | an | an_sym | dn | cn_unit |
    /// an_unit | dn_unit | cn_q | an_q | dn_q
    #[arg(long)]
    family: Option<String>,

    /// Number of integration variables.
    #[arg(long)]
    n: Option<usize>,

    /// Seed for parameter sampling and identity streams.
    #[arg(long)]
    seed: Option<u64>,

    /// Tolerance override.
    #[arg(long)]
    tol: Option<f64>,

    /// Initial grid points per dimension (doubled until convergence).
    #[arg(long)]
    grid: Option<usize>,

    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output file (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the randomized identity battery and emit JSON lines.
    Identities {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated identity ids (defaults to the full battery).
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        /// Samples per identity.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Evaluate one integral family against its closed form.
    Integral {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check the telescoping invariance I(q t1, t2, ...) = I(t).
    Telescope {
        #[command(flatten)]
        common: CommonOpts,
        /// Base scaling t1: q or p.
        #[arg(long, default_value = "q")]
        shift: String,
    },
    /// Sweep the first parameter and emit a CSV of integral values.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of swept points.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Regenerate the golden oracle fixture.
    Golden {
        /// Fixture path (defaults to the crate's shipped fixture).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite even when regenerated values drift.
        #[arg(long)]
        force: bool,
    },
}

/// JSON config document; every field is optional and flag-overridable.
/// Complex numbers are two-element arrays [re, im].
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    family: Option<String>,
    n: Option<usize>,
    seed: Option<u64>,
    samples: Option<usize>,
    tol: Option<f64>,
    ids: Option<Vec<String>>,
    grid: Option<GridOptions>,
    /// Bases [q, p] for the torus families.
    #[serde(default, with = "opt_cpx_vec")]
    bases: Option<Vec<Complex64>>,
    /// Quasi-periods [omega1, omega2, omega3].
    #[serde(default, with = "opt_cpx_vec")]
    omega: Option<Vec<Complex64>>,
    /// Explicit family parameters: {"t": [...]}, {"t": .., "s": ..} or
    /// {"g": .., "h": ..} with complex entries.
    params: Option<serde_json::Value>,
    points: Option<usize>,
    shift: Option<String>,
}

mod opt_cpx_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<Vec<Complex64>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => cpx_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<Vec<Complex64>>, D::Error> {
        let v = Option::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(v.map(|v| v.into_iter().map(|p| Complex64::new(p[0], p[1])).collect()))
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        match e {
            Error::Domain(_) => EXIT_DOMAIN,
            Error::Config(_) | Error::UnknownIdentity(_) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        }
    } else {
        EXIT_CONFIG
    }
}

fn main() -> ExitCode {
    init_workers();
    let cli = Cli::parse();
    match run(cli) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Worker count from ELLBETA_WORKERS (0 or unset = automatic).
fn init_workers() {
    if let Ok(s) = std::env::var("ELLBETA_WORKERS") {
        if let Ok(k) = s.trim().parse::<usize>() {
            if k > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

fn load_config(common: &CommonOpts) -> anyhow::Result<FileConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Error::Config(format!("cannot parse {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    if common.family.is_some() {
        cfg.family = common.family.clone();
    }
    if common.n.is_some() {
        cfg.n = common.n;
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.tol.is_some() {
        cfg.tol = common.tol;
    }
    Ok(cfg)
}

fn grid_for(cfg: &FileConfig, common: &CommonOpts, dim: usize) -> anyhow::Result<GridOptions> {
    let mut grid = cfg.grid.unwrap_or_else(|| GridOptions::defaults_for(dim));
    if cfg.grid.is_none() {
        if let Some(tol) = cfg.tol {
            grid.rel_tol = (tol / 10.0).clamp(1e-13, 1e-3);
        }
    }
    if let Some(init) = common.grid {
        grid.initial_points = init;
        grid.max_points = grid.max_points.max(init);
    }
    grid.validate()?;
    Ok(grid)
}

fn parse_cpx_list(v: &serde_json::Value, key: &str) -> anyhow::Result<Vec<Complex64>> {
    let arr = v
        .get(key)
        .and_then(|x| x.as_array())
        .ok_or_else(|| Error::Config(format!("params.{key} must be an array of [re, im]")))?;
    arr.iter()
        .map(|e| {
            let pair = e
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Config(format!("params.{key} entries must be [re, im]")))?;
            Ok(Complex64::new(
                pair[0].as_f64().unwrap_or(f64::NAN),
                pair[1].as_f64().unwrap_or(f64::NAN),
            ))
        })
        .collect()
}

/// Default bases and triples used when the config gives none.
fn default_bases() -> BaseSet {
    BaseSet::from_qp(Complex64::new(0.3, 0.0), Complex64::new(0.2, 0.0)).expect("valid")
}

fn default_unit_omega() -> OmegaTriple {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    OmegaTriple::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(phi, 0.0),
        Complex64::new(0.0, 3.0),
    )
    .expect("valid")
}

fn default_line_omega() -> OmegaTriple {
    OmegaTriple::new(
        Complex64::new(1.0, 0.2),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 8.0),
    )
    .expect("valid")
}

/// Builds the family parameters (explicit from the config or sampled from
/// the seed) plus the bases where the family needs them.
fn build_family(cfg: &FileConfig) -> anyhow::Result<(FamilyParams, Option<BaseSet>)> {
    let name = cfg.family.clone().unwrap_or_else(|| "univariate".into());
    let n = cfg.n.unwrap_or(1);
    let seed = cfg.seed.unwrap_or(1);
    let kind = FamilyKind::parse(&name, n)?;
    let bases = match &cfg.bases {
        Some(v) if v.len() == 2 => Some(BaseSet::from_qp(v[0], v[1])?),
        Some(_) => {
            return Err(Error::Config("bases must be [q, p]".into()).into());
        }
        None => None,
    };
    let omega = match &cfg.omega {
        Some(v) if v.len() == 3 => Some(OmegaTriple::new(v[0], v[1], v[2])?),
        Some(_) => {
            return Err(Error::Config("omega must be [omega1, omega2, omega3]".into()).into());
        }
        None => None,
    };
    let is_unit = matches!(
        kind,
        FamilyKind::CnUnit { .. } | FamilyKind::AnUnit { .. } | FamilyKind::DnUnit { .. }
    );
    let is_line = matches!(
        kind,
        FamilyKind::CnQ { .. } | FamilyKind::AnQ { .. } | FamilyKind::DnQ { .. }
    );
    let fam = if let Some(params) = &cfg.params {
        // Explicit parameters.
        match kind {
            FamilyKind::Univariate => {
                FamilyParams::Univariate(UnivariateParams::new(parse_cpx_list(params, "t")?)?)
            }
            FamilyKind::Cn { n } => {
                FamilyParams::Cn(CnParams::new(n, parse_cpx_list(params, "t")?)?)
            }
            FamilyKind::An { n } => FamilyParams::An(AnParams::new(
                n,
                parse_cpx_list(params, "t")?,
                parse_cpx_list(params, "s")?,
            )?),
            FamilyKind::AnSym { n } => FamilyParams::AnSym(AnSymParams::new(
                n,
                parse_cpx_list(params, "t")?,
                parse_cpx_list(params, "s")?,
            )?),
            FamilyKind::Dn { n } => {
                let b = bases.unwrap_or_else(default_bases);
                FamilyParams::Dn(DnParams::new(
                    n,
                    parse_cpx_list(params, "t")?,
                    parse_cpx_list(params, "s")?,
                    b.q,
                    b.p,
                )?)
            }
            FamilyKind::CnUnit { n } => {
                let w = omega.unwrap_or_else(default_unit_omega);
                FamilyParams::Modified(ModifiedParams::cn(n, parse_cpx_list(params, "g")?, w)?)
            }
            FamilyKind::AnUnit { n } => {
                let w = omega.unwrap_or_else(default_unit_omega);
                FamilyParams::Modified(ModifiedParams::an(
                    n,
                    parse_cpx_list(params, "g")?,
                    parse_cpx_list(params, "h")?,
                    w,
                )?)
            }
            FamilyKind::DnUnit { n } => {
                let w = omega.unwrap_or_else(default_unit_omega);
                FamilyParams::Modified(ModifiedParams::dn(
                    n,
                    parse_cpx_list(params, "g")?,
                    parse_cpx_list(params, "h")?,
                    w,
                )?)
            }
            FamilyKind::CnQ { n } => {
                let w = omega.unwrap_or_else(default_line_omega);
                FamilyParams::QReduced(QReducedParams::cn(n, parse_cpx_list(params, "g")?, w)?)
            }
            FamilyKind::AnQ { n } => {
                let w = omega.unwrap_or_else(default_line_omega);
                FamilyParams::QReduced(QReducedParams::an(
                    n,
                    parse_cpx_list(params, "g")?,
                    parse_cpx_list(params, "h")?,
                    w,
                )?)
            }
            FamilyKind::DnQ { n } => {
                let w = omega.unwrap_or_else(default_line_omega);
                FamilyParams::QReduced(QReducedParams::dn(
                    n,
                    parse_cpx_list(params, "g")?,
                    parse_cpx_list(params, "h")?,
                    w,
                )?)
            }
        }
    } else {
        // Sampled parameters.
        if is_unit {
            let w = omega.unwrap_or_else(default_unit_omega);
            sample_params(kind, SampleCtx::Omega(&w), seed)?
        } else if is_line {
            let w = omega.unwrap_or_else(default_line_omega);
            sample_params(kind, SampleCtx::Omega(&w), seed)?
        } else {
            let b = bases.unwrap_or_else(default_bases);
            let fam = sample_params(kind, SampleCtx::Bases(&b), seed)?;
            return Ok((fam, Some(b)));
        }
    };
    let b = if is_unit || is_line {
        None
    } else {
        Some(bases.unwrap_or_else(default_bases))
    };
    // Explicit parameters must pass validation before any computation.
    let report = validate_domain(&fam, b.as_ref());
    if !report.ok {
        return Err(Error::Domain(report.violations.join("; ")).into());
    }
    Ok((fam, b))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content)
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Cmd::Identities {
            common,
            ids,
            samples,
        } => {
            let cfg = load_config(&common)?;
            let selection = if !ids.is_empty() {
                ids
            } else {
                cfg.ids.clone().unwrap_or_else(default_selection)
            };
            let samples = samples.or(cfg.samples).unwrap_or(100);
            let seed = cfg.seed.unwrap_or(1);
            let reports = run_battery(&selection, samples, seed, cfg.tol)?;
            let mut out = String::new();
            let header = json!({
                "type": "config",
                "mode": "identities",
                "seed": seed,
                "samples": samples,
                "tol": cfg.tol,
                "ids": selection,
            });
            out.push_str(&header.to_string());
            out.push('\n');
            let mut all_pass = true;
            for rep in &reports {
                all_pass &= rep.passed;
                let mut line = serde_json::to_value(rep)?;
                line["type"] = json!("identity");
                out.push_str(&line.to_string());
                out.push('\n');
            }
            write_output(&common.out, &out)?;
            Ok(all_pass)
        }
        Cmd::Integral { common } => {
            let cfg = load_config(&common)?;
            let (fam, bases) = build_family(&cfg)?;
            let grid = grid_for(&cfg, &common, fam.dim())?;
            let tol = cfg.tol.unwrap_or(1e-6);
            let started = Instant::now();
            let check = eval_integral(&fam, bases.as_ref(), &grid)?;
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let passed = check.rel_err <= tol && check.lhs.converged;
            let report = json!({
                "type": "integral_report",
                "config": {
                    "family": fam.name(),
                    "seed": cfg.seed.unwrap_or(1),
                    "tol": tol,
                    "grid": grid,
                    "params": &fam,
                },
                "result": &check,
                "passed": passed,
                "wall_time_ms": wall_ms,
            });
            write_output(&common.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(passed)
        }
        Cmd::Telescope { common, shift } => {
            let cfg = load_config(&common)?;
            let shift = match cfg.shift.as_deref().unwrap_or(&shift) {
                "q" => ShiftBase::Q,
                "p" => ShiftBase::P,
                other => {
                    return Err(Error::Config(format!("shift must be q or p, got {other}")).into())
                }
            };
            let (fam, bases) = build_family(&cfg)?;
            let b = bases.ok_or_else(|| {
                Error::Config("telescope needs a torus family with bases".into())
            })?;
            let grid = grid_for(&cfg, &common, fam.dim())?;
            let tol = cfg.tol.unwrap_or(1e-7);
            let started = Instant::now();
            let rep = telescope_check(&fam, &b, &grid, shift)?;
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let passed = rep.residual <= tol && rep.annulus_ok;
            let report = json!({
                "type": "telescope_report",
                "config": {
                    "family": fam.name(),
                    "seed": cfg.seed.unwrap_or(1),
                    "tol": tol,
                    "grid": grid,
                    "params": &fam,
                },
                "result": &rep,
                "passed": passed,
                "wall_time_ms": wall_ms,
            });
            write_output(&common.out, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            Ok(passed)
        }
        Cmd::Sweep { common, points } => {
            let cfg = load_config(&common)?;
            let points = points.or(cfg.points).unwrap_or(20);
            if points < 2 {
                return Err(Error::Config("sweep needs at least 2 points".into()).into());
            }
            let (fam, bases) = build_family(&cfg)?;
            let grid = grid_for(&cfg, &common, fam.dim())?;
            let mut csv = String::new();
            let header = json!({
                "mode": "sweep",
                "family": fam.name(),
                "seed": cfg.seed.unwrap_or(1),
                "points": points,
                "grid": grid,
            });
            csv.push_str(&format!("# config: {header}\n"));
            csv.push_str("index,swept_re,swept_im,lhs_re,lhs_im,rel_err,status\n");
            let mut values = Vec::new();
            for k in 0..points {
                let frac = k as f64 / (points - 1) as f64;
                let (swept, variant) = sweep_variant(&fam, frac)?;
                let rep = validate_domain(&variant, bases.as_ref());
                if !rep.ok {
                    csv.push_str(&format!(
                        "{k},{},{},,,,violation: {}\n",
                        swept.re,
                        swept.im,
                        rep.violations.join(" | ")
                    ));
                    continue;
                }
                match eval_integral(&variant, bases.as_ref(), &grid) {
                    Ok(chk) => {
                        values.push(chk.lhs.value);
                        csv.push_str(&format!(
                            "{k},{},{},{},{},{},ok\n",
                            swept.re,
                            swept.im,
                            chk.lhs.value.re,
                            chk.lhs.value.im,
                            chk.rel_err
                        ));
                    }
                    Err(e) => {
                        csv.push_str(&format!(
                            "{k},{},{},,,,skipped: {e}\n",
                            swept.re, swept.im
                        ));
                    }
                }
            }
            let spread = relative_spread(&values);
            csv.push_str(&format!("# relative_spread: {spread:.6e}\n"));
            write_output(&common.out, &csv)?;
            let tol = cfg.tol.unwrap_or(1e-7);
            Ok(values.len() >= 2 && spread <= tol)
        }
        Cmd::Golden { out, force } => {
            let path = out.unwrap_or_else(fixtures::default_fixture_path);
            let fixture = fixtures::regenerate_fixture(&path, force)?;
            println!(
                "{}",
                json!({
                    "type": "golden_report",
                    "path": path.display().to_string(),
                    "records": fixture.records.len(),
                    "oracle_precision": ellbeta::oracle::ORACLE_PRECISION,
                })
            );
            Ok(true)
        }
    }
}

/// Produces the k-th swept variant: t1 (or g1) moves along an admissible
/// ray while everything else stays fixed.
fn sweep_variant(fam: &FamilyParams, frac: f64) -> anyhow::Result<(Complex64, FamilyParams)> {
    Ok(match fam {
        FamilyParams::Univariate(par) => {
            let factor = Complex64::new(0.8 + 0.35 * frac, 0.0);
            let v = par.with_t1_scaled(factor);
            (v.t[0], FamilyParams::Univariate(v))
        }
        FamilyParams::Cn(par) => {
            let factor = Complex64::new(0.8 + 0.35 * frac, 0.0);
            let v = par.with_t1_scaled(factor);
            (v.t[0], FamilyParams::Cn(v))
        }
        FamilyParams::An(par) => {
            let factor = Complex64::new(0.8 + 0.35 * frac, 0.0);
            let v = par.with_t1_scaled(factor);
            (v.t[0], FamilyParams::An(v))
        }
        FamilyParams::QReduced(par) => {
            // Shift g1 along the omega2 direction: Re(g1/omega2) ramps.
            let delta = par.w.omega2 * (0.06 * (frac - 0.5));
            let v = par.with_g1_shifted(delta);
            (v.g[0], FamilyParams::QReduced(v))
        }
        FamilyParams::Modified(par) => {
            let mut g = par.g.clone();
            g[0] += Complex64::new(0.04 * (frac - 0.5), 0.0);
            let v = match par.family {
                ellbeta::kernels::ModifiedFamily::Cn => {
                    ModifiedParams::cn(par.n, g, par.w)?
                }
                ellbeta::kernels::ModifiedFamily::An => {
                    ModifiedParams::an(par.n, g, par.h.clone(), par.w)?
                }
                ellbeta::kernels::ModifiedFamily::Dn => {
                    ModifiedParams::dn(par.n, g, par.h.clone(), par.w)?
                }
            };
            (v.g[0], FamilyParams::Modified(v))
        }
        _ => {
            return Err(Error::Config(
                "sweep supports the univariate, cn, an, modified and q-reduced families".into(),
            )
            .into())
        }
    })
}

fn relative_spread(values: &[Complex64]) -> f64 {
    if values.len() < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let max_dev = values
        .iter()
        .map(|v| (v - mean).norm())
        .fold(0.0, f64::max);
    max_dev / mean.norm().max(1e-300)
}
