//! Command-line front end: `verify` checks a map's hypotheses, `induce`
//! builds a scheme and writes its artifacts, `audit` re-verifies a scheme
//! file from its contents alone.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 hypothesis
//! failure, 4 builder error, 5 audit failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dynamics::{catalog, complexity_sweep, verify_distortion, verify_expansion, MapSpec, PiecewiseMap};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Region};
use crate::inducing::{
    build_scheme_full_recurrent, fit_tail, full_branch_report, tail_table, upgrade_full_branch, verify_gibbs_markov,
    BuildOptions, Builder, InducingScheme, RecurrenceSpec,
};
use crate::io::{manifest_toml, read_scheme, rounds_csv, tail_csv, write_scheme};

#[derive(Parser, Debug)]
#[command(name = "inducer", version, about = "Gibbs-Markov inducing schemes for piecewise-expanding maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check expansion, distortion and complexity of a map.
    Verify(VerifyArgs),
    /// Build an inducing scheme.
    Induce(InduceArgs),
    /// Re-verify a scheme file.
    Audit(AuditArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// Catalog id (M0..M3) or path to a map-spec file.
    #[arg(long)]
    pub map: String,
    /// Grid spacing.
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Point pairs per branch for expansion and distortion.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Boxes in the complexity sweep.
    #[arg(long, default_value_t = 40)]
    pub boxes: usize,
    /// Directory for the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Gm,
    Full,
    Recurrent,
    Gcd1,
}

#[derive(Args, Debug)]
pub struct InduceArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Gm)]
    pub mode: ModeArg,
    /// Unresolved mass at which the builder halts (default 1e-4 Leb(X)).
    #[arg(long)]
    pub halt_mass: Option<f64>,
    /// Round cap per seed element.
    #[arg(long, default_value_t = 400)]
    pub rounds: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Fraction of stops whose collar inequality is audited.
    #[arg(long, default_value_t = 0.0)]
    pub audit_fraction: f64,
    /// Prescribed element Z as an open box `lo1,..,lod:hi1,..,hid`.
    #[arg(long = "Z")]
    pub z: Option<String>,
    /// Recurrence times (comma list) for recurrent mode.
    #[arg(long)]
    pub times: Option<String>,
    /// Partition scale (default delta0 = 1/(3P)).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Properness target P.
    #[arg(long, default_value_t = 50.0)]
    pub p: f64,
    /// Build on a deterministic subset of this many seed elements.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Largest unresolved fraction accepted when rounds run out.
    #[arg(long, default_value_t = 0.5)]
    pub max_unresolved: f64,
    /// Enlarged set Z' for gcd1 mode, same format as `--Z`.
    #[arg(long = "Z-prime")]
    pub z_prime: Option<String>,
    /// Branch of the premature stop in gcd1 mode.
    #[arg(long, default_value_t = 0)]
    pub branch: usize,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Scheme file written by `induce`.
    pub scheme: PathBuf,
    /// Sampled points per cell.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Validated run parameters shared by the subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: MapSpec,
    pub eta: f64,
    pub seed: u64,
    pub halt_mass: Option<f64>,
    pub rounds: usize,
    pub audit_fraction: f64,
    pub out: PathBuf,
    pub z: Option<String>,
    pub times: Option<Vec<usize>>,
    pub delta: Option<f64>,
}

/// Loads a catalog map (case-insensitive id) or a map-spec file.
pub fn load_spec(source: &str) -> Result<MapSpec> {
    let id = source.to_ascii_uppercase();
    if catalog::NAMES.contains(&id.as_str()) {
        return catalog::spec(&id);
    }
    let text = fs::read_to_string(source)
        .map_err(|e| Error::Config(format!("map '{source}' is neither a catalog id nor a readable file: {e}")))?;
    MapSpec::parse(&text)
}

/// Parses `lo1,..,lod:hi1,..,hid` into an open box on `grid`.
pub fn parse_box(grid: &std::sync::Arc<Grid>, s: &str) -> Result<Region> {
    let bad = |m: &str| Error::Config(format!("bad box '{s}': {m}"));
    let (lo, hi) = s.split_once(':').ok_or_else(|| bad("expected lo:hi"))?;
    let nums = |p: &str| -> Result<Vec<f64>> {
        p.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| bad(&e.to_string()))).collect()
    };
    let (lo, hi) = (nums(lo)?, nums(hi)?);
    if lo.len() != grid.dim() || hi.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: lo.len().max(hi.len()) });
    }
    if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
        return Err(bad("every lower corner must lie below the upper one"));
    }
    let r = Region::open_box(grid.clone(), &lo, &hi);
    if r.is_empty() {
        return Err(bad("the box contains no cell center"));
    }
    Ok(r)
}

fn parse_times(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| Error::Config(format!("bad time '{x}' in --times: {e}"))))
        .collect()
}

impl RunConfig {
    fn new(map: &MapArgs) -> Result<RunConfig> {
        if !(map.eta > 0.0) {
            return Err(Error::Config(format!("eta = {} must be positive", map.eta)));
        }
        Ok(RunConfig {
            spec: load_spec(&map.map)?,
            eta: map.eta,
            seed: map.seed,
            halt_mass: None,
            rounds: 400,
            audit_fraction: 0.0,
            out: PathBuf::from("out"),
            z: None,
            times: None,
            delta: None,
        })
    }

    fn from_induce(a: &InduceArgs) -> Result<RunConfig> {
        let mut c = RunConfig::new(&a.map)?;
        if let Some(h) = a.halt_mass {
            if !(h > 0.0) {
                return Err(Error::Config(format!("halt mass {h} must be positive")));
            }
        }
        if a.rounds == 0 {
            return Err(Error::Config("round cap must be positive".into()));
        }
        if !(0.0..=1.0).contains(&a.audit_fraction) {
            return Err(Error::Config(format!("audit fraction {} must lie in [0, 1]", a.audit_fraction)));
        }
        if let Some(d) = a.delta {
            if !(d > 0.0) {
                return Err(Error::Config(format!("delta = {d} must be positive")));
            }
        }
        c.halt_mass = a.halt_mass;
        c.rounds = a.rounds;
        c.audit_fraction = a.audit_fraction;
        c.out = a.out.clone();
        c.z = a.z.clone();
        c.times = a.times.as_deref().map(parse_times).transpose()?;
        c.delta = a.delta;
        Ok(c)
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

/// Hypothesis checks; returns whether all passed and the report text.
pub fn cmd_verify(cfg: &RunConfig, samples: usize, boxes: usize) -> Result<(bool, String)> {
    let c = cfg.spec.constants().clone();
    c.validate()?;
    let map = cfg.spec.build(cfg.eta)?;
    let exp = verify_expansion(&map, samples, cfg.seed)?;
    let dis = verify_distortion(&map, samples, cfg.seed)?;
    let sweep = complexity_sweep(&map, boxes, cfg.seed)?;
    let e_ok = exp.max <= c.lambda * (1.0 + 1e-7);
    let d_ok = dis.max <= c.d_tilde * (1.0 + 1e-6) + 1e-9;
    let s_ok = sweep.sigma_hat <= c.sigma;
    let mut r = String::new();
    let _ = writeln!(r, "map = {:?}\nhash = {:?}\neta = {:e}", cfg.spec.name, cfg.spec.hash(), cfg.eta);
    let _ = writeln!(r, "\n[expansion]\nlambda = {:e}\nsampled = {:e}\nstatus = {:?}", c.lambda, exp.max, ok(e_ok));
    let _ = writeln!(r, "\n[distortion]\nd_tilde = {:e}\nsampled = {:e}\nstatus = {:?}", c.d_tilde, dis.max, ok(d_ok));
    let _ = writeln!(
        r,
        "\n[complexity]\nn0 = {}\nsigma = {:e}\nsigma_hat = {:e}\ninstances = {}\nstatus = {:?}",
        c.n0,
        c.sigma,
        sweep.sigma_hat,
        sweep.instances,
        ok(s_ok)
    );
    Ok((e_ok && d_ok && s_ok, r))
}

fn build_options(cfg: &RunConfig, a: &InduceArgs) -> BuildOptions {
    BuildOptions {
        p: a.p,
        round_cap: cfg.rounds,
        seeds: a.seeds,
        seed: cfg.seed,
        audit_fraction: cfg.audit_fraction,
        max_unresolved_fraction: a.max_unresolved,
        delta: cfg.delta,
        ..BuildOptions::default()
    }
}

fn builder(cfg: &RunConfig, mut opts: BuildOptions, z: Option<&Region>) -> Result<Builder> {
    if let Some(h) = cfg.halt_mass {
        let leb = cfg.spec.build(cfg.eta)?.space().measure();
        opts.halt_fraction = h / leb;
    }
    Builder::new(&cfg.spec, cfg.eta, opts, z)
}

/// Builds the scheme selected by `--mode`.
pub fn cmd_induce(cfg: &RunConfig, a: &InduceArgs) -> Result<InducingScheme> {
    let opts = build_options(cfg, a);
    match a.mode {
        ModeArg::Gm | ModeArg::Full => {
            let b = builder(cfg, opts, None)?;
            let s = b.build_gm()?;
            if a.mode == ModeArg::Gm {
                return Ok(s);
            }
            upgrade_full_branch(&s, &b.map, None, b.opts.return_cap, b.tail_floor())
        }
        ModeArg::Recurrent => {
            let (zs, times) = match (&cfg.z, &cfg.times) {
                (Some(z), Some(t)) => (z, t.clone()),
                _ => return Err(Error::Config("recurrent mode needs --Z and --times".into())),
            };
            let map = cfg.spec.build(cfg.eta)?;
            let z = parse_box(map.grid(), zs)?.intersect(map.space());
            let rec = RecurrenceSpec::search(&map, z, times)?;
            let mut opts = opts;
            if let Some(h) = cfg.halt_mass {
                opts.halt_fraction = h / map.space().measure();
            }
            build_scheme_full_recurrent(&cfg.spec, cfg.eta, opts, &rec)
        }
        ModeArg::Gcd1 => {
            let (zs, zps) = match (&cfg.z, &a.z_prime) {
                (Some(z), Some(zp)) => (z, zp),
                _ => return Err(Error::Config("gcd1 mode needs --Z and --Z-prime".into())),
            };
            let map = cfg.spec.build(cfg.eta)?;
            let z = parse_box(map.grid(), zs)?.intersect(map.space());
            let zp = parse_box(map.grid(), zps)?.intersect(map.space());
            builder(cfg, opts, Some(&z))?.build_gcd_one(&zp, a.branch)
        }
    }
}

/// Writes the scheme file, tail CSV, round log and manifest.
pub fn write_artifacts(dir: &Path, s: &InducingScheme, seconds: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("scheme.txt"), write_scheme(s))?;
    fs::write(dir.join("tail.csv"), tail_csv(s))?;
    fs::write(dir.join("audit.csv"), rounds_csv(s))?;
    let extra = [("runtime_seconds", toml::Value::Float(seconds))];
    fs::write(dir.join("manifest.toml"), manifest_toml(s, &extra))?;
    Ok(())
}

/// Findings of an audit.
#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl AuditReport {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let line = format!("{} {name}: {detail}", ok(pass));
        if !pass {
            self.failures.push(line.clone());
        }
        self.lines.push(line);
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-verifies a parsed scheme: cell invariants, Gibbs-Markov sampling,
/// full-branch images, mass balance and the tail table.
pub fn audit_scheme(s: &InducingScheme, map: &PiecewiseMap, samples: usize, seed: u64) -> AuditReport {
    let mut rep = AuditReport::default();
    let gm = verify_gibbs_markov(s, map, samples, seed);
    let mut detail = format!(
        "{} cells, {} images, expansion ratio {:.6}, distortion {:.3e}",
        gm.cells, gm.images, gm.expansion, gm.distortion
    );
    for v in gm.violations.iter().take(20) {
        let _ = write!(detail, "\n    {v}");
    }
    rep.check("gibbs-markov", gm.passed(), detail);
    if let Some(f) = full_branch_report(s, map) {
        rep.check(
            "full-branch",
            f.worst_gap <= 1e-3 && f.decomposition_failures == 0,
            format!(
                "worst image gap {:.3e} (cell {:?}), {} decomposition failures",
                f.worst_gap, f.worst_cell, f.decomposition_failures
            ),
        );
    }
    let seeds_ok: Vec<usize> =
        s.cells.iter().enumerate().filter(|(_, c)| !s.manifest.seeds.contains(&c.seed)).map(|(i, _)| i).collect();
    rep.check(
        "seeds",
        seeds_ok.is_empty(),
        match seeds_ok.first() {
            None => "every cell lies in a recorded seed element".into(),
            Some(i) => format!("cell {i} lies outside the recorded seed elements"),
        },
    );
    let total = s.total_cell_measure() + s.unresolved;
    let balance = (total - s.base_measure).abs() / s.base_measure;
    rep.check("mass", balance <= 1e-6, format!("cells + unresolved = base within {balance:.2e}"));
    let tail = tail_table(s.cells.iter().map(|c| (c.tau, c.measure)), s.unresolved);
    let tail_ok = tail.len() == s.tail.len()
        && tail.iter().zip(&s.tail).all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-12 * s.base_measure.max(1.0));
    rep.check("tail", tail_ok, format!("{} entries recomputed from the cells", tail.len()));
    if let Some(f) = s.fit {
        let n = s.cutoff.map_or(tail.len(), |c| (c + 1).min(tail.len()));
        let floor = 10.0 * map.grid().cell_volume();
        let refit = fit_tail(&tail[..n], floor).ok();
        let same = refit.is_some_and(|r| (r.kappa - f.kappa).abs() <= 1e-9 && r.points == f.points);
        rep.check("fit", same, format!("kappa {:.6}, R^2 {:.4}, {} points", f.kappa, f.r2, f.points));
    }
    rep
}

fn init_threads() {
    if let Some(n) = std::env::var("INDUCER_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_threads();
    match cli.command {
        Command::Verify(a) => {
            let res = RunConfig::new(&a.map).and_then(|cfg| cmd_verify(&cfg, a.samples, a.boxes));
            match res {
                Ok((pass, report)) => {
                    print!("{report}");
                    if let Some(dir) = &a.out {
                        if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("verify.toml"), &report)) {
                            return fail(&e.into());
                        }
                    }
                    if pass {
                        0
                    } else {
                        3
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Induce(a) => {
            let start = std::time::Instant::now();
            let res = RunConfig::from_induce(&a).and_then(|cfg| {
                let s = cmd_induce(&cfg, &a)?;
                write_artifacts(&cfg.out, &s, start.elapsed().as_secs_f64())?;
                Ok((cfg, s))
            });
            match res {
                Ok((cfg, s)) => {
                    println!(
                        "{} scheme: {} cells, unresolved {:.3e} of {:.3e}",
                        s.manifest.mode.as_str(),
                        s.cells.len(),
                        s.unresolved,
                        s.base_measure
                    );
                    match s.fit {
                        Some(f) => println!("tail fit: kappa = {:.6}, R^2 = {:.4} over {} points", f.kappa, f.r2, f.points),
                        None => println!("tail fit: too few tail points"),
                    }
                    println!("artifacts in {}", cfg.out.display());
                    0
                }
                Err(e) => fail(&e),
            }
        }
        Command::Audit(a) => {
            let text = match fs::read_to_string(&a.scheme) {
                Ok(t) => t,
                Err(e) => return fail(&Error::Schema(format!("cannot read {}: {e}", a.scheme.display()))),
            };
            match read_scheme(&text) {
                Ok(l) => {
                    let rep = audit_scheme(&l.scheme, &l.map, a.samples, a.seed);
                    for line in &rep.lines {
                        println!("{line}");
                    }
                    if rep.passed() {
                        0
                    } else {
                        5
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}
