//! Command-line front end. `run` parses arguments, executes one subcommand and
//! returns the process exit code: 0 on success, 2 on invalid input, 3 when a
//! solver fails to converge or a target is infeasible, 1 on I/O failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::entropy::{entropy_grid, heat_flow_detailed, riemann_refinement, HeatFlowSpec, HeatSymbol};
use crate::error::{Error, Result};
use crate::insertion::{insertion_entropy, insertion_from_permuton, permuton_from_insertion, InsertionFamily};
use crate::io::{
    read_grid_file, read_insertion_file, write_curves_csv, write_file, write_grid_csv, write_insertion_csv,
    write_json, write_pgm, write_sweep_csv, GridSidecar, Manifest,
};
use crate::measure::{gamma_ab, sample_permutation, GridPermuton, Permutation};
use crate::optimizer::{maximize_entropy, pde_residual_12, pde_residual_123, ConstraintSet, OptimizerOptions};
use crate::oracle::ldp_report;
use crate::patterns::{density_grid_exact, density_mc, pattern_count, PatternSpec};
use crate::regions::{dimple, gamma_ab_sweep, region_123_321};
use crate::starmodel::{
    region_star23_boundary, solve_star, star12_entropy, star12_grid, star12_r_from_rho, star12_rho, star_shape,
};

#[derive(Parser, Debug)]
#[command(name = "permuton", version, about = "Permutons: pattern densities, entropy and maximum-entropy limits")]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Primary output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form 1 2 model at a given density or parameter.
    Star12(Star12Args),
    /// Newton solve of a star model for target densities.
    SolveStar(SolveStarArgs),
    /// Maximize grid entropy under pattern-density constraints.
    Optimize(OptimizeArgs),
    /// Pattern densities of a grid or a permutation.
    Density(DensityArgs),
    /// Entropy of a grid, optionally along a refinement sequence.
    Entropy(EntropyArgs),
    /// Heat-flow smoothing of a grid.
    Heatflow(HeatflowArgs),
    /// Insertion measures: extraction, closed forms and reconstruction.
    Insertion(InsertionArgs),
    /// Feasible-region boundary curves.
    Region(RegionArgs),
    /// Monte-Carlo densities over the two-parameter segment family.
    SweepAb(SweepArgs),
    /// Sample a permutation from a permuton.
    Sample(SampleArgs),
    /// Large-deviation estimates from exact 1 2 counts.
    Ldp(LdpArgs),
    /// Euler-Lagrange residuals of a grid.
    PdeCheck(PdeArgs),
    /// Location of the dimple of the 1 2 3 / 3 2 1 region.
    Dimple,
}

#[derive(Args, Debug)]
struct Star12Args {
    #[arg(long, conflicts_with = "r", required_unless_present = "r")]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveStarArgs {
    /// Exponent pairs `r,s` separated by `;`, e.g. "1,0;2,0".
    #[arg(long, conflicts_with = "classes", required_unless_present = "classes")]
    terms: Option<String>,
    /// Pattern classes, e.g. "*2,**3".
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    targets: String,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// e.g. "12=0.4,123=0.25".
    #[arg(long)]
    constraints: String,
    #[arg(long, default_value_t = 48)]
    grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).multiple(false)))]
struct Source {
    /// Grid CSV file.
    #[arg(long = "in", group = "source")]
    input: Option<PathBuf>,
    /// Permutation in one-line notation, e.g. 2413 or 10,3,1,...
    #[arg(long, group = "source")]
    perm: Option<String>,
    /// Segment permuton γ_{a,b}, given as "a,b".
    #[arg(long, group = "source")]
    gamma: Option<String>,
    /// Closed-form 1 2 model at this density, rasterized.
    #[arg(long, group = "source")]
    star12_rho: Option<f64>,
    /// Resolution for rasterized sources.
    #[arg(long, default_value_t = 256)]
    grid: usize,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated patterns, e.g. "12,123,**3".
    #[arg(long, default_value = "12")]
    pattern: String,
    /// Monte-Carlo trials instead of exact evaluation.
    #[arg(long)]
    mc: Option<String>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Coarsening levels, e.g. "8,16,32".
    #[arg(long)]
    levels: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SymbolArg {
    Lattice,
    Continuum,
}

#[derive(Args, Debug)]
struct HeatflowArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long, value_enum, default_value = "lattice")]
    symbol: SymbolArg,
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("family_source").required(true).multiple(false)))]
struct InsertionArgs {
    /// Extract from a grid CSV.
    #[arg(long = "in", group = "family_source")]
    input: Option<PathBuf>,
    /// Read an insertion CSV.
    #[arg(long, group = "family_source")]
    family: Option<PathBuf>,
    /// Truncated-exponential family with this parameter.
    #[arg(long, group = "family_source", allow_hyphen_values = true)]
    exp: Option<f64>,
    #[arg(long, default_value_t = 64)]
    mt: usize,
    #[arg(long)]
    my: Option<usize>,
    /// Rebuild a grid of this resolution; `--out` then receives the grid.
    #[arg(long)]
    reconstruct: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegionModel {
    #[value(name = "123-321")]
    R123,
    Star23,
}

#[derive(Args, Debug)]
struct RegionArgs {
    #[arg(long, value_enum)]
    model: RegionModel,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 20)]
    na: usize,
    #[arg(long, default_value_t = 20)]
    nb: usize,
    /// Monte-Carlo trials per point; accepts "1e6".
    #[arg(long, default_value = "100000")]
    trials: String,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    n: usize,
}

#[derive(Args, Debug)]
struct LdpArgs {
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    eps: f64,
    /// Comma-separated sizes.
    #[arg(long, default_value = "50,100,200")]
    n: String,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PdeModel {
    #[value(name = "12")]
    P12,
    #[value(name = "123")]
    P123,
    Both,
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("pde_source").required(true).multiple(false)))]
struct PdeArgs {
    #[arg(long = "in", group = "pde_source")]
    input: Option<PathBuf>,
    /// Closed-form 1 2 model with this parameter.
    #[arg(long, group = "pde_source", allow_hyphen_values = true)]
    star12_r: Option<f64>,
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, value_enum, default_value = "both")]
    model: PdeModel,
}

/// Runs the CLI on `argv` (program name first) with the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
            };
            return code;
        }
    };
    let plain: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let name = plain.iter().find(|a| !a.starts_with('-')).cloned().unwrap_or_default();
    let started = Instant::now();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start thread pool: {e}");
            return 1;
        }
    };
    let mut manifest = Manifest::new(&name, &plain, cli.seed, pool.current_num_threads());
    let mut buf = Vec::new();
    let result = pool.install(|| execute(&cli, &mut manifest, &mut buf));
    if out.write_all(&buf).and_then(|_| out.flush()).is_err() {
        return 1;
    }
    let code = match result {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    };
    if let Some(path) = &cli.manifest {
        manifest.wall_time_s = started.elapsed().as_secs_f64();
        let _ = manifest.record("exit_code", code);
        if let Err(e) = write_file(path, |w| write_json(w, &manifest)) {
            let _ = writeln!(err, "error: cannot write manifest: {e}");
            return if code == 0 { 1 } else { code };
        }
    }
    code
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } | Error::Quadrature { .. } | Error::Infeasible(_) | Error::FlowEscaped { .. } => 3,
        Error::Io(_) | Error::Json(_) => 1,
        _ => 2,
    }
}

/// `Ok(false)` means the command ran but did not converge.
fn execute(cli: &Cli, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let o = cli.out.as_deref();
    match &cli.command {
        Command::Star12(a) => star12(a, o, man, out),
        Command::SolveStar(a) => solve(a, o, man, out),
        Command::Optimize(a) => optimize(a, o, cli.seed, man, out),
        Command::Density(a) => density(a, cli.seed, man, out),
        Command::Entropy(a) => entropy(a, man, out),
        Command::Heatflow(a) => heatflow(a, o, man, out),
        Command::Insertion(a) => insertion(a, o, man, out),
        Command::Region(a) => region(a, o, man, out),
        Command::SweepAb(a) => sweep(a, o, cli.seed, man, out),
        Command::Sample(a) => sample(a, o, cli.seed, man, out),
        Command::Ldp(a) => ldp(a, o, man, out),
        Command::PdeCheck(a) => pde(a, man, out),
        Command::Dimple => {
            let (s, r) = dimple();
            writeln!(out, "s = {s:.6}\nr = {r:.6}")?;
            man.record("s", s)?;
            man.record("r", r)?;
            Ok(true)
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| Error::Parse(format!("bad {what} {:?}", p.trim()))))
        .collect()
}

fn parse_count(s: &str) -> Result<u64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("bad count {s:?}")))?;
    if !(v >= 1.0 && v.fract() == 0.0 && v < 1e18) {
        return Err(Error::invalid(format!("count must be a positive integer, got {s}")));
    }
    Ok(v as u64)
}

fn write_grid_outputs(g: &GridPermuton, path: Option<&Path>, pgm: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        write_file(p, |w| write_grid_csv(w, g))?;
        write_file(&p.with_extension("json"), |w| write_json(w, &GridSidecar::of(g)))?;
    }
    if let Some(p) = pgm {
        write_file(p, |w| write_pgm(w, g))?;
    }
    Ok(())
}

fn star12(a: &Star12Args, o: Option<&Path>, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let r = match (a.r, a.rho) {
        (Some(r), _) => r,
        (None, Some(rho)) => star12_r_from_rho(rho)?,
        (None, None) => return Err(Error::invalid("give --rho or --r")),
    };
    let g = star12_grid(r, a.grid)?;
    let (rho, h, hg) = (star12_rho(r), star12_entropy(r), entropy_grid(&g));
    writeln!(out, "r = {r}\nrho12 = {rho}\nentropy = {h}\ngrid_entropy = {hg}")?;
    for (k, v) in [("r", r), ("rho12", rho), ("entropy", h), ("grid_entropy", hg)] {
        man.record(k, v)?;
    }
    write_grid_outputs(&g, o, a.pgm.as_deref())?;
    Ok(true)
}

fn solve(a: &SolveStarArgs, o: Option<&Path>, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let shape: Vec<(u32, u32)> = match (&a.terms, &a.classes) {
        (Some(t), _) => t
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let v: Vec<u32> = parse_list(p, "exponent")?;
                match v[..] {
                    [r, s] => Ok((r, s)),
                    _ => Err(Error::Parse(format!("term {p:?} needs two exponents r,s"))),
                }
            })
            .collect::<Result<_>>()?,
        (None, Some(c)) => c.split(',').map(star_shape).collect::<Result<_>>()?,
        (None, None) => return Err(Error::invalid("give --terms or --classes")),
    };
    let targets: Vec<f64> = parse_list(&a.targets, "target")?;
    let sol = solve_star(&shape, &targets)?;
    writeln!(
        out,
        "alpha = {:?}\ndensities = {:?}\nfree_energy = {}\nentropy = {}\nnewton_iterations = {}",
        sol.alpha, sol.densities, sol.free_energy, sol.entropy, sol.newton_iterations
    )?;
    man.record("alpha", &sol.alpha)?;
    man.record("entropy", sol.entropy)?;
    man.record("free_energy", sol.free_energy)?;
    if let Some(p) = o {
        write_file(p, |w| write_json(w, &sol))?;
    }
    Ok(true)
}

fn optimize(a: &OptimizeArgs, o: Option<&Path>, seed: u64, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let cons: ConstraintSet = a.constraints.parse()?;
    let opts = OptimizerOptions {
        constraint_tol: a.tol,
        gradient_tol: a.tol,
        max_inner: a.max_iter,
        max_outer: a.max_outer,
        restarts: a.restarts,
        seed,
    };
    let res = maximize_entropy(&cons, a.grid, &opts)?;
    writeln!(
        out,
        "converged = {}\nentropy = {}\nachieved = {:?}\nresiduals = {:?}\nmultipliers = {:?}\niterations = {}\nprojected_gradient = {:e}",
        res.converged, res.entropy, res.achieved, res.residuals, res.multipliers, res.iterations, res.projected_gradient
    )?;
    if let Some(s) = res.restart_spread {
        writeln!(out, "restart_spread = {s:e}")?;
    }
    man.record("result", &res)?;
    write_grid_outputs(res.grid(), o, a.pgm.as_deref())?;
    Ok(res.converged)
}

enum Loaded {
    Grid(GridPermuton),
    Perm(Permutation),
    Segments(crate::measure::SegmentPermuton),
}

fn load(s: &Source) -> Result<Loaded> {
    if let Some(p) = &s.input {
        return Ok(Loaded::Grid(read_grid_file(p)?));
    }
    if let Some(p) = &s.perm {
        return Ok(Loaded::Perm(p.parse()?));
    }
    if let Some(ab) = &s.gamma {
        let v: Vec<f64> = parse_list(ab, "parameter")?;
        return match v[..] {
            [a, b] => Ok(Loaded::Segments(gamma_ab(a, b)?)),
            _ => Err(Error::Parse("--gamma needs a,b".into())),
        };
    }
    if let Some(rho) = s.star12_rho {
        return Ok(Loaded::Grid(star12_grid(star12_r_from_rho(rho)?, s.grid)?));
    }
    Err(Error::invalid("no source given"))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn density(a: &DensityArgs, seed: u64, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let specs: Vec<PatternSpec> = parse_list(&a.pattern, "pattern")?;
    let source = load(&a.source)?;
    for spec in &specs {
        let (value, stderr) = match (&source, &a.mc) {
            (Loaded::Perm(p), _) => {
                if spec.len() > p.len() {
                    return Err(Error::invalid(format!("pattern {spec} is longer than the permutation")));
                }
                (pattern_count(p, spec)? as f64 / binomial(p.len(), spec.len()), None)
            }
            (Loaded::Grid(g), None) => (density_grid_exact(g, spec)?, None),
            (Loaded::Grid(g), Some(t)) => {
                let e = density_mc(g, spec, parse_count(t)?, seed)?;
                (e.value, Some(e.stderr))
            }
            (Loaded::Segments(s), t) => {
                let trials = t.as_deref().map(parse_count).transpose()?.unwrap_or(1_000_000);
                let e = density_mc(s, spec, trials, seed)?;
                (e.value, Some(e.stderr))
            }
        };
        match stderr {
            Some(se) => writeln!(out, "{spec} = {value} ± {se}")?,
            None => writeln!(out, "{spec} = {value}")?,
        }
        man.record(&format!("rho_{spec}"), value)?;
    }
    Ok(true)
}

fn entropy(a: &EntropyArgs, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let g = read_grid_file(&a.input)?;
    let h = entropy_grid(&g);
    writeln!(out, "entropy = {h}")?;
    man.record("entropy", h)?;
    if let Some(levels) = &a.levels {
        let seq = riemann_refinement(&g, &parse_list::<usize>(levels, "level")?)?;
        for (m, h) in &seq {
            writeln!(out, "m = {m}: entropy = {h}")?;
        }
        man.record("refinement", &seq)?;
    }
    Ok(true)
}

fn heatflow(a: &HeatflowArgs, o: Option<&Path>, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let g = read_grid_file(&a.input)?;
    let mut spec = HeatFlowSpec::new(a.t, g.m());
    spec.symbol = match a.symbol {
        SymbolArg::Lattice => HeatSymbol::Lattice,
        SymbolArg::Continuum => HeatSymbol::Continuum,
    };
    let res = heat_flow_detailed(&g, &spec)?;
    let (before, after) = (entropy_grid(&g), entropy_grid(&res.grid));
    writeln!(out, "entropy_before = {before}\nentropy_after = {after}\nclipped = {}", res.clipped)?;
    man.record("entropy_before", before)?;
    man.record("entropy_after", after)?;
    write_grid_outputs(&res.grid, o, None)?;
    Ok(true)
}

fn insertion(a: &InsertionArgs, o: Option<&Path>, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let fam = if let Some(p) = &a.input {
        let g = read_grid_file(p)?;
        insertion_from_permuton(&g, a.my.unwrap_or(g.m()))?
    } else if let Some(p) = &a.family {
        read_insertion_file(p)?
    } else if let Some(r) = a.exp {
        InsertionFamily::truncated_exponential(r, a.mt, a.my.unwrap_or(a.mt))?
    } else {
        return Err(Error::invalid("give --in, --family or --exp"));
    };
    let h = insertion_entropy(&fam);
    writeln!(out, "mt = {}\nmy = {}\ninsertion_entropy = {h}", fam.mt(), fam.my())?;
    man.record("insertion_entropy", h)?;
    match a.reconstruct {
        Some(m) => {
            let rec = permuton_from_insertion(&fam, m)?;
            let hg = entropy_grid(&rec.grid);
            writeln!(out, "grid_entropy = {hg}\nmarginal_correction = {:e}", rec.correction)?;
            man.record("grid_entropy", hg)?;
            man.record("marginal_correction", rec.correction)?;
            write_grid_outputs(&rec.grid, o, None)?;
        }
        None => {
            if let Some(p) = o {
                write_file(p, |w| write_insertion_csv(w, &fam))?;
            }
        }
    }
    Ok(true)
}

fn region(a: &RegionArgs, o: Option<&Path>, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    if a.samples < 2 {
        return Err(Error::invalid("need at least 2 samples per curve"));
    }
    let curves = match a.model {
        RegionModel::R123 => region_123_321(a.samples).all().map(Clone::clone).to_vec(),
        RegionModel::Star23 => {
            let (lo, hi) = region_star23_boundary(a.samples);
            vec![lo, hi]
        }
    };
    for c in &curves {
        let ((x0, y0), (x1, y1)) = (c.first(), c.last());
        writeln!(out, "{}: ({x0:.6}, {y0:.6}) -> ({x1:.6}, {y1:.6}), {} points", c.label, c.points.len())?;
    }
    man.record("curves", curves.iter().map(|c| c.label.clone()).collect::<Vec<_>>())?;
    if let Some(p) = o {
        write_file(p, |w| write_curves_csv(w, &curves))?;
    }
    Ok(true)
}

fn sweep(a: &SweepArgs, o: Option<&Path>, seed: u64, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let trials = parse_count(&a.trials)?;
    let pts = gamma_ab_sweep(a.na, a.nb, trials, seed)?;
    writeln!(out, "points = {}\ntrials_per_point = {trials}", pts.len())?;
    man.record("points", pts.len())?;
    match o {
        Some(p) => write_file(p, |w| write_sweep_csv(w, &pts))?,
        None => write_sweep_csv(&mut *out, &pts)?,
    }
    Ok(true)
}

fn sample(a: &SampleArgs, o: Option<&Path>, seed: u64, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let pi = match load(&a.source)? {
        Loaded::Grid(g) => sample_permutation(&g, a.n, seed)?,
        Loaded::Segments(s) => sample_permutation(&s, a.n, seed)?,
        Loaded::Perm(p) => sample_permutation(&GridPermuton::from_permutation(&p, p.len())?, a.n, seed)?,
    };
    let line: Vec<String> = pi.as_slice().iter().map(|v| (v + 1).to_string()).collect();
    let line = line.join(",");
    man.record("n", a.n)?;
    match o {
        Some(p) => write_file(p, |w| Ok(writeln!(w, "{line}")?))?,
        None => writeln!(out, "{line}")?,
    }
    Ok(true)
}

fn ldp(a: &LdpArgs, o: Option<&Path>, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let ns: Vec<usize> = parse_list(&a.n, "size")?;
    let rep = ldp_report(&ns, a.rho, a.eps)?;
    if a.json {
        write_json(&mut *out, &rep)?;
    } else {
        writeln!(out, "s({}) = {}", rep.rho, rep.limit)?;
        writeln!(out, "window limit at eps = {}: {}", rep.eps, rep.window_limit)?;
        for p in &rep.points {
            writeln!(out, "n = {}: estimate = {}  limit = {}  gap = {:e}", p.n, p.estimate, rep.limit, p.estimate - rep.limit)?;
        }
    }
    man.record("report", &rep)?;
    if let Some(p) = o {
        write_file(p, |w| write_json(w, &rep))?;
    }
    Ok(true)
}

fn pde(a: &PdeArgs, man: &mut Manifest, out: &mut dyn Write) -> Result<bool> {
    let g = match (&a.input, a.star12_r) {
        (Some(p), _) => read_grid_file(p)?,
        (None, Some(r)) => star12_grid(r, a.grid)?,
        (None, None) => return Err(Error::invalid("give --in or --star12-r")),
    };
    let checks: &[(&str, fn(&GridPermuton) -> Result<crate::optimizer::PdeFit>)] = match a.model {
        PdeModel::P12 => &[("12", pde_residual_12)],
        PdeModel::P123 => &[("123", pde_residual_123)],
        PdeModel::Both => &[("12", pde_residual_12), ("123", pde_residual_123)],
    };
    for (name, f) in checks {
        let fit = f(&g)?;
        writeln!(out, "{name}: alpha = {}  rms_residual = {:e}", fit.alpha, fit.rms_residual)?;
        man.record(&format!("pde_{name}"), fit)?;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("permuton").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["no-such-command"]).0, 2);
        assert_eq!(run_capture(&["star12", "--bogus"]).0, 2);
        assert_eq!(run_capture(&["star12", "--rho", "0.4", "--r", "1"]).0, 2);
        let (code, _, err) = run_capture(&["star12", "--rho", "1.5"]);
        assert_eq!(code, 2, "{err}");
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn dimple_and_ldp() {
        let (code, out, _) = run_capture(&["dimple"]);
        assert_eq!(code, 0);
        let value = |key: &str| -> f64 {
            out.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap()
        };
        assert!((value("s = ") - 0.653).abs() < 1e-3, "{out}");
        assert!((value("r = ") - 0.278).abs() < 1e-3, "{out}");
        let (code, out, _) = run_capture(&["ldp", "--rho", "0.4", "--eps", "0.05", "--n", "50"]);
        assert_eq!(code, 0);
        assert!(out.contains("estimate") && out.contains("limit"), "{out}");
    }

    #[test]
    fn infeasible_star_target_exits_3() {
        let (code, _, err) = run_capture(&["solve-star", "--classes", "*2,**3", "--targets", "0.5,0.2"]);
        assert_eq!(code, 3, "{err}");
    }

    #[test]
    fn negative_parameters_parse() {
        let (code, out, err) = run_capture(&["star12", "--r", "-2", "--grid", "8"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("r = -2"));
    }
}
