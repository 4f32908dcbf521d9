//! `stationary`: build stationary cell actions, compute entropy, Radon–Nikodym
//! tails, δ and containment defects, and run the experiments.
//!
//! Exit codes: 0 success, 1 validation failure, 2 budget or resolution
//! error, 3 malformed input.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stationary::action::STATIONARITY_TOL;
use stationary::experiments::{
    run_continuity, run_prop2_suite, run_realization, ContinuityConfig, ExperimentConfig,
    ModelSpec, Prop2SuiteConfig, RealizationConfig,
};
use stationary::geometry::{
    containment_defect, delta, prop2_construct, CloudMode, DeltaOptions, DeltaReport,
    OrderedPartition,
};
use stationary::io::{action_to_json, read_action};
use stationary::models::{
    boundary_action, convex_combine, finite_bijective, stabilize, trivial_action, BoundarySpec,
    Permutations,
};
use stationary::{CellAction, Error, GroupWord, Result, StepDistribution};

#[derive(Parser)]
#[command(
    name = "stationary",
    version,
    about = "Stationary actions, Furstenberg entropy and the weak-equivalence metric"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an action file.
    #[command(subcommand)]
    Build(BuildCommand),
    /// Check weights, transports and stationarity.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = STATIONARITY_TOL)]
        tolerance: f64,
    },
    /// Furstenberg entropy in nats.
    Entropy {
        file: PathBuf,
        /// Also print the contribution of each support word.
        #[arg(long)]
        per_generator: bool,
    },
    /// μ{x : d(w^aμ)/dμ(x) > c}.
    RnTail {
        file: PathBuf,
        #[arg(long)]
        word: String,
        /// Thresholds; without any, the full distribution is printed.
        #[arg(long = "threshold", value_delimiter = ',')]
        thresholds: Vec<f64>,
    },
    /// Truncated δ between two actions.
    Delta(PairArgs),
    /// Truncated directed containment defect of the first action in the second.
    Defect(PairArgs),
    /// Constructive two-sided partition matching with a certificate.
    Prop2 {
        file_a: PathBuf,
        file_b: PathBuf,
        /// The finite set F; must contain `e`.
        #[arg(long = "words", value_delimiter = ',', default_value = "e,a")]
        words: Vec<String>,
        /// Partition of the first action: pieces separated by `;`, cell ids by `,`.
        /// Defaults to two pieces by cell parity.
        #[arg(long)]
        partition: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an experiment and write CSV.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Subcommand)]
enum BuildCommand {
    /// Harmonic measure on the boundary of a free group at cylinder depth L.
    Boundary {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        depth: usize,
        /// Step probabilities by letter (a, a^-1, b, b^-1, ...); uniform by default.
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Every element acts as the identity.
    Trivial {
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Generators permute finitely many cells.
    Bijective {
        /// One per generator, e.g. `a=1,2,0`.
        #[arg(long = "perm", required = true)]
        perms: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// t·a + (1−t)·b.
    Combine {
        #[arg(long)]
        t: f64,
        file_a: PathBuf,
        file_b: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Product with a trivial action on the given weights.
    Stabilize {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Args)]
struct OutputArg {
    /// Destination file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PairArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    #[arg(long, default_value_t = 6)]
    max_m: usize,
    #[arg(long, default_value_t = 6)]
    max_n: usize,
    /// `exact` or `sampled`.
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the per-term table as CSV (`-` for stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentCommon {
    /// JSON config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// δ(a_t, a_ref), entropy and derivative tails along t·a + (1−t)·b.
    Continuity {
        #[command(flatten)]
        common: ExperimentCommon,
        /// Action file for a (default: rank-2 boundary, depth 1).
        #[arg(long)]
        a: Option<PathBuf>,
        /// Action file for b (default: one-cell trivial action).
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(long)]
        t_ref: Option<f64>,
        #[arg(long)]
        max_m: Option<usize>,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        rn_words: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        rn_thresholds: Option<Vec<f64>>,
        /// Destination of the tail curves (default: next to the main output).
        #[arg(long)]
        rn_output: Option<PathBuf>,
    },
    /// Entropy values of a model catalog and combinations hitting targets.
    Realization {
        #[command(flatten)]
        common: ExperimentCommon,
        /// Action file combined with the trivial action (default: rank-2 boundary, depth 2).
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long = "target", value_delimiter = ',')]
        targets: Option<Vec<f64>>,
    },
    /// Constructive matching on random pairs of permutation actions.
    Prop2Suite {
        #[command(flatten)]
        common: ExperimentCommon,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        budget: Option<u64>,
    },
}

/// Failure with an exit code, reported on stderr.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build(b) => build(b),
        Command::Validate { file, tolerance } => validate(&file, tolerance),
        Command::Entropy {
            file,
            per_generator,
        } => entropy(&file, per_generator),
        Command::RnTail {
            file,
            word,
            thresholds,
        } => rn_tail(&file, &word, &thresholds),
        Command::Delta(args) => pair(args, false),
        Command::Defect(args) => pair(args, true),
        Command::Prop2 {
            file_a,
            file_b,
            words,
            partition,
            epsilon,
            budget,
            seed,
        } => prop2(
            &file_a,
            &file_b,
            &words,
            partition.as_deref(),
            epsilon,
            budget,
            seed,
        ),
        Command::Experiment(e) => experiment(e),
    }
}

/// `x` with 12 significant digits in positional notation.
fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (11 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) if p == Path::new("-") => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
    })
}

fn load(path: &Path) -> std::result::Result<CellAction, Failure> {
    let a = read_action(path).map_err(|e| Failure {
        code: e.exit_code() as u8,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(a)
}

fn load_valid(path: &Path) -> std::result::Result<CellAction, Failure> {
    let a = load(path)?;
    let report = a.validate(STATIONARITY_TOL);
    if !report.is_valid() {
        let mut message = format!("{} does not validate", path.display());
        for v in &report.violations {
            message.push_str(&format!("\n  {v}"));
        }
        return Err(Failure { code: 1, message });
    }
    Ok(a)
}

fn measure(rank: usize, probs: &Option<Vec<f64>>) -> Result<StepDistribution> {
    match probs {
        None => StepDistribution::uniform_nearest_neighbor(rank),
        Some(p) => StepDistribution::nearest_neighbor(rank, p),
    }
}

fn parse_perm(rank: usize, text: &str) -> Result<(u8, Vec<usize>)> {
    let (letter, values) = text
        .split_once('=')
        .ok_or_else(|| Error::Malformed(format!("expected `letter=i,j,...`, got `{text}`")))?;
    let g = stationary::experiments::generator_index(rank, letter.trim())?;
    let p = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Malformed(format!("bad index `{v}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((g, p))
}

fn build(cmd: BuildCommand) -> Outcome {
    let (action, out) = match cmd {
        BuildCommand::Boundary {
            rank,
            depth,
            probs,
            out,
        } => (
            boundary_action(&BoundarySpec::new(rank, depth, measure(rank, &probs)?))?,
            out,
        ),
        BuildCommand::Trivial {
            weights,
            rank,
            probs,
            out,
        } => (trivial_action(&weights, &measure(rank, &probs)?)?, out),
        BuildCommand::Bijective {
            perms,
            weights,
            rank,
            probs,
            out,
        } => {
            let mut table = Permutations::new();
            for p in &perms {
                let (g, map) = parse_perm(rank, p)?;
                table.insert(g, map);
            }
            let n = table.values().next().map_or(0, Vec::len);
            let weights = weights.unwrap_or_else(|| vec![1.0 / n as f64; n]);
            (
                finite_bijective(&table, &weights, &measure(rank, &probs)?)?,
                out,
            )
        }
        BuildCommand::Combine {
            t,
            file_a,
            file_b,
            out,
        } => (
            convex_combine(&load_valid(&file_a)?, &load_valid(&file_b)?, t)?,
            out,
        ),
        BuildCommand::Stabilize { file, weights, out } => {
            (stabilize(&load_valid(&file)?, &weights)?, out)
        }
    };
    let report = action.validate(STATIONARITY_TOL);
    if !report.is_valid() {
        let mut message = "constructed action does not validate".to_string();
        for v in &report.violations {
            message.push_str(&format!("\n  {v}"));
        }
        message.push_str(&format!(
            "\n  max stationarity residual {:e}",
            report.max_residual()
        ));
        return Err(Failure { code: 1, message });
    }
    let text = action_to_json(&action)?;
    let summary = format!(
        "cells: {}\nentropy: {}",
        action.n_cells(),
        sig12(action.entropy()?)
    );
    match &out.output {
        Some(path) => {
            std::fs::write(path, text)?;
            println!("wrote {}", path.display());
            println!("{summary}");
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn validate(path: &Path, tolerance: f64) -> Outcome {
    let a = load(path)?;
    let report = a.validate(tolerance);
    println!("cells: {}", a.n_cells());
    println!("kind: {}", a.kind().as_str());
    println!("max stationarity residual: {:e}", report.max_residual());
    if report.is_valid() {
        println!("valid");
        Ok(())
    } else {
        for v in &report.violations {
            println!("violation: {v}");
        }
        Err(Failure {
            code: 1,
            message: format!("{} violation(s)", report.violations.len()),
        })
    }
}

fn entropy(path: &Path, per_generator: bool) -> Outcome {
    let a = load_valid(path)?;
    let terms = a.entropy_terms()?;
    let total: f64 = terms.iter().map(|t| t.weighted).sum();
    println!("{}", sig12(total));
    if per_generator {
        for t in &terms {
            println!(
                "{:<8} prob {} divergence {} weighted {}",
                t.word.to_string(),
                sig12(t.prob),
                sig12(t.divergence),
                sig12(t.weighted)
            );
        }
    }
    Ok(())
}

fn rn_tail(path: &Path, word: &str, thresholds: &[f64]) -> Outcome {
    let a = load_valid(path)?;
    let w = GroupWord::parse(a.rank(), word)?;
    let dist = a.rn_pieces(&w)?;
    let mut out = open_output(None)?;
    writeln!(
        out,
        "word {w}: derivative bounded by {}",
        sig12(a.rn_word_bound(&w))
    )?;
    if thresholds.is_empty() {
        writeln!(out, "value mass tail_above")?;
        for &(v, m) in &dist.atoms {
            writeln!(out, "{} {} {}", sig12(v), sig12(m), sig12(dist.tail(v)))?;
        }
    } else {
        writeln!(out, "threshold tail")?;
        for &c in thresholds {
            writeln!(out, "{} {}", sig12(c), sig12(a.rn_tail(&w, c)?))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn pair(args: PairArgs, directed: bool) -> Outcome {
    let a = load_valid(&args.file_a)?;
    let b = load_valid(&args.file_b)?;
    let opts = DeltaOptions {
        max_m: args.max_m,
        max_n: args.max_n,
        mode: CloudMode::parse(&args.mode)?,
        mode_b: None,
        budget: args.budget,
        seed: args.seed,
    };
    let report: DeltaReport = if directed {
        containment_defect(&a, &b, &opts)?
    } else {
        delta(&a, &b, &opts)?
    };
    let mut out = open_output(None)?;
    write!(out, "{report}")?;
    writeln!(out, "seed: {} budget: {}", opts.seed, opts.budget)?;
    out.flush()?;
    drop(out);
    if let Some(path) = &args.csv {
        let mut w = open_output(Some(path))?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    if !report.is_complete() {
        return Err(Failure {
            code: 2,
            message: format!(
                "{} term(s) exceeded the enumeration budget",
                report.errors().count()
            ),
        });
    }
    Ok(())
}

fn parse_partition(a: &CellAction, spec: Option<&str>) -> Result<OrderedPartition> {
    match spec {
        None => OrderedPartition::new((0..a.n_cells()).map(|c| c % 2).collect(), 2),
        Some(text) => {
            let pieces: Vec<Vec<&str>> = text
                .split(';')
                .map(|p| {
                    p.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .collect()
                })
                .collect();
            OrderedPartition::from_ids(a, &pieces)
        }
    }
}

fn prop2(
    file_a: &Path,
    file_b: &Path,
    words: &[String],
    partition: Option<&str>,
    epsilon: f64,
    budget: u64,
    seed: u64,
) -> Outcome {
    let a = load_valid(file_a)?;
    let b = load_valid(file_b)?;
    let words: Vec<GroupWord> = words
        .iter()
        .map(|w| GroupWord::parse(a.rank(), w))
        .collect::<Result<_>>()?;
    let part = parse_partition(&a, partition)?;
    let outcome = prop2_construct(&a, &b, &words, &part, epsilon, budget, seed)?;
    let c = &outcome.certificate;
    let mut out = open_output(None)?;
    writeln!(
        out,
        "words: {}",
        words
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    )?;
    writeln!(out, "epsilon: {}", sig12(c.epsilon))?;
    writeln!(out, "family size: {} atoms: {}", c.family_size, c.atoms)?;
    writeln!(
        out,
        "search: {} ({} evaluations)",
        if c.exhaustive {
            "exhaustive"
        } else {
            "annealed"
        },
        c.evaluations
    )?;
    writeln!(out, "delta achieved: {}", sig12(c.delta_achieved))?;
    writeln!(out, "two-sided discrepancy: {}", sig12(c.two_sided))?;
    writeln!(
        out,
        "bound 7*delta: {} ({})",
        sig12(7.0 * c.delta_achieved),
        if c.bound_holds { "holds" } else { "violated" }
    )?;
    let pieces: Vec<String> = (0..outcome.partition_b.n())
        .map(|i| {
            outcome
                .partition_b
                .piece(i)
                .iter()
                .map(|&c| b.cells()[c].id.clone())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    writeln!(out, "partition of b: {}", pieces.join(";"))?;
    writeln!(
        out,
        "{}",
        if c.certified {
            "certified"
        } else {
            "not certified"
        }
    )?;
    out.flush()?;
    Ok(())
}

fn load_config(
    common: &ExperimentCommon,
) -> std::result::Result<Option<ExperimentConfig>, Failure> {
    Ok(match &common.config {
        Some(path) => Some(ExperimentConfig::read(path)?),
        None => None,
    })
}

fn config_dir(common: &ExperimentCommon) -> PathBuf {
    common
        .config
        .as_ref()
        .and_then(|p| p.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn wrong_kind(expected: &str) -> Failure {
    Failure {
        code: 3,
        message: format!("config is not a {expected} experiment"),
    }
}

fn rn_path(main: &Path) -> PathBuf {
    let stem = main
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    main.with_file_name(format!("{stem}.rn_tail.csv"))
}

fn experiment(cmd: ExperimentCommand) -> Outcome {
    match cmd {
        ExperimentCommand::Continuity {
            common,
            a,
            b,
            t_grid,
            t_ref,
            max_m,
            max_n,
            mode,
            budget,
            rn_words,
            rn_thresholds,
            rn_output,
        } => {
            let mut cfg = match load_config(&common)? {
                Some(ExperimentConfig::Continuity(c)) => c,
                Some(_) => return Err(wrong_kind("continuity")),
                None => ContinuityConfig::default(),
            };
            let cwd = std::env::current_dir()?;
            if let Some(p) = a {
                cfg.a = ModelSpec::File { path: cwd.join(p) };
            }
            if let Some(p) = b {
                cfg.b = ModelSpec::File { path: cwd.join(p) };
            }
            if let Some(v) = t_grid {
                cfg.t_grid = v;
            }
            if let Some(v) = t_ref {
                cfg.t_ref = v;
            }
            if let Some(v) = max_m {
                cfg.max_m = v;
            }
            if let Some(v) = max_n {
                cfg.max_n = v;
            }
            if let Some(v) = mode {
                cfg.mode = CloudMode::parse(&v)?;
            }
            if let Some(v) = budget {
                cfg.budget = v;
            }
            if let Some(v) = common.seed {
                cfg.seed = v;
            }
            if rn_words.is_some() {
                cfg.rn_words = rn_words;
            }
            if let Some(v) = rn_thresholds {
                cfg.rn_thresholds = v;
            }
            if common.output.is_some() {
                cfg.output = common.output.clone();
            }
            let result = run_continuity(&cfg, &config_dir(&common))?;
            match &cfg.output {
                Some(path) => {
                    let mut w = open_output(Some(path))?;
                    result.write_csv(&mut w)?;
                    w.flush()?;
                    let rn = rn_output.unwrap_or_else(|| rn_path(path));
                    let mut w = open_output(Some(&rn))?;
                    result.write_rn_csv(&mut w)?;
                    w.flush()?;
                }
                None => {
                    let mut w = open_output(None)?;
                    result.write_csv(&mut w)?;
                    if let Some(rn) = &rn_output {
                        w.flush()?;
                        let mut r = open_output(Some(rn))?;
                        result.write_rn_csv(&mut r)?;
                        r.flush()?;
                    } else {
                        writeln!(w)?;
                        result.write_rn_csv(&mut w)?;
                    }
                    w.flush()?;
                }
            }
            if !result.passed() {
                return Err(Failure {
                    code: 1,
                    message: format!(
                        "continuity checks failed: entropy_affine={} delta_monotone={} rn_bound={}",
                        result.entropy_affine, result.delta_monotone, result.rn_bound_holds
                    ),
                });
            }
            Ok(())
        }
        ExperimentCommand::Realization {
            common,
            source,
            targets,
        } => {
            let mut cfg = match load_config(&common)? {
                Some(ExperimentConfig::Realization(c)) => c,
                Some(_) => return Err(wrong_kind("realization")),
                None => RealizationConfig::default(),
            };
            if let Some(p) = source {
                cfg.source = ModelSpec::File {
                    path: std::env::current_dir()?.join(p),
                };
            }
            if let Some(t) = targets {
                cfg.targets = t;
            }
            if let Some(v) = common.seed {
                cfg.seed = v;
            }
            if common.output.is_some() {
                cfg.output = common.output.clone();
            }
            let result = run_realization(&cfg, &config_dir(&common))?;
            let mut w = open_output(cfg.output.as_deref())?;
            result.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        ExperimentCommand::Prop2Suite {
            common,
            trials,
            cells,
            epsilon,
            budget,
        } => {
            let mut cfg = match load_config(&common)? {
                Some(ExperimentConfig::Prop2Suite(c)) => c,
                Some(_) => return Err(wrong_kind("prop2-suite")),
                None => Prop2SuiteConfig::default(),
            };
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = cells {
                cfg.cells = v;
            }
            if let Some(v) = epsilon {
                cfg.epsilon = v;
            }
            if let Some(v) = budget {
                cfg.budget = v;
            }
            if let Some(v) = common.seed {
                cfg.seed = v;
            }
            if common.output.is_some() {
                cfg.output = common.output.clone();
            }
            let result = run_prop2_suite(&cfg)?;
            let mut w = open_output(cfg.output.as_deref())?;
            result.write_csv(&mut w)?;
            w.flush()?;
            if result.violations() > 0 {
                return Err(Failure {
                    code: 1,
                    message: format!(
                        "{} certified trial(s) violate the 7δ bound",
                        result.violations()
                    ),
                });
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.5 * 3f64.ln()), "0.549306144334");
        assert_eq!(sig12(0.3 * 0.5 * 3f64.ln()), "0.164791843300");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1.00000000000");
        assert_eq!(sig12(0.99999999999999), "1.00000000000");
    }
}
