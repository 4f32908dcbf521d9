//! Experiments behind the command-line tool.
//!
//! * continuity: δ(a_t, a_ref), entropy and Radon–Nikodym tails along the
//!   segment a_t = t·a + (1−t)·b;
//! * realization: entropy values of a catalog of models, and convex
//!   combinations realizing prescribed targets;
//! * prop2-suite: the constructive two-sided matching on random pairs of
//!   small permutation actions.
//!
//! Each experiment takes a JSON config (or the equivalent CLI flags) and
//! writes CSV with `#` metadata lines followed by a header row.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::CellAction;
use crate::error::{Error, Result};
use crate::geometry::{
    prop2_construct, report_from_families, CloudFamily, CloudMode, DeltaOptions, OrderedPartition,
};
use crate::io::format_f64;
use crate::models::{
    boundary_action, convex_combine, finite_bijective, stabilize, trivial_action, BoundarySpec,
    Permutations,
};
use crate::words::{GroupWord, StepDistribution};

/// Tolerance on |h(a_t) − t·h(a) − (1−t)·h(b)|.
pub const AFFINITY_TOL: f64 = 1e-12;

fn default_rank() -> usize {
    2
}

/// A model description, buildable into a [`CellAction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Boundary {
        rank: usize,
        depth: usize,
        /// Nearest-neighbor step probabilities by letter (a, a⁻¹, b, b⁻¹, …).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probs: Option<Vec<f64>>,
    },
    Trivial {
        #[serde(default = "default_rank")]
        rank: usize,
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probs: Option<Vec<f64>>,
    },
    Bijective {
        #[serde(default = "default_rank")]
        rank: usize,
        /// Permutation per positive generator, keyed by letter.
        perms: BTreeMap<String, Vec<usize>>,
        /// Defaults to uniform weights.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probs: Option<Vec<f64>>,
    },
    Combine {
        t: f64,
        a: Box<ModelSpec>,
        b: Box<ModelSpec>,
    },
    Stabilize {
        base: Box<ModelSpec>,
        weights: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
}

fn step_distribution(rank: usize, probs: &Option<Vec<f64>>) -> Result<StepDistribution> {
    match probs {
        None => StepDistribution::uniform_nearest_neighbor(rank),
        Some(p) => StepDistribution::nearest_neighbor(rank, p),
    }
}

/// Generator index of a single positive letter such as `"b"`.
pub fn generator_index(rank: usize, letter: &str) -> Result<u8> {
    let w = GroupWord::parse(rank, letter)?;
    match w.letters() {
        [l] if !l.inverse => Ok(l.generator),
        _ => Err(Error::Malformed(format!(
            "`{letter}` is not a positive generator"
        ))),
    }
}

fn list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ModelSpec {
    pub fn uniform_boundary(rank: usize, depth: usize) -> Self {
        ModelSpec::Boundary {
            rank,
            depth,
            probs: None,
        }
    }

    pub fn trivial(weights: Vec<f64>) -> Self {
        ModelSpec::Trivial {
            rank: 2,
            weights,
            probs: None,
        }
    }

    /// Builds the action; relative file paths are resolved against `base`.
    pub fn build(&self, base: &Path) -> Result<CellAction> {
        match self {
            ModelSpec::Boundary { rank, depth, probs } => {
                let measure = step_distribution(*rank, probs)?;
                boundary_action(&BoundarySpec::new(*rank, *depth, measure))
            }
            ModelSpec::Trivial {
                rank,
                weights,
                probs,
            } => trivial_action(weights, &step_distribution(*rank, probs)?),
            ModelSpec::Bijective {
                rank,
                perms,
                weights,
                probs,
            } => {
                let m = step_distribution(*rank, probs)?;
                let mut table = Permutations::new();
                for (letter, p) in perms {
                    table.insert(generator_index(*rank, letter)?, p.clone());
                }
                let n = perms.values().next().map_or(0, Vec::len);
                let weights = weights.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
                finite_bijective(&table, &weights, &m)
            }
            ModelSpec::Combine { t, a, b } => convex_combine(&a.build(base)?, &b.build(base)?, *t),
            ModelSpec::Stabilize {
                base: inner,
                weights,
            } => stabilize(&inner.build(base)?, weights),
            ModelSpec::File { path } => crate::io::read_action(base.join(path)),
        }
    }

    /// Short identifier used in CSV rows.
    pub fn describe(&self) -> String {
        let m = |probs: &Option<Vec<f64>>| match probs {
            None => String::new(),
            Some(p) => format!(" m=[{}]", list(p)),
        };
        match self {
            ModelSpec::Boundary { rank, depth, probs } => {
                format!("boundary(r={rank} L={depth}{})", m(probs))
            }
            ModelSpec::Trivial { weights, probs, .. } => {
                format!("trivial(w=[{}]{})", list(weights), m(probs))
            }
            ModelSpec::Bijective { perms, probs, .. } => {
                let n = perms.values().next().map_or(0, Vec::len);
                format!("bijective(N={n}{})", m(probs))
            }
            ModelSpec::Combine { t, a, b } => {
                format!("combine(t={t} {} {})", a.describe(), b.describe())
            }
            ModelSpec::Stabilize { base, weights } => {
                format!("stabilize({} w=[{}])", base.describe(), list(weights))
            }
            ModelSpec::File { path } => format!("file({})", path.display()),
        }
    }
}

fn check_budget(budget: u64) -> Result<()> {
    if budget == 0 {
        return Err(Error::Malformed("budget must be positive".into()));
    }
    Ok(())
}

fn meta_line<W: Write>(out: &mut W, experiment: &str) -> Result<()> {
    writeln!(
        out,
        "# tool=stationary {} experiment={experiment}",
        env!("CARGO_PKG_VERSION")
    )?;
    Ok(())
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

// ---------------------------------------------------------------- continuity

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuityConfig {
    pub a: ModelSpec,
    pub b: ModelSpec,
    pub t_grid: Vec<f64>,
    pub t_ref: f64,
    pub max_m: usize,
    pub max_n: usize,
    pub mode: CloudMode,
    pub budget: u64,
    pub seed: u64,
    /// Words whose derivative tails are tracked; defaults to the support of m.
    pub rn_words: Option<Vec<String>>,
    pub rn_thresholds: Vec<f64>,
    pub output: Option<PathBuf>,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig {
            a: ModelSpec::uniform_boundary(2, 1),
            b: ModelSpec::trivial(vec![1.0]),
            t_grid: (1..=9).map(|k| k as f64 / 10.0).collect(),
            t_ref: 0.5,
            max_m: 6,
            max_n: 6,
            mode: CloudMode::Exact,
            budget: 1_000_000,
            seed: 0,
            rn_words: None,
            rn_thresholds: (0..=40).map(|k| k as f64 / 10.0).collect(),
            output: None,
        }
    }
}

impl ContinuityConfig {
    pub fn options(&self) -> DeltaOptions {
        DeltaOptions {
            max_m: self.max_m,
            max_n: self.max_n,
            mode: self.mode,
            mode_b: None,
            budget: self.budget,
            seed: self.seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::Malformed("empty t grid".into()));
        }
        if self.t_grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::Malformed("t grid values must lie in (0, 1)".into()));
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Malformed(
                "t grid must be strictly increasing".into(),
            ));
        }
        if !(self.t_ref > 0.0 && self.t_ref < 1.0) {
            return Err(Error::Malformed(format!(
                "t_ref {} not in (0, 1)",
                self.t_ref
            )));
        }
        if self.rn_thresholds.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Malformed("thresholds must be ≥ 0".into()));
        }
        check_budget(self.budget)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityRow {
    pub t: f64,
    pub delta: f64,
    pub complete: bool,
    pub entropy: f64,
    pub expected_entropy: f64,
    /// |h(a_t) − h(a_ref)|
    pub entropy_gap: f64,
    /// sup over tracked words and thresholds of |tail_t − tail_ref|
    pub rn_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnCurvePoint {
    pub t: f64,
    pub word: String,
    pub threshold: f64,
    pub tail: f64,
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityResult {
    pub config: ContinuityConfig,
    pub rows: Vec<ContinuityRow>,
    pub curves: Vec<RnCurvePoint>,
    pub tail_bound: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub entropy_ref: f64,
    /// sup over tracked words and thresholds of |tail_a − tail_b|.
    pub rn_constant: f64,
    pub entropy_affine: bool,
    pub delta_monotone: bool,
    pub rn_bound_holds: bool,
}

impl ContinuityResult {
    pub fn passed(&self) -> bool {
        self.entropy_affine && self.delta_monotone && self.rn_bound_holds
    }

    fn header<W: Write>(&self, out: &mut W) -> Result<()> {
        let c = &self.config;
        meta_line(out, "continuity")?;
        writeln!(
            out,
            "# seed={} M={} N={} mode={} budget={} tail_bound={}",
            c.seed,
            c.max_m,
            c.max_n,
            c.mode.as_str(),
            c.budget,
            format_f64(self.tail_bound)
        )?;
        writeln!(
            out,
            "# a={} b={} t_ref={}",
            c.a.describe(),
            c.b.describe(),
            format_f64(c.t_ref)
        )?;
        writeln!(
            out,
            "# entropy_a={} entropy_b={} rn_constant={}",
            format_f64(self.entropy_a),
            format_f64(self.entropy_b),
            format_f64(self.rn_constant)
        )?;
        writeln!(
            out,
            "# entropy_affine={} delta_monotone={} rn_bound={}",
            self.entropy_affine, self.delta_monotone, self.rn_bound_holds
        )?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        self.header(&mut out)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t",
            "delta",
            "tail_bound",
            "complete",
            "entropy",
            "expected_entropy",
            "entropy_gap",
            "rn_gap",
        ])?;
        for r in &self.rows {
            w.write_record([
                format_f64(r.t),
                format_f64(r.delta),
                format_f64(self.tail_bound),
                r.complete.to_string(),
                format_f64(r.entropy),
                format_f64(r.expected_entropy),
                format_f64(r.entropy_gap),
                format_f64(r.rn_gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Tail curves μ{d(w^{a_t}μ)/dμ > c} alongside the reference curve.
    pub fn write_rn_csv<W: Write>(&self, mut out: W) -> Result<()> {
        self.header(&mut out)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "word", "threshold", "tail", "reference_tail", "gap"])?;
        for p in &self.curves {
            w.write_record([
                format_f64(p.t),
                p.word.clone(),
                format_f64(p.threshold),
                format_f64(p.tail),
                format_f64(p.reference),
                format_f64((p.tail - p.reference).abs()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn tail_curve(x: &CellAction, words: &[GroupWord], thresholds: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(words.len() * thresholds.len());
    for w in words {
        let dist = x.rn_pieces(w)?;
        out.extend(thresholds.iter().map(|&c| dist.tail(c)));
    }
    Ok(out)
}

fn sup_gap(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

/// Runs the continuity experiment. Models are built relative to `base`.
pub fn run_continuity(config: &ContinuityConfig, base: &Path) -> Result<ContinuityResult> {
    config.check()?;
    let a = config.a.build(base)?;
    let b = config.b.build(base)?;
    let opts = config.options();
    let entropy_a = a.entropy()?;
    let entropy_b = b.entropy()?;
    let words: Vec<GroupWord> = match &config.rn_words {
        Some(list) => list
            .iter()
            .map(|w| GroupWord::parse(a.rank(), w))
            .collect::<Result<_>>()?,
        None => a.measure().support().cloned().collect(),
    };
    let thresholds = &config.rn_thresholds;
    let curve_a = tail_curve(&a, &words, thresholds)?;
    let curve_b = tail_curve(&b, &words, thresholds)?;
    let rn_constant = sup_gap(&curve_a, &curve_b);

    let member = |t: f64| -> Result<CellAction> {
        let x = convex_combine(&a, &b, t)?;
        x.ensure_valid(crate::action::STATIONARITY_TOL)
            .map_err(|e| Error::Validation(format!("family member t = {t}: {e}")))?;
        Ok(x)
    };
    let reference = member(config.t_ref)?;
    let entropy_ref = reference.entropy()?;
    let curve_ref = tail_curve(&reference, &words, thresholds)?;
    let family_ref = CloudFamily::compute(&reference, &opts, opts.mode)?;

    let mut rows = Vec::with_capacity(config.t_grid.len());
    let mut curves = Vec::new();
    for &t in &config.t_grid {
        let x = member(t)?;
        let report = if t == config.t_ref {
            report_from_families(&family_ref, &family_ref, &opts, false)?
        } else {
            let fam = CloudFamily::compute(&x, &opts, opts.mode)?;
            report_from_families(&fam, &family_ref, &opts, false)?
        };
        let entropy = x.entropy()?;
        let curve = tail_curve(&x, &words, thresholds)?;
        for (wi, w) in words.iter().enumerate() {
            for (ci, &c) in thresholds.iter().enumerate() {
                let k = wi * thresholds.len() + ci;
                curves.push(RnCurvePoint {
                    t,
                    word: w.to_string(),
                    threshold: c,
                    tail: curve[k],
                    reference: curve_ref[k],
                });
            }
        }
        rows.push(ContinuityRow {
            t,
            delta: report.truncated_value,
            complete: report.is_complete(),
            entropy,
            expected_entropy: t * entropy_a + (1.0 - t) * entropy_b,
            entropy_gap: (entropy - entropy_ref).abs(),
            rn_gap: sup_gap(&curve, &curve_ref),
        });
    }

    let tail_bound = crate::geometry::tail_bound(config.max_m, config.max_n);
    let entropy_affine = rows
        .iter()
        .all(|r| (r.entropy - r.expected_entropy).abs() <= AFFINITY_TOL);
    let delta_monotone = delta_approaches_zero(&rows, config.t_ref, tail_bound);
    let rn_bound_holds = rows
        .iter()
        .all(|r| r.rn_gap <= 2.0 * (r.t - config.t_ref).abs() * rn_constant + AFFINITY_TOL);
    Ok(ContinuityResult {
        config: config.clone(),
        rows,
        curves,
        tail_bound,
        entropy_a,
        entropy_b,
        entropy_ref,
        rn_constant,
        entropy_affine,
        delta_monotone,
        rn_bound_holds,
    })
}

/// δ must not increase (beyond `tol`) while moving along the grid toward
/// `t_ref`, and must vanish at `t_ref` itself.
pub fn delta_approaches_zero(rows: &[ContinuityRow], t_ref: f64, tol: f64) -> bool {
    let left: Vec<&ContinuityRow> = rows.iter().filter(|r| r.t <= t_ref).collect();
    let right: Vec<&ContinuityRow> = rows.iter().filter(|r| r.t >= t_ref).rev().collect();
    let toward = |side: &[&ContinuityRow]| side.windows(2).all(|w| w[1].delta <= w[0].delta + tol);
    let at_ref = rows.iter().filter(|r| r.t == t_ref).all(|r| r.delta == 0.0);
    rows.iter().all(|r| r.complete) && toward(&left) && toward(&right) && at_ref
}

// --------------------------------------------------------------- realization

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RealizationConfig {
    pub catalog: Vec<ModelSpec>,
    /// Positive-entropy model combined with the trivial action to hit targets.
    pub source: ModelSpec,
    pub trivial_weights: Vec<f64>,
    pub targets: Vec<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RealizationConfig {
    fn default() -> Self {
        RealizationConfig {
            catalog: vec![
                ModelSpec::uniform_boundary(2, 1),
                ModelSpec::uniform_boundary(2, 2),
                ModelSpec::uniform_boundary(2, 3),
                ModelSpec::uniform_boundary(3, 1),
                ModelSpec::uniform_boundary(3, 2),
                ModelSpec::Boundary {
                    rank: 2,
                    depth: 2,
                    probs: Some(vec![0.4, 0.1, 0.3, 0.2]),
                },
                ModelSpec::trivial(vec![1.0]),
            ],
            source: ModelSpec::uniform_boundary(2, 2),
            trivial_weights: vec![1.0],
            targets: Vec::new(),
            seed: 0,
            output: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationRow {
    pub model: String,
    pub role: &'static str,
    pub ergodic: Option<bool>,
    pub entropy: f64,
    pub t: Option<f64>,
    pub target: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationResult {
    pub config: RealizationConfig,
    pub rows: Vec<RealizationRow>,
    /// Uniform boundary entropies strictly increase with the rank.
    pub rank_monotone: bool,
}

impl RealizationResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        meta_line(&mut out, "realization")?;
        writeln!(
            out,
            "# seed={} M=- N=- tail_bound=- source={} rank_monotone={}",
            self.config.seed,
            self.config.source.describe(),
            self.rank_monotone
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "role", "ergodic", "entropy", "t", "target"])?;
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                r.role.to_string(),
                r.ergodic.map_or(String::new(), |e| e.to_string()),
                format_f64(r.entropy),
                opt_f64(r.t),
                opt_f64(r.target),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// An action of entropy `target` built from `a` and a trivial action:
/// the trivial action itself for 0, `a` for h(a), and t·a + (1−t)·ι with
/// t = target / h(a) in between.
pub fn realize_entropy(
    a: &CellAction,
    trivial_weights: &[f64],
    target: f64,
) -> Result<(CellAction, f64)> {
    let h = a.entropy()?;
    if !(target >= 0.0 && target <= h) {
        return Err(Error::Range { target, max: h });
    }
    if target == 0.0 {
        return Ok((trivial_action(trivial_weights, a.measure())?, 0.0));
    }
    if target == h {
        return Ok((a.clone(), 1.0));
    }
    let t = target / h;
    let iota = trivial_action(trivial_weights, a.measure())?;
    Ok((convex_combine(a, &iota, t)?, t))
}

pub fn run_realization(config: &RealizationConfig, base: &Path) -> Result<RealizationResult> {
    let mut rows = Vec::new();
    let mut by_rank: BTreeMap<usize, f64> = BTreeMap::new();
    for spec in &config.catalog {
        let x = spec.build(base)?;
        let entropy = x.entropy()?;
        if let ModelSpec::Boundary {
            rank, probs: None, ..
        } = spec
        {
            by_rank.insert(*rank, entropy);
        }
        rows.push(RealizationRow {
            model: spec.describe(),
            role: "catalog",
            ergodic: x.ergodic(),
            entropy,
            t: None,
            target: None,
        });
    }
    let source = config.source.build(base)?;
    for &target in &config.targets {
        let (x, t) = realize_entropy(&source, &config.trivial_weights, target)?;
        let model = if t == 0.0 {
            ModelSpec::trivial(config.trivial_weights.clone()).describe()
        } else if t == 1.0 {
            config.source.describe()
        } else {
            format!(
                "combine(t={} {} {})",
                format_f64(t),
                config.source.describe(),
                ModelSpec::trivial(config.trivial_weights.clone()).describe()
            )
        };
        rows.push(RealizationRow {
            model,
            role: "target",
            ergodic: x.ergodic(),
            entropy: x.entropy()?,
            t: Some(t),
            target: Some(target),
        });
    }
    let values: Vec<f64> = by_rank.values().copied().collect();
    let rank_monotone = values.windows(2).all(|w| w[0] < w[1]);
    Ok(RealizationResult {
        config: config.clone(),
        rows,
        rank_monotone,
    })
}

// ---------------------------------------------------------------- prop2 suite

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Prop2SuiteConfig {
    pub trials: usize,
    pub cells: usize,
    pub pieces: usize,
    pub words: Vec<String>,
    pub epsilon: f64,
    pub budget: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for Prop2SuiteConfig {
    fn default() -> Self {
        Prop2SuiteConfig {
            trials: 100,
            cells: 6,
            pieces: 2,
            words: vec!["e".into(), "a".into(), "b".into()],
            epsilon: 0.05,
            budget: 1_000_000,
            seed: 0,
            output: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop2Trial {
    pub trial: usize,
    /// How b was drawn: independent, relabeled copy of a, or perturbed copy.
    pub pairing: &'static str,
    pub atoms: usize,
    pub exhaustive: bool,
    pub delta: f64,
    pub two_sided: f64,
    pub certified: bool,
    pub bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop2SuiteResult {
    pub config: Prop2SuiteConfig,
    pub trials: Vec<Prop2Trial>,
}

impl Prop2SuiteResult {
    pub fn certified(&self) -> usize {
        self.trials.iter().filter(|t| t.certified).count()
    }

    /// Certified trials whose two-sided discrepancy exceeds 7δ.
    pub fn violations(&self) -> usize {
        self.trials
            .iter()
            .filter(|t| t.certified && !t.bound_holds)
            .count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let c = &self.config;
        meta_line(&mut out, "prop2-suite")?;
        writeln!(
            out,
            "# seed={} M=- N=- tail_bound=- trials={} cells={} pieces={} words={} epsilon={} budget={}",
            c.seed,
            c.trials,
            c.cells,
            c.pieces,
            c.words.join(" "),
            format_f64(c.epsilon),
            c.budget
        )?;
        writeln!(
            out,
            "# certified={} violations={}",
            self.certified(),
            self.violations()
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "trial",
            "pairing",
            "atoms",
            "exhaustive",
            "delta",
            "two_sided",
            "certified",
            "bound_holds",
        ])?;
        for t in &self.trials {
            w.write_record([
                t.trial.to_string(),
                t.pairing.to_string(),
                t.atoms.to_string(),
                t.exhaustive.to_string(),
                format_f64(t.delta),
                format_f64(t.two_sided),
                t.certified.to_string(),
                t.bound_holds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniformly random permutations of `cells` points for every generator.
pub fn random_permutations<R: Rng>(rng: &mut R, rank: usize, cells: usize) -> Permutations {
    (0..rank as u8)
        .map(|g| {
            let mut p: Vec<usize> = (0..cells).collect();
            p.shuffle(rng);
            (g, p)
        })
        .collect()
}

/// σ∘p∘σ⁻¹ for every permutation: the same action with cells renamed by σ.
pub fn conjugate(perms: &Permutations, sigma: &[usize]) -> Permutations {
    let mut inv = vec![0; sigma.len()];
    for (i, &s) in sigma.iter().enumerate() {
        inv[s] = i;
    }
    perms
        .iter()
        .map(|(&g, p)| (g, (0..p.len()).map(|x| sigma[p[inv[x]]]).collect()))
        .collect()
}

pub fn run_prop2_suite(config: &Prop2SuiteConfig) -> Result<Prop2SuiteResult> {
    check_budget(config.budget)?;
    if config.cells < 2 || config.pieces == 0 {
        return Err(Error::Malformed("need at least 2 cells and 1 piece".into()));
    }
    let rank = 2;
    let m = StepDistribution::uniform_nearest_neighbor(rank)?;
    let words: Vec<GroupWord> = config
        .words
        .iter()
        .map(|w| GroupWord::parse(rank, w))
        .collect::<Result<_>>()?;
    let weights = vec![1.0 / config.cells as f64; config.cells];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trials = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let pa = random_permutations(&mut rng, rank, config.cells);
        let (pairing, pb) = match trial % 3 {
            0 => (
                "independent",
                random_permutations(&mut rng, rank, config.cells),
            ),
            1 => {
                let mut sigma: Vec<usize> = (0..config.cells).collect();
                sigma.shuffle(&mut rng);
                ("relabeled", conjugate(&pa, &sigma))
            }
            _ => {
                let mut pb = pa.clone();
                let p = pb.get_mut(&0).expect("generator a");
                let i = rng.random_range(0..config.cells);
                let j = (i + 1 + rng.random_range(0..config.cells - 1)) % config.cells;
                p.swap(i, j);
                ("perturbed", pb)
            }
        };
        let a = finite_bijective(&pa, &weights, &m)?;
        let b = finite_bijective(&pb, &weights, &m)?;
        let labels: Vec<usize> = (0..config.cells)
            .map(|_| rng.random_range(0..config.pieces))
            .collect();
        let part = OrderedPartition::new(labels, config.pieces)?;
        let out = prop2_construct(
            &a,
            &b,
            &words,
            &part,
            config.epsilon,
            config.budget,
            config.seed,
        )?;
        let c = out.certificate;
        trials.push(Prop2Trial {
            trial,
            pairing,
            atoms: c.atoms,
            exhaustive: c.exhaustive,
            delta: c.delta_achieved,
            two_sided: c.two_sided,
            certified: c.certified,
            bound_holds: c.bound_holds,
        });
    }
    Ok(Prop2SuiteResult {
        config: config.clone(),
        trials,
    })
}

// ------------------------------------------------------------------- configs

/// A config file: one experiment, selected by its `experiment` field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Continuity(ContinuityConfig),
    Realization(RealizationConfig),
    Prop2Suite(Prop2SuiteConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn output(&self) -> Option<&Path> {
        match self {
            ExperimentConfig::Continuity(c) => c.output.as_deref(),
            ExperimentConfig::Realization(c) => c.output.as_deref(),
            ExperimentConfig::Prop2Suite(c) => c.output.as_deref(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::uniform_boundary_entropy;

    fn here() -> &'static Path {
        Path::new(".")
    }

    #[test]
    fn model_specs_parse_and_build() {
        let text = r#"{"model": "combine", "t": 0.3,
            "a": {"model": "boundary", "rank": 2, "depth": 2},
            "b": {"model": "trivial", "weights": [1.0]}}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let x = spec.build(here()).unwrap();
        assert_eq!(x.n_cells(), 13);
        assert!((x.entropy().unwrap() - 0.3 * 0.5 * 3f64.ln()).abs() < 1e-12);
        assert_eq!(
            spec.describe(),
            "combine(t=0.3 boundary(r=2 L=2) trivial(w=[1]))"
        );
        let bij: ModelSpec = serde_json::from_str(
            r#"{"model": "bijective", "perms": {"a": [1, 2, 0], "b": [0, 2, 1]}}"#,
        )
        .unwrap();
        assert_eq!(bij.build(here()).unwrap().entropy().unwrap(), 0.0);
    }

    #[test]
    fn realization_examples() {
        let a = ModelSpec::uniform_boundary(2, 2).build(here()).unwrap();
        let (x, t) = realize_entropy(&a, &[1.0], 0.2747).unwrap();
        assert!((t - 0.2747 / (0.5 * 3f64.ln())).abs() < 1e-15);
        assert!((x.entropy().unwrap() - 0.2747).abs() < 1e-12);
        assert_eq!(x.ergodic(), Some(false));
        let (z, t0) = realize_entropy(&a, &[1.0], 0.0).unwrap();
        assert_eq!((z.ergodic(), t0, z.n_cells()), (Some(true), 0.0, 1));
        assert!(matches!(
            realize_entropy(&a, &[1.0], 0.6),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            realize_entropy(&a, &[1.0], -0.1),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn realization_rank_sweep() {
        let cfg = RealizationConfig {
            targets: vec![0.0, 0.2747],
            ..Default::default()
        };
        let r = run_realization(&cfg, here()).unwrap();
        assert!(r.rank_monotone);
        let r3 = r
            .rows
            .iter()
            .find(|r| r.model == "boundary(r=3 L=1)")
            .unwrap();
        assert!((r3.entropy - uniform_boundary_entropy(3)).abs() < 1e-9);
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text
            .lines()
            .nth(2)
            .unwrap()
            .starts_with("model,role,ergodic"));
    }

    #[test]
    fn continuity_on_a_small_grid() {
        let cfg = ContinuityConfig {
            t_grid: vec![0.2, 0.35, 0.5, 0.65, 0.8],
            max_m: 3,
            max_n: 3,
            ..Default::default()
        };
        let r = run_continuity(&cfg, here()).unwrap();
        assert!(r.passed(), "{r:?}");
        let mid = r.rows.iter().find(|x| x.t == 0.5).unwrap();
        assert_eq!(mid.delta, 0.0);
        assert!(r.rows[0].delta > 0.0);
        for row in &r.rows {
            assert!((row.entropy - row.t * 0.5 * 3f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn continuity_config_checks() {
        let bad = ContinuityConfig {
            t_grid: vec![0.5, 0.4],
            ..Default::default()
        };
        assert!(bad.check().is_err());
        let bad = ContinuityConfig {
            t_grid: vec![0.0, 0.4],
            ..Default::default()
        };
        assert!(bad.check().is_err());
        let bad = ContinuityConfig {
            budget: 0,
            ..Default::default()
        };
        assert!(bad.check().is_err());
    }

    #[test]
    fn conjugation_relabels_cells() {
        let mut p = Permutations::new();
        p.insert(0, vec![1, 0, 2]);
        // swapping 0 and 1, renamed by 0 → 2, 1 → 0, 2 → 1, swaps 2 and 0
        assert_eq!(conjugate(&p, &[2, 0, 1])[&0], vec![2, 1, 0]);
    }

    #[test]
    fn small_prop2_suite() {
        let cfg = Prop2SuiteConfig {
            trials: 6,
            cells: 4,
            ..Default::default()
        };
        let r = run_prop2_suite(&cfg).unwrap();
        assert_eq!(r.trials.len(), 6);
        assert_eq!(r.violations(), 0);
        assert!(r
            .trials
            .iter()
            .filter(|t| t.pairing == "relabeled")
            .all(|t| t.certified));
    }

    #[test]
    fn experiment_configs_round_trip() {
        let text = r#"{"experiment": "continuity", "t_grid": [0.25, 0.5], "max_m": 2}"#;
        match ExperimentConfig::from_json(text).unwrap() {
            ExperimentConfig::Continuity(c) => {
                assert_eq!(c.t_grid, vec![0.25, 0.5]);
                assert_eq!((c.max_m, c.max_n), (2, 6));
            }
            other => panic!("wrong kind {other:?}"),
        }
        let text = r#"{"experiment": "prop2-suite", "trials": 3}"#;
        assert!(matches!(
            ExperimentConfig::from_json(text).unwrap(),
            ExperimentConfig::Prop2Suite(_)
        ));
    }
}
