use std::fmt;

use super::cloud::{cloud, CloudMode, StatsCloud};
use super::hausdorff::directed_hausdorff;
use crate::action::CellAction;
use crate::error::{Error, Result};
use crate::words::enumerate_words;

/// Truncation and cloud settings shared by δ and the containment defect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaOptions {
    pub max_m: usize,
    pub max_n: usize,
    pub mode: CloudMode,
    /// Mode for the second action; defaults to `mode`.
    pub mode_b: Option<CloudMode>,
    pub budget: u64,
    pub seed: u64,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        DeltaOptions {
            max_m: 6,
            max_n: 6,
            mode: CloudMode::Exact,
            mode_b: None,
            budget: 1_000_000,
            seed: 0,
        }
    }
}

impl DeltaOptions {
    pub fn modes(&self) -> (CloudMode, CloudMode) {
        (self.mode, self.mode_b.unwrap_or(self.mode))
    }
}

/// 1 − (1 − 2^−M)(1 − 2^−N): the total weight of the omitted terms, each of
/// which is at most 1 in ℓ∞.
pub fn tail_bound(max_m: usize, max_n: usize) -> f64 {
    let a = 0.5f64.powi(max_m as i32);
    let b = 0.5f64.powi(max_n as i32);
    a + b - a * b
}

/// One (m, n) term.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaTerm {
    pub m: usize,
    pub n: usize,
    pub weight: f64,
    /// directed distance from a's cloud to b's
    pub forward: Option<f64>,
    /// directed distance from b's cloud to a's; absent for containment defects
    pub backward: Option<f64>,
    pub points_a: usize,
    pub points_b: usize,
    pub error: Option<String>,
}

impl DeltaTerm {
    /// The distance this term contributes before weighting.
    pub fn distance(&self) -> Option<f64> {
        match (self.forward, self.backward) {
            (Some(f), Some(b)) => Some(f.max(b)),
            (Some(f), None) => Some(f),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaReport {
    /// Whether only the a → b direction was measured.
    pub directed: bool,
    pub truncated_value: f64,
    pub max_m: usize,
    pub max_n: usize,
    pub tail_bound: f64,
    pub mode_a: CloudMode,
    pub mode_b: CloudMode,
    pub seed: u64,
    pub budget: u64,
    pub terms: Vec<DeltaTerm>,
}

impl DeltaReport {
    /// All terms computed.
    pub fn is_complete(&self) -> bool {
        self.terms.iter().all(|t| t.error.is_none())
    }

    pub fn errors(&self) -> impl Iterator<Item = &DeltaTerm> {
        self.terms.iter().filter(|t| t.error.is_some())
    }

    pub fn term(&self, m: usize, n: usize) -> Option<&DeltaTerm> {
        self.terms.iter().find(|t| t.m == m && t.n == n)
    }

    /// Which side's clouds are sampled rather than exact.
    pub fn approximate_side(&self) -> &'static str {
        match (self.mode_a, self.mode_b) {
            (CloudMode::Exact, CloudMode::Exact) => "none",
            (CloudMode::Sampled, CloudMode::Exact) => "a",
            (CloudMode::Exact, CloudMode::Sampled) => "b",
            (CloudMode::Sampled, CloudMode::Sampled) => "both",
        }
    }

    /// `#` metadata lines, a header row, then one row per term.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# tool=stationary {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(
            out,
            "# quantity={} M={} N={} mode_a={} mode_b={} approximate={} seed={} budget={}",
            if self.directed {
                "containment_defect"
            } else {
                "delta"
            },
            self.max_m,
            self.max_n,
            self.mode_a.as_str(),
            self.mode_b.as_str(),
            self.approximate_side(),
            self.seed,
            self.budget
        )?;
        writeln!(
            out,
            "# truncated_value={} tail_bound={} complete={}",
            crate::io::format_f64(self.truncated_value),
            crate::io::format_f64(self.tail_bound),
            self.is_complete()
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "m", "n", "weight", "forward", "backward", "distance", "points_a", "points_b", "error",
        ])?;
        let opt = |x: Option<f64>| x.map(crate::io::format_f64).unwrap_or_default();
        for t in &self.terms {
            w.write_record([
                t.m.to_string(),
                t.n.to_string(),
                crate::io::format_f64(t.weight),
                opt(t.forward),
                opt(t.backward),
                opt(t.distance()),
                t.points_a.to_string(),
                t.points_b.to_string(),
                t.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for DeltaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = if self.directed {
            "containment defect"
        } else {
            "delta"
        };
        writeln!(f, "{name} (truncated): {:.12}", self.truncated_value)?;
        writeln!(f, "tail bound: {:.6}", self.tail_bound)?;
        writeln!(f, "truncation: M = {}, N = {}", self.max_m, self.max_n)?;
        writeln!(
            f,
            "clouds: a {}, b {} (approximate side: {})",
            self.mode_a.as_str(),
            self.mode_b.as_str(),
            self.approximate_side()
        )?;
        writeln!(
            f,
            "{:>3} {:>3} {:>14} {:>14}",
            "m", "n", "distance", "weighted"
        )?;
        for t in &self.terms {
            match (t.distance(), &t.error) {
                (Some(d), _) => writeln!(
                    f,
                    "{:>3} {:>3} {:>14.10} {:>14.10}",
                    t.m,
                    t.n,
                    d,
                    d * t.weight
                )?,
                (None, Some(e)) => writeln!(f, "{:>3} {:>3} error: {e}", t.m, t.n)?,
                (None, None) => writeln!(f, "{:>3} {:>3} -", t.m, t.n)?,
            }
        }
        if !self.is_complete() {
            writeln!(f, "incomplete: {} term(s) failed", self.errors().count())?;
        }
        Ok(())
    }
}

/// Clouds of one action for n = 1..=N, each at every m = 1..=M.
pub struct CloudFamily {
    /// `clouds[n - 1][m - 1]`, or the failure for that n.
    clouds: Vec<std::result::Result<Vec<StatsCloud>, String>>,
    max_m: usize,
}

impl CloudFamily {
    pub fn compute(action: &CellAction, opts: &DeltaOptions, mode: CloudMode) -> Result<Self> {
        if opts.max_m == 0 || opts.max_n == 0 {
            return Err(Error::Malformed(
                "truncation bounds must be at least 1".into(),
            ));
        }
        let words = enumerate_words(action.rank(), opts.max_m);
        let mut clouds = Vec::with_capacity(opts.max_n);
        for n in 1..=opts.max_n {
            let seed = opts.seed.wrapping_add(n as u64);
            match cloud(action, &words, n, mode, opts.budget, seed) {
                Ok(full) => {
                    let mut per_m: Vec<StatsCloud> =
                        (1..opts.max_m).map(|m| full.truncate(m)).collect();
                    per_m.push(full);
                    clouds.push(Ok(per_m));
                }
                Err(e @ Error::Budget { .. }) => clouds.push(Err(e.to_string())),
                Err(e) => return Err(e),
            }
        }
        Ok(CloudFamily {
            clouds,
            max_m: opts.max_m,
        })
    }

    pub fn get(&self, m: usize, n: usize) -> std::result::Result<&StatsCloud, &str> {
        match &self.clouds[n - 1] {
            Ok(per_m) => Ok(&per_m[m - 1]),
            Err(e) => Err(e.as_str()),
        }
    }

    pub fn max_m(&self) -> usize {
        self.max_m
    }

    pub fn max_n(&self) -> usize {
        self.clouds.len()
    }
}

fn check_pair(a: &CellAction, b: &CellAction) -> Result<()> {
    if a.rank() != b.rank() {
        return Err(Error::RankMismatch {
            left: a.rank(),
            right: b.rank(),
        });
    }
    Ok(())
}

/// Combines precomputed cloud families. `directed` keeps only the a → b part.
pub fn report_from_families(
    fa: &CloudFamily,
    fb: &CloudFamily,
    opts: &DeltaOptions,
    directed: bool,
) -> Result<DeltaReport> {
    let (mode_a, mode_b) = opts.modes();
    let mut terms = Vec::new();
    let mut total = 0.0;
    for m in 1..=opts.max_m {
        for n in 1..=opts.max_n {
            let weight = 0.5f64.powi((m + n) as i32);
            let mut term = DeltaTerm {
                m,
                n,
                weight,
                forward: None,
                backward: None,
                points_a: 0,
                points_b: 0,
                error: None,
            };
            match (fa.get(m, n), fb.get(m, n)) {
                (Ok(ca), Ok(cb)) => {
                    term.points_a = ca.len();
                    term.points_b = cb.len();
                    if directed {
                        term.forward = Some(directed_hausdorff(ca, cb)?);
                    } else {
                        let f = directed_hausdorff(ca, cb)?;
                        let b = directed_hausdorff(cb, ca)?;
                        term.forward = Some(f);
                        term.backward = Some(b);
                    }
                    total += weight * term.distance().expect("computed");
                }
                (Err(e), _) => term.error = Some(format!("a: {e}")),
                (_, Err(e)) => term.error = Some(format!("b: {e}")),
            }
            terms.push(term);
        }
    }
    Ok(DeltaReport {
        directed,
        truncated_value: total,
        max_m: opts.max_m,
        max_n: opts.max_n,
        tail_bound: tail_bound(opts.max_m, opts.max_n),
        mode_a,
        mode_b,
        seed: opts.seed,
        budget: opts.budget,
        terms,
    })
}

/// Truncated δ(a, b) = Σ_{m≤M, n≤N} 2^−(m+n)·d_H(C_{m,n}(a), C_{m,n}(b)).
/// Budget failures are recorded on the affected terms and leave them out of
/// the sum.
pub fn delta(a: &CellAction, b: &CellAction, opts: &DeltaOptions) -> Result<DeltaReport> {
    check_pair(a, b)?;
    let (mode_a, mode_b) = opts.modes();
    let fa = CloudFamily::compute(a, opts, mode_a)?;
    let fb = CloudFamily::compute(b, opts, mode_b)?;
    report_from_families(&fa, &fb, opts, false)
}

/// Directed version of [`delta`]: zero exactly when every computed cloud of
/// `a` lies in the corresponding cloud of `b`.
pub fn containment_defect(
    a: &CellAction,
    b: &CellAction,
    opts: &DeltaOptions,
) -> Result<DeltaReport> {
    check_pair(a, b)?;
    let (mode_a, mode_b) = opts.modes();
    let fa = CloudFamily::compute(a, opts, mode_a)?;
    let fb = CloudFamily::compute(b, opts, mode_b)?;
    report_from_families(&fa, &fb, opts, true)
}
