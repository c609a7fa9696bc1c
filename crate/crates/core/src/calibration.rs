//! Calibration metrics, reliability reports and the compound Top-2 evaluation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::dataio::{read_text, write_bytes, PredictionRow};
use crate::error::{Error, Result};
use crate::numcore::top_k;

pub const DEFAULT_BINS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinningMode {
    #[default]
    EqualWidth,
    EqualMass,
}

impl FromStr for BinningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "width" => Ok(Self::EqualWidth),
            "mass" => Ok(Self::EqualMass),
            other => Err(Error::Config(format!("unknown binning mode `{other}` (width|mass)"))),
        }
    }
}

/// One reliability bin. `acc` and `conf` are 0 for an empty bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    /// 1-based.
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub acc: f64,
    pub conf: f64,
}

impl BinStats {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn gap(&self) -> f64 {
        (self.acc - self.conf).abs()
    }
}

fn check_inputs(confidences: &[f64], correct: &[bool], bins: usize) -> Result<()> {
    if bins == 0 {
        return Err(Error::invalid("number of bins must be positive"));
    }
    if confidences.len() != correct.len() {
        return Err(Error::shape(format!(
            "{} confidences vs {} correctness flags",
            confidences.len(),
            correct.len()
        )));
    }
    if let Some(c) = confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::invalid(format!("confidence {c} outside [0, 1]")));
    }
    Ok(())
}

fn fill(bin: usize, lo: f64, hi: f64, members: &[usize], confidences: &[f64], correct: &[bool]) -> BinStats {
    let count = members.len();
    let (acc, conf) = if count == 0 {
        (0.0, 0.0)
    } else {
        let hits = members.iter().filter(|&&i| correct[i]).count();
        let total: f64 = members.iter().map(|&i| confidences[i]).sum();
        (hits as f64 / count as f64, total / count as f64)
    };
    BinStats { bin, lo, hi, count, acc, conf }
}

/// 1-based bin of `c` under `((m-1)/M, m/M]`, with 0 in the first bin.
pub fn width_bin_index(c: f64, bins: usize) -> usize {
    let m = bins as f64;
    let mut idx = ((c * m).ceil() as usize).clamp(1, bins);
    // correct for rounding in c*M around the boundaries
    while idx > 1 && c <= (idx - 1) as f64 / m {
        idx -= 1;
    }
    while idx < bins && c > idx as f64 / m {
        idx += 1;
    }
    idx
}

pub fn bin_equal_width(confidences: &[f64], correct: &[bool], bins: usize) -> Result<Vec<BinStats>> {
    check_inputs(confidences, correct, bins)?;
    let mut members = vec![Vec::new(); bins];
    for (i, &c) in confidences.iter().enumerate() {
        members[width_bin_index(c, bins) - 1].push(i);
    }
    let m = bins as f64;
    Ok(members
        .iter()
        .enumerate()
        .map(|(k, idx)| fill(k + 1, k as f64 / m, (k + 1) as f64 / m, idx, confidences, correct))
        .collect())
}

/// Contiguous groups of the confidence-sorted samples; the first `n mod M`
/// groups hold one extra sample. Bounds are the group's min and max confidence.
pub fn bin_equal_mass(confidences: &[f64], correct: &[bool], bins: usize) -> Result<Vec<BinStats>> {
    check_inputs(confidences, correct, bins)?;
    let n = confidences.len();
    if bins > n {
        return Err(Error::invalid(format!("{bins} equal-mass bins for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| confidences[a].total_cmp(&confidences[b]));
    let (base, extra) = (n / bins, n % bins);
    let mut start = 0;
    Ok((0..bins)
        .map(|k| {
            let size = base + usize::from(k < extra);
            let idx = &order[start..start + size];
            start += size;
            fill(k + 1, confidences[idx[0]], confidences[idx[size - 1]], idx, confidences, correct)
        })
        .collect())
}

pub fn ece(bins: &[BinStats], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("calibration error over zero samples"));
    }
    let total: usize = bins.iter().map(|b| b.count).sum();
    if total != n {
        return Err(Error::invalid(format!("bin counts sum to {total}, expected {n}")));
    }
    Ok(bins
        .iter()
        .filter(|b| !b.is_empty())
        .map(|b| b.count as f64 / n as f64 * b.gap())
        .sum())
}

pub fn aece(confidences: &[f64], correct: &[bool], bins: usize) -> Result<f64> {
    ece(&bin_equal_mass(confidences, correct, bins)?, confidences.len())
}

pub fn mce(bins: &[BinStats]) -> Result<f64> {
    bins.iter()
        .filter(|b| !b.is_empty())
        .map(BinStats::gap)
        .reduce(f64::max)
        .ok_or_else(|| Error::invalid("maximum calibration error needs a non-empty bin"))
}

/// `(confidence, correct)` per labeled row.
pub fn confidence_and_correctness(rows: &[PredictionRow]) -> Result<(Vec<f64>, Vec<bool>)> {
    rows.iter()
        .map(|r| {
            let label = r
                .label
                .ok_or_else(|| Error::invalid(format!("prediction `{}` has no label", r.id)))?;
            Ok((r.probs.confidence(), r.probs.predicted() == label))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

pub fn accuracy(rows: &[PredictionRow]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::invalid("accuracy of an empty prediction set"));
    }
    let (_, correct) = confidence_and_correctness(rows)?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / rows.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub mode: BinningMode,
    pub bins: Vec<BinStats>,
    /// Always over equal-width bins.
    pub ece: f64,
    /// Always over equal-mass bins.
    pub aece: f64,
    /// Over `bins`, i.e. follows `mode`.
    pub mce: f64,
    pub accuracy: f64,
    pub n: usize,
}

pub fn reliability_report(rows: &[PredictionRow], bins: usize, mode: BinningMode) -> Result<CalibrationReport> {
    let accuracy = accuracy(rows)?;
    let (conf, correct) = confidence_and_correctness(rows)?;
    let n = rows.len();
    let width = bin_equal_width(&conf, &correct, bins)?;
    let mass = bin_equal_mass(&conf, &correct, bins)?;
    let aece = ece(&mass, n)?;
    let ece = ece(&width, n)?;
    let bins = match mode {
        BinningMode::EqualWidth => width,
        BinningMode::EqualMass => mass,
    };
    Ok(CalibrationReport {
        mode,
        mce: mce(&bins)?,
        bins,
        ece,
        aece,
        accuracy,
        n,
    })
}

impl CalibrationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,lo,hi,count,acc,conf,gap\n");
        for b in &self.bins {
            let _ = writeln!(
                out,
                "{},{:.12},{:.12},{},{:.12},{:.12},{:.12}",
                b.bin,
                b.lo,
                b.hi,
                b.count,
                b.acc,
                b.conf,
                b.gap()
            );
        }
        let _ = writeln!(out, "ece={:.12}", self.ece);
        let _ = writeln!(out, "aece={:.12}", self.aece);
        let _ = writeln!(out, "mce={:.12}", self.mce);
        let _ = writeln!(out, "acc={:.12}", self.accuracy);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_csv().as_bytes())
    }

    pub fn summary_line(&self) -> String {
        format!(
            "acc={:.4} ece={:.4} aece={:.4} mce={:.4}",
            self.accuracy, self.ece, self.aece, self.mce
        )
    }
}

/// Bins and footer scalars parsed back from a reliability CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityTable {
    pub bins: Vec<BinStats>,
    pub footer: HashMap<String, f64>,
}

pub fn read_reliability_csv(path: &Path) -> Result<ReliabilityTable> {
    let ctx = crate::dataio::path_label(path);
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "bin,lo,hi,count,acc,conf,gap")) => {}
        _ => return Err(Error::at_row(&ctx, 1, "missing reliability header")),
    }
    let mut bins = Vec::new();
    let mut footer = HashMap::new();
    for (i, line) in lines {
        let row = i + 1;
        let bad = |m: &str| Error::at_row(&ctx, row, m);
        if let Some((key, value)) = line.split_once('=') {
            let v: f64 = value.parse().map_err(|_| bad("unparsable footer value"))?;
            footer.insert(key.to_string(), v);
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("unparsable number"));
        bins.push(BinStats {
            bin: f[0].parse().map_err(|_| bad("unparsable bin id"))?,
            lo: num(f[1])?,
            hi: num(f[2])?,
            count: f[3].parse().map_err(|_| bad("unparsable count"))?,
            acc: num(f[4])?,
            conf: num(f[5])?,
        });
    }
    Ok(ReliabilityTable { bins, footer })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundEvalResult {
    /// Compound classes as constituent pairs, in order of first appearance.
    pub classes: Vec<(usize, usize)>,
    pub counts: Vec<usize>,
    pub match_rates: Vec<f64>,
    /// `heatmap[k][c]`: mean probability of basic class `c` over compound class `k`.
    pub heatmap: Vec<Vec<f64>>,
    pub matches: Vec<bool>,
}

impl CompoundEvalResult {
    pub fn overall_match_rate(&self) -> f64 {
        if self.matches.is_empty() {
            return 0.0;
        }
        self.matches.iter().filter(|&&m| m).count() as f64 / self.matches.len() as f64
    }

    /// Long format `compound_class,basic_class,mean_confidence`.
    pub fn heatmap_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("compound_class,basic_class,mean_confidence\n");
        for (&(a, b), row) in self.classes.iter().zip(&self.heatmap) {
            for (c, v) in row.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}+{},{},{:.9}",
                    class_name(class_names, a),
                    class_name(class_names, b),
                    class_name(class_names, c),
                    v
                );
            }
        }
        out
    }
}

pub fn class_name(names: &[String], c: usize) -> String {
    names.get(c).cloned().unwrap_or_else(|| c.to_string())
}

/// Top-2 set match: the two most probable classes are exactly `{c1, c2}`.
pub fn top2_match(probs: &[f64], pair: (usize, usize)) -> bool {
    let top = top_k(probs, 2).expect("at least two classes");
    let (a, b) = (top[0].0, top[1].0);
    (a == pair.0 && b == pair.1) || (a == pair.1 && b == pair.0)
}

pub fn compound_top2_eval(rows: &[PredictionRow], constituents: &[Option<(usize, usize)>]) -> Result<CompoundEvalResult> {
    if rows.len() != constituents.len() {
        return Err(Error::shape(format!(
            "{} predictions vs {} constituent pairs",
            rows.len(),
            constituents.len()
        )));
    }
    let width = rows.first().map_or(0, |r| r.probs.len());
    let mut classes: Vec<(usize, usize)> = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut counts = Vec::new();
    let mut hits = Vec::new();
    let mut matches = Vec::with_capacity(rows.len());
    for (row, pair) in rows.iter().zip(constituents) {
        let (a, b) = pair.ok_or_else(|| Error::invalid(format!("compound sample `{}` lacks constituents", row.id)))?;
        if a == b || a >= width || b >= width || row.probs.len() != width {
            return Err(Error::invalid(format!("compound sample `{}` has invalid constituents ({a},{b})", row.id)));
        }
        let key = (a.min(b), a.max(b));
        let k = match classes.iter().position(|&(x, y)| (x.min(y), x.max(y)) == key) {
            Some(k) => k,
            None => {
                classes.push((a, b));
                sums.push(vec![0.0; width]);
                counts.push(0);
                hits.push(0);
                classes.len() - 1
            }
        };
        let m = top2_match(row.probs.as_slice(), (a, b));
        for (s, p) in sums[k].iter_mut().zip(row.probs.as_slice()) {
            *s += p;
        }
        counts[k] += 1;
        hits[k] += usize::from(m);
        matches.push(m);
    }
    let heatmap = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect();
    let match_rates = hits.iter().zip(&counts).map(|(&h, &n)| h as f64 / n as f64).collect();
    Ok(CompoundEvalResult {
        classes,
        counts,
        match_rates,
        heatmap,
        matches,
    })
}
