//! PUF quality statistics over response matrices.
//!
//! All functions are pure. Pair enumerations run in (i, j) lexicographic
//! order with plain left-to-right summation, so results are reproducible to
//! the bit.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::puf::{Challenge, PufRow};

pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

/// R response vectors of equal length L, each with a unique label.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    rows: Vec<Vec<bool>>,
    labels: Vec<String>,
}

impl ResponseMatrix {
    pub fn new(rows: Vec<Vec<bool>>, labels: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
                return Err(Error::Dimension {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Runtime(format!("duplicate response label `{dup}`")));
        }
        Ok(Self { rows, labels })
    }

    /// Labels rows `<prefix>0`, `<prefix>1`, ...
    pub fn with_prefix(rows: Vec<Vec<bool>>, prefix: &str) -> Result<Self> {
        let labels = (0..rows.len()).map(|i| format!("{prefix}{i}")).collect();
        Self::new(rows, labels)
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row_len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Stacks matrices vertically, e.g. one per reconfiguration.
    pub fn concat(parts: &[ResponseMatrix]) -> Result<Self> {
        let rows = parts.iter().flat_map(|m| m.rows.iter().cloned()).collect();
        let labels = parts
            .iter()
            .flat_map(|m| m.labels.iter().cloned())
            .collect();
        Self::new(rows, labels)
    }

    fn require_rows(&self, min: usize) -> Result<()> {
        if self.rows.len() < min || self.row_len() == 0 {
            return Err(Error::InsufficientData(format!(
                "need at least {min} non-empty response rows, have {}",
                self.rows.len()
            )));
        }
        Ok(())
    }
}

fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn normalized_hd(a: &[bool], b: &[bool]) -> f64 {
    hamming(a, b) as f64 / a.len() as f64
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fraction of one bits over the whole matrix.
pub fn hamming_weight(m: &ResponseMatrix) -> Result<f64> {
    if m.row_count() == 0 || m.row_len() == 0 {
        return Err(Error::Dimension {
            expected: 1,
            found: 0,
        });
    }
    let ones: usize = m
        .rows
        .iter()
        .map(|r| r.iter().filter(|&&b| b).count())
        .sum();
    Ok(ones as f64 / (m.row_count() * m.row_len()) as f64)
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Shannon entropy of each bit position across the rows.
pub fn bitwise_entropy(m: &ResponseMatrix) -> Result<Vec<f64>> {
    m.require_rows(2)?;
    let r = m.row_count() as f64;
    Ok((0..m.row_len())
        .map(|j| {
            let ones = m.rows.iter().filter(|row| row[j]).count();
            binary_entropy(ones as f64 / r)
        })
        .collect())
}

/// Uniform-bin histogram of fractions on [0, 1]; 1.0 lands in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn of(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let mut counts = vec![0; bins];
        for &v in values {
            let idx = ((v * bins as f64).floor() as isize).clamp(0, bins as isize - 1);
            counts[idx as usize] += 1;
        }
        Self { counts }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// (bin_low, bin_high, count) rows.
    pub fn rows(&self) -> Vec<(f64, f64, usize)> {
        let b = self.bins() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as f64 / b, (i + 1) as f64 / b, c))
            .collect()
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows()
            .into_iter()
            .map(|(lo, hi, c)| vec![format!("{lo:.4}"), format!("{hi:.4}"), c.to_string()])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdStats {
    pub mean: f64,
    pub std: f64,
    pub pairs: usize,
    pub histogram: Histogram,
}

impl HdStats {
    fn from_distances(d: &[f64], bins: usize) -> Self {
        let (mean, std) = mean_std(d);
        Self {
            mean,
            std,
            pairs: d.len(),
            histogram: Histogram::of(d, bins),
        }
    }
}

/// Normalized HD over all R(R−1)/2 unordered row pairs.
pub fn hd_inter(m: &ResponseMatrix) -> Result<HdStats> {
    hd_inter_binned(m, DEFAULT_HISTOGRAM_BINS)
}

pub fn hd_inter_binned(m: &ResponseMatrix, bins: usize) -> Result<HdStats> {
    m.require_rows(2)?;
    let r = m.row_count();
    let mut d = Vec::with_capacity(r * (r - 1) / 2);
    for i in 0..r {
        for j in i + 1..r {
            d.push(normalized_hd(&m.rows[i], &m.rows[j]));
        }
    }
    Ok(HdStats::from_distances(&d, bins))
}

/// Row-matched HD between two reconfigurations of the same PUFs under the
/// same challenges.
pub fn hd_reconfigure(before: &ResponseMatrix, after: &ResponseMatrix) -> Result<HdStats> {
    hd_reconfigure_series(&[before.clone(), after.clone()])
}

/// Row-matched HD aggregated over every pair of reconfigurations.
pub fn hd_reconfigure_series(series: &[ResponseMatrix]) -> Result<HdStats> {
    hd_reconfigure_series_binned(series, DEFAULT_HISTOGRAM_BINS)
}

pub fn hd_reconfigure_series_binned(series: &[ResponseMatrix], bins: usize) -> Result<HdStats> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two reconfigurations".into(),
        ));
    }
    let (rows, len) = (series[0].row_count(), series[0].row_len());
    if rows == 0 || len == 0 {
        return Err(Error::InsufficientData("empty response matrix".into()));
    }
    for m in series {
        if m.row_count() != rows {
            return Err(Error::Dimension {
                expected: rows,
                found: m.row_count(),
            });
        }
        if m.row_len() != len {
            return Err(Error::Dimension {
                expected: len,
                found: m.row_len(),
            });
        }
    }
    let mut d = Vec::new();
    for a in 0..series.len() {
        for b in a + 1..series.len() {
            for r in 0..rows {
                d.push(normalized_hd(&series[a].rows[r], &series[b].rows[r]));
            }
        }
    }
    Ok(HdStats::from_distances(&d, bins))
}

/// Pearson correlation between response rows. `None` marks entries
/// involving a constant row, where the coefficient is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    size: usize,
    entries: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.size + j]
    }

    /// Largest |ρ| off the diagonal among defined entries.
    pub fn max_offdiag_abs(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.size {
            for j in 0..self.size {
                if i == j {
                    continue;
                }
                if let Some(v) = self.get(i, j) {
                    best = Some(best.map_or(v.abs(), |b| b.max(v.abs())));
                }
            }
        }
        best
    }

    pub fn degenerate_entries(&self) -> usize {
        self.entries.iter().filter(|e| e.is_none()).count()
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.size)
            .map(|i| {
                (0..self.size)
                    .map(|j| {
                        self.get(i, j)
                            .map_or_else(|| "degenerate".into(), |v| format!("{v:.6}"))
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn correlation_matrix(m: &ResponseMatrix) -> Result<CorrelationMatrix> {
    m.require_rows(2)?;
    let len = m.row_len() as f64;
    let centered: Vec<Option<Vec<f64>>> = m
        .rows
        .iter()
        .map(|r| {
            let xs: Vec<f64> = r.iter().map(|&b| f64::from(u8::from(b))).collect();
            let mean = xs.iter().sum::<f64>() / len;
            let c: Vec<f64> = xs.iter().map(|x| x - mean).collect();
            let ss: f64 = c.iter().map(|x| x * x).sum();
            (ss > 0.0).then(|| {
                let norm = ss.sqrt();
                c.into_iter().map(|x| x / norm).collect()
            })
        })
        .collect();
    let size = m.row_count();
    let mut entries = vec![None; size * size];
    for i in 0..size {
        for j in i..size {
            let v = match (&centered[i], &centered[j]) {
                (Some(_), Some(_)) if i == j => Some(1.0),
                (Some(a), Some(b)) => Some(
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| x * y)
                        .sum::<f64>()
                        .clamp(-1.0, 1.0),
                ),
                _ => None,
            };
            entries[i * size + j] = v;
            entries[j * size + i] = v;
        }
    }
    Ok(CorrelationMatrix { size, entries })
}

/// Fraction of (challenge, repeat) bits that differ from the first repeat.
/// `respond` is invoked once per challenge per repeat.
pub fn bit_error_rate<F>(challenges: &[Challenge], repeats: usize, mut respond: F) -> Result<f64>
where
    F: FnMut(&Challenge) -> Result<bool>,
{
    if repeats == 0 || challenges.is_empty() {
        return Err(Error::InsufficientData(
            "need challenges and repeats >= 1".into(),
        ));
    }
    let reference = challenges
        .iter()
        .map(&mut respond)
        .collect::<Result<Vec<_>>>()?;
    if repeats == 1 {
        return Ok(0.0);
    }
    let mut errors = 0usize;
    for _ in 1..repeats {
        for (c, &r0) in challenges.iter().zip(&reference) {
            errors += usize::from(respond(c)? != r0);
        }
    }
    Ok(errors as f64 / (challenges.len() * (repeats - 1)) as f64)
}

/// Temporal bit error rate of a frozen row.
pub fn reliability(row: &PufRow, challenges: &[Challenge], repeats: usize) -> Result<f64> {
    bit_error_rate(challenges, repeats, |c| row.response_bit(c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipReport {
    pub chance: f64,
    /// Indices into the challenge list whose response disagrees with the
    /// ideal ground truth.
    pub flipped: Vec<usize>,
    /// Challenges that landed exactly on the comparator threshold.
    pub ties: usize,
}

/// Static disagreement between the row's actual responses and the ideal
/// response of its registered states.
pub fn flip_chance(row: &PufRow, challenges: &[Challenge]) -> Result<FlipReport> {
    if challenges.is_empty() {
        return Err(Error::InsufficientData(
            "need at least one challenge".into(),
        ));
    }
    let mut flipped = Vec::new();
    let mut ties = 0;
    for (i, c) in challenges.iter().enumerate() {
        let out = row.sense_outcome(c)?;
        ties += usize::from(out.tie);
        if out.bit != row.ground_truth_bit(c)? {
            flipped.push(i);
        }
    }
    Ok(FlipReport {
        chance: flipped.len() as f64 / challenges.len() as f64,
        flipped,
        ties,
    })
}

/// Summary of one metrics run.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MetricsReport {
    pub hw: f64,
    pub entropy_per_bit: Vec<f64>,
    /// HD across registrations of one physical row.
    pub hd_inter_mean: f64,
    pub hd_inter_std: f64,
    /// HD across independently fabricated rows.
    pub hd_instances_mean: f64,
    pub hd_instances_std: f64,
    pub hd_reconf_mean: f64,
    pub hd_reconf_std: f64,
    /// `None` when every off-diagonal coefficient is undefined.
    pub corr_max_offdiag: Option<f64>,
    pub corr_degenerate_entries: usize,
    pub reliability_bit_error_rate: f64,
    pub flip_chance: f64,
    pub tie_count: usize,
}

impl MetricsReport {
    /// Flat `key = value` text; the entropy list is summarized.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let ent = &self.entropy_per_bit;
        let ent_min = ent.iter().copied().fold(f64::INFINITY, f64::min);
        let ent_mean = ent.iter().sum::<f64>() / ent.len().max(1) as f64;
        let corr = self
            .corr_max_offdiag
            .map_or_else(|| "degenerate".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(s, "hw = {:.6}", self.hw);
        let _ = writeln!(s, "entropy_mean = {ent_mean:.6}");
        let _ = writeln!(s, "entropy_min = {ent_min:.6}");
        let _ = writeln!(s, "hd_inter_mean = {:.6}", self.hd_inter_mean);
        let _ = writeln!(s, "hd_inter_std = {:.6}", self.hd_inter_std);
        let _ = writeln!(s, "hd_instances_mean = {:.6}", self.hd_instances_mean);
        let _ = writeln!(s, "hd_instances_std = {:.6}", self.hd_instances_std);
        let _ = writeln!(s, "hd_reconf_mean = {:.6}", self.hd_reconf_mean);
        let _ = writeln!(s, "hd_reconf_std = {:.6}", self.hd_reconf_std);
        let _ = writeln!(s, "corr_max_offdiag = {corr}");
        let _ = writeln!(
            s,
            "corr_degenerate_entries = {}",
            self.corr_degenerate_entries
        );
        let _ = writeln!(
            s,
            "reliability_bit_error_rate = {:.6}",
            self.reliability_bit_error_rate
        );
        let _ = writeln!(s, "flip_chance = {:.6}", self.flip_chance);
        let _ = writeln!(s, "tie_count = {}", self.tie_count);
        s
    }
}
