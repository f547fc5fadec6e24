//! Accuracy maps over (n, k, training size) with fresh PUF instances per
//! trial.
//!
//! Seeds for a cell depend only on (root, kind, n, k, trial, size), and
//! within one (kind, n, k, trial) instance the training sets of different
//! sizes are prefixes of one CRP stream. Results are sorted by cell key, so
//! tables do not depend on scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::model::evaluate;
use super::rprop::{train_rprop, RpropConfig, TrainReport};
use crate::error::{Error, Result};
use crate::puf::{ArbiterPuf, CrpSet, Puf, PufKind, RowRecipe, XorGroup};
use crate::rng::SeedTree;

pub const ACCURACY_HEADER: [&str; 8] = [
    "kind",
    "n",
    "k",
    "train_size",
    "trial",
    "train_acc",
    "test_acc",
    "epochs",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: PufKind,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub train_sizes: Vec<usize>,
    pub trials: usize,
    pub test_size: usize,
    pub rprop: RpropConfig,
}

impl SweepSpec {
    /// Whether `key` is one of this sweep's cells.
    pub fn contains(&self, key: &CellKey) -> bool {
        key.kind == self.kind
            && self.ns.contains(&key.n)
            && self.ks.contains(&key.k)
            && self.train_sizes.contains(&key.train_size)
            && key.trial < self.trials
    }

    pub fn validate(&self) -> Result<()> {
        let nonzero = |key: &str, v: &[usize]| -> Result<()> {
            if v.is_empty() {
                return Err(Error::config(key, "must not be empty"));
            }
            if v.contains(&0) {
                return Err(Error::config(key, "entries must be >= 1"));
            }
            Ok(())
        };
        nonzero("attack.n", &self.ns)?;
        nonzero("attack.k", &self.ks)?;
        nonzero("attack.train_sizes", &self.train_sizes)?;
        if self.trials == 0 {
            return Err(Error::config("attack.trials", "must be >= 1"));
        }
        if self.test_size == 0 {
            return Err(Error::config("attack.test_size", "must be >= 1"));
        }
        self.rprop.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub kind: PufKind,
    pub n: usize,
    pub k: usize,
    pub train_size: usize,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub kind: PufKind,
    pub n: usize,
    pub k: usize,
    pub train_size: usize,
    pub trial: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub epochs: usize,
}

impl AccuracyRow {
    pub fn key(&self) -> CellKey {
        CellKey {
            kind: self.kind,
            n: self.n,
            k: self.k,
            train_size: self.train_size,
            trial: self.trial,
        }
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.kind.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.train_size.to_string(),
            self.trial.to_string(),
            format!("{:.6}", self.train_acc),
            format!("{:.6}", self.test_acc),
            self.epochs.to_string(),
        ]
    }

    pub fn from_record(rec: &[&str]) -> Result<Self> {
        let bad = |what: &str| Error::Parse {
            line: 0,
            msg: format!("bad accuracy record field `{what}`"),
        };
        if rec.len() != ACCURACY_HEADER.len() {
            return Err(bad("length"));
        }
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(ACCURACY_HEADER[i]));
        let real = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(ACCURACY_HEADER[i]));
        Ok(Self {
            kind: rec[0].parse()?,
            n: int(1)?,
            k: int(2)?,
            train_size: int(3)?,
            trial: int(4)?,
            train_acc: real(5)?,
            test_acc: real(6)?,
            epochs: int(7)?,
        })
    }
}

fn instance_seeds(seeds: &SeedTree, kind: PufKind, n: usize, k: usize, trial: usize) -> SeedTree {
    seeds
        .child(kind.name(), n as u64)
        .child("k", k as u64)
        .child("trial", trial as u64)
}

/// Fresh target PUF for one (kind, n, k, trial).
pub fn build_target(
    kind: PufKind,
    n: usize,
    k: usize,
    recipe: &RowRecipe,
    seeds: &SeedTree,
) -> Result<Box<dyn Puf>> {
    let mut rng = seeds.stream("instance", 0);
    Ok(match kind {
        PufKind::Proposed => Box::new(XorGroup::fabricate(n, k, recipe, &mut rng)?),
        PufKind::Arbiter => Box::new(ArbiterPuf::new(n, k, &mut rng)?),
    })
}

/// Trains on `train`, scores on `test`, and fills in the report's test
/// accuracy.
pub fn attack(
    train: &CrpSet,
    test: &CrpSet,
    k: usize,
    cfg: &RpropConfig,
    rng: &mut crate::rng::Stream,
) -> Result<TrainReport> {
    let (model, mut report) = train_rprop(&Dataset::from_crps(train), k, cfg, rng)?;
    report.test_accuracy = Some(evaluate(&model, &Dataset::from_crps(test))?);
    Ok(report)
}

type CellSink<'a> = &'a (dyn Fn(&AccuracyRow, &TrainReport) -> Result<()> + Sync);

/// Runs every cell of the sweep not already present in `completed`,
/// calling `on_cell` as each finishes. Returns all rows (completed and new)
/// sorted by cell key.
pub fn run_sweep(
    spec: &SweepSpec,
    recipe: &RowRecipe,
    seeds: &SeedTree,
    completed: &BTreeMap<CellKey, AccuracyRow>,
    on_cell: CellSink<'_>,
) -> Result<Vec<AccuracyRow>> {
    spec.validate()?;
    let max_size = *spec.train_sizes.iter().max().expect("validated non-empty");
    let mut jobs = Vec::new();
    for &n in &spec.ns {
        for &k in &spec.ks {
            for trial in 0..spec.trials {
                jobs.push((n, k, trial));
            }
        }
    }
    let fresh: Vec<Vec<AccuracyRow>> = jobs
        .par_iter()
        .map(|&(n, k, trial)| -> Result<Vec<AccuracyRow>> {
            let key = |size| CellKey {
                kind: spec.kind,
                n,
                k,
                train_size: size,
                trial,
            };
            let todo: Vec<usize> = spec
                .train_sizes
                .iter()
                .copied()
                .filter(|&s| !completed.contains_key(&key(s)))
                .collect();
            if todo.is_empty() {
                return Ok(Vec::new());
            }
            let tree = instance_seeds(seeds, spec.kind, n, k, trial);
            let target = build_target(spec.kind, n, k, recipe, &tree)?;
            let train_all = CrpSet::generate(target.as_ref(), max_size, tree.seed("train", 0))?;
            let test = CrpSet::generate(target.as_ref(), spec.test_size, tree.seed("test", 0))?;
            let mut rows = Vec::with_capacity(todo.len());
            for size in todo {
                let mut rng = tree.stream("rprop", size as u64);
                let report = attack(&train_all.prefix(size), &test, k, &spec.rprop, &mut rng)?;
                let row = AccuracyRow {
                    kind: spec.kind,
                    n,
                    k,
                    train_size: size,
                    trial,
                    train_acc: report.train_accuracy,
                    test_acc: report.test_accuracy.unwrap_or(f64::NAN),
                    epochs: report.epochs_used,
                };
                on_cell(&row, &report)?;
                rows.push(row);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut all: BTreeMap<CellKey, AccuracyRow> = completed
        .iter()
        .filter(|(key, _)| spec.contains(key))
        .map(|(key, row)| (*key, row.clone()))
        .collect();
    for row in fresh.into_iter().flatten() {
        all.insert(row.key(), row);
    }
    Ok(all.into_values().collect())
}

/// Accuracy map at a single challenge length.
pub fn accuracy_map(
    spec: &SweepSpec,
    recipe: &RowRecipe,
    seeds: &SeedTree,
) -> Result<Vec<AccuracyRow>> {
    if spec.ns.len() != 1 {
        return Err(Error::config(
            "attack.n",
            "an accuracy map uses exactly one challenge length",
        ));
    }
    run_sweep(spec, recipe, seeds, &BTreeMap::new(), &|_, _| Ok(()))
}

/// Accuracy map over several challenge lengths.
pub fn length_sweep(
    spec: &SweepSpec,
    recipe: &RowRecipe,
    seeds: &SeedTree,
) -> Result<Vec<AccuracyRow>> {
    run_sweep(spec, recipe, seeds, &BTreeMap::new(), &|_, _| Ok(()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSummary {
    pub kind: PufKind,
    pub n: usize,
    pub k: usize,
    pub train_size: usize,
    pub mean_test_acc: f64,
    pub max_test_acc: f64,
}

/// Mean and max test accuracy over trials, per (kind, n, k, size).
pub fn summarize(rows: &[AccuracyRow]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(PufKind, usize, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.kind, r.n, r.k, r.train_size))
            .or_default()
            .push(r.test_acc);
    }
    groups
        .into_iter()
        .map(|((kind, n, k, train_size), accs)| CellSummary {
            kind,
            n,
            k,
            train_size,
            mean_test_acc: accs.iter().sum::<f64>() / accs.len() as f64,
            max_test_acc: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub kind: PufKind,
    pub n: usize,
    pub k: usize,
    /// Smallest training size whose mean test accuracy exceeds the level.
    pub train_size: Option<usize>,
}

pub fn thresholds(rows: &[AccuracyRow], level: f64) -> Vec<Threshold> {
    let mut out: BTreeMap<(PufKind, usize, usize), Option<usize>> = BTreeMap::new();
    for s in summarize(rows) {
        let slot = out.entry((s.kind, s.n, s.k)).or_insert(None);
        if s.mean_test_acc > level && slot.is_none_or(|t| s.train_size < t) {
            *slot = Some(s.train_size);
        }
    }
    out.into_iter()
        .map(|((kind, n, k), train_size)| Threshold {
            kind,
            n,
            k,
            train_size,
        })
        .collect()
}
