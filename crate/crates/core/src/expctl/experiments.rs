use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Run, RunManifest};
use crate::attack::{
    run_sweep, summarize, thresholds, AccuracyRow, CellKey, SweepSpec, Threshold, TrainReport,
    ACCURACY_HEADER,
};
use crate::device::SizeProfile;
use crate::error::{Error, Result};
use crate::io::{write_atomic, write_csv};
use crate::metrics::{
    bit_error_rate, bitwise_entropy, correlation_matrix, flip_chance, hamming_weight,
    hd_inter_binned, hd_reconfigure_series_binned, CorrelationMatrix, HdStats, MetricsReport,
    ResponseMatrix,
};
use crate::puf::{Challenge, CrpSet, PufArray, PufRow, RegistrationRecord};
use crate::rng::{mix, SeedTree};

fn check_degenerate(rec: &RegistrationRecord) -> Result<()> {
    if rec.degenerate_cells.is_empty() {
        Ok(())
    } else {
        Err(Error::Runtime(format!(
            "{} cells exhausted the tie budget; cycle-to-cycle noise is missing (device.sigma_c2c)",
            rec.degenerate_cells.len()
        )))
    }
}

/// Responses of a row with the number of comparator ties seen.
fn respond_all(row: &PufRow, challenges: &[Challenge]) -> Result<(Vec<bool>, usize)> {
    let mut ties = 0;
    let bits = challenges
        .iter()
        .map(|c| {
            let o = row.sense_outcome(c)?;
            ties += usize::from(o.tie);
            Ok(o.bit)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((bits, ties))
}

/// `register_rounds` successive registrations of an M×N array.
pub fn registration_protocol(cfg: &ExperimentConfig) -> Result<Vec<Vec<RegistrationRecord>>> {
    cfg.validate()?;
    let seeds = SeedTree::new(cfg.seed);
    let recipe = cfg.recipe();
    let mut array = PufArray::new(
        cfg.array.rows,
        cfg.array.n,
        recipe.device,
        &recipe.mismatch,
        recipe.sense,
        &mut seeds.stream("array", 0),
    )?;
    (0..cfg.experiment.register_rounds)
        .map(|round| {
            let recs = array.register(
                &recipe.write,
                &mut seeds.stream("registration", round as u64),
            )?;
            recs.iter().try_for_each(check_degenerate)?;
            Ok(recs)
        })
        .collect()
}

pub fn cmd_register(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let rounds = registration_protocol(cfg)?;
    let mut run = Run::new(cfg, out, "register");
    let mut rows = Vec::new();
    let mut map = String::new();
    for (round, recs) in rounds.iter().enumerate() {
        for (r, rec) in recs.iter().enumerate() {
            for i in 0..rec.states.len() {
                rows.push(vec![
                    round.to_string(),
                    r.to_string(),
                    i.to_string(),
                    format!("{:.9}", rec.vx_cycle1[i]),
                    format!("{:.9}", rec.vx_cycle2[i]),
                    format!("{:.9}", rec.delta_vx[i]),
                    u8::from(rec.states[i]).to_string(),
                ]);
            }
            map.extend(rec.states.iter().map(|&s| if s { '1' } else { '0' }));
            map.push('\n');
        }
    }
    write_csv(
        &run.path("registration.csv"),
        &[
            "registration",
            "row",
            "cell_index",
            "vx1",
            "vx2",
            "delta_vx",
            "state",
        ],
        &rows,
    )?;
    write_atomic(&run.path("state_map.txt"), map.as_bytes())?;
    run.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsOutcome {
    pub report: MetricsReport,
    pub hd_inter: HdStats,
    pub hd_instances: HdStats,
    pub hd_reconf: HdStats,
    pub correlation: CorrelationMatrix,
    /// Response matrix across registrations of one row.
    pub registrations: ResponseMatrix,
}

/// Repeated reconfiguration of one row under fixed challenges. Returns the
/// stacked response matrix (one row per reconfiguration) and the frozen
/// row after the last reconfiguration.
pub fn reconfiguration_protocol(
    cfg: &ExperimentConfig,
    seeds: &SeedTree,
    challenges: &[Challenge],
) -> Result<(Vec<ResponseMatrix>, PufRow)> {
    let recipe = cfg.recipe();
    let mut row = recipe.row(cfg.array.n, &mut seeds.stream("reconfig-row", 0))?;
    let mut series = Vec::with_capacity(cfg.experiment.reconfigurations);
    for r in 0..cfg.experiment.reconfigurations {
        let mut rng = seeds.stream("reconfigure", r as u64);
        let rec = if r == 0 {
            row.register(&recipe.write, &mut rng)?
        } else {
            row.reconfigure(&recipe.write, &mut rng)?
        };
        check_degenerate(&rec)?;
        let (bits, _) = respond_all(&row, challenges)?;
        series.push(ResponseMatrix::new(vec![bits], vec![format!("reconf{r}")])?);
    }
    Ok((series, row))
}

/// Uniformity, uniqueness, reconfigurability, reliability and flip-chance
/// protocol at the configured operating point.
pub fn metrics_protocol(cfg: &ExperimentConfig) -> Result<MetricsOutcome> {
    cfg.validate()?;
    let e = &cfg.experiment;
    let n = cfg.array.n;
    let seeds = SeedTree::new(cfg.seed);
    let recipe = cfg.recipe();
    let challenges = Challenge::random_set(n, e.challenges, &mut seeds.stream("challenges", 0));

    // every registration starts from an erase, so round r depends only on
    // the fabricated row and stream r
    let fabricated = recipe.row(n, &mut seeds.stream("row", 0))?;
    let registrations: Vec<(Vec<bool>, usize)> = (0..e.registrations)
        .into_par_iter()
        .map(|r| {
            let mut row = fabricated.clone();
            let rec = row.register(&recipe.write, &mut seeds.stream("registration", r as u64))?;
            check_degenerate(&rec)?;
            respond_all(&row, &challenges)
        })
        .collect::<Result<_>>()?;

    let instances: Vec<PufRow> = (0..e.instances)
        .into_par_iter()
        .map(|i| recipe.registered_row(n, &mut seeds.stream("instance", i as u64)))
        .collect::<Result<_>>()?;
    let instance_responses: Vec<(Vec<bool>, usize)> = instances
        .par_iter()
        .map(|row| respond_all(row, &challenges))
        .collect::<Result<_>>()?;

    let mut tie_count = 0;
    let reg_matrix = ResponseMatrix::with_prefix(
        registrations
            .into_iter()
            .map(|(b, t)| {
                tie_count += t;
                b
            })
            .collect(),
        "registration",
    )?;
    let inst_matrix = ResponseMatrix::with_prefix(
        instance_responses
            .into_iter()
            .map(|(b, t)| {
                tie_count += t;
                b
            })
            .collect(),
        "instance",
    )?;

    let bins = e.histogram_bins;
    let hw = hamming_weight(&reg_matrix)?;
    let entropy = bitwise_entropy(&reg_matrix)?;
    let hd_inter = hd_inter_binned(&reg_matrix, bins)?;
    let hd_instances = hd_inter_binned(&inst_matrix, bins)?;

    let (series, frozen) = reconfiguration_protocol(cfg, &seeds, &challenges)?;
    let hd_reconf = hd_reconfigure_series_binned(&series, bins)?;
    let correlation = correlation_matrix(&ResponseMatrix::concat(&series)?)?;

    let ber = bit_error_rate(&challenges, e.repeats, |c| frozen.response_bit(c))?;

    let flip_set = Challenge::random_set(
        n,
        e.flip_challenges,
        &mut seeds.stream("flip-challenges", 0),
    );
    let flips = instances
        .par_iter()
        .map(|row| flip_chance(row, &flip_set))
        .collect::<Result<Vec<_>>>()?;
    let flip_mean = flips.iter().map(|f| f.chance).sum::<f64>() / flips.len() as f64;
    tie_count += flips.iter().map(|f| f.ties).sum::<usize>();

    let report = MetricsReport {
        hw,
        entropy_per_bit: entropy,
        hd_inter_mean: hd_inter.mean,
        hd_inter_std: hd_inter.std,
        hd_instances_mean: hd_instances.mean,
        hd_instances_std: hd_instances.std,
        hd_reconf_mean: hd_reconf.mean,
        hd_reconf_std: hd_reconf.std,
        corr_max_offdiag: correlation.max_offdiag_abs(),
        corr_degenerate_entries: correlation.degenerate_entries(),
        reliability_bit_error_rate: ber,
        flip_chance: flip_mean,
        tie_count,
    };
    Ok(MetricsOutcome {
        report,
        hd_inter,
        hd_instances,
        hd_reconf,
        correlation,
        registrations: reg_matrix,
    })
}

const HIST_HEADER: [&str; 3] = ["bin_low", "bin_high", "count"];

pub fn cmd_metrics(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let m = metrics_protocol(cfg)?;
    let mut run = Run::new(cfg, out, "metrics");
    write_atomic(&run.path("metrics.txt"), m.report.to_kv().as_bytes())?;
    let json = serde_json::to_string_pretty(&m.report).expect("report serializes");
    write_atomic(&run.path("metrics.json"), json.as_bytes())?;
    write_csv(
        &run.path("hd_inter_hist.csv"),
        &HIST_HEADER,
        &m.hd_inter.histogram.csv_rows(),
    )?;
    write_csv(
        &run.path("hd_instances_hist.csv"),
        &HIST_HEADER,
        &m.hd_instances.histogram.csv_rows(),
    )?;
    write_csv(
        &run.path("hd_reconf_hist.csv"),
        &HIST_HEADER,
        &m.hd_reconf.histogram.csv_rows(),
    )?;
    let entropy_rows: Vec<Vec<String>> = m
        .report
        .entropy_per_bit
        .iter()
        .enumerate()
        .map(|(i, h)| vec![i.to_string(), format!("{h:.6}")])
        .collect();
    write_csv(&run.path("entropy.csv"), &["bit", "entropy"], &entropy_rows)?;
    let labels: Vec<String> = (0..m.correlation.size())
        .map(|i| format!("reconf{i}"))
        .collect();
    let header: Vec<&str> = labels.iter().map(String::as_str).collect();
    write_csv(
        &run.path("correlation.csv"),
        &header,
        &m.correlation.csv_rows(),
    )?;
    run.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Pulse,
    Temperature,
    Size,
    SigmaC,
    ChallengeLength,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::Pulse,
        SweepAxis::Temperature,
        SweepAxis::Size,
        SweepAxis::SigmaC,
        SweepAxis::ChallengeLength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Pulse => "pulse",
            SweepAxis::Temperature => "temperature",
            SweepAxis::Size => "size",
            SweepAxis::SigmaC => "sigma_c",
            SweepAxis::ChallengeLength => "challenge_length",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config("axis", format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: String,
    pub report: MetricsReport,
}

fn sweep_variants(cfg: &ExperimentConfig, axis: SweepAxis) -> Vec<(String, ExperimentConfig)> {
    let s = &cfg.sweep;
    let with = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = cfg.clone();
        f(&mut c);
        c
    };
    match axis {
        SweepAxis::Pulse => s
            .pulses
            .iter()
            .map(|&p| (format!("{p}"), with(&|c| c.device.pulse_amplitude = p)))
            .collect(),
        SweepAxis::Temperature => s
            .temperatures
            .iter()
            .map(|&t| (format!("{t}"), with(&|c| c.device.temperature = t)))
            .collect(),
        SweepAxis::Size => s
            .sizes
            .iter()
            .map(|&z: &SizeProfile| (z.to_string(), with(&|c| c.device.size = z)))
            .collect(),
        SweepAxis::SigmaC => s
            .sigma_cs
            .iter()
            .map(|&v| (format!("{v}"), with(&|c| c.array.sigma_c = v)))
            .collect(),
        SweepAxis::ChallengeLength => s
            .challenge_lengths
            .iter()
            .map(|&n| {
                (
                    n.to_string(),
                    with(&|c| {
                        c.array.n = n;
                        c.array.sigma_c = s.length_sigma_c;
                    }),
                )
            })
            .collect(),
    }
}

/// Full metrics at every value of one axis; other settings stay at the
/// configured operating point and every point reuses the same seed.
pub fn sweep_protocol(cfg: &ExperimentConfig, axis: SweepAxis) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let variants = sweep_variants(cfg, axis);
    if variants.is_empty() {
        return Err(Error::config(
            format!("sweep.{}", axis.name()),
            "no sweep values configured",
        ));
    }
    variants
        .into_iter()
        .map(|(value, c)| {
            Ok(SweepPoint {
                axis,
                value,
                report: metrics_protocol(&c)?.report,
            })
        })
        .collect()
}

fn report_statistics(r: &MetricsReport) -> Vec<(&'static str, String)> {
    let ent = &r.entropy_per_bit;
    let ent_min = ent.iter().copied().fold(f64::INFINITY, f64::min);
    let ent_mean = ent.iter().sum::<f64>() / ent.len().max(1) as f64;
    vec![
        ("hw", format!("{:.6}", r.hw)),
        ("entropy_mean", format!("{ent_mean:.6}")),
        ("entropy_min", format!("{ent_min:.6}")),
        ("hd_inter_mean", format!("{:.6}", r.hd_inter_mean)),
        ("hd_inter_std", format!("{:.6}", r.hd_inter_std)),
        ("hd_instances_mean", format!("{:.6}", r.hd_instances_mean)),
        ("hd_instances_std", format!("{:.6}", r.hd_instances_std)),
        ("hd_reconf_mean", format!("{:.6}", r.hd_reconf_mean)),
        ("hd_reconf_std", format!("{:.6}", r.hd_reconf_std)),
        (
            "corr_max_offdiag",
            r.corr_max_offdiag
                .map_or_else(|| "degenerate".into(), |v| format!("{v:.6}")),
        ),
        (
            "reliability_bit_error_rate",
            format!("{:.6}", r.reliability_bit_error_rate),
        ),
        ("flip_chance", format!("{:.6}", r.flip_chance)),
        ("tie_count", r.tie_count.to_string()),
    ]
}

pub fn cmd_sweep(cfg: &ExperimentConfig, axis: SweepAxis, out: &Path) -> Result<RunManifest> {
    let points = sweep_protocol(cfg, axis)?;
    let mut run = Run::new(cfg, out, format!("sweep {axis}"));
    let mut rows = Vec::new();
    for p in &points {
        for (stat, value) in report_statistics(&p.report) {
            rows.push(vec![
                axis.to_string(),
                p.value.clone(),
                stat.to_string(),
                value,
            ]);
        }
    }
    write_csv(
        &run.path(&format!("sweep_{axis}.csv")),
        &["axis", "axis_value", "statistic", "value"],
        &rows,
    )?;
    run.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub accuracy_map: Vec<AccuracyRow>,
    pub length_sweep: Vec<AccuracyRow>,
    pub thresholds: Vec<Threshold>,
    pub reports: BTreeMap<CellKey, TrainReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellRecord {
    row: AccuracyRow,
    report: TrainReport,
}

fn cell_file_name(key: &CellKey) -> String {
    format!(
        "{}-n{}-k{}-s{}-t{}.json",
        key.kind, key.n, key.k, key.train_size, key.trial
    )
}

const CELLS_DIR: &str = "cells";
const FINGERPRINT_FILE: &str = "FINGERPRINT";

fn fingerprint(cfg: &ExperimentConfig) -> String {
    let text = cfg.to_toml();
    let h = text.bytes().fold(cfg.seed, |h, b| mix(h ^ u64::from(b)));
    format!("{h:016x}")
}

/// Loads finished cells from a previous run with the same configuration.
/// Cells from a different configuration are discarded.
fn load_cells(cfg: &ExperimentConfig, dir: &Path) -> Result<BTreeMap<CellKey, CellRecord>> {
    let fp = fingerprint(cfg);
    let fp_path = dir.join(FINGERPRINT_FILE);
    let matches = fs::read_to_string(&fp_path).is_ok_and(|s| s.trim() == fp);
    if !matches {
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_atomic(&fp_path, fp.as_bytes())?;
        return Ok(BTreeMap::new());
    }
    let mut cells = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let rec: CellRecord = serde_json::from_str(&text)
            .map_err(|e| Error::Runtime(format!("corrupt cell file {}: {e}", path.display())))?;
        cells.insert(rec.row.key(), rec);
    }
    Ok(cells)
}

/// Accuracy maps for every configured target and, when configured, the
/// challenge-length sweep. With `cells_dir`, every finished cell is
/// persisted there and cells already present are skipped.
pub fn attack_protocol(cfg: &ExperimentConfig, cells_dir: Option<&Path>) -> Result<AttackOutcome> {
    cfg.validate()?;
    let a = &cfg.attack;
    let seeds = SeedTree::new(cfg.seed).child("attack", 0);
    let recipe = cfg.recipe();
    let loaded = match cells_dir {
        Some(dir) => load_cells(cfg, dir)?,
        None => BTreeMap::new(),
    };
    let completed: BTreeMap<CellKey, AccuracyRow> =
        loaded.iter().map(|(k, r)| (*k, r.row.clone())).collect();
    let fresh = std::sync::Mutex::new(BTreeMap::new());
    let sink = |row: &AccuracyRow, report: &TrainReport| -> Result<()> {
        let rec = CellRecord {
            row: row.clone(),
            report: report.clone(),
        };
        if let Some(dir) = cells_dir {
            let json = serde_json::to_string(&rec).expect("cell serializes");
            write_atomic(&dir.join(cell_file_name(&row.key())), json.as_bytes())?;
        }
        fresh
            .lock()
            .expect("sink lock")
            .insert(row.key(), report.clone());
        Ok(())
    };

    let mut accuracy_map = Vec::new();
    let mut length_sweep = Vec::new();
    for kind in a.targets.kinds() {
        let spec = SweepSpec {
            kind,
            ns: vec![a.n],
            ks: a.ks.clone(),
            train_sizes: a.train_sizes.clone(),
            trials: a.trials,
            test_size: a.test_size,
            rprop: a.rprop,
        };
        accuracy_map.extend(run_sweep(&spec, &recipe, &seeds, &completed, &sink)?);
        if !a.length_ns.is_empty() {
            let spec = SweepSpec {
                ns: a.length_ns.clone(),
                ks: a.length_ks.clone(),
                train_sizes: a.length_train_sizes.clone(),
                ..spec
            };
            length_sweep.extend(run_sweep(&spec, &recipe, &seeds, &completed, &sink)?);
        }
    }
    let mut reports: BTreeMap<CellKey, TrainReport> =
        loaded.into_iter().map(|(k, r)| (k, r.report)).collect();
    reports.extend(fresh.into_inner().expect("sink lock"));
    let thresholds = thresholds(&accuracy_map, a.threshold_level);
    Ok(AttackOutcome {
        accuracy_map,
        length_sweep,
        thresholds,
        reports,
    })
}

pub fn cmd_attack(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let cells = out.join(CELLS_DIR);
    let outcome = attack_protocol(cfg, Some(&cells))?;
    let mut run = Run::new(cfg, out, "attack");
    let records = |rows: &[AccuracyRow]| rows.iter().map(AccuracyRow::record).collect::<Vec<_>>();
    write_csv(
        &run.path("accuracy_map.csv"),
        &ACCURACY_HEADER,
        &records(&outcome.accuracy_map),
    )?;
    if !outcome.length_sweep.is_empty() {
        write_csv(
            &run.path("length_sweep.csv"),
            &ACCURACY_HEADER,
            &records(&outcome.length_sweep),
        )?;
    }
    let summary: Vec<Vec<String>> = summarize(&outcome.accuracy_map)
        .into_iter()
        .chain(summarize(&outcome.length_sweep))
        .map(|s| {
            vec![
                s.kind.to_string(),
                s.n.to_string(),
                s.k.to_string(),
                s.train_size.to_string(),
                format!("{:.6}", s.mean_test_acc),
                format!("{:.6}", s.max_test_acc),
            ]
        })
        .collect();
    write_csv(
        &run.path("accuracy_summary.csv"),
        &[
            "kind",
            "n",
            "k",
            "train_size",
            "mean_test_acc",
            "max_test_acc",
        ],
        &summary,
    )?;
    let level = format!("{}", cfg.attack.threshold_level);
    let th: Vec<Vec<String>> = outcome
        .thresholds
        .iter()
        .map(|t| {
            vec![
                t.kind.to_string(),
                t.n.to_string(),
                t.k.to_string(),
                level.clone(),
                t.train_size
                    .map_or_else(|| "none".into(), |s| s.to_string()),
            ]
        })
        .collect();
    write_csv(
        &run.path("thresholds.csv"),
        &["kind", "n", "k", "level", "threshold_train_size"],
        &th,
    )?;
    let reports: Vec<CellRecord> = outcome
        .accuracy_map
        .iter()
        .chain(&outcome.length_sweep)
        .filter_map(|row| {
            outcome.reports.get(&row.key()).map(|r| CellRecord {
                row: row.clone(),
                report: r.clone(),
            })
        })
        .collect();
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    write_atomic(&run.path("train_reports.json"), json.as_bytes())?;
    run.finish()
}

/// A CRP set from a fresh instance of the configured kind.
pub fn gen_crps_protocol(cfg: &ExperimentConfig) -> Result<CrpSet> {
    cfg.validate()?;
    let a = &cfg.attack;
    let seeds = SeedTree::new(cfg.seed).child("gen-crps", 0);
    let target = crate::attack::build_target(a.crp_kind, a.n, a.crp_k, &cfg.recipe(), &seeds)?;
    let mut set = CrpSet::generate(target.as_ref(), a.crp_count, seeds.seed("crps", 0))?;
    set.seed = cfg.seed;
    Ok(set)
}

pub fn cmd_gen_crps(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    let set = gen_crps_protocol(cfg)?;
    let mut run = Run::new(cfg, out, "gen-crps");
    set.write(&run.path("crps.txt"))?;
    run.finish()
}
