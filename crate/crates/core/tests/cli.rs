use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ferropuf::expctl::{RunManifest, MANIFEST_FILE};
use ferropuf::puf::CrpSet;
use tempfile::TempDir;

const SMALL: &str = r#"
seed = 42

[experiment]
challenges = 40
registrations = 12
instances = 10
reconfigurations = 5
repeats = 20
flip_challenges = 100
register_rounds = 3
histogram_bins = 10

[sweep]
pulses = [2.8, 3.6]
temperatures = [25.0]
sizes = ["500x500"]
sigma_cs = [0.0, 0.05]
challenge_lengths = [9, 17]

[attack]
n = 8
ks = [1, 2]
train_sizes = [50, 200]
trials = 1
test_size = 500
length_ns = [5, 9]
length_ks = [1]
length_train_sizes = [100]
crp_count = 64

[attack.rprop]
restarts = 2
max_epochs = 200
"#;

fn ferropuf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ferropuf"))
        .args(args)
        .current_dir(dir)
        .env_remove("FERROPUF_SEED")
        .env_remove("FERROPUF_OUT")
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.toml"), config).unwrap();
    dir
}

fn run_ok(dir: &Path, cmd: &str, out: &str) -> RunManifest {
    let o = ferropuf(&[cmd, "--config", "c.toml", "--out", out], dir);
    assert!(
        o.status.success(),
        "{cmd}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(dir.join(out).join(MANIFEST_FILE)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn data_files(dir: &Path, m: &RunManifest) -> Vec<(String, String)> {
    m.outputs
        .iter()
        .map(|f| (f.clone(), fs::read_to_string(dir.join(f)).unwrap()))
        .collect()
}

#[test]
fn every_command_is_byte_reproducible() {
    let dir = setup(SMALL);
    for cmd in ["register", "metrics", "attack", "gen-crps"] {
        let a = run_ok(dir.path(), cmd, &format!("{cmd}-a"));
        let b = run_ok(dir.path(), cmd, &format!("{cmd}-b"));
        assert_eq!(a.outputs, b.outputs);
        assert!(!a.outputs.is_empty());
        assert_eq!(
            data_files(&dir.path().join(format!("{cmd}-a")), &a),
            data_files(&dir.path().join(format!("{cmd}-b")), &b),
            "{cmd}"
        );
    }
}

#[test]
fn manifest_lists_every_file_and_csvs_have_headers() {
    let dir = setup(SMALL);
    let m = run_ok(dir.path(), "metrics", "m");
    let out = dir.path().join("m");
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f != MANIFEST_FILE)
        .collect();
    on_disk.sort();
    let mut listed = m.outputs.clone();
    listed.sort();
    assert_eq!(listed, on_disk);
    assert_eq!(m.seed, 42);
    assert_eq!(m.command, "metrics");
    for f in &m.outputs {
        if f.ends_with(".csv") {
            let first = fs::read_to_string(out.join(f)).unwrap();
            let header = first.lines().next().unwrap();
            assert!(header.chars().any(char::is_alphabetic), "{f}: {header}");
        }
    }
    for f in [
        "hd_inter_hist.csv",
        "hd_instances_hist.csv",
        "hd_reconf_hist.csv",
    ] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().count(), 1 + 10, "{f}");
    }
}

#[test]
fn registration_outputs_have_one_row_per_cell_and_round() {
    let dir = setup(SMALL);
    run_ok(dir.path(), "register", "r");
    let csv = fs::read_to_string(dir.path().join("r/registration.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "registration,row,cell_index,vx1,vx2,delta_vx,state"
    );
    assert_eq!(csv.lines().count(), 1 + 3 * 27);
    let map = fs::read_to_string(dir.path().join("r/state_map.txt")).unwrap();
    assert_eq!(map.lines().count(), 3);
    assert!(map.lines().all(|l| l.len() == 27));
}

#[test]
fn manifest_reproduces_its_run() {
    let dir = setup(SMALL);
    let first = run_ok(dir.path(), "gen-crps", "g1");
    let o = ferropuf(
        &["gen-crps", "--config", "g1/manifest.json", "--out", "g2"],
        dir.path(),
    );
    assert!(o.status.success());
    let a = fs::read(dir.path().join("g1/crps.txt")).unwrap();
    let b = fs::read(dir.path().join("g2/crps.txt")).unwrap();
    assert_eq!(a, b);
    assert_eq!(first.outputs, vec!["crps.txt".to_string()]);
}

#[test]
fn crp_file_round_trips() {
    let dir = setup(SMALL);
    run_ok(dir.path(), "gen-crps", "g");
    let path = dir.path().join("g/crps.txt");
    let set = CrpSet::read(&path).unwrap();
    assert_eq!(set.len(), 64);
    assert_eq!(set.n, 8);
    assert_eq!(set.seed, 42);
    assert_eq!(set.to_text(), fs::read_to_string(&path).unwrap());
}

#[test]
fn seed_precedence_is_file_then_env_then_flag() {
    let dir = setup(SMALL);
    let run = |env: Option<&str>, flag: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ferropuf"));
        cmd.args(["gen-crps", "--config", "c.toml", "--out", out])
            .current_dir(dir.path())
            .env_remove("FERROPUF_SEED")
            .env_remove("FERROPUF_OUT");
        if let Some(s) = env {
            cmd.env("FERROPUF_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        CrpSet::read(&dir.path().join(out).join("crps.txt"))
            .unwrap()
            .seed
    };
    assert_eq!(run(None, None, "a"), 42);
    assert_eq!(run(Some("7"), None, "b"), 7);
    assert_eq!(run(Some("7"), Some("9"), "c"), 9);

    let o = Command::new(env!("CARGO_BIN_EXE_ferropuf"))
        .args(["gen-crps", "--config", "c.toml"])
        .current_dir(dir.path())
        .env("FERROPUF_OUT", "from-env")
        .env_remove("FERROPUF_SEED")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/crps.txt").exists());
}

#[test]
fn configuration_errors_exit_with_2_before_writing() {
    for (name, cfg) in [
        ("zero cells", "[array]\nn = 0\n"),
        ("unknown key", "[array]\ncells = 27\n"),
        ("unknown section", "[plotting]\ndpi = 300\n"),
        ("bad pulse", "[device]\npulse_amplitude = 5.0\n"),
        ("negative sigma", "[array]\nsigma_c = -0.1\n"),
        ("syntax", "seed = \n"),
        ("k zero", "[attack]\nks = [0]\n"),
    ] {
        let dir = setup(cfg);
        let o = ferropuf(&["metrics", "--config", "c.toml", "--out", "o"], dir.path());
        assert_eq!(
            o.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!dir.path().join("o").exists(), "{name}");
    }
    let dir = setup(SMALL);
    let o = ferropuf(&["metrics", "--config", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = ferropuf(
        &["sweep", "--config", "c.toml", "--axis", "voltage"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_csv_per_axis() {
    let dir = setup(SMALL);
    let o = ferropuf(&["sweep", "--config", "c.toml", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for axis in [
        "pulse",
        "temperature",
        "size",
        "sigma_c",
        "challenge_length",
    ] {
        let text =
            fs::read_to_string(dir.path().join(format!("s/{axis}/sweep_{axis}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "axis,axis_value,statistic,value");
        assert!(lines.all(|l| l.starts_with(axis)));
    }
    let text = fs::read_to_string(dir.path().join("s/pulse/sweep_pulse.csv")).unwrap();
    assert!(text.contains("pulse,2.8,hd_inter_mean,"));
    assert!(text.contains("pulse,3.6,hd_inter_mean,"));
}

#[test]
fn interrupted_attack_resumes_without_recomputing() {
    let dir = setup(SMALL);
    let full = run_ok(dir.path(), "attack", "a");
    let out = dir.path().join("a");
    let reference = data_files(&out, &full);
    let cells = out.join("cells");
    let mut cell_files: Vec<_> = fs::read_dir(&cells)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    cell_files.sort();
    assert_eq!(cell_files.len(), 2 * (2 * 2 + 2));

    // simulate an interruption: drop half the cells and every summary file
    for p in cell_files.iter().step_by(2) {
        fs::remove_file(p).unwrap();
    }
    for f in &full.outputs {
        fs::remove_file(out.join(f)).unwrap();
    }
    // an untouched mtime shows the surviving cell was reused, not rerun
    let kept = &cell_files[1];
    let stamp = |p: &Path| fs::metadata(p).unwrap().modified().unwrap();
    let before = stamp(kept);
    let resumed = run_ok(dir.path(), "attack", "a");
    assert_eq!(stamp(kept), before);
    assert_eq!(data_files(&out, &resumed), reference);

    // a different configuration invalidates the stored cells
    fs::write(
        dir.path().join("c.toml"),
        SMALL.replace("seed = 42", "seed = 43"),
    )
    .unwrap();
    run_ok(dir.path(), "attack", "a");
    assert_ne!(
        fs::read_to_string(out.join("accuracy_map.csv")).unwrap(),
        reference[0].1
    );
}

#[test]
fn shipped_default_config_matches_built_in_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let shipped = ferropuf::expctl::ExperimentConfig::load(&path).unwrap();
    assert_eq!(shipped, ferropuf::expctl::ExperimentConfig::default());
}
