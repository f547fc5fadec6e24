use ferropuf::expctl::{attack_protocol, gen_crps_protocol, metrics_protocol, ExperimentConfig};
use rayon::ThreadPoolBuilder;

fn config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
seed = 31337
[experiment]
challenges = 50
registrations = 20
instances = 16
reconfigurations = 6
repeats = 10
flip_challenges = 200
[attack]
n = 10
ks = [1, 2]
train_sizes = [100, 400]
trials = 2
test_size = 1000
length_ns = [6]
length_ks = [2]
length_train_sizes = [200]
[attack.rprop]
restarts = 4
max_epochs = 300
"#,
    )
    .unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn metrics_do_not_depend_on_thread_count() {
    let cfg = config();
    let one = in_pool(1, || metrics_protocol(&cfg).unwrap());
    let four = in_pool(4, || metrics_protocol(&cfg).unwrap());
    assert_eq!(one, four);
    assert_eq!(
        serde_json::to_string(&one.report).unwrap(),
        serde_json::to_string(&four.report).unwrap()
    );
}

#[test]
fn attack_tables_do_not_depend_on_thread_count() {
    let cfg = config();
    let one = in_pool(1, || attack_protocol(&cfg, None).unwrap());
    let four = in_pool(4, || attack_protocol(&cfg, None).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.accuracy_map.len(), 2 * 2 * 2 * 2);
}

#[test]
fn crp_generation_does_not_depend_on_thread_count() {
    let cfg = config();
    let one = in_pool(1, || gen_crps_protocol(&cfg).unwrap().to_text());
    let three = in_pool(3, || gen_crps_protocol(&cfg).unwrap().to_text());
    assert_eq!(one, three);
}
