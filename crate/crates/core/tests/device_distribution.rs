use ferropuf::device::{DeviceParams, FeFetDevice, WriteConfig};
use ferropuf::rng::stream_from_seed;
use statrs::distribution::{ContinuousCDF, Normal};

/// One-sample Kolmogorov–Smirnov statistic against `cdf`.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

// asymptotic critical value at alpha = 0.01
fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[test]
fn repeated_weak_writes_follow_the_c2c_normal() {
    let p = DeviceParams::default();
    let w = WriteConfig::default();
    let mut rng = stream_from_seed(2024);
    let mut dev = FeFetDevice::new(p, &mut rng).unwrap();
    let xs: Vec<f64> = (0..10_000)
        .map(|_| {
            dev.erase();
            dev.write_weak(&w, &mut rng).unwrap();
            dev.vth()
        })
        .collect();
    let mean = p.weak_mean(w.pulse_amplitude, w.temperature) + dev.d2d_offset();
    let normal = Normal::new(mean, p.sigma_c2c).unwrap();
    let d = ks_statistic(xs, |x| normal.cdf(x));
    assert!(d < ks_critical(10_000), "D = {d}");
}

#[test]
fn population_weak_writes_follow_the_combined_normal() {
    let p = DeviceParams::default();
    let w = WriteConfig {
        pulse_amplitude: 3.2,
        temperature: 55.0,
    };
    let mut rng = stream_from_seed(77);
    let xs: Vec<f64> = (0..10_000)
        .map(|_| {
            let mut dev = FeFetDevice::new(p, &mut rng).unwrap();
            dev.write_weak(&w, &mut rng).unwrap();
            dev.vth()
        })
        .collect();
    let sd = (p.sigma_d2d.powi(2) + p.sigma_c2c.powi(2)).sqrt();
    let normal = Normal::new(p.weak_mean(3.2, 55.0), sd).unwrap();
    let d = ks_statistic(xs, |x| normal.cdf(x));
    assert!(d < ks_critical(10_000), "D = {d}");
}

#[test]
fn ks_detects_a_shifted_distribution() {
    let p = DeviceParams::default();
    let mut rng = stream_from_seed(5);
    let mut dev = FeFetDevice::new(p, &mut rng).unwrap();
    let xs: Vec<f64> = (0..10_000)
        .map(|_| {
            dev.write_weak(&WriteConfig::default(), &mut rng).unwrap();
            dev.vth()
        })
        .collect();
    let wrong = Normal::new(dev.d2d_offset() + 0.72, p.sigma_c2c).unwrap();
    assert!(ks_statistic(xs, |x| wrong.cdf(x)) > ks_critical(10_000));
}
