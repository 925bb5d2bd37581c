use num_complex::Complex64;

use dissipative_gates::evolve::no_photon_probability;
use dissipative_gates::gates::{GateSpec, QubitInput};
use dissipative_gates::hamiltonian::{build_h_cond, build_h_total, decay_operator, SystemParams};
use dissipative_gates::hilbert::HilbertSpace;
use dissipative_gates::trajectory::{restart_protocol_estimate, run_trajectories, JumpConfig};

/// Asymptotic Kolmogorov–Smirnov p-value for statistic `d` on `n` samples.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn ks_helpers_reject_a_wrong_rate() {
    let mut xs: Vec<f64> = (0..1000).map(|i| -((i as f64 + 0.5) / 1000.0).ln()).collect();
    assert!(ks_p_value(ks_statistic(&mut xs.clone(), |t| 1.0 - (-t).exp()), 1000) > 0.99);
    assert!(ks_p_value(ks_statistic(&mut xs, |t| 1.0 - (-1.3 * t).exp()), 1000) < 1e-6);
}

#[test]
fn level_three_decays_exponentially() {
    let space = HilbertSpace::new(2).unwrap();
    let params = SystemParams::default();
    let gamma = params.gamma3;
    let h = decay_operator(&space) * Complex64::new(0.0, -0.5 * gamma);
    let cfg = JumpConfig::standard(&space, &params, 1, 10_000, 99, 20.0 / gamma).unwrap();
    let psi = space.basis_state(3, 0, 0).unwrap();
    let st = run_trajectories(&h, &cfg, &psi).unwrap();
    assert_eq!(st.n_no_jump, 0);
    assert_eq!(st.first_jump_times.len(), 10_000);
    // one emission per trajectory: the decay lands in |1> which is stable here
    assert_eq!(st.jump_time_histogram.counts.iter().sum::<u64>(), 10_000);
    let mut times = st.first_jump_times.clone();
    let d = ks_statistic(&mut times, |t| 1.0 - (-gamma * t).exp());
    let p = ks_p_value(d, 10_000);
    assert!(p > 0.01, "KS statistic {d}, p = {p}");
}

#[test]
fn undriven_dark_states_never_emit() {
    let space = HilbertSpace::new(2).unwrap();
    let params = SystemParams::default();
    let h = build_h_cond(&space, &params);
    let cfg = JumpConfig::standard(&space, &params, 1, 500, 1, 200.0).unwrap();
    for psi in [space.basis_state(0, 0, 2).unwrap(), space.basis_state(1, 1, 0).unwrap(), space.antisymmetric_state(0).unwrap()] {
        let st = run_trajectories(&h, &cfg, &psi).unwrap();
        assert_eq!(st.n_no_jump, 500);
    }
}

#[test]
fn destination_level_does_not_change_p0() {
    let space = HilbertSpace::new(2).unwrap();
    let spec = GateSpec::cnot(&SystemParams::default(), 0.2).unwrap();
    let h = build_h_total(&space, &spec.params);
    let psi = QubitInput::basis(1, 1).embed(&space);
    let estimates: Vec<usize> = (0..3)
        .map(|d| {
            let cfg = JumpConfig::standard(&space, &spec.params, d, 1000, 5, spec.pulse_time).unwrap();
            run_trajectories(&h, &cfg, &psi).unwrap().n_no_jump
        })
        .collect();
    // the first waiting time uses the same random number for every
    // destination, so the no-jump count is identical
    assert!(estimates.windows(2).all(|w| w[0] == w[1]), "{estimates:?}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let space = HilbertSpace::new(2).unwrap();
    let spec = GateSpec::cnot(&SystemParams::default(), 0.1).unwrap();
    let h = build_h_total(&space, &spec.params);
    let psi = QubitInput::minus_10_11().embed(&space);
    let cfg = JumpConfig::standard(&space, &spec.params, 1, 300, 17, spec.pulse_time).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_trajectories(&h, &cfg, &psi).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn restart_attempts_are_geometric() {
    let space = HilbertSpace::new(2).unwrap();
    let spec = GateSpec::cnot(&SystemParams::default(), 0.2).unwrap();
    let input = QubitInput::basis(1, 0);
    let p = no_photon_probability(&build_h_total(&space, &spec.params), &input.embed(&space), spec.pulse_time).unwrap();
    assert!((p - 0.73).abs() < 0.01);
    let n = 4000;
    let cfg = JumpConfig::standard(&space, &spec.params, 1, 1, 2718, spec.pulse_time).unwrap();
    let st = restart_protocol_estimate(&spec, &space, &input, &cfg, n).unwrap();

    let mean = 1.0 / p;
    let var = (1.0 - p) / (p * p);
    let se = (var / n as f64).sqrt();
    assert!((st.mean_attempts - mean).abs() < 4.0 * se, "{} vs {mean}", st.mean_attempts);
    assert!((st.variance / var - 1.0).abs() < 0.2, "{} vs {var}", st.variance);
    let ones = st.attempts.iter().filter(|&&a| a == 1).count() as f64 / n as f64;
    assert!((ones - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    // same seed, same attempts
    assert_eq!(restart_protocol_estimate(&spec, &space, &input, &cfg, n).unwrap(), st);
}
