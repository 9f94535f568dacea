use bsslab_core::kernels::whittle_matern;
use bsslab_core::noise_sim::{bss_grid, replication_seed, simulate_bss, simulate_exact_gaussian};
use bsslab_core::stats::Moments;
use bsslab_core::{parse_config, run, CovModel, KernelSpec, SigmaModel};

#[test]
fn moving_average_and_exact_sampler_share_the_variance() {
    let spec = KernelSpec::gamma(0.25, 1.0).unwrap();
    let model = CovModel::for_gamma_kernel(&spec, 1.0).unwrap();
    let exact = whittle_matern(&model, 0.0);
    let grid = bss_grid(&spec, 1.0 / 64.0, 1.0, 1e-3).unwrap();

    let mut ma = Moments::new();
    let mut circ = Moments::new();
    for i in 0..800 {
        let seed = replication_seed(17, i);
        let y = simulate_bss(&spec, &SigmaModel::Constant(1.0), &grid, seed).unwrap();
        ma.push(y[y.len() - 1].powi(2));
        let g = simulate_exact_gaussian(&|h| whittle_matern(&model, h), 64, 1.0 / 64.0, seed).unwrap();
        circ.push(g[0].powi(2));
    }
    for m in [&ma, &circ] {
        assert!((m.mean() - exact).abs() < 4.0 * m.std_error(), "{} vs {exact}", m.mean());
    }
}

#[test]
fn simulation_is_a_function_of_the_seed() {
    let spec = KernelSpec::power(-0.2, 1.0).unwrap();
    let grid = bss_grid(&spec, 1.0 / 32.0, 1.0, 1e-3).unwrap();
    let sigma = SigmaModel::ExpOu {
        theta: 2.0,
        independent: false,
    };
    let a = simulate_bss(&spec, &sigma, &grid, 5).unwrap();
    assert_eq!(a, simulate_bss(&spec, &sigma, &grid, 5).unwrap());
    assert_ne!(a, simulate_bss(&spec, &sigma, &grid, 6).unwrap());
}

#[test]
fn config_text_to_report() {
    let cfg = parse_config(
        "experiment = memory_tail\nkernel.family = power\nkernel.alpha = -0.3\nkernel.beta = 1.5\n",
    )
    .unwrap();
    let report = run(&cfg, 2).unwrap();
    assert_eq!(report.exit_code(), 0, "{}", report.summary());
    let csv = report.report_csv();
    let slope_row = csv.lines().find(|l| l.starts_with("memory_tail_slope,")).unwrap();
    let fields: Vec<&str> = slope_row.split(',').collect();
    assert_eq!(fields[2], "-1.5");
    assert_eq!(fields[4], "true");
}
