use tempered_ld::ldp::{scaled_sample, ScalingSpec};
use tempered_ld::simulate::{
    par_map_indexed, sample_increments, sample_passages, simulate_path, PassageOptions, RngStream,
};
use tempered_ld::stats::{ks_two_sample, mean, std_error};
use tempered_ld::{CumulantFn, ParamSet};

fn p(g: f64, l: f64, t: f64, d: f64) -> ParamSet<f64> {
    ParamSet::validate(g, l, t, d).unwrap()
}

#[test]
fn empirical_mgf_matches_cumulant() {
    for q in [
        p(0.5, 1.0, 1.0, 0.0),
        p(-1.0, 1.0, 1.0, 0.0),
        p(0.5, 1.0, 1.0, 1.0),
        p(-2.0, 0.5, 2.0, 0.3),
    ] {
        let k = CumulantFn::new(q);
        let dt = 0.8;
        let xs = sample_increments(&q, dt, 200_000, 21).unwrap();
        for y in [-1.0, 0.4 * k.y0()] {
            let e: Vec<f64> = xs.iter().map(|x| (y * x).exp()).collect();
            let want = (dt * k.kappa(y).unwrap()).exp();
            assert!(
                (mean(&e) - want).abs() <= 4.0 * std_error(&e),
                "{q:?} y={y}: {} vs {want}",
                mean(&e)
            );
        }
    }
}

#[test]
fn theta_scaled_increments_share_one_law() {
    let base = p(0.5, 1.0, 1.0, 0.0);
    let spec = ScalingSpec::identical(0.5);
    let draw = |theta: f64, seed: u64| -> Vec<f64> {
        par_map_indexed(30_000, |i| {
            scaled_sample(
                &spec,
                &base,
                theta,
                &[0.7],
                &mut RngStream::replicate(seed, i, 0),
            )
            .unwrap()[0]
        })
    };
    let ks = ks_two_sample(&draw(1.0, 1), &draw(5.0, 2));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn passage_scales_inversely_with_lambda() {
    let opts = PassageOptions::default();
    let a: Vec<f64> = sample_passages(&p(0.5, 2.0, 1.0, 0.0), 5.0, 1e-2, 20_000, 1, opts)
        .unwrap()
        .iter()
        .map(|r| r.t_hat)
        .collect();
    // Grid step doubled so both estimators carry the same relative bias.
    let b: Vec<f64> = sample_passages(&p(0.5, 1.0, 1.0, 0.0), 5.0, 2e-2, 20_000, 2, opts)
        .unwrap()
        .iter()
        .map(|r| r.t_hat / 2.0)
        .collect();
    let ks = ks_two_sample(&a, &b);
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn compound_poisson_jump_count() {
    let q = p(-1.0, 1.0, 1.0, 0.0);
    let counts: Vec<f64> = par_map_indexed(20_000, |i| {
        let path = simulate_path(&q, 10.0, 1.0, &mut RngStream::replicate(9, i, 0)).unwrap();
        path.exact_jumps.unwrap().len() as f64
    });
    // Poisson(10): mean and variance both 10.
    assert!((mean(&counts) - 10.0).abs() < 4.0 * (10.0f64 / 20_000.0).sqrt());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let q = p(0.5, 1.0, 1.0, 0.5);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let s = sample_increments(&q, 0.3, 5_000, 77).unwrap();
                let t = sample_passages(&q, 2.0, 1e-2, 500, 78, PassageOptions::default()).unwrap();
                (s, t)
            })
    };
    let (a, b) = (run(1), run(8));
    assert_eq!(
        a.0.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
        b.0.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(a.1, b.1);
}
