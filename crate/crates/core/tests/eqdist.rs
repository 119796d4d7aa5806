use estat_core::{eqdist_test_multivariate, generate_gaussian, RngSeed};

#[test]
fn identical_samples_give_p_one() {
    let x = generate_gaussian(30, 3, RngSeed(4)).unwrap();
    let r = eqdist_test_multivariate(&x, &x, 99, RngSeed(1)).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn null_rejection_rate_is_calibrated() {
    let runs = 200;
    let rejections = (0..runs as u64)
        .filter(|&k| {
            let x = generate_gaussian(100, 3, RngSeed(10_000 + 2 * k)).unwrap();
            let y = generate_gaussian(100, 3, RngSeed(10_001 + 2 * k)).unwrap();
            eqdist_test_multivariate(&x, &y, 199, RngSeed(k)).unwrap().p_value <= 0.05
        })
        .count();
    let rate = rejections as f64 / runs as f64;
    assert!((0.02..=0.09).contains(&rate), "rate {rate}");
}

#[test]
fn shifted_mean_is_detected() {
    let runs = 50;
    let hits = (0..runs as u64)
        .filter(|&k| {
            let x = generate_gaussian(100, 3, RngSeed(20_000 + 2 * k)).unwrap();
            let y = generate_gaussian(100, 3, RngSeed(20_001 + 2 * k))
                .unwrap()
                .map(|_, _, v| v + 2.0)
                .unwrap();
            let r = eqdist_test_multivariate(&x, &y, 199, RngSeed(k)).unwrap();
            r.p_value == 1.0 / 200.0
        })
        .count();
    assert!(hits * 100 >= 95 * runs, "{hits}/{runs}");
}
