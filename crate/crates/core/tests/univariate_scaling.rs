use std::time::Instant;

use estat_core::bench::fit_slope;
use estat_core::generate_gaussian;
use estat_core::univariate::dcov_univariate_fast;
use estat_core::RngSeed;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn fast_dcov_grows_near_linearly() {
    let mut points = Vec::new();
    for e in 12..=18u32 {
        let n = 1usize << e;
        let x = generate_gaussian(n, 1, RngSeed(e as u64)).unwrap();
        let y = generate_gaussian(n, 1, RngSeed(100 + e as u64)).unwrap();
        let (x, y) = (x.column(0), y.column(0));
        dcov_univariate_fast(x, y).unwrap();
        let times = (0..5)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(dcov_univariate_fast(x, y).unwrap());
                t.elapsed().as_secs_f64()
            })
            .collect();
        points.push((n, median(times)));
    }
    let fit = fit_slope(&points).unwrap();
    assert!(fit.slope <= 1.3, "slope {} from {points:?}", fit.slope);
}
