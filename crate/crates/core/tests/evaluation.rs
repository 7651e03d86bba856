use arinpaint_core::{sdr, sdr_all_gaps, sdr_per_gap, Gap, GapMask, Signal};
use proptest::prelude::*;

fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-1.0f64..1.0, n), prop::collection::vec(-1.0f64..1.0, n))
        .prop_filter("reference must carry energy", |(y, _)| y.iter().any(|v| v.abs() > 1e-3))
}

proptest! {
    #[test]
    fn sdr_is_scale_invariant((y, x) in pair(50), c in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]) {
        let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
        let xs: Vec<f64> = x.iter().map(|v| c * v).collect();
        let a = sdr(&y, &x).unwrap();
        let b = sdr(&ys, &xs).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn sdr_decreases_with_distortion((y, d) in pair(40), t in 0.01f64..10.0, u in 0.01f64..10.0) {
        prop_assume!(d.iter().any(|v| *v != 0.0) && (t - u).abs() > 1e-6);
        let (lo, hi) = if t < u { (t, u) } else { (u, t) };
        let near: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + lo * b).collect();
        let far: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + hi * b).collect();
        prop_assert!(sdr(&y, &near).unwrap() > sdr(&y, &far).unwrap());
    }

    #[test]
    fn gap_sdr_ignores_reliable_samples(
        (y, x) in pair(120),
        noise in prop::collection::vec(-5.0f64..5.0, 120),
    ) {
        let mask = GapMask::new(vec![Gap::new(10, 15), Gap::new(60, 30)], 120).unwrap();
        prop_assume!(mask.gaps().iter().all(|g| y[g.range()].iter().any(|v| *v != 0.0)));
        let perturb = |v: &[f64]| -> Signal {
            let s: Vec<f64> = v.iter().zip(&noise).enumerate()
                .map(|(i, (a, b))| if mask.is_missing(i) { *a } else { a + b })
                .collect();
            Signal::new(s, 100).unwrap()
        };
        let (ry, rx) = (Signal::new(y.clone(), 100).unwrap(), Signal::new(x.clone(), 100).unwrap());
        let (py, px) = (perturb(&y), perturb(&x));
        prop_assert_eq!(sdr_per_gap(&ry, &rx, &mask).unwrap(), sdr_per_gap(&py, &px, &mask).unwrap());
        prop_assert_eq!(sdr_all_gaps(&ry, &rx, &mask).unwrap(), sdr_all_gaps(&py, &px, &mask).unwrap());
    }
}

#[test]
fn concatenated_sdr_matches_hand_formula() {
    let y = Signal::new(vec![0.0, 1.0, 2.0, 0.0, 3.0, -1.0, 0.0], 100).unwrap();
    let x = Signal::new(vec![0.0, 1.5, 2.0, 0.0, 2.0, -1.0, 0.0], 100).unwrap();
    let mask = GapMask::new(vec![Gap::new(1, 2), Gap::new(4, 2)], 7).unwrap();
    let (e1, d1): (f64, f64) = (1.0 + 4.0, 0.25);
    let (e2, d2): (f64, f64) = (9.0 + 1.0, 1.0);
    let expect = 10.0 * ((e1 + e2) / (d1 + d2)).log10();
    assert!((sdr_all_gaps(&y, &x, &mask).unwrap() - expect).abs() < 1e-12);
    let per = sdr_per_gap(&y, &x, &mask).unwrap();
    assert!((per[0] - 10.0 * (e1 / d1).log10()).abs() < 1e-12);
    assert!((per[1] - 10.0 * (e2 / d2).log10()).abs() < 1e-12);
}
