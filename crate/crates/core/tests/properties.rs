use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_coexist::capacity::{achievable_rate, mimo_capacity_svd, rate_known_csi, rate_unknown_csi};
use ris_coexist::channel::{cascade, los_channel};
use ris_coexist::geometry::{array_factor_pattern, steering_vector};
use ris_coexist::ris::{effective_gain, optimize_phases, random_phase_tuning};
use ris_coexist::{
    ArrayGeometry, ChannelMatrix64, Complex, CsiKind, Direction, LinkBudget, MimoCsi, TuningMatrix,
    Vec3,
};

type C = Complex<f64>;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C::new(a, b)),
        len,
    )
}

fn instance(max_n: usize) -> impl Strategy<Value = (Vec<C>, Vec<C>)> {
    (1..=max_n).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))
}

fn row(v: &[C]) -> ChannelMatrix64 {
    ChannelMatrix64::row_vector(v.to_vec()).unwrap()
}

fn col(v: &[C]) -> ChannelMatrix64 {
    ChannelMatrix64::column_vector(v.to_vec()).unwrap()
}

fn to_na(m: &ChannelMatrix64) -> DMatrix<C> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ChannelMatrix64 {
    ChannelMatrix64::from_fn(rows, cols, |_, _| {
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .unwrap()
}

fn log_det_capacity(h: &ChannelMatrix64, snr: f64) -> f64 {
    let hn = to_na(h);
    let n_min = h.rows().min(h.cols()) as f64;
    let m = DMatrix::<C>::identity(h.rows(), h.rows())
        + (&hn * hn.adjoint()) * C::new(snr / n_min, 0.0);
    m.determinant().re.log2()
}

proptest! {
    #[test]
    fn steering_norm_is_element_count(
        nx in 1usize..9, ny in 1usize..9, az in -3.1f64..3.1, el in -1.5f64..1.5,
    ) {
        let arr = ArrayGeometry::upa(nx, ny, Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let a = steering_vector(&arr, Direction::new(az, el).unwrap(), 0.01).unwrap();
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - (nx * ny) as f64).abs() < 1e-12);
        prop_assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mirrored_direction_conjugates_ula(n in 1usize..17, az in -1.5f64..1.5) {
        let arr = ArrayGeometry::ula(n, Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let a = steering_vector(&arr, Direction::azimuth(az).unwrap(), 0.01).unwrap();
        let b = steering_vector(&arr, Direction::azimuth(-az).unwrap(), 0.01).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn cascade_is_linear_in_theta(
        (h, g) in instance(16), alpha in 0.0f64..1.0, seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = random_phase_tuning::<f64, _>(h.len(), &mut rng).unwrap();
        let scaled = theta.attenuated(alpha).unwrap();
        let base = cascade(&row(&h), &theta, &col(&g), None).unwrap()[(0, 0)];
        let got = cascade(&row(&h), &scaled, &col(&g), None).unwrap()[(0, 0)];
        prop_assert!((got - base * alpha).norm() <= 1e-12 * (1.0 + base.norm()));
    }

    #[test]
    fn cascade_matches_scalar_loop((h, g) in instance(16), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = random_phase_tuning::<f64, _>(h.len(), &mut rng).unwrap();
        let got = cascade(&row(&h), &theta, &col(&g), None).unwrap()[(0, 0)];
        let mut want = C::new(0.0, 0.0);
        for i in 0..h.len() {
            want += h[i] * C::from_polar(1.0, theta.phases()[i]) * g[i];
        }
        prop_assert!((got - want).norm() <= 1e-10 * want.norm().max(1e-12));
    }

    #[test]
    fn cophasing_beats_random_states((h, g) in instance(12), seed in any::<u64>()) {
        let opt = optimize_phases(&row(&h), &col(&g), None).unwrap();
        prop_assert!(opt.amplitudes().iter().all(|&a| a == 1.0));
        let best = effective_gain(&h, &opt, &g).norm();
        let bound: f64 = h.iter().zip(&g).map(|(a, b)| a.norm() * b.norm()).sum();
        prop_assert!((best - bound).abs() <= 1e-12 * bound.max(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let theta = random_phase_tuning::<f64, _>(h.len(), &mut rng).unwrap();
            prop_assert!(effective_gain(&h, &theta, &g).norm() <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn more_bits_never_hurt((h, g) in instance(10)) {
        let mut prev = 0.0;
        for bits in 1..=4u8 {
            let theta = optimize_phases(&row(&h), &col(&g), Some(bits)).unwrap();
            let val = effective_gain(&h, &theta, &g).norm();
            prop_assert!(val >= prev * (1.0 - 1e-12), "bits {bits}: {val} < {prev}");
            prev = val;
        }
        let cont = optimize_phases(&row(&h), &col(&g), None).unwrap();
        prop_assert!(effective_gain(&h, &cont, &g).norm() >= prev * (1.0 - 1e-12));
    }

    #[test]
    fn positive_scaling_keeps_phases((h, g) in instance(12), s in 0.01f64..100.0) {
        let a = optimize_phases(&row(&h), &col(&g), None).unwrap();
        let hs: Vec<C> = h.iter().map(|z| z * s).collect();
        let b = optimize_phases(&row(&hs), &col(&g), None).unwrap();
        for (x, y) in a.phases().iter().zip(b.phases()) {
            let d = (x - y).rem_euclid(std::f64::consts::TAU);
            prop_assert!(d.min(std::f64::consts::TAU - d) < 1e-9);
        }
    }

    #[test]
    fn known_csi_dominates_unknown(h in (1usize..6).prop_flat_map(complex_vec), p in 0.01f64..100.0) {
        let b = LinkBudget::new(p, 1.0).unwrap();
        let m = row(&h);
        let known = rate_known_csi(&m, &b).unwrap();
        let unknown = rate_unknown_csi(&m, &b).unwrap();
        prop_assert!(known >= unknown && unknown >= 0.0);
        if h.len() > 1 && m.frobenius_norm_sqr() > 0.0 {
            prop_assert!(known > unknown);
        }
    }

    #[test]
    fn three_db_identity(h in complex_vec(2), p in 0.001f64..1000.0) {
        let m = row(&h);
        let full = LinkBudget::new(p, 3.16e-11).unwrap();
        let half = LinkBudget::new(p / 2.0, 3.16e-11).unwrap();
        let lhs = rate_unknown_csi(&m, &full).unwrap();
        let rhs = rate_known_csi(&m, &half).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn rates_grow_with_power(h in complex_vec(3), p in 0.01f64..10.0, k in 1.0f64..10.0) {
        let m = row(&h);
        let lo = LinkBudget::new(p, 1.0).unwrap();
        let hi = LinkBudget::new(p * k, 1.0).unwrap();
        prop_assert!(rate_known_csi(&m, &hi).unwrap() >= rate_known_csi(&m, &lo).unwrap());
        prop_assert!(rate_unknown_csi(&m, &hi).unwrap() >= rate_unknown_csi(&m, &lo).unwrap());
        if m.frobenius_norm_sqr() > 0.0 {
            prop_assert!(mimo_capacity_svd(&m, &hi, MimoCsi::Known).unwrap()
                >= mimo_capacity_svd(&m, &lo, MimoCsi::Known).unwrap());
        }
    }

    #[test]
    fn svd_capacity_is_unitarily_invariant(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_matrix(rows, cols, &mut rng);
        let q = |n: usize, rng: &mut ChaCha8Rng| {
            let x = to_na(&random_matrix(n, n, rng));
            x.qr().q()
        };
        let (u, v) = (q(rows, &mut rng), q(cols, &mut rng));
        let rotated = &u * to_na(&h) * v.adjoint();
        let hr = ChannelMatrix64::from_fn(rows, cols, |r, c| rotated[(r, c)]).unwrap();
        let b = LinkBudget::new(5.0, 1.0).unwrap();
        let a = mimo_capacity_svd(&h, &b, MimoCsi::Known).unwrap();
        let r = mimo_capacity_svd(&hr, &b, MimoCsi::Known).unwrap();
        prop_assert!((a - r).abs() <= 1e-9 * a.max(1.0));
    }
}

#[test]
fn svd_capacity_matches_log_det() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let h = random_matrix(3, 3, &mut rng);
        let snr = rng.random_range(0.1..100.0);
        let b = LinkBudget::new(snr, 1.0).unwrap();
        let svd = mimo_capacity_svd(&h, &b, MimoCsi::Known).unwrap();
        let oracle = log_det_capacity(&h, snr);
        assert!(
            (svd - oracle).abs() < 1e-9 * oracle.max(1.0),
            "{svd} vs {oracle}"
        );
    }
}

/// The unknown-CSI MIMO form is a single scalar log and is not expected to
/// equal the identity-precoder log-det; the gap is printed, not asserted.
#[test]
fn unknown_csi_mimo_gap_report() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let h = random_matrix(3, 3, &mut rng);
        let b = LinkBudget::new(10.0, 1.0).unwrap();
        let printed = mimo_capacity_svd(&h, &b, MimoCsi::Unknown).unwrap();
        let hn = to_na(&h);
        let m = DMatrix::<C>::identity(3, 3) + (&hn * hn.adjoint()) * C::new(10.0 / 3.0, 0.0);
        let log_det = m.determinant().re.log2();
        worst = worst.max((printed - log_det).abs());
    }
    println!("unknown-CSI MIMO form vs identity-precoder log-det: max |gap| = {worst:.4} bit/s/Hz");
    assert!(worst.is_finite());
}

#[test]
fn random_phases_average_out() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta = random_phase_tuning::<f64, _>(1000, &mut rng).unwrap();
    let mean = theta.coefficients().iter().sum::<C>() / 1000.0;
    assert!(mean.norm() < 0.1, "{}", mean.norm());
}

#[test]
fn matched_pattern_peaks_at_its_direction() {
    let arr = ArrayGeometry::ula(16, Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let grid: Vec<Direction<f64>> = (-89..=89)
        .map(|d| Direction::azimuth((d as f64).to_radians()).unwrap())
        .collect();
    for target_deg in [-60, -25, 0, 13, 47] {
        let dir = Direction::azimuth((target_deg as f64).to_radians()).unwrap();
        let w = steering_vector(&arr, dir, 0.01).unwrap();
        let gains = array_factor_pattern(&arr, &w, &grid, 0.01).unwrap();
        let (idx, peak) =
            gains.iter().enumerate().fold(
                (0, 0.0),
                |best, (i, &g)| if g > best.1 { (i, g) } else { best },
            );
        assert_eq!(idx as i32 - 89, target_deg);
        assert!((peak - 256.0).abs() < 1e-9);
    }
}

#[test]
fn los_cascade_has_rank_one() {
    let lambda = 0.0107;
    let nb = ArrayGeometry::upa(4, 2, Vec3::new(0.0, 0.0, 25.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let ris =
        ArrayGeometry::upa(4, 4, Vec3::new(50.0, 0.0, 10.0), Vec3::new(-1.0, 0.0, 0.0)).unwrap();
    let ue = ArrayGeometry::ula(3, Vec3::new(20.0, 10.0, 1.5), Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let g = los_channel(&nb, &ris, lambda).unwrap();
    let h = los_channel(&ris, &ue, lambda).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let theta: TuningMatrix<f64> = random_phase_tuning(16, &mut rng).unwrap();
    let total = cascade(&h, &theta, &g, None).unwrap();
    let scale = total.frobenius_norm_sqr();
    for r in 0..total.rows() - 1 {
        for c in 0..total.cols() - 1 {
            let minor =
                total[(r, c)] * total[(r + 1, c + 1)] - total[(r, c + 1)] * total[(r + 1, c)];
            assert!(minor.norm() <= 1e-9 * scale);
        }
    }
}

#[test]
fn stale_snapshot_never_beats_known_csi() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b = LinkBudget::new(1.0, 0.1).unwrap();
    for _ in 0..500 {
        let h = random_matrix(1, 4, &mut rng);
        let s = random_matrix(1, 4, &mut rng);
        let known = achievable_rate(&h, &b, CsiKind::Known).unwrap();
        let stale = achievable_rate(&h, &b, CsiKind::Stale(&s)).unwrap();
        assert!(known >= stale * (1.0 - 1e-12));
    }
}

#[test]
fn single_precision_pipeline() {
    let lambda = 0.0107f32;
    let tx =
        ArrayGeometry::<f32>::ula(4, Vec3::new(0.0, 0.0, 25.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
    let rx = ArrayGeometry::<f32>::point(Vec3::new(30.0, 5.0, 1.5)).unwrap();
    let h = los_channel(&tx, &rx, lambda).unwrap();
    let b = LinkBudget::new(1.0f32, 3.16e-11).unwrap();
    let r = rate_known_csi(&h, &b).unwrap();
    assert!(r.is_finite() && r > 0.0);
}
