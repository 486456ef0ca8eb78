//! Randomised invariants of the tensor, bath and influence layers.

use ndarray::{Array1, Array2, Array3, Array4};
use num_complex::Complex64;
use proptest::prelude::*;
use tempo_core::bath::{angular_average, correlation, eta, eta_window, BathConfig, SpectralDensity};
use tempo_core::influence::{
    free_propagator, hermitian_deviation, influence_exponential, liouville_basis, SystemSpec,
};
use tempo_core::tensor::{svd_truncate, MatrixProductOperator, MatrixProductState, Tensor, TruncationPolicy};

const CASES: u32 = 24;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<Complex64>> {
    proptest::collection::vec(complex(), rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn any_matrix() -> impl Strategy<Value = Array2<Complex64>> {
    (1usize..12, 1usize..12).prop_flat_map(|(r, c)| matrix(r, c))
}

fn hermitian(d: usize) -> impl Strategy<Value = Array2<Complex64>> {
    matrix(d, d).prop_map(|a| {
        let ad = a.t().mapv(|z| z.conj());
        (&a + &ad).mapv(|z| z * 0.5)
    })
}

fn density(d: usize) -> impl Strategy<Value = Array2<Complex64>> {
    matrix(d, d).prop_map(|a| {
        let rho = a.dot(&a.t().mapv(|z| z.conj()));
        let tr = rho.diag().sum();
        rho.mapv(|z| z / tr)
    })
}

fn frobenius(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn random_tensor(dims: Vec<usize>) -> impl Strategy<Value = Tensor> {
    let len: usize = dims.iter().product();
    proptest::collection::vec(complex(), len).prop_map(move |v| Tensor::from_vec(&dims, v).unwrap())
}

fn small_tensor() -> impl Strategy<Value = Tensor> {
    proptest::collection::vec(1usize..=4, 2..=5).prop_flat_map(random_tensor)
}

/// Dense oracle for an MPO acting on a dense tensor: contract every MPO bond
/// for each index pair and sum over inputs.
fn dense_apply(mpo: &MatrixProductOperator, t: &Tensor) -> Tensor {
    let outs = mpo.output_dims();
    let ins = mpo.input_dims();
    let n = outs.len();
    let in_count: usize = ins.iter().product();
    Tensor::from_fn(&outs, |o| {
        let mut total = Complex64::new(0.0, 0.0);
        for flat in 0..in_count {
            let mut i = vec![0; n];
            let mut rem = flat;
            for k in (0..n).rev() {
                i[k] = rem % ins[k];
                rem /= ins[k];
            }
            let mut v = Array1::from_elem(1, Complex64::new(1.0, 0.0));
            for (k, w) in mpo.sites().iter().enumerate() {
                v = Array1::from_shape_fn(w.dim().3, |b| (0..v.len()).map(|a| v[a] * w[(a, o[k], i[k], b)]).sum());
            }
            total += v[0] * t.get(&i);
        }
        total
    })
}

fn mps_and_mpo() -> impl Strategy<Value = (MatrixProductState, MatrixProductOperator)> {
    (2usize..=6, 1usize..=3, 1usize..=3)
        .prop_flat_map(|(n, chi, w)| {
            (
                proptest::collection::vec(1usize..=4, n),
                proptest::collection::vec(1usize..=4, n),
                Just(chi),
                Just(w),
            )
        })
        .prop_flat_map(|(ins, outs, chi, w)| {
            let n = ins.len();
            let mps_sites: Vec<_> = (0..n)
                .map(|k| {
                    let l = if k == 0 { 1 } else { chi };
                    let r = if k + 1 == n { 1 } else { chi };
                    let d = ins[k];
                    proptest::collection::vec(complex(), l * d * r)
                        .prop_map(move |v| Array3::from_shape_vec((l, d, r), v).unwrap())
                })
                .collect();
            let mpo_sites: Vec<_> = (0..n)
                .map(|k| {
                    let l = if k == 0 { 1 } else { w };
                    let r = if k + 1 == n { 1 } else { w };
                    let (o, i) = (outs[k], ins[k]);
                    proptest::collection::vec(complex(), l * o * i * r)
                        .prop_map(move |v| Array4::from_shape_vec((l, o, i, r), v).unwrap())
                })
                .collect();
            (mps_sites, mpo_sites)
        })
        .prop_map(|(a, b)| {
            (MatrixProductState::from_sites(a).unwrap(), MatrixProductOperator::from_sites(b).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn svd_error_bounded_by_discarded_weight(m in any_matrix(), cutoff in prop_oneof![Just(0.0), 1e-6f64..0.9]) {
        let r = svd_truncate(m.view(), &TruncationPolicy::new(cutoff)).unwrap();
        let err = frobenius(&(&m - &r.reconstruct()));
        prop_assert!(err <= r.discarded_weight + 1e-12 * (1.0 + frobenius(&m)), "{err} > {}", r.discarded_weight);
        if cutoff == 0.0 {
            prop_assert!(err <= 1e-12 * (1.0 + frobenius(&m)));
        }
    }

    #[test]
    fn mps_round_trip_is_exact_without_truncation(t in small_tensor()) {
        let mps = MatrixProductState::from_tensor(&t, &TruncationPolicy::exact()).unwrap();
        prop_assert!(mps.to_tensor().max_abs_diff(&t) < 1e-12 * (1.0 + t.frobenius_norm()));
    }

    #[test]
    fn mpo_application_matches_dense((mps, mpo) in mps_and_mpo()) {
        let out = mpo.apply(&mps, &TruncationPolicy::exact()).unwrap();
        let dense = dense_apply(&mpo, &mps.to_tensor());
        prop_assert!(out.to_tensor().max_abs_diff(&dense) < 1e-10 * (1.0 + dense.frobenius_norm()));
    }

    #[test]
    fn compression_is_idempotent_in_bond_dims(t in small_tensor(), cutoff in 1e-6f64..0.5) {
        let policy = TruncationPolicy::new(cutoff);
        let once = MatrixProductState::from_tensor(&t, &TruncationPolicy::exact()).unwrap().compress(&policy).unwrap();
        let twice = once.compress(&policy).unwrap();
        prop_assert_eq!(once.bond_dims(), twice.bond_dims());
    }

    #[test]
    fn correlation_is_hermitian_in_time(t in 0.01f64..20.0, temp in prop_oneof![Just(0.0), 0.05f64..5.0], alpha in 0.01f64..2.0, wc in 0.5f64..10.0) {
        let j = SpectralDensity::ohmic(alpha, wc);
        let cfg = BathConfig::at_temperature(temp);
        let plus = correlation(&j, &cfg, t).unwrap();
        let minus = correlation(&j, &cfg, -t).unwrap();
        prop_assert!((minus - plus.conj()).norm() <= 1e-9 * (1.0 + plus.norm()));
    }

    #[test]
    fn eta_depends_only_on_lag(k in 1usize..8, shift in 0usize..20, delta in 0.02f64..0.3, temp in prop_oneof![Just(0.0), 0.1f64..2.0]) {
        let j = SpectralDensity::ohmic(0.3, 5.0);
        let cfg = BathConfig::at_temperature(temp);
        let lag = eta(&j, &cfg, delta, k).unwrap();
        let window = eta_window(&j, &cfg, delta, shift + k + 1, shift + 1).unwrap();
        prop_assert!((lag - window).norm() <= 1e-10 * (1.0 + lag.norm()), "{lag} vs {window}");
    }

    #[test]
    fn zero_time_correlation_grows_with_temperature(t1 in 0.0f64..3.0, dt in 0.01f64..3.0) {
        let j = SpectralDensity::ohmic(0.2, 2.0);
        let cold = correlation(&j, &BathConfig::at_temperature(t1), 0.0).unwrap();
        let hot = correlation(&j, &BathConfig::at_temperature(t1 + dt), 0.0).unwrap();
        prop_assert!(hot.re >= cold.re);
    }

    #[test]
    fn angular_average_complement_is_bounded(x in -1e3f64..1e3, d in 1u32..=3) {
        let f = 1.0 - angular_average(d, x).unwrap();
        prop_assert!((-1e-14..=2.0 + 1e-14).contains(&f));
    }

    #[test]
    fn free_propagation_preserves_trace_and_hermiticity(
        (h, o, rho, delta) in (2usize..=3).prop_flat_map(|d| (hermitian(d), hermitian(d), density(d), 0.01f64..1.0))
    ) {
        let spec = SystemSpec::new(h, o.clone(), rho.clone()).unwrap();
        let basis = liouville_basis(&o).unwrap();
        let prop = free_propagator(&spec, &basis, delta).unwrap();
        for u in [&prop.full, &prop.half] {
            let v = u.dot(&basis.vectorize(&basis.to_eigenbasis(&rho)));
            let out = basis.to_computational(&basis.unvectorize(v.as_slice().unwrap()));
            prop_assert!((out.diag().sum() - 1.0).norm() < 1e-12);
            prop_assert!(hermitian_deviation(&out) < 1e-12);
        }
    }

    #[test]
    fn influence_rows_follow_coupling_spectrum(
        (o, w) in (2usize..=3).prop_flat_map(|d| (hermitian(d), matrix(d, d))),
        re in 0.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let basis = liouville_basis(&o).unwrap();
        let n = basis.liouville_dim();

        // Real η gives real positive entries; O⁻ = 0 rows are all ones.
        let real = influence_exponential(&basis, Complex64::new(re, 0.0));
        let general = influence_exponential(&basis, Complex64::new(re, im));
        for j in 0..n {
            for jp in 0..n {
                prop_assert!(real[(j, jp)].im == 0.0 && real[(j, jp)].re > 0.0);
                if basis.ominus()[j] == 0.0 {
                    prop_assert_eq!(general[(j, jp)], Complex64::new(1.0, 0.0));
                }
            }
        }

        // Only the eigenvalues matter: conjugating O by a unitary changes nothing.
        let (q, _) = {
            use ndarray_linalg::QR;
            w.qr().unwrap()
        };
        let rotated = q.dot(&o).dot(&q.t().mapv(|z| z.conj()));
        let rotated = (&rotated + &rotated.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let other = influence_exponential(&liouville_basis(&rotated).unwrap(), Complex64::new(re, im));
        for (a, b) in general.iter().zip(other.iter()) {
            prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        }
    }
}
