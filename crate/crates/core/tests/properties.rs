use nalgebra::SymmetricEigen;
use polyntk::kernels::{mlp_ntk, mlp_ntk_compact, pnn_ntk};
use polyntk::regression::{assemble_gram, fit};
use polyntk::{ArchSpec, Dataset, Family, KernelModel, NetParams};
use proptest::prelude::*;

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

fn unit(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    vector(dim).prop_map(|v| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    })
}

fn family() -> impl Strategy<Value = (Family, usize)> {
    prop_oneof![
        (2usize..7).prop_map(|n| (Family::Pnn, n)),
        (2usize..6).prop_map(|n| (Family::Mlp, n)),
        (2usize..5).prop_map(|n| (Family::Mfn, n)),
    ]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn kernels_are_symmetric((f, n) in family(), x in vector(3), xp in vector(3)) {
        let k = KernelModel::new(f, n, 3).unwrap();
        let a = k.eval(&x, &xp).unwrap();
        let b = k.eval(&xp, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(k.eval(&x, &x).unwrap() >= 0.0);
    }

    #[test]
    fn pnn_is_homogeneous_of_degree_n(n in 2usize..7, x in vector(4), xp in vector(4), c in 0.1..5.0f64) {
        let base = pnn_ntk(n, &x, &xp).unwrap();
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let cxp: Vec<f64> = xp.iter().map(|v| c * v).collect();
        prop_assert!(rel_close(pnn_ntk(n, &cx, &xp).unwrap(), c.powi(n as i32) * base, 1e-10));
        prop_assert!(rel_close(pnn_ntk(n, &x, &cxp).unwrap(), c.powi(n as i32) * base, 1e-10));
    }

    #[test]
    fn mlp_is_homogeneous_of_degree_one(depth in 2usize..6, x in vector(4), xp in vector(4), c in 0.1..5.0f64) {
        let base = mlp_ntk(depth, &x, &xp).unwrap();
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        prop_assert!(rel_close(mlp_ntk(depth, &cx, &xp).unwrap(), c * base, 1e-10));
    }

    #[test]
    fn mlp_forms_agree(depth in 2usize..6, x in unit(5), xp in unit(5)) {
        let a = mlp_ntk(depth, &x, &xp).unwrap();
        let b = mlp_ntk_compact(depth, &x, &xp).unwrap();
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn grams_are_psd((f, n) in family(), pts in prop::collection::vec(unit(3), 2..12)) {
        let k = KernelModel::new(f, n, 3).unwrap();
        let g = match assemble_gram(&k, &pts) {
            Ok(g) => g,
            Err(polyntk::Error::Precondition(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let trace = g.entries.trace();
        let min = SymmetricEigen::new(g.entries.clone()).eigenvalues.min();
        prop_assert!(min >= -1e-8 * trace, "lambda_min {min}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regression_is_linear_in_labels(
        pts in prop::collection::vec(unit(3), 6),
        y1 in prop::collection::vec(-1.0..1.0f64, 6),
        y2 in prop::collection::vec(-1.0..1.0f64, 6),
        a in -3.0..3.0f64,
        probe in vector(3),
    ) {
        let k = KernelModel::pnn(2, 3).unwrap();
        let fit_with = |y: Vec<f64>| fit(&k, &Dataset::new(pts.clone(), y).unwrap(), 0.0);
        let (m1, m2) = match (fit_with(y1.clone()), fit_with(y2.clone())) {
            (Ok(m1), Ok(m2)) => (m1, m2),
            _ => return Ok(()),
        };
        let mixed: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| u + a * v).collect();
        let m = fit_with(mixed).unwrap();
        let want = m1.predict(&probe).unwrap() + a * m2.predict(&probe).unwrap();
        let got = m.predict(&probe).unwrap();
        prop_assert!((got - want).abs() <= 1e-6 * (1.0 + want.abs()), "{got} vs {want}");
    }

    #[test]
    fn regression_interpolates(pts in prop::collection::vec(unit(3), 5), y in prop::collection::vec(-1.0..1.0f64, 5)) {
        let k = KernelModel::mlp(3, 3).unwrap();
        let Ok(m) = fit(&k, &Dataset::new(pts.clone(), y.clone()).unwrap(), 0.0) else { return Ok(()) };
        if m.jitter > 0.0 {
            return Ok(());
        }
        for (x, t) in pts.iter().zip(&y) {
            prop_assert!((m.predict(x).unwrap() - t).abs() <= 1e-6);
        }
    }

    #[test]
    fn pnn_network_is_homogeneous(n in 2usize..5, seed in any::<u64>(), x in vector(3), c in 0.2..3.0f64) {
        let p = NetParams::init(&ArchSpec { family: Family::Pnn, degree: n, width: 16, input_dim: 3, seed }).unwrap();
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let base = p.forward(&x).unwrap();
        prop_assert!((p.forward(&cx).unwrap() - c.powi(n as i32) * base).abs() <= 1e-10 * (1.0 + c.powi(n as i32) * base.abs()));
    }

    #[test]
    fn flatten_round_trips((f, n) in family(), seed in any::<u64>()) {
        let f = if f == Family::Mfn { Family::Pnn } else { f };
        let p = NetParams::init(&ArchSpec { family: f, degree: n, width: 8, input_dim: 3, seed }).unwrap();
        let theta = p.flatten();
        prop_assert_eq!(theta.len(), p.len());
        prop_assert_eq!(p.unflatten(&theta).unwrap(), p);
    }
}
