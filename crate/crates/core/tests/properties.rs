use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use polydisc::funcrep::{
    build_grid, dn_norm, star_involution, DomainDescriptor, GridLayout, MatrixFunctionExpr,
    MatrixPoly,
};
use polydisc::instances::{gen_idempotent_instance, gen_symmetric_unitary_instance};
use polydisc::kato::{kato_transport, TransportConfig};
use polydisc::numc::{auto_branch_for, idempotent_split, mat_expm, mat_logm, BranchAngle, CMatrix};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix(n: usize, scale: f64) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        CMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| c(scale * a, scale * b)).collect())
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..TAU), n)
        .prop_map(|v| v.into_iter().map(|(r, t)| Complex64::from_polar(r, t)).collect())
}

/// `(1/2πi)∮ log(ζ)(ζI − a)⁻¹ dζ` on the circle `|ζ − 1| = radius`, trapezoid rule.
fn contour_log(a: &CMatrix, radius: f64, nodes: usize) -> CMatrix {
    let n = a.rows();
    let mut acc = CMatrix::zeros(n, n);
    for k in 0..nodes {
        let e = Complex64::from_polar(1.0, TAU * k as f64 / nodes as f64);
        let zeta = c(1.0, 0.0) + e * radius;
        let resolvent = (&CMatrix::identity(n).scale(zeta) - a).inverse().unwrap();
        // dζ = i·radius·e dφ, and the 1/(2πi) cancels the i
        let w = zeta.ln() * e * radius / nodes as f64;
        acc = &acc + &resolvent.scale(w);
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_agrees_with_contour_integral(x in matrix(3, 0.15)) {
        let a = &CMatrix::identity(3) + &x;
        let log = mat_logm(&a, BranchAngle::PRINCIPAL).unwrap();
        prop_assert!(log.dist(&contour_log(&a, 0.8, 256)) < 1e-10);
    }

    #[test]
    fn exp_of_log_round_trips(x in matrix(4, 1.0)) {
        let a = &CMatrix::identity(4).scale_real(2.5) + &x;
        let theta = auto_branch_for(&a).unwrap();
        let back = mat_expm(&mat_logm(&a, theta).unwrap()).unwrap();
        prop_assert!(back.dist(&a) < 1e-10 * a.norm_fro());
    }

    #[test]
    fn log_of_small_exp_is_identity_map(x in matrix(3, 0.5)) {
        let back = mat_logm(&mat_expm(&x).unwrap(), BranchAngle::PRINCIPAL).unwrap();
        prop_assert!(back.dist(&x) < 1e-11);
    }

    #[test]
    fn split_of_exact_idempotent(t in matrix(4, 0.2), rank in 0usize..=4) {
        let t = &CMatrix::identity(4) + &t;
        let p = &(&t * &CMatrix::projector_block(4, rank)) * &t.inverse().unwrap();
        let s = idempotent_split(&p, 1e-8).unwrap();
        prop_assert_eq!(s.rank, rank);
        let r = s.frame.similarity(&p).unwrap().dist(&CMatrix::projector_block(4, rank));
        prop_assert!(r < 1e-10);
    }

    #[test]
    fn star_is_an_involution(seed in any::<u64>(), z in point(2)) {
        let (_, v) = gen_symmetric_unitary_instance(2, 2, 2, 0.4, seed).unwrap();
        let f = MatrixFunctionExpr::Product(vec![v.clone(), MatrixFunctionExpr::inverse(v)]);
        let twice = star_involution(&star_involution(&f));
        prop_assert_eq!(twice.evaluate(&z).unwrap(), f.evaluate(&z).unwrap());
        let zbar: Vec<Complex64> = z.iter().map(|x| x.conj()).collect();
        prop_assert_eq!(
            star_involution(&f).evaluate(&z).unwrap(),
            f.evaluate(&zbar).unwrap().conj()
        );
    }

    #[test]
    fn scale_arg_is_exact(seed in any::<u64>(), z in point(2), t in 0.0f64..1.0) {
        let p = gen_idempotent_instance(2, 3, 1, 2, 0.3, seed).unwrap();
        let scaled: Vec<Complex64> = z.iter().map(|x| x * t).collect();
        prop_assert_eq!(
            MatrixFunctionExpr::scale_arg(p.clone(), t).evaluate(&z).unwrap(),
            p.evaluate(&scaled).unwrap()
        );
    }

    #[test]
    fn dn_norm_grows_with_order(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6)) {
        let alphas = polydisc::funcrep::multi_indices(2, 2);
        let terms = alphas
            .into_iter()
            .zip(coeffs)
            .map(|(a, (re, im))| (a, CMatrix::from_vec(1, 1, vec![c(re, im)])))
            .collect();
        let f = MatrixPoly::new(1, 1, 2, terms);
        let g = build_grid(DomainDescriptor::polydisc(2), GridLayout::nested(3, 4)).unwrap();
        let norms: Vec<f64> = (0..4).map(|k| dn_norm(&f, k, &g).unwrap()).collect();
        prop_assert!(norms.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn grids_are_conjugation_closed(radial in 1usize..6, half_angular in 1usize..6, n in 1usize..3, k_off in 0usize..3) {
        let k = n.saturating_sub(k_off);
        let layout = GridLayout::nested(radial, 2 * half_angular);
        let g = build_grid(DomainDescriptor::new(n, k, false).unwrap(), layout).unwrap();
        g.check_invariants().unwrap();
        prop_assert!(g.conj_index().iter().all(Option::is_some));
        if k > 0 {
            let h = build_grid(DomainDescriptor::new(n, k, true).unwrap(), layout).unwrap();
            h.check_invariants().unwrap();
            prop_assert!(h.points().iter().all(|p| g.find(p).is_some()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transport_conjugates_projector(seed in any::<u64>(), z in point(1)) {
        let p = gen_idempotent_instance(1, 3, 1, 2, 0.3, seed).unwrap();
        let f = kato_transport(&p, &z, &TransportConfig::default()).unwrap();
        let p0 = p.evaluate(&[c(0.0, 0.0)]).unwrap();
        let moved = &(&f * &p0) * &f.inverse().unwrap();
        prop_assert!(moved.dist(&p.evaluate(&z).unwrap()) < 1e-6);
        let f2 = kato_transport(&p, &z, &TransportConfig::default()).unwrap();
        prop_assert_eq!(f, f2);
    }
}
