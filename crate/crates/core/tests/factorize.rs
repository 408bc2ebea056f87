use num_complex::Complex64;
use polydisc::factor2::{
    factorize_symmetric, initial_factor, ode_factorize_point, reconstruction_residual,
    star_relation_residual, symmetric_basis_coefficients, FactorizationConfig,
};
use polydisc::funcrep::{
    build_grid, DomainDescriptor, GridLayout, MatrixFunctionExpr, MatrixPoly,
};
use polydisc::instances::gen_symmetric_unitary_instance;
use polydisc::numc::CMatrix;
use polydisc::Error;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn scalar_poly(terms: &[(u32, Complex64)]) -> MatrixFunctionExpr {
    MatrixFunctionExpr::Poly(MatrixPoly::new(
        1,
        1,
        1,
        terms
            .iter()
            .map(|&(e, k)| (vec![e], CMatrix::from_vec(1, 1, vec![k])))
            .collect(),
    ))
}

/// `(1 + i·k·z)/(1 − i·k·z)`.
fn cayley(k: f64) -> MatrixFunctionExpr {
    MatrixFunctionExpr::Product(vec![
        scalar_poly(&[(0, c(1.0, 0.0)), (1, c(0.0, k))]),
        MatrixFunctionExpr::inverse(scalar_poly(&[(0, c(1.0, 0.0)), (1, c(0.0, -k))])),
    ])
}

fn disc(radial: usize, angular: usize) -> polydisc::funcrep::ConjClosedGrid {
    build_grid(DomainDescriptor::polydisc(1), GridLayout::nested(radial, angular)).unwrap()
}

#[test]
fn scalar_cayley_matches_principal_square_root() {
    let u = cayley(0.5);
    let g = disc(9, 16);
    let (v, report) = factorize_symmetric(&u, &g, &FactorizationConfig::default()).unwrap();
    for (z, val) in g.points().iter().zip(&v.values) {
        let w = u.evaluate(z).unwrap()[(0, 0)];
        let oracle = (0.5 * w.ln()).exp();
        assert!((val[(0, 0)] - oracle).norm() < 1e-7, "at {z:?}");
    }
    assert!(report.reconstruction_residual < 1e-6);
    assert!(report.holomorphy_diag.is_some());
}

#[test]
fn generator_instance_reconstructs() {
    let (u, v_true) = gen_symmetric_unitary_instance(1, 3, 2, 0.3, 4).unwrap();
    let g = disc(9, 16);
    assert!(star_relation_residual(&u, &g).unwrap() < 1e-12);
    let truth = polydisc::funcrep::GridMatrixFunction::new(
        g.clone(),
        polydisc::funcrep::sample(&v_true, &g).unwrap(),
    )
    .unwrap();
    assert!(reconstruction_residual(&u, &truth).unwrap() < 1e-12);

    let (v, report) = factorize_symmetric(&u, &g, &FactorizationConfig::default()).unwrap();
    assert!(report.reconstruction_residual < 1e-6, "{}", report.reconstruction_residual);
    assert!(report.min_singular_value > 0.0);

    let origin = g.origin().unwrap();
    let v0 = initial_factor(&u.evaluate(&[c(0.0, 0.0)]).unwrap(), &Default::default()).unwrap();
    assert!(v.values[origin].dist(&v0) < 1e-10);

    let coeffs = symmetric_basis_coefficients(&v, &u).unwrap();
    for (i, j) in g.conj_index().iter().enumerate() {
        assert_eq!(coeffs.b.values[i], coeffs.a.values[j.unwrap()].conj());
    }
    assert!(coeffs.consistency < 1e-6, "{}", coeffs.consistency);
}

#[test]
fn doubling_steps_does_not_increase_residual() {
    let (u, _) = gen_symmetric_unitary_instance(1, 3, 2, 0.3, 8).unwrap();
    let g = disc(5, 8);
    let r = |steps| {
        factorize_symmetric(&u, &g, &FactorizationConfig::with_steps(steps))
            .unwrap()
            .1
            .reconstruction_residual
    };
    let (coarse, fine) = (r(50), r(100));
    assert!(fine <= coarse, "{fine} > {coarse}");
}

#[test]
fn star_relation_holds_along_the_homotopy() {
    let (u, _) = gen_symmetric_unitary_instance(2, 2, 2, 0.3, 2).unwrap();
    let g = build_grid(DomainDescriptor::polydisc(2), GridLayout::nested(3, 4)).unwrap();
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let ut = MatrixFunctionExpr::scale_arg(u.clone(), t);
        assert!(star_relation_residual(&ut, &g).unwrap() < 1e-12);
    }
}

#[test]
fn pointwise_and_grid_runs_agree() {
    let (u, _) = gen_symmetric_unitary_instance(1, 2, 1, 0.2, 6).unwrap();
    let g = disc(3, 4);
    let cfg = FactorizationConfig::default();
    let (v, _) = factorize_symmetric(&u, &g, &cfg).unwrap();
    for (z, val) in g.points().iter().zip(&v.values) {
        assert_eq!(ode_factorize_point(&u, z, &cfg).unwrap(), *val);
    }
}

#[test]
fn non_unitary_input_is_rejected() {
    let u = MatrixFunctionExpr::Const(CMatrix::identity(2).scale_real(2.0));
    let err = factorize_symmetric(&u, &disc(3, 4), &Default::default()).unwrap_err();
    assert!(matches!(err, Error::StarRelationViolated { .. }), "{err}");
}

#[test]
fn pole_on_the_path_is_reported() {
    // (1 + 2iz)/(1 − 2iz) has a pole at z = −i/2, half way to the grid point −i
    let u = MatrixFunctionExpr::Product(vec![
        scalar_poly(&[(0, c(1.0, 0.0)), (1, c(0.0, 2.0))]),
        MatrixFunctionExpr::inverse(scalar_poly(&[(0, c(1.0, 0.0)), (1, c(0.0, -2.0))])),
    ]);
    let err = factorize_symmetric(&u, &disc(2, 4), &Default::default()).unwrap_err();
    assert!(
        matches!(err.root(), Error::SingularAlongPath { t } if *t == 0.5),
        "{err}"
    );
}
