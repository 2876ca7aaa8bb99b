mod common;

use ddfv::calculus::{
    gradient, gradient0, inner_fields, inner_gamma_n, inner_omega, DirichletData, DiscreteField,
    DiscreteFunction, NeumannData,
};
use ddfv::mesh::structured;
use ddfv::solver::{
    assemble_coupled, assemble_mass, assemble_stiffness, dirichlet_load, neumann_load,
    nullspace_basis, solve_coupled, solve_spd, ConductivityTensors, CoupledPreconditioner,
    CoupledSolver, CsrMatrix, SpdPreconditioner, TensorField,
};
use rand::Rng;

fn anisotropic() -> TensorField {
    TensorField::Uniform([[2.0, 0.3, 0.1], [0.3, 0.7, 0.0], [0.1, 0.0, 1.1]])
}

/// `{{M ∇F, ∇G}}` computed from the discrete gradient.
fn energy(mesh: &ddfv::Mesh, t: &TensorField, a: &DiscreteField, b: &DiscreteField) -> f64 {
    let ma = DiscreteField {
        values: (0..a.values.len())
            .map(|d| t.apply(d, a.values[d]))
            .collect(),
    };
    inner_fields(mesh, &ma, b).unwrap()
}

#[test]
fn stiffness_matches_gradient_energy() {
    let mut rng = common::rng(5);
    for mesh in [structured(2, 3).unwrap(), common::mixed(3, 2)] {
        let t = anisotropic();
        let s = assemble_stiffness(&mesh, &t).unwrap();
        assert!(s.is_symmetric());
        for _ in 0..5 {
            let u = DiscreteFunction::random(&mesh, &mut rng, -1.0, 1.0);
            let w = DiscreteFunction::random(&mesh, &mut rng, -1.0, 1.0);
            let expected = energy(
                &mesh,
                &t,
                &gradient0(&mesh, &u).unwrap(),
                &gradient0(&mesh, &w).unwrap(),
            );
            let got = s.bilinear(&u.to_flat(), &w.to_flat());
            assert!((got - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }
}

#[test]
fn loads_match_boundary_pairings() {
    let mut rng = common::rng(6);
    let mesh = common::mixed(2, 4);
    let t = anisotropic();
    let mut g = DirichletData::zeros(&mesh);
    g.primal
        .iter_mut()
        .chain(g.dual.iter_mut())
        .for_each(|x| *x = rng.gen_range(-1.0..1.0));
    let s = NeumannData::random(&mesh, &mut rng);
    let w = DiscreteFunction::random(&mesh, &mut rng, -1.0, 1.0);
    let phi = DiscreteFunction::random(&mesh, &mut rng, -1.0, 1.0);
    // {{M ∇_g w, ∇₀ φ}} = φᵀ(Σ w + b)
    let lhs = energy(
        &mesh,
        &t,
        &gradient(&mesh, &w, &g).unwrap(),
        &gradient0(&mesh, &phi).unwrap(),
    );
    let sigma = assemble_stiffness(&mesh, &t).unwrap();
    let b = dirichlet_load(&mesh, &t, &g).unwrap();
    let sw = sigma.mul_vec(&w.to_flat());
    let rhs: f64 = phi
        .to_flat()
        .iter()
        .enumerate()
        .map(|(j, p)| p * (sw[j] + b[j]))
        .sum();
    assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    let n = neumann_load(&mesh, &s).unwrap();
    let pairing = inner_gamma_n(&mesh, &s, &phi).unwrap();
    let dot: f64 = n.iter().zip(phi.to_flat()).map(|(a, b)| a * b).sum();
    assert!((pairing - dot).abs() < 1e-13);
}

#[test]
fn mass_matrix_gives_the_inner_product() {
    let mut rng = common::rng(7);
    let mesh = structured(3, 2).unwrap();
    let a = DiscreteFunction::random(&mesh, &mut rng, -1.0, 1.0);
    let b = DiscreteFunction::random(&mesh, &mut rng, -1.0, 1.0);
    let m = assemble_mass(&mesh);
    assert!(
        (m.bilinear(&a.to_flat(), &b.to_flat()) - inner_omega(&mesh, &a, &b).unwrap()).abs()
            < 1e-14
    );
}

#[test]
fn conjugate_gradient_solves_dirichlet_problem() {
    let mesh = common::mixed(2, 6);
    let sigma = assemble_stiffness(&mesh, &anisotropic()).unwrap();
    let m = assemble_mass(&mesh);
    let a = CsrMatrix::linear_combination(1.0, &sigma, 0.0, &m);
    let mut rng = common::rng(8);
    let b: Vec<f64> = (0..a.nrows).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dense = common::dense_solve(a.to_dense(), b.clone());
    for p in [
        SpdPreconditioner::None,
        SpdPreconditioner::Jacobi,
        SpdPreconditioner::Ilu0,
    ] {
        let (x, info) = solve_spd(&a, &b, 1e-12, p, &[]).unwrap();
        assert!(info.residual <= 1e-12);
        assert!(
            common::max_diff(&x, &dense)
                < 1e-8 * (1.0 + dense.iter().fold(0.0f64, |a, b| a.max(b.abs())))
        );
    }
}

#[test]
fn singular_neumann_problem_is_solved_orthogonally_to_the_kernel() {
    let mesh = structured(2, 5).unwrap();
    let sigma = assemble_stiffness(&mesh, &anisotropic()).unwrap();
    let kernel = nullspace_basis(&mesh);
    assert_eq!(kernel.len(), 2);
    let mut rng = common::rng(9);
    let normalized: Vec<Vec<f64>> = kernel
        .iter()
        .map(|z| {
            let n = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            z.iter().map(|x| x / n).collect()
        })
        .collect();
    let mut b: Vec<f64> = (0..sigma.nrows).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ddfv::solver::deflate(&mut b, &normalized);
    let (x, _) = solve_spd(&sigma, &b, 1e-11, SpdPreconditioner::Jacobi, &normalized).unwrap();
    let r: Vec<f64> = sigma
        .mul_vec(&x)
        .iter()
        .zip(&b)
        .map(|(a, b)| a - b)
        .collect();
    assert!(r.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-9);
    for z in &kernel {
        assert!(z.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-9);
    }
}

#[test]
fn coupled_solvers_agree_with_a_dense_solve() {
    let mesh = common::mixed(2, 4);
    let tensors = ConductivityTensors::fibres((1.0, 1.0 / 9.0), (1.0, 0.5)).unwrap();
    let op = assemble_coupled(&mesh, &tensors, 0.02, 0.01).unwrap();
    let mut rng = common::rng(10);
    let b: Vec<f64> = (0..2 * op.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dense = common::dense_solve(op.matrix.to_dense(), b.clone());
    let scale = dense.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    // the exact factorization is checked tightly; the incomplete ones at a looser tolerance
    for (kind, tol, accept) in [
        (CoupledPreconditioner::Factorized, 1e-12, 1e-8),
        (CoupledPreconditioner::Ilu0, 1e-9, 1e-5),
    ] {
        let solver = CoupledSolver::new(op.clone(), kind, tol).unwrap();
        let (x, _) = solver.solve(&b, None).unwrap();
        assert!(common::max_diff(&x, &dense) < accept * scale, "{kind:?}");
    }
    assert!(common::max_diff(&solve_coupled(&op, &b, 1e-12).unwrap(), &dense) < 1e-8 * scale);
}

#[test]
fn coupled_blocks_are_consistent() {
    let mesh = structured(3, 2).unwrap();
    let tensors = ConductivityTensors::fibres((1.0, 0.2), (1.0, 0.5)).unwrap();
    let op = assemble_coupled(&mesh, &tensors, 0.02, 0.005).unwrap();
    let mut rng = common::rng(12);
    let x: Vec<f64> = (0..2 * op.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert!(common::max_diff(&op.matrix.mul_vec(&x), &op.apply_blockwise(&x)) < 1e-12);
    // the kernel: constants in the u_e block
    for z in &op.nullspace {
        assert!(op.matrix.mul_vec(z).iter().all(|v| v.abs() < 1e-12));
    }
    assert!(matches!(
        assemble_coupled(&mesh, &tensors, 0.02, 0.0),
        Err(ddfv::DdfvError::Config(_))
    ));
}

#[test]
fn matrix_market_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mtx");
    let mesh = structured(2, 2).unwrap();
    let s = assemble_stiffness(&mesh, &TensorField::diagonal([1.0; 3])).unwrap();
    s.write_matrix_market(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
    let header: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(header, vec![s.nrows, s.ncols, s.nnz()]);
    let mut dense = vec![vec![0.0; s.ncols]; s.nrows];
    for l in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        dense[f[0].parse::<usize>().unwrap() - 1][f[1].parse::<usize>().unwrap() - 1] =
            f[2].parse().unwrap();
    }
    assert_eq!(dense, s.to_dense());
}

#[test]
fn invalid_tensors_are_rejected() {
    let mesh = structured(2, 2).unwrap();
    let bad = ConductivityTensors {
        intra: TensorField::Uniform([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]),
        extra: TensorField::diagonal([1.0; 3]),
    };
    assert!(bad.validate(2, mesh.diamonds.len(), 10.0).is_err());
    let wrong_len = ConductivityTensors {
        intra: TensorField::PerDiamond(vec![
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            3
        ]),
        extra: TensorField::diagonal([1.0; 3]),
    };
    assert!(matches!(
        wrong_len.validate(2, mesh.diamonds.len(), 10.0),
        Err(ddfv::DdfvError::Mismatch(_))
    ));
}
