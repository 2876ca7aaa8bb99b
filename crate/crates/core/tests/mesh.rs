mod common;

use ddfv::mesh::{mesh_to_string, parse_mesh, regularity_report, structured, Dof};
use ddfv::DdfvError;

#[test]
fn structured_counts() {
    for n in 1..4 {
        let m = structured(2, n).unwrap();
        assert_eq!(m.n_cells(), 2 * n * n);
        assert_eq!(m.n_vertices(), (n + 1) * (n + 1));
        assert_eq!(m.n_neumann_faces(), 4 * n);
        let m3 = structured(3, n).unwrap();
        assert_eq!(m3.n_cells(), 6 * n * n * n);
        assert_eq!(m3.n_vertices(), (n + 1).pow(3));
        assert_eq!(m3.n_neumann_faces(), 12 * n * n);
    }
}

#[test]
fn volumes_partition_the_domain() {
    for (dim, n) in [(2, 3), (3, 2)] {
        let m = structured(dim, n).unwrap();
        let cells: f64 = m.primal[..m.n_cells()].iter().map(|p| p.volume).sum();
        let duals: f64 = m.dual.iter().map(|d| d.volume).sum();
        let diamonds: f64 = m.diamonds.iter().map(|d| d.volume).sum();
        let elements: f64 = m.elements.iter().map(|e| e.simplex.volume).sum();
        for total in [cells, duals, diamonds, elements] {
            assert!((total - 1.0).abs() < 1e-12, "{total}");
        }
    }
}

#[test]
fn node_counts_of_the_experiment_ladder() {
    // cells + vertices
    assert_eq!(structured(2, 13).unwrap().n_nodes(), 338 + 196);
    assert_eq!(structured(3, 7).unwrap().n_nodes(), 6 * 343 + 512);
}

#[test]
fn mixed_boundary_has_dirichlet_data() {
    let m = common::mixed(2, 3);
    assert!(m.has_dirichlet());
    // the x = 0 side: 3 faces and 4 vertices
    assert_eq!(m.dirichlet_primal.len(), 3);
    assert_eq!(m.dirichlet_dual.len(), 4);
    for v in &m.dirichlet_dual {
        assert_eq!(m.vertices[*v][0], 0.0);
        assert!(matches!(m.dual_dof(*v), Dof::DirichletDual(_)));
    }
}

#[test]
fn file_round_trip_preserves_the_mesh() {
    let m = common::mixed(3, 2);
    let text = mesh_to_string(&m);
    let back = parse_mesh(&text).unwrap();
    assert_eq!(back.vertices, m.vertices);
    assert_eq!(back.cells, m.cells);
    assert_eq!(back.n_unknowns(), m.n_unknowns());
    assert_eq!(mesh_to_string(&back), text);
}

#[test]
fn malformed_files_are_rejected() {
    assert!(matches!(
        parse_mesh("ddfv-mesh 2 3 1"),
        Err(DdfvError::Parse { .. })
    ));
    // a cell referencing a missing vertex
    let bad = "ddfv-mesh 2 3 1 3\n0 0\n1 0\n0 1\n0 1 7\n0 1 N\n1 2 N\n2 0 N\n";
    assert!(parse_mesh(bad).is_err());
    // a flat triangle
    let flat = "ddfv-mesh 2 3 1 3\n0 0\n1 0\n2 0\n0 1 2\n0 1 N\n1 2 N\n2 0 N\n";
    assert!(parse_mesh(flat).is_err());
}

#[test]
fn regularity_is_stable_under_refinement() {
    for dim in [2, 3] {
        let levels: Vec<usize> = if dim == 2 {
            vec![4, 8, 16]
        } else {
            vec![2, 4, 8]
        };
        let reports: Vec<_> = levels
            .iter()
            .map(|&n| regularity_report(&structured(dim, n).unwrap()))
            .collect();
        for w in reports.windows(2) {
            let ratio = w[0].mesh_size / w[1].mesh_size;
            assert!((ratio - 2.0).abs() < 0.1, "mesh size ratio {ratio}");
            assert!((w[0].reg_distance - w[1].reg_distance).abs() < 1e-9 * w[0].reg_distance);
            assert!(
                (w[0].reg_inclination - w[1].reg_inclination).abs() < 1e-9 * w[0].reg_inclination
            );
            assert_eq!(w[0].max_neighbors, w[1].max_neighbors);
        }
    }
}

#[test]
fn elements_are_located() {
    let m = structured(2, 5).unwrap();
    for (i, el) in m.elements.iter().enumerate().step_by(7) {
        let c = ddfv::geometry::barycenter(el.simplex.vertices());
        assert_eq!(m.locate_element(c), Some(i));
    }
    assert_eq!(m.locate_element([2.0, 0.5, 0.0]), None);
}
