mod common;

use ddfv::calculus::project_center;
use ddfv::harness::{
    activation_time, complete_map, convergence_study, error_space, error_space_time, fit_order,
    nodal_values, project_between, read_csv, run_experiment, write_csv, write_vtk_elements,
    write_vtk_overlay, ActivationTracker, ExperimentConfig, SimplicialOverlay, Table,
};
use ddfv::mesh::structured;
use ddfv::DdfvError;

fn affine(p: [f64; 3]) -> f64 {
    0.5 - 0.7 * p[0] + 1.3 * p[1] + 0.25 * p[2]
}

#[test]
fn activation_of_a_travelling_ramp() {
    // v(x, t) = 2(t − x) crosses 0.9 at t = x + 0.45
    let xs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
    let times: Vec<f64> = (0..=200).map(|n| n as f64 * 0.01).collect();
    let frames: Vec<Vec<f64>> = times
        .iter()
        .map(|t| xs.iter().map(|x| 2.0 * (t - x)).collect())
        .collect();
    let map = activation_time(&times, &frames, 0.9).unwrap();
    for (x, t) in xs.iter().zip(&map) {
        assert!((t.unwrap() - (x + 0.45)).abs() < 1e-12);
    }
    assert!(complete_map(&map).is_ok());
}

#[test]
fn activation_reports_missing_nodes_and_recession() {
    let map = activation_time(&[0.0, 1.0], &[vec![0.0, 0.0], vec![1.0, 0.2]], 0.5).unwrap();
    assert_eq!(map[1], None);
    assert!(matches!(
        complete_map(&map),
        Err(DdfvError::UndefinedMetric(_))
    ));

    let mut t = ActivationTracker::new(0.5);
    t.push(0.0, &[1.0, 0.0]).unwrap();
    t.push(1.0, &[1.0, 1.0]).unwrap();
    assert!(t.monotone());
    assert_eq!(t.active_fraction(), 1.0);
    t.push(2.0, &[0.2, 1.0]).unwrap();
    assert!(!t.monotone());

    // a recession before the monitored window is ignored
    let mut late = ActivationTracker::new(0.5).monitor_from(1.5);
    late.push(0.0, &[1.0]).unwrap();
    late.push(1.0, &[0.0]).unwrap();
    late.push(2.0, &[1.0]).unwrap();
    assert!(late.monotone());
    assert!(late.push(3.0, &[1.0, 1.0]).is_err());
}

#[test]
fn overlay_interpolation_reproduces_affine_functions() {
    for (dim, coarse, fine) in [(2, 3, 7), (3, 2, 3)] {
        let cm = structured(dim, coarse).unwrap();
        let fm = structured(dim, fine).unwrap();
        let u = project_center(&cm, &affine);
        let fine_values = project_between(&cm, &u, &fm).unwrap();
        let overlay = SimplicialOverlay::new(&fm);
        for (p, v) in overlay.nodes.iter().zip(&fine_values) {
            assert!((v - affine(*p)).abs() < 1e-12);
        }
    }
}

#[test]
fn overlay_mass_matrix_integrates_polynomials() {
    for (dim, n) in [(2, 4), (3, 2)] {
        let m = structured(dim, n).unwrap();
        let overlay = SimplicialOverlay::new(&m);
        assert_eq!(overlay.n_nodes(), m.n_nodes());
        let total: f64 = overlay.volumes.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        let mass = overlay.mass_matrix();
        let one = vec![1.0; overlay.n_nodes()];
        let x: Vec<f64> = overlay.nodes.iter().map(|p| p[0]).collect();
        assert!((mass.bilinear(&one, &one) - 1.0).abs() < 1e-13);
        assert!((mass.bilinear(&one, &x) - 0.5).abs() < 1e-13);
        // ∫ x² over the unit cube is 1/3, exact for the quadratic product of P1 fields
        assert!((mass.bilinear(&x, &x) - 1.0 / 3.0).abs() < 1e-13);
    }
}

#[test]
fn relative_errors() {
    let m = structured(2, 5).unwrap();
    let overlay = SimplicialOverlay::new(&m);
    let mass = overlay.mass_matrix();
    let u = nodal_values(&m, &project_center(&m, &affine), None);
    let twice: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
    assert!((error_space(&mass, &u, &twice).unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(error_space(&mass, &u, &u).unwrap(), 0.0);
    let zero = vec![0.0; u.len()];
    assert!(matches!(
        error_space(&mass, &zero, &u),
        Err(DdfvError::UndefinedMetric(_))
    ));
    let q = error_space_time(&mass, &[u.clone(), u.clone()], &[twice.clone(), u.clone()]).unwrap();
    assert!((q - 0.5f64.sqrt()).abs() < 1e-14);
    assert!(error_space(&mass, &u, &u[1..]).is_err());
}

#[test]
fn fitted_order_of_a_power_law() {
    let h = [0.1, 0.05, 0.025];
    let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
    assert!((fit_order(&h, &e) - 2.0).abs() < 1e-12);
}

#[test]
fn csv_and_vtk_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = Table::new(&["a", "b"]);
    t.push(vec![1.0, 2.5e-7]).unwrap();
    t.push(vec![-3.0, 0.125]).unwrap();
    assert!(t.push(vec![1.0]).is_err());
    let csv = dir.path().join("t.csv");
    write_csv(&t, &csv).unwrap();
    let back = read_csv(&csv).unwrap();
    assert_eq!(back.headers, t.headers);
    assert_eq!(back.rows, t.rows);
    assert_eq!(back.column("b").unwrap(), vec![2.5e-7, 0.125]);

    let m = structured(2, 2).unwrap();
    let overlay = SimplicialOverlay::new(&m);
    let field: Vec<Option<f64>> = (0..overlay.n_nodes())
        .map(|i| (i % 2 == 0).then_some(i as f64))
        .collect();
    let vtk = dir.path().join("a.vtk");
    write_vtk_overlay(&overlay, &[("activation", field)], &vtk).unwrap();
    let text = std::fs::read_to_string(&vtk).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0"));
    assert!(text.contains(&format!("POINTS {} double", overlay.n_nodes())));
    assert!(text.contains(&format!(
        "CELLS {} {}",
        overlay.simplices.len(),
        4 * overlay.simplices.len()
    )));
    assert!(text.contains("SCALARS activation double 1"));
    assert!(write_vtk_overlay(&overlay, &[("bad", vec![None])], &vtk).is_err());

    let el = dir.path().join("e.vtk");
    write_vtk_elements(
        &m,
        &[("id", (0..m.elements.len()).map(|i| i as f64).collect())],
        &el,
    )
    .unwrap();
    assert!(std::fs::read_to_string(&el)
        .unwrap()
        .contains(&format!("CELL_DATA {}", m.elements.len())));
}

fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.level = 6;
    c.dt0 = 0.02;
    c.t_final = 0.4;
    c.stimulus.start = 0.1;
    c.stimulus.end = 0.2;
    c.stimulus.radius = 0.25;
    c.snapshots = vec![0.2, 0.3];
    c
}

#[test]
fn single_run_produces_snapshots_and_log() {
    let c = small_config();
    let mesh = c.mesh().unwrap();
    let out = run_experiment(&c, &mesh, c.dt0, true).unwrap();
    assert_eq!(out.nodes, mesh.n_nodes());
    assert_eq!(out.snapshots.len(), 2);
    assert_eq!(out.frames.len(), 41);
    assert_eq!(out.log.rows.len(), 41);
    assert_eq!(out.activation.len(), mesh.n_nodes());
    // the stimulated center activates
    assert!(out.activation.iter().any(|t| t.is_some()));
}

#[test]
fn small_convergence_study() {
    let c = small_config();
    let report = convergence_study(&c, 3).unwrap();
    assert_eq!(report.levels.len(), 2);
    assert_eq!(report.reference_level, 24);
    assert!(report.levels[1].e_q2 < report.levels[0].e_q2);
    let table = report.to_table();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.headers.len(), 6 + 2 * 2);
    assert!(convergence_study(&c, 2).is_err());
}
