//! Single runs of the propagation experiment and convergence studies against
//! a reference solution on the finest mesh.

use crate::calculus::DiscreteFunction;
use crate::error::{DdfvError, Result};
use crate::mesh::{regularity_report, structured, Mesh};
use crate::schemes::{run_with, FrameSink, RunSummary, Stepper};
use crate::solver::CsrMatrix;

use super::activation::{complete_map, ActivationTracker};
use super::config::ExperimentConfig;
use super::output::Table;
use super::overlay::{error_space, nodal_values, NodalField, SimplicialOverlay, SpaceTimeError};

fn frame_index(t: f64, record_dt: f64) -> usize {
    (t / record_dt).round() as usize
}

/// Sink recording everything a single run reports.
struct RunSink<'a> {
    tracker: ActivationTracker,
    snapshot_frames: Vec<usize>,
    snapshots: Vec<(f64, NodalField, NodalField)>,
    keep_frames: bool,
    frames: Vec<NodalField>,
    log: Table,
    mesh: &'a Mesh,
}

impl<'a> RunSink<'a> {
    fn new(mesh: &'a Mesh, config: &ExperimentConfig, keep_frames: bool) -> Self {
        Self {
            tracker: ActivationTracker::new(config.threshold).monitor_from(config.monitor_start()),
            snapshot_frames: config
                .snapshots
                .iter()
                .map(|&t| frame_index(t, config.record_dt))
                .collect(),
            snapshots: Vec::new(),
            keep_frames,
            frames: Vec::new(),
            log: Table::new(&["time", "active_fraction", "v_min", "v_max"]),
            mesh,
        }
    }
}

impl FrameSink for RunSink<'_> {
    fn frame(
        &mut self,
        index: usize,
        time: f64,
        v: &DiscreteFunction,
        ue: &DiscreteFunction,
    ) -> Result<()> {
        let mesh = self.mesh;
        let nv = nodal_values(mesh, v, None);
        self.tracker.push(time, &nv)?;
        let (lo, hi) = nv
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        self.log
            .push(vec![time, self.tracker.active_fraction(), lo, hi])?;
        if self.snapshot_frames.contains(&index) {
            self.snapshots
                .push((time, nv.clone(), nodal_values(mesh, ue, None)));
        }
        if self.keep_frames {
            self.frames.push(nv);
        }
        Ok(())
    }
}

/// Results of one run of the experiment.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub nodes: usize,
    pub dt: f64,
    /// Activation time at every overlay node.
    pub activation: Vec<Option<f64>>,
    /// Whether the region `{v ≥ s}` grew monotonically.
    pub monotone: bool,
    /// `(time, v, u_e)` at the snapshot times, as nodal fields.
    pub snapshots: Vec<(f64, NodalField, NodalField)>,
    /// All recorded frames of `v` (only when requested).
    pub frames: Vec<NodalField>,
    /// Per frame: time, fraction of activated nodes, min and max of `v`.
    pub log: Table,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn fully_activated(&self) -> bool {
        self.activation.iter().all(Option::is_some)
    }
}

/// Run the experiment on `mesh` with time step `dt` from the resting state.
pub fn run_experiment(
    config: &ExperimentConfig,
    mesh: &Mesh,
    dt: f64,
    keep_frames: bool,
) -> Result<RunOutput> {
    config.validate()?;
    let stepper = Stepper::new(mesh, config.scheme_config(mesh, dt)?)?;
    let mut sink = RunSink::new(mesh, config, keep_frames);
    let v0 = DiscreteFunction::zeros(mesh);
    let summary = run_with(&stepper, &v0, config.t_final, config.record_dt, &mut sink)?;
    Ok(RunOutput {
        nodes: mesh.n_nodes(),
        dt,
        monotone: sink.tracker.monotone(),
        activation: sink.tracker.into_times(),
        snapshots: sink.snapshots,
        frames: sink.frames,
        log: sink.log,
        summary,
    })
}

/// One coarse level of a convergence study.
#[derive(Debug, Clone)]
pub struct LevelResult {
    /// Subdivisions per axis.
    pub level: usize,
    pub nodes: usize,
    pub mesh_size: f64,
    pub dt: f64,
    /// Relative `L²` error of the activation map (`None` when either map is incomplete).
    pub e_activation: Option<f64>,
    /// Relative `L²` errors of `v` at the snapshot times.
    pub e_v: Vec<f64>,
    /// Relative `L²` errors of `u_e` at the snapshot times.
    pub e_ue: Vec<f64>,
    /// Relative `L²(Q)` error of `v`.
    pub e_q2: f64,
    pub monotone: bool,
    pub fully_activated: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub snapshots: Vec<f64>,
    pub levels: Vec<LevelResult>,
    pub reference_level: usize,
    pub reference_nodes: usize,
    pub reference_monotone: bool,
    pub reference_fully_activated: bool,
    /// Least-squares slopes of `log e` against `log h`.
    pub order_activation: Option<f64>,
    pub order_q2: f64,
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

impl ConvergenceReport {
    pub fn to_table(&self) -> Table {
        let mut headers: Vec<String> =
            ["level", "nodes", "mesh_size", "dt", "e_activation", "e_q2"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        for t in &self.snapshots {
            headers.push(format!("e_v_t{t}"));
        }
        for t in &self.snapshots {
            headers.push(format!("e_ue_t{t}"));
        }
        let mut table = Table {
            headers,
            rows: Vec::new(),
        };
        for l in &self.levels {
            let mut row = vec![
                l.level as f64,
                l.nodes as f64,
                l.mesh_size,
                l.dt,
                l.e_activation.unwrap_or(f64::NAN),
                l.e_q2,
            ];
            row.extend(&l.e_v);
            row.extend(&l.e_ue);
            table.rows.push(row);
        }
        table
    }
}

/// Coarse-level data kept until the reference run.
struct CoarseData {
    level: usize,
    nodes: usize,
    mesh_size: f64,
    dt: f64,
    interp: CsrMatrix,
    run: RunOutput,
}

struct ReferenceSink<'a> {
    mesh: &'a Mesh,
    mass: &'a CsrMatrix,
    coarse: &'a [CoarseData],
    snapshot_frames: Vec<usize>,
    tracker: ActivationTracker,
    q2: Vec<SpaceTimeError>,
    e_v: Vec<Vec<f64>>,
    e_ue: Vec<Vec<f64>>,
}

impl FrameSink for ReferenceSink<'_> {
    fn frame(
        &mut self,
        index: usize,
        time: f64,
        v: &DiscreteFunction,
        ue: &DiscreteFunction,
    ) -> Result<()> {
        let nv = nodal_values(self.mesh, v, None);
        self.tracker.push(time, &nv)?;
        let snap = self.snapshot_frames.iter().position(|&f| f == index);
        let nue = snap.map(|_| nodal_values(self.mesh, ue, None));
        for (j, c) in self.coarse.iter().enumerate() {
            let cv = c.interp.mul_vec(&c.run.frames[index]);
            self.q2[j].add(self.mass, &nv, &cv)?;
            if let (Some(s), Some(nue)) = (snap, &nue) {
                let (_, _, cue) = &c.run.snapshots[s];
                self.e_v[j].push(error_space(self.mass, &nv, &cv)?);
                self.e_ue[j].push(error_space(self.mass, nue, &c.interp.mul_vec(cue))?);
            }
        }
        Ok(())
    }
}

/// Run the experiment on `n_levels` structured meshes with `level·2^k`
/// subdivisions (`k = 0..n_levels`) and time steps `dt0/2^k`; the finest
/// level is the reference. Coarse levels run concurrently; the reference
/// solution is compared frame by frame as it is computed.
pub fn convergence_study(config: &ExperimentConfig, n_levels: usize) -> Result<ConvergenceReport> {
    config.validate()?;
    if n_levels < 3 {
        return Err(DdfvError::Config(
            "a convergence study needs at least 3 levels".into(),
        ));
    }
    if config.mesh_file.is_some() {
        return Err(DdfvError::Config(
            "convergence studies use structured meshes".into(),
        ));
    }
    if config.snapshots.iter().any(|&t| {
        let k = frame_index(t, config.record_dt);
        (k as f64 * config.record_dt - t).abs() > 1e-9
    }) {
        return Err(DdfvError::Config(
            "snapshot times must be multiples of record_dt".into(),
        ));
    }
    let ref_k = n_levels - 1;
    let ref_n = config.level << ref_k;
    let ref_mesh = structured(config.dim, ref_n)?;
    let ref_overlay = SimplicialOverlay::new(&ref_mesh);
    let mass = ref_overlay.mass_matrix();

    let coarse: Vec<CoarseData> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..ref_k)
            .map(|k| {
                let ref_nodes = &ref_overlay.nodes;
                scope.spawn(move || -> Result<CoarseData> {
                    let n = config.level << k;
                    let mesh = structured(config.dim, n)?;
                    let dt = config.dt_for(k);
                    let run = run_experiment(config, &mesh, dt, true)?;
                    let interp = SimplicialOverlay::new(&mesh).interpolation_matrix(ref_nodes)?;
                    Ok(CoarseData {
                        level: n,
                        nodes: mesh.n_nodes(),
                        mesh_size: regularity_report(&mesh).mesh_size,
                        dt,
                        interp,
                        run,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut sink = ReferenceSink {
        mesh: &ref_mesh,
        mass: &mass,
        coarse: &coarse,
        snapshot_frames: config
            .snapshots
            .iter()
            .map(|&t| frame_index(t, config.record_dt))
            .collect(),
        tracker: ActivationTracker::new(config.threshold).monitor_from(config.monitor_start()),
        q2: vec![SpaceTimeError::default(); coarse.len()],
        e_v: vec![Vec::new(); coarse.len()],
        e_ue: vec![Vec::new(); coarse.len()],
    };
    let stepper = Stepper::new(
        &ref_mesh,
        config.scheme_config(&ref_mesh, config.dt_for(ref_k))?,
    )?;
    run_with(
        &stepper,
        &DiscreteFunction::zeros(&ref_mesh),
        config.t_final,
        config.record_dt,
        &mut sink,
    )?;
    let ref_monotone = sink.tracker.monotone();
    let ref_map = sink.tracker.times().to_vec();
    let ref_complete = complete_map(&ref_map).ok();

    let mut levels = Vec::with_capacity(coarse.len());
    for (j, c) in coarse.iter().enumerate() {
        let e_activation = match (&ref_complete, complete_map(&c.run.activation)) {
            (Some(r), Ok(a)) => Some(error_space(&mass, r, &c.interp.mul_vec(&a))?),
            _ => None,
        };
        levels.push(LevelResult {
            level: c.level,
            nodes: c.nodes,
            mesh_size: c.mesh_size,
            dt: c.dt,
            e_activation,
            e_v: sink.e_v[j].clone(),
            e_ue: sink.e_ue[j].clone(),
            e_q2: sink.q2[j].value()?,
            monotone: c.run.monotone,
            fully_activated: c.run.fully_activated(),
        });
    }
    let h: Vec<f64> = levels.iter().map(|l| l.mesh_size).collect();
    let order_q2 = fit_order(&h, &levels.iter().map(|l| l.e_q2).collect::<Vec<_>>());
    let order_activation = levels
        .iter()
        .map(|l| l.e_activation)
        .collect::<Option<Vec<f64>>>()
        .map(|e| fit_order(&h, &e));
    Ok(ConvergenceReport {
        snapshots: config.snapshots.clone(),
        levels,
        reference_level: ref_n,
        reference_nodes: ref_mesh.n_nodes(),
        reference_monotone: ref_monotone,
        reference_fully_activated: ref_complete.is_some(),
        order_activation,
        order_q2,
    })
}
