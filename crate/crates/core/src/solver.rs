//! Newton-Raphson load stepping, peak-load search and incremental crack
//! growth.
//!
//! All prescribed boundary values are multiplied by a scalar load factor.
//! Each Newton iteration solves `K̂ Δu = F_ext − F_int`, re-evaluates the
//! face damage states against the last converged history, and severs the
//! support across any face that has started to damage. The shape tables of
//! the two owners are then rebuilt and the state re-evaluated before the
//! convergence check.

use serde::{Deserialize, Serialize};

use crate::assembly::{self, evaluate, sparsity_pattern, Evaluation};
use crate::error::{Error, Result};
use crate::interface::FaceState;
use crate::problem::{BcKind, Component, FaceBc, Problem};
use crate::shapefun::{ShapeTables, SupportGraph};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative displacement-increment tolerance.
    pub tol: f64,
    pub max_iterations: usize,
    /// Increasing load factors. Peak searches advance with the first
    /// increment and stop at the last value.
    pub load_schedule: Vec<f64>,
    /// Smallest load-factor increment for bisection; defaults to 1e-4 times
    /// the first increment.
    pub min_increment: Option<f64>,
    pub crack_events_max: usize,
    /// Crack growth stops once a peak falls below this fraction of the
    /// intact peak.
    pub stop_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iterations: 50,
            load_schedule: (1..=10).map(|i| i as f64 / 10.0).collect(),
            min_increment: None,
            crack_events_max: 50,
            stop_fraction: 0.05,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "solver tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidMaterial("max_iterations must be at least 1".into()));
        }
        let mut prev = 0.0;
        for &v in &self.load_schedule {
            if !(v > prev) || !v.is_finite() {
                return Err(Error::InvalidMaterial(format!(
                    "load schedule must be positive and strictly increasing (at {v})"
                )));
            }
            prev = v;
        }
        if let Some(m) = self.min_increment {
            if !(m > 0.0) {
                return Err(Error::InvalidMaterial(format!(
                    "min_increment must be positive, got {m}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.stop_fraction) {
            return Err(Error::InvalidMaterial(format!(
                "stop_fraction must lie in [0, 1), got {}",
                self.stop_fraction
            )));
        }
        Ok(())
    }

    fn first_increment(&self) -> f64 {
        self.load_schedule.first().copied().unwrap_or(1.0)
    }

    fn last_factor(&self) -> f64 {
        self.load_schedule.last().copied().unwrap_or(1.0)
    }

    pub fn min_increment(&self) -> f64 {
        self.min_increment
            .unwrap_or(1e-4 * self.first_increment())
    }
}

/// Where the load-displacement curve is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadMonitor {
    /// Boundary set whose reaction is the load.
    pub set: String,
    pub component: Component,
    /// Scales reported loads, e.g. 2 for a symmetric half model.
    #[serde(default = "one")]
    pub multiplier: f64,
}

fn one() -> f64 {
    1.0
}

/// Converged solution snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepState {
    pub step: usize,
    pub load_factor: f64,
    pub u: Vec<f64>,
    pub strain: Vec<[f64; 3]>,
    pub stress: Vec<[f64; 3]>,
    pub faces: Vec<FaceState>,
    /// Severed flag per interior face.
    pub severed: Vec<bool>,
    /// Prescribed displacement of the monitored set.
    pub control: f64,
    /// Reported load of the monitored set.
    pub load: f64,
}

/// One converged step of a load path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub load_factor: f64,
    pub control: f64,
    pub load: f64,
    pub iterations: usize,
    /// Work of the prescribed boundary values per unit thickness.
    pub external_work: f64,
    /// Secant energy of the bulk, the interior faces and the weakly imposed
    /// supports per unit thickness.
    pub stored_energy: f64,
    /// Energy dissipated by damage per unit thickness.
    pub dissipated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakResult {
    pub load: f64,
    pub control: f64,
    pub load_factor: f64,
    /// Face with the largest sub-unity damage at the last converged state.
    pub critical_face: Option<usize>,
    pub path: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackEventRecord {
    /// 0 for the intact structure.
    pub event: usize,
    /// Total length of cracked faces before this search.
    pub crack_length: f64,
    pub peak_load: f64,
    pub control_at_peak: f64,
    /// Face cracked after this search, if any.
    pub cracked_face: Option<usize>,
    pub face_midpoint: Option<[f64; 2]>,
    pub face_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackGrowthReport {
    pub events: Vec<CrackEventRecord>,
    /// Load path of every peak search, in event order.
    pub paths: Vec<Vec<StepRecord>>,
    pub stop_reason: String,
}

impl CrackGrowthReport {
    pub fn cracked_faces(&self) -> Vec<usize> {
        self.events.iter().filter_map(|e| e.cracked_face).collect()
    }
}

/// Resumable crack-growth progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub state: StepState,
    pub report: CrackGrowthReport,
    pub intact_peak: f64,
}

pub struct Solver<'a> {
    problem: &'a Problem,
    pub config: SolverConfig,
    monitor: LoadMonitor,
    monitor_faces: Vec<usize>,
    monitor_ref: Option<f64>,
    k: CscMatrix,
    graph: SupportGraph,
    tables: ShapeTables,
    u: Vec<f64>,
    faces: Vec<FaceState>,
    load_factor: f64,
    step: usize,
    last: Evaluation,
    external_work: f64,
    /// Iteration counts of every converged step.
    pub iteration_log: Vec<usize>,
}

/// Iterations without a new smallest increment ratio before Newton gives up.
const STALL_ITERATIONS: usize = 8;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a Problem, config: SolverConfig, monitor: LoadMonitor) -> Result<Self> {
        config.validate()?;
        let part = &problem.partition;
        let monitor_faces = part.boundary_faces_in_set(&monitor.set)?;
        let c = monitor.component;
        let monitor_ref = problem.bcs.iter().find_map(|b| {
            (b.set == monitor.set && b.component == c && b.kind == BcKind::Displacement)
                .then_some(b.value)
        });
        let graph = SupportGraph::new(part);
        let tables = ShapeTables::build(part, &graph);
        let faces: Vec<FaceState> = problem.face_consts.iter().map(FaceState::pristine).collect();
        let u = vec![0.0; part.n_dofs()];
        let last = evaluate(problem, &tables, &u, &faces, 0.0, None);
        Ok(Solver {
            problem,
            config,
            monitor,
            monitor_faces,
            monitor_ref,
            k: sparsity_pattern(part),
            graph,
            tables,
            u,
            faces,
            load_factor: 0.0,
            step: 0,
            last,
            external_work: 0.0,
            iteration_log: Vec::new(),
        })
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn tables(&self) -> &ShapeTables {
        &self.tables
    }

    pub fn graph(&self) -> &SupportGraph {
        &self.graph
    }

    pub fn faces(&self) -> &[FaceState] {
        &self.faces
    }

    pub fn displacement(&self) -> &[f64] {
        &self.u
    }

    pub fn load_factor(&self) -> f64 {
        self.load_factor
    }

    pub fn matrix_dim(&self) -> usize {
        self.k.dim()
    }

    pub fn matrix_nnz(&self) -> usize {
        self.k.nnz()
    }

    pub fn state(&self) -> StepState {
        StepState {
            step: self.step,
            load_factor: self.load_factor,
            u: self.u.clone(),
            strain: self.last.strain.clone(),
            stress: self.last.stress.clone(),
            faces: self.faces.clone(),
            severed: self.graph.severed.clone(),
            control: self.control(),
            load: self.load(),
        }
    }

    /// Replaces the current state, e.g. from a checkpoint.
    pub fn restore(&mut self, s: &StepState) -> Result<()> {
        let part = &self.problem.partition;
        if s.u.len() != part.n_dofs()
            || s.faces.len() != part.interior_faces.len()
            || s.severed.len() != part.interior_faces.len()
        {
            return Err(Error::Format(
                "checkpoint does not match the mesh dimensions".into(),
            ));
        }
        self.graph = SupportGraph::with_severed(part, s.severed.clone());
        self.tables = ShapeTables::build(part, &self.graph);
        self.u = s.u.clone();
        self.faces = s.faces.clone();
        self.load_factor = s.load_factor;
        self.step = s.step;
        self.last = evaluate(self.problem, &self.tables, &self.u, &self.faces, self.load_factor, None);
        Ok(())
    }

    /// Prescribed displacement of the monitored set, or the mean point
    /// displacement of its owners under load control.
    pub fn control(&self) -> f64 {
        match self.monitor_ref {
            Some(v) => self.load_factor * v,
            None => {
                let part = &self.problem.partition;
                let c = self.monitor.component.index();
                let n = self.monitor_faces.len().max(1) as f64;
                self.monitor_faces
                    .iter()
                    .map(|&f| self.u[2 * part.boundary_faces[f].owner + c])
                    .sum::<f64>()
                    / n
            }
        }
    }

    fn reaction_of(&self, u: &[f64], stress: &[[f64; 3]], lf: f64) -> f64 {
        let r = assembly::reaction(self.problem, &self.tables, u, stress, lf, &self.monitor_faces);
        let sign = match self.monitor_ref {
            Some(v) if v < 0.0 => -1.0,
            _ => 1.0,
        };
        sign * r[self.monitor.component.index()] * self.problem.thickness * self.monitor.multiplier
    }

    /// Reported load: monitored reaction, positive along the prescribed
    /// direction, times thickness and multiplier.
    pub fn load(&self) -> f64 {
        self.reaction_of(&self.u, &self.last.stress, self.load_factor)
    }

    /// Work rate of all prescribed displacements per unit load factor.
    fn prescribed_power(&self, u: &[f64], stress: &[[f64; 3]], lf: f64) -> f64 {
        let p = self.problem;
        let mut total = 0.0;
        for (bf, bc) in p.face_bc.iter().enumerate() {
            for c in 0..2 {
                if let FaceBc::Displacement(ub) = bc[c] {
                    if ub != 0.0 {
                        let r = assembly::reaction(p, &self.tables, u, stress, lf, &[bf]);
                        total += r[c] * ub;
                    }
                }
            }
        }
        total
    }

    fn dissipated(&self) -> f64 {
        self.faces
            .iter()
            .zip(&self.problem.partition.interior_faces)
            .map(|(s, f)| s.dissipated() * f.length)
            .sum()
    }

    fn record(&self, iterations: usize) -> StepRecord {
        StepRecord {
            step: self.step,
            load_factor: self.load_factor,
            control: self.control(),
            load: self.load(),
            iterations,
            external_work: self.external_work,
            stored_energy: assembly::bulk_energy(self.problem, &self.last.strain, &self.last.stress)
                + assembly::interface_energy(
                    self.problem,
                    &self.tables,
                    &self.u,
                    &self.last.stress,
                    &self.faces,
                )
                + assembly::boundary_energy(
                    self.problem,
                    &self.tables,
                    &self.u,
                    &self.last.stress,
                    self.load_factor,
                ),
            dissipated: self.dissipated(),
        }
    }

    /// Evaluates at `u`, severing supports across faces that started to
    /// damage until the support graph is stable. Returns whether any
    /// support changed.
    fn evaluate_with_surgery(
        &self,
        graph: &mut SupportGraph,
        tables: &mut ShapeTables,
        u: &[f64],
        lf: f64,
        k: Option<&mut CscMatrix>,
    ) -> (Evaluation, bool) {
        let part = &self.problem.partition;
        let mut changed = false;
        let mut k = k;
        loop {
            let ev = evaluate(self.problem, tables, u, &self.faces, lf, k.as_deref_mut());
            let mut stale = Vec::new();
            for (f, st) in ev.trial.iter().enumerate() {
                if self.problem.damageable[f] && st.is_damaged() && !graph.severed[f] {
                    stale.extend(graph.sever(part, f));
                }
            }
            if stale.is_empty() {
                return (ev, changed);
            }
            changed = true;
            stale.sort_unstable();
            stale.dedup();
            tables.refresh(part, graph, &stale);
        }
    }

    fn critical_face_of(states: &[FaceState], damageable: &[bool]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (f, s) in states.iter().enumerate() {
            if !damageable[f] {
                continue;
            }
            if let Some(d) = s.max_open_damage() {
                if d > 0.0 && best.is_none_or(|(_, b)| d > b) {
                    best = Some((f, d));
                }
            }
        }
        best.map(|(f, _)| f)
    }

    /// Runs Newton-Raphson to equilibrium at load factor `target` and
    /// commits the result. With `fail_on_full_damage`, a quadrature point
    /// reaching full damage is reported as non-convergence. On error the
    /// committed state is left untouched.
    pub fn nr_iterate(&mut self, target: f64, fail_on_full_damage: bool) -> Result<usize> {
        let mut graph = self.graph.clone();
        let mut tables = self.tables.clone();
        let mut k = std::mem::replace(&mut self.k, CscMatrix::from_columns(0, vec![]));
        let result = self.iterate(target, fail_on_full_damage, &mut graph, &mut tables, &mut k);
        self.k = k;
        let (u, ev, iterations) = result?;
        self.commit(target, u, ev, graph, tables)?;
        self.iteration_log.push(iterations);
        Ok(iterations)
    }

    fn iterate(
        &self,
        lf: f64,
        fail_on_full_damage: bool,
        graph: &mut SupportGraph,
        tables: &mut ShapeTables,
        k: &mut CscMatrix,
    ) -> Result<(Vec<f64>, Evaluation, usize)> {
        let mut u = self.u.clone();
        let mut total = vec![0.0; u.len()];
        let mut last_ratio = f64::INFINITY;
        let mut best_ratio = (f64::INFINITY, 0);
        let non_convergence = |iterations: usize, reason: String, trial: &[FaceState]| {
            Error::NonConvergence {
                iterations,
                reason,
                critical_face: Self::critical_face_of(trial, &self.problem.damageable),
            }
        };
        for it in 0..=self.config.max_iterations {
            let (ev, changed) = self.evaluate_with_surgery(graph, tables, &u, lf, Some(&mut *k));
            if fail_on_full_damage {
                let newly = ev
                    .trial
                    .iter()
                    .zip(&self.faces)
                    .position(|(t, c)| t.qp.iter().zip(&c.qp).any(|(a, b)| a.cracked && !b.cracked));
                if let Some(f) = newly {
                    // Without prior damage the face that just failed is critical.
                    return Err(Error::NonConvergence {
                        iterations: it,
                        reason: "interface reached full damage".into(),
                        critical_face: Self::critical_face_of(&self.faces, &self.problem.damageable)
                            .or(Some(f)),
                    });
                }
            }
            let r = ev.residual();
            let rn = norm(&r);
            let scale = norm(&ev.f_ext).max(norm(&ev.f_int));
            if !changed && (rn <= 1e-10 * scale || rn == 0.0 || (it > 0 && last_ratio <= self.config.tol)) {
                return Ok((u, ev, it));
            }
            if it == self.config.max_iterations {
                break;
            }
            let du = k.solve(&r)?;
            for ((ui, ti), d) in u.iter_mut().zip(total.iter_mut()).zip(&du) {
                *ui += d;
                *ti += d;
            }
            let tn = norm(&total);
            last_ratio = if tn > 0.0 { norm(&du) / tn } else { 0.0 };
            if !last_ratio.is_finite() {
                return Err(non_convergence(it + 1, "diverged".into(), &ev.trial));
            }
            if last_ratio < best_ratio.0 {
                best_ratio = (last_ratio, it);
            } else if it >= best_ratio.1 + STALL_ITERATIONS {
                return Err(non_convergence(
                    it + 1,
                    format!("increment ratio stalled at {last_ratio:.3e}"),
                    &ev.trial,
                ));
            }
        }
        let ev = evaluate(self.problem, tables, &u, &self.faces, lf, None);
        Err(non_convergence(
            self.config.max_iterations,
            format!("increment ratio {last_ratio:.3e} above tolerance"),
            &ev.trial,
        ))
    }

    fn commit(
        &mut self,
        lf: f64,
        u: Vec<f64>,
        ev: Evaluation,
        graph: SupportGraph,
        tables: ShapeTables,
    ) -> Result<()> {
        for (f, (new, old)) in ev.trial.iter().zip(&self.faces).enumerate() {
            for (a, b) in new.qp.iter().zip(&old.qp) {
                if a.d < b.d || a.r < b.r || a.dissipated < b.dissipated {
                    return Err(Error::Invariant(format!(
                        "damage history decreased on interior face {f}"
                    )));
                }
            }
        }
        let p_old = self.prescribed_power(&self.u, &self.last.stress, self.load_factor);
        let t_old = assembly::traction_conjugate(self.problem, &self.tables, &self.u);
        self.graph = graph;
        self.tables = tables;
        self.faces = ev.trial.clone();
        let p_new = self.prescribed_power(&u, &ev.stress, lf);
        let t_new = assembly::traction_conjugate(self.problem, &self.tables, &u);
        // trapezoidal rule for both the moving supports and the tractions
        self.external_work += 0.5 * (p_old + p_new) * (lf - self.load_factor)
            + 0.5 * (self.load_factor + lf) * (t_new - t_old);
        self.u = u;
        self.last = ev;
        self.load_factor = lf;
        self.step += 1;
        Ok(())
    }

    /// Returns to the unloaded configuration, keeping the damage history
    /// and the severed supports.
    pub fn unload(&mut self) {
        self.u.iter_mut().for_each(|v| *v = 0.0);
        self.load_factor = 0.0;
        self.external_work = 0.0;
        self.last = evaluate(self.problem, &self.tables, &self.u, &self.faces, 0.0, None);
    }

    /// Steps through the whole load schedule, bisecting a failed increment
    /// down to the minimum increment. `observer` sees every converged step.
    pub fn run_schedule(
        &mut self,
        observer: &mut dyn FnMut(&Solver, &StepRecord),
    ) -> Result<Vec<StepRecord>> {
        let mut path = Vec::new();
        let schedule = self.config.load_schedule.clone();
        let min_inc = self.config.min_increment();
        for &target in &schedule {
            let mut inc = target - self.load_factor;
            while self.load_factor < target {
                let next = (self.load_factor + inc).min(target);
                match self.nr_iterate(next, false) {
                    Ok(it) => {
                        let rec = self.record(it);
                        observer(self, &rec);
                        path.push(rec);
                    }
                    Err(Error::NonConvergence { .. }) if inc / 2.0 >= min_inc => {
                        inc /= 2.0;
                        log::debug!("bisecting load increment to {inc:.3e}");
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(path)
    }

    /// Loads from the current state until the next increment, however
    /// small, would bring a face to full damage. The peak is the largest
    /// load on the converged path.
    pub fn find_peak_load(
        &mut self,
        observer: &mut dyn FnMut(&Solver, &StepRecord),
    ) -> Result<PeakResult> {
        let mut inc = self.config.first_increment();
        let min_inc = self.config.min_increment();
        let max_lf = self.config.last_factor();
        // the starting state anchors the path's energy bookkeeping
        let mut path = vec![self.record(0)];
        let mut best = (self.load(), self.control(), self.load_factor);
        let mut failed_face = None;
        loop {
            if self.load_factor >= max_lf * (1.0 - 1e-12) {
                // force scale of a unit strain over the prescribed travel
                let scale = self.problem.material.young
                    * self.problem.thickness
                    * self.monitor.multiplier
                    * self.control().abs();
                if path.iter().all(|r: &StepRecord| r.load.abs() <= 1e-9 * scale) {
                    return Ok(PeakResult {
                        load: 0.0,
                        control: best.1,
                        load_factor: best.2,
                        critical_face: Self::critical_face_of(&self.faces, &self.problem.damageable),
                        path,
                    });
                }
                return Err(Error::NoPeak(max_lf));
            }
            let next = (self.load_factor + inc).min(max_lf);
            match self.nr_iterate(next, true) {
                Ok(it) => {
                    let rec = self.record(it);
                    observer(self, &rec);
                    if rec.load > best.0 {
                        best = (rec.load, rec.control, rec.load_factor);
                    }
                    path.push(rec);
                }
                Err(Error::NonConvergence { critical_face, .. }) => {
                    failed_face = critical_face.or(failed_face);
                    inc /= 2.0;
                    if inc < min_inc {
                        break;
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Ok(PeakResult {
            load: best.0,
            control: best.1,
            load_factor: best.2,
            critical_face: Self::critical_face_of(&self.faces, &self.problem.damageable)
                .or(failed_face),
            path,
        })
    }

    /// Sets full damage on every quadrature point of `face` and severs its
    /// support. Cracking an already cracked face does nothing.
    pub fn insert_crack(&mut self, face: usize) -> Result<()> {
        let part = &self.problem.partition;
        if face >= part.interior_faces.len() {
            return Err(Error::Invariant(format!("no interior face {face}")));
        }
        self.faces[face].crack(&self.problem.face_consts[face]);
        let stale = self.graph.sever(part, face);
        self.tables.refresh(part, &self.graph, &stale);
        self.last = evaluate(self.problem, &self.tables, &self.u, &self.faces, self.load_factor, None);
        Ok(())
    }

    fn cracked_length(&self) -> f64 {
        self.faces
            .iter()
            .zip(&self.problem.partition.interior_faces)
            .filter(|(s, _)| s.is_cracked())
            .fold(0.0, |acc, (_, f)| acc + f.length)
    }

    /// Repeats peak search and crack insertion from the unloaded state until
    /// the peak drops below the stop fraction of the intact peak, the event
    /// limit is reached, or no face is left to crack. `on_event` receives
    /// a checkpoint after every insertion.
    pub fn crack_growth(
        &mut self,
        resume: Option<Checkpoint>,
        observer: &mut dyn FnMut(&Solver, &StepRecord),
        on_event: &mut dyn FnMut(&Checkpoint) -> Result<()>,
    ) -> Result<CrackGrowthReport> {
        let (mut report, mut intact) = match resume {
            Some(cp) => {
                self.restore(&cp.state)?;
                (cp.report, Some(cp.intact_peak))
            }
            None => (
                CrackGrowthReport {
                    events: Vec::new(),
                    paths: Vec::new(),
                    stop_reason: String::new(),
                },
                None,
            ),
        };
        loop {
            let event = report.events.len();
            self.unload();
            let crack_length = self.cracked_length();
            let peak = self
                .find_peak_load(observer)
                .map_err(|e| Error::CrackEvent {
                    event,
                    source: Box::new(e),
                })?;
            let intact_peak = *intact.get_or_insert(peak.load);
            let part = &self.problem.partition;
            let mut rec = CrackEventRecord {
                event,
                crack_length,
                peak_load: peak.load,
                control_at_peak: peak.control,
                cracked_face: None,
                face_midpoint: None,
                face_length: None,
            };
            report.paths.push(peak.path);
            let stop = if event > 0 && peak.load < self.config.stop_fraction * intact_peak {
                Some(format!(
                    "peak load {:.6e} below {} of intact peak",
                    peak.load, self.config.stop_fraction
                ))
            } else if event >= self.config.crack_events_max {
                Some(format!("reached {} crack events", self.config.crack_events_max))
            } else if peak.critical_face.is_none() {
                Some("no damaged face left to crack".into())
            } else {
                None
            };
            if let Some(reason) = stop {
                report.events.push(rec);
                report.stop_reason = reason;
                return Ok(report);
            }
            let f = peak.critical_face.expect("checked above");
            let face = &part.interior_faces[f];
            rec.cracked_face = Some(f);
            rec.face_midpoint = Some(face.midpoint());
            rec.face_length = Some(face.length);
            report.events.push(rec);
            self.insert_crack(f)?;
            self.unload();
            on_event(&Checkpoint {
                state: self.state(),
                report: report.clone(),
                intact_peak,
            })?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnalysisMode, InterfaceMaterial, Material, Partition};
    use crate::problem::{BoundaryCondition, ProblemOptions};

    fn strip(n: usize) -> Partition {
        // n x 1 column of unit squares stacked vertically
        let mut s = format!("fpmmesh 1\n{} {}\n", 2 * (n + 1), n);
        for j in 0..=n {
            s += &format!("{} 0 {}\n{} 1 {}\n", 2 * j, j, 2 * j + 1, j);
        }
        for j in 0..n {
            s += &format!("{} 4 {} {} {} {}\n", j, 2 * j, 2 * j + 1, 2 * j + 3, 2 * j + 2);
        }
        s += &format!("nodeset bottom 2 0 1\nnodeset top 2 {} {}\n", 2 * n, 2 * n + 1);
        Partition::parse(&s).unwrap()
    }

    fn bc(set: &str, c: Component, v: f64) -> BoundaryCondition {
        BoundaryCondition {
            set: set.into(),
            kind: BcKind::Displacement,
            component: c,
            value: v,
        }
    }

    fn strip_problem() -> Problem {
        Problem::with_options(
            strip(2),
            Material::new(10.0, 0.0, AnalysisMode::PlaneStrain).unwrap(),
            InterfaceMaterial {
                strength: 1.0,
                fracture_energy: 0.2,
                lambda: 1.0,
            },
            vec![
                bc("bottom", Component::X, 0.0),
                bc("bottom", Component::Y, 0.0),
                bc("top", Component::X, 0.0),
                bc("top", Component::Y, 1.0),
            ],
            ProblemOptions::default(),
        )
        .unwrap()
    }

    fn monitor() -> LoadMonitor {
        LoadMonitor {
            set: "top".into(),
            component: Component::Y,
            multiplier: 1.0,
        }
    }

    #[test]
    fn elastic_step_converges_in_one_iteration() {
        let p = strip_problem();
        let cfg = SolverConfig {
            load_schedule: vec![0.01],
            ..Default::default()
        };
        let mut s = Solver::new(&p, cfg, monitor()).unwrap();
        let it = s.nr_iterate(0.01, false).unwrap();
        assert_eq!(it, 1);
        assert!(s.load() > 0.0);
    }

    #[test]
    fn crack_keeps_dimension_and_kills_load() {
        let p = strip_problem();
        let cfg = SolverConfig {
            load_schedule: vec![0.01],
            ..Default::default()
        };
        let mut s = Solver::new(&p, cfg, monitor()).unwrap();
        let dim = s.matrix_dim();
        let nnz = s.matrix_nnz();
        s.insert_crack(0).unwrap();
        s.insert_crack(0).unwrap();
        assert_eq!(s.matrix_dim(), dim);
        assert_eq!(s.matrix_nnz(), nnz);
        s.nr_iterate(0.01, false).unwrap();
        assert!(s.load().abs() < 1e-10, "load {}", s.load());
    }

    #[test]
    fn work_covers_stored_and_dissipated_energy() {
        let p = strip_problem();
        let cfg = SolverConfig {
            load_schedule: (1..=400).map(|i| 0.5 * i as f64 / 400.0).collect(),
            min_increment: Some(1e-7),
            ..Default::default()
        };
        let mut s = Solver::new(&p, cfg, monitor()).unwrap();
        let path = s.run_schedule(&mut |_, _| {}).unwrap();
        for r in &path {
            let margin = r.external_work - r.stored_energy - r.dissipated;
            assert!(margin >= -1e-6 * r.external_work, "step {}: margin {margin:e}", r.step);
            assert!(margin <= 1e-2 * r.external_work, "step {}: margin {margin:e}", r.step);
        }
        let last = path.last().unwrap();
        assert!((last.dissipated - 0.2).abs() < 1e-9 && last.stored_energy.abs() < 1e-12);
    }

    #[test]
    fn traction_work_equals_elastic_energy() {
        let p = Problem::new(
            strip(3),
            Material::new(10.0, 0.25, AnalysisMode::PlaneStress).unwrap(),
            InterfaceMaterial {
                strength: 1e2,
                fracture_energy: 1e6,
                lambda: 1.0,
            },
            vec![
                bc("bottom", Component::X, 0.0),
                bc("bottom", Component::Y, 0.0),
                BoundaryCondition {
                    set: "top".into(),
                    kind: BcKind::Traction,
                    component: Component::Y,
                    value: 0.5,
                },
            ],
        )
        .unwrap();
        let cfg = SolverConfig {
            load_schedule: vec![0.5, 1.0],
            ..Default::default()
        };
        let mut s = Solver::new(&p, cfg, monitor()).unwrap();
        let path = s.run_schedule(&mut |_, _| {}).unwrap();
        for r in &path {
            assert!(r.external_work > 0.0);
            assert!((r.external_work - r.stored_energy).abs() < 1e-9 * r.external_work, "{r:?}");
        }
    }

    #[test]
    fn rejects_bad_config() {
        let bad = SolverConfig {
            load_schedule: vec![0.2, 0.1],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
