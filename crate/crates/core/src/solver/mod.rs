//! Incremental driver: load programs, single-pass staggered increments,
//! failure detection, and run logging.
//!
//! One increment: (1) displacement solve with the previous φ, (2) driving
//! force and frozen history H = max(H_prev, 𝒴), (3) bound-constrained Newton
//! for φ with H and the fatigue factor frozen, (4) history and fatigue update
//! from the end-of-increment fields, (5) monitors.
//!
//! For fixed φ the displacement problem is linear, so it is solved once for a
//! unit reference load and scaled to whatever the control target requires.

pub mod newton;
pub mod problem;
pub mod program;

use serde::{Deserialize, Serialize};

use crate::assembly::sparse::{norm, pcg};
use crate::assembly::{
    apply_dirichlet, assemble_displacement, CsrMatrix, Discretization, EnvelopeCholesky,
};
use crate::constitutive::{
    derive_coefficients, driving_force, geometric_function, DerivedCoefficients, MaterialParams,
    QuadPointState,
};
use crate::error::{Error, Result};
use crate::postproc::crack::CrackTracer;
pub use newton::{NewtonReport, PhaseSolver};
pub use problem::{BoundarySpec, LoadSpec, PairMonitor, PointMonitor, Support};
pub use program::{
    Control, CycleBlock, LinearSolver, LoadProgram, ProgramCursor, Scenario, SolverSettings, Step,
    Target, UnloadMode,
};

/// Monitors of one converged increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub increment: usize,
    pub cycle: usize,
    pub t: f64,
    /// Applied force (N), positive in the loading direction.
    pub force: f64,
    /// Value of the program's control measure.
    pub control: f64,
    pub ctod: f64,
    pub cmod: f64,
    pub cmsd: f64,
    pub crack_length: f64,
    pub max_phi: f64,
    pub dissipated_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub cycle: usize,
    pub increment: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<StepRecord>,
    pub failure: Option<Failure>,
    pub mesh_hash: String,
    pub quadrature: String,
    pub failure_criterion: String,
}

impl RunLog {
    pub fn peak_force(&self) -> f64 {
        self.records.iter().map(|r| r.force).fold(0.0, f64::max)
    }

    pub fn cycles_to_failure(&self) -> Option<usize> {
        self.failure.as_ref().map(|f| f.cycle)
    }
}

/// Nodal and quadrature-point fields at the end of an increment.
#[derive(Debug, Clone)]
pub struct Fields<'a> {
    pub u: &'a [f64],
    pub phi: &'a [f64],
    pub qp: &'a [QuadPointState],
}

/// Receives every converged increment; used for streaming output.
pub trait Observer {
    fn step(&mut self, record: &StepRecord, fields: &Fields) -> Result<()>;
    fn cycle_end(&mut self, _cycle: usize) -> Result<()> {
        Ok(())
    }
}

impl Observer for () {
    fn step(&mut self, _: &StepRecord, _: &Fields) -> Result<()> {
        Ok(())
    }
}

struct UnitSolution {
    phi_key: Vec<f64>,
    u1: Vec<f64>,
    force1: f64,
}

enum ResolvedLoad {
    Face(Vec<f64>),
    Prescribed(Vec<usize>),
}

struct Pair {
    left: usize,
    right: usize,
}

/// Simulation state and the machinery to advance it.
pub struct Simulation<'a> {
    pub disc: &'a Discretization,
    pub params: MaterialParams,
    pub coeffs: DerivedCoefficients,
    pub settings: SolverSettings,
    control: Control,
    supports: Vec<(usize, f64)>,
    load: ResolvedLoad,
    ctod: Option<Pair>,
    cmod: Option<Pair>,
    deflection: (Vec<usize>, usize, f64),
    tracer: Option<CrackTracer>,
    ligament: Option<f64>,
    u_perm: Vec<usize>,
    phase: PhaseSolver,
    factor: Option<EnvelopeCholesky>,
    cache: Option<UnitSolution>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub qp: Vec<QuadPointState>,
    gamma: Vec<f64>,
    pub dissipated: f64,
    pub crack_length: f64,
    pub force: f64,
    increment: usize,
}

#[derive(Clone)]
struct Snapshot {
    u: Vec<f64>,
    phi: Vec<f64>,
    qp: Vec<QuadPointState>,
    gamma: Vec<f64>,
    dissipated: f64,
    crack_length: f64,
    force: f64,
}

fn pair(mesh: &crate::mesh::Mesh, m: &PairMonitor) -> Result<Pair> {
    Ok(Pair {
        left: mesh.node_set(&m.left)?[0],
        right: mesh.node_set(&m.right)?[0],
    })
}

impl<'a> Simulation<'a> {
    pub fn new(
        disc: &'a Discretization,
        params: &MaterialParams,
        bc: &BoundarySpec,
        control: Control,
        settings: &SolverSettings,
    ) -> Result<Self> {
        settings.validate()?;
        let coeffs = derive_coefficients(params)?;
        if params.plane.dim() != disc.mesh.dim {
            return Err(Error::Config(format!(
                "material.plane does not match the {}D mesh",
                disc.mesh.dim
            )));
        }
        bc.validate(&disc.mesh)?;
        let mesh = &disc.mesh;
        let nd = disc.ndof;
        let mut supports = Vec::new();
        for s in &bc.supports {
            for &node in mesh.node_set(&s.set)? {
                for &c in &s.components {
                    supports.push((node * nd + c, 0.0));
                }
            }
        }
        let load = match &bc.load {
            LoadSpec::Face { set, component, sign } => {
                ResolvedLoad::Face(disc.face_load(set, *component, *sign)?)
            }
            LoadSpec::Prescribed { set, component } => ResolvedLoad::Prescribed(
                mesh.node_set(set)?.iter().map(|&n| n * nd + component).collect(),
            ),
        };
        let ctod = bc.ctod.as_ref().map(|m| pair(mesh, m)).transpose()?;
        let cmod = bc.cmod.as_ref().map(|m| pair(mesh, m)).transpose()?;
        match control {
            Control::Ctod if ctod.is_none() => {
                return Err(Error::Config("ctod control needs a ctod monitor pair".into()))
            }
            Control::Cmod if cmod.is_none() => {
                return Err(Error::Config("cmod control needs a cmod monitor pair".into()))
            }
            _ => {}
        }
        let deflection = (
            mesh.node_set(&bc.deflection.set)?.to_vec(),
            bc.deflection.component,
            bc.deflection.sign,
        );
        let tracer = match &bc.crack_seed {
            Some(seed) => {
                let bin = mesh
                    .attribute("fine_size")
                    .unwrap_or_else(|| mesh.min_edge_length().max(1e-12));
                Some(CrackTracer::new(
                    mesh,
                    mesh.node_set(seed)?,
                    0.5 * params.ell,
                    bc.front_axis,
                    bin,
                ))
            }
            None => None,
        };
        let u_perm = disc_u_perm(disc);
        let phase = PhaseSolver::new(disc, params.ell);
        let qp = vec![QuadPointState::new(&coeffs); disc.num_qp];
        let sim = Simulation {
            disc,
            params: params.clone(),
            coeffs,
            settings: settings.clone(),
            control,
            supports,
            load,
            ctod,
            cmod,
            deflection,
            tracer,
            ligament: mesh.attribute("ligament_length"),
            u_perm,
            phase,
            factor: None,
            cache: None,
            u: vec![0.0; disc.num_udofs()],
            phi: vec![0.0; disc.num_nodes()],
            qp,
            gamma: vec![0.0; disc.num_qp],
            dissipated: 0.0,
            crack_length: 0.0,
            force: 0.0,
            increment: 0,
        };
        // reject conflicting or out-of-range constraints up front
        sim.fixed_dofs(1.0)?;
        Ok(sim)
    }

    fn fixed_dofs(&self, value: f64) -> Result<Vec<(usize, f64)>> {
        let mut fixed = self.supports.clone();
        if let ResolvedLoad::Prescribed(dofs) = &self.load {
            fixed.extend(dofs.iter().map(|&d| (d, value)));
        }
        let n = self.disc.num_udofs();
        let mut seen: Vec<Option<f64>> = vec![None; n];
        for &(d, v) in &fixed {
            if d >= n {
                return Err(Error::Boundary(format!("dof {d} out of range")));
            }
            if let Some(prev) = seen[d] {
                if prev != v {
                    return Err(Error::Boundary(format!(
                        "conflicting prescribed values {prev} and {v} on node {} component {}",
                        d / self.disc.ndof,
                        d % self.disc.ndof
                    )));
                }
            }
            seen[d] = Some(v);
        }
        Ok(fixed)
    }

    /// Displacement field and force for a unit load at the current φ.
    fn unit_solution(&mut self) -> Result<&UnitSolution> {
        let fresh = matches!(&self.cache, Some(c) if c.phi_key == self.phi);
        if !fresh {
            let k_full = assemble_displacement(
                self.disc,
                &self.phi,
                &self.params,
                &self.coeffs,
                self.settings.residual_stiffness,
            );
            let mut k = k_full.clone();
            let mut rhs = match &self.load {
                ResolvedLoad::Face(f) => f.clone(),
                ResolvedLoad::Prescribed(_) => vec![0.0; self.disc.num_udofs()],
            };
            apply_dirichlet(&mut k, &mut rhs, &self.fixed_dofs(1.0)?)?;
            let u1 = self.linear_solve(&k, &rhs)?;
            let force1 = match &self.load {
                ResolvedLoad::Face(_) => 1.0,
                ResolvedLoad::Prescribed(dofs) => dofs.iter().map(|&d| row_dot(&k_full, d, &u1)).sum(),
            };
            self.cache = Some(UnitSolution {
                phi_key: self.phi.clone(),
                u1,
                force1,
            });
        }
        Ok(self.cache.as_ref().unwrap())
    }

    fn linear_solve(&mut self, k: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        let nd = self.disc.ndof;
        match self.settings.linear_solver {
            LinearSolver::Direct => {
                let f = EnvelopeCholesky::factor(k, &self.u_perm, nd)?;
                Ok(f.solve(rhs))
            }
            LinearSolver::Cg => {
                let diag = k.diagonal();
                let mut x = self.cache.as_ref().map(|c| c.u1.clone()).unwrap_or_else(|| vec![0.0; k.n]);
                let max_it = 20 * k.n;
                pcg(k, rhs, &mut x, |r| r.iter().zip(&diag).map(|(v, d)| v / d).collect(), self.settings.cg_tol, max_it)
                    .ok_or(Error::Singular { node: 0, dof: 0 })
                    .map(|_| x)
                    .or_else(|_| {
                        // fall back to a factorization, which also locates a singular pivot
                        let f = EnvelopeCholesky::factor(k, &self.u_perm, nd)?;
                        Ok(f.solve(rhs))
                    })
            }
            LinearSolver::FactoredCg => {
                if let Some(f) = &self.factor {
                    let mut x = self.cache.as_ref().map(|c| c.u1.clone()).unwrap_or_else(|| vec![0.0; k.n]);
                    if let Some(it) = pcg(k, rhs, &mut x, |r| f.solve(r), self.settings.cg_tol, 25) {
                        if it <= 12 {
                            return Ok(x);
                        }
                        // accepted, but refactor for the next solve
                        self.factor = Some(EnvelopeCholesky::factor(k, &self.u_perm, nd)?);
                        return Ok(x);
                    }
                }
                let f = EnvelopeCholesky::factor(k, &self.u_perm, nd)?;
                let x = f.solve(rhs);
                self.factor = Some(f);
                Ok(x)
            }
        }
    }

    fn pair_value(&self, u: &[f64], p: &Option<Pair>, comp: usize) -> f64 {
        let nd = self.disc.ndof;
        p.as_ref()
            .map_or(0.0, |p| u[p.right * nd + comp] - u[p.left * nd + comp])
    }

    pub fn ctod_of(&self, u: &[f64]) -> f64 {
        self.pair_value(u, &self.ctod, 0)
    }

    pub fn cmod_of(&self, u: &[f64]) -> f64 {
        self.pair_value(u, &self.cmod, 0)
    }

    pub fn cmsd_of(&self, u: &[f64]) -> f64 {
        self.pair_value(u, &self.cmod, 1)
    }

    pub fn deflection_of(&self, u: &[f64]) -> f64 {
        let (nodes, c, sign) = &self.deflection;
        let nd = self.disc.ndof;
        sign * nodes.iter().map(|&n| u[n * nd + c]).sum::<f64>() / nodes.len() as f64
    }

    fn measure(&self, kind: Control, u: &[f64], force: f64) -> f64 {
        match kind {
            Control::Ctod => self.ctod_of(u),
            Control::Cmod => self.cmod_of(u),
            Control::Displacement => self.deflection_of(u),
            Control::Force => force,
        }
    }

    /// Current value of the quantity a target of this kind prescribes.
    fn current_value(&self, target: Target) -> f64 {
        match target {
            Target::Force(_) => self.force,
            Target::Control(_) => self.measure(self.control, &self.u, self.force),
        }
    }

    /// Scales the unit solution to a target: control value ↦ (u, force).
    pub fn control_scaling(&mut self, target: Target) -> Result<(Vec<f64>, f64)> {
        let control = self.control;
        let unit = self.unit_solution()?;
        let (u1, f1) = (unit.u1.clone(), unit.force1);
        let lambda = match target {
            Target::Force(f) => {
                if f1 == 0.0 {
                    return Err(Error::Config("unit load produces no force".into()));
                }
                f / f1
            }
            Target::Control(v) => {
                let m1 = self.measure(control, &u1, f1);
                if !(m1 > 0.0) {
                    return Err(Error::Config(format!(
                        "unit load gives a non-positive {control:?} monitor ({m1:e}); check the monitor pair orientation"
                    )));
                }
                v / m1
            }
        };
        Ok((u1.iter().map(|x| lambda * x).collect(), lambda * f1))
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            u: self.u.clone(),
            phi: self.phi.clone(),
            qp: self.qp.clone(),
            gamma: self.gamma.clone(),
            dissipated: self.dissipated,
            crack_length: self.crack_length,
            force: self.force,
        }
    }

    fn restore(&mut self, s: Snapshot) {
        self.u = s.u;
        self.phi = s.phi;
        self.qp = s.qp;
        self.gamma = s.gamma;
        self.dissipated = s.dissipated;
        self.crack_length = s.crack_length;
        self.force = s.force;
    }

    /// One staggered increment towards `target`.
    pub fn staggered_increment(&mut self, target: Target) -> Result<()> {
        let disc = self.disc;
        let phi_prev = self.phi.clone();
        let h_prev: Vec<f64> = self.qp.iter().map(|q| q.h).collect();
        let f_frozen: Vec<f64> = self.qp.iter().map(|q| q.f_fat).collect();
        let mut h = h_prev.clone();
        let mut u = Vec::new();
        let mut force = 0.0;
        let mut psi0 = Vec::new();
        for _pass in 0..self.settings.staggered_passes {
            let (u_new, f_new) = self.control_scaling(target)?;
            u = u_new;
            force = f_new;
            let resp = disc.responses(&u, &self.params);
            psi0 = resp.iter().map(|r| r.psi0).collect();
            for (i, r) in resp.iter().enumerate() {
                let y = driving_force(r.sigma1, &self.params);
                h[i] = h_prev[i].max(y).max(self.coeffs.h_min);
            }
            let mut phi = self.phi.clone();
            self.phase.solve(
                disc,
                &mut phi,
                &phi_prev,
                &h,
                &f_frozen,
                &self.coeffs,
                self.settings.newton_tol,
                self.settings.newton_max_iter,
            )?;
            let unchanged = phi == self.phi;
            self.phi = phi;
            if unchanged {
                break;
            }
        }
        // history and fatigue from the end-of-increment fields
        let phi_qp = disc.phi_at_qp(&self.phi);
        for (i, q) in self.qp.iter_mut().enumerate() {
            q.h = h[i];
            q.update_fatigue(phi_qp[i].clamp(0.0, 1.0), psi0[i], &self.coeffs);
        }
        self.u = u;
        self.force = force;
        self.update_dissipation();
        Ok(())
    }

    /// Crack-surface density γ at every quadrature point.
    fn crack_density(&self) -> Vec<f64> {
        let c = &self.coeffs;
        let mut out = Vec::with_capacity(self.disc.num_qp);
        for (el, qps) in self.disc.mesh.elements.iter().zip(&self.disc.qp) {
            for q in qps {
                let mut phi = 0.0;
                let mut g = [0.0; 3];
                for (a, &n) in el.nodes.iter().enumerate() {
                    phi += q.n[a] * self.phi[n];
                    for k in 0..3 {
                        g[k] += q.grad[a][k] * self.phi[n];
                    }
                }
                let ah = geometric_function(phi.clamp(0.0, 1.0), c.xi).0;
                out.push((ah / c.ell + c.ell * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2])) / c.c0);
            }
        }
        out
    }

    fn update_dissipation(&mut self) {
        let gamma = self.crack_density();
        let mut d = 0.0;
        let mut k = 0;
        for qps in &self.disc.qp {
            for q in qps {
                d += q.weight * self.qp[k].f_fat * self.coeffs.gf * (gamma[k] - self.gamma[k]);
                k += 1;
            }
        }
        self.dissipated += d;
        self.gamma = gamma;
    }

    fn measure_crack(&mut self) {
        if let Some(t) = &self.tracer {
            let a = t.length(&self.phi, self.settings.crack_threshold);
            self.crack_length = self.crack_length.max(a);
        }
    }

    /// Crack length at an arbitrary threshold for the current field.
    pub fn crack_length_at(&self, threshold: f64) -> f64 {
        self.tracer.as_ref().map_or(0.0, |t| t.length(&self.phi, threshold))
    }

    pub fn tracer(&self) -> Option<&CrackTracer> {
        self.tracer.as_ref()
    }

    fn check_invariants(&self, before: &Snapshot) -> Result<()> {
        let err = |message: String| Error::Invariant {
            increment: self.increment,
            message,
        };
        for (i, (a, b)) in before.phi.iter().zip(&self.phi).enumerate() {
            if *b < a - 1e-12 {
                return Err(err(format!("phi decreased at node {i}: {a} -> {b}")));
            }
        }
        for (i, (a, b)) in before.qp.iter().zip(&self.qp).enumerate() {
            if b.h < a.h || b.alpha_bar < a.alpha_bar || b.f_fat > a.f_fat {
                return Err(err(format!("history state regressed at quadrature point {i}")));
            }
        }
        let tol = 1e-12 * before.dissipated.abs().max(1e-12);
        if self.dissipated < before.dissipated - tol {
            return Err(err(format!(
                "dissipated energy decreased: {} -> {}",
                before.dissipated, self.dissipated
            )));
        }
        if self.crack_length < before.crack_length {
            return Err(err("crack length decreased".into()));
        }
        Ok(())
    }

    /// Advances by one program step with bisection on Newton failure.
    fn advance(&mut self, target: Target) -> Result<()> {
        let start = self.snapshot();
        let v0 = self.current_value(target);
        let v1 = match target {
            Target::Force(v) | Target::Control(v) => v,
        };
        let make = |v: f64| match target {
            Target::Force(_) => Target::Force(v),
            Target::Control(_) => Target::Control(v),
        };
        let mut level = 0;
        loop {
            let parts = 1usize << level;
            let mut ok = Ok(());
            for j in 1..=parts {
                let v = v0 + (v1 - v0) * j as f64 / parts as f64;
                ok = self.staggered_increment(make(v));
                if ok.is_err() {
                    break;
                }
            }
            match ok {
                Ok(()) => return Ok(()),
                Err(Error::NewtonDiverged { .. }) if level < self.settings.max_bisections => {
                    self.restore(start.clone());
                    level += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn record(&self, step: &Step) -> StepRecord {
        StepRecord {
            increment: self.increment,
            cycle: step.cycle,
            t: step.t,
            force: self.force,
            control: self.measure(self.control, &self.u, self.force),
            ctod: self.ctod_of(&self.u),
            cmod: self.cmod_of(&self.u),
            cmsd: self.cmsd_of(&self.u),
            crack_length: self.crack_length,
            max_phi: self.phi.iter().copied().fold(0.0, f64::max),
            dissipated_energy: self.dissipated,
        }
    }

    pub fn fields(&self) -> Fields<'_> {
        Fields {
            u: &self.u,
            phi: &self.phi,
            qp: &self.qp,
        }
    }
}

fn disc_u_perm(disc: &Discretization) -> Vec<usize> {
    CsrMatrix::from_adjacency(&disc.mesh.node_adjacency(), disc.ndof).rcm()
}

fn row_dot(k: &CsrMatrix, row: usize, x: &[f64]) -> f64 {
    (k.row_ptr[row]..k.row_ptr[row + 1])
        .map(|p| k.values[p] * x[k.col_idx[p]])
        .sum()
}

pub const FAILURE_CRITERION: &str = "force control: load-point deflection increment above divergence_factor times the largest first-cycle increment; singular displacement factorization; or crack length at failure_crack_fraction of the ligament";

/// Runs a load program to completion or failure.
pub fn run_program<'a>(
    disc: &'a Discretization,
    params: &MaterialParams,
    bc: &BoundarySpec,
    program: &LoadProgram,
    settings: &SolverSettings,
    observer: &mut dyn Observer,
) -> Result<(RunLog, Simulation<'a>)> {
    if disc.order != settings.quadrature {
        return Err(Error::Config(
            "discretization quadrature differs from solver.quadrature".into(),
        ));
    }
    // cyclic programs are force-controlled whatever the control field says
    let control = if program.is_cyclic_force() { Control::Force } else { program.control };
    let mut sim = Simulation::new(disc, params, bc, control, settings)?;
    let mut cursor = ProgramCursor::new(program)?;
    let mut log = RunLog {
        records: Vec::new(),
        failure: None,
        mesh_hash: disc.mesh.hash(),
        quadrature: format!("{:?}", disc.order).to_lowercase(),
        failure_criterion: FAILURE_CRITERION.to_string(),
    };
    let mut first_cycle_ref: f64 = 0.0;
    let mut last_cycle = 0;
    let mut prev_defl = 0.0;
    while let Some(step) = cursor.next(sim.force) {
        if step.cycle != last_cycle {
            if last_cycle > 0 {
                observer.cycle_end(last_cycle)?;
            }
            last_cycle = step.cycle;
        }
        let before = sim.snapshot();
        sim.increment += 1;
        let outcome = sim.advance(step.target);
        let mut reason = None;
        match outcome {
            Ok(()) => {}
            Err(Error::Singular { node, dof }) => {
                reason = Some(format!("singular displacement system at node {node} (dof {dof})"));
            }
            Err(e) => {
                observer.cycle_end(step.cycle)?;
                return Err(e);
            }
        }
        if reason.is_none() {
            sim.measure_crack();
            sim.check_invariants(&before)?;
            let defl = sim.deflection_of(&sim.u);
            let dd = (defl - prev_defl).abs();
            prev_defl = defl;
            if matches!(step.target, Target::Force(_)) {
                let first = if program.is_cyclic_force() {
                    step.cycle <= 1
                } else {
                    sim.increment == 1
                };
                if first {
                    first_cycle_ref = first_cycle_ref.max(dd);
                } else if first_cycle_ref > 0.0 && dd > settings.divergence_factor * first_cycle_ref {
                    reason = Some(format!(
                        "deflection increment {dd:e} exceeds {} x first-cycle increment {first_cycle_ref:e}",
                        settings.divergence_factor
                    ));
                }
            }
            if let Some(lig) = sim.ligament {
                if sim.tracer.is_some() && sim.crack_length >= settings.failure_crack_fraction * lig {
                    reason.get_or_insert_with(|| {
                        format!("crack length {:.3} reached the ligament end", sim.crack_length)
                    });
                }
            }
            let rec = sim.record(&step);
            observer.step(&rec, &sim.fields())?;
            log.records.push(rec);
        }
        if let Some(reason) = reason {
            log.failure = Some(Failure {
                cycle: step.cycle,
                increment: sim.increment,
                reason,
            });
            break;
        }
    }
    if last_cycle > 0 || log.failure.is_some() {
        observer.cycle_end(last_cycle)?;
    }
    Ok((log, sim))
}

/// Peak force of a monotonic run, used as the reference ultimate load.
pub fn reference_force(
    disc: &Discretization,
    params: &MaterialParams,
    bc: &BoundarySpec,
    program: &LoadProgram,
    settings: &SolverSettings,
) -> Result<f64> {
    let (log, _) = run_program(disc, params, bc, program, settings, &mut ())?;
    Ok(log.peak_force())
}

pub fn unit_norm(v: &[f64]) -> f64 {
    norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{generate_bar, BarParams};
    use crate::mesh::{ElementKind, QuadratureOrder};

    fn bar_disc(size: f64) -> Discretization {
        let mesh = generate_bar(&BarParams {
            length: 20.0,
            height: 2.0,
            thickness: 1.0,
            size,
            kind: ElementKind::Quad4,
        })
        .unwrap();
        Discretization::new(mesh, QuadratureOrder::Full).unwrap()
    }

    #[test]
    fn elastic_increments_keep_phi_zero_and_scale_linearly() {
        let disc = bar_disc(1.0);
        let p = MaterialParams::default();
        let s = SolverSettings::default();
        let mut sim = Simulation::new(&disc, &p, &BoundarySpec::bar(), Control::Displacement, &s).unwrap();
        // well below the strength: ε = 0.2 ft/E
        let d = 0.2 * p.ft / p.e0 * 20.0;
        sim.staggered_increment(Target::Control(d)).unwrap();
        assert!(sim.phi.iter().all(|&v| v.abs() <= 1e-12));
        let f1 = sim.force;
        let u1 = sim.u.clone();
        // nominal stress E ε over the 2 mm² section
        assert!((f1 - 0.2 * p.ft * 2.0).abs() < 1e-9 * f1, "{f1}");
        sim.staggered_increment(Target::Control(2.0 * d)).unwrap();
        assert!((sim.force - 2.0 * f1).abs() < 1e-12 * f1);
        for (a, b) in u1.iter().zip(&sim.u) {
            assert!((b - 2.0 * a).abs() < 1e-15);
        }
        // two steps vs one combined step in elasticity
        let mut sim2 = Simulation::new(&disc, &p, &BoundarySpec::bar(), Control::Displacement, &s).unwrap();
        sim2.staggered_increment(Target::Control(2.0 * d)).unwrap();
        assert_eq!(sim2.u, sim.u);
    }

    #[test]
    fn zero_target_gives_zero_field() {
        let disc = bar_disc(1.0);
        let p = MaterialParams::default();
        let mut sim =
            Simulation::new(&disc, &p, &BoundarySpec::bar(), Control::Displacement, &SolverSettings::default())
                .unwrap();
        let (u, f) = sim.control_scaling(Target::Control(0.0)).unwrap();
        assert_eq!(f, 0.0);
        assert!(u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn repeated_increment_is_a_fixed_point() {
        let disc = bar_disc(0.5);
        let p = MaterialParams::default();
        let s = SolverSettings::default();
        let mut sim = Simulation::new(&disc, &p, &BoundarySpec::bar(), Control::Displacement, &s).unwrap();
        let d = 1.3 * p.ft / p.e0 * 20.0;
        sim.staggered_increment(Target::Control(d)).unwrap();
        assert!(sim.phi.iter().any(|&v| v > 0.0));
        let before = (sim.u.clone(), sim.phi.clone(), sim.qp.clone());
        sim.staggered_increment(Target::Control(d)).unwrap();
        // φ moves at most by the Newton tolerance, the history not at all
        let dphi = before.1.iter().zip(&sim.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dphi < 1e-6, "{dphi}");
        for (a, b) in before.2.iter().zip(&sim.qp) {
            assert!((a.h - b.h).abs() <= 1e-9 * a.h);
        }
    }

    #[test]
    fn conflicting_supports_rejected() {
        let disc = bar_disc(1.0);
        let mut bc = BoundarySpec::bar();
        // pulling the left end while it is held
        bc.load = LoadSpec::Prescribed {
            set: "left".into(),
            component: 0,
        };
        let err = Simulation::new(&disc, &MaterialParams::default(), &bc, Control::Displacement, &SolverSettings::default())
            .err()
            .unwrap();
        assert!(err.to_string().contains("conflicting"), "{err}");
    }
}
