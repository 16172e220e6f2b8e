//! Load programs and solver settings.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::QuadratureOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Monotonic loading under displacement-type control.
    Ls1,
    /// Monotonic loading with unloading–reloading cycles in the post-peak range.
    Ls2,
    /// Force-controlled cycles with stepwise increasing upper level.
    Ls3,
    /// Constant-amplitude force-controlled fatigue.
    Ls4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    Ctod,
    Cmod,
    /// The configured displacement monitor (load-point deflection, or the
    /// prescribed displacement itself).
    Displacement,
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnloadMode {
    /// Unload to the control value `unload_to`.
    #[default]
    Ctod,
    /// Unload to the fraction `unload_to` of the force reached at unloading.
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleBlock {
    pub smax: f64,
    pub smin: f64,
    pub cycles: usize,
}

/// Declarative load history. Fields not used by a scenario are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadProgram {
    pub scenario: Scenario,
    #[serde(default = "default_control")]
    pub control: Control,
    /// Final control value of the monotonic ramp (LS1, LS2).
    #[serde(default)]
    pub target: f64,
    /// Number of increments of the monotonic ramp (LS1, LS2).
    #[serde(default = "default_increments")]
    pub increments: usize,
    /// Control values at which unloading cycles start (LS2).
    #[serde(default)]
    pub unload_at: Vec<f64>,
    #[serde(default)]
    pub unload_mode: UnloadMode,
    #[serde(default)]
    pub unload_to: f64,
    /// Force blocks (LS3, LS4); S values are fractions of `reference_force`.
    #[serde(default)]
    pub blocks: Vec<CycleBlock>,
    /// Reference ultimate load F_u (N).
    #[serde(default)]
    pub reference_force: Option<f64>,
    #[serde(default = "default_ipc")]
    pub increments_per_cycle: usize,
    /// Hard cap on the number of load cycles.
    #[serde(default = "default_max_cycles")]
    pub max_cycles: usize,
}

fn default_control() -> Control {
    Control::Ctod
}

fn default_increments() -> usize {
    50
}

fn default_ipc() -> usize {
    10
}

fn default_max_cycles() -> usize {
    500
}

impl LoadProgram {
    pub fn ls1(control: Control, target: f64, increments: usize) -> Self {
        LoadProgram {
            scenario: Scenario::Ls1,
            control,
            target,
            increments,
            unload_at: Vec::new(),
            unload_mode: UnloadMode::Ctod,
            unload_to: 0.0,
            blocks: Vec::new(),
            reference_force: None,
            increments_per_cycle: 10,
            max_cycles: 500,
        }
    }

    pub fn ls2(target: f64, increments: usize, unload_at: Vec<f64>) -> Self {
        LoadProgram {
            scenario: Scenario::Ls2,
            unload_at,
            ..Self::ls1(Control::Ctod, target, increments)
        }
    }

    /// Upper level from 0.50 in steps of 0.05, ten cycles per level, lower level 0.10.
    pub fn ls3(reference_force: f64) -> Self {
        let blocks = (0..10)
            .map(|k| CycleBlock {
                smax: 0.5 + 0.05 * k as f64,
                smin: 0.10,
                cycles: 10,
            })
            .collect();
        LoadProgram {
            scenario: Scenario::Ls3,
            control: Control::Force,
            blocks,
            reference_force: Some(reference_force),
            ..Self::ls1(Control::Force, 0.0, 0)
        }
    }

    pub fn ls4(smax: f64, smin: f64, reference_force: f64, max_cycles: usize) -> Self {
        LoadProgram {
            scenario: Scenario::Ls4,
            control: Control::Force,
            blocks: vec![CycleBlock {
                smax,
                smin,
                cycles: max_cycles,
            }],
            reference_force: Some(reference_force),
            max_cycles,
            ..Self::ls1(Control::Force, 0.0, 0)
        }
    }

    pub fn is_cyclic_force(&self) -> bool {
        matches!(self.scenario, Scenario::Ls3 | Scenario::Ls4)
    }

    pub fn validate(&self) -> Result<()> {
        let ipc = self.increments_per_cycle;
        if ipc < 4 || ipc % 2 != 0 {
            return Err(Error::param(
                "program.increments_per_cycle",
                format!("must be even and >= 4, got {ipc}"),
            ));
        }
        match self.scenario {
            Scenario::Ls1 | Scenario::Ls2 => {
                if self.control == Control::Force && self.scenario == Scenario::Ls2 {
                    return Err(Error::param("program.control", "ls2 needs a displacement-type control"));
                }
                if !(self.target > 0.0) {
                    return Err(Error::param("program.target", "must be > 0"));
                }
                if self.increments == 0 {
                    return Err(Error::param("program.increments", "must be >= 1"));
                }
                if self.scenario == Scenario::Ls2 {
                    let mut prev = 0.0;
                    for &c in &self.unload_at {
                        if !(c > prev && c < self.target) {
                            return Err(Error::param(
                                "program.unload_at",
                                "values must be increasing and lie in (0, target)",
                            ));
                        }
                        prev = c;
                    }
                    let bad = match self.unload_mode {
                        UnloadMode::Ctod => self.unload_to < 0.0,
                        UnloadMode::Force => !(0.0..1.0).contains(&self.unload_to),
                    };
                    if bad {
                        return Err(Error::param("program.unload_to", "out of range for the unload mode"));
                    }
                }
            }
            Scenario::Ls3 | Scenario::Ls4 => {
                if self.blocks.is_empty() {
                    return Err(Error::param("program.blocks", "at least one cycle block is required"));
                }
                for (i, b) in self.blocks.iter().enumerate() {
                    if !(0.0 <= b.smin && b.smin < b.smax && b.smax <= 1.0) {
                        return Err(Error::param(
                            format!("program.blocks[{i}]"),
                            format!("need 0 <= smin < smax <= 1, got smin={} smax={}", b.smin, b.smax),
                        ));
                    }
                }
                match self.reference_force {
                    Some(f) if f > 0.0 => {}
                    _ => {
                        return Err(Error::param(
                            "program.reference_force",
                            "force-controlled programs need a positive reference force",
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

/// What one increment drives towards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Value of the program's control measure.
    Control(f64),
    /// Applied force (N).
    Force(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub target: Target,
    pub cycle: usize,
    pub t: f64,
    /// Last increment of a loading ramp (upper load level of the cycle).
    pub upper: bool,
}

/// Lazily expands a [`LoadProgram`] into increments. LS2 force-mode
/// unloading depends on the force reached, which is passed to [`next`].
///
/// [`next`]: ProgramCursor::next
#[derive(Debug, Clone)]
pub struct ProgramCursor {
    program: LoadProgram,
    pending: VecDeque<Step>,
    count: usize,
    // LS2 progress
    stage: usize,
    ctod: f64,
    // LS3/LS4 progress
    block: usize,
    cycle_in_block: usize,
    cycle: usize,
    level: f64,
}

impl ProgramCursor {
    pub fn new(program: &LoadProgram) -> Result<Self> {
        program.validate()?;
        Ok(ProgramCursor {
            program: program.clone(),
            pending: VecDeque::new(),
            count: 0,
            stage: 0,
            ctod: 0.0,
            block: 0,
            cycle_in_block: 0,
            cycle: 0,
            level: 0.0,
        })
    }

    fn dt(&self) -> f64 {
        match self.program.scenario {
            Scenario::Ls1 | Scenario::Ls2 => 1.0 / self.program.increments as f64,
            _ => 1.0 / self.program.increments_per_cycle as f64,
        }
    }

    fn push(&mut self, target: Target, cycle: usize, upper: bool) {
        self.pending.push_back(Step {
            target,
            cycle,
            t: 0.0,
            upper,
        });
    }

    fn ramp(&mut self, from: f64, to: f64, n: usize, cycle: usize, upper_at_end: bool, force: bool) {
        for k in 1..=n {
            let v = from + (to - from) * k as f64 / n as f64;
            let t = if force { Target::Force(v) } else { Target::Control(v) };
            self.push(t, cycle, upper_at_end && k == n);
        }
    }

    fn refill(&mut self, last_force: f64) {
        let p = self.program.clone();
        let half = p.increments_per_cycle / 2;
        match p.scenario {
            Scenario::Ls1 => {
                if self.stage == 0 {
                    self.ramp(0.0, p.target, p.increments, 0, true, p.control == Control::Force);
                    self.stage = 1;
                }
            }
            Scenario::Ls2 => {
                let dc = p.target / p.increments as f64;
                if self.stage % 2 == 0 {
                    // ramp to the next unloading point or to the end
                    let k = self.stage / 2;
                    let to = if k < p.unload_at.len() {
                        p.unload_at[k]
                    } else if k == p.unload_at.len() {
                        p.target
                    } else {
                        return;
                    };
                    let n = (((to - self.ctod) / dc).round() as usize).max(1);
                    self.ramp(self.ctod, to, n, k, true, false);
                    self.ctod = to;
                } else if self.stage / 2 < p.unload_at.len() {
                    let cycle = self.stage / 2 + 1;
                    match p.unload_mode {
                        UnloadMode::Ctod => {
                            self.ramp(self.ctod, p.unload_to, half, cycle, false, false);
                            self.ramp(p.unload_to, self.ctod, half, cycle, true, false);
                        }
                        UnloadMode::Force => {
                            let lo = p.unload_to * last_force;
                            self.ramp(last_force, lo, half, cycle, false, true);
                            self.ramp(lo, last_force, half, cycle, true, true);
                        }
                    }
                } else {
                    return;
                }
                self.stage += 1;
            }
            Scenario::Ls3 | Scenario::Ls4 => {
                if self.cycle >= p.max_cycles {
                    return;
                }
                while self.block < p.blocks.len() && self.cycle_in_block >= p.blocks[self.block].cycles {
                    self.block += 1;
                    self.cycle_in_block = 0;
                }
                if self.block >= p.blocks.len() {
                    return;
                }
                let b = p.blocks[self.block];
                let fu = p.reference_force.unwrap_or(0.0);
                self.cycle += 1;
                self.cycle_in_block += 1;
                let c = self.cycle;
                self.ramp(self.level * fu, b.smax * fu, half, c, true, true);
                self.ramp(b.smax * fu, b.smin * fu, half, c, false, true);
                self.level = b.smin;
            }
        }
    }

    /// Next increment, or `None` when the program is exhausted.
    pub fn next(&mut self, last_force: f64) -> Option<Step> {
        if self.pending.is_empty() {
            self.refill(last_force);
        }
        let mut s = self.pending.pop_front()?;
        self.count += 1;
        s.t = self.count as f64 * self.dt();
        Some(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Envelope Cholesky factorization of every new stiffness.
    #[default]
    Direct,
    /// Conjugate gradients with a diagonal preconditioner.
    Cg,
    /// Conjugate gradients preconditioned by the last Cholesky factor,
    /// refactoring when the iteration count grows.
    FactoredCg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Phase-field Newton tolerance on the projected residual, relative to
    /// the natural residual scale ∫N/ℓ².
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub staggered_passes: usize,
    pub linear_solver: LinearSolver,
    /// Relative residual tolerance of the iterative linear solvers.
    pub cg_tol: f64,
    pub quadrature: QuadratureOrder,
    /// Residual stiffness fraction k in g_eff = (1 − k) g + k.
    pub residual_stiffness: f64,
    pub max_bisections: usize,
    /// Failure when a force-controlled displacement increment exceeds this
    /// multiple of the largest first-cycle increment.
    pub divergence_factor: f64,
    /// φ level defining the crack.
    pub crack_threshold: f64,
    /// Failure when the crack length reaches this fraction of the ligament.
    pub failure_crack_fraction: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            newton_tol: 1e-6,
            newton_max_iter: 50,
            staggered_passes: 1,
            linear_solver: LinearSolver::Direct,
            cg_tol: 1e-11,
            quadrature: QuadratureOrder::Full,
            residual_stiffness: 1e-8,
            max_bisections: 5,
            divergence_factor: 100.0,
            crack_threshold: 0.95,
            failure_crack_fraction: 0.95,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("solver.newton_tol", self.newton_tol),
            ("solver.cg_tol", self.cg_tol),
            ("solver.divergence_factor", self.divergence_factor),
        ];
        for (f, v) in pos {
            if !(v > 0.0) {
                return Err(Error::param(f, format!("must be > 0, got {v}")));
            }
        }
        if self.newton_max_iter == 0 || self.staggered_passes == 0 {
            return Err(Error::param("solver", "iteration counts must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.residual_stiffness) {
            return Err(Error::param("solver.residual_stiffness", "must lie in [0, 1)"));
        }
        if !(self.crack_threshold > 0.0 && self.crack_threshold <= 1.0) {
            return Err(Error::param("solver.crack_threshold", "must lie in (0, 1]"));
        }
        if !(self.failure_crack_fraction > 0.0) {
            return Err(Error::param("solver.failure_crack_fraction", "must be > 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(p: &LoadProgram) -> Vec<Step> {
        let mut c = ProgramCursor::new(p).unwrap();
        let mut v = Vec::new();
        while let Some(s) = c.next(100.0) {
            v.push(s);
        }
        v
    }

    #[test]
    fn ls1_ramp() {
        let s = drain(&LoadProgram::ls1(Control::Ctod, 0.2, 4));
        assert_eq!(s.len(), 4);
        assert_eq!(s[3].target, Target::Control(0.2));
        assert!(s.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn ls4_cycles_split_evenly() {
        let s = drain(&LoadProgram::ls4(0.85, 0.05, 1000.0, 3));
        assert_eq!(s.len(), 30);
        assert_eq!(s[4].target, Target::Force(850.0));
        assert!(s[4].upper && !s[5].upper);
        match s[9].target {
            Target::Force(f) => assert!((f - 50.0).abs() < 1e-9),
            _ => panic!(),
        }
        assert_eq!(s[29].cycle, 3);
        // second cycle climbs from the lower level
        match s[10].target {
            Target::Force(f) => assert!((f - (50.0 + 800.0 / 5.0)).abs() < 1e-9),
            _ => panic!(),
        }
    }

    #[test]
    fn ls3_steps_upper_level() {
        let s = drain(&LoadProgram::ls3(1000.0));
        assert_eq!(s.len(), 100 * 10);
        let uppers: Vec<f64> = s
            .iter()
            .filter(|x| x.upper)
            .map(|x| match x.target {
                Target::Force(f) => f,
                _ => 0.0,
            })
            .collect();
        assert!((uppers[0] - 500.0).abs() < 1e-9 && (uppers[99] - 950.0).abs() < 1e-9);
    }

    #[test]
    fn ls2_unload_reload() {
        let p = LoadProgram::ls2(1.0, 10, vec![0.5]);
        let s = drain(&p);
        // 5 ramp + 5 unload + 5 reload + 5 ramp
        assert_eq!(s.len(), 20);
        assert_eq!(s[9].target, Target::Control(0.0));
        assert_eq!(s[14].target, Target::Control(0.5));
        assert_eq!(s[19].target, Target::Control(1.0));
        let mut pf = p.clone();
        pf.unload_mode = UnloadMode::Force;
        pf.unload_to = 0.1;
        let s = drain(&pf);
        assert_eq!(s[9].target, Target::Force(10.0));
    }

    #[test]
    fn invalid_programs() {
        let mut p = LoadProgram::ls4(0.85, 0.05, 1000.0, 3);
        p.increments_per_cycle = 7;
        assert!(p.validate().is_err());
        let p = LoadProgram::ls4(0.5, 0.6, 1000.0, 3);
        assert!(p.validate().unwrap_err().to_string().contains("blocks[0]"));
        let mut p = LoadProgram::ls4(0.8, 0.05, 1000.0, 3);
        p.reference_force = None;
        assert!(p.validate().is_err());
    }
}
