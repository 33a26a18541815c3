//! Optimization loop: filtering, state and adjoint solves, MMA update and
//! convergence bookkeeping.

pub mod config;
pub mod export;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::element::{ElementMatrices, MaterialParams};
use crate::error::{Error, Result};
use crate::filters::{self, FilterKernel, ProjectionParams};
use crate::flow::FlowSolver;
use crate::linalg::CscMatrix;
use crate::mma::{MmaConfig, MmaState};
use crate::problems::{make_problem, CustomProblem, ProblemKind, ProblemSpec};
use crate::sensitivity::{compliance_sensitivities, solve_adjoint, volume_constraint, AdjointState};
use crate::structure::{assemble_transformation, compliance, pressure_forces, ElasticSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSource {
    Named {
        name: ProblemKind,
    },
    Custom {
        pressure: String,
        fix: String,
        solid: String,
        void: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub nelx: usize,
    pub nely: usize,
    pub volfrac: f64,
    pub penal: f64,
    pub rmin: f64,
    pub etaf: f64,
    pub betaf: f64,
    /// Include load sensitivities.
    pub lst: bool,
    pub maxit: usize,
    /// Terminal steepness of the Heaviside projection; `None` disables it.
    pub betamax: Option<f64>,
    pub change_tol: f64,
    pub move_limit: f64,
    pub drainage: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Published parameters of a benchmark.
    pub fn for_problem(kind: ProblemKind) -> Self {
        let d = kind.defaults();
        RunConfig {
            problem: ProblemSource::Named { name: kind },
            nelx: d.nelx,
            nely: d.nely,
            volfrac: d.volfrac,
            penal: d.penal,
            rmin: d.rmin,
            etaf: d.etaf,
            betaf: d.betaf,
            lst: d.lst,
            maxit: d.maxit,
            betamax: None,
            change_tol: 0.01,
            move_limit: 0.1,
            drainage: true,
            out: None,
        }
    }

    pub fn problem_name(&self) -> String {
        match &self.problem {
            ProblemSource::Named { name } => name.to_string(),
            ProblemSource::Custom { .. } => "custom".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.volfrac > 0.0 && self.volfrac < 1.0) {
            return bad(format!("volfrac must lie in (0, 1), got {}", self.volfrac));
        }
        if !(self.penal >= 1.0) {
            return bad(format!("penal must be at least 1, got {}", self.penal));
        }
        if !(self.rmin > 0.0) || !self.rmin.is_finite() {
            return bad(format!("rmin must be positive, got {}", self.rmin));
        }
        if self.maxit == 0 {
            return bad("maxit must be at least 1".to_string());
        }
        if !(self.etaf > 0.0 && self.etaf < 1.0) || !(self.betaf > 0.0) {
            return bad("flow step needs 0 < etaf < 1 and betaf > 0".to_string());
        }
        if let Some(b) = self.betamax {
            if !(b >= 1.0) {
                return bad(format!("betamax must be at least 1, got {b}"));
            }
        }
        if !(self.change_tol >= 0.0) || !(self.move_limit > 0.0) {
            return bad("change_tol must be non-negative and move_limit positive".to_string());
        }
        Ok(())
    }

    pub fn material(&self) -> MaterialParams {
        MaterialParams {
            drainage: self.drainage,
            ..MaterialParams::with_step(self.penal, self.etaf, self.betaf)
        }
    }

    pub fn build_problem(&self) -> Result<ProblemSpec> {
        match &self.problem {
            ProblemSource::Named { name } => make_problem(*name, self.nelx, self.nely),
            ProblemSource::Custom {
                pressure,
                fix,
                solid,
                void,
            } => CustomProblem {
                pressure: pressure.clone(),
                fix: fix.clone(),
                solid: solid.clone(),
                void: void.clone(),
            }
            .build(self.nelx, self.nely),
        }
    }
}

/// Starting design: active elements at the value that meets the volume
/// budget once non-design regions are accounted for.
pub fn initialize(spec: &ProblemSpec, volfrac: f64) -> Result<Vec<f64>> {
    let nel = spec.mesh.nel;
    let act = spec.active();
    if act.is_empty() {
        return Err(Error::invalid("problem has no design elements"));
    }
    let value = (volfrac * (nel - spec.ndv.len()) as f64 - spec.nds.len() as f64) / act.len() as f64;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::invalid(format!(
            "volume fraction {volfrac} is incompatible with the non-design regions \
             (active elements would start at {value:.4})"
        )));
    }
    let mut x = vec![0.0; nel];
    for &e in &act {
        x[e] = value;
    }
    for &e in &spec.nds {
        x[e] = 1.0;
    }
    Ok(x)
}

/// Converged state solves for one physical density field.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub pressure: Vec<f64>,
    pub displacement: Vec<f64>,
    pub lam1: Vec<f64>,
    pub compliance: f64,
    /// `dC/dxphys`.
    pub sensitivities: Vec<f64>,
}

/// Design-independent data of one problem: element matrices, cached
/// solvers, transformation matrix and filter.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ProblemSpec,
    pub params: MaterialParams,
    pub em: ElementMatrices,
    pub filter: FilterKernel,
    pub t: CscMatrix,
    flow: FlowSolver,
    elastic: ElasticSolver,
}

impl Model {
    pub fn new(spec: ProblemSpec, params: MaterialParams, rmin: f64) -> Result<Self> {
        spec.validate()?;
        params.validate()?;
        let em = ElementMatrices::reference(params.nu);
        let filter = FilterKernel::new(spec.mesh.nelx, spec.mesh.nely, rmin)?;
        let t = assemble_transformation(&spec.mesh, &em);
        let flow = FlowSolver::new(&spec.mesh, &spec.pressure_bc)?;
        let elastic = ElasticSolver::new(&spec.mesh, &spec.structural_bc)?;
        Ok(Model {
            spec,
            params,
            em,
            filter,
            t,
            flow,
            elastic,
        })
    }

    /// Pressure field only.
    pub fn pressure(&self, xphys: &[f64]) -> Result<Vec<f64>> {
        let a = self.flow.assemble(&self.em, xphys, &self.params)?;
        Ok(self.flow.solve(&a)?.0)
    }

    /// Flow, elasticity and adjoint solves, compliance and its gradient with
    /// respect to the physical densities.
    pub fn analyze(&self, xphys: &[f64], lst: bool) -> Result<Analysis> {
        let a = self.flow.assemble(&self.em, xphys, &self.params)?;
        let (p, a_factor) = self.flow.solve(&a)?;
        let f = pressure_forces(&self.t, &p);
        let moduli: Vec<f64> = xphys.iter().map(|&x| self.params.simp_modulus(x)).collect();
        let k = self.elastic.assemble(&self.em, &moduli)?;
        let u = self.elastic.solve(&k, &f)?;
        let c = compliance(&u, &k);
        let lam1 = solve_adjoint(&a_factor, &self.flow.partition, &self.t, &u)?;
        let state = AdjointState {
            u: &u,
            p: &p,
            lam1: &lam1,
        };
        let dc = compliance_sensitivities(&self.spec.mesh, &self.em, &self.params, xphys, &state, lst);
        Ok(Analysis {
            pressure: p,
            displacement: u,
            lam1,
            compliance: c,
            sensitivities: dc,
        })
    }

    /// Filtered and (optionally) projected field of a design vector, with
    /// non-design regions imposed. Returns `(xtilde, xphys)`.
    pub fn physical(&self, x: &[f64], proj: Option<&ProjectionParams>) -> Result<(Vec<f64>, Vec<f64>)> {
        let xtilde = self.filter.apply(x)?;
        let mut xphys = match proj {
            Some(pp) => filters::project(&xtilde, pp),
            None => xtilde.clone(),
        };
        self.impose_regions(&mut xphys);
        Ok((xtilde, xphys))
    }

    pub fn impose_regions(&self, xphys: &mut [f64]) {
        for &e in &self.spec.nds {
            xphys[e] = 1.0;
        }
        for &e in &self.spec.ndv {
            xphys[e] = 0.0;
        }
    }

    /// Chain rule from `d/dxphys` back to the design vector.
    ///
    /// Sensitivities of non-design elements are passed through the filter
    /// unchanged, as in the published loop.
    pub fn to_design(&self, dphys: &[f64], xtilde: &[f64], proj: Option<&ProjectionParams>) -> Result<Vec<f64>> {
        match proj {
            Some(pp) => {
                let slope = filters::project_derivative(xtilde, pp);
                let divisor: Vec<f64> = self.filter.hs.iter().zip(&slope).map(|(h, s)| h / s).collect();
                self.filter.backproject(dphys, &divisor)
            }
            None => self.filter.backproject(dphys, &self.filter.hs),
        }
    }

    /// Compliance of a design vector and its gradient with respect to it.
    pub fn evaluate(&self, x: &[f64], proj: Option<&ProjectionParams>, lst: bool) -> Result<(f64, Vec<f64>)> {
        let (xtilde, xphys) = self.physical(x, proj)?;
        let an = self.analyze(&xphys, lst)?;
        let g = self.to_design(&an.sensitivities, &xtilde, proj)?;
        Ok((an.compliance, g))
    }
}

/// Per-iteration records. Compliance belongs to the design analysed in that
/// iteration; volume fraction and change describe the design after the
/// update.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Raw compliance `u^T K u`.
    pub compliance: Vec<f64>,
    /// Compliance scaled by `1000 / C_1`; the published objective values
    /// are on this scale.
    pub objective: Vec<f64>,
    pub volfrac: Vec<f64>,
    pub change: Vec<f64>,
    /// Volume constraint value of the analysed design.
    pub constraint: Vec<f64>,
}

impl History {
    pub fn len(&self) -> usize {
        self.compliance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.compliance.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub xphys: Vec<f64>,
    pub pressure: Vec<f64>,
    pub displacement: Vec<f64>,
    pub history: History,
    pub iterations: usize,
    pub converged: bool,
    /// Grayness of the final design in percent.
    pub grayness: f64,
    /// Volume constraint value of the final design.
    pub final_constraint: f64,
    pub final_beta: Option<f64>,
}

impl OptResult {
    pub fn final_compliance(&self) -> f64 {
        self.history.compliance.last().copied().unwrap_or(f64::NAN)
    }

    /// Final compliance on the normalized scale (1000 at the first iterate).
    pub fn final_objective(&self) -> f64 {
        self.history.objective.last().copied().unwrap_or(f64::NAN)
    }
}

/// A failed run, carrying what was recorded before the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error} (after {} completed iterations)", history.len())]
pub struct RunFailure {
    #[source]
    pub error: Error,
    pub history: Box<History>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        RunFailure {
            error,
            history: Box::default(),
        }
    }
}

/// Runs the optimization for `cfg`, building the problem it names.
pub fn run(cfg: &RunConfig) -> std::result::Result<OptResult, RunFailure> {
    cfg.validate()?;
    let spec = cfg.build_problem()?;
    optimize(spec, cfg)
}

/// Per-iteration observer; return `false` to stop early.
pub type Observer<'a> = dyn FnMut(usize, &History, &[f64]) -> bool + 'a;

pub fn optimize(spec: ProblemSpec, cfg: &RunConfig) -> std::result::Result<OptResult, RunFailure> {
    optimize_with(spec, cfg, &mut |_, _, _| true)
}

pub fn optimize_with(
    spec: ProblemSpec,
    cfg: &RunConfig,
    observer: &mut Observer<'_>,
) -> std::result::Result<OptResult, RunFailure> {
    let mut opt = Optimizer::new(spec, cfg)?;
    while !opt.is_done() {
        opt.step().map_err(|error| RunFailure {
            error,
            history: Box::new(opt.history().clone()),
        })?;
        if !observer(opt.iteration(), opt.history(), opt.xphys()) {
            break;
        }
    }
    opt.finish().map_err(RunFailure::from)
}

/// The optimization loop, advanced one design update at a time.
pub struct Optimizer {
    model: Model,
    cfg: RunConfig,
    act: Vec<usize>,
    x: Vec<f64>,
    xtilde: Vec<f64>,
    xphys: Vec<f64>,
    proj: Option<ProjectionParams>,
    mma: MmaState,
    history: History,
    normf: f64,
    change: f64,
    iter: usize,
    last: Option<Analysis>,
}

impl Optimizer {
    pub fn new(spec: ProblemSpec, cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let x = initialize(&spec, cfg.volfrac)?;
        let model = Model::new(spec, cfg.material(), cfg.rmin)?;
        let act = model.spec.active();
        let proj = cfg.betamax.map(ProjectionParams::new);
        let xtilde = x.clone();
        // the first analysis uses the unfiltered starting design
        let xphys = match &proj {
            Some(pp) => filters::project(&xtilde, pp),
            None => x.clone(),
        };
        let mma = MmaState::new(&act.iter().map(|&e| x[e]).collect::<Vec<_>>(), MmaConfig::new(1));
        Ok(Optimizer {
            model,
            cfg: cfg.clone(),
            act,
            x,
            xtilde,
            xphys,
            proj,
            mma,
            history: History::default(),
            normf: 1.0,
            change: f64::INFINITY,
            iter: 0,
            last: None,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Design variables (before filtering).
    pub fn design(&self) -> &[f64] {
        &self.x
    }

    /// Physical densities of the current design.
    pub fn xphys(&self) -> &[f64] {
        &self.xphys
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iter
    }

    pub fn beta(&self) -> Option<f64> {
        self.proj.map(|p| p.beta)
    }

    /// Change below tolerance. With projection the test waits until the
    /// continuation has run its course, otherwise a run can settle at a low
    /// `beta` and never become black and white.
    pub fn converged(&self) -> bool {
        let sharp = self.proj.is_none_or(|p| p.beta > p.betamax);
        sharp && self.change <= self.cfg.change_tol
    }

    pub fn is_done(&self) -> bool {
        self.iter >= self.cfg.maxit || self.converged()
    }

    /// Pressure field of the last analysed design, if any.
    pub fn pressure(&self) -> Option<&[f64]> {
        self.last.as_ref().map(|a| a.pressure.as_slice())
    }

    /// Analyses the current design and takes one MMA step. On error the
    /// optimizer state is unchanged.
    pub fn step(&mut self) -> Result<()> {
        let iter = self.iter + 1;
        let (model, cfg) = (&self.model, &self.cfg);
        let an = model.analyze(&self.xphys, cfg.lst)?;
        if !an.compliance.is_finite() || !(an.compliance > 0.0) {
            return Err(Error::NumericDomain(format!(
                "compliance {} at iteration {iter}",
                an.compliance
            )));
        }
        let (vol, dvol) = volume_constraint(&self.xphys, cfg.volfrac)?;
        let normf = if iter == 1 { 1000.0 / an.compliance } else { self.normf };
        let dc_scaled: Vec<f64> = an.sensitivities.iter().map(|d| d * normf).collect();
        let dc = model.to_design(&dc_scaled, &self.xtilde, self.proj.as_ref())?;
        let dv = model.to_design(&dvol, &self.xtilde, self.proj.as_ref())?;

        let act = &self.act;
        let xval: Vec<f64> = act.iter().map(|&e| self.x[e]).collect();
        let xmin: Vec<f64> = xval.iter().map(|v| (v - cfg.move_limit).max(0.0)).collect();
        let xmax: Vec<f64> = xval.iter().map(|v| (v + cfg.move_limit).min(1.0)).collect();
        let df0: Vec<f64> = act.iter().map(|&e| dc[e]).collect();
        let dfdx = vec![act.iter().map(|&e| dv[e]).collect::<Vec<f64>>()];
        let mut mma = self.mma.clone();
        let step = mma.update(&xval, an.compliance * normf, &df0, &[vol], &dfdx, &xmin, &xmax)?;

        let mut x = self.x.clone();
        for (k, &e) in act.iter().enumerate() {
            x[e] = step.x[k];
        }
        let xtilde = model.filter.apply(&x)?;
        let mut proj = self.proj;
        let mut xphys = match proj.as_mut() {
            Some(pp) => {
                *pp = filters::continuation_step(iter, *pp);
                filters::project(&xtilde, pp)
            }
            None => xtilde.clone(),
        };
        model.impose_regions(&mut xphys);

        self.change = step.x.iter().zip(&xval).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        self.history.compliance.push(an.compliance);
        self.history.objective.push(an.compliance * normf);
        self.history
            .volfrac
            .push(xphys.iter().sum::<f64>() / xphys.len() as f64);
        self.history.change.push(self.change);
        self.history.constraint.push(vol);
        self.x = x;
        self.xtilde = xtilde;
        self.xphys = xphys;
        self.proj = proj;
        self.mma = mma;
        self.normf = normf;
        self.iter = iter;
        self.last = Some(an);
        Ok(())
    }

    /// Final design and the fields of its last analysis.
    pub fn finish(self) -> Result<OptResult> {
        let converged = self.converged();
        let an = self
            .last
            .ok_or_else(|| Error::invalid("no optimization iteration has been run"))?;
        let (final_constraint, _) = volume_constraint(&self.xphys, self.cfg.volfrac)?;
        Ok(OptResult {
            grayness: filters::grayness_measure(&self.xphys),
            final_constraint,
            converged,
            iterations: self.iter,
            pressure: an.pressure,
            displacement: an.displacement,
            xphys: self.xphys,
            history: self.history,
            final_beta: self.proj.map(|p| p.beta),
        })
    }
}
