//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Each binding is a thin wrapper over a plain Rust function so the same
//! code paths are testable off the browser.

use wasm_bindgen::prelude::*;

use presstop::driver::{Optimizer, ProblemSource, RunConfig};
use presstop::element::{heaviside, ElementMatrices, MaterialParams};
use presstop::flow::FlowSolver;
use presstop::mesh::Mesh;
use presstop::problems::{make_problem, ProblemKind};
use presstop::structure::{assemble_transformation, net_force, pressure_forces};

fn js_err(e: presstop::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Node values reordered so row 0 is the top of the domain.
pub fn nodal_grid(mesh: &Mesh, p: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.nno);
    for i in 0..=mesh.nely {
        for j in 0..=mesh.nelx {
            out.push(p[mesh.node(i, j)]);
        }
    }
    out
}

/// Element values reordered so row 0 is the top of the domain.
pub fn element_grid(mesh: &Mesh, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.nel);
    for r in 0..mesh.nely {
        for c in 0..mesh.nelx {
            out.push(x[mesh.elem(r, c)]);
        }
    }
    out
}

/// Flow solve on the frozen layout of a problem.
#[wasm_bindgen]
pub struct PressureField {
    nelx: usize,
    nely: usize,
    values: Vec<f64>,
    solid: Vec<f64>,
    mfx: f64,
    mfy: f64,
}

#[wasm_bindgen]
impl PressureField {
    pub fn nelx(&self) -> usize {
        self.nelx
    }

    pub fn nely(&self) -> usize {
        self.nely
    }

    /// Nodal pressures, `(nely + 1) x (nelx + 1)`, top row first.
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Element densities of the frozen layout, top row first.
    pub fn solid(&self) -> Vec<f64> {
        self.solid.clone()
    }

    pub fn mfx(&self) -> f64 {
        self.mfx
    }

    pub fn mfy(&self) -> f64 {
        self.mfy
    }
}

pub fn pressure_field(problem: &str, nelx: usize, nely: usize, drainage: bool) -> presstop::Result<PressureField> {
    let kind: ProblemKind = problem.parse()?;
    let spec = make_problem(kind, nelx, nely)?;
    let params = MaterialParams {
        drainage,
        ..MaterialParams::default()
    };
    let em = ElementMatrices::reference(params.nu);
    let field = spec.frozen_field();
    let flow = FlowSolver::new(&spec.mesh, &spec.pressure_bc)?;
    let a = flow.assemble(&em, &field, &params)?;
    let (p, _) = flow.solve(&a)?;
    let t = assemble_transformation(&spec.mesh, &em);
    let (fx, fy) = net_force(&pressure_forces(&t, &p));
    Ok(PressureField {
        nelx,
        nely,
        values: nodal_grid(&spec.mesh, &p),
        solid: element_grid(&spec.mesh, &field),
        mfx: fx.abs(),
        mfy: fy.abs(),
    })
}

#[wasm_bindgen(js_name = solvePressure)]
pub fn solve_pressure(problem: &str, nelx: usize, nely: usize, drainage: bool) -> Result<PressureField, JsError> {
    pressure_field(problem, nelx, nely, drainage).map_err(js_err)
}

/// An optimization run advanced from the page a few iterations at a time.
#[wasm_bindgen]
pub struct Session {
    opt: Optimizer,
}

impl Session {
    pub fn create(
        problem: &str,
        nelx: usize,
        nely: usize,
        volfrac: f64,
        rmin: f64,
        lst: bool,
    ) -> presstop::Result<Self> {
        let kind: ProblemKind = problem.parse()?;
        let mut cfg = RunConfig::for_problem(kind);
        cfg.problem = ProblemSource::Named { name: kind };
        cfg.nelx = nelx;
        cfg.nely = nely;
        cfg.volfrac = volfrac;
        cfg.rmin = rmin;
        cfg.lst = lst;
        cfg.maxit = 1000;
        let spec = cfg.build_problem()?;
        Ok(Session {
            opt: Optimizer::new(spec, &cfg)?,
        })
    }

    /// Runs up to `n` iterations; returns how many ran.
    pub fn advance(&mut self, n: usize) -> presstop::Result<usize> {
        let mut ran = 0;
        while ran < n && !self.opt.is_done() {
            self.opt.step()?;
            ran += 1;
        }
        Ok(ran)
    }
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(
        problem: &str,
        nelx: usize,
        nely: usize,
        volfrac: f64,
        rmin: f64,
        lst: bool,
    ) -> Result<Session, JsError> {
        Session::create(problem, nelx, nely, volfrac, rmin, lst).map_err(js_err)
    }

    pub fn step(&mut self, n: usize) -> Result<usize, JsError> {
        self.advance(n).map_err(js_err)
    }

    pub fn iteration(&self) -> usize {
        self.opt.iteration()
    }

    pub fn done(&self) -> bool {
        self.opt.is_done()
    }

    pub fn nelx(&self) -> usize {
        self.opt.model().spec.mesh.nelx
    }

    pub fn nely(&self) -> usize {
        self.opt.model().spec.mesh.nely
    }

    /// Physical densities, top row first.
    pub fn densities(&self) -> Vec<f64> {
        element_grid(&self.opt.model().spec.mesh, self.opt.xphys())
    }

    /// Pressures of the last analysed design, top row first; empty before
    /// the first step.
    pub fn pressure(&self) -> Vec<f64> {
        self.opt
            .pressure()
            .map(|p| nodal_grid(&self.opt.model().spec.mesh, p))
            .unwrap_or_default()
    }

    /// Normalized objective history.
    pub fn objective(&self) -> Vec<f64> {
        self.opt.history().objective.clone()
    }

    pub fn change(&self) -> f64 {
        self.opt.history().change.last().copied().unwrap_or(f64::NAN)
    }
}

/// Samples of the smoothed-Heaviside coefficients over `rho` in `[0, 1]`:
/// `[rho, K/Kv, D/Ds, E/E1]` per sample, flattened.
#[wasm_bindgen(js_name = interpolationCurves)]
pub fn interpolation_curves(etaf: f64, betaf: f64, penal: f64, samples: usize) -> Vec<f64> {
    let params = MaterialParams::with_step(penal, etaf, betaf);
    let n = samples.max(2);
    let mut out = Vec::with_capacity(4 * n);
    for k in 0..n {
        let rho = k as f64 / (n - 1) as f64;
        out.push(rho);
        out.push(params.flow_coefficient(rho) / params.kv);
        out.push(heaviside(rho, etaf, betaf));
        out.push(params.simp_modulus(rho) / params.e1);
    }
    out
}
