//! Method of Moving Asymptotes for `min f0(x)` subject to `f_i(x) <= 0`.
//!
//! Each call builds the convex separable approximation around the current
//! point and solves it through its dual: the primal minimizer is available
//! in closed form for fixed multipliers, and the concave dual is maximized
//! by projected Newton steps with Armijo backtracking.
//!
//! The external move limit is expected in the `xmin`/`xmax` arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmaConfig {
    pub a0: f64,
    /// Per-constraint coefficients of `z`. Only zero is supported.
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub asyinit: f64,
    pub asyincr: f64,
    pub asydecr: f64,
    pub albefa: f64,
    pub raa0: f64,
    /// Dual KKT tolerance.
    pub tol: f64,
    pub max_newton: usize,
}

impl MmaConfig {
    pub fn new(m: usize) -> Self {
        MmaConfig {
            a0: 1.0,
            a: vec![0.0; m],
            c: vec![1000.0; m],
            d: vec![0.0; m],
            asyinit: 0.5,
            asyincr: 1.2,
            asydecr: 0.7,
            albefa: 0.1,
            raa0: 1e-5,
            tol: 1e-9,
            max_newton: 200,
        }
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmaState {
    pub config: MmaConfig,
    pub low: Vec<f64>,
    pub upp: Vec<f64>,
    pub xold1: Vec<f64>,
    pub xold2: Vec<f64>,
    /// Number of completed updates.
    pub iter: usize,
}

/// Result of one update.
#[derive(Debug, Clone, PartialEq)]
pub struct MmaStep {
    pub x: Vec<f64>,
    /// Constraint multipliers of the subproblem.
    pub lambda: Vec<f64>,
    /// Artificial constraint relaxations.
    pub y: Vec<f64>,
    pub z: f64,
    /// Projected-gradient norm of the dual at exit.
    pub kkt: f64,
    pub newton_steps: usize,
}

/// Convex separable subproblem for fixed asymptotes.
struct Subproblem<'a> {
    low: &'a [f64],
    upp: &'a [f64],
    alfa: Vec<f64>,
    beta: Vec<f64>,
    p0: Vec<f64>,
    q0: Vec<f64>,
    /// `m x n`, row-major.
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: &'a [f64],
    d: &'a [f64],
}

impl Subproblem<'_> {
    fn lambda_upper(&self, i: usize) -> f64 {
        if self.d[i] > 0.0 {
            f64::INFINITY
        } else {
            self.c[i]
        }
    }

    fn primal_x(&self, lam: &[f64]) -> Vec<f64> {
        (0..self.p0.len())
            .map(|j| {
                let (pj, qj) = self.pq(lam, j);
                let (sp, sq) = (pj.sqrt(), qj.sqrt());
                let x = (sp * self.low[j] + sq * self.upp[j]) / (sp + sq);
                x.max(self.alfa[j]).min(self.beta[j])
            })
            .collect()
    }

    fn pq(&self, lam: &[f64], j: usize) -> (f64, f64) {
        let mut pj = self.p0[j];
        let mut qj = self.q0[j];
        for (i, &l) in lam.iter().enumerate() {
            pj += l * self.p[i][j];
            qj += l * self.q[i][j];
        }
        (pj, qj)
    }

    fn primal_y(&self, lam: &[f64]) -> Vec<f64> {
        lam.iter()
            .enumerate()
            .map(|(i, &l)| {
                if self.d[i] > 0.0 {
                    ((l - self.c[i]) / self.d[i]).max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Approximated constraint functions `g_i(x)` (without `b`).
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(pi, qi)| {
                (0..x.len())
                    .map(|j| pi[j] / (self.upp[j] - x[j]) + qi[j] / (x[j] - self.low[j]))
                    .sum()
            })
            .collect()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        (0..x.len())
            .map(|j| self.p0[j] / (self.upp[j] - x[j]) + self.q0[j] / (x[j] - self.low[j]))
            .sum()
    }

    /// Dual value and gradient at `lam`.
    fn dual(&self, lam: &[f64]) -> (f64, Vec<f64>) {
        let x = self.primal_x(lam);
        let y = self.primal_y(lam);
        let g = self.constraints(&x);
        let mut w = self.objective(&x);
        let mut grad = vec![0.0; lam.len()];
        for i in 0..lam.len() {
            w += lam[i] * (g[i] - self.b[i] - y[i]) + self.c[i] * y[i] + 0.5 * self.d[i] * y[i] * y[i];
            grad[i] = g[i] - self.b[i] - y[i];
        }
        (w, grad)
    }

    /// Dual Hessian (negative semidefinite).
    fn dual_hessian(&self, lam: &[f64]) -> Vec<Vec<f64>> {
        let m = lam.len();
        let x = self.primal_x(lam);
        let mut h = vec![vec![0.0; m]; m];
        for j in 0..x.len() {
            if x[j] <= self.alfa[j] || x[j] >= self.beta[j] {
                continue;
            }
            let (pj, qj) = self.pq(lam, j);
            let (ux, xl) = (self.upp[j] - x[j], x[j] - self.low[j]);
            let curv = 2.0 * pj / (ux * ux * ux) + 2.0 * qj / (xl * xl * xl);
            let dg: Vec<f64> = (0..m)
                .map(|i| self.p[i][j] / (ux * ux) - self.q[i][j] / (xl * xl))
                .collect();
            for a in 0..m {
                for b in 0..m {
                    h[a][b] -= dg[a] * dg[b] / curv;
                }
            }
        }
        for i in 0..m {
            if self.d[i] > 0.0 && lam[i] > self.c[i] {
                h[i][i] -= 1.0 / self.d[i];
            }
        }
        h
    }

    fn project(&self, lam: &mut [f64]) {
        for (i, l) in lam.iter_mut().enumerate() {
            *l = l.max(0.0).min(self.lambda_upper(i));
        }
    }

    fn kkt(&self, lam: &[f64], grad: &[f64]) -> f64 {
        let mut trial: Vec<f64> = lam.iter().zip(grad).map(|(l, g)| l + g).collect();
        self.project(&mut trial);
        trial.iter().zip(lam).map(|(t, l)| (t - l).abs()).fold(0.0, f64::max)
    }
}

/// Solves `H s = r` for small dense symmetric `H` by Gaussian elimination
/// with partial pivoting; `None` when (numerically) singular.
fn dense_solve(mut h: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    let scale = h.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let piv = (k..n).max_by(|&a, &b| h[a][k].abs().total_cmp(&h[b][k].abs()))?;
        if h[piv][k].abs() <= 1e-14 * scale {
            return None;
        }
        h.swap(k, piv);
        r.swap(k, piv);
        for i in k + 1..n {
            let f = h[i][k] / h[k][k];
            for j in k..n {
                h[i][j] -= f * h[k][j];
            }
            r[i] -= f * r[k];
        }
    }
    let mut s = vec![0.0; n];
    for k in (0..n).rev() {
        let t: f64 = (k + 1..n).map(|j| h[k][j] * s[j]).sum();
        s[k] = (r[k] - t) / h[k][k];
    }
    Some(s)
}

impl MmaState {
    /// Fresh state for `n` variables starting at `x0`.
    pub fn new(x0: &[f64], config: MmaConfig) -> Self {
        MmaState {
            config,
            low: vec![0.0; x0.len()],
            upp: vec![1.0; x0.len()],
            xold1: x0.to_vec(),
            xold2: x0.to_vec(),
            iter: 0,
        }
    }

    /// One MMA step from `x`. On success the asymptotes and iterate history
    /// are advanced; on error the state is left unchanged.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        x: &[f64],
        f0: f64,
        df0: &[f64],
        fval: &[f64],
        dfdx: &[Vec<f64>],
        xmin: &[f64],
        xmax: &[f64],
    ) -> Result<MmaStep> {
        let n = x.len();
        let cfg = &self.config;
        let m = cfg.m();
        self.check_inputs(x, f0, df0, fval, dfdx, xmin, xmax)?;

        let iter = self.iter + 1;
        let mut low = vec![0.0; n];
        let mut upp = vec![0.0; n];
        let width: Vec<f64> = (0..n).map(|j| (xmax[j] - xmin[j]).max(1e-5)).collect();
        for j in 0..n {
            if iter <= 2 {
                low[j] = x[j] - cfg.asyinit * width[j];
                upp[j] = x[j] + cfg.asyinit * width[j];
            } else {
                let osc = (x[j] - self.xold1[j]) * (self.xold1[j] - self.xold2[j]);
                let factor = if osc > 0.0 {
                    cfg.asyincr
                } else if osc < 0.0 {
                    cfg.asydecr
                } else {
                    1.0
                };
                low[j] = x[j] - factor * (self.xold1[j] - self.low[j]);
                upp[j] = x[j] + factor * (self.upp[j] - self.xold1[j]);
            }
        }

        let alfa: Vec<f64> = (0..n)
            .map(|j| xmin[j].max(low[j] + cfg.albefa * (x[j] - low[j])))
            .collect();
        let beta: Vec<f64> = (0..n)
            .map(|j| xmax[j].min(upp[j] - cfg.albefa * (upp[j] - x[j])))
            .collect();

        let approx = |grad: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut pv = vec![0.0; n];
            let mut qv = vec![0.0; n];
            // regularization measured in units of the gradient keeps the
            // subproblem invariant under scaling of the function
            let gnorm = grad.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let reg = cfg.raa0 * if gnorm > 0.0 { gnorm } else { 1.0 };
            for j in 0..n {
                let (ux, xl) = (upp[j] - x[j], x[j] - low[j]);
                let pos = grad[j].max(0.0);
                let neg = (-grad[j]).max(0.0);
                let pq = 0.001 * (pos + neg) + reg / width[j];
                pv[j] = (pos + pq) * ux * ux;
                qv[j] = (neg + pq) * xl * xl;
            }
            (pv, qv)
        };
        let (p0, q0) = approx(df0);
        let mut p = Vec::with_capacity(m);
        let mut q = Vec::with_capacity(m);
        for row in dfdx {
            let (pi, qi) = approx(row);
            p.push(pi);
            q.push(qi);
        }
        let b: Vec<f64> = (0..m)
            .map(|i| {
                (0..n)
                    .map(|j| p[i][j] / (upp[j] - x[j]) + q[i][j] / (x[j] - low[j]))
                    .sum::<f64>()
                    - fval[i]
            })
            .collect();

        let sub = Subproblem {
            low: &low,
            upp: &upp,
            alfa,
            beta,
            p0,
            q0,
            p,
            q,
            b,
            c: &cfg.c,
            d: &cfg.d,
        };
        let (lambda, kkt, newton_steps) = solve_dual(&sub, cfg.tol, cfg.max_newton)?;
        let xnew = sub.primal_x(&lambda);
        let y = sub.primal_y(&lambda);

        self.low = low;
        self.upp = upp;
        self.xold2 = std::mem::replace(&mut self.xold1, x.to_vec());
        self.iter = iter;
        Ok(MmaStep {
            x: xnew,
            lambda,
            y,
            z: 0.0,
            kkt,
            newton_steps,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn check_inputs(
        &self,
        x: &[f64],
        f0: f64,
        df0: &[f64],
        fval: &[f64],
        dfdx: &[Vec<f64>],
        xmin: &[f64],
        xmax: &[f64],
    ) -> Result<()> {
        let n = x.len();
        let cfg = &self.config;
        let m = cfg.m();
        if m == 0 || cfg.a.len() != m || cfg.d.len() != m {
            return Err(Error::invalid("MMA needs at least one constraint and matching a, c, d"));
        }
        if cfg.a.iter().any(|&a| a != 0.0) {
            return Err(Error::invalid("MMA dual solve supports a = 0 only"));
        }
        if cfg.c.iter().any(|&c| !(c > 0.0)) || cfg.d.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::invalid("MMA needs c > 0 and d >= 0"));
        }
        if df0.len() != n || xmin.len() != n || xmax.len() != n || self.xold1.len() != n {
            return Err(Error::invalid("MMA vectors differ in length"));
        }
        if fval.len() != m || dfdx.len() != m || dfdx.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("constraint values or gradients have the wrong shape"));
        }
        let finite = f0.is_finite()
            && [x, df0, fval, xmin, xmax]
                .iter()
                .all(|v| v.iter().all(|a| a.is_finite()))
            && dfdx.iter().all(|r| r.iter().all(|a| a.is_finite()));
        if !finite {
            return Err(Error::invalid("non-finite value passed to MMA"));
        }
        for j in 0..n {
            if !(xmin[j] <= x[j] && x[j] <= xmax[j]) {
                return Err(Error::invalid(format!(
                    "x[{j}] = {} outside [{}, {}]",
                    x[j], xmin[j], xmax[j]
                )));
            }
        }
        Ok(())
    }
}

/// Last step length along `dir` with an ascending dual slope, when the slope
/// turns negative before `t = 1`.
fn kink(sub: &Subproblem<'_>, lam: &[f64], dir: &[f64]) -> Option<f64> {
    let slope = |t: f64| {
        let mut trial: Vec<f64> = lam.iter().zip(dir).map(|(l, d)| l + t * d).collect();
        sub.project(&mut trial);
        let (_, g) = sub.dual(&trial);
        g.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>()
    };
    if slope(0.0) <= 0.0 || slope(1.0) >= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Maximizes the concave dual over `0 <= lambda <= c` (or `lambda >= 0`
/// where `d > 0`).
fn solve_dual(sub: &Subproblem<'_>, tol: f64, max_steps: usize) -> Result<(Vec<f64>, f64, usize)> {
    let m = sub.b.len();
    let scale = 1.0 + sub.b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut lam = vec![0.0; m];
    let (mut w, mut grad) = sub.dual(&lam);
    let mut kkt = sub.kkt(&lam, &grad);
    for step in 0..max_steps {
        if kkt <= tol * scale {
            return Ok((lam, kkt, step));
        }
        // coordinates held at a bound by the gradient
        let held: Vec<bool> = (0..m)
            .map(|i| (lam[i] <= 0.0 && grad[i] <= 0.0) || (lam[i] >= sub.lambda_upper(i) && grad[i] >= 0.0))
            .collect();
        let free: Vec<usize> = (0..m).filter(|&i| !held[i]).collect();
        let h = sub.dual_hessian(&lam);
        let hff: Vec<Vec<f64>> = free.iter().map(|&a| free.iter().map(|&b| -h[a][b]).collect()).collect();
        let rf: Vec<f64> = free.iter().map(|&i| grad[i]).collect();
        let mut dir = vec![0.0; m];
        let newton = dense_solve(hff, rf.clone());
        match newton {
            Some(s) if s.iter().zip(&rf).map(|(a, b)| a * b).sum::<f64>() > 0.0 => {
                for (k, &i) in free.iter().enumerate() {
                    dir[i] = s[k];
                }
            }
            _ => {
                // flat or degenerate curvature: gradient ascent sized to span
                // the multiplier range
                let gmax = rf.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let span = free
                    .iter()
                    .map(|&i| sub.lambda_upper(i).min(1.0 + 2.0 * lam[i]))
                    .fold(0.0_f64, f64::max);
                for &i in &free {
                    dir[i] = grad[i] * span / gmax;
                }
            }
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = lam.iter().zip(&dir).map(|(l, d)| l + t * d).collect();
            sub.project(&mut trial);
            let (wt, gt) = sub.dual(&trial);
            let gain: f64 = grad
                .iter()
                .zip(trial.iter().zip(&lam))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            // close to the optimum dual values stop resolving in floating
            // point; a smaller residual then decides
            let sharper = sub.kkt(&trial, &gt) < 0.5 * kkt && wt >= w - 1e-12 * w.abs().max(1.0);
            if (wt >= w + 1e-4 * gain || sharper) && trial != lam {
                lam = trial;
                w = wt;
                grad = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // x(lambda) can jump between its bounds over a span of lambda
            // too small to resolve (steep projections do this), leaving the
            // dual gradient without a root; bisect for where the slope
            // along `dir` changes sign
            if let Some(t) = kink(sub, &lam, &dir) {
                let mut trial: Vec<f64> = lam.iter().zip(&dir).map(|(l, d)| l + t * d).collect();
                sub.project(&mut trial);
                if trial == lam {
                    return Ok((lam, kkt, step + 1));
                }
                (w, grad) = sub.dual(&trial);
                lam = trial;
                accepted = true;
            }
        }
        kkt = sub.kkt(&lam, &grad);
        if !accepted && kkt > tol * scale {
            return Err(Error::OptimizerFailure {
                reason: format!("dual line search stalled after {step} Newton steps"),
                residual: kkt,
            });
        }
    }
    if kkt <= tol * scale {
        return Ok((lam, kkt, max_steps));
    }
    Err(Error::OptimizerFailure {
        reason: format!("dual solve did not converge in {max_steps} Newton steps"),
        residual: kkt,
    })
}
