//! Element matrices for the bilinear quadrilateral and the pointwise
//! material interpolations (smooth Heaviside, flow, drainage, SIMP).

use serde::{Deserialize, Serialize};

pub type Mat4 = [[f64; 4]; 4];
pub type Mat8x4 = [[f64; 4]; 8];
pub type Mat8 = [[f64; 8]; 8];

/// Design-independent element matrices of a unit-thickness element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    /// Darcy flow matrix for unit flow coefficient.
    pub kp: Mat4,
    /// Drainage matrix for unit drainage parameter.
    pub kdp: Mat4,
    /// Pressure-to-force transformation, rows are displacement DOFs.
    pub te: Mat8x4,
    /// Plane-stress stiffness for unit Young's modulus.
    pub ke: Mat8,
}

impl ElementMatrices {
    /// Closed-form matrices of the unit square element.
    pub fn reference(nu: f64) -> Self {
        let kp = scale4(
            1.0 / 6.0,
            [
                [4.0, -1.0, -2.0, -1.0],
                [-1.0, 4.0, -1.0, -2.0],
                [-2.0, -1.0, 4.0, -1.0],
                [-1.0, -2.0, -1.0, 4.0],
            ],
        );
        let kdp = scale4(
            1.0 / 36.0,
            [
                [4.0, 2.0, 1.0, 2.0],
                [2.0, 4.0, 2.0, 1.0],
                [1.0, 2.0, 4.0, 2.0],
                [2.0, 1.0, 2.0, 4.0],
            ],
        );
        let te_int: [[f64; 4]; 8] = [
            [-2.0, 2.0, 1.0, -1.0],
            [-2.0, -1.0, 1.0, 2.0],
            [-2.0, 2.0, 1.0, -1.0],
            [-1.0, -2.0, 2.0, 1.0],
            [-1.0, 1.0, 2.0, -2.0],
            [-1.0, -2.0, 2.0, 1.0],
            [-1.0, 1.0, 2.0, -2.0],
            [-2.0, -1.0, 1.0, 2.0],
        ];
        let mut te = [[0.0; 4]; 8];
        for i in 0..8 {
            for j in 0..4 {
                te[i][j] = te_int[i][j] / 12.0;
            }
        }
        ElementMatrices {
            kp,
            kdp,
            te,
            ke: reference_stiffness(nu),
        }
    }

    /// Closed-form matrices of a `dx` by `dy` rectangle of thickness `t`.
    pub fn rectangular(dx: f64, dy: f64, t: f64, nu: f64) -> Self {
        let kp1 = 2.0 * (dx * dx + dy * dy);
        let kp2 = dx * dx - 2.0 * dy * dy;
        let kp3 = dy * dy - 2.0 * dx * dx;
        let h = -0.5 * kp1;
        let kp = scale4(
            t / (6.0 * dx * dy),
            [
                [kp1, kp2, h, kp3],
                [kp2, kp1, kp3, h],
                [h, kp3, kp1, kp2],
                [kp3, h, kp2, kp1],
            ],
        );
        let kdp = scale4(
            t * dx * dy / 36.0,
            [
                [4.0, 2.0, 1.0, 2.0],
                [2.0, 4.0, 2.0, 1.0],
                [1.0, 2.0, 4.0, 2.0],
                [2.0, 1.0, 2.0, 4.0],
            ],
        );
        let (a, b) = (dx, dy);
        let te_raw = [
            [-2.0 * b, 2.0 * b, b, -b],
            [-2.0 * a, -a, a, 2.0 * a],
            [-2.0 * b, 2.0 * b, b, -b],
            [-a, -2.0 * a, 2.0 * a, a],
            [-b, b, 2.0 * b, -2.0 * b],
            [-a, -2.0 * a, 2.0 * a, a],
            [-b, b, 2.0 * b, -2.0 * b],
            [-2.0 * a, -a, a, 2.0 * a],
        ];
        let mut te = [[0.0; 4]; 8];
        for i in 0..8 {
            for j in 0..4 {
                te[i][j] = t * te_raw[i][j] / 12.0;
            }
        }
        let coords = [[0.0, 0.0], [dx, 0.0], [dx, dy], [0.0, dy]];
        ElementMatrices {
            kp,
            kdp,
            te,
            ke: quadrature(&coords, t, nu).ke,
        }
    }
}

fn scale4(s: f64, m: Mat4) -> Mat4 {
    let mut out = m;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

/// Unit-modulus plane-stress stiffness of the unit square, assembled from the
/// integer blocks of the 88-line code.
pub fn reference_stiffness(nu: f64) -> Mat8 {
    const A11: Mat4 = [
        [12.0, 3.0, -6.0, -3.0],
        [3.0, 12.0, 3.0, 0.0],
        [-6.0, 3.0, 12.0, -3.0],
        [-3.0, 0.0, -3.0, 12.0],
    ];
    const A12: Mat4 = [
        [-6.0, -3.0, 0.0, 3.0],
        [-3.0, -6.0, -3.0, -6.0],
        [0.0, -3.0, -6.0, 3.0],
        [3.0, -6.0, 3.0, -6.0],
    ];
    const B11: Mat4 = [
        [-4.0, 3.0, -2.0, 9.0],
        [3.0, -4.0, -9.0, 4.0],
        [-2.0, -9.0, -4.0, -3.0],
        [9.0, 4.0, -3.0, -4.0],
    ];
    const B12: Mat4 = [
        [2.0, -3.0, 4.0, -9.0],
        [-3.0, 2.0, 9.0, -2.0],
        [4.0, 9.0, 2.0, 3.0],
        [-9.0, -2.0, 3.0, 2.0],
    ];
    let block = |m: &Mat4, i: usize, j: usize, transpose: bool| {
        if transpose {
            m[j][i]
        } else {
            m[i][j]
        }
    };
    let s = 1.0 / (1.0 - nu * nu) / 24.0;
    let mut ke = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let (bi, bj) = (i / 4, j / 4);
            let (li, lj) = (i % 4, j % 4);
            let (a, b) = match (bi, bj) {
                (0, 1) => (block(&A12, li, lj, false), block(&B12, li, lj, false)),
                (1, 0) => (block(&A12, li, lj, true), block(&B12, li, lj, true)),
                _ => (block(&A11, li, lj, false), block(&B11, li, lj, false)),
            };
            ke[i][j] = s * (a + nu * b);
        }
    }
    ke
}

/// Element matrices of an arbitrary bilinear quadrilateral with nodes given
/// counter-clockwise from the bottom-left, integrated with 2x2 Gauss points
/// through the general isoparametric Jacobian.
pub fn quadrature(coords: &[[f64; 2]; 4], t: f64, nu: f64) -> ElementMatrices {
    const XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
    const ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];
    let g = 1.0 / 3f64.sqrt();
    let d = {
        let s = 1.0 / (1.0 - nu * nu);
        [[s, s * nu, 0.0], [s * nu, s, 0.0], [0.0, 0.0, s * (1.0 - nu) / 2.0]]
    };

    let mut kp = [[0.0; 4]; 4];
    let mut kdp = [[0.0; 4]; 4];
    let mut te = [[0.0; 4]; 8];
    let mut ke = [[0.0; 8]; 8];

    for &xi in &[-g, g] {
        for &eta in &[-g, g] {
            let mut n = [0.0; 4];
            let mut dn_dxi = [0.0; 4];
            let mut dn_deta = [0.0; 4];
            for k in 0..4 {
                n[k] = 0.25 * (1.0 + xi * XI[k]) * (1.0 + eta * ETA[k]);
                dn_dxi[k] = 0.25 * XI[k] * (1.0 + eta * ETA[k]);
                dn_deta[k] = 0.25 * ETA[k] * (1.0 + xi * XI[k]);
            }
            // J = [[dx/dxi, dy/dxi], [dx/deta, dy/deta]]
            let mut j = [[0.0; 2]; 2];
            for k in 0..4 {
                j[0][0] += dn_dxi[k] * coords[k][0];
                j[0][1] += dn_dxi[k] * coords[k][1];
                j[1][0] += dn_deta[k] * coords[k][0];
                j[1][1] += dn_deta[k] * coords[k][1];
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
            let mut dn_dx = [0.0; 4];
            let mut dn_dy = [0.0; 4];
            for k in 0..4 {
                dn_dx[k] = inv[0][0] * dn_dxi[k] + inv[0][1] * dn_deta[k];
                dn_dy[k] = inv[1][0] * dn_dxi[k] + inv[1][1] * dn_deta[k];
            }
            let w = t * det;

            for a in 0..4 {
                for b in 0..4 {
                    kp[a][b] += w * (dn_dx[a] * dn_dx[b] + dn_dy[a] * dn_dy[b]);
                    kdp[a][b] += w * n[a] * n[b];
                    te[2 * a][b] += w * n[a] * dn_dx[b];
                    te[2 * a + 1][b] += w * n[a] * dn_dy[b];
                }
            }

            let mut bmat = [[0.0; 8]; 3];
            for k in 0..4 {
                bmat[0][2 * k] = dn_dx[k];
                bmat[1][2 * k + 1] = dn_dy[k];
                bmat[2][2 * k] = dn_dy[k];
                bmat[2][2 * k + 1] = dn_dx[k];
            }
            for p in 0..8 {
                for q in 0..8 {
                    let mut s = 0.0;
                    for r in 0..3 {
                        for c in 0..3 {
                            s += bmat[r][p] * d[r][c] * bmat[c][q];
                        }
                    }
                    ke[p][q] += w * s;
                }
            }
        }
    }
    ElementMatrices { kp, kdp, te, ke }
}

/// Smooth Heaviside step `H(x; eta, beta)` normalised so that `H(0) = 0`
/// and `H(1) = 1`.
pub fn heaviside(x: f64, eta: f64, beta: f64) -> f64 {
    let a = (beta * eta).tanh();
    (a + (beta * (x - eta)).tanh()) / (a + (beta * (1.0 - eta)).tanh())
}

pub fn heaviside_derivative(x: f64, eta: f64, beta: f64) -> f64 {
    let t = (beta * (x - eta)).tanh();
    beta * (1.0 - t * t) / ((beta * eta).tanh() + (beta * (1.0 - eta)).tanh())
}

/// Step position and slope of one smooth Heaviside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub eta: f64,
    pub beta: f64,
}

impl Step {
    pub fn eval(&self, x: f64) -> f64 {
        heaviside(x, self.eta, self.beta)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        heaviside_derivative(x, self.eta, self.beta)
    }
}

/// Material, flow and drainage parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Solid Young's modulus.
    pub e1: f64,
    /// Void modulus floor.
    pub emin: f64,
    pub nu: f64,
    /// SIMP exponent.
    pub penal: f64,
    /// Void flow coefficient.
    pub kv: f64,
    /// Flow contrast, solid over void flow coefficient.
    pub epsf: f64,
    /// Pressure ratio reached at the penetration depth.
    pub r: f64,
    /// Penetration depth in element widths.
    pub dels: f64,
    /// Step of the flow coefficient.
    pub flow_step: Step,
    /// Step of the drainage coefficient.
    pub drain_step: Step,
    /// Switches the drainage term on or off.
    pub drainage: bool,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            e1: 1.0,
            emin: 1e-6,
            nu: 0.3,
            penal: 3.0,
            kv: 1.0,
            epsf: 1e-7,
            r: 0.1,
            dels: 2.0,
            flow_step: Step { eta: 0.2, beta: 8.0 },
            drain_step: Step { eta: 0.2, beta: 8.0 },
            drainage: true,
        }
    }
}

impl MaterialParams {
    /// Defaults with one step shared by flow and drainage.
    pub fn with_step(penal: f64, etaf: f64, betaf: f64) -> Self {
        let step = Step { eta: etaf, beta: betaf };
        MaterialParams {
            penal,
            flow_step: step,
            drain_step: step,
            ..Default::default()
        }
    }

    /// Drainage parameter `D_s = (ln r / dels)^2 * epsf * kv`, zero when
    /// drainage is switched off.
    pub fn ds(&self) -> f64 {
        if !self.drainage {
            return 0.0;
        }
        let k = self.r.ln() / self.dels;
        k * k * self.epsf * self.kv
    }

    /// `K_v (1 - epsf)`.
    pub fn kvs(&self) -> f64 {
        self.kv * (1.0 - self.epsf)
    }

    pub fn flow_coefficient(&self, rho: f64) -> f64 {
        self.kv * (1.0 - (1.0 - self.epsf) * self.flow_step.eval(rho))
    }

    pub fn flow_coefficient_derivative(&self, rho: f64) -> f64 {
        -self.kvs() * self.flow_step.derivative(rho)
    }

    pub fn drainage_coefficient(&self, rho: f64) -> f64 {
        self.ds() * self.drain_step.eval(rho)
    }

    pub fn drainage_coefficient_derivative(&self, rho: f64) -> f64 {
        self.ds() * self.drain_step.derivative(rho)
    }

    pub fn simp_modulus(&self, rho: f64) -> f64 {
        self.emin + rho.powf(self.penal) * (self.e1 - self.emin)
    }

    pub fn simp_modulus_derivative(&self, rho: f64) -> f64 {
        self.penal * rho.powf(self.penal - 1.0) * (self.e1 - self.emin)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::invalid(m.to_string()));
        if !(self.e1 > self.emin && self.emin > 0.0) {
            return bad("material moduli must satisfy e1 > emin > 0");
        }
        if !(self.epsf > 0.0 && self.epsf < 1.0) {
            return bad("flow contrast must lie in (0, 1)");
        }
        if !(self.r > 0.0 && self.r < 1.0 && self.dels > 0.0) {
            return bad("drainage ratio must lie in (0, 1) and penetration depth be positive");
        }
        for s in [self.flow_step, self.drain_step] {
            if !(s.eta > 0.0 && s.eta < 1.0 && s.beta > 0.0) {
                return bad("Heaviside step needs 0 < eta < 1 and beta > 0");
            }
        }
        if self.penal < 1.0 {
            return bad("SIMP exponent must be at least 1");
        }
        Ok(())
    }
}
