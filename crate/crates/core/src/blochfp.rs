//! Fokker-Planck diffusion on the Bloch sphere.
//!
//! Randomized weak measurements of product states diffuse each Bloch vector
//! with `∂_t p = D ∇⊥² p`, `D = 2γ/3n`. Forward evolution is exact in real
//! spherical harmonics: each `(l, m)` coefficient decays as
//! `e^{−D l(l+1) t}`, and `l = 1` reproduces the single-qubit channel weight.
//!
//! The reverse process runs in reverse time `s = T − t`,
//!
//! `∂_s q = D ∇⊥² q − 2D ∇⊥·(q ∇⊥ log p(T − s))`,
//!
//! and is integrated by finite volumes on a latitude-longitude grid. Within
//! a step the longitude direction (diffusion and drift) is treated by
//! Crank-Nicolson on each ring, avoiding the polar time-step restriction,
//! while the latitude direction is advanced explicitly with Heun's method in
//! a Strang splitting. Both parts are in flux form and conserve mass.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DENSITY_FLOOR: f64 = 1e-10;

/// Diffusion constant `2γ/3n`.
pub fn diffusion_constant(gamma: f64, n: usize) -> f64 {
    2.0 * gamma / (3.0 * n as f64)
}

/// Real orthonormal spherical harmonics `Y_lm(θ, φ)` for `l ≤ l_max`,
/// indexed by `l² + l + m`.
pub fn real_harmonics(l_max: usize, theta: f64, phi: f64) -> Vec<f64> {
    let size = (l_max + 1) * (l_max + 1);
    let mut out = vec![0.0; size];
    let (x, s) = (theta.cos(), theta.sin());
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        let (c, sn) = ((m as f64 * phi).cos(), (m as f64 * phi).sin());
        let mut put = |l: usize, value: f64| {
            let base = l * l + l;
            if m == 0 {
                out[base] = value;
            } else {
                out[base + m] = std::f64::consts::SQRT_2 * value * c;
                out[base - m] = std::f64::consts::SQRT_2 * value * sn;
            }
        };
        put(m, pmm);
        if m == l_max {
            break;
        }
        let mut p_prev = pmm;
        let mut p_cur = ((2 * m + 3) as f64).sqrt() * x * pmm;
        put(m + 1, p_cur);
        for l in m + 2..=l_max {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let a_prev = ((4.0 * (lf - 1.0) * (lf - 1.0) - 1.0) / ((lf - 1.0) * (lf - 1.0) - mf * mf)).sqrt();
            let p_next = a * (x * p_cur - p_prev / a_prev);
            p_prev = p_cur;
            p_cur = p_next;
            put(l, p_cur);
        }
    }
    out
}

/// Band-limited density on one sphere in real spherical harmonics.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereField {
    pub l_max: usize,
    pub coeffs: Vec<f64>,
}

impl SphereField {
    /// The uniform density `1/4π`.
    pub fn uniform(l_max: usize) -> Self {
        let mut coeffs = vec![0.0; (l_max + 1) * (l_max + 1)];
        coeffs[0] = (1.0 / (4.0 * PI)).sqrt();
        SphereField { l_max, coeffs }
    }

    pub fn coefficient(&self, l: usize, m: i64) -> f64 {
        self.coeffs[index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        self.coeffs[index(l, m)] = value;
    }

    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        real_harmonics(self.l_max, theta, phi).iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }

    /// `∫ p dΩ = √(4π) p̃₀₀`.
    pub fn mass(&self) -> f64 {
        (4.0 * PI).sqrt() * self.coeffs[0]
    }
}

fn index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Exact forward diffusion for time `t`.
pub fn forward_fp(field: &SphereField, gamma: f64, n: usize, t: f64) -> SphereField {
    let d = diffusion_constant(gamma, n);
    let mut out = field.clone();
    for l in 0..=field.l_max {
        let decay = (-d * (l * (l + 1)) as f64 * t).exp();
        for m in -(l as i64)..=l as i64 {
            out.coeffs[index(l, m)] *= decay;
        }
    }
    out
}

/// Latitude-longitude finite-volume grid.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Cell areas per ring.
    pub area: Vec<f64>,
    /// `sin θ` at the `n_theta + 1` ring boundaries.
    face_sin: Vec<f64>,
    d_theta: f64,
    d_phi: f64,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let d_theta = PI / n_theta as f64;
        let d_phi = 2.0 * PI / n_phi as f64;
        let theta = (0..n_theta).map(|i| (i as f64 + 0.5) * d_theta).collect();
        let phi = (0..n_phi).map(|j| (j as f64 + 0.5) * d_phi).collect();
        let area =
            (0..n_theta).map(|i| ((i as f64 * d_theta).cos() - ((i + 1) as f64 * d_theta).cos()) * d_phi).collect();
        let face_sin = (0..=n_theta).map(|i| (i as f64 * d_theta).sin()).collect();
        SphereGrid { n_theta, n_phi, theta, phi, area, face_sin, d_theta, d_phi }
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Field values at cell centres, ring-major.
    pub fn sample(&self, field: &SphereField) -> Vec<f64> {
        let basis = self.basis(field.l_max);
        basis.iter().map(|y| y.iter().zip(&field.coeffs).map(|(a, b)| a * b).sum()).collect()
    }

    fn basis(&self, l_max: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        for &t in &self.theta {
            for &p in &self.phi {
                out.push(real_harmonics(l_max, t, p));
            }
        }
        out
    }

    pub fn mass(&self, values: &[f64]) -> f64 {
        values.chunks(self.n_phi).zip(&self.area).map(|(ring, a)| a * ring.iter().sum::<f64>()).sum()
    }

    /// Area-weighted `L²` distance.
    pub fn l2_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
        self.mass(&diff).sqrt()
    }

    /// Gershgorin bound on the explicit latitude operator for log-density
    /// `lp`, used for the stability check.
    fn theta_rate_bound(&self, d: f64, lp: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_theta {
            let mut rate = 0.0;
            for face in [i, i + 1] {
                if face == 0 || face == self.n_theta {
                    continue;
                }
                let k = d * self.face_sin[face] * self.d_phi / self.d_theta;
                let g = (0..self.n_phi)
                    .map(|j| (lp[face * self.n_phi + j] - lp[(face - 1) * self.n_phi + j]).abs())
                    .fold(0.0, f64::max);
                rate += k * (1.0 + g);
            }
            worst = worst.max(2.0 * rate / self.area[i]);
        }
        worst
    }

    /// Latitude part of `−∇·J` with `J = −D∇q + 2D q ∇ log p`.
    fn theta_operator(&self, d: f64, q: &[f64], lp: &[f64], out: &mut [f64]) {
        let np = self.n_phi;
        out.iter_mut().for_each(|v| *v = 0.0);
        for face in 1..self.n_theta {
            let k = d * self.face_sin[face] * self.d_phi / self.d_theta;
            for j in 0..np {
                let (lo, hi) = ((face - 1) * np + j, face * np + j);
                let g = lp[hi] - lp[lo];
                let flux = k * ((q[hi] - q[lo]) - (q[hi] + q[lo]) * g);
                out[lo] += flux;
                out[hi] -= flux;
            }
        }
        for (i, ring) in out.chunks_mut(np).enumerate() {
            ring.iter_mut().for_each(|v| *v /= self.area[i]);
        }
    }

    /// Longitude tridiagonal coefficients `(lower, diag, upper)` of ring `i`.
    fn phi_operator(&self, d: f64, i: usize, lp_ring: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let np = self.n_phi;
        let kappa = d * self.d_theta / (self.theta[i].sin() * self.d_phi);
        let area = self.area[i];
        let g: Vec<f64> = (0..np).map(|j| lp_ring[(j + 1) % np] - lp_ring[j]).collect();
        let a: Vec<f64> = g.iter().map(|g| kappa * (1.0 - g)).collect();
        let b: Vec<f64> = g.iter().map(|g| kappa * (-1.0 - g)).collect();
        let lower = (0..np).map(|j| -b[(j + np - 1) % np] / area).collect();
        let diag = (0..np).map(|j| (b[j] - a[(j + np - 1) % np]) / area).collect();
        let upper = (0..np).map(|j| a[j] / area).collect();
        (lower, diag, upper)
    }

    /// Full spatial operator of the reverse equation.
    pub fn backward_rhs(&self, d: f64, q: &[f64], lp: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        self.theta_operator(d, q, lp, &mut out);
        let np = self.n_phi;
        for i in 0..self.n_theta {
            let (lo, di, up) = self.phi_operator(d, i, &lp[i * np..(i + 1) * np]);
            for j in 0..np {
                let idx = i * np + j;
                out[idx] += lo[j] * q[i * np + (j + np - 1) % np] + di[j] * q[idx] + up[j] * q[i * np + (j + 1) % np];
            }
        }
        out
    }
}

/// Solves a periodic tridiagonal system (Sherman-Morrison on the Thomas
/// algorithm). `lower[0]` couples to the last entry, `upper[n−1]` to the
/// first.
fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let alpha = upper[n - 1];
    let beta = lower[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let x = thomas(lower, &b, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(lower, &b, upper, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(x, z)| x - fact * z).collect()
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[derive(Clone, Debug)]
pub struct BackwardReport {
    pub q: Vec<f64>,
    pub steps: usize,
    /// Largest relative change of total mass over the run.
    pub mass_drift: f64,
}

/// Log-density of the forward solution on the grid, floored.
pub fn log_density(grid: &SphereGrid, p: &SphereField) -> Result<Vec<f64>> {
    grid.sample(p)
        .into_iter()
        .map(|v| if v < -DENSITY_FLOOR { Err(Error::NegativeDensity(v)) } else { Ok(v.max(DENSITY_FLOOR).ln()) })
        .collect()
}

/// Integrates the reverse equation from `q0` at forward time `t_total`
/// down to time zero, with the score taken from the forward evolution of
/// `p0`.
pub fn backward_fp(
    grid: &SphereGrid,
    q0: &[f64],
    p0: &SphereField,
    gamma: f64,
    n: usize,
    t_total: f64,
    dt: f64,
) -> Result<BackwardReport> {
    if q0.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: q0.len() });
    }
    let d = diffusion_constant(gamma, n);
    let steps = (t_total / dt).round().max(0.0) as usize;
    let h = if steps > 0 { t_total / steps as f64 } else { 0.0 };
    let np = grid.n_phi;
    let basis = grid.basis(p0.l_max);
    let mut q = q0.to_vec();
    let mass0 = grid.mass(&q);
    let mut mass_drift = 0.0f64;
    let mut k1 = vec![0.0; q.len()];
    let mut k2 = vec![0.0; q.len()];
    let mut stage = vec![0.0; q.len()];
    for step in 0..steps {
        let t_mid = t_total - (step as f64 + 0.5) * h;
        let field = forward_fp(p0, gamma, n, t_mid);
        let lp: Vec<f64> = basis
            .iter()
            .map(|y| {
                let v: f64 = y.iter().zip(&field.coeffs).map(|(a, b)| a * b).sum();
                if v < -DENSITY_FLOOR {
                    Err(Error::NegativeDensity(v))
                } else {
                    Ok(v.max(DENSITY_FLOOR).ln())
                }
            })
            .collect::<Result<_>>()?;
        if step == 0 {
            let bound = 2.0 / grid.theta_rate_bound(d, &lp);
            if h / 2.0 > bound {
                return Err(Error::Unstable { dt: h, bound: 2.0 * bound });
            }
        }
        let half_theta = |q: &mut Vec<f64>, k1: &mut Vec<f64>, k2: &mut Vec<f64>, stage: &mut Vec<f64>| {
            let hh = h / 2.0;
            grid.theta_operator(d, q, &lp, k1);
            for ((s, q), k) in stage.iter_mut().zip(q.iter()).zip(k1.iter()) {
                *s = q + hh * k;
            }
            grid.theta_operator(d, stage, &lp, k2);
            for ((q, a), b) in q.iter_mut().zip(k1.iter()).zip(k2.iter()) {
                *q += 0.5 * hh * (a + b);
            }
        };
        half_theta(&mut q, &mut k1, &mut k2, &mut stage);
        q.par_chunks_mut(np).enumerate().for_each(|(i, ring)| {
            let (lo, di, up) = grid.phi_operator(d, i, &lp[i * np..(i + 1) * np]);
            let rhs: Vec<f64> = (0..np)
                .map(|j| {
                    ring[j] + 0.5 * h * (lo[j] * ring[(j + np - 1) % np] + di[j] * ring[j] + up[j] * ring[(j + 1) % np])
                })
                .collect();
            let lo_i: Vec<f64> = lo.iter().map(|v| -0.5 * h * v).collect();
            let di_i: Vec<f64> = di.iter().map(|v| 1.0 - 0.5 * h * v).collect();
            let up_i: Vec<f64> = up.iter().map(|v| -0.5 * h * v).collect();
            ring.copy_from_slice(&solve_cyclic(&lo_i, &di_i, &up_i, &rhs));
        });
        half_theta(&mut q, &mut k1, &mut k2, &mut stage);
        mass_drift = mass_drift.max(((grid.mass(&q) - mass0) / mass0).abs());
    }
    Ok(BackwardReport { q, steps, mass_drift })
}
