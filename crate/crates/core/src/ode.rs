//! Adaptive integrators for real first-order systems y' = f(t, y).
//!
//! [`Dopri5`] is the explicit Dormand-Prince 5(4) pair for non-stiff problems.
//! [`Radau5`] is the three-stage Radau IIA collocation method (order 5) with simplified
//! Newton iterations, decoupled into one real and one complex linear system per step.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;

/// A real ODE system.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);

    /// ∂f/∂y. The default uses central differences.
    fn jacobian(&self, t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        let n = self.dim();
        let mut yp = y.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for j in 0..n {
            let h = 1e-7 * y[j].abs().max(1e-3);
            yp[j] = y[j] + h;
            self.rhs(t, &yp, &mut fp);
            yp[j] = y[j] - h;
            self.rhs(t, &yp, &mut fm);
            yp[j] = y[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    pub jacobians: usize,
    pub decompositions: usize,
}

const MAX_STEPS: usize = 2_000_000;

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], tol: Tolerances) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol.atol + tol.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Initial step guess (Hairer, Nørsett & Wanner, Solving ODEs I, II.4).
fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    order: i32,
    tol: Tolerances,
) -> f64 {
    let n = y.len();
    let scale = |i: usize| tol.atol + tol.rtol * y[i].abs();
    let d0 = ((0..n).map(|i| (y[i] / scale(i)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = ((0..n).map(|i| (f0[i] / scale(i)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t + h0, &y1, &mut f1);
    let d2 = ((0..n)
        .map(|i| ((f1[i] - f0[i]) / scale(i)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (order as f64 + 1.0))
    };
    (100.0 * h0).min(h1).min(span)
}

/// Dormand-Prince 5(4) with FSAL and a standard I-controller.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerances,
    h: Option<f64>,
    fsal: Option<(f64, Vec<f64>)>,
    pub stats: SolverStats,
}

mod dp {
    pub const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    pub const A21: f64 = 0.2;
    pub const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    pub const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
    pub const A5: [f64; 4] = [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ];
    pub const A6: [f64; 5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    pub const B: [f64; 6] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ];
    pub const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            h: None,
            fsal: None,
            stats: SolverStats::default(),
        }
    }

    /// Integrate from `*t` to `t_end`, landing on `t_end` exactly.
    pub fn advance<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
    ) -> Result<(), StepFailure> {
        let n = y.len();
        if t_end <= *t {
            return Ok(());
        }
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        match &self.fsal {
            Some((tf, f)) if *tf == *t => k[0].copy_from_slice(f),
            _ => {
                sys.rhs(*t, y, &mut k[0]);
                self.stats.rhs_evaluations += 1;
            }
        }
        let mut h = match self.h {
            Some(h) => h,
            None => initial_step(sys, *t, y, &k[0], t_end - *t, 5, self.tol),
        };
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut err = vec![0.0; n];
        let mut steps = 0;
        while *t < t_end {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(StepFailure {
                    t: *t,
                    reason: "maximum number of steps exceeded".into(),
                });
            }
            let last = *t + h >= t_end;
            let h_step = if last { t_end - *t } else { h };
            if h_step <= 1e-14 * t.abs().max(1e-300) {
                return Err(StepFailure {
                    t: *t,
                    reason: format!("step size underflow (h = {h_step:e})"),
                });
            }
            let stage = |coeffs: &[f64], k: &[Vec<f64>], out: &mut [f64]| {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, a) in coeffs.iter().enumerate() {
                        acc += a * k[j][i];
                    }
                    out[i] = y[i] + h_step * acc;
                }
            };
            stage(&[dp::A21], &k, &mut ytmp);
            sys.rhs(*t + dp::C[1] * h_step, &ytmp, &mut k[1]);
            stage(&dp::A3, &k, &mut ytmp);
            sys.rhs(*t + dp::C[2] * h_step, &ytmp, &mut k[2]);
            stage(&dp::A4, &k, &mut ytmp);
            sys.rhs(*t + dp::C[3] * h_step, &ytmp, &mut k[3]);
            stage(&dp::A5, &k, &mut ytmp);
            sys.rhs(*t + dp::C[4] * h_step, &ytmp, &mut k[4]);
            stage(&dp::A6, &k, &mut ytmp);
            sys.rhs(*t + h_step, &ytmp, &mut k[5]);
            stage(&dp::B, &k, &mut ynew);
            let t_new = if last { t_end } else { *t + h_step };
            sys.rhs(t_new, &ynew, &mut k[6]);
            self.stats.rhs_evaluations += 6;
            for i in 0..n {
                err[i] = h_step * (0..7).map(|j| dp::E[j] * k[j][i]).sum::<f64>();
            }
            let e = error_norm(&err, y, &ynew, self.tol);
            if e <= 1.0 {
                self.stats.accepted += 1;
                *t = t_new;
                y.copy_from_slice(&ynew);
                k.swap(0, 6);
                let fac = if e == 0.0 {
                    5.0
                } else {
                    (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
                };
                // keep the controller's proposal even when the last step was clipped
                h = if last {
                    h.max(h_step * fac)
                } else {
                    h_step * fac
                };
            } else {
                self.stats.rejected += 1;
                h = h_step * (0.9 * e.powf(-0.2)).max(0.2);
            }
        }
        self.h = Some(h);
        self.fsal = Some((*t, k[0].clone()));
        Ok(())
    }
}

/// Radau IIA coefficients and the similarity transform that block-diagonalizes A⁻¹.
#[derive(Debug, Clone)]
struct RadauTableau {
    c: Vector3<f64>,
    t: Matrix3<f64>,
    t_inv: Matrix3<f64>,
    /// Real eigenvalue of A⁻¹.
    gamma: f64,
    /// Lower 2×2 block of T⁻¹A⁻¹T is [[alpha, beta], [-beta, alpha]].
    alpha: f64,
    beta: f64,
    /// Error-estimate weights.
    dd: Vector3<f64>,
}

fn radau_matrix() -> Matrix3<f64> {
    let s6 = 6f64.sqrt();
    Matrix3::new(
        (88.0 - 7.0 * s6) / 360.0,
        (296.0 - 169.0 * s6) / 1800.0,
        (-2.0 + 3.0 * s6) / 225.0,
        (296.0 + 169.0 * s6) / 1800.0,
        (88.0 + 7.0 * s6) / 360.0,
        (-2.0 - 3.0 * s6) / 225.0,
        (16.0 - s6) / 36.0,
        (16.0 + s6) / 36.0,
        1.0 / 9.0,
    )
}

impl RadauTableau {
    fn new() -> Self {
        let s6 = 6f64.sqrt();
        let a = radau_matrix();
        let c = Vector3::new((4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0);
        let a_inv = a.try_inverse().expect("Radau matrix is invertible");

        // A⁻¹ has one real eigenvalue and a complex pair; take eigenvectors as null vectors
        // of (A⁻¹ - λI) via the cross product of two of its rows.
        let eig = a_inv.complex_eigenvalues();
        let (real_idx, _) = eig
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.im.abs().total_cmp(&y.1.im.abs()))
            .unwrap();
        let gamma = eig[real_idx].re;
        let pair = eig
            .iter()
            .copied()
            .find(|z| z.im > 0.0)
            .expect("complex pair");
        let null_vector = |lambda: Complex64| -> [Complex64; 3] {
            let m = |i: usize, j: usize| {
                Complex64::new(a_inv[(i, j)], 0.0)
                    - if i == j {
                        lambda
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
            };
            let r0 = [m(0, 0), m(0, 1), m(0, 2)];
            let r1 = [m(1, 0), m(1, 1), m(1, 2)];
            [
                r0[1] * r1[2] - r0[2] * r1[1],
                r0[2] * r1[0] - r0[0] * r1[2],
                r0[0] * r1[1] - r0[1] * r1[0],
            ]
        };
        let v1 = null_vector(Complex64::new(gamma, 0.0));
        let v2 = null_vector(pair);
        let t = Matrix3::new(
            v1[0].re, v2[0].re, v2[0].im, //
            v1[1].re, v2[1].re, v2[1].im, //
            v1[2].re, v2[2].re, v2[2].im,
        );
        let t_inv = t.try_inverse().expect("eigenvector basis");
        let lambda = t_inv * a_inv * t;
        Self {
            c,
            t,
            t_inv,
            gamma,
            alpha: lambda[(1, 1)],
            beta: lambda[(1, 2)],
            dd: Vector3::new(
                -(13.0 + 7.0 * s6) / 3.0,
                (-13.0 + 7.0 * s6) / 3.0,
                -1.0 / 3.0,
            ),
        }
    }
}

/// Three-stage Radau IIA, order 5, L-stable.
#[derive(Debug, Clone)]
pub struct Radau5 {
    tol: Tolerances,
    tab: RadauTableau,
    h: Option<f64>,
    pub stats: SolverStats,
}

const NEWTON_MAX_ITER: usize = 7;

impl Radau5 {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            tab: RadauTableau::new(),
            h: None,
            stats: SolverStats::default(),
        }
    }

    /// Integrate from `*t` to `t_end`, landing on `t_end` exactly.
    pub fn advance<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
    ) -> Result<(), StepFailure> {
        let n = y.len();
        if t_end <= *t {
            return Ok(());
        }
        let tab = &self.tab;
        let tol = self.tol;
        let uround = f64::EPSILON;
        let fnewt = (10.0 * uround / tol.rtol).max(0.03f64.min(tol.rtol.sqrt()));

        let mut f0 = vec![0.0; n];
        sys.rhs(*t, y, &mut f0);
        self.stats.rhs_evaluations += 1;
        let mut h = match self.h {
            Some(h) => h,
            None => initial_step(sys, *t, y, &f0, t_end - *t, 3, tol),
        };
        let mut jac = DMatrix::<f64>::zeros(n, n);
        let mut jac_fresh = false;
        let mut first = true;
        let mut reject = false;
        let mut eta_old: f64 = 1.0;
        let mut steps = 0;

        let mut z = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut w = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut fz = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut ytmp = vec![0.0; n];

        while *t < t_end {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(StepFailure {
                    t: *t,
                    reason: "maximum number of steps exceeded".into(),
                });
            }
            if !jac_fresh {
                sys.jacobian(*t, y, &mut jac);
                self.stats.jacobians += 1;
                jac_fresh = true;
            }
            let last = *t + h >= t_end;
            let h_step = if last { t_end - *t } else { h };
            if h_step <= 1e-14 * t.abs().max(1e-300) {
                return Err(StepFailure {
                    t: *t,
                    reason: format!("step size underflow (h = {h_step:e})"),
                });
            }

            // E1 = γ/h I - J (real), E2 = (α - iβ)/h I - J (complex)
            let fac1 = tab.gamma / h_step;
            let shift2 = Complex64::new(tab.alpha, -tab.beta) / h_step;
            let mut e1 = -jac.clone();
            let mut e2 =
                DMatrix::<Complex64>::from_fn(n, n, |i, j| Complex64::new(-jac[(i, j)], 0.0));
            for i in 0..n {
                e1[(i, i)] += fac1;
                e2[(i, i)] += shift2;
            }
            let lu1 = e1.lu();
            let lu2 = e2.lu();
            self.stats.decompositions += 1;

            for v in z.iter_mut().chain(w.iter_mut()) {
                v.iter_mut().for_each(|x| *x = 0.0);
            }
            let scal: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.abs()).collect();

            // simplified Newton iteration on the transformed stage increments
            let mut converged = false;
            let mut faccon: f64 = 1.0;
            let mut dyno_old: f64 = 0.0;
            let mut theta: f64 = 0.0;
            let mut newt = 0;
            let mut diverged = false;
            while newt < NEWTON_MAX_ITER {
                for s in 0..3 {
                    for i in 0..n {
                        ytmp[i] = y[i] + z[s][i];
                    }
                    sys.rhs(*t + tab.c[s] * h_step, &ytmp, &mut fz[s]);
                }
                self.stats.rhs_evaluations += 3;
                let mut r1 = DVector::<f64>::zeros(n);
                let mut r2 = DVector::<Complex64>::zeros(n);
                for i in 0..n {
                    let g = tab.t_inv * Vector3::new(fz[0][i], fz[1][i], fz[2][i]);
                    r1[i] = g[0] - fac1 * w[0][i];
                    let re = g[1] - (tab.alpha * w[1][i] + tab.beta * w[2][i]) / h_step;
                    let im = g[2] - (-tab.beta * w[1][i] + tab.alpha * w[2][i]) / h_step;
                    r2[i] = Complex64::new(re, im);
                }
                let dw1 = lu1.solve(&r1).ok_or_else(|| StepFailure {
                    t: *t,
                    reason: "singular Newton matrix".into(),
                })?;
                let dw2 = lu2.solve(&r2).ok_or_else(|| StepFailure {
                    t: *t,
                    reason: "singular Newton matrix".into(),
                })?;
                let mut dyno = 0.0;
                for i in 0..n {
                    let d = [dw1[i], dw2[i].re, dw2[i].im];
                    for (s, ds) in d.iter().enumerate() {
                        w[s][i] += ds;
                        dyno += (ds / scal[i]).powi(2);
                    }
                }
                let dyno = (dyno / (3 * n) as f64).sqrt();
                for i in 0..n {
                    let zi = tab.t * Vector3::new(w[0][i], w[1][i], w[2][i]);
                    z[0][i] = zi[0];
                    z[1][i] = zi[1];
                    z[2][i] = zi[2];
                }
                if newt >= 1 {
                    theta = dyno / dyno_old;
                    if theta >= 0.99 || !dyno.is_finite() {
                        diverged = true;
                        break;
                    }
                    faccon = theta / (1.0 - theta);
                    let remaining = (NEWTON_MAX_ITER - 1 - newt) as i32;
                    if theta.powi(remaining) / (1.0 - theta) * dyno > fnewt {
                        diverged = true;
                        break;
                    }
                } else {
                    faccon = eta_old.max(uround).powf(0.8);
                }
                dyno_old = dyno.max(uround);
                newt += 1;
                if faccon * dyno <= fnewt {
                    converged = true;
                    break;
                }
            }
            if !converged || diverged {
                self.stats.rejected += 1;
                h *= 0.5;
                reject = true;
                // the Jacobian may be stale after several failures; refresh it
                jac_fresh = false;
                continue;
            }
            eta_old = faccon;

            // error estimate
            let mut f2 = vec![0.0; n];
            for i in 0..n {
                f2[i] = (tab.dd[0] * z[0][i] + tab.dd[1] * z[1][i] + tab.dd[2] * z[2][i]) / h_step;
            }
            let rhs_err = DVector::from_fn(n, |i, _| f0[i] + f2[i]);
            let mut cont = lu1.solve(&rhs_err).expect("factorization succeeded above");
            for i in 0..n {
                cont[i] /= fac1;
                ytmp[i] = y[i] + z[2][i];
            }
            let mut err = error_norm(cont.as_slice(), y, &ytmp, tol).max(1e-10);
            if err >= 1.0 && (first || reject) {
                let probe: Vec<f64> = (0..n).map(|i| y[i] + cont[i]).collect();
                let mut fp = vec![0.0; n];
                sys.rhs(*t, &probe, &mut fp);
                self.stats.rhs_evaluations += 1;
                let rhs2 = DVector::from_fn(n, |i, _| fp[i] + f2[i]);
                let mut cont2 = lu1.solve(&rhs2).expect("factorization succeeded above");
                for v in cont2.iter_mut() {
                    *v /= fac1;
                }
                err = error_norm(cont2.as_slice(), y, &ytmp, tol).max(1e-10);
            }

            let fac = 0.9f64
                .min(0.9 * (2 * NEWTON_MAX_ITER + 1) as f64 / (2 * NEWTON_MAX_ITER + newt) as f64);
            let quot = (1.0 / 8.0f64).max(5.0f64.min(err.powf(0.25) / fac));
            let h_new = h_step / quot;
            if err < 1.0 {
                self.stats.accepted += 1;
                first = false;
                reject = false;
                *t = if last { t_end } else { *t + h_step };
                y.copy_from_slice(&ytmp);
                sys.rhs(*t, y, &mut f0);
                self.stats.rhs_evaluations += 1;
                jac_fresh = false;
                h = if last { h.max(h_new) } else { h_new };
                let _ = theta;
            } else {
                self.stats.rejected += 1;
                reject = true;
                h = if first { 0.1 * h_step } else { h_new };
            }
        }
        self.h = Some(h);
        Ok(())
    }
}
