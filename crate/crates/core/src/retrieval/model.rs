//! Right-hand sides of the ladder equations in dimensionless time s = g_N t.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{MeanFieldState, RetrievalParams};
use crate::ode::OdeSystem;

/// Ladder couplings shared by both formulations.
#[derive(Debug, Clone)]
struct Ladder {
    n_max: usize,
    kappa_d: f64,
    kappa_r: f64,
    /// Δ_{d,n}/g_N and Δ_{r,n}/g_N, present only when phase factors are retained.
    detunings: Option<(Vec<f64>, f64)>,
}

impl Ladder {
    fn new(params: &RetrievalParams, n_max: usize) -> Self {
        let detunings = params.use_phase_factors.then(|| {
            let m = n_max as i64;
            let d: Vec<f64> = (-m..=m)
                .map(|n| (params.delta_d - 4.0 * n as f64 * params.omega_r) / params.g_n)
                .collect();
            (d, (params.delta_r + 2.0 * params.omega_r) / params.g_n)
        });
        Self {
            n_max,
            kappa_d: params.gamma_d / params.g_n,
            kappa_r: params.gamma_r / params.g_n,
            detunings,
        }
    }

    fn len(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Phase factors e^{-iΔ_{d,n} s} and e^{-iΔ_r s}.
    fn phases(&self, s: f64, out_d: &mut [Complex64]) -> Complex64 {
        match &self.detunings {
            None => {
                out_d.iter_mut().for_each(|p| *p = Complex64::new(1.0, 0.0));
                Complex64::new(1.0, 0.0)
            }
            Some((d, r)) => {
                for (p, dn) in out_d.iter_mut().zip(d) {
                    *p = Complex64::from_polar(1.0, -dn * s);
                }
                Complex64::from_polar(1.0, -r * s)
            }
        }
    }

    /// Source terms S_d = Σ c*_{n+1} b_n φ_{d,n} and S_r = Σ c*_n b_n φ_r.
    fn sources(
        &self,
        b: &[Complex64],
        c: &[Complex64],
        phd: &[Complex64],
        phr: Complex64,
    ) -> (Complex64, Complex64) {
        let l = self.len();
        let mut sd = Complex64::new(0.0, 0.0);
        let mut sr = Complex64::new(0.0, 0.0);
        for i in 0..l {
            if i + 1 < l {
                sd += c[i + 1].conj() * b[i] * phd[i];
            }
            sr += c[i].conj() * b[i];
        }
        (sd, sr * phr)
    }

    /// Atomic derivatives for given field amplitudes.
    #[allow(clippy::too_many_arguments)]
    fn atoms(
        &self,
        a_d: Complex64,
        a_r: Complex64,
        b: &[Complex64],
        c: &[Complex64],
        phd: &[Complex64],
        phr: Complex64,
        db: &mut [Complex64],
        dc: &mut [Complex64],
    ) {
        let l = self.len();
        let ar_phr = a_r * phr.conj();
        let ar_c_phr = a_r.conj() * phr;
        for i in 0..l {
            let mut v = -ar_phr * c[i];
            if i + 1 < l {
                v -= a_d * c[i + 1] * phd[i].conj();
            }
            db[i] = v;
            let mut w = ar_c_phr * b[i];
            if i >= 1 {
                w += a_d.conj() * b[i - 1] * phd[i - 1];
            }
            dc[i] = w;
        }
    }
}

fn read(y: &[f64], offset: usize, out: &mut [Complex64]) {
    for (k, z) in out.iter_mut().enumerate() {
        *z = Complex64::new(y[offset + 2 * k], y[offset + 2 * k + 1]);
    }
}

fn write(src: &[Complex64], offset: usize, y: &mut [f64]) {
    for (k, z) in src.iter().enumerate() {
        y[offset + 2 * k] = z.re;
        y[offset + 2 * k + 1] = z.im;
    }
}

/// Full damped equations with dynamical field amplitudes.
///
/// Layout: `[a_d, a_r, b_{-M..M}, c_{-M..M}, N_d/N, N_r/N]` with complex entries split
/// into (re, im).
#[derive(Debug, Clone)]
pub struct FullSystem {
    ladder: Ladder,
}

impl FullSystem {
    pub fn new(params: &RetrievalParams, n_max: usize) -> Self {
        Self {
            ladder: Ladder::new(params, n_max),
        }
    }

    pub fn pack(&self, s: &MeanFieldState, atom_number: f64) -> Vec<f64> {
        let l = self.ladder.len();
        let mut y = vec![0.0; self.dim()];
        write(&[s.a_d, s.a_r], 0, &mut y);
        write(&s.b, 4, &mut y);
        write(&s.c, 4 + 2 * l, &mut y);
        y[4 + 4 * l] = s.n_d / atom_number;
        y[5 + 4 * l] = s.n_r / atom_number;
        y
    }

    pub fn unpack(&self, y: &[f64], atom_number: f64) -> MeanFieldState {
        let l = self.ladder.len();
        let mut b = vec![Complex64::new(0.0, 0.0); l];
        let mut c = b.clone();
        read(y, 4, &mut b);
        read(y, 4 + 2 * l, &mut c);
        MeanFieldState {
            n_max: self.ladder.n_max,
            a_d: Complex64::new(y[0], y[1]),
            a_r: Complex64::new(y[2], y[3]),
            b,
            c,
            n_d: y[4 + 4 * l] * atom_number,
            n_r: y[5 + 4 * l] * atom_number,
        }
    }
}

impl OdeSystem for FullSystem {
    fn dim(&self) -> usize {
        6 + 4 * self.ladder.len()
    }

    fn rhs(&self, s: f64, y: &[f64], dy: &mut [f64]) {
        let lad = &self.ladder;
        let l = lad.len();
        let mut b = vec![Complex64::new(0.0, 0.0); l];
        let mut c = b.clone();
        let mut phd = b.clone();
        read(y, 4, &mut b);
        read(y, 4 + 2 * l, &mut c);
        let a_d = Complex64::new(y[0], y[1]);
        let a_r = Complex64::new(y[2], y[3]);
        let phr = lad.phases(s, &mut phd);
        let (sd, sr) = lad.sources(&b, &c, &phd, phr);
        let dad = -0.5 * lad.kappa_d * a_d + sd;
        let dar = -0.5 * lad.kappa_r * a_r + sr;
        let mut db = vec![Complex64::new(0.0, 0.0); l];
        let mut dc = db.clone();
        lad.atoms(a_d, a_r, &b, &c, &phd, phr, &mut db, &mut dc);
        write(&[dad, dar], 0, dy);
        write(&db, 4, dy);
        write(&dc, 4 + 2 * l, dy);
        dy[4 + 4 * l] = lad.kappa_d * a_d.norm_sqr();
        dy[5 + 4 * l] = lad.kappa_r * a_r.norm_sqr();
    }

    /// The right-hand side is quadratic in y, so a unit central difference is exact.
    fn jacobian(&self, s: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        quadratic_jacobian(self, s, y, jac);
    }
}

/// Fields replaced by their quasi-static values a_d = 2 S_d/κ_d, a_r = 2 S_r/κ_r.
///
/// Layout: `[b_{-M..M}, c_{-M..M}, N_d/N, N_r/N]`.
#[derive(Debug, Clone)]
pub struct AdiabaticSystem {
    ladder: Ladder,
}

impl AdiabaticSystem {
    pub fn new(params: &RetrievalParams, n_max: usize) -> Self {
        Self {
            ladder: Ladder::new(params, n_max),
        }
    }

    pub fn pack(&self, s: &MeanFieldState, atom_number: f64) -> Vec<f64> {
        let l = self.ladder.len();
        let mut y = vec![0.0; self.dim()];
        write(&s.b, 0, &mut y);
        write(&s.c, 2 * l, &mut y);
        y[4 * l] = s.n_d / atom_number;
        y[4 * l + 1] = s.n_r / atom_number;
        y
    }

    /// Reconstructs the slaved field amplitudes at dimensionless time `s`.
    pub fn unpack(&self, s: f64, y: &[f64], atom_number: f64) -> MeanFieldState {
        let lad = &self.ladder;
        let l = lad.len();
        let mut b = vec![Complex64::new(0.0, 0.0); l];
        let mut c = b.clone();
        let mut phd = b.clone();
        read(y, 0, &mut b);
        read(y, 2 * l, &mut c);
        let phr = lad.phases(s, &mut phd);
        let (sd, sr) = lad.sources(&b, &c, &phd, phr);
        MeanFieldState {
            n_max: lad.n_max,
            a_d: 2.0 * sd / lad.kappa_d,
            a_r: 2.0 * sr / lad.kappa_r,
            b,
            c,
            n_d: y[4 * l] * atom_number,
            n_r: y[4 * l + 1] * atom_number,
        }
    }
}

impl OdeSystem for AdiabaticSystem {
    fn dim(&self) -> usize {
        2 + 4 * self.ladder.len()
    }

    fn rhs(&self, s: f64, y: &[f64], dy: &mut [f64]) {
        let lad = &self.ladder;
        let l = lad.len();
        let mut b = vec![Complex64::new(0.0, 0.0); l];
        let mut c = b.clone();
        let mut phd = b.clone();
        read(y, 0, &mut b);
        read(y, 2 * l, &mut c);
        let phr = lad.phases(s, &mut phd);
        let (sd, sr) = lad.sources(&b, &c, &phd, phr);
        let a_d = 2.0 * sd / lad.kappa_d;
        let a_r = 2.0 * sr / lad.kappa_r;
        let mut db = vec![Complex64::new(0.0, 0.0); l];
        let mut dc = db.clone();
        lad.atoms(a_d, a_r, &b, &c, &phd, phr, &mut db, &mut dc);
        write(&db, 0, dy);
        write(&dc, 2 * l, dy);
        dy[4 * l] = lad.kappa_d * a_d.norm_sqr();
        dy[4 * l + 1] = lad.kappa_r * a_r.norm_sqr();
    }
}

fn quadratic_jacobian<S: OdeSystem>(sys: &S, s: f64, y: &[f64], jac: &mut DMatrix<f64>) {
    let n = sys.dim();
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        yp[j] = y[j] + 1.0;
        sys.rhs(s, &yp, &mut fp);
        yp[j] = y[j] - 1.0;
        sys.rhs(s, &yp, &mut fm);
        yp[j] = y[j];
        for i in 0..n {
            jac[(i, j)] = 0.5 * (fp[i] - fm[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{build_initial_state, InitialConditionSpec};

    fn params(phase: bool) -> RetrievalParams {
        let mut p =
            RetrievalParams::from_ratios(1e9, 30.0, 3.5, 2e4 * 2.0 * std::f64::consts::PI, 1e6)
                .unwrap();
        p.use_phase_factors = phase;
        p
    }

    #[test]
    fn atom_number_is_a_first_integral() {
        // d/ds Σ|b|²+|c|² = 2 Re Σ (b* b' + c* c') must vanish identically
        for phase in [false, true] {
            let p = params(phase);
            let sys = FullSystem::new(&p, 4);
            let mut st =
                build_initial_state(&InitialConditionSpec::nominal().with_chi(0.4), 4).unwrap();
            st.a_d = Complex64::new(0.01, -0.02);
            st.a_r = Complex64::new(-0.03, 0.005);
            let y = sys.pack(&st, p.atom_number);
            let mut dy = vec![0.0; sys.dim()];
            sys.rhs(123.0, &y, &mut dy);
            let rate: f64 = (4..4 + 4 * 9).map(|i| y[i] * dy[i]).sum();
            assert!(rate.abs() < 1e-16, "{rate}");
        }
    }

    #[test]
    fn bookkeeping_is_a_first_integral() {
        let p = params(false);
        let sys = FullSystem::new(&p, 4);
        let mut st =
            build_initial_state(&InitialConditionSpec::nominal().with_chi(1.3), 4).unwrap();
        st.a_d = Complex64::new(0.02, 0.01);
        st.a_r = Complex64::new(0.0, -0.04);
        let y = sys.pack(&st, p.atom_number);
        let mut dy = vec![0.0; sys.dim()];
        sys.rhs(0.0, &y, &mut dy);
        let l = 9;
        let fields = 2.0 * (y[0] * dy[0] + y[1] * dy[1] + y[2] * dy[2] + y[3] * dy[3]);
        let tallies = dy[4 + 4 * l] + dy[5 + 4 * l];
        let c_pop: f64 = (4 + 2 * l..4 + 4 * l).map(|i| 2.0 * y[i] * dy[i]).sum();
        assert!((fields + tallies - c_pop).abs() < 1e-16);
    }

    #[test]
    fn exact_jacobian_matches_fine_difference() {
        let p = params(true);
        let sys = FullSystem::new(&p, 3);
        let st = build_initial_state(&InitialConditionSpec::nominal(), 3).unwrap();
        let y = sys.pack(&st, p.atom_number);
        let n = sys.dim();
        let mut exact = DMatrix::zeros(n, n);
        sys.jacobian(5.0, &y, &mut exact);
        let mut fd = DMatrix::zeros(n, n);
        OdeSystem::jacobian(&FineDiff(&sys), 5.0, &y, &mut fd);
        assert!((exact - fd).abs().max() < 1e-6);
    }

    struct FineDiff<'a>(&'a FullSystem);
    impl OdeSystem for FineDiff<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
            self.0.rhs(t, y, dy)
        }
    }

    #[test]
    fn pack_round_trip() {
        let p = params(false);
        let full = FullSystem::new(&p, 5);
        let mut st = build_initial_state(&InitialConditionSpec::nominal(), 5).unwrap();
        st.n_d = 1234.5;
        st.a_r = Complex64::new(0.1, 0.2);
        assert_eq!(
            full.unpack(&full.pack(&st, p.atom_number), p.atom_number),
            st
        );
        let ae = AdiabaticSystem::new(&p, 5);
        let back = ae.unpack(0.0, &ae.pack(&st, p.atom_number), p.atom_number);
        assert_eq!(back.b, st.b);
        assert_eq!(back.c, st.c);
        assert_eq!(back.n_d, st.n_d);
    }
}
