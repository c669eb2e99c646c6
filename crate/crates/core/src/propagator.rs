//! Linear propagators, the pseudo-spectral nonlinearity and the
//! integrating-factor RK4 stepper.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    dealias_in_place, forward, inverse, project_zero_x_mode_in_place, RealField, SpectralField,
    SpectralGrid,
};
use crate::symbols::{dispersion, dissipation, lambda_symbol, ModelParams};

/// Multiplier of `W(t)` at one mode: `exp(i t P - |t| rho)`.
#[inline]
pub fn semigroup_factor(xi: f64, eta: f64, t: f64, params: &ModelParams) -> Complex64 {
    let p = dispersion(xi, eta, params);
    let r = dissipation(xi, params);
    Complex64::from_polar((-t.abs() * r).exp(), t * p)
}

/// Applies `W(t)`; negative `t` uses the `|t|` extension, so `W(-t)` is not
/// the inverse of `W(t)` when dissipation is on.
pub fn apply_semigroup(f: &SpectralField, t: f64, params: &ModelParams) -> SpectralField {
    let mut out = f.clone();
    apply_semigroup_in_place(&mut out, t, params);
    out
}

pub fn apply_semigroup_in_place(f: &mut SpectralField, t: f64, params: &ModelParams) {
    let zero_mean = f.is_zero_x_mean();
    let grid = f.grid().clone();
    f.apply_multiplier(|i| {
        let (xi, eta) = grid.zeta(i);
        semigroup_factor(xi, eta, t, params)
    });
    f.set_zero_x_mean(zero_mean);
}

/// Applies the unitary group `U(t) = exp(i t P(D))`.
pub fn apply_unitary(f: &SpectralField, t: f64, params: &ModelParams) -> SpectralField {
    let mut out = f.clone();
    let zero_mean = f.is_zero_x_mean();
    let grid = f.grid().clone();
    out.apply_multiplier(|i| {
        let (xi, eta) = grid.zeta(i);
        Complex64::from_polar(1.0, t * dispersion(xi, eta, params))
    });
    out.set_zero_x_mean(zero_mean);
    out
}

/// `Lambda(u^2)` evaluated pseudo-spectrally: square in physical space, then
/// dealias, apply `Lambda^` and drop the `xi = 0` column.
pub fn nonlinear_rhs(f: &SpectralField, params: &ModelParams) -> SpectralField {
    let u = inverse(f);
    let sq: Vec<f64> = u.data().iter().map(|v| v * v).collect();
    let grid = f.grid().clone();
    let mut out = forward(&RealField::from_raw(grid.clone(), sq));
    dealias_in_place(&mut out);
    out.apply_multiplier(|i| lambda_symbol(grid.zeta(i).0, params));
    project_zero_x_mode_in_place(&mut out);
    out
}

/// `Lambda(u v)` for two fields on one grid.
pub fn nonlinear_product(a: &SpectralField, b: &SpectralField, params: &ModelParams) -> SpectralField {
    let (ua, ub) = (inverse(a), inverse(b));
    let prod: Vec<f64> = ua.data().iter().zip(ub.data()).map(|(x, y)| x * y).collect();
    let grid = a.grid().clone();
    let mut out = forward(&RealField::from_raw(grid.clone(), prod));
    dealias_in_place(&mut out);
    out.apply_multiplier(|i| lambda_symbol(grid.zeta(i).0, params));
    project_zero_x_mode_in_place(&mut out);
    out
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    pub field: SpectralField,
    pub params: ModelParams,
    pub dt: f64,
}

/// Integrating-factor RK4: the linear flow is applied exactly through `W`
/// multipliers and classical RK4 integrates `-Lambda(u^2)` in the variable
/// `v(t) = W(t)^{-1} u(t)`.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<SpectralGrid>,
    params: ModelParams,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    nonlinear: bool,
}

impl Stepper {
    pub fn new(grid: Arc<SpectralGrid>, params: ModelParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let factors = |h: f64| -> Vec<Complex64> {
            (0..grid.len())
                .map(|i| {
                    let (xi, eta) = grid.zeta(i);
                    semigroup_factor(xi, eta, h, &params)
                })
                .collect()
        };
        let half = factors(dt / 2.0);
        let full = factors(dt);
        if half.iter().chain(&full).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "dt * max|rho| overflows the linear propagator".into(),
            ));
        }
        Ok(Self {
            grid,
            params,
            dt,
            half,
            full,
            nonlinear: true,
        })
    }

    /// Turns the nonlinear term off, leaving the exact linear flow.
    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn rhs(&self, f: &SpectralField) -> SpectralField {
        if self.nonlinear {
            let mut n = nonlinear_rhs(f, &self.params);
            n.scale(-1.0);
            n
        } else {
            let mut z = SpectralField::zeros(self.grid.clone());
            z.set_zero_x_mean(true);
            z
        }
    }

    fn propagate(f: &SpectralField, factors: &[Complex64]) -> SpectralField {
        let mut out = f.clone();
        let flag = f.is_zero_x_mean();
        out.apply_multiplier(|i| factors[i]);
        out.set_zero_x_mean(flag);
        out
    }

    /// Advances `u` by one step of size `dt`.
    pub fn advance(&self, u: &SpectralField) -> SpectralField {
        let h = self.dt;
        let eu_half = Self::propagate(u, &self.half);

        let k1 = self.rhs(u);

        let mut a = u.clone();
        a.add_scaled(h / 2.0, &k1).expect("same grid");
        let k2 = self.rhs(&Self::propagate(&a, &self.half));

        let mut b = eu_half.clone();
        b.add_scaled(h / 2.0, &k2).expect("same grid");
        let k3 = self.rhs(&b);

        let mut c = Self::propagate(u, &self.full);
        c.add_scaled(h, &Self::propagate(&k3, &self.half)).expect("same grid");
        let k4 = self.rhs(&c);

        // u_{n+1} = E u + h/6 (E k1 + 2 E_{1/2} (k2 + k3) + k4)
        let mut mid = k2;
        mid.add_scaled(1.0, &k3).expect("same grid");
        let mut out = Self::propagate(u, &self.full);
        out.add_scaled(h / 6.0, &Self::propagate(&k1, &self.full)).expect("same grid");
        out.add_scaled(h / 3.0, &Self::propagate(&mid, &self.half)).expect("same grid");
        out.add_scaled(h / 6.0, &k4).expect("same grid");
        out.set_zero_x_mean(u.is_zero_x_mean());
        out
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let field = self.advance(&state.field);
        let time = state.time + self.dt;
        if !field.is_finite() {
            return Err(Error::Instability { time });
        }
        Ok(SimState {
            time,
            field,
            params: state.params,
            dt: self.dt,
        })
    }
}

/// One IF-RK4 step of `state`.
pub fn step_ifrk4(state: &SimState) -> Result<SimState> {
    let stepper = Stepper::new(state.field.grid().clone(), state.params, state.dt)?;
    stepper.step(state)
}

/// Projects and dealiases `phi`, then takes `round(t_final / dt)` IF-RK4
/// steps. `observer` sees the initial state and every `every`-th state after it.
pub fn simulate(
    phi: &SpectralField,
    t_final: f64,
    dt: f64,
    params: &ModelParams,
    every: usize,
    mut observer: impl FnMut(&SimState),
) -> Result<SimState> {
    let stepper = Stepper::new(phi.grid().clone(), *params, dt)?;
    simulate_with(&stepper, phi, t_final, every, &mut observer)
}

pub fn simulate_with(
    stepper: &Stepper,
    phi: &SpectralField,
    t_final: f64,
    every: usize,
    observer: &mut dyn FnMut(&SimState),
) -> Result<SimState> {
    let steps = step_count(t_final, stepper.dt())?;
    let every = every.max(1);
    let mut field = phi.clone();
    dealias_in_place(&mut field);
    project_zero_x_mode_in_place(&mut field);
    let mut state = SimState {
        time: 0.0,
        field,
        params: stepper.params,
        dt: stepper.dt(),
    };
    observer(&state);
    for n in 1..=steps {
        let mut next = stepper.step(&state)?;
        // avoid drift from repeated addition
        next.time = n as f64 * stepper.dt();
        state = next;
        if n % every == 0 {
            observer(&state);
        }
    }
    Ok(state)
}

/// Number of steps of size `dt` covering `[0, t_final]`; `dt` must divide
/// `t_final` to within a hundredth of a step.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!("T must be positive, got {t_final}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let n = t_final / dt;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-2 {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} does not divide T = {t_final}"
        )));
    }
    Ok(r as usize)
}

/// `-alpha (||u_xx||^2 - ||u_x||^2)` generalised to any dissipation kind:
/// `-sum rho(xi) |u^|^2 / (lx ly)`. At `beta = 0` this is exactly
/// `d/dt (||u||^2 / 2)` for the semi-discrete flow.
pub fn energy_rate(f: &SpectralField, params: &ModelParams) -> f64 {
    let grid = f.grid();
    let s: f64 = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| dissipation(grid.zeta(i).0, params) * c.norm_sqr())
        .sum();
    -s / (grid.lx() * grid.ly())
}

/// Observation of the energy balance at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub time: f64,
    pub l2_sq: f64,
    /// Finite-difference estimate of `d/dt ||u||^2 / 2`.
    pub lhs: f64,
    /// `-alpha (||u_xx||^2 - ||u_x||^2)`.
    pub rhs: f64,
}

impl EnergySample {
    /// `|lhs - rhs| / ||u||^2`.
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.l2_sq
    }
}

/// Energy history of a run observed at every step, spacing `dt`.
#[derive(Debug, Clone)]
pub struct EnergyMonitor {
    dt: f64,
    history: Vec<(f64, f64, f64)>,
}

impl EnergyMonitor {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            history: Vec::new(),
        }
    }

    pub fn observe(&mut self, state: &SimState) {
        let l2 = state.field.l2_norm();
        self.history
            .push((state.time, l2 * l2, energy_rate(&state.field, &state.params)));
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Sample at step `n`: five-point centred difference inside, fourth-order
    /// one-sided stencils at the two ends. Needs five observations.
    pub fn sample(&self, n: usize) -> Option<EnergySample> {
        let len = self.history.len();
        if len < 5 || n >= len {
            return None;
        }
        let e = |i: usize| self.history[i].1;
        let h = self.dt;
        let d = match n {
            0 | 1 => one_sided(e, h, n as i32),
            _ if n + 2 >= len => {
                let s = len - 5;
                -one_sided(|k| e(s + 4 - k), h, (len - 1 - n) as i32)
            }
            _ => (-e(n + 2) + 8.0 * e(n + 1) - 8.0 * e(n - 1) + e(n - 2)) / (12.0 * h),
        };
        let (time, l2_sq, rhs) = self.history[n];
        Some(EnergySample {
            time,
            l2_sq,
            lhs: 0.5 * d,
            rhs,
        })
    }

    pub fn samples(&self) -> Vec<EnergySample> {
        (0..self.history.len()).filter_map(|n| self.sample(n)).collect()
    }
}

/// Fourth-order derivative at node `at` (0 or 1) of `f(0..5)`.
fn one_sided(f: impl Fn(usize) -> f64, h: f64, at: i32) -> f64 {
    let c: [f64; 5] = if at == 0 {
        [-25.0, 48.0, -36.0, 16.0, -3.0]
    } else {
        [-3.0, -10.0, 18.0, -6.0, 1.0]
    };
    c.iter().enumerate().map(|(k, c)| c * f(k)).sum::<f64>() / (12.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{project_zero_x_mode, SpectralGrid};
    use crate::symbols::DissipationKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &Arc<SpectralGrid>, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut f = forward(&RealField::new(grid.clone(), data).unwrap());
        dealias_in_place(&mut f);
        project_zero_x_mode(&f)
    }

    #[test]
    fn semigroup_identity_at_zero() {
        let g = SpectralGrid::new(16, 16, 2.0 * PI, 2.0 * PI).unwrap();
        let f = random_field(&g, 1);
        let w = apply_semigroup(&f, 0.0, &ModelParams::default());
        assert_eq!(w.coeffs(), f.coeffs());
    }

    #[test]
    fn single_mode_semigroup() {
        let g = SpectralGrid::new(16, 16, 2.0 * PI, 2.0 * PI).unwrap();
        let mut f = SpectralField::zeros(g.clone());
        f.set(2, 0, Complex64::new(1.0, 0.0)).unwrap();
        let w = apply_semigroup(&f, 0.1, &ModelParams::default());
        let c = w.get(2, 0).unwrap();
        assert!((c.norm() - (-1.2f64).exp()).abs() < 1e-15);
        assert!((c.arg() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn semigroup_composes() {
        let g = SpectralGrid::new(16, 16, 4.0 * PI, 2.0 * PI).unwrap();
        let f = random_field(&g, 2);
        let p = ModelParams::default();
        let a = apply_semigroup(&apply_semigroup(&f, 0.03, &p), 0.05, &p);
        let b = apply_semigroup(&f, 0.08, &p);
        assert!(a.l2_distance(&b) <= 1e-12 * b.l2_norm());
    }

    #[test]
    fn unitary_group_properties() {
        let g = SpectralGrid::new(16, 16, 4.0 * PI, 2.0 * PI).unwrap();
        let f = random_field(&g, 3);
        let p = ModelParams::dmkp(1.0, 1.0, -1.0);
        let u = apply_unitary(&f, 0.7, &p);
        assert!((u.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        let back = apply_unitary(&u, -0.7, &p);
        assert!(back.l2_distance(&f) < 1e-12 * f.l2_norm());
        let kp = ModelParams::kp(1.0);
        let w = apply_semigroup(&f, 0.7, &kp);
        assert!(apply_unitary(&f, 0.7, &kp).l2_distance(&w) == 0.0);
    }

    #[test]
    fn nonlinear_rhs_of_zero_and_cosine() {
        let g = SpectralGrid::new(16, 16, 2.0 * PI, 2.0 * PI).unwrap();
        let p = ModelParams::dmkp(1.0, 0.0, 1.0);
        assert_eq!(nonlinear_rhs(&SpectralField::zeros(g.clone()), &p).max_abs(), 0.0);

        let u = project_zero_x_mode(&forward(&RealField::from_fn(g.clone(), |x, _| x.cos())));
        let n = nonlinear_rhs(&u, &p);
        let expected = forward(&RealField::from_fn(g.clone(), |x, _| -0.5 * (2.0 * x).sin()));
        assert!(n.l2_distance(&expected) < 1e-12);
        for i in 0..g.len() {
            let (j, k) = g.mode_of(i);
            if !(j.abs() == 2 && k == 0) {
                assert!(n.coeffs()[i].norm() < 1e-12);
            }
        }
    }

    /// Sixth-order centred differences of `q = u^2` on a 4x finer grid.
    #[test]
    fn nonlinear_rhs_matches_finite_differences() {
        let (lx, ly) = (2.0 * PI, 2.0 * PI);
        let g = SpectralGrid::new(64, 32, lx, ly).unwrap();
        let p = ModelParams::dmkp(1.0, 0.7, 1.0);
        // band-limited field with modes well inside the kept band
        let modes = [(1, 0, 0.3, 0.1), (2, 1, -0.2, 0.25), (3, -2, 0.15, -0.05), (-3, 3, 0.1, 0.2)];
        let eval = |x: f64, y: f64| -> f64 {
            modes
                .iter()
                .map(|&(j, k, a, b)| {
                    let ph = j as f64 * x + k as f64 * y;
                    a * ph.cos() + b * ph.sin()
                })
                .sum()
        };
        let u = project_zero_x_mode(&forward(&RealField::from_fn(g.clone(), eval)));
        let n = inverse(&nonlinear_rhs(&u, &p));

        let fine = 4 * g.nx();
        let h = lx / fine as f64;
        let q = |x: f64, y: f64| eval(x, y).powi(2);
        let d1 = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let d2 = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        let mut max_err: f64 = 0.0;
        for (i, v) in n.data().iter().enumerate() {
            let (x, y) = g.point(i);
            let mut qx = 0.0;
            let mut qxx = 0.0;
            for s in 0..7 {
                let xs = x + (s as f64 - 3.0) * h;
                qx += d1[s] * q(xs, y);
                qxx += d2[s] * q(xs, y);
            }
            qx /= h;
            qxx /= h * h;
            // the zero-x-mean projection removes the y-only part of q_x, q_xx; both are zero-mean in x already
            let fd = 0.5 * qx + p.beta * qxx;
            max_err = max_err.max((fd - v).abs());
        }
        assert!(max_err < 1e-6, "max error {max_err}");
    }

    #[test]
    fn linear_only_step_is_exact() {
        let g = SpectralGrid::new(16, 16, 4.0 * PI, 2.0 * PI).unwrap();
        let p = ModelParams::default();
        let f = random_field(&g, 4);
        let stepper = Stepper::new(g.clone(), p, 0.01).unwrap().linear_only();
        let mut u = f.clone();
        for _ in 0..50 {
            u = stepper.advance(&u);
        }
        let exact = apply_semigroup(&f, 0.5, &p);
        assert!(u.l2_distance(&exact) <= 1e-12 * f.l2_norm());
        let one = stepper.advance(&f);
        assert!(one.l2_distance(&apply_semigroup(&f, 0.01, &p)) <= 1e-14 * f.l2_norm());
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = SpectralGrid::new(16, 16, 2.0 * PI, 2.0 * PI).unwrap();
        let state = SimState {
            time: 0.0,
            field: project_zero_x_mode(&SpectralField::zeros(g)),
            params: ModelParams::default(),
            dt: 0.01,
        };
        let next = step_ifrk4(&state).unwrap();
        assert_eq!(next.field.max_abs(), 0.0);
        assert!((next.time - 0.01).abs() < 1e-16);
        assert!(next.field.is_zero_x_mean());
    }

    #[test]
    fn unitary_limit_conserves_l2() {
        let g = SpectralGrid::new(32, 32, 2.0 * PI, 2.0 * PI).unwrap();
        let p = ModelParams::kp(1.0);
        let phi = random_field(&g, 5).scaled(1e-3);
        let stepper = Stepper::new(g, p, 0.01).unwrap().linear_only();
        let end = simulate_with(&stepper, &phi, 1.0, 10, &mut |_| {}).unwrap();
        assert!((end.field.l2_norm() - phi.l2_norm()).abs() < 1e-10 * phi.l2_norm());
    }

    #[test]
    fn kp_nonlinear_conserves_l2() {
        let g = SpectralGrid::new(32, 32, 2.0 * PI, 2.0 * PI).unwrap();
        let p = ModelParams::kp(-1.0);
        let phi = random_field(&g, 6).scaled(0.05);
        let end = simulate(&phi, 0.5, 1e-3, &p, 1, |_| {}).unwrap();
        let rel = (end.field.l2_norm() - phi.l2_norm()).abs() / phi.l2_norm();
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn bad_step_sizes_rejected() {
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(-1.0, 0.1).is_err());
        assert_eq!(step_count(1.0, 0.1).unwrap(), 10);
        let g = SpectralGrid::new(8, 8, 1.0, 1.0).unwrap();
        assert!(Stepper::new(g, ModelParams::default(), 0.0).is_err());
    }

    #[test]
    fn instability_is_reported_with_time() {
        let g = SpectralGrid::new(32, 1, 2.0 * PI, 1.0).unwrap();
        let p = ModelParams {
            alpha: 1.0,
            beta: 0.0,
            epsilon: 1.0,
            dissipation: DissipationKind::None,
        };
        let phi = random_field(&g, 7).scaled(1e4);
        match simulate(&phi, 10.0, 0.5, &p, 1, |_| {}) {
            Err(Error::Instability { time }) => assert!(time > 0.0),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn zero_x_mean_preserved() {
        let g = SpectralGrid::new(16, 16, 4.0 * PI, 2.0 * PI).unwrap();
        let phi = random_field(&g, 8).scaled(0.1);
        let end = simulate(&phi, 0.1, 0.01, &ModelParams::default(), 1, |s| {
            assert!(s.field.is_zero_x_mean());
        })
        .unwrap();
        for k in -5..=5 {
            assert_eq!(end.field.get(0, k).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn energy_stencils_are_fourth_order() {
        let g = SpectralGrid::new(8, 1, 2.0 * PI, 2.0 * PI).unwrap();
        let params = ModelParams::default();
        let errs: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&dt| {
                let mut m = EnergyMonitor::new(dt);
                for n in 0..9 {
                    let t = n as f64 * dt;
                    let mut field = SpectralField::zeros(g.clone());
                    field.set(1, 0, Complex64::new((t.sin() + 2.0).sqrt(), 0.0)).unwrap();
                    m.observe(&SimState { field, time: t, params, dt });
                }
                m.samples()
                    .iter()
                    .map(|s| {
                        let exact = 0.5 * s.l2_sq * s.time.cos() / (s.time.sin() + 2.0);
                        (s.lhs - exact).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
        assert!(errs[1] < 1e-8);
    }
}
