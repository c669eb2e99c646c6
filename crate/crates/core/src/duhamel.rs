//! Duhamel integral, Picard iteration and the smooth time cutoff.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagator::{apply_semigroup, nonlinear_rhs, semigroup_factor};
use crate::spectral::{dealias, project_zero_x_mode, SpectralField, SpectralGrid};
use crate::symbols::ModelParams;

fn psi(r: f64) -> f64 {
    if r > 0.0 {
        (-1.0 / r).exp()
    } else {
        0.0
    }
}

/// Smooth bump: 1 on `[-1, 1]`, 0 outside `(-2, 2)`.
pub fn cutoff_theta(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let up = psi(2.0 - a);
        up / (up + psi(a - 1.0))
    }
}

/// `theta_T(t) = theta(t / T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub scale: f64,
}

impl CutoffSpec {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("cutoff scale must be positive, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn eval(&self, t: f64) -> f64 {
        cutoff_theta(t / self.scale)
    }
}

/// Spectral fields on the uniform time nodes `t_n = t0 + n dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Arc<SpectralGrid>,
    t0: f64,
    dt: f64,
    frames: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, frames: Vec<SpectralField>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let grid = first.grid().clone();
        for f in &frames {
            first.check_same_grid(f)?;
        }
        Ok(Self {
            grid,
            t0,
            dt,
            frames,
        })
    }

    /// Builds `t_n -> f(t_n)` for `n = 0..=steps`.
    pub fn from_fn(
        grid: Arc<SpectralGrid>,
        t0: f64,
        dt: f64,
        steps: usize,
        f: impl Fn(f64) -> SpectralField + Sync,
    ) -> Result<Self> {
        let frames: Vec<SpectralField> = (0..=steps)
            .into_par_iter()
            .map(|n| f(t0 + n as f64 * dt))
            .collect();
        for fr in &frames {
            if **fr.grid() != *grid {
                return Err(Error::GridMismatch);
            }
        }
        Self::new(t0, dt, frames)
    }

    /// `t_n -> W(t_n) phi` on `[0, t_final]` with `steps` intervals.
    pub fn free_evolution(
        phi: &SpectralField,
        t_final: f64,
        steps: usize,
        params: &ModelParams,
    ) -> Result<Self> {
        let dt = t_final / steps as f64;
        Self::from_fn(phi.grid().clone(), 0.0, dt, steps, |t| apply_semigroup(phi, t, params))
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn frames(&self) -> &[SpectralField] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [SpectralField] {
        &mut self.frames
    }

    pub fn into_frames(self) -> Vec<SpectralField> {
        self.frames
    }

    pub fn last(&self) -> &SpectralField {
        self.frames.last().expect("non-empty")
    }

    /// Time series of one mode.
    pub fn mode_series(&self, idx: usize) -> Vec<Complex64> {
        self.frames.iter().map(|f| f.coeffs()[idx]).collect()
    }

    /// Applies `f(t_n, frame)` to every frame.
    pub fn map(&self, f: impl Fn(f64, &SpectralField) -> SpectralField + Sync) -> Self {
        let frames = self
            .frames
            .par_iter()
            .enumerate()
            .map(|(n, fr)| f(self.time(n), fr))
            .collect();
        Self {
            grid: self.grid.clone(),
            t0: self.t0,
            dt: self.dt,
            frames,
        }
    }

    /// `max_n ||a(t_n) - b(t_n)||_{L^2}`.
    pub fn sup_l2_distance(&self, other: &Trajectory) -> f64 {
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.l2_distance(b))
            .fold(0.0, f64::max)
    }

    /// Rebuilds a trajectory from per-mode time series (`series[idx][n]`).
    fn from_mode_series(
        grid: Arc<SpectralGrid>,
        t0: f64,
        dt: f64,
        series: Vec<Vec<Complex64>>,
        zero_x_mean: bool,
    ) -> Self {
        let nt = series.first().map_or(0, Vec::len);
        let frames = (0..nt)
            .map(|n| {
                let coeffs = series.iter().map(|s| s[n]).collect();
                let mut f = SpectralField::from_coeffs(grid.clone(), coeffs).expect("grid-sized");
                f.set_zero_x_mean(zero_x_mean);
                f
            })
            .collect();
        Self {
            grid,
            t0,
            dt,
            frames,
        }
    }
}

/// Quadrature for the `t'` integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeQuadrature {
    /// Composite Simpson; odd node counts close with a 3/8 panel, and the
    /// first node after `t0` falls back to a trapezoid.
    #[default]
    Simpson,
    Trapezoid,
}

/// `t_n -> \int_{t0}^{t_n} W(t_n - t') w(t') dt'`, mode by mode.
pub fn duhamel(w: &Trajectory, params: &ModelParams) -> Result<Trajectory> {
    duhamel_with(w, params, TimeQuadrature::Simpson)
}

pub fn duhamel_with(w: &Trajectory, params: &ModelParams, rule: TimeQuadrature) -> Result<Trajectory> {
    if w.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "duhamel needs at least 3 nodes, got {}",
            w.len()
        )));
    }
    let grid = w.grid.clone();
    let h = w.dt;
    let series: Vec<Vec<Complex64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (xi, eta) = grid.zeta(idx);
            let e: [Complex64; 4] =
                std::array::from_fn(|k| semigroup_factor(xi, eta, k as f64 * h, params));
            let src = w.mode_series(idx);
            match rule {
                TimeQuadrature::Simpson => simpson_mode(&src, &e, h),
                TimeQuadrature::Trapezoid => trapezoid_mode(&src, &e, h),
            }
        })
        .collect();
    let zero_mean = w.frames.iter().all(SpectralField::is_zero_x_mean);
    Ok(Trajectory::from_mode_series(grid, w.t0, h, series, zero_mean))
}

// Integrals are accumulated in the propagated frame: each panel is weighted by
// powers of e^{h L} reaching forward to its right end, which stays bounded
// even when e^{-h L} would overflow.
fn simpson_mode(w: &[Complex64], e: &[Complex64; 4], h: f64) -> Vec<Complex64> {
    let n = w.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; n];
    let mut even = zero;
    for m in (2..n).step_by(2) {
        even = e[2] * even + (e[2] * w[m - 2] + 4.0 * e[1] * w[m - 1] + w[m]) * (h / 3.0);
        out[m] = even;
    }
    out[1] = (e[1] * w[0] + w[1]) * (h / 2.0);
    for m in (3..n).step_by(2) {
        let base = out[m - 3];
        out[m] = e[3] * base
            + (e[3] * w[m - 3] + 3.0 * e[2] * w[m - 2] + 3.0 * e[1] * w[m - 1] + w[m]) * (3.0 * h / 8.0);
    }
    out
}

fn trapezoid_mode(w: &[Complex64], e: &[Complex64; 4], h: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); w.len()];
    for m in 1..w.len() {
        out[m] = e[1] * out[m - 1] + (e[1] * w[m - 1] + w[m]) * (h / 2.0);
    }
    out
}

/// Output of [`picard_solve`].
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    /// `max_n ||u^{(k+1)}(t_n) - u^{(k)}(t_n)||_{L^2}` for every iteration.
    pub residuals: Vec<f64>,
}

impl PicardOutcome {
    /// Successive residual ratios `res_{k+1} / res_k`.
    pub fn ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Options for [`picard_solve`].
#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    pub t_final: f64,
    pub steps: usize,
    pub max_iter: usize,
    pub tol: f64,
}

/// One Picard map `u -> W(t) phi - \int_0^t W(t - t') Lambda(u^2) dt'`.
pub fn picard_map(free: &Trajectory, u: &Trajectory, params: &ModelParams) -> Result<Trajectory> {
    let nonlin = u.map(|_, f| nonlinear_rhs(f, params));
    let d = duhamel(&nonlin, params)?;
    let frames = free
        .frames
        .par_iter()
        .zip(d.frames.par_iter())
        .map(|(a, b)| {
            let mut out = a.clone();
            out.add_scaled(-1.0, b).expect("same grid");
            out
        })
        .collect();
    Trajectory::new(free.t0, free.dt, frames)
}

/// Fixed-point iteration of the Duhamel equation on `[0, T]`, starting from
/// the free evolution `W(t) phi`. Stops once the sup-in-time `L^2` residual
/// drops below `tol`.
pub fn picard_solve(phi: &SpectralField, config: &PicardConfig, params: &ModelParams) -> Result<PicardOutcome> {
    if !(config.t_final > 0.0) {
        return Err(Error::InvalidArgument(format!("T must be positive, got {}", config.t_final)));
    }
    if config.steps < 2 {
        return Err(Error::InvalidArgument("need at least 2 time steps".into()));
    }
    if config.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let phi = project_zero_x_mode(&dealias(phi));
    let free = Trajectory::free_evolution(&phi, config.t_final, config.steps, params)?;
    let mut u = free.clone();
    let mut residuals = Vec::new();
    for _ in 0..config.max_iter {
        let next = picard_map(&free, &u, params)?;
        let res = next.sup_l2_distance(&u);
        residuals.push(res);
        u = next;
        if res < config.tol {
            return Ok(PicardOutcome {
                trajectory: u,
                residuals,
            });
        }
        if !res.is_finite() || res > 1e3 * residuals[0].max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Err(Error::NotContracting {
        iterations: residuals.len(),
        last_residual: residuals.last().copied().unwrap_or(f64::NAN),
        history: residuals,
    })
}

/// `max_n ||Phi(u)(t_n) - u(t_n)||_{L^2}` for a candidate solution `u`.
pub fn picard_defect(phi: &SpectralField, u: &Trajectory, params: &ModelParams) -> Result<f64> {
    let phi = project_zero_x_mode(&dealias(phi));
    let steps = u.len() - 1;
    let free = Trajectory::free_evolution(&phi, u.time(steps) - u.t0(), steps, params)?;
    Ok(picard_map(&free, u, params)?.sup_l2_distance(u))
}
