//! Anisotropic Sobolev norms and discrete Bourgain norms of space-time
//! fields.
//!
//! Conventions: `<x> = 1 + |x|`, frequency sums carry the weight
//! `dxi deta = (2 pi)^2 / (lx ly)`, so `||f||_{H^{0,0}} = 2 pi ||f||_{L^2}`.
//! Time transforms are `f^(tau) = int e^{-i t tau} f(t) dt`, discretised as
//! `dt sum_n e^{-i tau t_n} f_n` and integrated over one period in `tau`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::duhamel::Trajectory;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::spectral::{SpectralField, SpectralGrid};
use crate::symbols::{dispersion, dissipation, ModelParams};

#[inline]
pub fn bracket(x: f64) -> f64 {
    1.0 + x.abs()
}

/// `<xi>^{s1} <eta>^{s2}`.
#[inline]
pub fn sobolev_weight(xi: f64, eta: f64, s1: f64, s2: f64) -> f64 {
    bracket(xi).powf(s1) * bracket(eta).powf(s2)
}

/// `<i sigma + rho> = 1 + sqrt(sigma^2 + rho^2)`.
#[inline]
pub fn modulation_weight(sigma: f64, rho: f64) -> f64 {
    1.0 + sigma.hypot(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub b: f64,
    pub s1: f64,
    pub s2: f64,
}

impl NormSpec {
    pub fn new(b: f64, s1: f64, s2: f64) -> Self {
        Self { b, s1, s2 }
    }
}

/// `||F||_{H^{s1,s2}}`.
pub fn sobolev_norm(f: &SpectralField, s1: f64, s2: f64) -> f64 {
    sobolev_norm_sq(f, s1, s2).sqrt()
}

fn sobolev_norm_sq(f: &SpectralField, s1: f64, s2: f64) -> f64 {
    let grid = f.grid();
    let sum: f64 = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (xi, eta) = grid.zeta(i);
            let w = sobolev_weight(xi, eta, s1, s2);
            w * w * c.norm_sqr()
        })
        .sum();
    sum * grid.spectral_weight()
}

/// A trajectory on a symmetric time window, prepared for time transforms.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    trajectory: Trajectory,
    pad_factor: usize,
    window_applied: bool,
}

impl SpaceTimeField {
    /// Wraps a trajectory without windowing; Bourgain norms refuse it until
    /// [`SpaceTimeField::apply_window`] or
    /// [`SpaceTimeField::assume_compact_support`] is called.
    pub fn new(trajectory: Trajectory, pad_factor: usize) -> Result<Self> {
        if pad_factor < 4 {
            return Err(Error::InvalidArgument(format!(
                "pad_factor must be at least 4, got {pad_factor}"
            )));
        }
        if trajectory.len() < 2 {
            return Err(Error::InvalidArgument("space-time field needs at least 2 frames".into()));
        }
        Ok(Self {
            trajectory,
            pad_factor,
            window_applied: false,
        })
    }

    /// Samples `f(t)` on `t_n = -t_w + n dt`, `n = 0..=2 t_w / dt`; `dt` is
    /// adjusted to divide the window exactly.
    pub fn sample(
        grid: &Arc<SpectralGrid>,
        t_w: f64,
        dt: f64,
        pad_factor: usize,
        f: impl Fn(f64) -> SpectralField + Sync,
    ) -> Result<Self> {
        let steps = crate::propagator::step_count(2.0 * t_w, dt)?;
        let dt = 2.0 * t_w / steps as f64;
        let traj = Trajectory::from_fn(grid.clone(), -t_w, dt, steps, f)?;
        Self::new(traj, pad_factor)
    }

    /// Multiplies every frame by `window(t)`; the window must vanish at both
    /// ends of the time range.
    pub fn apply_window(&mut self, window: impl Fn(f64) -> f64) -> Result<()> {
        let n = self.trajectory.len();
        let (a, b) = (self.trajectory.time(0), self.trajectory.time(n - 1));
        if window(a).abs() > 1e-12 || window(b).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "window does not vanish at the ends of [{a}, {b}]"
            )));
        }
        let times: Vec<f64> = (0..n).map(|i| self.trajectory.time(i)).collect();
        for (f, t) in self.trajectory.frames_mut().iter_mut().zip(times) {
            f.scale(window(t));
        }
        self.window_applied = true;
        Ok(())
    }

    /// Marks the field as already compactly supported inside the window
    /// (checked: the first and last frames must vanish).
    pub fn assume_compact_support(&mut self) -> Result<()> {
        let t = &self.trajectory;
        let edge = t.frames()[0].max_abs().max(t.last().max_abs());
        if edge > 1e-12 * t.frames().iter().map(|f| f.max_abs()).fold(0.0, f64::max).max(1e-300) {
            return Err(Error::InvalidArgument(format!(
                "field is not supported inside the window (edge magnitude {edge:e})"
            )));
        }
        self.window_applied = true;
        Ok(())
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.trajectory.grid()
    }

    pub fn pad_factor(&self) -> usize {
        self.pad_factor
    }

    pub fn window_applied(&self) -> bool {
        self.window_applied
    }

    pub fn with_pad_factor(&self, pad_factor: usize) -> Result<Self> {
        let mut out = Self::new(self.trajectory.clone(), pad_factor)?;
        out.window_applied = self.window_applied;
        Ok(out)
    }

    /// Frame-wise map, preserving the window flag.
    pub fn map(&self, f: impl Fn(f64, &SpectralField) -> SpectralField + Sync) -> Self {
        Self {
            trajectory: self.trajectory.map(f),
            pad_factor: self.pad_factor,
            window_applied: self.window_applied,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|_, f| f.scaled(c))
    }

    /// `U(-t) f(t)`.
    pub fn demodulated(&self, params: &ModelParams) -> Self {
        self.map(|t, f| crate::propagator::apply_unitary(f, -t, params))
    }

    fn padded_len(&self) -> usize {
        self.pad_factor * self.trajectory.len()
    }

    fn require_window(&self) -> Result<()> {
        if self.window_applied {
            Ok(())
        } else {
            Err(Error::Unwindowed)
        }
    }

    /// `int W(sigma) |g^(sigma)|^2 dsigma` over one period of the discrete
    /// transform, for `g_n = exp(-i rate t_n) f_n(idx)`.
    ///
    /// `|g^|^2` is a trigonometric polynomial; its coefficients (the
    /// autocorrelation of `g`) come from the zero-padded DFT and are paired
    /// with the cosine moments of the even weight, so the kink of the weight
    /// at `sigma = 0` costs no accuracy.
    fn mode_time_sum(&self, ctx: &TimeTransform, buf: &mut Vec<Complex64>, idx: usize, rate: f64, moments: &[f64]) -> f64 {
        let m = self.padded_len();
        let traj = &self.trajectory;
        buf.clear();
        buf.resize(m, Complex64::new(0.0, 0.0));
        let mut any = false;
        for (n, f) in traj.frames().iter().enumerate() {
            let c = f.coeffs()[idx];
            any |= c != Complex64::new(0.0, 0.0);
            buf[n] = c * Complex64::from_polar(1.0, -rate * traj.time(n));
        }
        if !any {
            return 0.0;
        }
        ctx.forward.process(buf);
        for v in buf.iter_mut() {
            *v = Complex64::new(v.norm_sqr(), 0.0);
        }
        ctx.inverse.process(buf);
        let scale = 1.0 / m as f64;
        let mut sum = buf[0].re * scale * moments[0];
        for (k, c) in moments.iter().enumerate().skip(1) {
            sum += 2.0 * buf[k].re * scale * c;
        }
        let dt = traj.dt();
        sum * dt * dt
    }

    fn transform(&self) -> TimeTransform {
        let mut planner = FftPlanner::new();
        let m = self.padded_len();
        TimeTransform {
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }
}

struct TimeTransform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Cosine moments `c_m = int_{-pi/dt}^{pi/dt} W(sigma) cos(m sigma dt) dsigma`,
/// `m = 0..n`, of an even weight, by Gauss-Legendre on panels graded
/// towards `sigma = 0`.
pub fn weight_moments(weight: impl Fn(f64) -> f64, dt: f64, n: usize) -> Vec<f64> {
    let top = PI / dt;
    let panels = n.max(16);
    let len = top / panels as f64;
    let mut edges = vec![0.0];
    for k in (0..48).rev() {
        edges.push(len * 0.5f64.powi(k + 1));
    }
    for p in 1..=panels {
        edges.push(len * p as f64);
    }
    let g = GaussLegendre::new(12);
    let mut c = vec![0.0; n];
    for w in edges.windows(2) {
        for (x, wx) in g.mapped(w[0], w[1]) {
            let val = 2.0 * wx * weight(x);
            let two_cos = 2.0 * (x * dt).cos();
            let (mut prev, mut cur) = ((x * dt).cos(), 1.0);
            for cm in c.iter_mut() {
                *cm += val * cur;
                let next = two_cos * cur - prev;
                prev = cur;
                cur = next;
            }
        }
    }
    c
}

/// `||f||_{X^{b,s1,s2}}`, with `sigma = tau - P(zeta)` realised by
/// demodulating each mode before the time transform.
pub fn bourgain_norm(f: &SpaceTimeField, spec: NormSpec, params: &ModelParams) -> Result<f64> {
    f.require_window()?;
    let grid = f.grid().clone();
    let ctx = f.transform();
    let nt = f.trajectory().len();
    let dt = f.trajectory().dt();
    let moments: Vec<Vec<f64>> = (0..grid.nx())
        .into_par_iter()
        .map(|jx| {
            let rho = dissipation(grid.xi()[jx], params);
            weight_moments(|sigma| modulation_weight(sigma, rho).powf(2.0 * spec.b), dt, nt)
        })
        .collect();
    let per_mode: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, idx| {
            let (xi, eta) = grid.zeta(idx);
            let sw = sobolev_weight(xi, eta, spec.s1, spec.s2);
            let p = dispersion(xi, eta, params);
            sw * sw * f.mode_time_sum(&ctx, buf, idx, p, &moments[idx % grid.nx()])
        })
        .collect();
    Ok((per_mode.iter().sum::<f64>() * grid.spectral_weight()).sqrt())
}

/// `||w||_{W^b_zeta} = || <i tau + rho(xi)>^b w^(tau, zeta) ||_{L^2_tau}` at a
/// single grid frequency, without any shift of `tau`.
pub fn time_sobolev_at_mode(f: &SpaceTimeField, zeta: (f64, f64), b: f64, params: &ModelParams) -> Result<f64> {
    f.require_window()?;
    let idx = find_mode(f.grid(), zeta)?;
    let rho = dissipation(zeta.0, params);
    let moments = weight_moments(
        |tau| modulation_weight(tau, rho).powf(2.0 * b),
        f.trajectory().dt(),
        f.trajectory().len(),
    );
    let mut buf = Vec::new();
    Ok(f.mode_time_sum(&f.transform(), &mut buf, idx, 0.0, &moments).sqrt())
}

fn find_mode(grid: &SpectralGrid, zeta: (f64, f64)) -> Result<usize> {
    let dxi = 2.0 * PI / grid.lx();
    let deta = 2.0 * PI / grid.ly();
    let j = (zeta.0 / dxi).round();
    let k = (zeta.1 / deta).round();
    let on_lattice = (j * dxi - zeta.0).abs() <= 1e-9 * dxi.max(zeta.0.abs())
        && (k * deta - zeta.1).abs() <= 1e-9 * deta.max(zeta.1.abs());
    grid.index_of(j as i64, k as i64)
        .filter(|_| on_lattice)
        .ok_or_else(|| Error::InvalidArgument(format!("zeta = {zeta:?} is not a grid frequency")))
}

/// `(sum_n dt ||f(t_n)||^2_{H^{s1,s2}})^{1/2}`.
pub fn l2_time_sobolev(f: &SpaceTimeField, s1: f64, s2: f64) -> f64 {
    let t = f.trajectory();
    let sum: f64 = t.frames().iter().map(|fr| sobolev_norm_sq(fr, s1, s2)).sum();
    (sum * t.dt()).sqrt()
}

/// `||U(-t) f||_{H^b_t H^{s1,s2}}` with `<tau>^b` weights.
pub fn unitary_time_sobolev(f: &SpaceTimeField, spec: NormSpec, params: &ModelParams) -> Result<f64> {
    f.require_window()?;
    let grid = f.grid().clone();
    let ctx = f.transform();
    let moments = weight_moments(
        |sigma| bracket(sigma).powf(2.0 * spec.b),
        f.trajectory().dt(),
        f.trajectory().len(),
    );
    let per_mode: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, idx| {
            let (xi, eta) = grid.zeta(idx);
            let sw = sobolev_weight(xi, eta, spec.s1, spec.s2);
            let p = dispersion(xi, eta, params);
            sw * sw * f.mode_time_sum(&ctx, buf, idx, p, &moments)
        })
        .collect();
    Ok((per_mode.iter().sum::<f64>() * grid.spectral_weight()).sqrt())
}

/// Ratio of the Bourgain norm to the equivalent expression
/// `||U(-t)f||_{H^b_t H^{s1,s2}} + ||f||_{L^2_t H^{s1 + k b, s2}}`, with the
/// derivative gain `k` selectable (`k = 4` matches the quartic dissipation).
pub fn equivalence_ratio(f: &SpaceTimeField, spec: NormSpec, params: &ModelParams, gain: f64) -> Result<f64> {
    let lhs = bourgain_norm(f, spec, params)?;
    let rhs = unitary_time_sobolev(f, spec, params)? + l2_time_sobolev(f, spec.s1 + gain * spec.b, spec.s2);
    Ok(lhs / rhs)
}
