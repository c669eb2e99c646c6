//! Second Picard iterate of the rectangle data family and its norm growth
//! below `H^{-1/2, 0}`.
//!
//! The data `phi_N` has Fourier transform supported on
//! `A_N = [N/2, N] x [-6N^2, 6N^2]`, `B_N = [N, 2N] x [2N^2, 3N^2]` and
//! their reflections. The second iterate is evaluated mode by mode from the
//! closed-form time integral, with quadrature over the exact convolution
//! cells, so no grid needs to resolve `|eta| ~ N^2`.

mod rect;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::symbols::{
    dispersion, dissipation, dissipation_gap, lambda_symbol, resonance_unchecked, ModelParams,
};

pub use rect::{convolution_cell, Interval, Rect};

pub const DEFAULT_SINGULAR_TOL: f64 = 1e-6;
pub const DEFAULT_EPS: f64 = 0.1;

/// Complex `exp(z) - 1` without cancellation for small `|z|`.
fn expm1_c(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let half = (0.5 * b).sin();
    Complex64::new(a.exp_m1() * b.cos() - 2.0 * half * half, a.exp() * b.sin())
}

/// Time-integrated interaction kernel
///
/// ```text
/// K = (exp(-t(rho(xi1) + rho(xi2))) exp(i t R) - exp(-t rho(xi))) / (i R - M)
/// ```
///
/// i.e. `exp(-t rho(xi)) * int_0^t exp(t'(i R - M)) dt'`.
pub fn kernel(zeta: (f64, f64), zeta1: (f64, f64), t: f64, params: &ModelParams) -> Result<Complex64> {
    kernel_with_tol(zeta, zeta1, t, params, DEFAULT_SINGULAR_TOL)
}

pub fn kernel_with_tol(
    zeta: (f64, f64),
    zeta1: (f64, f64),
    t: f64,
    params: &ModelParams,
    singular_tol: f64,
) -> Result<Complex64> {
    let (xi, xi1) = (zeta.0, zeta1.0);
    let xi2 = xi - xi1;
    if xi == 0.0 || xi1 == 0.0 || xi2 == 0.0 {
        return Err(Error::DegenerateFrequency(format!(
            "kernel needs xi, xi1, xi2 != 0, got ({xi}, {xi1}, {xi2})"
        )));
    }
    Ok(kernel_unchecked(zeta, zeta1, t, params, singular_tol))
}

#[inline]
fn kernel_unchecked(
    zeta: (f64, f64),
    zeta1: (f64, f64),
    t: f64,
    params: &ModelParams,
    singular_tol: f64,
) -> Complex64 {
    let (xi, eta) = zeta;
    let (xi1, eta1) = zeta1;
    let r = resonance_unchecked(xi, eta, xi1, eta1, params.epsilon);
    let m = dissipation_gap(xi, xi1, params);
    let rho = dissipation(xi, params);
    let d = Complex64::new(-m, r);
    let damp = (-t * rho).exp();
    if d.norm() < singular_tol * (1.0 + m.abs() + r.abs()) {
        let td = d * t;
        return damp * t * (1.0 + td / 2.0 + td * td / 6.0);
    }
    let td = d * t;
    if td.norm() <= 1.0 {
        damp * expm1_c(td) / d
    } else {
        let rho12 = dissipation(xi1, params) + dissipation(xi - xi1, params);
        ((-t * rho12).exp() * Complex64::from_polar(1.0, t * r) - damp) / d
    }
}

/// One signed rectangle of the data: `weight * indicator(rect)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedRect {
    pub rect: Rect,
    pub weight: f64,
}

/// The data family `phi_N`.
///
/// The transform carries `amplitude / 2` on each of `A_N, B_N, -A_N, -B_N`,
/// which is the real part of the one-sided profile.
#[derive(Debug, Clone)]
pub struct RectangleData {
    n: f64,
    s: f64,
    amplitude: f64,
    pieces: Vec<SignedRect>,
}

impl RectangleData {
    pub fn new(n: f64, s: f64) -> Result<Self> {
        Self::with_amplitude(n, s, n.powf(-1.5 - s))
    }

    pub fn with_amplitude(n: f64, s: f64, amplitude: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0 && s.is_finite() && amplitude.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rectangle data needs finite N > 0, got N = {n}, s = {s}"
            )));
        }
        let a = Self::a_rect_of(n);
        let b = Self::b_rect_of(n);
        let w = 0.5 * amplitude;
        let pieces = [a, b, a.neg(), b.neg()]
            .into_iter()
            .map(|rect| SignedRect { rect, weight: w })
            .collect();
        Ok(Self {
            n,
            s,
            amplitude,
            pieces,
        })
    }

    fn a_rect_of(n: f64) -> Rect {
        Rect::new((0.5 * n, n), (-6.0 * n * n, 6.0 * n * n))
    }

    fn b_rect_of(n: f64) -> Rect {
        Rect::new((n, 2.0 * n), (2.0 * n * n, 3.0 * n * n))
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn a_rect(&self) -> Rect {
        Self::a_rect_of(self.n)
    }

    pub fn b_rect(&self) -> Rect {
        Self::b_rect_of(self.n)
    }

    pub fn pieces(&self) -> &[SignedRect] {
        &self.pieces
    }

    /// `phi_N^(zeta)`, closed rectangles.
    pub fn value_at(&self, zeta: (f64, f64)) -> f64 {
        self.pieces
            .iter()
            .filter(|p| p.rect.contains(zeta))
            .map(|p| p.weight)
            .sum()
    }

    /// `||phi_N||_{H^{s,0}}` with weight `(1 + |xi|)^{2s}`, exact.
    pub fn sobolev_norm(&self) -> f64 {
        let e = 2.0 * self.s + 1.0;
        let prim = |x: f64| {
            if e.abs() < 1e-12 {
                (1.0 + x).ln()
            } else {
                (1.0 + x).powf(e) / e
            }
        };
        // the pieces overlap only on null sets
        let sq: f64 = self
            .pieces
            .iter()
            .map(|p| {
                let lo = p.rect.xi.lo.abs().min(p.rect.xi.hi.abs());
                let hi = p.rect.xi.lo.abs().max(p.rect.xi.hi.abs());
                p.weight * p.weight * (prim(hi) - prim(lo)) * p.rect.eta.len()
            })
            .sum();
        sq.sqrt()
    }

    /// Sum sets `S + S'` over all ordered pairs.
    pub fn sum_sets(&self) -> Vec<Rect> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for q in &self.pieces {
                out.push(p.rect.sum(&q.rect));
            }
        }
        out
    }

    /// The region `k_zeta = {zeta1 in B_N, zeta - zeta1 in A_N}` and its swap.
    pub fn k_zeta(&self, zeta: (f64, f64)) -> Vec<Rect> {
        let (a, b) = (self.a_rect(), self.b_rect());
        [convolution_cell(zeta, &b, &a), convolution_cell(zeta, &a, &b)]
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Time of the second-iterate measurement, `t_N = N^{-4-eps}`.
pub fn schedule_time(n: f64, eps: f64) -> f64 {
    n.powf(-4.0 - eps)
}

/// Inner quadrature over convolution cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerRule {
    /// Tensor Gauss-Legendre of orders `(m_xi, m_eta)` per cell.
    GaussLegendre { m_xi: usize, m_eta: usize },
    /// Riemann sum over lattice points `(a dxi, b deta)` of the closed cell,
    /// matching a periodic grid of that spacing.
    Lattice { dxi: f64, deta: f64 },
}

enum InnerQuad {
    Gauss(GaussLegendre, GaussLegendre),
    Lattice(f64, f64),
}

/// Mode-wise evaluator for the second iterate at a fixed time.
pub struct SecondIterate<'a> {
    data: &'a RectangleData,
    t: f64,
    params: &'a ModelParams,
    quad: InnerQuad,
    singular_tol: f64,
}

impl<'a> SecondIterate<'a> {
    pub fn new(
        data: &'a RectangleData,
        t: f64,
        params: &'a ModelParams,
        rule: InnerRule,
        singular_tol: f64,
    ) -> Result<Self> {
        let quad = match rule {
            InnerRule::GaussLegendre { m_xi, m_eta } => {
                if m_xi == 0 || m_eta == 0 {
                    return Err(Error::InvalidArgument("quadrature orders must be positive".into()));
                }
                InnerQuad::Gauss(GaussLegendre::new(m_xi), GaussLegendre::new(m_eta))
            }
            InnerRule::Lattice { dxi, deta } => {
                if !(dxi > 0.0 && deta > 0.0) {
                    return Err(Error::InvalidArgument("lattice spacings must be positive".into()));
                }
                InnerQuad::Lattice(dxi, deta)
            }
        };
        Ok(Self {
            data,
            t,
            params,
            quad,
            singular_tol,
        })
    }

    /// `int_{cell} K(zeta, zeta1, t) dzeta1` for the pair `(S, S')`, weights excluded.
    pub fn pair_integral(&self, zeta: (f64, f64), s: &Rect, s2: &Rect) -> Result<Complex64> {
        let Some(cell) = convolution_cell(zeta, s, s2) else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let k = |z1: (f64, f64)| -> Result<Complex64> {
            kernel_with_tol(zeta, z1, self.t, self.params, self.singular_tol)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        match &self.quad {
            InnerQuad::Gauss(gx, gy) => {
                if cell.area() == 0.0 {
                    return Ok(acc);
                }
                for (x, wx) in gx.mapped(cell.xi.lo, cell.xi.hi) {
                    for (y, wy) in gy.mapped(cell.eta.lo, cell.eta.hi) {
                        acc += k((x, y))? * (wx * wy);
                    }
                }
            }
            InnerQuad::Lattice(dx, dy) => {
                let (ia, ib) = lattice_range(&cell.xi, *dx);
                let (ja, jb) = lattice_range(&cell.eta, *dy);
                for i in ia..=ib {
                    for j in ja..=jb {
                        acc += k((i as f64 * dx, j as f64 * dy))?;
                    }
                }
                acc *= dx * dy;
            }
        }
        Ok(acc)
    }

    /// `u_2^(zeta, t)`.
    ///
    /// ```text
    /// u_2^(zeta) = -(2 pi)^{-2} Lambda^(xi) e^{i t P(zeta)}
    ///              int phi^(zeta1) phi^(zeta - zeta1) K(zeta, zeta1, t) dzeta1
    /// ```
    ///
    /// Ordered pairs are folded with the swap symmetry of the kernel.
    pub fn mode(&self, zeta: (f64, f64)) -> Result<Complex64> {
        let (xi, eta) = zeta;
        if xi == 0.0 {
            // Lambda^(0) = 0
            return Ok(Complex64::new(0.0, 0.0));
        }
        let pieces = self.data.pieces();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, p) in pieces.iter().enumerate() {
            for q in &pieces[i..] {
                let mult = if std::ptr::eq(p, q) { 1.0 } else { 2.0 };
                let v = self.pair_integral(zeta, &p.rect, &q.rect)?;
                acc += v * (mult * p.weight * q.weight);
            }
        }
        let pre = -lambda_symbol(xi, self.params)
            * Complex64::from_polar(1.0, self.t * dispersion(xi, eta, self.params))
            / (4.0 * PI * PI);
        Ok(pre * acc)
    }
}

fn lattice_range(iv: &Interval, d: f64) -> (i64, i64) {
    let tol = 1e-9;
    ((iv.lo / d - tol).ceil() as i64, (iv.hi / d + tol).floor() as i64)
}

/// `u_2^(zeta, t)` for the data family, see [`SecondIterate::mode`].
pub fn second_iterate_mode(
    zeta: (f64, f64),
    data: &RectangleData,
    t: f64,
    params: &ModelParams,
    inner: InnerRule,
) -> Result<Complex64> {
    SecondIterate::new(data, t, params, inner, DEFAULT_SINGULAR_TOL)?.mode(zeta)
}

/// Scan configuration for the norm-growth experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub n_list: Vec<f64>,
    pub s_list: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Outer orders `(M_xi, M_eta)` per cell.
    #[serde(default = "default_orders")]
    pub outer: (usize, usize),
    /// Inner orders `(m_xi, m_eta)` per convolution cell.
    #[serde(default = "default_orders")]
    pub inner: (usize, usize),
    #[serde(default = "default_singular_tol")]
    pub singular_tol: f64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_orders() -> (usize, usize) {
    (8, 8)
}

fn default_singular_tol() -> f64 {
    DEFAULT_SINGULAR_TOL
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_list: vec![16.0, 32.0, 64.0, 128.0],
            s_list: vec![-0.75, -0.25],
            eps: DEFAULT_EPS,
            outer: default_orders(),
            inner: default_orders(),
            singular_tol: DEFAULT_SINGULAR_TOL,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        let orders = [self.outer.0, self.outer.1, self.inner.0, self.inner.1];
        if orders.iter().any(|&m| m < 8) {
            return Err(Error::Config(format!("quadrature orders must be >= 8, got {orders:?}")));
        }
        if !(self.singular_tol > 0.0 && self.singular_tol.is_finite()) {
            return Err(Error::Config("singular_tol must be positive".into()));
        }
        if self.n_list.iter().any(|&n| !(n >= 8.0 && n.is_finite())) {
            return Err(Error::Config("every N must be >= 8".into()));
        }
        if self.s_list.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("s values must be finite".into()));
        }
        Ok(())
    }

    /// Same configuration with every quadrature order doubled.
    pub fn refined(&self) -> Self {
        Self {
            outer: (2 * self.outer.0, 2 * self.outer.1),
            inner: (2 * self.inner.0, 2 * self.inner.1),
            ..self.clone()
        }
    }
}

fn breakpoints(values: impl IntoIterator<Item = f64>, scale: f64) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
    v
}

/// Outer cells tiling the support of `u_2`: the grid generated by all
/// pairwise edge sums, restricted to cells inside some sum set.
pub fn outer_cells(data: &RectangleData) -> Vec<Rect> {
    let sums = data.sum_sets();
    let n = data.n();
    let xs = breakpoints(
        sums.iter().flat_map(|r| [r.xi.lo, r.xi.hi]).chain(std::iter::once(0.0)),
        n,
    );
    let ys = breakpoints(
        sums.iter().flat_map(|r| [r.eta.lo, r.eta.hi]).chain(std::iter::once(0.0)),
        n * n,
    );
    let mut cells = Vec::new();
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let c = Rect::new((wx[0], wx[1]), (wy[0], wy[1]));
            if sums.iter().any(|s| s.contains(c.center())) {
                cells.push(c);
            }
        }
    }
    cells
}

/// `||u_{2,N}(t_N)||_{H^{s,0}}` for every `s` in `s_list`, sharing the
/// mode evaluations (the amplitude enters as an overall factor).
pub fn iterate_norms(n: f64, s_list: &[f64], params: &ModelParams, config: &ScanConfig) -> Result<Vec<f64>> {
    if !(n >= 8.0) {
        return Err(Error::InvalidArgument(format!("iterate norm needs N >= 8, got {n}")));
    }
    let unit = RectangleData::with_amplitude(n, 0.0, 1.0)?;
    let t = schedule_time(n, config.eps);
    let eval = SecondIterate::new(
        &unit,
        t,
        params,
        InnerRule::GaussLegendre {
            m_xi: config.inner.0,
            m_eta: config.inner.1,
        },
        config.singular_tol,
    )?;
    let gx = GaussLegendre::new(config.outer.0);
    let gy = GaussLegendre::new(config.outer.1);
    let mut nodes = Vec::new();
    for c in outer_cells(&unit) {
        for (x, wx) in gx.mapped(c.xi.lo, c.xi.hi) {
            for (y, wy) in gy.mapped(c.eta.lo, c.eta.hi) {
                nodes.push((x, y, wx * wy));
            }
        }
    }
    let values: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&(x, y, _)| {
            let v = eval.mode((x, y))?.norm_sqr();
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteIntegrand { xi: x, eta: y })
            }
        })
        .collect();
    let mut sums = vec![0.0; s_list.len()];
    for (&(x, _, w), v) in nodes.iter().zip(values) {
        let v = v?;
        for (acc, s) in sums.iter_mut().zip(s_list) {
            *acc += w * (1.0 + x.abs()).powf(2.0 * s) * v;
        }
    }
    Ok(sums
        .into_iter()
        .zip(s_list)
        .map(|(sq, s)| {
            let amp = n.powf(-1.5 - s);
            amp * amp * sq.sqrt()
        })
        .collect())
}

pub fn iterate_norm(n: f64, s: f64, params: &ModelParams, config: &ScanConfig) -> Result<f64> {
    Ok(iterate_norms(n, &[s], params, config)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: f64,
    pub s: f64,
    pub eps: f64,
    pub norm: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// `(s, slope)` in the order of the configuration.
    pub slopes: Vec<(f64, f64)>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Norm table over `N x s` and the log-log slope per `s`.
pub fn scan_and_fit(config: &ScanConfig, params: &ModelParams) -> Result<ScanResult> {
    config.validate()?;
    if config.n_list.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 4 values of N, got {}",
            config.n_list.len()
        )));
    }
    let table: Vec<Vec<f64>> = config
        .n_list
        .iter()
        .map(|&n| iterate_norms(n, &config.s_list, params, config))
        .collect::<Result<_>>()?;
    let logn: Vec<f64> = config.n_list.iter().map(|n| n.ln()).collect();
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for (k, &s) in config.s_list.iter().enumerate() {
        let logs: Vec<f64> = table.iter().map(|r| r[k].ln()).collect();
        let slope = fit_slope(&logn, &logs);
        slopes.push((s, slope));
        for (i, &n) in config.n_list.iter().enumerate() {
            rows.push(ScanRow {
                n,
                s,
                eps: config.eps,
                norm: table[i][k],
                slope,
            });
        }
    }
    Ok(ScanResult { rows, slopes })
}

/// Largest `|M(xi, xi1)|` and `|R(zeta, zeta1)|` over a sample of
/// `zeta in [3N/2, 3N] x [-4N^2, 9N^2]`, `zeta1 in k_zeta`.
pub fn sampled_symbol_maxima(n: f64, params: &ModelParams, per_axis: usize) -> (f64, f64) {
    let data = RectangleData::with_amplitude(n, 0.0, 1.0).expect("valid N");
    let mut max_m: f64 = 0.0;
    let mut max_r: f64 = 0.0;
    let grid = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64;
    for i in 0..per_axis {
        for j in 0..per_axis {
            let zeta = (grid(1.5 * n, 3.0 * n, i), grid(-4.0 * n * n, 9.0 * n * n, j));
            for cell in data.k_zeta(zeta) {
                for a in 0..per_axis {
                    for b in 0..per_axis {
                        let z1 = (grid(cell.xi.lo, cell.xi.hi, a), grid(cell.eta.lo, cell.eta.hi, b));
                        let m = dissipation_gap(zeta.0, z1.0, params);
                        let r = resonance_unchecked(zeta.0, zeta.1, z1.0, z1.1, params.epsilon);
                        max_m = max_m.max(m.abs());
                        max_r = max_r.max(r.abs());
                    }
                }
            }
        }
    }
    (max_m, max_r)
}

/// `min exp(-t_N rho(xi))` over `xi in [3N/2, 3N]`.
pub fn band_damping(n: f64, eps: f64, params: &ModelParams) -> f64 {
    let t = schedule_time(n, eps);
    (0..=64)
        .map(|i| 1.5 * n + 1.5 * n * i as f64 / 64.0)
        .map(|xi| (-t * dissipation(xi, params)).exp())
        .fold(f64::INFINITY, f64::min)
}
