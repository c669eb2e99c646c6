//! Periodic 2D grids, real <-> spectral transforms, dealiasing and the
//! zero-x-mode projection.
//!
//! Fourier coefficients follow the continuum convention
//! `f^(xi, eta) = \int f(x, y) e^{-i(x xi + y eta)} dx dy`, discretised with the
//! rectangle rule: the forward transform carries the cell area
//! `lx * ly / (nx * ny)` and the inverse carries `1 / (lx * ly)`. All `2 pi`
//! factors live here, so symbol and norm code can be written exactly as the
//! continuum formulas read.
//!
//! Coefficients are stored row-major (y outer, x inner) in FFT order, so the
//! mode at storage column `jx` has signed index `jx` for `jx < nx / 2` and
//! `jx - nx` otherwise.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, lx) x [0, ly)`.
pub struct SpectralGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    xi: Vec<f64>,
    eta: Vec<f64>,
    mask: Vec<bool>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if n == 1 || i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl SpectralGrid {
    /// Builds a grid with `nx x ny` modes and periods `lx`, `ly`.
    ///
    /// `nx` must be even and at least 2; `ny` is even or exactly 1 (the
    /// one-dimensional degenerate grid, `eta == {0}`).
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Arc<Self>> {
        if nx < 2 || nx % 2 != 0 {
            return Err(Error::InvalidGrid(format!("nx = {nx} must be even and >= 2")));
        }
        if ny == 0 || (ny != 1 && ny % 2 != 0) {
            return Err(Error::InvalidGrid(format!("ny = {ny} must be even or 1")));
        }
        if !lx.is_finite() || !ly.is_finite() || lx <= 0.0 || ly <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "periods must be finite and positive, got lx = {lx}, ly = {ly}"
            )));
        }

        let xi = (0..nx)
            .map(|i| 2.0 * PI / lx * signed_index(i, nx) as f64)
            .collect();
        let eta = (0..ny)
            .map(|i| 2.0 * PI / ly * signed_index(i, ny) as f64)
            .collect();

        // 2/3 rule; the unpaired Nyquist index -n/2 always falls outside it.
        let jmax = (nx / 3) as i64;
        let kmax = (ny / 3) as i64;
        let mut mask = Vec::with_capacity(nx * ny);
        for ky in 0..ny {
            let k = signed_index(ky, ny);
            for jx in 0..nx {
                let j = signed_index(jx, nx);
                mask.push(j.abs() <= jmax && k.abs() <= kmax);
            }
        }

        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            nx,
            ny,
            lx,
            ly,
            xi,
            eta,
            mask,
            fft_x: planner.plan_fft_forward(nx),
            ifft_x: planner.plan_fft_inverse(nx),
            fft_y: planner.plan_fft_forward(ny),
            ifft_y: planner.plan_fft_inverse(ny),
        }))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_one_dimensional(&self) -> bool {
        self.ny == 1
    }

    /// x-wavenumbers in storage (FFT) order.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// y-wavenumbers in storage (FFT) order.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Wavenumber pair of the mode stored at flat index `idx`.
    #[inline]
    pub fn zeta(&self, idx: usize) -> (f64, f64) {
        (self.xi[idx % self.nx], self.eta[idx / self.nx])
    }

    /// Signed integer indices `(j, k)` of the mode stored at `idx`.
    pub fn mode_of(&self, idx: usize) -> (i64, i64) {
        (signed_index(idx % self.nx, self.nx), signed_index(idx / self.nx, self.ny))
    }

    /// Flat index of signed mode `(j, k)`, if it is on the grid.
    pub fn index_of(&self, j: i64, k: i64) -> Option<usize> {
        let wrap = |m: i64, n: usize| -> Option<usize> {
            let n = n as i64;
            let lo = if n == 1 { 0 } else { -n / 2 };
            let hi = if n == 1 { 0 } else { n / 2 - 1 };
            (lo..=hi).contains(&m).then(|| m.rem_euclid(n) as usize)
        };
        Some(wrap(k, self.ny)? * self.nx + wrap(j, self.nx)?)
    }

    /// Flat index of the mode `-zeta` paired with `idx` by conjugate symmetry.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let jx = idx % self.nx;
        let ky = idx / self.nx;
        let cj = (self.nx - jx) % self.nx;
        let ck = (self.ny - ky) % self.ny;
        ck * self.nx + cj
    }

    /// True when the mode survives the 2/3 dealiasing rule.
    #[inline]
    pub fn kept(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.mask
    }

    /// True for modes with an unpaired Nyquist index in x or y.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let jx = idx % self.nx;
        let ky = idx / self.nx;
        jx == self.nx / 2 || (self.ny > 1 && ky == self.ny / 2)
    }

    /// Physical cell area `dx * dy`.
    pub fn cell_area(&self) -> f64 {
        self.lx * self.ly / (self.len() as f64)
    }

    /// Spectral quadrature weight `dxi * deta = (2 pi)^2 / (lx ly)`.
    pub fn spectral_weight(&self) -> f64 {
        4.0 * PI * PI / (self.lx * self.ly)
    }

    /// Physical sample coordinates of flat index `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        (
            self.lx * ix as f64 / self.nx as f64,
            self.ly * iy as f64 / self.ny as f64,
        )
    }

    fn fft_2d(&self, buf: &mut [Complex64], forward: bool) {
        let (fx, fy) = if forward {
            (&self.fft_x, &self.fft_y)
        } else {
            (&self.ifft_x, &self.ifft_y)
        };
        fx.process(buf);
        if self.ny > 1 {
            let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
            for jx in 0..self.nx {
                for ky in 0..self.ny {
                    col[ky] = buf[ky * self.nx + jx];
                }
                fy.process(&mut col);
                for ky in 0..self.ny {
                    buf[ky * self.nx + jx] = col[ky];
                }
            }
        }
    }
}

/// Real samples on a grid, row-major with y outer.
#[derive(Debug, Clone)]
pub struct RealField {
    grid: Arc<SpectralGrid>,
    data: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<SpectralGrid>, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {bad}")));
        }
        Ok(Self { grid, data })
    }

    /// Wraps samples without the finiteness check; blow-ups must reach the
    /// stepper's instability check instead of panicking here.
    pub(crate) fn from_raw(grid: Arc<SpectralGrid>, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.point(i);
                f(x, y)
            })
            .collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Rectangle-rule `L^2` norm over the periodic cell.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }
}

/// Fourier coefficients of a real field on a [`SpectralGrid`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
    zero_x_mean: bool,
}

impl SpectralField {
    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self {
            grid,
            coeffs,
            zero_x_mean: false,
        }
    }

    pub fn from_coeffs(grid: Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(Self {
            grid,
            coeffs,
            zero_x_mean: false,
        })
    }

    /// Fills every mode from `f(xi, eta)`.
    ///
    /// The caller is responsible for `f(-zeta) == conj(f(zeta))`.
    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let coeffs = (0..grid.len())
            .map(|i| {
                let (xi, eta) = grid.zeta(i);
                f(xi, eta)
            })
            .collect();
        Self {
            grid,
            coeffs,
            zero_x_mean: false,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        self.zero_x_mean = false;
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_zero_x_mean(&self) -> bool {
        self.zero_x_mean
    }

    /// Marks the field as zero-x-mean without touching coefficients; only for
    /// operations that provably keep the `xi = 0` column at zero.
    pub(crate) fn set_zero_x_mean(&mut self, flag: bool) {
        self.zero_x_mean = flag;
    }

    pub fn get(&self, j: i64, k: i64) -> Option<Complex64> {
        self.grid.index_of(j, k).map(|i| self.coeffs[i])
    }

    pub fn set(&mut self, j: i64, k: i64, value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(j, k)
            .ok_or_else(|| Error::InvalidArgument(format!("mode ({j}, {k}) is not on the grid")))?;
        self.coeffs[idx] = value;
        if j == 0 {
            self.zero_x_mean = false;
        }
        Ok(())
    }

    /// Multiplies every mode by `m(idx)`.
    pub fn apply_multiplier(&mut self, m: impl Fn(usize) -> Complex64) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c *= m(i);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check_same_grid(other)?;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += *o * a;
        }
        self.zero_x_mean &= other.zero_x_mean;
        Ok(())
    }

    pub fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `sum |c|^2` over all modes, in storage order.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Physical `L^2` norm via discrete Parseval, `||u||^2 = sum |c|^2 / (lx ly)`.
    pub fn l2_norm(&self) -> f64 {
        (self.mass() / (self.grid.lx * self.grid.ly)).sqrt()
    }

    /// Physical `L^2` distance between two fields on the same grid.
    pub fn l2_distance(&self, other: &SpectralField) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s / (self.grid.lx * self.grid.ly)).sqrt()
    }

    /// `||d_x^p u||_{L^2}^2` computed from the spectrum.
    pub fn x_derivative_energy(&self, order: i32) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| self.grid.zeta(i).0.powi(2 * order) * c.norm_sqr())
            .sum();
        s / (self.grid.lx * self.grid.ly)
    }

    /// Largest `|c(zeta) - conj(c(-zeta))|` over the grid, Nyquist modes excluded.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&i| !self.grid.is_nyquist(i))
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Forward transform, `f^(zeta) ~ \int f e^{-i x.zeta}`.
pub fn forward(f: &RealField) -> SpectralField {
    let grid = f.grid.clone();
    let mut buf: Vec<Complex64> = f.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_2d(&mut buf, true);
    let w = grid.cell_area();
    for c in &mut buf {
        *c *= w;
    }
    SpectralField {
        grid,
        coeffs: buf,
        zero_x_mean: false,
    }
}

/// Inverse transform, `f(x) = (lx ly)^{-1} sum f^(zeta) e^{i x.zeta}`.
///
/// Imaginary parts (which vanish for conjugate-symmetric input) are dropped.
pub fn inverse(f: &SpectralField) -> RealField {
    let grid = f.grid.clone();
    let mut buf = f.coeffs.clone();
    grid.fft_2d(&mut buf, false);
    let w = 1.0 / (grid.lx * grid.ly);
    let data = buf.iter().map(|c| c.re * w).collect();
    RealField { grid, data }
}

/// Zeroes every mode outside the 2/3 mask (including Nyquist modes).
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField) {
    let grid = f.grid.clone();
    for (i, c) in f.coeffs.iter_mut().enumerate() {
        if !grid.kept(i) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Zeroes the `xi = 0` column and sets the zero-x-mean flag.
pub fn project_zero_x_mode(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    project_zero_x_mode_in_place(&mut out);
    out
}

pub fn project_zero_x_mode_in_place(f: &mut SpectralField) {
    let nx = f.grid.nx;
    for row in f.coeffs.chunks_mut(nx) {
        row[0] = Complex64::new(0.0, 0.0);
    }
    f.zero_x_mean = true;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWO_PI: f64 = 2.0 * PI;

    fn random_real(grid: &Arc<SpectralGrid>, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        RealField::new(grid.clone(), data).unwrap()
    }

    fn random_kept(grid: &Arc<SpectralGrid>, seed: u64) -> SpectralField {
        dealias(&forward(&random_real(grid, seed)))
    }

    #[test]
    fn wavenumbers_on_two_pi_grid_are_integers() {
        let g = SpectralGrid::new(8, 8, TWO_PI, TWO_PI).unwrap();
        let mut xi: Vec<i64> = g.xi().iter().map(|v| v.round() as i64).collect();
        xi.sort();
        assert_eq!(xi, (-4..=3).collect::<Vec<_>>());
        assert!(g.xi().iter().all(|a| (a - a.round()).abs() < 1e-12));
        let nyq = g.index_of(-4, 0).unwrap();
        assert!(g.is_nyquist(nyq));
        assert!(!g.kept(nyq));
    }

    #[test]
    fn degenerate_one_dimensional_grid() {
        let g = SpectralGrid::new(4, 1, TWO_PI, TWO_PI).unwrap();
        assert_eq!(g.eta(), &[0.0]);
        assert!(g.is_one_dimensional());
        assert_eq!(g.index_of(1, 0), Some(1));
        assert_eq!(g.index_of(1, 1), None);
    }

    #[test]
    fn dealias_mask_on_six_grid() {
        let g = SpectralGrid::new(6, 6, TWO_PI, TWO_PI).unwrap();
        for i in 0..g.len() {
            let (j, k) = g.mode_of(i);
            assert_eq!(g.kept(i), j.abs() <= 2 && k.abs() <= 2, "mode ({j}, {k})");
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(SpectralGrid::new(7, 8, 1.0, 1.0).is_err());
        assert!(SpectralGrid::new(8, 5, 1.0, 1.0).is_err());
        assert!(SpectralGrid::new(0, 8, 1.0, 1.0).is_err());
        assert!(SpectralGrid::new(8, 8, -1.0, 1.0).is_err());
        assert!(SpectralGrid::new(8, 8, 1.0, f64::NAN).is_err());
        assert!(SpectralGrid::new(8, 8, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let g = SpectralGrid::new(8, 8, 1.0, 1.0).unwrap();
        assert!(matches!(
            RealField::new(g.clone(), vec![0.0; 10]),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(SpectralField::from_coeffs(g, vec![Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn constant_field_transform() {
        let g = SpectralGrid::new(8, 8, TWO_PI, TWO_PI).unwrap();
        let f = forward(&RealField::from_fn(g.clone(), |_, _| 1.0));
        for i in 0..g.len() {
            let expected = if g.mode_of(i) == (0, 0) { TWO_PI * TWO_PI } else { 0.0 };
            assert!((f.coeffs()[i] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_transform() {
        let g = SpectralGrid::new(8, 8, TWO_PI, TWO_PI).unwrap();
        let f = forward(&RealField::from_fn(g.clone(), |x, _| x.cos()));
        for i in 0..g.len() {
            let (j, k) = g.mode_of(i);
            let expected = if j.abs() == 1 && k == 0 { TWO_PI * TWO_PI / 2.0 } else { 0.0 };
            assert!((f.coeffs()[i] - expected).norm() < 1e-12, "mode ({j}, {k})");
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for &(nx, ny, lx, ly) in &[
            (8, 8, TWO_PI, TWO_PI),
            (16, 6, 3.0, 7.5),
            (32, 1, 10.0, 1.0),
            (12, 20, 1.0, 2.0),
        ] {
            let g = SpectralGrid::new(nx, ny, lx, ly).unwrap();
            let f = random_real(&g, 7);
            let spec = forward(&f);
            let back = inverse(&spec);
            let err: f64 = f
                .data()
                .iter()
                .zip(back.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = f.data().iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(err / scale < 1e-12, "round trip {nx}x{ny}: {err}");

            let again = forward(&back);
            let d = spec.l2_distance(&again) / spec.l2_norm();
            assert!(d < 1e-12);

            let direct: f64 = f.data().iter().map(|v| v * v).sum::<f64>() * g.cell_area();
            let parseval = spec.mass() / (lx * ly);
            assert!(((direct - parseval) / direct).abs() < 1e-10);
            assert!(spec.conjugate_symmetry_defect() < 1e-12 * spec.max_abs());
        }
    }

    #[test]
    fn parseval_on_two_pi_grid_uses_two_pi_squared() {
        let g = SpectralGrid::new(16, 16, TWO_PI, TWO_PI).unwrap();
        let f = random_real(&g, 3);
        let direct: f64 = f.data().iter().map(|v| v * v).sum::<f64>() * g.cell_area();
        let spectral = forward(&f).mass() / (TWO_PI * TWO_PI);
        assert!(((direct - spectral) / direct).abs() < 1e-10);
    }

    #[test]
    fn dealias_keeps_and_kills() {
        let g = SpectralGrid::new(16, 16, TWO_PI, TWO_PI).unwrap();
        let kept = random_kept(&g, 1);
        let again = dealias(&kept);
        assert_eq!(kept.coeffs(), again.coeffs());

        let mut outside = forward(&random_real(&g, 2));
        for (i, c) in outside.coeffs_mut().iter_mut().enumerate() {
            if g.kept(i) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        assert_eq!(dealias(&outside).max_abs(), 0.0);
    }

    /// Product on a 3/2-padded grid, truncated back: the aliasing-free oracle.
    fn padded_product(a: &SpectralField, b: &SpectralField) -> SpectralField {
        let g = a.grid();
        let pny = if g.ny() == 1 { 1 } else { 3 * g.ny() / 2 };
        let pg = SpectralGrid::new(3 * g.nx() / 2, pny, g.lx(), g.ly()).unwrap();
        let lift = |f: &SpectralField| {
            let mut p = SpectralField::zeros(pg.clone());
            for i in 0..g.len() {
                let (j, k) = g.mode_of(i);
                p.set(j, k, f.coeffs()[i]).unwrap();
            }
            p
        };
        let (pa, pb) = (inverse(&lift(a)), inverse(&lift(b)));
        let prod: Vec<f64> = pa.data().iter().zip(pb.data()).map(|(x, y)| x * y).collect();
        let ps = forward(&RealField::new(pg.clone(), prod).unwrap());
        let mut out = SpectralField::zeros(g.clone());
        for i in 0..g.len() {
            let (j, k) = g.mode_of(i);
            out.coeffs_mut()[i] = ps.get(j, k).unwrap();
        }
        dealias(&out)
    }

    #[test]
    fn masked_product_matches_padding_oracle() {
        for &(nx, ny) in &[(16, 16), (32, 8), (64, 1)] {
            let g = SpectralGrid::new(nx, ny, TWO_PI, 5.0).unwrap();
            let a = random_kept(&g, 11);
            let b = random_kept(&g, 12);
            let (ra, rb) = (inverse(&a), inverse(&b));
            let prod: Vec<f64> = ra.data().iter().zip(rb.data()).map(|(x, y)| x * y).collect();
            let masked = dealias(&forward(&RealField::new(g.clone(), prod).unwrap()));
            let oracle = padded_product(&a, &b);
            let scale = oracle.max_abs();
            for (m, o) in masked.coeffs().iter().zip(oracle.coeffs()) {
                assert!((m - o).norm() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn projection_zeroes_column_and_is_idempotent() {
        let g = SpectralGrid::new(8, 8, TWO_PI, TWO_PI).unwrap();
        let mut f = forward(&random_real(&g, 5));
        f.set(0, 2, Complex64::new(5.0, 0.0)).unwrap();
        let p = project_zero_x_mode(&f);
        assert_eq!(p.get(0, 2).unwrap(), Complex64::new(0.0, 0.0));
        for i in 0..g.len() {
            if g.mode_of(i).0 != 0 {
                assert_eq!(p.coeffs()[i], f.coeffs()[i]);
            }
        }
        assert!(p.is_zero_x_mean());
        let pp = project_zero_x_mode(&p);
        assert_eq!(pp.coeffs(), p.coeffs());
    }

    #[test]
    fn projection_gives_zero_x_integral() {
        let g = SpectralGrid::new(16, 12, 3.0, 4.0).unwrap();
        let u = inverse(&project_zero_x_mode(&forward(&random_real(&g, 9))));
        let dx = g.lx() / g.nx() as f64;
        for row in u.data().chunks(g.nx()) {
            let integral: f64 = row.iter().sum::<f64>() * dx;
            assert!(integral.abs() < 1e-12);
        }
    }

    #[test]
    fn projection_commutes_with_dealias() {
        let g = SpectralGrid::new(16, 16, TWO_PI, TWO_PI).unwrap();
        let f = forward(&random_real(&g, 21));
        let a = dealias(&project_zero_x_mode(&f));
        let b = project_zero_x_mode(&dealias(&f));
        assert_eq!(a.coeffs(), b.coeffs());
        assert!(a.conjugate_symmetry_defect() < 1e-13);
    }
}
