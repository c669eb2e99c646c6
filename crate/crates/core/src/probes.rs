//! Empirical ratio probes for the linear, retarded and bilinear estimates
//! in Bourgain spaces.
//!
//! The implied constants are not computable, so every probe reports the
//! spread of `LHS / RHS` over an ensemble; acceptance is about stability of
//! that spread under refinement, or about its growth along a family.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::duhamel::{cutoff_theta, duhamel, Trajectory};
use crate::error::{Error, Result};
use crate::illposed::RectangleData;
use crate::norms::{bourgain_norm, sobolev_norm, NormSpec, SpaceTimeField};
use crate::propagator::{apply_semigroup, nonlinear_product};
use crate::spectral::{SpectralField, SpectralGrid};
use crate::symbols::ModelParams;

/// Summary of an ensemble of ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeStats {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl ProbeStats {
    pub fn from_ratios(ratios: Vec<f64>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::InvalidArgument("probe ensemble has no admissible members".into()));
        }
        let mut sorted = ratios.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        Ok(Self {
            min: sorted[0],
            median,
            max: sorted[k - 1],
            ratios,
        })
    }
}

/// Time sampling shared by the probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSampling {
    /// Half-width of the window `[-t_w, t_w]`.
    pub t_w: f64,
    pub dt: f64,
    pub pad_factor: usize,
}

/// Real band-limited field with `|c(j, k)| ~ (1 + |xi| + |eta|)^{-slope}`
/// on `0 < |xi| <= xi_max`, `|eta| <= eta_max`.
///
/// Coefficients are drawn in a fixed order of physical wavenumbers, so one
/// seed gives the same function on every grid of the same box that keeps
/// the band.
pub fn random_band_limited(
    grid: &Arc<SpectralGrid>,
    xi_max: f64,
    eta_max: f64,
    slope: f64,
    seed: u64,
) -> Result<SpectralField> {
    let dxi = 2.0 * std::f64::consts::PI / grid.lx();
    let deta = 2.0 * std::f64::consts::PI / grid.ly();
    let jmax = (xi_max / dxi + 1e-9).floor() as i64;
    let kmax = if grid.is_one_dimensional() {
        0
    } else {
        (eta_max / deta + 1e-9).floor() as i64
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid.clone());
    for j in 1..=jmax {
        for k in -kmax..=kmax {
            let amp = (1.0 + j as f64 * dxi + (k as f64 * deta).abs()).powf(-slope);
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            if !grid.index_of(j, k).is_some_and(|i| grid.kept(i)) {
                return Err(Error::InvalidArgument(format!("band mode ({j}, {k}) is not kept by the grid")));
            }
            f.set(j, k, c)?;
            f.set(-j, -k, c.conj())?;
        }
    }
    Ok(f)
}

/// `count` members of [`random_band_limited`] with seeds `seed, seed + 1, ...`.
pub fn random_ensemble(
    grid: &Arc<SpectralGrid>,
    count: usize,
    band: f64,
    slope: f64,
    seed: u64,
) -> Result<Vec<SpectralField>> {
    (0..count as u64)
        .map(|k| random_band_limited(grid, band, band, slope, seed + k))
        .collect()
}

/// Modulation frequencies spread evenly over `[-omega_max, omega_max)`.
pub fn forcing_frequencies(count: usize, omega_max: f64) -> Vec<f64> {
    (0..count)
        .map(|k| -omega_max + 2.0 * omega_max * k as f64 / count as f64)
        .collect()
}

/// `theta(t / scale) W(t) phi` sampled on the window.
pub fn cutoff_wave(
    phi: &SpectralField,
    scale: f64,
    sampling: TimeSampling,
    params: &ModelParams,
) -> Result<SpaceTimeField> {
    if sampling.t_w < 2.0 * scale {
        return Err(Error::InvalidArgument(format!(
            "window half-width {} does not contain the cutoff support {}",
            sampling.t_w,
            2.0 * scale
        )));
    }
    let mut f = SpaceTimeField::sample(phi.grid(), sampling.t_w, sampling.dt, sampling.pad_factor, |t| {
        apply_semigroup(phi, t, params).scaled(cutoff_theta(t / scale))
    })?;
    f.assume_compact_support()?;
    Ok(f)
}

/// Ratios `||theta(t) W(t) phi||_{X^{1/2,s1,s2}} / ||phi||_{H^{s1,s2}}`.
pub fn probe_linear_estimate(
    phis: &[SpectralField],
    spec: NormSpec,
    params: &ModelParams,
    sampling: TimeSampling,
) -> Result<ProbeStats> {
    if spec.b != 0.5 {
        return Err(Error::InvalidArgument(format!("linear estimate is stated for b = 1/2, got {}", spec.b)));
    }
    let mut ratios = Vec::new();
    for phi in phis {
        let rhs = sobolev_norm(phi, spec.s1, spec.s2);
        if rhs == 0.0 {
            continue;
        }
        let f = cutoff_wave(phi, 1.0, sampling, params)?;
        ratios.push(bourgain_norm(&f, spec, params)? / rhs);
    }
    ProbeStats::from_ratios(ratios)
}

/// `theta(t) chi_{t >= 0}(t) int_0^t W(t - t') w(t') dt'` on the window of `w`.
pub fn retarded_integral(w: &SpaceTimeField, params: &ModelParams) -> Result<SpaceTimeField> {
    let traj = w.trajectory();
    let dt = traj.dt();
    let n0 = (-traj.t0() / dt).round();
    if n0 < 0.0 || (traj.t0() + n0 * dt).abs() > 1e-9 * dt {
        return Err(Error::InvalidArgument("the time window must contain t = 0 as a node".into()));
    }
    let n0 = n0 as usize;
    if traj.time(traj.len() - 1) < 2.0 {
        return Err(Error::InvalidArgument("the time window must reach t = 2".into()));
    }
    let tail = Trajectory::new(0.0, dt, traj.frames()[n0..].to_vec())?;
    let u = duhamel(&tail, params)?;
    let zero = SpectralField::zeros(traj.grid().clone());
    let mut frames = vec![zero; n0];
    frames.extend(
        u.into_frames()
            .into_iter()
            .enumerate()
            .map(|(n, f)| f.scaled(cutoff_theta(n as f64 * dt))),
    );
    let mut out = SpaceTimeField::new(Trajectory::new(traj.t0(), dt, frames)?, w.pad_factor())?;
    out.assume_compact_support()?;
    Ok(out)
}

/// Ratios `||theta chi_+ int_0^t W(t-t') w||_{X^{1/2,s1,s2}} /
/// ||w||_{X^{-1/2+delta, s1-4 delta, s2}}`.
pub fn probe_retarded_estimate(
    ws: &[SpaceTimeField],
    spec: NormSpec,
    delta: f64,
    params: &ModelParams,
) -> Result<ProbeStats> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    let lhs_spec = NormSpec::new(0.5, spec.s1, spec.s2);
    let rhs_spec = NormSpec::new(-0.5 + delta, spec.s1 - 4.0 * delta, spec.s2);
    let mut ratios = Vec::new();
    for w in ws {
        let rhs = bourgain_norm(w, rhs_spec, params)?;
        if rhs == 0.0 {
            continue;
        }
        let u = retarded_integral(w, params)?;
        ratios.push(bourgain_norm(&u, lhs_spec, params)? / rhs);
    }
    ProbeStats::from_ratios(ratios)
}

/// `theta(t) cos(omega t) W(t) g`: forcing terms with modulation away from
/// the free dispersion relation.
pub fn modulated_forcing(
    g: &SpectralField,
    omega: f64,
    sampling: TimeSampling,
    params: &ModelParams,
) -> Result<SpaceTimeField> {
    let mut f = SpaceTimeField::sample(g.grid(), sampling.t_w, sampling.dt, sampling.pad_factor, |t| {
        apply_semigroup(g, t, params).scaled(cutoff_theta(t) * (omega * t).cos())
    })?;
    f.assume_compact_support()?;
    Ok(f)
}

/// Ratios `||Lambda(u v)||_{X^{-1/2+delta, s1-4 delta, s2}} /
/// (||u||_{X^{1/2,s1,s2}} ||v||_{X^{1/2,s1,s2}})` for
/// `u = theta_T W(t) phi`, `v = theta_T W(t) psi`.
#[allow(clippy::too_many_arguments)]
pub fn probe_bilinear_estimate(
    pairs: &[(SpectralField, SpectralField)],
    s1: f64,
    s2: f64,
    delta: f64,
    t_cut: f64,
    params: &ModelParams,
    sampling: TimeSampling,
) -> Result<ProbeStats> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    let in_spec = NormSpec::new(0.5, s1, s2);
    let out_spec = NormSpec::new(-0.5 + delta, s1 - 4.0 * delta, s2);
    let mut ratios = Vec::new();
    for (phi, psi) in pairs {
        let u = cutoff_wave(phi, t_cut, sampling, params)?;
        let v = cutoff_wave(psi, t_cut, sampling, params)?;
        let den = bourgain_norm(&u, in_spec, params)? * bourgain_norm(&v, in_spec, params)?;
        if den == 0.0 {
            continue;
        }
        let vt = v.trajectory();
        let uv = u.map(|t, a| {
            let n = ((t - vt.t0()) / vt.dt()).round() as usize;
            nonlinear_product(a, &vt.frames()[n], params)
        });
        ratios.push(bourgain_norm(&uv, out_spec, params)? / den);
    }
    ProbeStats::from_ratios(ratios)
}

/// The rectangle data on the lattice `dxi = N/8`, `deta = N^2/4`, where its
/// supports and all pairwise sums sit on grid points of a `96 x 144` grid
/// with no aliasing.
pub fn rectangle_data_on_lattice(n: f64, s: f64) -> Result<SpectralField> {
    let data = RectangleData::new(n, s)?;
    let dxi = n / 8.0;
    let deta = n * n / 4.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let grid = SpectralGrid::new(96, 144, two_pi / dxi, two_pi / deta)?;
    let coeffs: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let (j, k) = grid.mode_of(i);
            Complex64::new(data.value_at((j as f64 * dxi, k as f64 * deta)), 0.0)
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs)
}
