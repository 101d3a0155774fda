//! Synthetic radiative transfer forward model.
//!
//! A cheap, fully specified stand-in for a production radiative transfer code.
//! It produces the top-of-atmosphere reflectance spectra used as ground truth
//! for training, evaluation, and benchmarking. The defining equations, per
//! channel wavelength lambda (micrometers):
//!
//! ```text
//! tau_r(l)    = beta_r * l^(-rayleigh_exp)                 Rayleigh optical depth
//! tau_a(l)    = tau550 * (l / 0.55)^(-alpha)               aerosol optical depth
//! k_w(l)      = sum_j A_j * exp(-(l - c_j)^2 / (2 s_j^2))  water absorption
//! m_air       = 1/mu0 + 1/mu_v                             two-way air mass
//! T(l)        = exp(-(tau_r + tau_a) * m_air) * exp(-wvap * k_w * m_air)
//! s(l)        = (0.92 tau_r + 0.48 tau_a) / (1 + 0.92 tau_r + 0.48 tau_a)
//! rho_path(l) = (0.75 tau_r + 0.54 tau_a) / (4 mu0 mu_v)
//! rho_obs(l)  = rho_path + T rho_s / (1 - s rho_s)
//! ```
//!
//! Every function here is pure; concurrent use needs no synchronization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered channel-center wavelengths in micrometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    lambdas: Vec<f64>,
}

impl WavelengthGrid {
    /// Wavelengths must be strictly increasing and lie in [0.35, 2.60] um.
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Config("wavelength grid needs k >= 1".into()));
        }
        for pair in lambdas.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Config(format!(
                    "wavelengths not strictly increasing at {} -> {}",
                    pair[0], pair[1]
                )));
            }
        }
        for &l in &lambdas {
            if !(0.35..=2.60).contains(&l) {
                return Err(Error::InvalidValue {
                    name: "lambda",
                    value: l,
                    allowed: "[0.35, 2.60] um",
                });
            }
        }
        Ok(Self { lambdas })
    }

    /// Default 32-channel grid. Channels span the visible through shortwave
    /// infrared but stay off the water-vapor band cores (near the 1.38 and
    /// 1.88 um centers the atmosphere is effectively black and the surface
    /// signal vanishes); the bands are sampled on their shoulders, keeping
    /// the absorption coefficient at any channel below ~0.065 so the column
    /// stays identifiable without saturating.
    pub fn default_32() -> Self {
        Self::new(DEFAULT_LAMBDAS_32.to_vec()).expect("default grid is valid")
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    #[inline]
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    #[inline]
    pub fn lambda(&self, channel: usize) -> f64 {
        self.lambdas[channel]
    }
}

pub const DEFAULT_LAMBDAS_32: [f64; 32] = [
    0.410, 0.450, 0.490, 0.530, 0.570, 0.610, 0.650, 0.690, 0.730, 0.770, 0.810, 0.850, 0.890,
    0.905, 0.975, 1.020, 1.065, 1.205, 1.240, 1.260, 1.500, 1.540, 1.580, 1.620, 1.660, 1.700,
    1.740, 2.020, 2.100, 2.200, 2.300, 2.400,
];

/// Atmospheric state vector: solar geometry, aerosol load and slope, and
/// column water vapor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphericState {
    /// Cosine of the solar zenith angle, in [0.3, 1.0].
    pub mu0: f64,
    /// Aerosol optical depth at 0.55 um, in [0.0, 0.5].
    pub tau550: f64,
    /// Angstrom exponent, in [0.5, 2.0].
    pub alpha: f64,
    /// Column water vapor in cm, in [0.0, 5.0].
    pub wvap: f64,
}

impl AtmosphericState {
    pub fn new(mu0: f64, tau550: f64, alpha: f64, wvap: f64) -> Result<Self> {
        let s = Self {
            mu0,
            tau550,
            alpha,
            wvap,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("mu0", self.mu0, 0.3, 1.0)?;
        check_range("tau550", self.tau550, 0.0, 0.5)?;
        check_range("alpha", self.alpha, 0.5, 2.0)?;
        check_range("wvap", self.wvap, 0.0, 5.0)?;
        Ok(())
    }
}

fn check_range(name: &'static str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(Error::InvalidValue {
            name,
            value: v,
            allowed: "see type bounds",
        })
    }
}

/// Per-channel surface reflectance, each element in [0.0, 0.9].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpectrum {
    pub rho_s: Vec<f64>,
}

impl SurfaceSpectrum {
    pub fn new(rho_s: Vec<f64>) -> Result<Self> {
        for &r in &rho_s {
            if !(r.is_finite() && (0.0..=0.9).contains(&r)) {
                return Err(Error::InvalidValue {
                    name: "rho_s",
                    value: r,
                    allowed: "[0.0, 0.9]",
                });
            }
        }
        Ok(Self { rho_s })
    }

    pub fn flat(value: f64, k: usize) -> Result<Self> {
        Self::new(vec![value; k])
    }

    pub fn len(&self) -> usize {
        self.rho_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_s.is_empty()
    }
}

/// Solar geometric factor and per-channel exo-atmospheric irradiance
/// (W m^-2 um^-1); converts reflectance to sensor radiance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarIllumination {
    pub phi0: f64,
    pub e0: Vec<f64>,
}

impl SolarIllumination {
    pub fn new(phi0: f64, e0: Vec<f64>) -> Result<Self> {
        if !(phi0 > 0.0 && phi0 <= 1.0) {
            return Err(Error::InvalidValue {
                name: "phi0",
                value: phi0,
                allowed: "(0, 1]",
            });
        }
        for &e in &e0 {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidValue {
                    name: "e0",
                    value: e,
                    allowed: "> 0",
                });
            }
        }
        Ok(Self { phi0, e0 })
    }
}

/// Gaussian water-vapor absorption band: center (um), peak absorption
/// coefficient, and width sigma (um).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaterBand {
    pub center: f64,
    pub amplitude: f64,
    pub sigma: f64,
}

/// Forward-model coefficients. `quadrature_depth` adds redundant inner
/// transmittance evaluations so benchmark timings reflect the cost of a real
/// radiative transfer solve; it never changes outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub beta_r: f64,
    pub rayleigh_exp: f64,
    pub mu_v: f64,
    pub quadrature_depth: u32,
    pub water_bands: Vec<WaterBand>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            beta_r: 0.0088,
            rayleigh_exp: 4.05,
            mu_v: 1.0,
            quadrature_depth: 0,
            water_bands: vec![
                WaterBand {
                    center: 0.94,
                    amplitude: 0.30,
                    sigma: 0.02,
                },
                WaterBand {
                    center: 1.14,
                    amplitude: 0.50,
                    sigma: 0.03,
                },
                WaterBand {
                    center: 1.38,
                    amplitude: 2.00,
                    sigma: 0.04,
                },
                WaterBand {
                    center: 1.88,
                    amplitude: 3.00,
                    sigma: 0.05,
                },
            ],
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_r >= 0.0 && self.beta_r.is_finite()) {
            return Err(Error::InvalidValue {
                name: "beta_r",
                value: self.beta_r,
                allowed: ">= 0",
            });
        }
        if !(self.mu_v > 0.0 && self.mu_v <= 1.0) {
            return Err(Error::InvalidValue {
                name: "mu_v",
                value: self.mu_v,
                allowed: "(0, 1]",
            });
        }
        for b in &self.water_bands {
            if !(b.sigma > 0.0) {
                return Err(Error::InvalidValue {
                    name: "water_band.sigma",
                    value: b.sigma,
                    allowed: "> 0",
                });
            }
            if !(b.amplitude >= 0.0) {
                return Err(Error::InvalidValue {
                    name: "water_band.amplitude",
                    value: b.amplitude,
                    allowed: ">= 0",
                });
            }
        }
        Ok(())
    }
}

/// Rayleigh optical depth `beta_r * lambda^(-rayleigh_exp)`.
#[inline]
pub fn rayleigh_od(lambda: f64, cfg: &OracleConfig) -> f64 {
    cfg.beta_r * lambda.powf(-cfg.rayleigh_exp)
}

/// Aerosol optical depth `tau550 * (lambda/0.55)^(-alpha)`.
#[inline]
pub fn aerosol_od(lambda: f64, state: &AtmosphericState) -> f64 {
    state.tau550 * (lambda / 0.55).powf(-state.alpha)
}

/// Water absorption coefficient: sum of Gaussian bands.
#[inline]
pub fn water_absorption(lambda: f64, cfg: &OracleConfig) -> f64 {
    cfg.water_bands
        .iter()
        .map(|b| {
            let d = lambda - b.center;
            b.amplitude * (-d * d / (2.0 * b.sigma * b.sigma)).exp()
        })
        .sum()
}

#[inline]
fn air_mass(state: &AtmosphericState, cfg: &OracleConfig) -> f64 {
    1.0 / state.mu0 + 1.0 / cfg.mu_v
}

/// Two-way water-vapor transmittance, in (0, 1].
#[inline]
pub fn water_transmittance(lambda: f64, state: &AtmosphericState, cfg: &OracleConfig) -> f64 {
    (-state.wvap * water_absorption(lambda, cfg) * air_mass(state, cfg)).exp()
}

/// Total two-way transmittance: scattering extinction times water absorption.
#[inline]
pub fn transmittance(lambda: f64, state: &AtmosphericState, cfg: &OracleConfig) -> f64 {
    let m = air_mass(state, cfg);
    let ext = rayleigh_od(lambda, cfg) + aerosol_od(lambda, state);
    (-ext * m).exp() * (-state.wvap * water_absorption(lambda, cfg) * m).exp()
}

/// Spherical albedo of the atmosphere, in [0, 1).
#[inline]
pub fn spherical_albedo(lambda: f64, state: &AtmosphericState, cfg: &OracleConfig) -> f64 {
    let x = 0.92 * rayleigh_od(lambda, cfg) + 0.48 * aerosol_od(lambda, state);
    x / (1.0 + x)
}

/// Path reflectance: scattering signal that never touched the surface.
#[inline]
pub fn path_reflectance(lambda: f64, state: &AtmosphericState, cfg: &OracleConfig) -> f64 {
    (0.75 * rayleigh_od(lambda, cfg) + 0.54 * aerosol_od(lambda, state))
        / (4.0 * state.mu0 * cfg.mu_v)
}

/// Top-of-atmosphere reflectance at one wavelength.
///
/// With `quadrature_depth = N > 0`, performs N redundant transmittance
/// evaluations (routed through [`std::hint::black_box`] so they are not
/// optimized away) to emulate the cost of a heavier solver. The returned
/// value is bitwise identical for any N.
pub fn toa_reflectance(
    state: &AtmosphericState,
    rho_s_i: f64,
    lambda: f64,
    cfg: &OracleConfig,
) -> f64 {
    let t = transmittance(lambda, state, cfg);
    for _ in 0..cfg.quadrature_depth {
        std::hint::black_box(transmittance(
            std::hint::black_box(lambda),
            state,
            cfg,
        ));
    }
    let s = spherical_albedo(lambda, state, cfg);
    path_reflectance(lambda, state, cfg) + t * rho_s_i / (1.0 - s * rho_s_i)
}

/// Analytic `d rho_obs / d rho_s = T / (1 - s rho_s)^2`, strictly positive.
pub fn toa_reflectance_drhos(
    state: &AtmosphericState,
    rho_s_i: f64,
    lambda: f64,
    cfg: &OracleConfig,
) -> f64 {
    let t = transmittance(lambda, state, cfg);
    let s = spherical_albedo(lambda, state, cfg);
    let d = 1.0 - s * rho_s_i;
    t / (d * d)
}

/// Sensor radiance from reflectance: `y = rho_obs * phi0 * e0[channel] / pi`.
pub fn radiance_from_reflectance(
    rho_obs: f64,
    illum: &SolarIllumination,
    channel: usize,
) -> Result<f64> {
    if channel >= illum.e0.len() {
        return Err(Error::IndexOutOfRange {
            context: "solar irradiance channel",
            index: channel,
            len: illum.e0.len(),
        });
    }
    Ok(rho_obs * illum.phi0 * illum.e0[channel] / std::f64::consts::PI)
}

/// Full reflectance spectrum over the grid; element i pairs wavelength i with
/// surface reflectance i.
pub fn spectrum(
    state: &AtmosphericState,
    surf: &SurfaceSpectrum,
    grid: &WavelengthGrid,
    cfg: &OracleConfig,
) -> Result<Vec<f64>> {
    if surf.len() != grid.k() {
        return Err(Error::Dimension {
            context: "surface spectrum length vs grid",
            expected: grid.k(),
            got: surf.len(),
        });
    }
    Ok(grid
        .lambdas()
        .iter()
        .zip(&surf.rho_s)
        .map(|(&l, &r)| toa_reflectance(state, r, l, cfg))
        .collect())
}

/// Write the spectrum into a caller-provided buffer (hot path for benchmarks).
pub fn spectrum_into(
    state: &AtmosphericState,
    surf: &SurfaceSpectrum,
    grid: &WavelengthGrid,
    cfg: &OracleConfig,
    out: &mut [f64],
) -> Result<()> {
    if surf.len() != grid.k() || out.len() != grid.k() {
        return Err(Error::Dimension {
            context: "spectrum_into buffer length",
            expected: grid.k(),
            got: out.len(),
        });
    }
    for ((o, &l), &r) in out.iter_mut().zip(grid.lambdas()).zip(&surf.rho_s) {
        *o = toa_reflectance(state, r, l, cfg);
    }
    Ok(())
}
