//! Run configuration: a TOML file of dotted keys.
//!
//! The membrane and field keys are required; everything else has a default.
//! Errors name the offending key.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use toml::{Table, Value};

use crate::dynamics::Tolerances;
use crate::membrane::{CoolingSite, Device, MembraneConfig, SiteRole, TipField};
use crate::model::{thermal_energy, Dephasing, GeneratorKind, DEFAULT_BIN_TOLERANCE};
use crate::protocols::{CatParams, CoolingParams, Environment, QubitRates, SqueezeParams};
use crate::{Error, Result};

/// Keys that must be present.
pub const REQUIRED_KEYS: [&str; 7] = [
    "membrane.radius_um",
    "membrane.tension_N_per_m",
    "membrane.areal_density_kg_m2",
    "membrane.Q",
    "membrane.T_mK",
    "field.peak_gradient_T_per_m",
    "field.bias_splitting_GHz",
];

const OPTIONAL_KEYS: [&str; 31] = [
    "field.tip_field_T",
    "field.width_um",
    "sites.central.r_um",
    "sites.central.theta",
    "sites.cooling.auto",
    "sites.cooling.r_um",
    "sites.cooling.min_margin",
    "rates.relaxation_over_omega",
    "rates.dephasing_optical_over_omega",
    "rates.dephasing_vibrational_over_omega",
    "rates.dephasing_hyperfine_kHz",
    "cooling.fock_dim",
    "cooling.grid_points",
    "cooling.central_detuning_ratio",
    "cat.fock_dim",
    "cat.decoherence_over_omega",
    "cat.generator",
    "cat.mechanical_damping",
    "cat.bath_T_mK",
    "cat.wigner_resolution",
    "squeeze.fock_dim",
    "squeeze.dephasing_hyperfine_over_omega",
    "squeeze.dephasing_optical_over_omega",
    "squeeze.dephasing_vibrational_over_omega",
    "squeeze.wigner_resolution",
    "squeeze.generator",
    "squeeze.mechanical_damping",
    "squeeze.bath_T_mK",
    "solver.rtol",
    "solver.atol",
    "solver.bin_tolerance",
];

/// Where the cooling qubit goes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoolingPlacement {
    /// On the sweet-spot ray where g_c = Γ/2.
    Auto,
    /// Fixed radius, m.
    Radius(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoolingSettings {
    pub placement: CoolingPlacement,
    pub min_margin: f64,
    pub fock_dim: usize,
    pub grid_points: usize,
    pub central_detuning_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatSettings {
    pub fock_dim: usize,
    pub decoherence: f64,
    pub generator: GeneratorKind,
    pub mechanical_damping: bool,
    /// Temperature of the mechanical bath during the protocol, K.
    pub bath_temperature: f64,
    pub wigner_resolution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SqueezeSettings {
    /// 0 selects an automatic truncation.
    pub fock_dim: usize,
    pub dephasing: Dephasing,
    pub generator: GeneratorKind,
    pub mechanical_damping: bool,
    /// Temperature of the mechanical bath during the protocol, K.
    pub bath_temperature: f64,
    pub wigner_resolution: usize,
}

/// Parsed configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub membrane: MembraneConfig,
    pub field: TipField,
    /// Splitting set by the bias field, Hz.
    pub bias_splitting_hz: f64,
    /// Rates used during cooling, units of ω_m except the hyperfine part.
    pub relaxation: f64,
    pub dephasing_optical: f64,
    pub dephasing_vibrational: f64,
    /// Γ̃_h, Hz (multiplied by 2π to get rad/s).
    pub dephasing_hyperfine_hz: f64,
    pub cooling: CoolingSettings,
    pub cat: CatSettings,
    pub squeeze: SqueezeSettings,
    pub tolerances: Tolerances,
    pub bin_tolerance: f64,
}

struct Reader<'a> {
    root: &'a Table,
}

impl<'a> Reader<'a> {
    fn lookup(&self, key: &str) -> Option<&'a Value> {
        let mut parts = key.split('.');
        let mut cur = self.root.get(parts.next()?)?;
        for p in parts {
            cur = cur.as_table()?.get(p)?;
        }
        Some(cur)
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(Error::Config(format!("key {key}: expected a number, found {}", other.type_str()))),
        }
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.float(key)?.ok_or_else(|| Error::Config(format!("missing key {key}")))
    }

    fn float_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.float(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.lookup(key) {
            None => Ok(default),
            Some(Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
            Some(_) => Err(Error::Config(format!("key {key}: expected a nonnegative integer"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.lookup(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Error::Config(format!("key {key}: expected true or false"))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&'a str>> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Error::Config(format!("key {key}: expected a string"))),
        }
    }
}

fn flatten(prefix: &str, t: &Table, out: &mut Vec<String>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            _ => out.push(key),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let root: Table = toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        let mut keys = Vec::new();
        flatten("", &root, &mut keys);
        for k in &keys {
            if !REQUIRED_KEYS.contains(&k.as_str()) && !OPTIONAL_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key {k}")));
            }
        }
        let r = Reader { root: &root };
        for k in REQUIRED_KEYS {
            r.required(k)?;
        }
        let membrane = MembraneConfig {
            radius: r.required("membrane.radius_um")? * 1e-6,
            tension: r.required("membrane.tension_N_per_m")?,
            areal_density: r.required("membrane.areal_density_kg_m2")?,
            quality_factor: r.required("membrane.Q")?,
            temperature: r.required("membrane.T_mK")? * 1e-3,
        };
        membrane.validate().map_err(|e| Error::Config(e.to_string()))?;
        let bias_splitting_hz = r.required("field.bias_splitting_GHz")? * 1e9;
        let defaults = TipField::default();
        let field = TipField {
            bias: TipField::bias_for_splitting(bias_splitting_hz),
            tip_field: r.float_or("field.tip_field_T", defaults.tip_field)?,
            peak_gradient: r.required("field.peak_gradient_T_per_m")?,
            width: r.float_or("field.width_um", defaults.width * 1e6)? * 1e-6,
            sweet_spot_r: r.float_or("sites.central.r_um", 0.0)? * 1e-6,
            sweet_spot_theta: r.float_or("sites.central.theta", 0.0)?,
        };
        if !(field.width > 0.0) {
            return Err(Error::Config("key field.width_um: must be positive".into()));
        }
        let placement = match (r.bool_or("sites.cooling.auto", true)?, r.float("sites.cooling.r_um")?) {
            (_, Some(rr)) => CoolingPlacement::Radius(rr * 1e-6),
            (true, None) => CoolingPlacement::Auto,
            (false, None) => return Err(Error::Config("missing key sites.cooling.r_um".into())),
        };
        let generator = |key: &str, default: &str| match r.string(key)?.unwrap_or(default) {
            "bare" => Ok(GeneratorKind::Bare),
            "dressed" => Ok(GeneratorKind::Dressed),
            other => Err(Error::Config(format!("key {key}: unknown generator {other:?}"))),
        };
        let cfg = Config {
            membrane,
            field,
            bias_splitting_hz,
            relaxation: r.float_or("rates.relaxation_over_omega", 0.1)?,
            dephasing_optical: r.float_or("rates.dephasing_optical_over_omega", 0.1)?,
            dephasing_vibrational: r.float_or("rates.dephasing_vibrational_over_omega", 0.1)?,
            dephasing_hyperfine_hz: r.float_or("rates.dephasing_hyperfine_kHz", 100.0)? * 1e3,
            cooling: CoolingSettings {
                placement,
                min_margin: r.float_or("sites.cooling.min_margin", 1.0)?,
                fock_dim: r.usize_or("cooling.fock_dim", 40)?,
                grid_points: r.usize_or("cooling.grid_points", 15)?,
                central_detuning_ratio: r.float_or("cooling.central_detuning_ratio", 20.0)?,
            },
            cat: CatSettings {
                fock_dim: r.usize_or("cat.fock_dim", 80)?,
                decoherence: r.float_or("cat.decoherence_over_omega", 0.2)?,
                generator: generator("cat.generator", "bare")?,
                mechanical_damping: r.bool_or("cat.mechanical_damping", true)?,
                bath_temperature: r.float_or("cat.bath_T_mK", 0.0)? * 1e-3,
                wigner_resolution: r.usize_or("cat.wigner_resolution", 101)?,
            },
            squeeze: SqueezeSettings {
                fock_dim: r.usize_or("squeeze.fock_dim", 0)?,
                dephasing: Dephasing {
                    optical: r.float_or("squeeze.dephasing_optical_over_omega", 0.0)?,
                    vibrational: r.float_or("squeeze.dephasing_vibrational_over_omega", 0.0)?,
                    hyperfine: r.float_or("squeeze.dephasing_hyperfine_over_omega", 0.1)?,
                },
                generator: generator("squeeze.generator", "dressed")?,
                mechanical_damping: r.bool_or("squeeze.mechanical_damping", true)?,
                bath_temperature: r.float_or("squeeze.bath_T_mK", 0.0)? * 1e-3,
                wigner_resolution: r.usize_or("squeeze.wigner_resolution", 81)?,
            },
            tolerances: Tolerances {
                rtol: r.float_or("solver.rtol", 1e-8)?,
                atol: r.float_or("solver.atol", 1e-10)?,
            },
            bin_tolerance: r.float_or("solver.bin_tolerance", DEFAULT_BIN_TOLERANCE)?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let rates = [
            ("rates.relaxation_over_omega", self.relaxation),
            ("rates.dephasing_optical_over_omega", self.dephasing_optical),
            ("rates.dephasing_vibrational_over_omega", self.dephasing_vibrational),
            ("rates.dephasing_hyperfine_kHz", self.dephasing_hyperfine_hz),
            ("cat.decoherence_over_omega", self.cat.decoherence),
            ("cat.bath_T_mK", self.cat.bath_temperature),
            ("squeeze.bath_T_mK", self.squeeze.bath_temperature),
            ("squeeze.dephasing_hyperfine_over_omega", self.squeeze.dephasing.hyperfine),
            ("squeeze.dephasing_optical_over_omega", self.squeeze.dephasing.optical),
            ("squeeze.dephasing_vibrational_over_omega", self.squeeze.dephasing.vibrational),
        ];
        for (k, v) in rates {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("key {k}: rate must be >= 0, got {v}")));
            }
        }
        if self.cooling.fock_dim < 2 || self.cat.fock_dim < 2 {
            return Err(Error::Config("fock_dim must be >= 2".into()));
        }
        if !(self.tolerances.rtol > 0.0 && self.tolerances.atol > 0.0 && self.bin_tolerance > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        Ok(())
    }

    /// The shipped configuration: Q = 10⁵, T = 14 mK, R = 1.5 μm.
    pub fn reference_defaults() -> Self {
        Self::parse(DEFAULT_TOML).expect("built-in configuration parses")
    }

    pub fn with_radius(&self, radius_m: f64) -> Self {
        let mut c = self.clone();
        c.membrane.radius = radius_m;
        c
    }

    pub fn device(&self) -> Result<Device> {
        Device::new(self.membrane.clone(), Arc::new(self.field.clone()))
    }

    /// Cooling-time qubit rates in units of ω_m of `device`.
    /// Cooling model for the configured placement. An explicit radius skips the
    /// margin check and reports the margin it gets.
    pub fn cooling_params(&self, fock: usize) -> Result<(CoolingParams, CoolingSite)> {
        let device = self.device()?;
        let rates = self.cooling_rates(&device);
        match self.cooling.placement {
            CoolingPlacement::Auto => CoolingParams::from_device(&device, rates, fock, self.cooling.min_margin),
            CoolingPlacement::Radius(r) => {
                let (_, theta) = device.field.sweet_spot();
                let site = device.site_at(r, theta, SiteRole::Cooling)?;
                let g = site.coupling.abs();
                let noise = rates.relaxation * device.mode.omega_m * device.gamma_m() * device.mechanical_occupation();
                let p = CoolingParams {
                    fock_dim: fock,
                    env: Environment::from_device(&device),
                    coupling: device.dimensionless(site.coupling),
                    rates,
                    splitting: device.dimensionless(site.splitting),
                };
                Ok((p, CoolingSite { margin: g * g / noise, site }))
            }
        }
    }

    /// (Δ_c − Δ₀)/ω_m between the cooling site and the central qubit, the
    /// offset of the central detuning when both see the cooling drive.
    pub fn central_drive_offset(&self, cooling: &CoolingSite) -> Result<f64> {
        let device = self.device()?;
        let central = device.sweet_spot_site()?;
        Ok(device.dimensionless(cooling.site.splitting - central.splitting))
    }

    /// Cat protocol with the sweet-spot qubit of the configured device.
    pub fn cat_params(&self) -> Result<CatParams> {
        let device = self.device()?;
        let central = device.sweet_spot_site()?;
        let mut p = CatParams::new(device.dimensionless(central.coupling).abs(), self.cat.fock_dim);
        p.delta0 = device.dimensionless(central.splitting);
        p.decoherence = self.cat.decoherence;
        p.generator = self.cat.generator;
        p.tol = self.tolerances;
        p.env = self.cat_environment(&device);
        Ok(p)
    }

    /// Squeezing settings; ξ and Ω are left for the caller to set.
    pub fn squeeze_params(&self) -> Result<SqueezeParams> {
        let device = self.device()?;
        let mut p = SqueezeParams::new(0.0, 1.0);
        p.fock_dim = self.squeeze.fock_dim;
        p.env = self.squeeze_environment(&device);
        p.rates.dephasing = self.squeeze.dephasing;
        p.generator = self.squeeze.generator;
        p.bin_tolerance = self.bin_tolerance;
        p.tol = self.tolerances;
        Ok(p)
    }

    pub fn cooling_rates(&self, device: &Device) -> QubitRates {
        QubitRates {
            relaxation: self.relaxation,
            dephasing: Dephasing {
                optical: self.dephasing_optical,
                vibrational: self.dephasing_vibrational,
                hyperfine: device.dimensionless(2.0 * std::f64::consts::PI * self.dephasing_hyperfine_hz),
            },
        }
    }

    pub fn environment(&self, device: &Device) -> Environment {
        Environment::from_device(device)
    }

    /// Mechanical bath during the cat protocol: damping γ_m = ω_m/Q at
    /// `cat.bath_T_mK`, or none when damping is off.
    pub fn cat_environment(&self, device: &Device) -> Environment {
        self.protocol_environment(device, self.cat.mechanical_damping, self.cat.bath_temperature)
    }

    /// Same for the squeezing protocol (`squeeze.*`).
    pub fn squeeze_environment(&self, device: &Device) -> Environment {
        self.protocol_environment(device, self.squeeze.mechanical_damping, self.squeeze.bath_temperature)
    }

    fn protocol_environment(&self, device: &Device, damping: bool, temperature: f64) -> Environment {
        if !damping {
            return Environment::closed();
        }
        Environment {
            quality_factor: self.membrane.quality_factor,
            thermal_energy: thermal_energy(device.mode.omega_m, temperature),
        }
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Contents of `configs/reference.toml`.
pub const DEFAULT_TOML: &str = include_str!("../../../configs/reference.toml");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_parses() {
        let c = Config::reference_defaults();
        assert_eq!(c.membrane.quality_factor, 1e5);
        assert!((c.membrane.temperature - 0.014).abs() < 1e-15);
        assert_eq!(c.cooling.placement, CoolingPlacement::Auto);
        assert_eq!(c.cat.generator, GeneratorKind::Bare);
    }

    #[test]
    fn missing_key_is_named() {
        let text = DEFAULT_TOML.replacen("\nT_mK", "\n# T_mK", 1);
        let err = Config::parse(&text).unwrap_err().to_string();
        assert!(err.contains("membrane.T_mK"), "{err}");
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        let err = Config::parse(&format!("{DEFAULT_TOML}\n[extra]\nx = 1\n")).unwrap_err().to_string();
        assert!(err.contains("extra.x"), "{err}");
        let text = DEFAULT_TOML.replace("Q = 1e5", "Q = \"high\"");
        let err = Config::parse(&text).unwrap_err().to_string();
        assert!(err.contains("membrane.Q"), "{err}");
    }

    #[test]
    fn negative_rate_rejected() {
        let text = DEFAULT_TOML.replace("decoherence_over_omega = 0.2", "decoherence_over_omega = -0.1");
        assert!(Config::parse(&text).is_err());
    }
}
