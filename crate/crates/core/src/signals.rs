//! Test functions, clean sampling and seeded noise models.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), a counter-based stream
//! cipher generator, seeded through `SeedableRng::seed_from_u64`. Per-trial
//! seeds are derived with [`trial_seed`] (a SplitMix64 finaliser), so a given
//! `(model, parameter, seed, n)` produces the same samples on every platform.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::angular::{embed, reduce_mod1, Mod1Series};
use crate::error::{check_len, Error, Result};
use crate::grid::UniformGrid;

/// Grid size used to certify Hölder constants.
pub const HOLDER_GRID: usize = 1_000_000;
/// Safety inflation applied to the certified constant.
pub const HOLDER_INFLATION: f64 = 1.01;

/// `4x cos^2(2 pi x) - 2 sin^2(2 pi x)`.
pub fn f1(x: f64) -> f64 {
    let (s, c) = (TAU * x).sin_cos();
    4.0 * x * c * c - 2.0 * s * s
}

pub fn f1_derivative(x: f64) -> f64 {
    let c = (TAU * x).cos();
    let s2 = (2.0 * TAU * x).sin();
    4.0 * c * c - 8.0 * PI * x * s2 - 4.0 * PI * s2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    /// The oscillating ramp used throughout the experiments.
    F1,
    Zero,
    /// Constant `0.3`.
    Constant,
    /// `1.5 x`.
    Ramp,
    /// `3 sin(2 pi x)`.
    Sine,
}

impl SignalKind {
    pub const ALL: [SignalKind; 5] = [Self::F1, Self::Zero, Self::Constant, Self::Ramp, Self::Sine];

    pub fn name(self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::Zero => "zero",
            Self::Constant => "constant",
            Self::Ramp => "ramp",
            Self::Sine => "sine",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Self::F1 => f1(x),
            Self::Zero => 0.0,
            Self::Constant => 0.3,
            Self::Ramp => 1.5 * x,
            Self::Sine => 3.0 * (TAU * x).sin(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::F1 => f1_derivative(x),
            Self::Zero | Self::Constant => 0.0,
            Self::Ramp => 1.5,
            Self::Sine => 3.0 * TAU * (TAU * x).cos(),
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::InvalidParameter(format!("unknown signal '{s}'")))
    }
}

/// A named test function with a certified Hölder pair `(M, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub holder_m: f64,
    pub holder_alpha: f64,
}

impl SignalSpec {
    /// Certifies `M = 1.01 * max |f'|` over a `10^6`-point grid, `alpha = 1`.
    pub fn new(kind: SignalKind) -> Self {
        let last = (HOLDER_GRID - 1) as f64;
        let m = (0..HOLDER_GRID).map(|i| kind.derivative(i as f64 / last).abs()).fold(0.0, f64::max);
        Self { kind, holder_m: HOLDER_INFLATION * m, holder_alpha: 1.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `delta_i ~ U[-gamma, gamma]`, added before reduction.
    Uniform { gamma: f64 },
    /// `eta_i ~ N(0, sigma^2)`, added before reduction.
    Gaussian { sigma: f64 },
    /// With probability `p` the residue is replaced by a `U[0, 1)` draw.
    BernoulliUniform { p: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Uniform { gamma } if !(0.0..0.5).contains(&gamma) => {
                Err(Error::InvalidParameter(format!("gamma out of range [0, 0.5): {gamma}")))
            }
            Self::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidParameter(format!("sigma out of range [0, inf): {sigma}")))
            }
            Self::BernoulliUniform { p } if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidParameter(format!("p out of range [0, 1]: {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::Gaussian { .. } => "gaussian",
            Self::BernoulliUniform { .. } => "bernoulli_uniform",
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            Self::Uniform { gamma } => gamma,
            Self::Gaussian { sigma } => sigma,
            Self::BernoulliUniform { p } => p,
        }
    }

    /// Builds a model from its CLI name and scalar parameter.
    pub fn from_name(name: &str, level: f64) -> Result<Self> {
        let m = match name {
            "uniform" => Self::Uniform { gamma: level },
            "gaussian" => Self::Gaussian { sigma: level },
            "bernoulli_uniform" | "bernoulli-uniform" => Self::BernoulliUniform { p: level },
            other => return Err(Error::InvalidParameter(format!("unknown noise model '{other}'"))),
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub seed: u64,
}

/// SplitMix64 finaliser applied to `base ^ (trial * golden)`.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    let mut z = base ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Clean samples `f_i = q_i + r_i` and their noisy residues `y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledInstance {
    pub grid: UniformGrid,
    pub clean_f: Vec<f64>,
    pub clean_mod1: Mod1Series,
    pub quotients: Vec<i64>,
    pub noisy_mod1: Mod1Series,
    pub noise: Option<NoiseSpec>,
}

impl SampledInstance {
    pub fn n(&self) -> usize {
        self.clean_f.len()
    }
}

/// Samples the clean function; the noisy residues equal the clean ones.
pub fn sample_clean(spec: &SignalSpec, grid: &UniformGrid) -> SampledInstance {
    let clean_f: Vec<f64> = grid.points().iter().map(|&x| spec.eval(x)).collect();
    let mut quotients = Vec::with_capacity(clean_f.len());
    let mut residues = Vec::with_capacity(clean_f.len());
    for &f in &clean_f {
        let r = reduce_mod1(f);
        quotients.push((f - r).round() as i64);
        residues.push(r);
    }
    let clean_mod1 = Mod1Series::new(residues).expect("floor decomposition lands in [0, 1)");
    SampledInstance { grid: grid.clone(), clean_f, noisy_mod1: clean_mod1.clone(), clean_mod1, quotients, noise: None }
}

/// Draws noise (one draw per sample, in index order) and recomputes `y`.
pub fn add_noise(inst: &SampledInstance, noise: NoiseSpec) -> Result<SampledInstance> {
    noise.model.validate()?;
    let mut rng = rng_from_seed(noise.seed);
    let noisy: Vec<f64> = match noise.model {
        NoiseModel::Uniform { gamma } => inst.clean_f.iter().map(|&f| reduce_mod1(f + rng.random_range(-gamma..=gamma))).collect(),
        NoiseModel::Gaussian { sigma } => {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            inst.clean_f.iter().map(|&f| reduce_mod1(f + normal.sample(&mut rng))).collect()
        }
        NoiseModel::BernoulliUniform { p } => inst
            .clean_mod1
            .values()
            .iter()
            .map(|&r| {
                let replace = rng.random_bool(p);
                let u: f64 = rng.random();
                if replace {
                    u
                } else {
                    r
                }
            })
            .collect(),
    };
    let mut out = inst.clone();
    out.noisy_mod1 = Mod1Series::new(noisy)?;
    out.noise = Some(noise);
    Ok(out)
}

/// `||embed(y) - embed(clean)||_2 / sqrt(n)`.
pub fn measure_delta(y: &Mod1Series, clean: &Mod1Series) -> Result<f64> {
    check_len(clean.len(), y.len())?;
    let a = embed(y);
    let b = embed(clean);
    let d: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, z)| (x - z) * (x - z)).sum();
    Ok((d / y.len() as f64).sqrt())
}
