//! Maps between residues in `[0, 1)` and points of the unit circle.

use std::f64::consts::{PI, TAU};

use crate::error::{check_len, Error, Result};

/// Moduli below this are treated as zero when projecting onto the circle.
pub const DEGENERATE_MODULUS: f64 = 1e-12;

/// `x mod 1` in `[0, 1)`, also for negative `x`.
pub fn reduce_mod1(x: f64) -> f64 {
    let r = x - x.floor();
    // -1e-17 - floor(-1e-17) rounds to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A series of residues, each in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mod1Series {
    values: Vec<f64>,
}

impl Mod1Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && **v < 1.0)) {
            return Err(Error::Domain(format!("residue {i} = {v} is outside [0, 1)")));
        }
        Ok(Self { values })
    }

    /// Reduces arbitrary reals into `[0, 1)`.
    pub fn from_reals(values: &[f64]) -> Self {
        Self { values: values.iter().map(|&v| reduce_mod1(v)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A `2n` real vector laid out as `[Re(w_1..w_n); Im(w_1..w_n)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEmbedding {
    data: Vec<f64>,
}

impl RealEmbedding {
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if !data.len().is_multiple_of(2) {
            return Err(Error::InvalidDimension(format!("embedding length {} is odd", data.len())));
        }
        Ok(Self { data })
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Result<Self> {
        check_len(re.len(), im.len())?;
        let mut data = re.to_vec();
        data.extend_from_slice(im);
        Ok(Self { data })
    }

    /// Number of circle points `n` (half the vector length).
    pub fn n(&self) -> usize {
        self.data.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn re(&self) -> &[f64] {
        &self.data[..self.n()]
    }

    pub fn im(&self) -> &[f64] {
        &self.data[self.n()..]
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        check_len(self.data.len(), other.data.len())?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Modulus of the `i`-th complex entry.
    pub fn modulus(&self, i: usize) -> f64 {
        self.re()[i].hypot(self.im()[i])
    }
}

/// Residue `v` to `(cos 2 pi v, sin 2 pi v)`.
pub fn embed(s: &Mod1Series) -> RealEmbedding {
    let n = s.len();
    let mut data = vec![0.0; 2 * n];
    for (i, &v) in s.values().iter().enumerate() {
        let (sin, cos) = (TAU * v).sin_cos();
        data[i] = cos;
        data[n + i] = sin;
    }
    RealEmbedding { data }
}

/// Embeds raw residues, rejecting values outside `[0, 1)`.
pub fn embed_values(values: &[f64]) -> Result<RealEmbedding> {
    Ok(embed(&Mod1Series::new(values.to_vec())?))
}

/// Result of projecting an embedding back onto residues.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub series: Mod1Series,
    /// Indices whose modulus fell below [`DEGENERATE_MODULUS`]; emitted as 0.
    pub degenerate: Vec<usize>,
}

/// `g_i / |g_i|` expressed as a residue in `[0, 1)`.
pub fn project_to_mod1(g: &RealEmbedding) -> Projection {
    let n = g.n();
    let mut values = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    for i in 0..n {
        let (re, im) = (g.re()[i], g.im()[i]);
        if re.hypot(im) < DEGENERATE_MODULUS {
            degenerate.push(i);
            values.push(0.0);
        } else {
            values.push(reduce_mod1(im.atan2(re) / TAU));
        }
    }
    Projection { series: Mod1Series { values }, degenerate }
}

/// Circle metric `min(|a - b|, 1 - |a - b|)` on `[0, 1]`.
pub fn wrap_distance(a: f64, b: f64) -> Result<f64> {
    for x in [a, b] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("{x} is outside [0, 1]")));
        }
    }
    Ok(wrap_distance_unchecked(a, b))
}

#[inline]
pub(crate) fn wrap_distance_unchecked(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Bound `(1/pi) asin(eps / (1 - eps))` on the wrap distance of a projected
/// estimate whose circle points are within `eps` of the truth.
pub fn lemma2_bound(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    Ok((eps / (1.0 - eps)).asin() / PI)
}
