//! Input marginals, right-extension mixtures and design samplers.
//!
//! A [`Marginal`] plays two roles: the sampling law `F_j` at which predictions
//! are made and the base law `G_j` that generates emulator design points. All
//! sampling goes through the quantile transform of points in the unit cube.

use crate::sobol::SobolSequence;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// A user-supplied univariate law.
pub trait Univariate: Send + Sync + fmt::Debug {
    fn support(&self) -> (f64, f64);
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;
    fn quantile(&self, u: f64) -> f64;
}

#[derive(Clone, Debug)]
pub enum Marginal {
    Uniform { lower: f64, upper: f64 },
    Mixture(Box<Mixture>),
    Custom(Arc<dyn Univariate>),
}

/// `tau * base + (1 - tau) * extension`, with the extension supported to the right of the base.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub base: Marginal,
    pub tau: f64,
    pub extension: Marginal,
}

impl Marginal {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(Error::InvalidParams(format!(
                "uniform needs finite lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Marginal::Uniform { lower, upper })
    }

    pub fn custom(law: Arc<dyn Univariate>) -> Self {
        Marginal::Custom(law)
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Marginal::Uniform { lower, upper } => (*lower, *upper),
            Marginal::Mixture(m) => (m.base.support().0, m.extension.support().1),
            Marginal::Custom(c) => c.support(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            Marginal::Mixture(m) => m.tau * m.base.cdf(x) + (1.0 - m.tau) * m.extension.cdf(x),
            Marginal::Custom(c) => c.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Uniform { lower, upper } => {
                if x >= *lower && x <= *upper {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
            Marginal::Mixture(m) => {
                let mut p = m.tau * m.base.pdf(x);
                if m.tau < 1.0 {
                    p += (1.0 - m.tau) * m.extension.pdf(x);
                }
                p
            }
            Marginal::Custom(c) => c.pdf(x),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Marginal::Uniform { lower, upper } => lower + u * (upper - lower),
            Marginal::Mixture(m) => {
                if u <= m.tau {
                    m.base.quantile(u / m.tau)
                } else {
                    m.extension.quantile((u - m.tau) / (1.0 - m.tau))
                }
            }
            Marginal::Custom(c) => c.quantile(u),
        }
    }

    /// Lower bound of the density on the support, when it is known in closed form.
    pub fn min_density(&self) -> Option<f64> {
        match self {
            Marginal::Uniform { lower, upper } => Some(1.0 / (upper - lower)),
            Marginal::Mixture(m) => {
                let base = m.tau * m.base.min_density()?;
                if m.tau < 1.0 {
                    Some(base.min((1.0 - m.tau) * m.extension.min_density()?))
                } else {
                    Some(base)
                }
            }
            Marginal::Custom(_) => None,
        }
    }

    /// Right-extension mixture with the default extension `U(upper, upper + 0.2 * width)`.
    pub fn right_mixture(&self, tau: f64) -> Result<Marginal> {
        let (lower, upper) = self.support();
        let width = upper - lower;
        if !width.is_finite() {
            return Err(Error::InvalidParams(
                "default mixture extension needs a bounded base support".into(),
            ));
        }
        make_mixture(self.clone(), tau, Marginal::uniform(upper, upper + 0.2 * width)?)
    }
}

/// Build a marginal from a kind tag and its numeric parameters.
///
/// * `uniform`: `[lower, upper]`
/// * `mixture`: `[lower, upper, tau]` (default extension) or
///   `[lower, upper, tau, ext_lower, ext_upper]` (uniform base and extension)
pub fn make_marginal(kind: &str, params: &[f64]) -> Result<Marginal> {
    match (kind, params) {
        ("uniform", [a, b]) => Marginal::uniform(*a, *b),
        ("mixture", [a, b, tau]) => Marginal::uniform(*a, *b)?.right_mixture(*tau),
        ("mixture", [a, b, tau, c, e]) => {
            make_mixture(Marginal::uniform(*a, *b)?, *tau, Marginal::uniform(*c, *e)?)
        }
        ("uniform" | "mixture", _) => Err(Error::InvalidParams(format!(
            "wrong parameter count {} for kind `{kind}`",
            params.len()
        ))),
        _ => Err(Error::InvalidParams(format!("unknown marginal kind `{kind}`"))),
    }
}

pub fn make_mixture(base: Marginal, tau: f64, extension: Marginal) -> Result<Marginal> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParams(format!("tau must lie in (0, 1], got {tau}")));
    }
    let (base_lower, base_upper) = base.support();
    let (ext_lower, ext_upper) = extension.support();
    if ext_upper <= base_lower {
        return Err(Error::MixtureSide {
            base_lower,
            ext_upper,
        });
    }
    if ext_lower < base_upper {
        return Err(Error::MixtureOverlap {
            base_lower,
            base_upper,
            ext_lower,
            ext_upper,
        });
    }
    Ok(Marginal::Mixture(Box::new(Mixture {
        base,
        tau,
        extension,
    })))
}

/// Smallest closed-form density lower bound across marginals.
pub fn rho_min(marginals: &[Marginal]) -> Option<f64> {
    marginals
        .iter()
        .map(Marginal::min_density)
        .try_fold(f64::INFINITY, |acc, m| m.map(|m| acc.min(m)))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MarginalRepr {
    Uniform {
        lower: f64,
        upper: f64,
    },
    Mixture {
        base: Box<MarginalRepr>,
        tau: f64,
        extension: Box<MarginalRepr>,
    },
}

impl MarginalRepr {
    fn from_marginal(m: &Marginal) -> std::result::Result<Self, String> {
        Ok(match m {
            Marginal::Uniform { lower, upper } => MarginalRepr::Uniform {
                lower: *lower,
                upper: *upper,
            },
            Marginal::Mixture(mix) => MarginalRepr::Mixture {
                base: Box::new(Self::from_marginal(&mix.base)?),
                tau: mix.tau,
                extension: Box::new(Self::from_marginal(&mix.extension)?),
            },
            Marginal::Custom(c) => return Err(format!("custom marginal {c:?} is not serializable")),
        })
    }

    fn into_marginal(self) -> Result<Marginal> {
        match self {
            MarginalRepr::Uniform { lower, upper } => Marginal::uniform(lower, upper),
            MarginalRepr::Mixture {
                base,
                tau,
                extension,
            } => make_mixture(base.into_marginal()?, tau, extension.into_marginal()?),
        }
    }
}

impl Serialize for Marginal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MarginalRepr::from_marginal(self)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Marginal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MarginalRepr::deserialize(d)?
            .into_marginal()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    SobolSequence,
    PseudoRandom,
}

/// `n x dims` points in the open unit cube, row-major.
///
/// The Sobol branch skips index 0 and places each dyadic value `k / 2^32` at the
/// centre of its cell, `(k + 1/2) / 2^32`, so no coordinate equals 0 or a coarse
/// dyadic rational such as 1/2.
pub fn unit_points(dims: usize, n: usize, generator: Generator, seed: u64) -> Result<Vec<f64>> {
    match generator {
        Generator::SobolSequence => {
            let seq = SobolSequence::new(dims)?;
            Ok(seq
                .bits_block(1, n)
                .into_iter()
                .map(|b| (b as f64 + 0.5) / 4_294_967_296.0)
                .collect())
        }
        Generator::PseudoRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n * dims).map(|_| open_unit(&mut rng)).collect())
        }
    }
}

fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub n: usize,
    pub d: usize,
    /// Row-major `n x d`.
    pub points: Vec<f64>,
    pub generator: Generator,
    pub seed: u64,
}

impl DesignMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d.max(1))
    }

    /// Apply the componentwise quantile transform to unit-cube points.
    pub fn from_unit(
        marginals: &[Marginal],
        unit: &[f64],
        generator: Generator,
        seed: u64,
    ) -> Self {
        let d = marginals.len();
        let points = unit
            .chunks_exact(d)
            .flat_map(|u| u.iter().zip(marginals).map(|(&u, m)| m.quantile(u)))
            .collect::<Vec<_>>();
        DesignMatrix {
            n: points.len() / d,
            d,
            points,
            generator,
            seed,
        }
    }
}

pub fn sample_design(
    marginals: &[Marginal],
    n: usize,
    seed: u64,
    generator: Generator,
) -> Result<DesignMatrix> {
    if n == 0 || marginals.is_empty() {
        return Err(Error::InvalidParams(
            "design needs n >= 1 and at least one marginal".into(),
        ));
    }
    let unit = unit_points(marginals.len(), n, generator, seed)?;
    Ok(DesignMatrix::from_unit(marginals, &unit, generator, seed))
}

/// `n` Sobol points from sequence index `start` on, cell-centred and mapped through `marginals`.
pub fn sobol_segment(marginals: &[Marginal], start: u32, n: usize) -> Result<DesignMatrix> {
    if n == 0 || marginals.is_empty() {
        return Err(Error::InvalidParams(
            "design needs n >= 1 and at least one marginal".into(),
        ));
    }
    let seq = SobolSequence::new(marginals.len())?;
    let unit: Vec<f64> = seq
        .bits_block(start, n)
        .into_iter()
        .map(|b| (b as f64 + 0.5) / 4_294_967_296.0)
        .collect();
    Ok(DesignMatrix::from_unit(
        marginals,
        &unit,
        Generator::SobolSequence,
        start as u64,
    ))
}

/// i.i.d. (or low-discrepancy) `U(-xi, xi)` perturbation vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationMatrix {
    pub n: usize,
    pub d: usize,
    /// Row-major `n x d`.
    pub values: Vec<f64>,
    pub xi: f64,
    pub sigma2: f64,
}

impl PerturbationMatrix {
    pub fn from_unit(d: usize, unit: &[f64], xi: f64) -> Result<Self> {
        check_xi(xi)?;
        let values: Vec<f64> = unit.iter().map(|&u| xi * (2.0 * u - 1.0)).collect();
        Ok(Self {
            n: values.len() / d.max(1),
            d,
            values,
            xi,
            sigma2: xi * xi / 3.0,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("xi must be positive, got {xi}")))
    }
}

pub fn sample_perturbations(d: usize, n: usize, xi: f64, seed: u64) -> Result<PerturbationMatrix> {
    check_xi(xi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // separate stream from pseudo-random designs drawn with the same seed
    rng.set_stream(1);
    let values = (0..n * d).map(|_| rng.random_range(-xi..xi)).collect();
    Ok(PerturbationMatrix {
        n,
        d,
        values,
        xi,
        sigma2: xi * xi / 3.0,
    })
}
