//! Derivative-free emulator built from `N * L` perturbed model runs.
//!
//! Each base point `X'_i` is evaluated at `X'_i + beta_l h V_i`. Combining the
//! `L` outputs with the coefficients `C^(p)` isolates the order-`p` derivative
//! information along `V_i`; the kernels `R_k` then turn it into an estimate of
//! the centered model. Predictions add back a mean estimated from the same runs.

use crate::coefficients::{beta_grid, mean_weights, solve_coefficients, CoefficientPlan};
use crate::distributions::{
    sample_design, sample_perturbations, unit_points, DesignMatrix, Generator, Marginal,
    PerturbationMatrix,
};
use crate::esp::{esp_into, kernel_e_parts};
use crate::subset::Subset;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Archive format tag written into serialized emulators.
pub const ARCHIVE_FORMAT: &str = "anovaemu-df-emulator/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "subsets")]
pub enum ComponentSelection {
    /// Every subset of size `1..=d0`.
    AllUpTo,
    /// Every subset of size `1..=d0` of the given (0-based) inputs.
    Influential(Vec<usize>),
    /// An arbitrary screened family.
    Explicit(Vec<Subset>),
}

/// How base points and perturbations are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanSampling {
    /// Sobol base points, i.i.d. uniform perturbations.
    #[default]
    QmcBaseIidPerturbation,
    /// One Sobol sequence of dimension `2d`: base points in the first `d`
    /// coordinates, perturbations in the last `d`.
    JointQmc,
    /// Pseudo-random base points and perturbations.
    PseudoRandom,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmulatorSpec {
    pub d: usize,
    pub d0: usize,
    pub r_star: usize,
    pub l: usize,
    pub coefficients: CoefficientPlan,
    pub h: f64,
    pub xi: f64,
    pub sigma2: f64,
    /// Base law `G` of the design points.
    pub base: Vec<Marginal>,
    pub selection: ComponentSelection,
    pub sampling: PlanSampling,
    /// Admissible model domain; evaluation points outside it are reported.
    #[serde(default)]
    pub domain: Option<Vec<(f64, f64)>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `xi = (d * binom(d, d0) * (1 / (2 rho_min))^d0)^(-1/2)`.
pub fn recipe_xi(d: usize, d0: usize, rho_min: f64) -> f64 {
    (d as f64 * binomial(d, d0) * (0.5 / rho_min).powi(d0 as i32)).powf(-0.5)
}

/// Standard hyperparameters: `L = d0 + 1`, `r* = d0 - 1`, `h = 1/N`, `xi` from [`recipe_xi`].
pub fn default_spec(
    base: &[Marginal],
    d0: usize,
    rho_min: f64,
    n: usize,
    selection: ComponentSelection,
) -> Result<EmulatorSpec> {
    if !(rho_min > 0.0 && rho_min.is_finite()) {
        return Err(Error::InvalidParams(format!("rho_min must be positive, got {rho_min}")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("N must be >= 1".into()));
    }
    let d = base.len();
    let l = d0 + 1;
    let xi = recipe_xi(d, d0, rho_min);
    let spec = EmulatorSpec {
        d,
        d0,
        r_star: d0.saturating_sub(1),
        l,
        coefficients: solve_coefficients(&beta_grid(l), d0.max(1), d0.saturating_sub(1))?,
        h: 1.0 / n as f64,
        xi,
        sigma2: xi * xi / 3.0,
        base: base.to_vec(),
        selection,
        sampling: PlanSampling::default(),
        domain: None,
    };
    spec.validate()?;
    Ok(spec)
}

impl EmulatorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.d == 0 || self.base.len() != self.d {
            return bad(format!("d = {} with {} base marginals", self.d, self.base.len()));
        }
        if self.d0 == 0 || self.d0 > self.d {
            return bad(format!("d0 = {} must lie in 1..={}", self.d0, self.d));
        }
        if (self.l < 2 || self.r_star > self.l - 2) && !(self.l == 1 && self.r_star == 0) {
            return Err(Error::InvalidRStar {
                r_star: self.r_star,
                limit: self.l.saturating_sub(2),
            });
        }
        if self.coefficients.l != self.l || self.coefficients.d0 != self.d0 {
            return bad("coefficient plan does not match L and d0".into());
        }
        if !(self.h > 0.0 && self.xi > 0.0 && self.sigma2 > 0.0) {
            return bad(format!("h, xi, sigma2 must be positive ({}, {}, {})", self.h, self.xi, self.sigma2));
        }
        match &self.selection {
            ComponentSelection::AllUpTo => {}
            ComponentSelection::Influential(u) => {
                if u.is_empty() || u.iter().any(|&j| j >= self.d) {
                    return bad(format!("influential inputs {u:?} invalid for d = {}", self.d));
                }
            }
            ComponentSelection::Explicit(vs) => {
                for v in vs {
                    if v.is_empty() || v.len() > self.d0 || v.max_index().is_some_and(|j| j >= self.d) {
                        return bad(format!("component {v} must satisfy 0 < |v| <= d0 = {}", self.d0));
                    }
                }
            }
        }
        if let Some(dom) = &self.domain {
            if dom.len() != self.d {
                return Err(Error::LengthMismatch {
                    expected: self.d,
                    found: dom.len(),
                });
            }
        }
        Ok(())
    }

    pub fn betas(&self) -> &[f64] {
        &self.coefficients.betas
    }

    /// Retained components as explicit subsets.
    pub fn components(&self) -> Vec<Subset> {
        match &self.selection {
            ComponentSelection::AllUpTo => {
                crate::subset::subsets_up_to(&(0..self.d).collect::<Vec<_>>(), self.d0)
            }
            ComponentSelection::Influential(u) => crate::subset::subsets_up_to(u, self.d0),
            ComponentSelection::Explicit(vs) => vs.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluationPlan {
    pub n: usize,
    pub l: usize,
    pub d: usize,
    pub base: DesignMatrix,
    pub perturbations: PerturbationMatrix,
    /// Row-major `(N * L) x d`, row `i * L + l`.
    pub points: Vec<f64>,
    /// `(i, l)` of each evaluation row.
    pub tags: Vec<(usize, usize)>,
    /// Evaluation rows outside the declared domain.
    pub domain_violations: usize,
}

impl EvaluationPlan {
    pub fn rows(&self) -> usize {
        self.n * self.l
    }

    pub fn point(&self, row: usize) -> &[f64] {
        &self.points[row * self.d..(row + 1) * self.d]
    }

    /// Evaluate `model` at every plan row in parallel.
    pub fn evaluate<F>(&self, model: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.points.par_chunks(self.d).map(|x| model(x)).collect()
    }
}

pub fn plan_design(spec: &EmulatorSpec, n: usize, seed: u64) -> Result<EvaluationPlan> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParams("N must be >= 1".into()));
    }
    let d = spec.d;
    let (base, perturbations) = match spec.sampling {
        PlanSampling::QmcBaseIidPerturbation => (
            sample_design(&spec.base, n, seed, Generator::SobolSequence)?,
            sample_perturbations(d, n, spec.xi, seed)?,
        ),
        PlanSampling::JointQmc => {
            let unit = unit_points(2 * d, n, Generator::SobolSequence, seed)?;
            let (xu, vu): (Vec<&[f64]>, Vec<&[f64]>) =
                unit.chunks_exact(2 * d).map(|row| row.split_at(d)).unzip();
            (
                DesignMatrix::from_unit(&spec.base, &xu.concat(), Generator::SobolSequence, seed),
                PerturbationMatrix::from_unit(d, &vu.concat(), spec.xi)?,
            )
        }
        PlanSampling::PseudoRandom => (
            sample_design(&spec.base, n, seed, Generator::PseudoRandom)?,
            sample_perturbations(d, n, spec.xi, seed)?,
        ),
    };
    let betas = spec.betas();
    let mut points = Vec::with_capacity(n * spec.l * d);
    let mut tags = Vec::with_capacity(n * spec.l);
    let mut domain_violations = 0;
    for i in 0..n {
        let (x, v) = (base.row(i), perturbations.row(i));
        for (l, &b) in betas.iter().enumerate() {
            let start = points.len();
            points.extend(x.iter().zip(v).map(|(x, v)| x + b * spec.h * v));
            if let Some(dom) = &spec.domain {
                if points[start..].iter().zip(dom).any(|(p, (lo, hi))| p < lo || p > hi) {
                    domain_violations += 1;
                }
            }
            tags.push((i, l));
        }
    }
    if domain_violations > 0 {
        log::warn!(
            "{domain_violations} of {} evaluation points leave the declared model domain; evaluated unclipped",
            n * spec.l
        );
    }
    Ok(EvaluationPlan {
        n,
        l: spec.l,
        d,
        base,
        perturbations,
        points,
        tags,
        domain_violations,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DfEmulator {
    pub format: String,
    pub spec: EmulatorSpec,
    pub plan: EvaluationPlan,
    pub outputs: Vec<f64>,
    pub weights: Vec<f64>,
    pub mean: f64,
    /// `s_ip = sum_l C_l^(p) y_il`, row-major `N x d0`.
    combos: Vec<f64>,
    /// `G_k(x'_ik)` and `g_k(x'_ik)`, row-major `N x d`.
    cdf: Vec<f64>,
    density: Vec<f64>,
    /// Retained subsets for the explicit-product path.
    components: Vec<Subset>,
}

pub fn fit_df(plan: &EvaluationPlan, outputs: &[f64], spec: &EmulatorSpec) -> Result<DfEmulator> {
    spec.validate()?;
    if outputs.len() != plan.rows() {
        return Err(Error::LengthMismatch {
            expected: plan.rows(),
            found: outputs.len(),
        });
    }
    if plan.l != spec.l || plan.d != spec.d {
        return Err(Error::InvalidParams("plan does not match the emulator spec".into()));
    }
    if let Some(row) = outputs.iter().position(|y| !y.is_finite()) {
        return Err(Error::NonFinite { row });
    }
    let (n, l, d, d0) = (plan.n, spec.l, spec.d, spec.d0);
    let weights = mean_weights(spec.betas())?;
    let mean = outputs
        .chunks_exact(l)
        .map(|y| y.iter().zip(&weights).map(|(y, w)| y * w).sum::<f64>())
        .sum::<f64>()
        / n as f64;
    let mut combos = Vec::with_capacity(n * d0);
    for y in outputs.chunks_exact(l) {
        for p in 1..=d0 {
            let c = spec.coefficients.coefficients(p);
            combos.push(c.iter().zip(y).map(|(c, y)| c * y).sum());
        }
    }
    let mut cdf = Vec::with_capacity(n * d);
    let mut density = Vec::with_capacity(n * d);
    for row in plan.base.rows() {
        for (&x, g) in row.iter().zip(&spec.base) {
            let rho = g.pdf(x);
            if rho <= 0.0 {
                return Err(Error::ZeroDensity { at: x });
            }
            cdf.push(g.cdf(x));
            density.push(rho);
        }
    }
    let components = match &spec.selection {
        ComponentSelection::Explicit(vs) => vs.clone(),
        _ => Vec::new(),
    };
    Ok(DfEmulator {
        format: ARCHIVE_FORMAT.to_string(),
        spec: spec.clone(),
        plan: plan.clone(),
        outputs: outputs.to_vec(),
        weights,
        mean,
        combos,
        cdf,
        density,
        components,
    })
}

/// Build a plan, evaluate `model` on it and fit.
pub fn build_df<F>(spec: &EmulatorSpec, n: usize, seed: u64, model: F) -> Result<DfEmulator>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let plan = plan_design(spec, n, seed)?;
    let y = plan.evaluate(model);
    fit_df(&plan, &y, spec)
}

impl DfEmulator {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let em: Self = serde_json::from_str(s)?;
        if em.format != ARCHIVE_FORMAT {
            return Err(Error::InvalidParams(format!(
                "unknown archive format {:?}",
                em.format
            )));
        }
        em.spec.validate()?;
        Ok(em)
    }
}

pub fn predict_df(em: &DfEmulator, x: &[f64]) -> Result<f64> {
    let spec = &em.spec;
    let (d, d0) = (spec.d, spec.d0);
    if x.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            found: x.len(),
        });
    }
    let scale = 1.0 / (spec.h * spec.sigma2);
    let mut r = vec![0.0; d];
    let mut e = vec![0.0; d0 + 1];
    let mut total = 0.0;
    for i in 0..em.plan.n {
        let base = em.plan.base.row(i);
        let v = em.plan.perturbations.row(i);
        for k in 0..d {
            let ek = kernel_e_parts(em.cdf[i * d + k], em.density[i * d + k], x[k], base[k]);
            r[k] = ek * v[k] * scale;
        }
        let s = &em.combos[i * d0..(i + 1) * d0];
        match &spec.selection {
            ComponentSelection::AllUpTo => {
                esp_into(r.iter().copied(), &mut e);
                total += s.iter().zip(&e[1..]).map(|(s, e)| s * e).sum::<f64>();
            }
            ComponentSelection::Influential(u) => {
                esp_into(u.iter().map(|&k| r[k]), &mut e);
                total += s.iter().zip(&e[1..]).map(|(s, e)| s * e).sum::<f64>();
            }
            ComponentSelection::Explicit(_) => {
                for v in &em.components {
                    total += s[v.len() - 1] * v.iter().map(|k| r[k]).product::<f64>();
                }
            }
        }
    }
    Ok(em.mean + total / em.plan.n as f64)
}

pub fn predict_df_batch(em: &DfEmulator, points: &[f64]) -> Result<Vec<f64>> {
    if !points.len().is_multiple_of(em.spec.d) {
        return Err(Error::LengthMismatch {
            expected: points.len() / em.spec.d * em.spec.d,
            found: points.len(),
        });
    }
    points
        .par_chunks(em.spec.d)
        .map(|x| predict_df(em, x))
        .collect()
}
