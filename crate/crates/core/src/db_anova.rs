//! Derivative-based emulator and derivative-based sensitivity indices.
//!
//! The emulator averages, over a base sample `X'`, the cross-partial derivatives
//! `D(v, X'_i)` of the retained components weighted by products of the kernel
//! `E_k`. Sensitivity indices use the same kernels: first-order and total indices
//! through the covariance kernel `(F(min(a, b)) - F(a) F(b)) / (rho(a) rho(b))`
//! and the upper bound through `F (1 - F) / rho^2`.

use crate::distributions::{sample_design, unit_points, DesignMatrix, Generator, Marginal};
use crate::esp::kernel_e_parts;
use crate::subset::{subsets_up_to, Subset};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// A model with exact cross-partial derivatives up to [`DerivativeModel::max_order`].
///
/// Implementations are called from parallel workers.
pub trait DerivativeModel: Send + Sync {
    fn dim(&self) -> usize;

    fn max_order(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// `D(v, x)`; the empty subset returns the model value.
    fn derivative(&self, v: &Subset, x: &[f64]) -> Result<f64>;

    fn partial(&self, j: usize, x: &[f64]) -> Result<f64> {
        self.derivative(&Subset::singleton(j), x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (j, g) in out.iter_mut().enumerate() {
            *g = self.partial(j, x)?;
        }
        Ok(())
    }

    /// `D(v, x)` for each `v` in `components`.
    fn derivatives(&self, components: &[Subset], x: &[f64]) -> Result<Vec<f64>> {
        components.iter().map(|v| self.derivative(v, x)).collect()
    }
}

impl<T: DerivativeModel + ?Sized> DerivativeModel for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn derivative(&self, v: &Subset, x: &[f64]) -> Result<f64> {
        (**self).derivative(v, x)
    }
    fn partial(&self, j: usize, x: &[f64]) -> Result<f64> {
        (**self).partial(j, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).gradient(x, out)
    }
    fn derivatives(&self, components: &[Subset], x: &[f64]) -> Result<Vec<f64>> {
        (**self).derivatives(components, x)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DbEmulator {
    pub marginals: Vec<Marginal>,
    pub design: DesignMatrix,
    /// Retained components; always contains the empty subset.
    pub components: Vec<Subset>,
    /// Row-major `n x components.len()`.
    pub derivatives: Vec<f64>,
    cdf: Vec<f64>,
    density: Vec<f64>,
}

fn check_components(components: &[Subset], d: usize, max_order: usize) -> Result<Vec<Subset>> {
    let mut out: Vec<Subset> = components.to_vec();
    if !out.iter().any(Subset::is_empty) {
        out.insert(0, Subset::empty());
    }
    out.sort();
    out.dedup();
    for v in &out {
        if let Some(j) = v.max_index() {
            if j >= d {
                return Err(Error::InvalidParams(format!(
                    "component {v} refers to input {} but d = {d}",
                    j + 1
                )));
            }
        }
        if v.len() > max_order {
            return Err(Error::MissingDerivative {
                order: v.len(),
                max: max_order,
            });
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

/// Sample `n` base points from `marginals` and cache the derivatives of `components`.
pub fn fit_db<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    n: usize,
    seed: u64,
    generator: Generator,
    components: &[Subset],
) -> Result<DbEmulator> {
    if marginals.len() != model.dim() {
        return Err(Error::LengthMismatch {
            expected: model.dim(),
            found: marginals.len(),
        });
    }
    let design = sample_design(marginals, n, seed, generator)?;
    fit_db_on(model, marginals, design, components)
}

/// As [`fit_db`] on a given base design.
pub fn fit_db_on<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    design: DesignMatrix,
    components: &[Subset],
) -> Result<DbEmulator> {
    let d = model.dim();
    if design.d != d || marginals.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            found: design.d,
        });
    }
    let components = check_components(components, d, model.max_order())?;
    let rows: Vec<Vec<f64>> = (0..design.n)
        .into_par_iter()
        .map(|i| model.derivatives(&components, design.row(i)))
        .collect::<Result<_>>()?;
    for (i, row) in rows.iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i });
        }
    }
    let mut cdf = Vec::with_capacity(design.n * d);
    let mut density = Vec::with_capacity(design.n * d);
    for row in design.rows() {
        for (&x, m) in row.iter().zip(marginals) {
            let rho = m.pdf(x);
            if rho <= 0.0 {
                return Err(Error::ZeroDensity { at: x });
            }
            cdf.push(m.cdf(x));
            density.push(rho);
        }
    }
    Ok(DbEmulator {
        marginals: marginals.to_vec(),
        design,
        components,
        derivatives: rows.concat(),
        cdf,
        density,
    })
}

impl DbEmulator {
    pub fn n(&self) -> usize {
        self.design.n
    }

    pub fn d(&self) -> usize {
        self.design.d
    }
}

pub fn predict_db(em: &DbEmulator, x: &[f64]) -> Result<f64> {
    let d = em.d();
    if x.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            found: x.len(),
        });
    }
    let nc = em.components.len();
    let mut e = vec![0.0; d];
    let mut total = 0.0;
    for i in 0..em.n() {
        let base = em.design.row(i);
        for k in 0..d {
            e[k] = kernel_e_parts(em.cdf[i * d + k], em.density[i * d + k], x[k], base[k]);
        }
        let derivs = &em.derivatives[i * nc..(i + 1) * nc];
        for (v, &dv) in em.components.iter().zip(derivs) {
            total += dv * v.iter().map(|k| e[k]).product::<f64>();
        }
    }
    Ok(total / em.n() as f64)
}

pub fn predict_db_batch(em: &DbEmulator, points: &[f64]) -> Result<Vec<f64>> {
    points
        .par_chunks(em.d())
        .map(|x| predict_db(em, x))
        .collect()
}

// ---------------------------------------------------------------------------
// Sensitivity indices

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Clone, Debug)]
pub struct IndexOptions {
    pub n: usize,
    pub seed: u64,
    pub generator: Generator,
    /// Contiguous batches used for standard errors.
    pub batches: usize,
    /// Size of the output-variance sample; defaults to `n`.
    pub variance_n: Option<usize>,
    /// Estimate total indices (one extra partial derivative per input and sample).
    pub total: bool,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            n: 4096,
            seed: 0,
            generator: Generator::SobolSequence,
            batches: 20,
            variance_n: None,
            total: true,
        }
    }
}

impl IndexOptions {
    pub fn with_n_seed(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputIndices {
    /// 1-based input number.
    pub input: usize,
    pub first: IndexEstimate,
    pub total: Option<IndexEstimate>,
    pub upper: IndexEstimate,
}

impl InputIndices {
    /// Total index, or the upper bound when totals were not estimated.
    pub fn total_or_upper(&self) -> f64 {
        self.total.map_or(self.upper.value, |t| t.value)
    }
}

#[derive(Clone, Debug)]
struct RawIndices {
    variance: f64,
    inputs: Vec<InputIndices>,
}

/// Output mean and unbiased variance.
fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Estimate and SE from per-sample terms, via contiguous batch means.
fn batched(terms: impl Iterator<Item = f64>, n: usize, batches: usize, scale: f64) -> IndexEstimate {
    let b = batches.clamp(1, n);
    let mut sums = vec![0.0; b];
    let mut counts = vec![0usize; b];
    let mut total = 0.0;
    for (i, t) in terms.enumerate() {
        let k = i * b / n;
        sums[k] += t;
        counts[k] += 1;
        total += t;
    }
    let value = total / n as f64 * scale;
    let se = if b > 1 {
        let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
        let (_, var) = mean_var(&means);
        (var / b as f64).sqrt() * scale.abs()
    } else {
        f64::NAN
    };
    IndexEstimate { value, se }
}

fn output_variance<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    opts: &IndexOptions,
) -> Result<f64> {
    let n = opts.variance_n.unwrap_or(opts.n).max(2);
    let design = sample_design(marginals, n, opts.seed.wrapping_add(0x5eed), opts.generator)?;
    let values: Vec<f64> = (0..n).into_par_iter().map(|i| model.value(design.row(i))).collect();
    let (_, var) = mean_var(&values);
    if !(var > 1e-12) {
        return Err(Error::DegenerateVariance(var));
    }
    Ok(var)
}

struct SampleTerms {
    first: Vec<f64>,
    total: Vec<f64>,
    upper: Vec<f64>,
}

fn estimate_indices<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    inputs: &[usize],
    opts: &IndexOptions,
) -> Result<RawIndices> {
    let d = model.dim();
    if marginals.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            found: marginals.len(),
        });
    }
    if opts.n < 2 {
        return Err(Error::InvalidParams("index estimation needs n >= 2".into()));
    }
    if model.max_order() < 1 {
        return Err(Error::MissingDerivative { order: 1, max: 0 });
    }
    if let Some(&j) = inputs.iter().find(|&&j| j >= d) {
        return Err(Error::InvalidParams(format!("input {} out of range", j + 1)));
    }
    let variance = output_variance(model, marginals, opts)?;
    let n = opts.n;
    // X in the first d coordinates, X' in the next d
    let unit = unit_points(2 * d, n, opts.generator, opts.seed)?;
    let samples: Vec<SampleTerms> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<SampleTerms> {
            let u = &unit[i * 2 * d..(i + 1) * 2 * d];
            let x: Vec<f64> = (0..d).map(|k| marginals[k].quantile(u[k])).collect();
            let xp: Vec<f64> = (0..d).map(|k| marginals[k].quantile(u[d + k])).collect();
            let mut gx = vec![0.0; d];
            let mut gxp = vec![0.0; d];
            model.gradient(&x, &mut gx)?;
            model.gradient(&xp, &mut gxp)?;
            let mut t = SampleTerms {
                first: Vec::with_capacity(inputs.len()),
                total: Vec::with_capacity(inputs.len()),
                upper: Vec::with_capacity(inputs.len()),
            };
            let mut mixed = x.clone();
            for &j in inputs {
                let m = &marginals[j];
                let (a, b) = (x[j], xp[j]);
                let (fa, fb) = (m.cdf(a), m.cdf(b));
                let (ra, rb) = (m.pdf(a), m.pdf(b));
                if ra <= 0.0 || rb <= 0.0 {
                    return Err(Error::ZeroDensity { at: if ra <= 0.0 { a } else { b } });
                }
                let cov = (m.cdf(a.min(b)) - fa * fb) / (ra * rb);
                t.first.push(gx[j] * gxp[j] * cov);
                t.upper.push(gx[j] * gx[j] * fa * (1.0 - fa) / (ra * ra));
                if opts.total {
                    mixed[j] = b;
                    let gm = model.partial(j, &mixed)?;
                    mixed[j] = a;
                    t.total.push(gx[j] * gm * cov);
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;

    let inv_v = 1.0 / variance;
    let inputs = inputs
        .iter()
        .enumerate()
        .map(|(q, &j)| InputIndices {
            input: j + 1,
            first: batched(samples.iter().map(|s| s.first[q]), n, opts.batches, inv_v),
            total: opts
                .total
                .then(|| batched(samples.iter().map(|s| s.total[q]), n, opts.batches, inv_v)),
            upper: batched(samples.iter().map(|s| s.upper[q]), n, opts.batches, 0.5 * inv_v),
        })
        .collect();
    Ok(RawIndices { variance, inputs })
}

pub fn first_order_index<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    j: usize,
    n: usize,
    seed: u64,
) -> Result<IndexEstimate> {
    let opts = IndexOptions {
        total: false,
        ..IndexOptions::with_n_seed(n, seed)
    };
    Ok(estimate_indices(model, marginals, &[j], &opts)?.inputs[0].first)
}

pub fn total_index<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    j: usize,
    n: usize,
    seed: u64,
) -> Result<IndexEstimate> {
    let opts = IndexOptions::with_n_seed(n, seed);
    let raw = estimate_indices(model, marginals, &[j], &opts)?;
    Ok(raw.inputs[0].total.expect("total requested"))
}

pub fn upper_bound_index<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    j: usize,
    n: usize,
    seed: u64,
) -> Result<IndexEstimate> {
    let opts = IndexOptions {
        total: false,
        ..IndexOptions::with_n_seed(n, seed)
    };
    Ok(estimate_indices(model, marginals, &[j], &opts)?.inputs[0].upper)
}

// ---------------------------------------------------------------------------
// Truncation order and screening

/// Default tolerance for the truncation-order inequalities.
pub const DEFAULT_EPS: f64 = 0.05;

/// Recommended truncation order with a one-line justification.
pub fn recommend_truncation_explained(s: &[f64], st: &[f64], eps: f64) -> Result<(usize, String)> {
    if s.len() != st.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            found: st.len(),
        });
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidParams(format!("eps must be >= 0, got {eps}")));
    }
    let d = s.len();
    if d == 0 {
        return Err(Error::InvalidParams("no indices".into()));
    }
    let ss: f64 = s.iter().sum();
    let sst: f64 = st.iter().sum();
    let (d0, why) = if ss >= 1.0 - eps {
        (1, format!("sum S = {ss:.4} >= 1 - eps"))
    } else if ss + sst <= 2.0 + eps {
        (2, format!("sum (S + ST) = {:.4} <= 2 + eps", ss + sst))
    } else if 2.0 * ss + sst > 2.0 && 2.0 * ss + sst <= 3.0 + eps {
        (3, format!("sum (2S + ST) = {:.4} in (2, 3 + eps]", 2.0 * ss + sst))
    } else if let Some(a) = (2..=d).find(|&a| {
        let a = a as f64;
        (a - 1.0) * sst + ss >= a - eps && sst + (a - 1.0) * ss <= a + eps
    }) {
        (a, format!("smallest alpha with both order-alpha bounds is {a}"))
    } else {
        (d, "no bound satisfied; full order".to_string())
    };
    Ok((d0.min(d), why))
}

pub fn recommend_truncation(s: &[f64], st: &[f64], eps: f64) -> Result<usize> {
    recommend_truncation_explained(s, st, eps).map(|(d0, _)| d0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningThresholds {
    /// Below this an index counts as zero.
    pub zero: f64,
    /// Two indices within this are considered equal.
    pub equal: f64,
    /// Tolerance on `S_i + ST_j = 1` for the two-input rule.
    pub pair_sum: f64,
    /// Total indices below this count as small in the two-input rule.
    pub pair_small: f64,
}

impl Default for ScreeningThresholds {
    fn default() -> Self {
        Self {
            zero: 0.01,
            equal: 0.05,
            pair_sum: 0.10,
            pair_small: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Screening {
    pub components: Vec<Subset>,
    pub log: Vec<String>,
}

/// Apply the screening rules to per-input indices and build the retained set up to order `d0`.
///
/// Missing total indices are replaced by the upper bounds.
pub fn screen_components(
    indices: &[InputIndices],
    d0: usize,
    th: &ScreeningThresholds,
) -> Screening {
    let mut log = Vec::new();
    let d = indices.len();
    let s: Vec<f64> = indices.iter().map(|r| r.first.value).collect();
    let st: Vec<f64> = indices.iter().map(InputIndices::total_or_upper).collect();
    let ub: Vec<f64> = indices.iter().map(|r| r.upper.value).collect();
    let name = |q: usize| format!("X{}", indices[q].input);

    let mut active: Vec<usize> = Vec::new();
    for q in 0..d {
        if ub[q] < th.zero {
            log.push(format!("{}: UB = {:.4} ~ 0, input dropped", name(q), ub[q]));
        } else {
            active.push(q);
        }
    }

    // two-input rule
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let dev = (s[i] + st[j] - 1.0).abs();
            let others_small = (0..d).filter(|&k| k != i && k != j).all(|k| st[k] < th.pair_small);
            if dev <= th.pair_sum && others_small && best.is_none_or(|b| dev < b.2) {
                best = Some((i, j, dev));
            }
        }
    }
    if let Some((i, j, _)) = best {
        log.push(format!(
            "S_{} + ST_{} = {:.4} ~ 1 with all other ST < {}; only {} and {} kept",
            indices[i].input,
            indices[j].input,
            s[i] + st[j],
            th.pair_small,
            name(i),
            name(j)
        ));
        active.retain(|&q| q == i || q == j);
        if !active.contains(&i) || !active.contains(&j) {
            active = vec![i.min(j), i.max(j)];
        }
    }

    let mut additive = Vec::new();
    let mut no_main = Vec::new();
    for &q in &active {
        if (s[q] - st[q]).abs() <= th.equal || (s[q] - ub[q]).abs() <= th.equal {
            log.push(format!(
                "{}: S = {:.4} ~ ST = {:.4} or UB = {:.4}; interactions dropped",
                name(q),
                s[q],
                st[q],
                ub[q]
            ));
            additive.push(q);
        }
        if s[q] < th.zero && ub[q] >= st[q] && st[q] >= th.zero {
            log.push(format!(
                "{}: S = {:.4} ~ 0 with UB >= ST = {:.4}; main effect dropped",
                name(q),
                s[q],
                st[q]
            ));
            no_main.push(q);
        }
    }

    let inputs: Vec<usize> = active.iter().map(|&q| indices[q].input - 1).collect();
    let to_input = |q: &usize| indices[*q].input - 1;
    let additive: Vec<usize> = additive.iter().map(to_input).collect();
    let no_main: Vec<usize> = no_main.iter().map(to_input).collect();
    let mut components = vec![Subset::empty()];
    components.extend(subsets_up_to(&inputs, d0).into_iter().filter(|v| {
        if v.len() == 1 {
            !no_main.contains(&v.indices()[0])
        } else {
            !v.iter().any(|k| additive.contains(&k))
        }
    }));
    if log.is_empty() {
        log.push(format!("no screening rule fired; all components up to order {d0} kept"));
    }
    Screening { components, log }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub d: usize,
    pub n: usize,
    pub variance: f64,
    pub indices: Vec<InputIndices>,
    pub eps: f64,
    pub recommended_d0: usize,
    pub components: Vec<Subset>,
    pub decision_log: Vec<String>,
}

impl SensitivityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("input,S,S_se,ST,ST_se,UB,UB_se\n");
        for r in &self.indices {
            let (st, st_se) = r
                .total
                .map_or((String::new(), String::new()), |t| (t.value.to_string(), t.se.to_string()));
            let _ = writeln!(
                out,
                "X{},{},{},{},{},{},{}",
                r.input, r.first.value, r.first.se, st, st_se, r.upper.value, r.upper.se
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Estimate all indices, recommend a truncation order and screen the component set.
pub fn sensitivity_report<M: DerivativeModel>(
    model: &M,
    marginals: &[Marginal],
    opts: &IndexOptions,
    eps: f64,
    thresholds: &ScreeningThresholds,
) -> Result<SensitivityReport> {
    let d = model.dim();
    let inputs: Vec<usize> = (0..d).collect();
    let raw = estimate_indices(model, marginals, &inputs, opts)?;
    let s: Vec<f64> = raw.inputs.iter().map(|r| r.first.value).collect();
    let st: Vec<f64> = raw.inputs.iter().map(InputIndices::total_or_upper).collect();
    let mut log = Vec::new();
    if !opts.total {
        log.push("total indices not estimated; upper bounds used in their place".to_string());
    }
    let (d0, why) = recommend_truncation_explained(&s, &st, eps)?;
    log.push(format!("d0 = {d0}: {why}"));
    let screening = screen_components(&raw.inputs, d0, thresholds);
    log.extend(screening.log);
    for line in &log {
        log::info!("{line}");
    }
    Ok(SensitivityReport {
        d,
        n: opts.n,
        variance: raw.variance,
        indices: raw.inputs,
        eps,
        recommended_d0: d0,
        components: screening.components,
        decision_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(v: f64) -> IndexEstimate {
        IndexEstimate { value: v, se: 0.0 }
    }

    fn row(input: usize, s: f64, st: f64, ub: f64) -> InputIndices {
        InputIndices {
            input,
            first: est(s),
            total: Some(est(st)),
            upper: est(ub),
        }
    }

    #[test]
    fn truncation_examples() {
        let s = [0.3139, 0.4424, 0.0];
        let st = [0.5576, 0.4424, 0.2437];
        assert_eq!(recommend_truncation(&s, &st, 0.05).unwrap(), 2);
        assert_eq!(recommend_truncation(&[0.1; 10], &[0.1; 10], 0.05).unwrap(), 1);
        assert_eq!(recommend_truncation(&[0.02; 10], &[0.27; 10], 0.05).unwrap(), 4);
        assert!(recommend_truncation(&[0.1], &[0.1, 0.2], 0.05).is_err());
    }

    #[test]
    fn truncation_capped_at_d() {
        assert_eq!(recommend_truncation(&[0.0, 0.0], &[1.0, 1.0], 0.0).unwrap(), 2);
        assert_eq!(recommend_truncation(&[0.2], &[0.9], 0.0).unwrap(), 1);
    }

    #[test]
    fn screening_ishigami() {
        let idx = [
            row(1, 0.3139, 0.5576, 0.9),
            row(2, 0.4424, 0.4424, 0.6),
            row(3, 0.0, 0.2437, 0.4),
        ];
        let sc = screen_components(&idx, 2, &ScreeningThresholds::default());
        let want = vec![
            Subset::empty(),
            Subset::singleton(0),
            Subset::singleton(1),
            Subset::new([0, 2]),
        ];
        assert_eq!(sc.components, want, "{:?}", sc.log);
    }

    #[test]
    fn screening_pair_rule() {
        let mut idx = vec![row(1, 0.386, 0.54, 0.7), row(2, 0.39, 0.55, 0.7)];
        for k in 3..=10 {
            idx.push(row(k, 0.01, 0.013, 0.02));
        }
        let sc = screen_components(&idx, 2, &ScreeningThresholds::default());
        let want = vec![
            Subset::empty(),
            Subset::singleton(0),
            Subset::singleton(1),
            Subset::new([0, 1]),
        ];
        assert_eq!(sc.components, want, "{:?}", sc.log);
    }

    #[test]
    fn screening_noop() {
        let idx = [row(1, 0.3, 0.5, 0.6), row(2, 0.2, 0.4, 0.5), row(3, 0.1, 0.3, 0.4)];
        let sc = screen_components(&idx, 3, &ScreeningThresholds::default());
        assert_eq!(sc.components.len(), 8);
        assert!(sc.log[0].starts_with("no screening rule"));
    }

    #[test]
    fn screening_drops_inert_input() {
        let idx = [row(1, 0.5, 0.6, 0.7), row(2, 0.4, 0.5, 0.6), row(3, 0.0, 0.0, 0.0)];
        let sc = screen_components(&idx, 2, &ScreeningThresholds::default());
        assert!(sc.components.iter().all(|v| !v.contains(2)));
    }

    proptest! {
        #[test]
        fn truncation_monotone_in_eps(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8),
            e1 in 0.0f64..0.5,
            de in 0.0f64..0.5,
        ) {
            let s: Vec<f64> = pairs.iter().map(|p| p.0 * 0.5).collect();
            let st: Vec<f64> = pairs.iter().map(|p| p.0 * 0.5 + p.1 * 0.5).collect();
            let a = recommend_truncation(&s, &st, e1).unwrap();
            let b = recommend_truncation(&s, &st, e1 + de).unwrap();
            prop_assert!(b <= a);
            prop_assert!(a >= 1 && a <= s.len());
        }
    }
}
