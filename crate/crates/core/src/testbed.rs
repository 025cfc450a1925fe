//! Analytic test functions with exact derivatives, accuracy metrics and
//! replication studies.

use crate::db_anova::DerivativeModel;
use crate::distributions::{sobol_segment, DesignMatrix, Marginal};
use crate::{Error, Result, Subset};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

pub fn ishigami(x: &[f64]) -> f64 {
    x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin()
}

/// Cross-partial `D(v, x)` of the Ishigami function.
pub fn ishigami_deriv(v: &Subset, x: &[f64]) -> Result<f64> {
    if v.max_index().is_some_and(|j| j > 2) {
        return Err(Error::UnsupportedOrder(format!(
            "Ishigami has 3 inputs, got component {v}"
        )));
    }
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    Ok(match v.indices() {
        [] => ishigami(x),
        [0] => x1.cos() * (1.0 + 0.1 * x3.powi(4)),
        [1] => 7.0 * (2.0 * x2).sin(),
        [2] => 0.4 * x3.powi(3) * x1.sin(),
        [0, 2] => 0.4 * x3.powi(3) * x1.cos(),
        _ => 0.0,
    })
}

pub fn gfunction(x: &[f64], a: &[f64]) -> f64 {
    x.iter()
        .zip(a)
        .map(|(&x, &a)| ((4.0 * x - 2.0).abs() + a) / (1.0 + a))
        .product()
}

fn g_factor_deriv(j: usize, x: f64, a: f64) -> Result<f64> {
    if x == 0.5 {
        return Err(Error::Kink { input: j + 1 });
    }
    Ok(4.0 * (4.0 * x - 2.0).signum() / (1.0 + a))
}

pub fn gfunction_deriv1(j: usize, x: &[f64], a: &[f64]) -> Result<f64> {
    gfunction_deriv(&Subset::singleton(j), x, a)
}

/// Cross-partial of the g-function; every factor is piecewise linear, so any order exists.
pub fn gfunction_deriv(v: &Subset, x: &[f64], a: &[f64]) -> Result<f64> {
    let mut out = 1.0;
    for (k, (&xk, &ak)) in x.iter().zip(a).enumerate() {
        out *= if v.contains(k) {
            g_factor_deriv(k, xk, ak)?
        } else {
            ((4.0 * xk - 2.0).abs() + ak) / (1.0 + ak)
        };
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GType {
    A,
    B,
    C,
}

impl GType {
    pub fn coefficients(self) -> Vec<f64> {
        match self {
            GType::A => {
                let mut a = vec![6.52; 10];
                a[0] = 0.0;
                a[1] = 0.0;
                a
            }
            GType::B => vec![50.0; 10],
            GType::C => vec![0.0; 10],
        }
    }

    /// Published first-order and total indices.
    pub fn reference(self) -> ReferenceIndices {
        let (first, total) = match self {
            GType::A => {
                let mut s = vec![0.0069; 10];
                let mut st = vec![0.013; 10];
                s[..2].fill(0.39);
                st[..2].fill(0.54);
                (s, st)
            }
            GType::B => (vec![0.1; 10], vec![0.1; 10]),
            GType::C => (vec![0.02; 10], vec![0.27; 10]),
        };
        ReferenceIndices { first, total }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceIndices {
    pub first: Vec<f64>,
    pub total: Vec<f64>,
}

pub fn ishigami_reference() -> ReferenceIndices {
    ReferenceIndices {
        first: vec![0.3139, 0.4424, 0.0],
        total: vec![0.567, 0.442, 0.243],
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Function {
    Ishigami,
    GFunction(Vec<f64>),
    /// `sum_j a_j x_j`
    Linear(Vec<f64>),
    /// `sum_j w_j x_j^2`
    Additive(Vec<f64>),
    Constant { value: f64, d: usize },
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub name: String,
    pub function: Function,
    pub marginals: Vec<Marginal>,
    pub reference: Option<ReferenceIndices>,
}

impl TestFunction {
    pub fn ishigami() -> Self {
        Self {
            name: "ishigami".into(),
            function: Function::Ishigami,
            marginals: vec![Marginal::Uniform { lower: -PI, upper: PI }; 3],
            reference: Some(ishigami_reference()),
        }
    }

    pub fn gfunction(kind: GType) -> Self {
        let name = match kind {
            GType::A => "gfunction-a",
            GType::B => "gfunction-b",
            GType::C => "gfunction-c",
        };
        Self {
            name: name.into(),
            function: Function::GFunction(kind.coefficients()),
            marginals: vec![Marginal::Uniform { lower: 0.0, upper: 1.0 }; 10],
            reference: Some(kind.reference()),
        }
    }

    /// Linear model on `U(0, 1)^d`.
    pub fn linear(a: Vec<f64>) -> Self {
        let d = a.len();
        Self {
            name: "linear".into(),
            function: Function::Linear(a),
            marginals: vec![Marginal::Uniform { lower: 0.0, upper: 1.0 }; d],
            reference: None,
        }
    }

    /// Additive quadratic model on `U(0, 1)^d`.
    pub fn additive(w: Vec<f64>) -> Self {
        let d = w.len();
        Self {
            name: "additive".into(),
            function: Function::Additive(w),
            marginals: vec![Marginal::Uniform { lower: 0.0, upper: 1.0 }; d],
            reference: None,
        }
    }

    pub fn constant(value: f64, d: usize) -> Self {
        Self {
            name: "constant".into(),
            function: Function::Constant { value, d },
            marginals: vec![Marginal::Uniform { lower: 0.0, upper: 1.0 }; d],
            reference: None,
        }
    }

    pub fn with_marginals(mut self, marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: marginals.len(),
            });
        }
        self.marginals = marginals;
        Ok(self)
    }

    /// Model values at row-major points.
    pub fn evaluate_all(&self, points: &[f64]) -> Vec<f64> {
        points.par_chunks(self.dim()).map(|x| self.value(x)).collect()
    }
}

impl DerivativeModel for TestFunction {
    fn dim(&self) -> usize {
        match &self.function {
            Function::Ishigami => 3,
            Function::GFunction(a) | Function::Linear(a) | Function::Additive(a) => a.len(),
            Function::Constant { d, .. } => *d,
        }
    }

    fn max_order(&self) -> usize {
        self.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &self.function {
            Function::Ishigami => ishigami(x),
            Function::GFunction(a) => gfunction(x, a),
            Function::Linear(a) => a.iter().zip(x).map(|(a, x)| a * x).sum(),
            Function::Additive(w) => w.iter().zip(x).map(|(w, x)| w * x * x).sum(),
            Function::Constant { value, .. } => *value,
        }
    }

    fn derivative(&self, v: &Subset, x: &[f64]) -> Result<f64> {
        if v.is_empty() {
            return Ok(self.value(x));
        }
        if v.max_index().is_some_and(|j| j >= self.dim()) {
            return Err(Error::UnsupportedOrder(format!(
                "component {v} outside {} inputs",
                self.dim()
            )));
        }
        Ok(match &self.function {
            Function::Ishigami => ishigami_deriv(v, x)?,
            Function::GFunction(a) => gfunction_deriv(v, x, a)?,
            Function::Linear(a) => match v.indices() {
                [j] => a[*j],
                _ => 0.0,
            },
            Function::Additive(w) => match v.indices() {
                [j] => 2.0 * w[*j] * x[*j],
                _ => 0.0,
            },
            Function::Constant { .. } => 0.0,
        })
    }
}

/// First Sobol index used for probe points.
pub const PROBE_INDEX: u32 = 1001;
pub const PROBE_COUNT: usize = 5;
/// First Sobol index of held-out test sets, far past any fitting design.
pub const HOLDOUT_INDEX: u32 = 1 << 20;

/// Five fixed probe points of a test function (Sobol indices 1001..=1005 mapped through the marginals).
pub fn probe_points(marginals: &[Marginal]) -> Result<Vec<Vec<f64>>> {
    let design = sobol_segment(marginals, PROBE_INDEX, PROBE_COUNT)?;
    Ok(design.rows().map(<[f64]>::to_vec).collect())
}

/// `n` held-out Sobol test points.
pub fn holdout_points(marginals: &[Marginal], n: usize) -> Result<DesignMatrix> {
    sobol_segment(marginals, HOLDOUT_INDEX, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r2: f64,
    pub rmse: f64,
    pub max_abs: f64,
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::DegenerateTruth("need at least two outputs".into()));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let sst: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::DegenerateTruth(format!("zero variance (SST = {sst})")));
    }
    let sse: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).powi(2)).sum();
    let max_abs = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).abs())
        .fold(0.0, f64::max);
    Ok(Metrics {
        r2: 1.0 - sse / sst,
        rmse: (sse / n).sqrt(),
        max_abs,
    })
}

/// SplitMix64 output for `state`.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub probe: usize,
    pub bias: f64,
    pub bias_se: f64,
    /// Population variance over replications.
    pub variance: f64,
    pub mse: f64,
    pub mse_se: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub se: f64,
    /// 95% band.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyResult {
    pub replications: usize,
    pub ns: Vec<usize>,
    pub rows: Vec<StudyRow>,
    /// Probe-averaged MSE per `N` with its SE.
    pub mean_mse: Vec<(f64, f64)>,
    pub slope: SlopeFit,
    pub probe_slopes: Vec<SlopeFit>,
}

impl StudyResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,probe,bias,var,mse\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.n, r.probe + 1, r.bias, r.variance, r.mse);
        }
        out
    }
}

/// Weighted least squares of `log y` on `log n`, weights from the SE of `y`.
fn loglog_slope(ns: &[usize], y: &[f64], se: &[f64]) -> SlopeFit {
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let w: Vec<f64> = y
        .iter()
        .zip(se)
        .map(|(v, s)| {
            let rel = s / v;
            if rel > 0.0 && rel.is_finite() {
                1.0 / (rel * rel)
            } else {
                1.0
            }
        })
        .collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(&ly).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = w
        .iter()
        .zip(x.iter().zip(&ly))
        .map(|(w, (x, y))| w * (x - xm) * (y - ym))
        .sum();
    let slope = sxy / sxx;
    let se = (1.0 / sxx).sqrt();
    SlopeFit {
        slope,
        se,
        lower: slope - 1.96 * se,
        upper: slope + 1.96 * se,
    }
}

/// Refit an emulator `replications` times per sample size and measure its error at fixed probes.
///
/// `builder(n, seed)` fits one emulator and returns its predictions at the probes;
/// `truth` holds the model values there. Seeds are derived with SplitMix64 from
/// `seed` and the (size, replication) counter.
pub fn replication_study<B>(
    builder: B,
    truth: &[f64],
    ns: &[usize],
    replications: usize,
    seed: u64,
) -> Result<StudyResult>
where
    B: Fn(usize, u64) -> Result<Vec<f64>> + Sync,
{
    if replications < 30 {
        return Err(Error::InvalidParams(format!(
            "replication studies need R >= 30, got {replications}"
        )));
    }
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("sample sizes must be increasing".into()));
    }
    let np = truth.len();
    let r = replications;
    let jobs: Vec<(usize, usize)> = (0..ns.len())
        .flat_map(|a| (0..r).map(move |k| (a, k)))
        .collect();
    let preds: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(a, k)| {
            let s = splitmix64(seed ^ splitmix64((a * r + k) as u64));
            let p = builder(ns[a], s)?;
            if p.len() != np {
                return Err(Error::LengthMismatch {
                    expected: np,
                    found: p.len(),
                });
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;

    let rf = r as f64;
    let mut rows = Vec::new();
    let mut mean_mse = Vec::new();
    let mut per_probe: Vec<Vec<(f64, f64)>> = vec![Vec::new(); np];
    for (a, &n) in ns.iter().enumerate() {
        let block = &preds[a * r..(a + 1) * r];
        for (q, (&t, series)) in truth.iter().zip(per_probe.iter_mut()).enumerate() {
            let errs: Vec<f64> = block.iter().map(|p| p[q] - t).collect();
            let bias = errs.iter().sum::<f64>() / rf;
            let variance = errs.iter().map(|e| (e - bias).powi(2)).sum::<f64>() / rf;
            let sq: Vec<f64> = errs.iter().map(|e| e * e).collect();
            let mse = sq.iter().sum::<f64>() / rf;
            let mse_var = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (rf - 1.0);
            let mse_se = (mse_var / rf).sqrt();
            series.push((mse, mse_se));
            rows.push(StudyRow {
                n,
                probe: q,
                bias,
                bias_se: (variance * rf / (rf - 1.0) / rf).sqrt(),
                variance,
                mse,
                mse_se,
            });
        }
        // probe-averaged squared error per replication
        let avg: Vec<f64> = block
            .iter()
            .map(|p| p.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / np as f64)
            .collect();
        let m = avg.iter().sum::<f64>() / rf;
        let v = avg.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (rf - 1.0);
        mean_mse.push((m, (v / rf).sqrt()));
    }
    let (y, se): (Vec<f64>, Vec<f64>) = mean_mse.iter().copied().unzip();
    let slope = loglog_slope(ns, &y, &se);
    let probe_slopes = per_probe
        .iter()
        .map(|s| {
            let (y, se): (Vec<f64>, Vec<f64>) = s.iter().copied().unzip();
            loglog_slope(ns, &y, &se)
        })
        .collect();
    Ok(StudyResult {
        replications: r,
        ns: ns.to_vec(),
        rows,
        mean_mse,
        slope,
        probe_slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ishigami_examples() {
        assert_eq!(ishigami(&[0.0, 0.0, 0.0]), 0.0);
        assert!((ishigami(&[PI / 2.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        let d2 = ishigami_deriv(&Subset::singleton(1), &[0.0, PI / 4.0, 0.0]).unwrap();
        assert!((d2 - 7.0).abs() < 1e-14);
        assert_eq!(ishigami_deriv(&Subset::new([0, 1, 2]), &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!(ishigami_deriv(&Subset::singleton(3), &[0.0; 4]).is_err());
    }

    #[test]
    fn gfunction_examples() {
        for kind in [GType::A, GType::C] {
            assert_eq!(gfunction(&[0.5; 10], &kind.coefficients()), 0.0);
        }
        let v = gfunction(&[1.0; 10], &GType::B.coefficients());
        assert!((v - (52.0f64 / 51.0).powi(10)).abs() < 1e-14);
        assert!((v - 1.214).abs() < 1e-3);
        let a = GType::A.coefficients();
        assert_eq!(a[0], 0.0);
        assert_eq!(a[9], 6.52);
        assert!(matches!(
            gfunction_deriv1(3, &[0.5; 10], &a),
            Err(Error::Kink { input: 4 })
        ));
    }

    /// Central differences of `D(v \ {k}, .)` in direction `k`.
    fn fd_check(f: &TestFunction, points: usize, seed: u64, avoid: impl Fn(&[f64]) -> bool) {
        let d = f.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = crate::subset::power_set(d.min(3));
        let mut checked = 0;
        while checked < points {
            let x: Vec<f64> = f
                .marginals
                .iter()
                .map(|m| {
                    let (a, b) = m.support();
                    a + (b - a) * rng.random_range(0.05..0.95)
                })
                .collect();
            if avoid(&x) {
                continue;
            }
            checked += 1;
            for v in comps.iter().filter(|v| !v.is_empty()) {
                let k = v.max_index().unwrap();
                let rest = Subset::new(v.iter().filter(|&j| j != k));
                let h = 1e-5 * (1.0 + x[k].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (f.derivative(&rest, &xp).unwrap() - f.derivative(&rest, &xm).unwrap())
                    / (2.0 * h);
                let exact = f.derivative(v, &x).unwrap();
                let scale = exact.abs().max(1.0);
                assert!(
                    (fd - exact).abs() / scale < 1e-5,
                    "{} {v} at {x:?}: fd {fd} exact {exact}",
                    f.name
                );
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(&TestFunction::ishigami(), 100, 1, |_| false);
        for kind in [GType::A, GType::B, GType::C] {
            fd_check(&TestFunction::gfunction(kind), 100, 2, |x| {
                x.iter().any(|&xi| (xi - 0.5).abs() < 1e-3)
            });
        }
        fd_check(&TestFunction::linear(vec![1.0, -2.0, 3.0]), 100, 3, |_| false);
        fd_check(&TestFunction::additive(vec![1.0, 2.0, 3.0, 4.0, 5.0]), 100, 4, |_| false);
    }

    #[test]
    fn metric_examples() {
        let y = [1.0, 2.0, 4.0, 8.0];
        let m = metrics(&y, &y).unwrap();
        assert_eq!(m.r2, 1.0);
        assert_eq!(m.rmse, 0.0);
        let mean = [3.75; 4];
        assert!(metrics(&y, &mean).unwrap().r2.abs() < 1e-15);
        let perm = [8.0, 4.0, 2.0, 1.0];
        assert!(metrics(&y, &perm).unwrap().r2 <= 0.0);
        assert!(matches!(metrics(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateTruth(_))));
        assert!(metrics(&[1.0], &[1.0]).is_err());
        assert!(metrics(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn probes_are_fixed_and_inside() {
        let f = TestFunction::ishigami();
        let p = probe_points(&f.marginals).unwrap();
        assert_eq!(p.len(), PROBE_COUNT);
        assert_eq!(p, probe_points(&f.marginals).unwrap());
        assert!(p.iter().flatten().all(|x| x.abs() < PI));
    }

    #[test]
    fn study_decomposition() {
        let truth = vec![1.0, 2.0];
        let res = replication_study(
            |n, seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = 1.0 / (n as f64).sqrt();
                Ok(vec![1.0 + s * rng.random_range(-1.0..1.0), 2.0 + 0.1 + s * rng.random_range(-1.0..1.0)])
            },
            &truth,
            &[100, 400],
            40,
            9,
        )
        .unwrap();
        for r in &res.rows {
            assert!(r.mse >= r.variance - 1e-15);
            assert!((r.mse - (r.bias * r.bias + r.variance)).abs() < 1e-12);
        }
        assert_eq!(res.to_csv().lines().count(), 1 + 4);
        assert!(replication_study(|_, _| Ok(vec![0.0]), &[0.0], &[10, 5], 40, 0).is_err());
        assert!(replication_study(|_, _| Ok(vec![0.0]), &[0.0], &[10], 10, 0).is_err());
    }
}
