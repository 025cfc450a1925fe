//! Perturbation multipliers `beta_l` and the coefficients `C_l^(p)` that combine
//! the `L` perturbed runs of each base point.
//!
//! For each interaction order `p`, the coefficients solve a generalized
//! Vandermonde system `sum_l C_l^(p) beta_l^r = delta(p, r)` over a set of
//! exponents `r`. Two exponent sets are supported:
//!
//! * truncation-optimal: `{0..r*}` followed by exponents of the parity of `p`
//!   that cancel the leading higher-order Taylor terms;
//! * baseline: the plain Vandermonde rows `{0..L-1}` (or `{0..L-2} + {p}` when
//!   `p >= L`), which is always solvable for distinct multipliers.
//!
//! With symmetric multiplier grids the truncation-optimal system can be singular;
//! such rows fall back to the baseline scheme and are tagged in the plan.

use crate::linalg::{matvec, norm1, Lu};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rows whose 1-norm condition number exceeds this are re-solved under the baseline scheme.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TruncationOptimal,
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowScheme {
    TruncationOptimal,
    BaselineFallback,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub p: usize,
    pub scheme: RowScheme,
    pub exponents: Vec<u32>,
    pub coefficients: Vec<f64>,
    pub condition: f64,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientPlan {
    pub l: usize,
    pub betas: Vec<f64>,
    pub r_star: usize,
    pub d0: usize,
    /// One row per order `p = 1..=d0`.
    pub rows: Vec<CoefficientRow>,
}

impl CoefficientPlan {
    /// `C^(p)` for `1 <= p <= d0`.
    pub fn coefficients(&self, p: usize) -> &[f64] {
        &self.rows[p - 1].coefficients
    }

    pub fn fallbacks(&self) -> impl Iterator<Item = &CoefficientRow> {
        self.rows
            .iter()
            .filter(|r| r.scheme == RowScheme::BaselineFallback)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `{0, +-2^(k-1)}` for odd `L`, `{+-2^k}` for even `L`, sorted ascending.
pub fn beta_grid(l: usize) -> Vec<f64> {
    let mut betas = Vec::with_capacity(l);
    if l % 2 == 1 {
        betas.push(0.0);
        for k in 1..=(l - 1) / 2 {
            let b = 2f64.powi(k as i32 - 1);
            betas.extend([b, -b]);
        }
    } else {
        for k in 1..=l / 2 {
            let b = 2f64.powi(k as i32);
            betas.extend([b, -b]);
        }
    }
    betas.sort_by(f64::total_cmp);
    betas
}

/// Exponent set of the constraint system for order `p`.
pub fn constraint_rows(p: usize, l: usize, r_star: usize, scheme: Scheme) -> Result<Vec<u32>> {
    if p == 0 || l == 0 {
        return Err(Error::InvalidParams(format!(
            "constraint rows need p >= 1 and L >= 1, got p = {p}, L = {l}"
        )));
    }
    let rows: Vec<usize> = match scheme {
        Scheme::TruncationOptimal => {
            if l < 2 || r_star > l - 2 {
                return Err(Error::InvalidRStar {
                    r_star,
                    limit: l.saturating_sub(2),
                });
            }
            let mut rows: Vec<usize> = (0..=r_star).collect();
            if p <= r_star {
                let lambda = (r_star - p) / 2;
                let first = p + 2 * lambda + 2;
                rows.extend((0..l - 1 - r_star).map(|k| first + 2 * k));
            } else {
                rows.extend((0..l - 1 - r_star).map(|k| p + 2 * k));
            }
            rows
        }
        Scheme::Baseline => {
            if p < l {
                (0..l).collect()
            } else {
                let mut rows: Vec<usize> = (0..l - 1).collect();
                rows.push(p);
                rows
            }
        }
    };
    Ok(rows.into_iter().map(|r| r as u32).collect())
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() || betas.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidParams("betas must be finite and non-empty".into()));
    }
    for (i, a) in betas.iter().enumerate() {
        if betas[i + 1..].contains(a) {
            return Err(Error::InvalidParams(format!("betas must be distinct, {a} repeats")));
        }
    }
    Ok(())
}

struct Solved {
    coefficients: Vec<f64>,
    condition: f64,
    residual: f64,
}

fn vandermonde(betas: &[f64], exponents: &[u32]) -> Vec<f64> {
    exponents
        .iter()
        .flat_map(|&r| betas.iter().map(move |b| b.powi(r as i32)))
        .collect()
}

/// Solves `sum_l C_l beta_l^r = rhs_r`; `None` when singular or ill-conditioned.
fn solve_system(betas: &[f64], exponents: &[u32], rhs: &[f64]) -> Option<Solved> {
    let n = betas.len();
    let a = vandermonde(betas, exponents);
    let lu = Lu::factor(&a, n)?;
    let condition = norm1(&a, n) * lu.inverse_norm1();
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return None;
    }
    let mut c = lu.solve(rhs);
    // two rounds of iterative refinement
    for _ in 0..2 {
        let ac = matvec(&a, n, &c);
        let r: Vec<f64> = rhs.iter().zip(&ac).map(|(b, x)| b - x).collect();
        let dc = lu.solve(&r);
        c.iter_mut().zip(dc).for_each(|(ci, di)| *ci += di);
    }
    let residual = matvec(&a, n, &c)
        .iter()
        .zip(rhs)
        .map(|(x, b)| (x - b).abs())
        .fold(0.0, f64::max);
    Some(Solved {
        coefficients: c,
        condition,
        residual,
    })
}

fn delta_rhs(exponents: &[u32], p: usize) -> Vec<f64> {
    exponents
        .iter()
        .map(|&r| if r as usize == p { 1.0 } else { 0.0 })
        .collect()
}

/// Coefficients of one order under a fixed scheme.
pub fn solve_row(betas: &[f64], p: usize, r_star: usize, scheme: Scheme) -> Result<CoefficientRow> {
    check_betas(betas)?;
    let exponents = constraint_rows(p, betas.len(), r_star, scheme)?;
    let solved = solve_system(betas, &exponents, &delta_rhs(&exponents, p))
        .ok_or(Error::Unsolvable { p })?;
    Ok(CoefficientRow {
        p,
        scheme: match scheme {
            Scheme::TruncationOptimal => RowScheme::TruncationOptimal,
            Scheme::Baseline => RowScheme::BaselineFallback,
        },
        exponents,
        coefficients: solved.coefficients,
        condition: solved.condition,
        residual: solved.residual,
        note: None,
    })
}

/// Solves every order `p = 1..=d0`, falling back per row to the baseline scheme.
///
/// When `L < r* + 2` the truncation-optimal scheme does not exist and every row
/// uses the baseline scheme.
pub fn solve_coefficients(betas: &[f64], d0: usize, r_star: usize) -> Result<CoefficientPlan> {
    check_betas(betas)?;
    if d0 == 0 {
        return Err(Error::InvalidParams("d0 must be >= 1".into()));
    }
    if r_star >= d0 {
        return Err(Error::InvalidRStar {
            r_star,
            limit: d0 - 1,
        });
    }
    let l = betas.len();
    let mut rows = Vec::with_capacity(d0);
    for p in 1..=d0 {
        let optimal = if l >= r_star + 2 {
            solve_row(betas, p, r_star, Scheme::TruncationOptimal)
        } else {
            Err(Error::InvalidRStar {
                r_star,
                limit: l.saturating_sub(2),
            })
        };
        let row = match optimal {
            Ok(row) => row,
            Err(cause) => {
                let exponents = constraint_rows(p, l, r_star, Scheme::TruncationOptimal).ok();
                let mut row = solve_row(betas, p, r_star, Scheme::Baseline)?;
                let note = match (exponents, cause) {
                    (Some(e), _) => format!(
                        "truncation-optimal exponents {e:?} singular or ill-conditioned for betas {betas:?}; baseline exponents {:?} used",
                        row.exponents
                    ),
                    (None, cause) => format!("truncation-optimal scheme unavailable ({cause}); baseline used"),
                };
                log::info!("p = {p}: {note}");
                row.note = Some(note);
                row
            }
        };
        rows.push(row);
    }
    Ok(CoefficientPlan {
        l,
        betas: betas.to_vec(),
        r_star,
        d0,
        rows,
    })
}

/// Weights `w` with `sum w_l = 1` and `sum w_l beta_l^r = 0` for `r = 1..L-1`.
pub fn mean_weights(betas: &[f64]) -> Result<Vec<f64>> {
    check_betas(betas)?;
    let exponents: Vec<u32> = (0..betas.len() as u32).collect();
    let mut rhs = vec![0.0; betas.len()];
    rhs[0] = 1.0;
    let n = betas.len();
    let a = vandermonde(betas, &exponents);
    let lu = Lu::factor(&a, n).ok_or(Error::Unsolvable { p: 0 })?;
    let mut w = lu.solve(&rhs);
    let ac = matvec(&a, n, &w);
    let r: Vec<f64> = rhs.iter().zip(&ac).map(|(b, x)| b - x).collect();
    lu.solve(&r).iter().zip(w.iter_mut()).for_each(|(d, wi)| *wi += d);
    Ok(w)
}

/// `Gamma_r = sum_l |C_l^(p) beta_l^r|`.
pub fn gamma_r(plan: &CoefficientPlan, p: usize, r: u32) -> Result<f64> {
    if p == 0 || p > plan.d0 {
        return Err(Error::InvalidParams(format!(
            "order p = {p} outside 1..={}",
            plan.d0
        )));
    }
    Ok(plan
        .coefficients(p)
        .iter()
        .zip(&plan.betas)
        .map(|(c, b)| (c * b.powi(r as i32)).abs())
        .sum())
}
