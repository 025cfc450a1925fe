//! Kernel terms and elementary symmetric polynomials.
//!
//! `E_k = (G_k(x'_k) - 1[x'_k >= x_k]) / g_k(x'_k)` is the integration weight of
//! the derivative-based expansion; `R_k = E_k v_k / (h_k sigma^2)` is its
//! derivative-free counterpart. Sums of products of `R_k` over all subsets of a
//! given size are elementary symmetric polynomials, evaluated here by the
//! one-element-at-a-time recursion.

use crate::distributions::Marginal;
use crate::{Error, Result};

/// Largest input accepted by [`esp_bruteforce`].
pub const BRUTEFORCE_MAX: usize = 20;

pub fn kernel_e(g: &Marginal, x: f64, xprime: f64) -> Result<f64> {
    let density = g.pdf(xprime);
    if density <= 0.0 {
        return Err(Error::ZeroDensity { at: xprime });
    }
    Ok(kernel_e_parts(g.cdf(xprime), density, x, xprime))
}

/// `E_k` from a precomputed CDF value and density at `x'`.
#[inline]
pub(crate) fn kernel_e_parts(cdf: f64, density: f64, x: f64, xprime: f64) -> f64 {
    let indicator = if xprime >= x { 1.0 } else { 0.0 };
    (cdf - indicator) / density
}

pub fn kernel_r(x: f64, xprime: f64, v: f64, h: f64, sigma2: f64, g: &Marginal) -> Result<f64> {
    if !(h > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidParams(format!(
            "kernel_r needs h > 0 and sigma2 > 0, got h = {h}, sigma2 = {sigma2}"
        )));
    }
    Ok(kernel_e(g, x, xprime)? * v / (h * sigma2))
}

/// `e_0 ..= e_pmax` of `r`.
pub fn esp_all(r: &[f64], pmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; pmax + 1];
    esp_into(r.iter().copied(), &mut e);
    e
}

/// Overwrites `e` with `e_0 ..= e_{e.len()-1}` of the values yielded by `r`.
#[inline]
pub fn esp_into(r: impl IntoIterator<Item = f64>, e: &mut [f64]) {
    if e.is_empty() {
        return;
    }
    e.fill(0.0);
    e[0] = 1.0;
    let pmax = e.len() - 1;
    for (seen, rk) in r.into_iter().enumerate() {
        // orders above `seen + 1` are still zero
        let top = pmax.min(seen + 1);
        for p in (1..=top).rev() {
            e[p] += rk * e[p - 1];
        }
    }
}

/// Explicit sum over all size-`p` subsets; test oracle for [`esp_all`].
pub fn esp_bruteforce(r: &[f64], p: usize) -> Result<f64> {
    if r.len() > BRUTEFORCE_MAX {
        return Err(Error::SizeLimit {
            len: r.len(),
            max: BRUTEFORCE_MAX,
        });
    }
    if p > r.len() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for mask in 0u32..(1u32 << r.len()) {
        if mask.count_ones() as usize != p {
            continue;
        }
        let mut prod = 1.0;
        for (k, rk) in r.iter().enumerate() {
            if mask >> k & 1 == 1 {
                prod *= rk;
            }
        }
        total += prod;
    }
    Ok(total)
}
