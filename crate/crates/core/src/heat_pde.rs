//! One-dimensional heat equation on `[0, 1]` with a random initial condition.
//!
//! Crank–Nicolson on `d` interior nodes `x_j = j / (d + 1)` with Dirichlet
//! boundaries. The quantity of interest is `J = 1/2 ∫∫ u^2 dx dt` by the
//! trapezoidal rule in space and time. Its gradient with respect to the initial
//! interior values is the exact adjoint of the discrete scheme.

use crate::db_anova::DerivativeModel;
use crate::distributions::Marginal;
use crate::{Error, Result, Subset};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeConfig {
    /// Interior nodes.
    pub d: usize,
    pub diffusion: f64,
    pub dt: f64,
    pub horizon: f64,
    pub left: f64,
    pub right: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            d: 50,
            diffusion: 0.0011,
            dt: 0.025,
            horizon: 5.0,
            left: 0.0,
            right: 1.0,
        }
    }
}

impl PdeConfig {
    pub fn with_d(d: usize) -> Self {
        Self {
            d,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.d < 3 {
            return bad(format!("PDE needs d >= 3 interior nodes, got {}", self.d));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return bad(format!("diffusion must be >= 0, got {}", self.diffusion));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        let steps = (self.horizon / self.dt).round();
        if (steps * self.dt - self.horizon).abs() > 1e-12 * self.horizon.max(1.0) {
            return bad(format!(
                "horizon {} is not a multiple of dt {}",
                self.horizon, self.dt
            ));
        }
        if !(self.left.is_finite() && self.right.is_finite()) {
            return bad("boundary values must be finite".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.d + 1) as f64
    }

    /// Diffusion number `D dt / dx^2`.
    pub fn diffusion_number(&self) -> f64 {
        self.diffusion * self.dt / self.dx().powi(2)
    }

    /// Interior node positions.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.d).map(|j| j as f64 * self.dx()).collect()
    }
}

/// Space-time solution including boundary nodes, row-major `(steps + 1) x (d + 2)`.
#[derive(Clone, Debug)]
pub struct Field {
    pub d: usize,
    pub steps: usize,
    pub dt: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * (self.d + 2)..(n + 1) * (self.d + 2)]
    }

    pub fn interior(&self, n: usize) -> &[f64] {
        &self.row(n)[1..=self.d]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 0..self.d + 2 {
            let _ = write!(out, ",{}", j as f64 * self.dx);
        }
        out.push('\n');
        for n in 0..=self.steps {
            let _ = write!(out, "{}", n as f64 * self.dt);
            for v in self.row(n) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Thomas factorization of the constant matrix `tridiag(-r/2, 1 + r, -r/2)`.
struct Implicit {
    off: f64,
    /// Modified super-diagonal and inverse pivots.
    cprime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Implicit {
    fn new(d: usize, r: f64) -> Self {
        let (diag, off) = (1.0 + r, -0.5 * r);
        let mut cprime = vec![0.0; d];
        let mut inv_pivot = vec![0.0; d];
        let mut prev = 0.0;
        for j in 0..d {
            let pivot = diag - off * prev;
            inv_pivot[j] = 1.0 / pivot;
            cprime[j] = off / pivot;
            prev = cprime[j];
        }
        Self {
            off,
            cprime,
            inv_pivot,
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let d = b.len();
        b[0] *= self.inv_pivot[0];
        for j in 1..d {
            b[j] = (b[j] - self.off * b[j - 1]) * self.inv_pivot[j];
        }
        for j in (0..d - 1).rev() {
            b[j] -= self.cprime[j] * b[j + 1];
        }
    }
}

/// `out = (I + r/2 L) u` with zero padding.
fn apply_explicit(u: &[f64], r: f64, out: &mut [f64]) {
    let d = u.len();
    for j in 0..d {
        let left = if j > 0 { u[j - 1] } else { 0.0 };
        let right = if j + 1 < d { u[j + 1] } else { 0.0 };
        out[j] = u[j] + 0.5 * r * (left - 2.0 * u[j] + right);
    }
}

fn check_z(z: &[f64], cfg: &PdeConfig) -> Result<()> {
    cfg.validate()?;
    if z.len() != cfg.d {
        return Err(Error::LengthMismatch {
            expected: cfg.d,
            found: z.len(),
        });
    }
    if let Some(j) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: j });
    }
    Ok(())
}

pub fn solve_forward(z: &[f64], cfg: &PdeConfig) -> Result<Field> {
    check_z(z, cfg)?;
    let (d, steps, r) = (cfg.d, cfg.steps(), cfg.diffusion_number());
    let implicit = Implicit::new(d, r);
    let mut values = Vec::with_capacity((steps + 1) * (d + 2));
    let mut u = z.to_vec();
    let mut next = vec![0.0; d];
    for n in 0..=steps {
        values.push(cfg.left);
        values.extend_from_slice(&u);
        values.push(cfg.right);
        if n == steps {
            break;
        }
        apply_explicit(&u, r, &mut next);
        // boundary contributions of both time levels
        next[0] += r * cfg.left;
        next[d - 1] += r * cfg.right;
        implicit.solve_in_place(&mut next);
        std::mem::swap(&mut u, &mut next);
    }
    Ok(Field {
        d,
        steps,
        dt: cfg.dt,
        dx: cfg.dx(),
        values,
    })
}

fn time_weight(n: usize, steps: usize, dt: f64) -> f64 {
    if n == 0 || n == steps {
        0.5 * dt
    } else {
        dt
    }
}

pub fn qoi(field: &Field) -> f64 {
    let d = field.d;
    let mut total = 0.0;
    for n in 0..=field.steps {
        let row = field.row(n);
        let inner: f64 = row[1..=d].iter().map(|v| v * v).sum::<f64>() * field.dx
            + 0.5 * field.dx * (row[0] * row[0] + row[d + 1] * row[d + 1]);
        total += time_weight(n, field.steps, field.dt) * inner;
    }
    0.5 * total
}

/// `dJ/dZ` by the adjoint of the discrete scheme.
pub fn gradient(z: &[f64], cfg: &PdeConfig) -> Result<Vec<f64>> {
    let field = solve_forward(z, cfg)?;
    Ok(adjoint(&field, cfg))
}

fn adjoint(field: &Field, cfg: &PdeConfig) -> Vec<f64> {
    let (d, steps, r, dx) = (cfg.d, field.steps, cfg.diffusion_number(), field.dx);
    let implicit = Implicit::new(d, r);
    // mu^N = s^N; mu^n = s^n + B A^{-1} mu^{n+1}; both matrices are symmetric and commute
    let mut mu: Vec<f64> = field
        .interior(steps)
        .iter()
        .map(|u| time_weight(steps, steps, field.dt) * dx * u)
        .collect();
    let mut tmp = vec![0.0; d];
    for n in (0..steps).rev() {
        implicit.solve_in_place(&mut mu);
        apply_explicit(&mu, r, &mut tmp);
        let w = time_weight(n, steps, field.dt) * dx;
        for ((m, t), u) in mu.iter_mut().zip(&tmp).zip(field.interior(n)) {
            *m = t + w * u;
        }
    }
    mu
}

/// `U(sin(2 pi x_j) - 1.96, sin(2 pi x_j) + 1.96)` at each interior node.
pub fn pde_input_marginals(cfg: &PdeConfig) -> Vec<Marginal> {
    cfg.nodes()
        .into_iter()
        .map(|x| {
            let c = (2.0 * PI * x).sin();
            Marginal::Uniform {
                lower: c - 1.96,
                upper: c + 1.96,
            }
        })
        .collect()
}

/// The QoI as a function of the initial interior values.
///
/// `J` is quadratic in `Z`, so second cross-partials are differences of
/// gradients and all higher ones vanish.
#[derive(Clone, Debug)]
pub struct HeatModel {
    pub config: PdeConfig,
}

impl HeatModel {
    pub fn new(config: PdeConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }
}

impl DerivativeModel for HeatModel {
    fn dim(&self) -> usize {
        self.config.d
    }

    fn max_order(&self) -> usize {
        self.config.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        solve_forward(x, &self.config).map_or(f64::NAN, |f| qoi(&f))
    }

    fn derivative(&self, v: &Subset, x: &[f64]) -> Result<f64> {
        match v.indices() {
            [] => Ok(self.value(x)),
            [j] => Ok(gradient(x, &self.config)?[*j]),
            [j, k] => {
                let mut shifted = x.to_vec();
                shifted[*k] += 1.0;
                Ok(gradient(&shifted, &self.config)?[*j] - gradient(x, &self.config)?[*j])
            }
            _ => Ok(0.0),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&gradient(x, &self.config)?);
        Ok(())
    }

    fn derivatives(&self, components: &[Subset], x: &[f64]) -> Result<Vec<f64>> {
        let field = solve_forward(x, &self.config)?;
        let value = qoi(&field);
        let grad = adjoint(&field, &self.config);
        components
            .iter()
            .map(|v| match v.indices() {
                [] => Ok(value),
                [j] => Ok(grad[*j]),
                _ => self.derivative(v, x),
            })
            .collect()
    }
}
