//! Backstepping kernels and output-injection gains.
//!
//! Two gain families are provided. [`GainVariant::Published`] is the
//! closed form built from the kernel `K(x) = -c(-lambda2 (L - x) / (lambda1 - lambda2)) / (lambda1 - lambda2)`
//! with `r = lambda1 K` and `s = -lambda1 M(lambda1 x - lambda2 L)`.
//!
//! [`GainVariant::Exact`] solves the observer kernel equations without
//! truncation. Writing the error as `w_err = alpha + int_x^L P alpha`,
//! `v_err = beta + int_x^L Q alpha`, the kernels must satisfy
//!
//! ```text
//! P_x + P_xi = 0
//! lambda1 Q_xi + lambda2 Q_x = c(x) P
//! Q(x, x) = c(x) / (lambda1 - lambda2)
//! P(0, xi) = (lambda2 / lambda1) Q(0, xi)
//! ```
//!
//! For the exponential coupling `c(x)` this has the closed-form solution
//! `P = -lambda2 / (lambda1 (lambda1 - lambda2) tau)` and
//! `Q(x, xi) = c(x) / (lambda1 - lambda2)`, giving `r = lambda1 P(x, L)` and
//! `s = lambda1 Q(x, L)`. With these gains the linear error system reaches
//! zero at `t_f`; the published gains leave a residual.

use std::io::Write;
use std::path::Path;

use crate::error::{ArzError, Result};
use crate::grid::Grid;
use crate::model::{ModelParameters, SteadyState};
use crate::transforms::coupling_c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainVariant {
    Published,
    #[default]
    Exact,
}

impl GainVariant {
    pub fn name(&self) -> &'static str {
        match self {
            GainVariant::Published => "published",
            GainVariant::Exact => "exact",
        }
    }
}

impl std::str::FromStr for GainVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "published" => Ok(GainVariant::Published),
            "exact" => Ok(GainVariant::Exact),
            other => Err(format!("unknown gain variant `{other}` (expected `published` or `exact`)")),
        }
    }
}

fn gap(ss: &SteadyState) -> f64 {
    ss.lambda1 - ss.lambda2
}

fn check_position(p: &ModelParameters, x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=p.length()).contains(&x) {
        Ok(())
    } else {
        Err(ArzError::Domain(format!("position {x} outside [0, {}] m", p.length())))
    }
}

/// Published kernel `K(x)`.
pub fn kernel_k(ss: &SteadyState, p: &ModelParameters, x: f64) -> Result<f64> {
    check_position(p, x)?;
    let a = gap(ss);
    Ok(-1.0 / a * coupling_c(ss, p, -ss.lambda2 / a * (p.length() - x)))
}

/// Published kernel `M(arg) = -c(arg / (lambda1 - lambda2)) / (lambda1 - lambda2)`.
pub fn kernel_m(ss: &SteadyState, p: &ModelParameters, arg: f64) -> f64 {
    let a = gap(ss);
    -1.0 / a * coupling_c(ss, p, arg / a)
}

/// Published `r(x) = lambda1 K(x)`.
pub fn gain_r(ss: &SteadyState, p: &ModelParameters, x: f64) -> Result<f64> {
    Ok(ss.lambda1 * kernel_k(ss, p, x)?)
}

/// Published `s(x) = lambda1 / (lambda1 - lambda2) c(x - lambda2 (L - x) / (lambda1 - lambda2))`.
pub fn gain_s(ss: &SteadyState, p: &ModelParameters, x: f64) -> Result<f64> {
    check_position(p, x)?;
    let a = gap(ss);
    Ok(ss.lambda1 / a * coupling_c(ss, p, x - ss.lambda2 / a * (p.length() - x)))
}

/// The same `s(x)` through the kernel route `-lambda1 M(lambda1 x - lambda2 L)`.
pub fn gain_s_from_kernel(ss: &SteadyState, p: &ModelParameters, x: f64) -> Result<f64> {
    check_position(p, x)?;
    Ok(-ss.lambda1 * kernel_m(ss, p, ss.lambda1 * x - ss.lambda2 * p.length()))
}

/// Exact kernel `P`, constant over the triangle `0 <= x <= xi <= L`.
pub fn exact_kernel_p(ss: &SteadyState, p: &ModelParameters) -> f64 {
    -ss.lambda2 / (ss.lambda1 * gap(ss) * p.tau())
}

/// Exact kernel `Q(x, xi) = c(x) / (lambda1 - lambda2)`, independent of `xi`.
pub fn exact_kernel_q(ss: &SteadyState, p: &ModelParameters, x: f64, _xi: f64) -> f64 {
    coupling_c(ss, p, x) / gap(ss)
}

pub fn exact_gain_r(ss: &SteadyState, p: &ModelParameters, x: f64) -> Result<f64> {
    check_position(p, x)?;
    Ok(ss.lambda1 * exact_kernel_p(ss, p))
}

pub fn exact_gain_s(ss: &SteadyState, p: &ModelParameters, x: f64) -> Result<f64> {
    check_position(p, x)?;
    Ok(ss.lambda1 * exact_kernel_q(ss, p, x, p.length()))
}

/// `t_f = L / |lambda1| + L / |lambda2|`.
pub fn finite_convergence_time(ss: &SteadyState, p: &ModelParameters) -> Result<f64> {
    if ss.lambda2 == 0.0 || ss.lambda1 == 0.0 {
        return Err(ArzError::Domain("finite convergence time undefined at a zero characteristic speed".into()));
    }
    Ok(p.length() / ss.lambda1.abs() + p.length() / ss.lambda2.abs())
}

/// Gains sampled at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    pub variant: GainVariant,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// `K(x)` for the published family, `P(x, L)` for the exact one.
    pub kernel_k: Vec<f64>,
    pub t_f: f64,
}

pub fn build_gain_table(ss: &SteadyState, p: &ModelParameters, grid: &Grid, variant: GainVariant) -> Result<GainTable> {
    ss.require_congested()?;
    let x = grid.cell_centers();
    let n = x.len();
    let (mut r, mut s, mut k) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &xi in &x {
        match variant {
            GainVariant::Published => {
                r.push(gain_r(ss, p, xi)?);
                s.push(gain_s(ss, p, xi)?);
                k.push(kernel_k(ss, p, xi)?);
            }
            GainVariant::Exact => {
                r.push(exact_gain_r(ss, p, xi)?);
                s.push(exact_gain_s(ss, p, xi)?);
                k.push(exact_kernel_p(ss, p));
            }
        }
    }
    Ok(GainTable { variant, x, r, s, kernel_k: k, t_f: finite_convergence_time(ss, p)? })
}

impl GainTable {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| ArzError::Data(format!("failed to write gain table: {e}"));
        w.write_record(["x", "r", "s", "K"]).map_err(io)?;
        for i in 0..self.len() {
            w.write_record([
                crate::harness::fmt_f64(self.x[i]),
                crate::harness::fmt_f64(self.r[i]),
                crate::harness::fmt_f64(self.s[i]),
                crate::harness::fmt_f64(self.kernel_k[i]),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| ArzError::Data(format!("failed to write gain table: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| ArzError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
