//! Finite-difference gradient checks for functions built on a [`Tape`].

use crate::error::Result;
use crate::params::{BoundParams, ParamStore};
use crate::tape::{Tape, Var};

/// Outcome of [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    /// Tape gradient per flattened parameter.
    pub analytic: Vec<f64>,
    /// Central difference per flattened parameter.
    pub numeric: Vec<f64>,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }

    /// `||analytic - numeric|| / max(||analytic||, ||numeric||)` in the
    /// Euclidean norm. Unlike the componentwise ratio it is not dominated by
    /// difference noise on near-zero components.
    pub fn normwise_rel_error(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = self.analytic.iter().zip(&self.numeric).map(|(a, n)| a - n).collect();
        let scale = norm(&self.analytic).max(norm(&self.numeric));
        if scale == 0.0 {
            return 0.0;
        }
        norm(&diff) / scale
    }
}

/// Compares tape gradients with central differences of step `h`.
///
/// `f` builds a scalar loss on a fresh eval-mode tape from bound
/// parameters. It must be deterministic.
pub fn grad_check<F>(f: F, params: &ParamStore, h: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &BoundParams) -> Result<Var>,
{
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::eval();
        let bound = store.bind(&mut tape);
        let loss = f(&mut tape, &bound)?;
        Ok(tape.value(loss).item())
    };

    let mut tape = Tape::eval();
    let bound = params.bind(&mut tape);
    let loss = f(&mut tape, &bound)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<f64> = bound.collect(&grads).into_iter().flat_map(|t| t.into_data()).collect();

    let base = params.flatten();
    let mut work = params.clone();
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut numerics = Vec::with_capacity(analytic.len());
    for (i, &a) in analytic.iter().enumerate() {
        let mut shifted = base.clone();
        shifted[i] = base[i] + h;
        work.load_flat(&shifted);
        let up = eval(&work)?;
        shifted[i] = base[i] - h;
        work.load_flat(&shifted);
        let down = eval(&work)?;
        let numeric = (up - down) / (2.0 * h);
        let abs = (a - numeric).abs();
        let rel = abs / a.abs().max(numeric.abs()).max(1e-8);
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(rel);
        numerics.push(numeric);
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        max_abs_error: max_abs,
        checked: analytic.len(),
        analytic,
        numeric: numerics,
    })
}
