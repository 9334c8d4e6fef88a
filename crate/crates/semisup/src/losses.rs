use ndcore::{bce_logit_term, Tape, Tensor, Var};

use crate::config::{LossKind, Task};
use crate::error::Result;

/// Smoothing inside the square root of the RMSE loss.
pub const RMSE_EPS: f64 = 1e-12;

/// `H_f` for one prediction, the value fed to the instructor.
pub fn per_sample_loss(task: Task, kind: LossKind, output: f64, y: f64) -> f64 {
    match (task, kind) {
        (Task::Classification, _) => bce_logit_term(output, y),
        (Task::Regression, LossKind::Mse) => (output - y) * (output - y),
        (Task::Regression, LossKind::Rmse | LossKind::Mae) => (output - y).abs(),
    }
}

/// `H_f` over a batch of outputs (`n x 1`) as a tape scalar.
pub fn batch_loss(tape: &mut Tape, task: Task, kind: LossKind, pred: Var, y: &[f64]) -> Result<Var> {
    if task == Task::Classification {
        return Ok(tape.bce_with_logits(pred, y, None)?);
    }
    let t = tape.constant(Tensor::column(y));
    Ok(match kind {
        LossKind::Mse => tape.mse(pred, t)?,
        LossKind::Rmse => tape.rmse(pred, t, RMSE_EPS)?,
        LossKind::Mae => tape.mae(pred, t)?,
    })
}

/// Target loss of one minibatch of `D''`: `H_f` over the labeled rows plus
/// `lambda` times `H_f` over the pseudo rows. A part with no rows is left
/// out rather than counted as zero.
pub fn target_loss(
    tape: &mut Tape,
    task: Task,
    kind: LossKind,
    pred: Var,
    y: &[f64],
    is_pseudo: &[bool],
    lambda: f64,
) -> Result<Var> {
    let (pseudo, labeled): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| is_pseudo[i]);
    let part = |tape: &mut Tape, rows: &[usize]| -> Result<Var> {
        if rows.len() == y.len() {
            return batch_loss(tape, task, kind, pred, y);
        }
        let sub = tape.gather_rows(pred, rows);
        let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        batch_loss(tape, task, kind, sub, &ys)
    };
    let labeled_loss = if labeled.is_empty() {
        None
    } else {
        Some(part(tape, &labeled)?)
    };
    let pseudo_loss = if pseudo.is_empty() {
        None
    } else {
        let l = part(tape, &pseudo)?;
        Some(tape.scale(l, lambda))
    };
    Ok(match (labeled_loss, pseudo_loss) {
        (Some(a), Some(b)) => tape.add(a, b)?,
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => tape.constant(Tensor::scalar(0.0)),
    })
}

/// BCE weights `(w_observed, w_pseudo)` giving both classes equal total
/// weight with mean 1 over `D'`.
pub fn class_weights(n_observed: usize, n_pseudo: usize) -> (f64, f64) {
    let total = (n_observed + n_pseudo) as f64;
    let w1 = if n_observed == 0 {
        0.0
    } else if n_pseudo == 0 {
        1.0
    } else {
        total / (2.0 * n_observed as f64)
    };
    let w0 = if n_pseudo == 0 {
        0.0
    } else if n_observed == 0 {
        1.0
    } else {
        total / (2.0 * n_pseudo as f64)
    };
    (w1, w0)
}

/// Weighted BCE of instructor logits against the observability mask.
pub fn instructor_loss(tape: &mut Tape, logits: Var, c: &[f64], weights: &[f64]) -> Result<Var> {
    Ok(tape.bce_with_logits(logits, c, Some(weights))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_weights_balance_and_average_to_one() {
        for (n, m) in [(100, 5000), (3, 7), (10, 10)] {
            let (w1, w0) = class_weights(n, m);
            assert!((w1 * n as f64 - w0 * m as f64).abs() < 1e-9);
            assert!(((w1 * n as f64 + w0 * m as f64) / (n + m) as f64 - 1.0).abs() < 1e-12);
        }
        assert_eq!(class_weights(5, 0), (1.0, 0.0));
    }

    #[test]
    fn uninformative_instructor_costs_ln2() {
        let (w1, w0) = class_weights(3, 9);
        let c: Vec<f64> = (0..12).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect();
        let w: Vec<f64> = c.iter().map(|&c| if c == 1.0 { w1 } else { w0 }).collect();
        let mut tape = Tape::eval();
        let z = tape.constant(Tensor::zeros(12, 1));
        let l = instructor_loss(&mut tape, z, &c, &w).unwrap();
        assert!((tape.value(l).item() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn separating_instructor_costs_nothing() {
        let c = [1.0, 0.0, 1.0];
        let mut tape = Tape::eval();
        let z = tape.constant(Tensor::column(&[40.0, -40.0, 40.0]));
        let l = instructor_loss(&mut tape, z, &c, &[1.0; 3]).unwrap();
        assert!(tape.value(l).item() <= 1e-6);
    }

    #[test]
    fn target_loss_parts() {
        let y = [1.0, 2.0, 3.0, 5.0];
        let pseudo = [false, true, false, true];
        let mut tape = Tape::eval();
        let pred = tape.constant(Tensor::column(&[1.0, 2.0, 3.0, 4.0]));
        let l = target_loss(&mut tape, Task::Regression, LossKind::Mse, pred, &y, &pseudo, 0.5).unwrap();
        assert_eq!(tape.value(l).item(), 0.5 * 0.5);
        let exact = target_loss(
            &mut tape,
            Task::Regression,
            LossKind::Mae,
            pred,
            &[1.0, 2.0, 3.0, 4.0],
            &pseudo,
            2.0,
        )
        .unwrap();
        assert_eq!(tape.value(exact).item(), 0.0);
        let sup = target_loss(&mut tape, Task::Regression, LossKind::Mse, pred, &y, &[false; 4], 3.0).unwrap();
        assert_eq!(tape.value(sup).item(), 0.25);
    }
}
