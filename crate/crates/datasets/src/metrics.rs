use crate::error::MetricError;

fn check(pred: &[f64], target: &[f64]) -> Result<(), MetricError> {
    if pred.len() != target.len() {
        return Err(MetricError::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    check(pred, target)?;
    let sse: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    check(pred, target)?;
    let sae: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum();
    Ok(sae / pred.len() as f64)
}

fn flagged(values: &[f64], flags: &[bool]) -> Vec<f64> {
    values.iter().zip(flags).filter(|(_, &f)| f).map(|(&v, _)| v).collect()
}

fn stratum(pred: &[f64], target: &[f64], flags: &[bool]) -> Result<(Vec<f64>, Vec<f64>), MetricError> {
    check(pred, target)?;
    if flags.len() != pred.len() {
        return Err(MetricError::LengthMismatch(flags.len(), pred.len()));
    }
    let p = flagged(pred, flags);
    if p.is_empty() {
        return Err(MetricError::EmptyStratum);
    }
    Ok((p, flagged(target, flags)))
}

/// RMSE over the cliff-flagged samples only.
pub fn cliff_rmse(pred: &[f64], target: &[f64], flags: &[bool]) -> Result<f64, MetricError> {
    let (p, t) = stratum(pred, target, flags)?;
    rmse(&p, &t)
}

pub fn cliff_mae(pred: &[f64], target: &[f64], flags: &[bool]) -> Result<f64, MetricError> {
    let (p, t) = stratum(pred, target, flags)?;
    mae(&p, &t)
}

/// Mann-Whitney ROC-AUC with midranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean
        let midrank = (start + 1 + end) as f64 / 2.0;
        let pos_in_tie = order[start..end].iter().filter(|&&i| labels[i]).count();
        rank_sum_pos += midrank * pos_in_tie as f64;
        start = end;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

pub fn cliff_roc_auc(scores: &[f64], labels: &[bool], flags: &[bool]) -> Result<f64, MetricError> {
    if flags.len() != scores.len() || labels.len() != scores.len() {
        return Err(MetricError::LengthMismatch(flags.len(), scores.len()));
    }
    let s: Vec<f64> = flagged(scores, flags);
    if s.is_empty() {
        return Err(MetricError::EmptyStratum);
    }
    let l: Vec<bool> = labels.iter().zip(flags).filter(|(_, &f)| f).map(|(&l, _)| l).collect();
    roc_auc(&s, &l)
}
