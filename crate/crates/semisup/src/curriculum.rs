use serde::{Deserialize, Serialize};

/// State of the self-adaptive threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub gamma: f64,
    pub delta_gamma: f64,
    pub gamma_min: f64,
    pub k: usize,
    /// Previous (normalized) validation score.
    pub s_prev: Option<f64>,
    pub epoch: usize,
}

impl CurriculumState {
    pub fn new(gamma: f64, delta_gamma: f64, gamma_min: f64, k: usize) -> Self {
        CurriculumState {
            gamma,
            delta_gamma,
            gamma_min,
            k,
            s_prev: None,
            epoch: 0,
        }
    }
}

/// Lowers `gamma` by `delta_gamma` (down to `gamma_min`) when the validation
/// score improved on the previous epoch. Scores are compared after
/// normalizing so that smaller is better.
pub fn curriculum_step(state: CurriculumState, s: f64, lower_is_better: bool) -> CurriculumState {
    let s = if lower_is_better { s } else { -s };
    let mut next = state;
    if let Some(prev) = state.s_prev {
        if state.epoch > 0 && s < prev {
            next.gamma = (state.gamma - state.delta_gamma).max(state.gamma_min);
        }
    }
    next.s_prev = Some(s);
    next.epoch = state.epoch + 1;
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreases_only_on_strict_improvement() {
        let mut st = CurriculumState::new(0.9, 0.05, 0.0, 5);
        st.s_prev = Some(0.85);
        st.epoch = 3;
        assert_eq!(curriculum_step(st, 0.80, true).gamma, 0.9 - 0.05);
        assert_eq!(curriculum_step(st, 0.88, true).gamma, 0.9);
        assert_eq!(curriculum_step(st, 0.85, true).gamma, 0.9);
    }

    #[test]
    fn first_epoch_only_records_the_score() {
        let st = curriculum_step(CurriculumState::new(0.9, 0.05, 0.0, 5), 0.1, true);
        assert_eq!(st.gamma, 0.9);
        assert_eq!(st.s_prev, Some(0.1));
        assert_eq!(st.epoch, 1);
    }

    #[test]
    fn clamps_at_the_floor() {
        let mut st = CurriculumState::new(0.02, 0.05, 0.0, 5);
        st.s_prev = Some(1.0);
        st.epoch = 1;
        assert_eq!(curriculum_step(st, 0.5, true).gamma, 0.0);
    }

    #[test]
    fn higher_is_better_metrics_are_negated() {
        let mut st = CurriculumState::new(0.9, 0.1, 0.0, 5);
        st = curriculum_step(st, 0.70, false);
        st = curriculum_step(st, 0.75, false);
        assert_eq!(st.gamma, 0.9 - 0.1);
        assert_eq!(st.s_prev, Some(-0.75));
    }
}
