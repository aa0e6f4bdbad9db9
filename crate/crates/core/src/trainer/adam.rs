use serde::{Deserialize, Serialize};

/// Adam with bias-corrected moments. Optional weight decay is decoupled
/// from the moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    state: AdamState,
}

/// Moment estimates and update count, saved with training checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            state: AdamState {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    pub fn set_state(&mut self, state: AdamState) -> Result<(), String> {
        if state.m.len() != self.state.m.len() || state.v.len() != self.state.v.len() {
            return Err(format!(
                "optimizer state holds {} moments, model has {} parameters",
                state.m.len(),
                self.state.m.len()
            ));
        }
        self.state = state;
        Ok(())
    }

    /// One update of the parameter blocks, laid out contiguously in `grad`.
    pub fn update<const N: usize>(&mut self, blocks: [&mut [f64]; N], grad: &[f64], lr: f64, weight_decay: f64) {
        let s = &mut self.state;
        s.t += 1;
        let c1 = 1.0 - self.beta1.powf(s.t as f64);
        let c2 = 1.0 - self.beta2.powf(s.t as f64);
        let mut i = 0;
        for block in blocks {
            for p in block.iter_mut() {
                let g = grad[i];
                s.m[i] = self.beta1 * s.m[i] + (1.0 - self.beta1) * g;
                s.v[i] = self.beta2 * s.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = s.m[i] / c1;
                let v_hat = s.v[i] / c2;
                *p -= lr * (m_hat / (v_hat.sqrt() + self.eps) + weight_decay * *p);
                i += 1;
            }
        }
        debug_assert_eq!(i, grad.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction the first update is lr * g / (|g| + eps).
        let mut adam = Adam::new(2, 0.9, 0.999, 1e-8);
        let mut p = [1.0, -2.0];
        adam.update([&mut p[..]], &[0.5, -3.0], 0.1, 0.0);
        assert!((p[0] - (1.0 - 0.1 * 0.5 / (0.5 + 1e-8))).abs() < 1e-15);
        assert!((p[1] - (-2.0 + 0.1 * 3.0 / (3.0 + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn matches_hand_rolled_second_step() {
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.01);
        let mut adam = Adam::new(1, b1, b2, eps);
        let mut p = [0.0];
        adam.update([&mut p[..]], &[1.0], lr, 0.0);
        adam.update([&mut p[..]], &[-2.0], lr, 0.0);
        let m1 = (1.0 - b1) * 1.0;
        let v1 = (1.0 - b2) * 1.0;
        let p1 = 0.0 - lr * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
        let m2 = b1 * m1 + (1.0 - b1) * -2.0;
        let v2 = b2 * v1 + (1.0 - b2) * 4.0;
        let p2 = p1 - lr * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
        assert!((p[0] - p2).abs() < 1e-15);
        assert_eq!(adam.state().t, 2);
    }
}
