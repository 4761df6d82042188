//! Adam optimizer with bias correction.

use super::ParamStore;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Apply one Adam update from the gradients currently in the store and
/// increment the step counter.
pub fn adam_step(store: &mut ParamStore, cfg: &AdamConfig) {
    store.step += 1;
    let t = store.step as f64;
    let bias1 = 1.0 - cfg.beta1.powf(t);
    let bias2 = 1.0 - cfg.beta2.powf(t);
    for (_, param) in store.params_mut() {
        let n = param.value.data().len();
        for i in 0..n {
            let g = param.grad.data()[i];
            let m = cfg.beta1 * param.m.data()[i] + (1.0 - cfg.beta1) * g;
            let v = cfg.beta2 * param.v.data()[i] + (1.0 - cfg.beta2) * g * g;
            param.m.data_mut()[i] = m;
            param.v.data_mut()[i] = v;
            let m_hat = m / bias1;
            let v_hat = v / bias2;
            param.value.data_mut()[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}
