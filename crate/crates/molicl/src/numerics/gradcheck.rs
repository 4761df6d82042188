//! Central finite-difference validation of analytic gradients.

use std::collections::BTreeMap;

use super::tape::{forward_backward, Tape, Var};
use super::{NumericsError, ParamStore, Tensor2};

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_rel_error)
            .fold(0.0, f64::max)
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{} {:<24} max rel err {:.3e}",
                if e.pass { "ok  " } else { "FAIL" },
                e.name,
                e.max_rel_error
            )?;
        }
        write!(f, "tolerance {:.1e}", self.tolerance)
    }
}

/// Relative error between matching tensors: `|a - n| / max(|a| + |n|, 1e-6)`
/// per element, maximized per tensor.
pub fn compare_gradients(
    analytic: &BTreeMap<String, Tensor2>,
    numeric: &BTreeMap<String, Tensor2>,
    tolerance: f64,
) -> GradCheckReport {
    let entries = analytic
        .iter()
        .map(|(name, a)| {
            let n = &numeric[name];
            let max_rel = a
                .data()
                .iter()
                .zip(n.data())
                .map(|(x, y)| (x - y).abs() / (x.abs() + y.abs()).max(1e-6))
                .fold(0.0, f64::max);
            GradCheckEntry {
                name: name.clone(),
                max_rel_error: max_rel,
                pass: max_rel < tolerance,
            }
        })
        .collect();
    GradCheckReport { entries, tolerance }
}

/// Check the analytic gradients of `build` against central differences with
/// step `h`, reporting the per-parameter maximum relative error.
pub fn finite_diff_check(
    store: &mut ParamStore,
    build: impl Fn(&mut Tape, &ParamStore) -> Var,
    h: f64,
    tolerance: f64,
) -> Result<GradCheckReport, NumericsError> {
    forward_backward(store, &build)?;
    let analytic: BTreeMap<String, Tensor2> = store
        .params_iter()
        .map(|(name, p)| (name.clone(), p.grad.clone()))
        .collect();

    let names: Vec<String> = store.names().map(String::from).collect();
    let mut numeric = BTreeMap::new();
    for name in &names {
        let shape = store.get(name).shape();
        let mut grads = Tensor2::zeros(shape.0, shape.1);
        for i in 0..shape.0 * shape.1 {
            let original = store.get(name).data()[i];
            store.get_mut(name).data_mut()[i] = original + h;
            let plus = eval_loss(store, &build)?;
            store.get_mut(name).data_mut()[i] = original - h;
            let minus = eval_loss(store, &build)?;
            store.get_mut(name).data_mut()[i] = original;
            grads.data_mut()[i] = (plus - minus) / (2.0 * h);
        }
        numeric.insert(name.clone(), grads);
    }

    Ok(compare_gradients(&analytic, &numeric, tolerance))
}

fn eval_loss(
    store: &ParamStore,
    build: impl Fn(&mut Tape, &ParamStore) -> Var,
) -> Result<f64, NumericsError> {
    let mut tape = Tape::new();
    let loss = build(&mut tape, store);
    let value = tape.value(loss).get(0, 0);
    if !value.is_finite() {
        return Err(NumericsError::NonFiniteLoss(value));
    }
    Ok(value)
}
