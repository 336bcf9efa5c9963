use crate::hitgraph::SubGraph;

/// Weighted binary cross entropy of one prediction, with the prediction
/// clamped to `[eps, 1 − eps]`.
pub fn weighted_bce(pred: f64, label: bool, w_true: f64, w_fake: f64, eps: f64) -> f64 {
    let p = pred.clamp(eps, 1.0 - eps);
    if label {
        -w_true * p.ln()
    } else {
        -w_fake * (1.0 - p).ln()
    }
}

/// `dL/dp` of [`weighted_bce`]. Zero where the clamp is active.
pub fn weighted_bce_grad(pred: f64, label: bool, w_true: f64, w_fake: f64, eps: f64) -> f64 {
    if pred < eps || pred > 1.0 - eps {
        return 0.0;
    }
    if label {
        -w_true / pred
    } else {
        w_fake / (1.0 - pred)
    }
}

/// Per-class loss weights that give both classes the same total weight
/// `E/2` within one subgraph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub w_true: f64,
    pub w_fake: f64,
}

impl ClassWeights {
    /// `w_true = E / (2·E_true)`, `w_fake = E / (2·E_fake)`; an absent class
    /// gets weight 1.
    pub fn balanced(n_true: usize, n_fake: usize) -> Self {
        let total = (n_true + n_fake) as f64;
        let w = |n: usize| {
            if n == 0 {
                1.0
            } else {
                total / (2.0 * n as f64)
            }
        };
        Self {
            w_true: w(n_true),
            w_fake: w(n_fake),
        }
    }

    pub fn for_subgraph(g: &SubGraph) -> Self {
        let n_true = g.n_true();
        Self::balanced(n_true, g.edges.len() - n_true)
    }

    pub fn loss(&self, pred: f64, label: bool, eps: f64) -> f64 {
        weighted_bce(pred, label, self.w_true, self.w_fake, eps)
    }

    pub fn loss_grad(&self, pred: f64, label: bool, eps: f64) -> f64 {
        weighted_bce_grad(pred, label, self.w_true, self.w_fake, eps)
    }
}
