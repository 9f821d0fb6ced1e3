//! Logistic loss on the log-odds scale.

/// Margins are clipped to this magnitude before the link so predictions stay
/// strictly inside (0, 1).
pub const MAX_MARGIN: f64 = 30.0;

pub fn sigmoid(margin: f64) -> f64 {
    let m = margin.clamp(-MAX_MARGIN, MAX_MARGIN);
    1.0 / (1.0 + (-m).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Per-row loss `-[y ln p + (1-y) ln(1-p)]` with `p = sigmoid(margin)`.
pub fn logistic_loss(margin: f64, y: f64) -> f64 {
    y * softplus(-margin) + (1.0 - y) * softplus(margin)
}

/// First and second derivative of [`logistic_loss`] in the margin.
pub fn logistic_grad_hess(margin: f64, y: f64) -> (f64, f64) {
    let p = 1.0 / (1.0 + (-margin).exp());
    (p - y, p * (1.0 - p))
}

/// Loss summed over `n` rows at one margin, `pos` of which are wins.
pub(crate) fn grouped_loss(margin: f64, n: f64, pos: f64) -> f64 {
    pos * softplus(-margin) + (n - pos) * softplus(margin)
}
