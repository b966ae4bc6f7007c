/// Probabilities are clamped to `[LOSS_EPS, 1 - LOSS_EPS]` before the log.
pub const LOSS_EPS: f64 = 1e-7;

/// Binary cross-entropy and its derivative with respect to `p`, both taken
/// at the clamped probability.
pub fn bce_loss(p: f64, y: f64) -> (f64, f64) {
    let pc = p.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    let loss = -(y * pc.ln() + (1.0 - y) * (1.0 - pc).ln());
    let grad = (pc - y) / (pc * (1.0 - pc));
    (loss, grad)
}

/// `dL/dlogit` for a sigmoid output: `dL/dp · p(1 - p)`.
pub fn bce_logit_grad(p: f64, y: f64) -> f64 {
    bce_loss(p, y).1 * p * (1.0 - p)
}
