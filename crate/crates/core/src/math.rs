/// Raw scores are clipped to this magnitude before the logistic link.
pub const RAW_SCORE_CLIP: f64 = 30.0;

pub fn sigmoid(raw: f64) -> f64 {
    let z = raw.clamp(-RAW_SCORE_CLIP, RAW_SCORE_CLIP);
    1.0 / (1.0 + (-z).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
