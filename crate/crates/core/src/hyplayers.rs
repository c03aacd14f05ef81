//! Hyperbolic classification head: feature clipping, origin lift, two-class
//! hyperbolic logistic regression and the binary cross-entropy on its output.
//!
//! Class hyperplanes are stored Euclidean-side: the offset `p_k` is kept as a raw
//! vector and lifted into the ball on every evaluation, and the normal `t_k` is
//! used as-is. Every trainable quantity therefore lives in ℝⁿ.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ball::{MobiusTerms, PoincareBall, TanhRatio};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm, norm_sq, scale, Jacobian};

/// Clipping radius used when none is configured.
pub const DEFAULT_CLIP_RADIUS: f64 = 2.3;

/// Probabilities are clamped to `[PROB_EPS, 1 − PROB_EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NoChange = 0,
    Change = 1,
}

impl Label {
    pub fn from_bool(changed: bool) -> Self {
        if changed {
            Label::Change
        } else {
            Label::NoChange
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_f64(self) -> f64 {
        self as usize as f64
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            0 => Ok(Label::NoChange),
            1 => Ok(Label::Change),
            _ => Err(Error::InvalidParameter(format!("label must be 0 or 1, got {v}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipRadius(f64);

impl ClipRadius {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r > 0.0 {
            Ok(Self(r))
        } else {
            Err(Error::InvalidParameter(format!("clip radius must be positive, got {r}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ClipRadius {
    fn default() -> Self {
        Self(DEFAULT_CLIP_RADIUS)
    }
}

/// `min{1, r/‖x‖}·x`. The output norm never exceeds `r`, even after rounding,
/// so clipping twice gives the same vector as clipping once.
pub fn clip_features(x: &[f64], r: ClipRadius) -> Vec<f64> {
    let n = norm(x);
    if n <= r.0 {
        return x.to_vec();
    }
    let mut s = r.0 / n;
    let mut y = scale(x, s);
    while norm(&y) > r.0 {
        s = s.next_down();
        y = scale(x, s);
    }
    y
}

/// Jacobian of [`clip_features`]; the identity branch is taken at `‖x‖ = r`.
pub fn clip_jacobian(x: &[f64], r: ClipRadius) -> Jacobian {
    let n = norm(x);
    if n <= r.0 {
        return Jacobian::identity(x.len());
    }
    let s = r.0 / n;
    let mut j = Jacobian::scaled_identity(x.len(), s);
    j.add_outer(-s / (n * n), x, x);
    j
}

/// Exponential map at the origin: `tanh(√c‖x‖)·x / (√c‖x‖)`, projected into the margin.
pub fn lift_to_ball(x: &[f64], ball: &PoincareBall) -> Vec<f64> {
    let sqrt_c = ball.c().sqrt();
    let ratio = TanhRatio::new(sqrt_c, norm(x));
    ball.project(&scale(x, ratio.value / sqrt_c))
}

pub fn lift_jacobian(x: &[f64], ball: &PoincareBall) -> Jacobian {
    let sqrt_c = ball.c().sqrt();
    let ratio = TanhRatio::new(sqrt_c, norm(x));
    let raw = scale(x, ratio.value / sqrt_c);
    let mut j = Jacobian::scaled_identity(x.len(), ratio.value / sqrt_c);
    j.add_outer(ratio.deriv_over_s / sqrt_c, x, x);
    ball.finish(&raw, j)
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Hyp-BCE: `−[p ln p̂ + (1 − p) ln(1 − p̂)]` with `p̂` clamped away from 0 and 1.
pub fn hyp_bce_loss(prob: f64, label: Label) -> f64 {
    let p = prob.clamp(PROB_EPS, 1.0 - PROB_EPS);
    match label {
        Label::Change => -p.ln(),
        Label::NoChange => -(1.0 - p).ln(),
    }
}

/// Two-class probability of "change" from the logit `s₁ − s₀`, clamped into `(0, 1)`.
pub fn prob_from_logit(logit: f64) -> f64 {
    sigmoid(logit).clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// `ln(1 + eᵘ)` without overflow or cancellation.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// `(loss, ∂loss/∂logit)` for the logit `s₁ − s₀`.
///
/// Equals [`hyp_bce_loss`] of the clamped probability, but is evaluated from the
/// logit so that confident predictions keep full precision.
pub fn bce_from_logit(logit: f64, label: Label) -> (f64, f64) {
    let raw = sigmoid(logit);
    let nll = match label {
        Label::Change => softplus(-logit),
        Label::NoChange => softplus(logit),
    };
    let loss = nll.clamp(-(-PROB_EPS).ln_1p(), -PROB_EPS.ln());
    let grad = if (PROB_EPS..=1.0 - PROB_EPS).contains(&raw) { raw - label.as_f64() } else { 0.0 };
    (loss, grad)
}

/// Gradients of one class score.
#[derive(Clone, Debug)]
pub struct ScoreGrads {
    pub score: f64,
    /// With respect to the ball point being classified.
    pub x: Vec<f64>,
    /// With respect to the (lifted) hyperplane offset `p`.
    pub p: Vec<f64>,
    pub t: Vec<f64>,
}

struct ScoreTerms {
    terms: MobiusTerms,
    neg_p: Vec<f64>,
    m: Vec<f64>,
    lambda: f64,
    t_norm: f64,
    q: f64,
    one_minus: f64,
    z: f64,
    score: f64,
}

fn score_terms(x: &[f64], p: &[f64], t: &[f64], ball: &PoincareBall) -> Result<ScoreTerms> {
    check_dim(p.len(), x.len())?;
    check_dim(p.len(), t.len())?;
    ball.check_point(x)?;
    let lambda = ball.conformal_factor(p)?;
    let t_norm = norm(t);
    if t_norm == 0.0 || !t_norm.is_finite() {
        return Err(Error::ZeroNormal);
    }
    let c = ball.c();
    let sqrt_c = c.sqrt();
    let neg_p: Vec<f64> = p.iter().map(|v| -v).collect();
    let terms = MobiusTerms::new(&neg_p, x, c);
    let m = terms.value(&neg_p, x);
    let one_minus = 1.0 - c * norm_sq(&m);
    if one_minus <= 0.0 {
        return Err(Error::OutsideBall(1.0 - one_minus));
    }
    let q = dot(&m, t);
    let z = 2.0 * sqrt_c * q / (one_minus * t_norm);
    let score = lambda * t_norm / sqrt_c * z.asinh();
    Ok(ScoreTerms { terms, neg_p, m, lambda, t_norm, q, one_minus, z, score })
}

/// Class score `(λ_p‖t‖/√c)·arcsinh(2√c⟨(−p) ⊕ x, t⟩ / ((1 − c‖(−p) ⊕ x‖²)‖t‖))`
/// for a ball point `x`, a ball offset `p` and a normal `t`.
pub fn hyperplane_score(x: &[f64], p: &[f64], t: &[f64], ball: &PoincareBall) -> Result<f64> {
    Ok(score_terms(x, p, t, ball)?.score)
}

/// [`hyperplane_score`] with gradients with respect to `x`, `p` and `t`.
pub fn hyperplane_score_grads(x: &[f64], p: &[f64], t: &[f64], ball: &PoincareBall) -> Result<ScoreGrads> {
    let st = score_terms(x, p, t, ball)?;
    let c = ball.c();
    let sqrt_c = c.sqrt();
    let asinh_z = st.z.asinh();
    let ds_dz = st.lambda * st.t_norm / (sqrt_c * (1.0 + st.z * st.z).sqrt());
    let pre = 2.0 * sqrt_c / (st.one_minus * st.t_norm);

    let ds_dm: Vec<f64> = t
        .iter()
        .zip(&st.m)
        .map(|(ti, mi)| ds_dz * pre * (ti + st.q * 2.0 * c * mi / st.one_minus))
        .collect();

    let t_sq = st.t_norm * st.t_norm;
    let direct = st.lambda * asinh_z / (sqrt_c * st.t_norm);
    let grad_t: Vec<f64> = t
        .iter()
        .zip(&st.m)
        .map(|(ti, mi)| ds_dz * pre * (mi - st.q * ti / t_sq) + direct * ti)
        .collect();

    let (ju, jx) = st.terms.jacobians(&st.neg_p, x, &st.m, c);
    let grad_x = jx.t_mul_vec(&ds_dm);
    let ds_dlambda = st.t_norm * asinh_z / sqrt_c;
    let grad_p: Vec<f64> = ju
        .t_mul_vec(&ds_dm)
        .iter()
        .zip(p)
        .map(|(g, pi)| -g + ds_dlambda * c * st.lambda * st.lambda * pi)
        .collect();

    Ok(ScoreGrads { score: st.score, x: grad_x, p: grad_p, t: grad_t })
}

/// One class hyperplane: raw (pre-lift) offset and normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub p_raw: Vec<f64>,
    pub t: Vec<f64>,
}

/// Parameters of the two-class hyperbolic logistic regression.
#[derive(Clone, Debug, PartialEq)]
pub struct HypBlrParams {
    ball: PoincareBall,
    planes: [Hyperplane; 2],
}

impl HypBlrParams {
    pub fn new(ball: PoincareBall, no_change: Hyperplane, change: Hyperplane) -> Result<Self> {
        let dim = no_change.p_raw.len();
        for plane in [&no_change, &change] {
            check_dim(dim, plane.p_raw.len())?;
            check_dim(dim, plane.t.len())?;
            if norm(&plane.t) == 0.0 {
                return Err(Error::ZeroNormal);
            }
        }
        Ok(Self { ball, planes: [no_change, change] })
    }

    /// Offsets at zero, normals drawn from `N(0, 1/dim)` independently per class.
    pub fn init<R: Rng + ?Sized>(ball: PoincareBall, dim: usize, rng: &mut R) -> Self {
        let sd = (dim as f64).sqrt().recip();
        let plane = |rng: &mut R| Hyperplane {
            p_raw: vec![0.0; dim],
            t: (0..dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect(),
        };
        let a = plane(rng);
        let b = plane(rng);
        Self { ball, planes: [a, b] }
    }

    pub fn ball(&self) -> &PoincareBall {
        &self.ball
    }

    pub fn dim(&self) -> usize {
        self.planes[0].p_raw.len()
    }

    pub fn plane(&self, k: Label) -> &Hyperplane {
        &self.planes[k.index()]
    }

    pub fn planes(&self) -> &[Hyperplane; 2] {
        &self.planes
    }

    /// Raw access for optimizers; callers keep `t ≠ 0`.
    pub fn planes_mut(&mut self) -> &mut [Hyperplane; 2] {
        &mut self.planes
    }

    /// The ball offset `p_k = lift(p_raw_k)`.
    pub fn offset(&self, k: Label) -> Vec<f64> {
        lift_to_ball(&self.planes[k.index()].p_raw, &self.ball)
    }
}

/// Score of ball point `x` for class `k`.
pub fn hyp_blr_score(x: &[f64], params: &HypBlrParams, k: Label) -> Result<f64> {
    hyperplane_score(x, &params.offset(k), &params.plane(k).t, &params.ball)
}

/// Logit `s₁ − s₀` of "change" against "no change".
pub fn hyp_blr_logit(x: &[f64], params: &HypBlrParams) -> Result<f64> {
    Ok(hyp_blr_score(x, params, Label::Change)? - hyp_blr_score(x, params, Label::NoChange)?)
}

/// `p̂ = exp(s₁) / (exp(s₀) + exp(s₁))`.
pub fn hyp_blr_prob(x: &[f64], params: &HypBlrParams) -> Result<f64> {
    Ok(prob_from_logit(hyp_blr_logit(x, params)?))
}

/// Loss and gradients of `clip → lift → Hyp-BLR → Hyp-BCE` for one feature vector.
#[derive(Clone, Debug)]
pub struct HeadGrads {
    pub loss: f64,
    pub prob: f64,
    pub x: Vec<f64>,
    pub p_raw: [Vec<f64>; 2],
    pub t: [Vec<f64>; 2],
}

pub fn head_gradients(x: &[f64], params: &HypBlrParams, r: ClipRadius, label: Label) -> Result<HeadGrads> {
    check_dim(params.dim(), x.len())?;
    let ball = &params.ball;
    let clipped = clip_features(x, r);
    let y = lift_to_ball(&clipped, ball);

    let mut grads = Vec::with_capacity(2);
    for k in [Label::NoChange, Label::Change] {
        let plane = params.plane(k);
        grads.push(hyperplane_score_grads(&y, &params.offset(k), &plane.t, ball)?);
    }
    let logit = grads[1].score - grads[0].score;
    let (loss, dlogit) = bce_from_logit(logit, label);

    let g_y: Vec<f64> = grads[1].x.iter().zip(&grads[0].x).map(|(a, b)| dlogit * (a - b)).collect();
    let g_clipped = lift_jacobian(&clipped, ball).t_mul_vec(&g_y);
    let g_x = clip_jacobian(x, r).t_mul_vec(&g_clipped);

    let sign = [-dlogit, dlogit];
    let p_raw = [0, 1].map(|k| {
        let jl = lift_jacobian(&params.planes[k].p_raw, ball);
        scale(&jl.t_mul_vec(&grads[k].p), sign[k])
    });
    let t = [0, 1].map(|k| scale(&grads[k].t, sign[k]));

    Ok(HeadGrads { loss, prob: prob_from_logit(logit), x: g_x, p_raw, t })
}
