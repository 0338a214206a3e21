//! Piecewise Gauss–Legendre quadrature of envelope functionals.
//!
//! Integration windows are split at envelope breakpoints so every panel sees
//! a smooth integrand; panel endpoints are never evaluated, which keeps the
//! one-sided values of square-pulse edges exact.

use crate::params::PulseEnvelope;

// 5-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    128.0 / 225.0,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// ∫_a^b f with panels no wider than `h`, split at `breakpoints`. Signed: b < a
/// gives the negated integral.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breakpoints: &[f64], h: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a, breakpoints, h);
    }
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let panels = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
        let step = (hi - lo) / panels as f64;
        for k in 0..panels {
            let p0 = lo + k as f64 * step;
            let p1 = if k + 1 == panels { hi } else { p0 + step };
            total += gauss_panel(&f, p0, p1);
        }
    }
    total
}

/// ∫_a^b |Ω(t)| dt.
pub fn abs_integral(env: &PulseEnvelope, a: f64, b: f64, h: f64) -> f64 {
    integrate(|t| env.sample(t).norm(), a, b, &env.breakpoints(), h)
}

/// ∫_a^b |Ω(t)|² dt.
pub fn abs_sqr_integral(env: &PulseEnvelope, a: f64, b: f64, h: f64) -> f64 {
    integrate(|t| env.sample(t).norm_sqr(), a, b, &env.breakpoints(), h)
}

/// Cumulative ∫_0^t |Ω|² on a node set that contains 0, every breakpoint and
/// a uniform lattice of spacing `h` over `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct CumulativeIntensity {
    envelope: PulseEnvelope,
    breakpoints: Vec<f64>,
    h: f64,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CumulativeIntensity {
    pub fn new(envelope: &PulseEnvelope, lo: f64, hi: f64, h: f64) -> Self {
        let lo = lo.min(0.0);
        let hi = hi.max(0.0);
        let breakpoints = envelope.breakpoints();
        let mut nodes: Vec<f64> = Vec::new();
        let first = (lo / h).floor() as i64;
        let last = (hi / h).ceil() as i64;
        nodes.extend((first..=last).map(|k| k as f64 * h));
        nodes.extend(breakpoints.iter().copied().filter(|t| (lo..=hi).contains(t)));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * h);
        let zero = nodes.iter().position(|&t| t == 0.0).expect("lattice contains 0");

        let intensity = |t: f64| envelope.sample(t).norm_sqr();
        let mut cumulative = vec![0.0; nodes.len()];
        for k in zero + 1..nodes.len() {
            cumulative[k] = cumulative[k - 1] + gauss_panel(&intensity, nodes[k - 1], nodes[k]);
        }
        for k in (0..zero).rev() {
            cumulative[k] = cumulative[k + 1] - gauss_panel(&intensity, nodes[k], nodes[k + 1]);
        }
        CumulativeIntensity {
            envelope: envelope.clone(),
            breakpoints,
            h,
            nodes,
            cumulative,
        }
    }

    /// ∫_0^t |Ω(τ)|² dτ.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.nodes.partition_point(|&n| n <= t).saturating_sub(1);
        let start = self.nodes[k];
        if t == start {
            return self.cumulative[k];
        }
        let env = &self.envelope;
        let rest = if k + 1 < self.nodes.len() && t < self.nodes[k + 1] {
            gauss_panel(&|s| env.sample(s).norm_sqr(), start, t)
        } else {
            integrate(|s| env.sample(s).norm_sqr(), start, t, &self.breakpoints, self.h)
        };
        self.cumulative[k] + rest
    }
}
