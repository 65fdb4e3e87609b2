//! Closed-form predictions: neighbor-proximity threshold, nearest-neighbor
//! distance law, exact shell sums for cover time and gradient overhead, union
//! coverage, and log-log fitting.

use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{name} = {value} is outside its domain ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

fn domain(name: &'static str, value: f64, reason: &'static str) -> AnalysisError {
    AnalysisError::Domain { name, value, reason }
}

/// Parameters shared by the closed-form predictions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryParams {
    pub n: f64,
    pub density: f64,
    pub tokens: f64,
    pub confidence: f64,
    pub hops: f64,
    pub partial: f64,
    pub trials: u32,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self {
            n: 500.0,
            density: 10.0,
            tokens: 1.0,
            confidence: 0.95,
            hops: 1.0,
            partial: 0.6,
            trials: 5,
        }
    }
}

impl TheoryParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(domain("confidence", self.confidence, "must lie in (0, 1)"));
        }
        if !(self.hops >= 1.0) {
            return Err(domain("hops", self.hops, "must be at least 1"));
        }
        if !(self.density > 0.0) {
            return Err(domain("density", self.density, "must be positive"));
        }
        if !(self.tokens >= 1.0 && self.tokens <= self.n) {
            return Err(domain("tokens", self.tokens, "must lie in [1, N]"));
        }
        if !(self.partial > 0.0 && self.partial < 1.0) {
            return Err(domain("partial", self.partial, "must lie in (0, 1)"));
        }
        if self.trials == 0 {
            return Err(domain("trials", 0.0, "must be at least 1"));
        }
        Ok(())
    }
}

/// `-ln(1 - p)`: the expected number of unvisited neighbors needed to see one with confidence `p`.
pub fn theta(p: f64) -> Result<f64, AnalysisError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p, "must lie in (0, 1)"));
    }
    Ok(-(-p).ln_1p())
}

/// Smallest unvisited fraction at which an `h`-hop neighborhood still holds an
/// unvisited node with confidence `p`.
pub fn lemma1_threshold(p: f64, h: f64, d: f64) -> Result<f64, AnalysisError> {
    if !(h >= 1.0) {
        return Err(domain("h", h, "must be at least 1"));
    }
    if !(d > 0.0) {
        return Err(domain("d", d, "must be positive"));
    }
    Ok(theta(p)? / (h * h * d))
}

/// Nearest-neighbor distance law of a planar Poisson process with intensity `rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NNDist {
    pub rho: f64,
}

impl NNDist {
    pub fn new(rho: f64) -> Result<Self, AnalysisError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(domain("rho", rho, "must be positive"));
        }
        Ok(Self { rho })
    }

    pub fn pdf(&self, r: f64) -> f64 {
        nn_pdf(self.rho, r)
    }

    pub fn cdf(&self, r: f64) -> f64 {
        nn_cdf(self.rho, r)
    }

    /// Draws nearest-neighbor distances of `count` uniform points on a torus at
    /// intensity `rho`, one per point.
    pub fn sample_torus<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        nearest_neighbor_distances_torus(self.rho, count, rng)
    }
}

pub fn nn_pdf(rho: f64, r: f64) -> f64 {
    if r < 0.0 {
        return 0.0;
    }
    2.0 * PI * rho * r * (-rho * PI * r * r).exp()
}

pub fn nn_cdf(rho: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    -(-rho * PI * r * r).exp_m1()
}

fn nearest_neighbor_distances_torus<R: Rng + ?Sized>(rho: f64, count: usize, rng: &mut R) -> Vec<f64> {
    if count < 2 {
        return Vec::new();
    }
    let side = (count as f64 / rho).sqrt();
    let cols = ((count as f64).sqrt().floor() as usize).max(1);
    let cell = side / cols as f64;
    let pts: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect();
    let cell_of = |v: f64| ((v / cell) as usize).min(cols - 1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cols * cols];
    for (i, &(x, y)) in pts.iter().enumerate() {
        buckets[cell_of(y) * cols + cell_of(x)].push(i);
    }
    let wrap = |d: f64| {
        let d = d.abs();
        d.min(side - d)
    };
    let max_ring = cols / 2;
    pts.iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let (cx, cy) = (cell_of(x) as isize, cell_of(y) as isize);
            let mut best = f64::INFINITY;
            for ring in 0..=max_ring as isize {
                // Points in ring r+1 are at least r cells away.
                if best <= (ring as f64 - 1.0).max(0.0) * cell {
                    break;
                }
                for dy in -ring..=ring {
                    for dx in -ring..=ring {
                        if dx.abs() != ring && dy.abs() != ring {
                            continue;
                        }
                        let gx = (cx + dx).rem_euclid(cols as isize) as usize;
                        let gy = (cy + dy).rem_euclid(cols as isize) as usize;
                        for &j in &buckets[gy * cols + gx] {
                            if j != i {
                                let (ox, oy) = pts[j];
                                best = best.min(wrap(x - ox).hypot(wrap(y - oy)));
                            }
                        }
                    }
                }
            }
            best
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Weight of shell `i` when shells run up to a real-valued outer index `outer`:
/// 1 for whole shells, the fractional part for the boundary shell.
fn shell_weight(i: u64, outer: f64) -> f64 {
    (outer - (i - 1) as f64).clamp(0.0, 1.0)
}

/// Expected transfers for one locally biased token to visit all `n` nodes, as the
/// exact shell sum `(N - N/d) + Σ N(2i+1)/i²` over shells `1..√(N/d) - 1`.
pub fn local_bias_cover_series(n: f64, d: f64) -> f64 {
    if n <= d {
        return n;
    }
    let outer = (n / d).sqrt() - 1.0;
    let mut total = n - n / d;
    let mut i = 1u64;
    loop {
        let w = shell_weight(i, outer);
        if w <= 0.0 {
            break;
        }
        let fi = i as f64;
        total += w * n * (2.0 * fi + 1.0) / (fi * fi);
        i += 1;
    }
    total
}

/// Expected transfers for one gradient-biased token: `N(1 + (1/d) Σ_{i ≤ ⌊√N⌋} 1/i²)`.
pub fn gradient_cover_series(n: f64, d: f64) -> f64 {
    let shells = n.sqrt().floor() as u64;
    let sum: f64 = (1..=shells).map(|i| 1.0 / (i as f64).powi(2)).sum();
    n * (1.0 + sum / d)
}

/// Upper envelope of [`gradient_cover_series`] as the shell count grows.
pub fn gradient_cover_bound(n: f64, d: f64) -> f64 {
    n * (1.0 + PI * PI / (6.0 * d))
}

/// Expected gradient messages with `k` tokens: each token's region of `N/k` nodes
/// pays `(2i-1)/(i-1)²` per node at shell `i`, shells reaching out to `√(N/(kd))`.
/// The two-hop shell is always paid.
pub fn gradient_overhead_series(n: f64, d: f64, k: f64) -> f64 {
    let region = n / k;
    let outer = (region / d).sqrt();
    let term = |i: f64| (2.0 * i - 1.0) / ((i - 1.0) * (i - 1.0));
    let mut total = term(2.0);
    let mut i = 3u64;
    loop {
        let w = shell_weight(i, outer);
        if w <= 0.0 {
            break;
        }
        total += w * term(i as f64);
        i += 1;
    }
    region * total
}

/// A cover-time series evaluated for one of `k` tokens, each responsible for `N/k` nodes.
pub fn per_token_scaling<F: Fn(f64) -> f64>(series: F, n: f64, k: f64) -> f64 {
    series(n / k)
}

/// Expected union coverage of `c` independent trials each stopped at fraction `m`.
pub fn union_coverage_theory(m: f64, c: u32) -> Result<f64, AnalysisError> {
    if !(m > 0.0 && m < 1.0) {
        return Err(domain("m", m, "must lie in (0, 1)"));
    }
    if c == 0 {
        return Err(domain("c", 0.0, "must be at least 1"));
    }
    Ok(1.0 - (1.0 - m).powi(c as i32))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("x", mx, "all x values are equal"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Growth exponent of `value` in `N`: the least-squares slope in log-log space.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if !(x > 0.0) {
            return Err(domain("N", x, "must be positive"));
        }
        if !(y > 0.0) {
            return Err(domain("value", y, "must be positive"));
        }
        logs.push((x.ln(), y.ln()));
    }
    Ok(linear_fit(&logs)?.slope)
}
