//! Special functions and quadrature: the Gauss hypergeometric function on the
//! `2F1(1, b; b + 1; x <= 0)` family, adaptive Gauss–Kronrod integration on
//! finite intervals, and improper radial / planar integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("hypergeometric series did not converge after {terms} terms (x = {x})")]
    SeriesDiverged { terms: usize, x: f64 },
    #[error("unsupported hypergeometric parameters b = {b}, c = {c}, x = {x}")]
    Unsupported { b: f64, c: f64, x: f64 },
    #[error("subdivision budget exhausted on [{a}, {b}]: estimate {estimate}, error {error}")]
    SubdivisionBudget {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },
    #[error("integrand is not finite at {0}")]
    NonFinite(f64),
    #[error("no decaying tail detected up to radius {0}")]
    NoDecayingTail(f64),
}

/// Tolerances shared by every quadrature in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Relative size of the last annulus at which an improper radial
    /// integral is truncated.
    pub truncation_threshold: f64,
    /// First truncation radius tried for improper integrals, in meters.
    pub initial_radius: f64,
    /// Hard radius cap for improper integrals.
    pub max_radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            truncation_threshold: 1e-12,
            initial_radius: 1.0,
            max_radius: 1e12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_initial_radius(mut self, r: f64) -> Self {
        self.initial_radius = r;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.rel_tol > 0.0
            && self.rel_tol < 1.0
            && self.abs_tol > 0.0
            && self.max_subdivisions > 0
            && self.truncation_threshold > 0.0
            && self.initial_radius > 0.0
            && self.max_radius > self.initial_radius
    }
}

const MAX_SERIES_TERMS: usize = 2_000_000;

/// `sum_n (b)_n / (c)_n z^n`, i.e. `2F1(1, b; c; z)` for `|z| < 1`.
fn series_one_b(b: f64, c: f64, z: f64, x: f64) -> Result<f64, SpecFunError> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let tail = 1.0 / (1.0 - z.abs());
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        term *= (b + nf) / (c + nf) * z;
        sum += term;
        if term.abs() * tail <= 1e-17 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(SpecFunError::SeriesDiverged {
        terms: MAX_SERIES_TERMS,
        x,
    })
}

/// `2F1(1, b; c; x)` for `b` in `(0, 1)`, `c = b + 1` and `x <= 0`.
///
/// Uses the power series for `|x| <= 1/2`, the Pfaff transformation
/// `(1 - x)^-1 2F1(1, c - b; c; x / (x - 1))` for moderate negative `x`, and
/// the `1/x` connection formula for `x < -2`, where the Pfaff argument
/// approaches 1 and that series converges arbitrarily slowly.
pub fn hyp2f1_neg(b: f64, c: f64, x: f64) -> Result<f64, SpecFunError> {
    if !(b > 0.0 && b < 1.0) || (c - (b + 1.0)).abs() > 1e-12 || !(x <= 0.0) {
        return Err(SpecFunError::Unsupported { b, c, x });
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if x >= -0.5 {
        return series_one_b(b, c, x, x);
    }
    // Cancellation in the connection formula grows like b / (1 - b).
    if x >= -2.0 || !(0.02..=0.98).contains(&b) {
        let z = x / (x - 1.0);
        return Ok(series_one_b(c - b, c, z, x)? / (1.0 - x));
    }
    let t = -x;
    let lead = b * PI / (PI * b).sin() * t.powf(-b);
    let rest = b / (1.0 - b) / t * series_one_b(1.0 - b, 2.0 - b, 1.0 / x, x)?;
    Ok(lead - rest)
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, SpecFunError> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    if !fc.is_finite() {
        return Err(SpecFunError::NonFinite(centre));
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(centre - dx), f(centre + dx));
        if !f1.is_finite() {
            return Err(SpecFunError::NonFinite(centre - dx));
        }
        if !f2.is_finite() {
            return Err(SpecFunError::NonFinite(centre + dx));
        }
        kronrod += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Segment { a, b, value, error })
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the summed
/// error is at most `max(rel_tol * |value|, abs_tol)`.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    q: &QuadratureSpec,
) -> Result<f64, SpecFunError> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate_1d(f, b, a, q).map(|v| -v);
    }
    let first = gauss_kronrod(&f, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut segments = 1usize;
    while error > (q.rel_tol * value.abs()).max(q.abs_tol) {
        if segments >= q.max_subdivisions {
            return Err(SpecFunError::SubdivisionBudget {
                a,
                b,
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap holds every segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Cannot split further; the remaining error is roundoff.
            return Err(SpecFunError::SubdivisionBudget {
                a,
                b,
                estimate: value,
                error,
            });
        }
        let left = gauss_kronrod(&f, worst.a, mid)?;
        let right = gauss_kronrod(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        segments += 1;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let mut parts: Vec<Segment> = heap.into_vec();
    parts.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(parts.iter().map(|s| s.value).sum())
}

/// `int_a^inf g(r) dr`, truncated by doubling the upper limit until two
/// consecutive pieces are below `truncation_threshold` of the running total.
///
/// `piece(lo, hi, q)` integrates one annulus; the tolerance set it receives carries an
/// absolute tolerance scaled to the running total so far-out pieces are not
/// resolved beyond what the total needs.
pub fn integrate_tail<G>(piece: G, a: f64, q: &QuadratureSpec) -> Result<f64, SpecFunError>
where
    G: Fn(f64, f64, &QuadratureSpec) -> Result<f64, SpecFunError>,
{
    let mut upper = q.initial_radius.max(a * 2.0).max(a + q.initial_radius);
    let mut total = piece(a, upper, q)?;
    let mut quiet = 0;
    while quiet < 2 {
        let next = upper * 2.0;
        if next > q.max_radius {
            return Err(SpecFunError::NoDecayingTail(upper));
        }
        let local = QuadratureSpec {
            abs_tol: q.abs_tol.max(0.1 * q.rel_tol * total.abs()),
            ..*q
        };
        let delta = piece(upper, next, &local)?;
        total += delta;
        upper = next;
        if delta.abs() <= (q.truncation_threshold * total.abs()).max(q.abs_tol) {
            quiet += 1;
        } else {
            quiet = 0;
        }
    }
    Ok(total)
}

/// Integrand on the plane, in polar coordinates about the origin.
pub enum PlaneIntegrand<'a> {
    /// Depends on the radius only.
    Radial(&'a dyn Fn(f64) -> f64),
    /// `f(r, phi)`.
    Polar(&'a dyn Fn(f64, f64) -> f64),
}

/// `int_0^{2 pi} int_0^inf f(r, phi) r dr dphi` with an automatically chosen
/// truncation radius.
pub fn integrate_plane(f: PlaneIntegrand<'_>, q: &QuadratureSpec) -> Result<f64, SpecFunError> {
    match f {
        PlaneIntegrand::Radial(g) => {
            let radial = integrate_tail(
                |lo, hi, q| integrate_1d(|r| g(r) * r, lo, hi, q),
                0.0,
                q,
            )?;
            Ok(2.0 * PI * radial)
        }
        PlaneIntegrand::Polar(g) => integrate_tail(
            |lo, hi, q| {
                integrate_1d(
                    |phi| match integrate_1d(|r| g(r, phi) * r, lo, hi, q) {
                        Ok(v) => v,
                        Err(_) => f64::NAN,
                    },
                    0.0,
                    2.0 * PI,
                    q,
                )
            },
            0.0,
            q,
        ),
    }
}
