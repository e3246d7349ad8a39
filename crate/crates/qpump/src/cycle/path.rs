//! Closed curves in the control plane `X = (B_x, B_z)`, parameterised by
//! `u ∈ [0, 1)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::Vec2;

fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn mul(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// A straight line or a circular arc. Arc angles are measured from the
/// `B_x` axis towards `B_z`; a negative sweep runs clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Segment {
    Line { from: Vec2, to: Vec2 },
    Arc { center: Vec2, radius: f64, start: f64, sweep: f64 },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match self {
            Segment::Line { from, to } => norm(sub(*to, *from)),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Position and first two derivatives with respect to the local
    /// fraction `s ∈ [0, 1]`.
    fn eval(&self, s: f64) -> [Vec2; 3] {
        match self {
            Segment::Line { from, to } => {
                let d = sub(*to, *from);
                [add(*from, mul(d, s)), d, [0.0, 0.0]]
            }
            Segment::Arc { center, radius, start, sweep } => {
                let th = start + sweep * s;
                let (sn, cs) = th.sin_cos();
                [
                    add(*center, [radius * cs, radius * sn]),
                    [-radius * sweep * sn, radius * sweep * cs],
                    [-radius * sweep * sweep * cs, -radius * sweep * sweep * sn],
                ]
            }
        }
    }

    pub fn start_point(&self) -> Vec2 {
        self.eval(0.0)[0]
    }

    pub fn end_point(&self) -> Vec2 {
        self.eval(1.0)[0]
    }
}

/// Piecewise path traversed at constant speed in `u`: each segment gets a
/// share of `[0, 1)` proportional to its length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct SegmentPath {
    segments: Vec<Segment>,
    bounds: Vec<f64>,
}

impl TryFrom<Vec<Segment>> for SegmentPath {
    type Error = Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        SegmentPath::new(segments)
    }
}

impl From<SegmentPath> for Vec<Segment> {
    fn from(p: SegmentPath) -> Self {
        p.segments
    }
}

impl SegmentPath {
    /// Checks that consecutive segments join and the path closes.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidConfig("piecewise path has no segments".into()));
        }
        let total: f64 = segments.iter().map(Segment::length).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidConfig("piecewise path has zero length".into()));
        }
        for (k, seg) in segments.iter().enumerate() {
            let next = &segments[(k + 1) % segments.len()];
            let gap = norm(sub(seg.end_point(), next.start_point()));
            if gap > 1e-9 * total {
                return Err(Error::InvalidConfig(format!(
                    "segment {k} ends {gap:e} away from the start of segment {}",
                    (k + 1) % segments.len()
                )));
            }
        }
        let mut bounds = vec![0.0];
        let mut acc = 0.0;
        for seg in &segments {
            acc += seg.length();
            bounds.push(acc / total);
        }
        *bounds.last_mut().unwrap() = 1.0;
        Ok(SegmentPath { segments, bounds })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    /// `[u_start, u_end)` of segment `k`.
    pub fn segment_range(&self, k: usize) -> (f64, f64) {
        (self.bounds[k], self.bounds[k + 1])
    }

    fn eval(&self, u: f64) -> [Vec2; 3] {
        let u = u.rem_euclid(1.0);
        let k = self.bounds[1..].partition_point(|b| *b <= u).min(self.segments.len() - 1);
        let (u0, u1) = self.segment_range(k);
        let w = u1 - u0;
        let [p, d1, d2] = self.segments[k].eval((u - u0) / w);
        [p, mul(d1, 1.0 / w), mul(d2, 1.0 / (w * w))]
    }

    /// Quadrant sector of radius `r`: origin → (0, R) → arc → (R, 0) →
    /// origin, with sharp corners.
    pub fn sector(radius: f64) -> Result<Self> {
        SegmentPath::new(vec![
            Segment::Line {
                from: [0.0, 0.0],
                to: [0.0, radius],
            },
            Segment::Arc {
                center: [0.0, 0.0],
                radius,
                start: FRAC_PI_2,
                sweep: -FRAC_PI_2,
            },
            Segment::Line {
                from: [radius, 0.0],
                to: [0.0, 0.0],
            },
        ])
    }

    /// The same sector with every corner rounded by a tangent arc of radius
    /// `corner`, so the velocity direction is continuous.
    pub fn filleted_sector(radius: f64, corner: f64) -> Result<Self> {
        if !(corner > 0.0 && 2.0 * corner < radius) {
            return Err(Error::InvalidConfig(format!(
                "corner radius {corner} must lie in (0, {})",
                radius / 2.0
            )));
        }
        let r = corner;
        // Fillet circles touching a leg and, from inside, the big circle.
        let zc = ((radius - r).powi(2) - r * r).sqrt();
        let alpha = zc.atan2(r);
        let beta = r.atan2(zc);
        SegmentPath::new(vec![
            Segment::Line {
                from: [0.0, r],
                to: [0.0, zc],
            },
            Segment::Arc {
                center: [r, zc],
                radius: r,
                start: PI,
                sweep: alpha - PI,
            },
            Segment::Arc {
                center: [0.0, 0.0],
                radius,
                start: alpha,
                sweep: beta - alpha,
            },
            Segment::Arc {
                center: [zc, r],
                radius: r,
                start: beta,
                sweep: -FRAC_PI_2 - beta,
            },
            Segment::Line {
                from: [zc, 0.0],
                to: [r, 0.0],
            },
            Segment::Arc {
                center: [r, r],
                radius: r,
                start: -FRAC_PI_2,
                sweep: -FRAC_PI_2,
            },
        ])
    }

    /// Closed polygon through `vertices`; with `corner > 0` each vertex is
    /// replaced by a tangent arc of that radius.
    pub fn polygon(vertices: &[Vec2], corner: f64) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidConfig("polygon needs at least three vertices".into()));
        }
        if corner <= 0.0 {
            let segments = (0..n)
                .map(|k| Segment::Line {
                    from: vertices[k],
                    to: vertices[(k + 1) % n],
                })
                .collect();
            return SegmentPath::new(segments);
        }
        // Tangent points (entry, exit) and arc for every vertex.
        let mut fillets = Vec::with_capacity(n);
        for k in 0..n {
            let prev = vertices[(k + n - 1) % n];
            let v = vertices[k];
            let next = vertices[(k + 1) % n];
            let (din, dout) = (sub(v, prev), sub(next, v));
            let (lin, lout) = (norm(din), norm(dout));
            if lin == 0.0 || lout == 0.0 {
                return Err(Error::InvalidConfig("polygon has repeated vertices".into()));
            }
            let (din, dout) = (mul(din, 1.0 / lin), mul(dout, 1.0 / lout));
            let turn = cross(din, dout).atan2(din[0] * dout[0] + din[1] * dout[1]);
            if turn.abs() < 1e-12 {
                return Err(Error::InvalidConfig(format!("vertex {k} is collinear with its neighbours")));
            }
            let t = corner * (turn.abs() / 2.0).tan();
            let entry = sub(v, mul(din, t));
            let exit = add(v, mul(dout, t));
            let left = [-din[1], din[0]];
            let center = add(entry, mul(left, corner * turn.signum()));
            let rel = sub(entry, center);
            fillets.push((
                entry,
                exit,
                t,
                Segment::Arc {
                    center,
                    radius: corner,
                    start: rel[1].atan2(rel[0]),
                    sweep: turn,
                },
            ));
        }
        let mut segments = Vec::with_capacity(2 * n);
        for k in 0..n {
            let (_, exit, t, arc) = &fillets[k];
            let (entry_next, _, t_next, _) = &fillets[(k + 1) % n];
            let edge = norm(sub(vertices[(k + 1) % n], vertices[k]));
            if t + t_next > edge * (1.0 + 1e-12) {
                return Err(Error::InvalidConfig(format!("corner radius {corner} too large for edge {k}")));
            }
            segments.push(arc.clone());
            if t + t_next < edge * (1.0 - 1e-12) {
                segments.push(Segment::Line {
                    from: *exit,
                    to: *entry_next,
                });
            }
        }
        SegmentPath::new(segments)
    }
}

/// One Fourier harmonic `a cos(2πku) + b sin(2πku)` of both components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub cos: Vec2,
    pub sin: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Path {
    /// `X(u) = c + (a cos 2πu, b sin 2πu)`, counter-clockwise for `a, b > 0`.
    Ellipse { center: Vec2, semi_axes: Vec2 },
    /// `X(u) = c + Σ_k [cos_k cos(2πku) + sin_k sin(2πku)]`, harmonic `k`
    /// stored at index `k - 1`.
    Fourier { center: Vec2, harmonics: Vec<Harmonic> },
    Piecewise { segments: SegmentPath },
}

impl Path {
    pub fn ellipse(center: Vec2, semi_axes: Vec2) -> Self {
        Path::Ellipse { center, semi_axes }
    }

    pub fn circle(center: Vec2, radius: f64) -> Self {
        Path::Ellipse {
            center,
            semi_axes: [radius, radius],
        }
    }

    pub fn fourier(center: Vec2, harmonics: Vec<Harmonic>) -> Self {
        Path::Fourier { center, harmonics }
    }

    pub fn piecewise(segments: SegmentPath) -> Self {
        Path::Piecewise { segments }
    }

    /// Position, `dX/du`, `d²X/du²`.
    pub fn eval(&self, u: f64) -> [Vec2; 3] {
        match self {
            Path::Ellipse { center, semi_axes } => {
                let (sn, cs) = (TAU * u).sin_cos();
                let [a, b] = *semi_axes;
                [
                    [center[0] + a * cs, center[1] + b * sn],
                    [-TAU * a * sn, TAU * b * cs],
                    [-TAU * TAU * a * cs, -TAU * TAU * b * sn],
                ]
            }
            Path::Fourier { center, harmonics } => {
                let mut out = [*center, [0.0; 2], [0.0; 2]];
                for (idx, h) in harmonics.iter().enumerate() {
                    let w = TAU * (idx + 1) as f64;
                    let (sn, cs) = (w * u).sin_cos();
                    for c in 0..2 {
                        out[0][c] += h.cos[c] * cs + h.sin[c] * sn;
                        out[1][c] += w * (-h.cos[c] * sn + h.sin[c] * cs);
                        out[2][c] += -w * w * (h.cos[c] * cs + h.sin[c] * sn);
                    }
                }
                out
            }
            Path::Piecewise { segments } => segments.eval(u),
        }
    }

    pub fn point(&self, u: f64) -> Vec2 {
        self.eval(u)[0]
    }

    /// Interior parameter values where the path is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Path::Piecewise { segments } => segments.bounds[1..segments.bounds.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Path::Piecewise { .. })
    }

    /// Closed polyline with `n` points per unit of `u` plus every breakpoint.
    pub fn polyline(&self, n: usize) -> Vec<Vec2> {
        let mut us: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        us.extend(self.breakpoints());
        us.sort_by(f64::total_cmp);
        us.dedup();
        us.into_iter().map(|u| self.point(u)).collect()
    }

    /// Signed enclosed area (positive counter-clockwise), by the shoelace
    /// formula on a fine polyline.
    pub fn signed_area(&self) -> f64 {
        let pts = self.polyline(4096);
        let n = pts.len();
        0.5 * (0..n).map(|k| cross(pts[k], pts[(k + 1) % n])).sum::<f64>()
    }
}
