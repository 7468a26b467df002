//! Waypoint track: centerline polyline, per-point half-width, arclength.
//!
//! Definition file format: one point per line, comma-separated
//! `x_m, y_m, half_width_m`; `#` starts a comment. A track whose first and
//! last points are within 1 m of each other is treated as closed (the
//! duplicate endpoint is dropped and the closing segment is added).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Distance below which the first and last file points mean "closed loop".
const CLOSURE_TOL_M: f64 = 1.0;

/// Window of segments searched around a projection hint before falling back
/// to a full scan.
const HINT_WINDOW: usize = 10;

#[derive(Debug, Clone)]
pub struct Track {
    points: Vec<(f64, f64)>,
    half_widths: Vec<f64>,
    /// Cumulative arclength at each point; entry 0 is 0.
    cum_arclength: Vec<f64>,
    total_length: f64,
    closed: bool,
}

/// Result of projecting a position onto the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackProjection {
    /// Signed lateral offset in meters; positive is left of travel direction.
    pub d: f64,
    /// Arclength coordinate of the projection in meters.
    pub s: f64,
    /// Whether the position is within the local half-width (inclusive).
    pub inside: bool,
    /// Index of the matched segment, reusable as the next call's hint.
    pub segment: usize,
}

impl Track {
    /// Build from explicit points; used by tests and generated tracks.
    pub fn from_points(points: Vec<(f64, f64)>, half_widths: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TrackInvalid {
                reason: format!("need at least 3 points, got {}", points.len()),
            });
        }
        if points.len() != half_widths.len() {
            return Err(Error::TrackInvalid {
                reason: "points and half-widths differ in length".into(),
            });
        }
        let mut points = points;
        let mut half_widths = half_widths;
        for w in &half_widths {
            if !(*w > 0.0) {
                return Err(Error::TrackInvalid {
                    reason: "half-widths must be positive".into(),
                });
            }
        }
        for i in 1..points.len() {
            if dist(points[i - 1], points[i]) == 0.0 {
                return Err(Error::TrackInvalid {
                    reason: format!("duplicate consecutive points at index {i}"),
                });
            }
        }
        let closed = dist(points[0], *points.last().unwrap()) <= CLOSURE_TOL_M;
        if closed && points.len() > 3 {
            points.pop();
            half_widths.pop();
        }
        let n = points.len();
        let seg_count = if closed { n } else { n - 1 };
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 1..=seg_count {
            let a = points[i - 1];
            let b = points[i % n];
            cum.push(cum[i - 1] + dist(a, b));
        }
        let total = *cum.last().unwrap();
        Ok(Self {
            points,
            half_widths,
            cum_arclength: cum,
            total_length: total,
            closed,
        })
    }

    /// Parse a track definition file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::TrackParse {
            line: 0,
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut widths = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::TrackParse {
                    line: idx + 1,
                    reason: format!("expected `x, y, half_width`, got `{line}`"),
                });
            }
            let mut vals = [0.0f64; 3];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| Error::TrackParse {
                    line: idx + 1,
                    reason: format!("not a number: `{f}`"),
                })?;
            }
            points.push((vals[0], vals[1]));
            widths.push(vals[2]);
        }
        let parsed = Self::from_points(points, widths);
        // Surface invariant violations as parse errors with a line count of 0
        // (structural, not tied to one line).
        parsed.map_err(|e| match e {
            Error::TrackInvalid { reason } => Error::TrackParse { line: 0, reason },
            other => other,
        })
    }

    pub fn require_closed(&self) -> Result<()> {
        if self.closed {
            Ok(())
        } else {
            Err(Error::TrackInvalid {
                reason: "track must be a closed loop".into(),
            })
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        self.points[i]
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    fn num_segments(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    /// Centerline position and forward tangent at arclength `s`.
    pub fn sample(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        let s = if self.closed {
            s.rem_euclid(self.total_length)
        } else {
            s.clamp(0.0, self.total_length)
        };
        let n = self.num_segments();
        // cum_arclength is sorted; binary search for the containing segment.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.cum_arclength[mid] <= s {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let i = lo;
        let a = self.points[i];
        let b = self.points[(i + 1) % self.points.len()];
        let len = dist(a, b);
        let t = if len > 0.0 {
            (s - self.cum_arclength[i]) / len
        } else {
            0.0
        };
        let pos = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        let tangent = ((b.0 - a.0) / len, (b.1 - a.1) / len);
        (pos, tangent)
    }

    /// Nearest-segment projection of `pos` onto the centerline.
    pub fn project(&self, pos: (f64, f64)) -> TrackProjection {
        let n = self.num_segments();
        self.best_in(pos, (0..n).collect::<Vec<_>>().into_iter())
    }

    /// Projection restricted to a window around `hint`; falls back to the
    /// full scan when the winner sits on the window edge (the body may have
    /// moved further than expected).
    pub fn project_hinted(&self, pos: (f64, f64), hint: usize) -> TrackProjection {
        let n = self.num_segments();
        if n <= 2 * HINT_WINDOW + 1 {
            return self.project(pos);
        }
        let window = (0..=2 * HINT_WINDOW)
            .map(|off| (hint + n + off - HINT_WINDOW) % n);
        let local = self.best_in(pos, window);
        let edge_lo = (hint + n - HINT_WINDOW) % n;
        let edge_hi = (hint + HINT_WINDOW) % n;
        if local.segment == edge_lo || local.segment == edge_hi {
            self.project(pos)
        } else {
            local
        }
    }

    fn best_in(&self, pos: (f64, f64), segments: impl Iterator<Item = usize>) -> TrackProjection {
        let np = self.points.len();
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for i in segments {
            let a = self.points[i];
            let b = self.points[(i + 1) % np];
            let (t, d2) = point_segment(pos, a, b);
            if d2 < best.0 {
                best = (d2, i, t);
            }
        }
        let (_, i, t) = best;
        let a = self.points[i];
        let b = self.points[(i + 1) % np];
        let seg_len = dist(a, b);
        let proj = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        let dir = ((b.0 - a.0) / seg_len, (b.1 - a.1) / seg_len);
        let off = (pos.0 - proj.0, pos.1 - proj.1);
        let cross = dir.0 * off.1 - dir.1 * off.0;
        let dist_abs = (off.0 * off.0 + off.1 * off.1).sqrt();
        let d = if cross >= 0.0 { dist_abs } else { -dist_abs };
        let mut s = self.cum_arclength[i] + t * seg_len;
        // Canonicalize the closure vertex: the end of the last segment is
        // the same point as s = 0.
        if self.closed && s >= self.total_length {
            s -= self.total_length;
        }
        let w0 = self.half_widths[i];
        let w1 = self.half_widths[(i + 1) % np];
        let width = w0 + t * (w1 - w0);
        TrackProjection {
            d,
            s,
            inside: dist_abs <= width,
            segment: i,
        }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Returns (parameter t in [0,1], squared distance) of the closest point on
/// segment ab to p.
fn point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 > 0.0 {
        ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = (a.0 + t * ab.0, a.1 + t * ab.1);
    let dx = p.0 - q.0;
    let dy = p.1 - q.1;
    (t, dx * dx + dy * dy)
}

/// Generate a counterclockwise circle track; handy for tests.
pub fn circle_track(radius: f64, half_width: f64, n: usize) -> Track {
    let mut pts = Vec::with_capacity(n + 1);
    for i in 0..n {
        let th = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
        pts.push((radius * th.cos(), radius * th.sin()));
    }
    pts.push(pts[0]);
    let widths = vec![half_width; pts.len()];
    Track::from_points(pts, widths).unwrap()
}
