use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Horizon covered by a plan spline, seconds.
pub const PLAN_HORIZON_S: f64 = 5.0;

/// Per-axis degree-5 polynomials `Σ a_k t^k`, `t ∈ [0, 5]` s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuinticSpline {
    pub x: [f64; 6],
    pub y: [f64; 6],
}

fn horner(c: &[f64; 6], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

fn derivative(c: &[f64; 6]) -> [f64; 6] {
    let mut d = [0.0; 6];
    for k in 1..6 {
        d[k - 1] = k as f64 * c[k];
    }
    d
}

impl QuinticSpline {
    pub fn position(&self, t: f64) -> Point {
        Point::new(horner(&self.x, t), horner(&self.y, t))
    }

    pub fn velocity(&self, t: f64) -> Point {
        Point::new(horner(&derivative(&self.x), t), horner(&derivative(&self.y), t))
    }

    pub fn acceleration(&self, t: f64) -> Point {
        let (dx, dy) = (derivative(&derivative(&self.x)), derivative(&derivative(&self.y)));
        Point::new(horner(&dx, t), horner(&dy, t))
    }
}

/// The unique per-axis quintic interpolant through six `(t, point)` knots.
pub fn fit_quintic(knots: &[(f64, Point)]) -> Result<QuinticSpline> {
    if knots.len() != 6 {
        return Err(Error::Invalid(format!("quintic fit needs 6 knots, got {}", knots.len())));
    }
    for (i, a) in knots.iter().enumerate() {
        if !a.0.is_finite() || !a.1.is_finite() {
            return Err(Error::Invalid("non-finite knot".into()));
        }
        if knots[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::Singular(format!("duplicate knot time {}", a.0)));
        }
    }
    let vandermonde = SMatrix::<f64, 6, 6>::from_fn(|r, c| knots[r].0.powi(c as i32));
    let lu = vandermonde.lu();
    let solve = |values: SVector<f64, 6>| -> Result<[f64; 6]> {
        let c = lu
            .solve(&values)
            .ok_or_else(|| Error::Singular("knot system is singular".into()))?;
        Ok([c[0], c[1], c[2], c[3], c[4], c[5]])
    };
    Ok(QuinticSpline {
        x: solve(SVector::from_fn(|r, _| knots[r].1.x))?,
        y: solve(SVector::from_fn(|r, _| knots[r].1.y))?,
    })
}

/// Fits through the current position (t = 0) and five 1 Hz future waypoints.
pub fn fit_waypoints(waypoints: &[Point; 6]) -> Result<QuinticSpline> {
    let knots: Vec<_> = waypoints.iter().enumerate().map(|(i, &p)| (i as f64, p)).collect();
    fit_quintic(&knots)
}

/// Evaluates at `t = k / hz` for `k = 1 ..= 5 hz`.
pub fn sample_spline(spline: &QuinticSpline, hz: u32) -> Vec<Point> {
    let n = (PLAN_HORIZON_S * f64::from(hz)).round() as u32;
    (1..=n).map(|k| spline.position(f64::from(k) / f64::from(hz))).collect()
}

/// The 1 Hz knots of a 5 Hz, 25-point future: `current` plus frames 5, 10, …, 25.
pub fn downsample_to_knots(current: Point, future: &[Point]) -> Result<[Point; 6]> {
    if future.len() != 25 {
        return Err(Error::Invalid(format!("expected 25 future points, got {}", future.len())));
    }
    Ok([current, future[4], future[9], future[14], future[19], future[24]])
}
