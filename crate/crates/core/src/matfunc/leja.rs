use std::cell::RefCell;
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::rc::Rc;
use std::sync::Arc;

use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::linalg::{dense_phi_vector, DenseMatrix, LinearOperator, SpectralBounds, StateVector};
use crate::perfmodel::OpCounter;

use super::Attempt;

pub const DEFAULT_LEJA_POINTS: usize = 128;
pub const DEFAULT_GRID_RESOLUTION: usize = 100_001;

static DEFAULT_SEQUENCE: Lazy<Arc<LejaSequence>> = Lazy::new(|| {
    Arc::new(
        generate_leja_points(DEFAULT_LEJA_POINTS, DEFAULT_GRID_RESOLUTION)
            .expect("default Leja parameters are valid"),
    )
});

/// Shared default sequence of 128 points.
pub fn default_leja_points() -> Arc<LejaSequence> {
    Arc::clone(&DEFAULT_SEQUENCE)
}

/// Nested Leja points on `[-2, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LejaSequence {
    points: Vec<f64>,
}

impl LejaSequence {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidRequest("empty Leja sequence".into()));
        }
        if let Some(p) = points.iter().find(|p| !(p.abs() <= 2.0)) {
            return Err(Error::InvalidRequest(format!(
                "Leja point {p} outside [-2, 2]"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// One point per line, 17 significant digits.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        for p in &self.points {
            writeln!(w, "{p:.16e}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl std::io::Read) -> Result<Self> {
        let mut points = Vec::new();
        for line in BufReader::new(r).lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Io(format!("bad Leja point line {t:?}")))?;
            points.push(v);
        }
        Self::from_points(points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

/// Greedy Leja selection on a uniform candidate grid over `[-2, 2]`.
///
/// The sequence starts with `2, -2, 0`; every further point maximizes the
/// product of distances to all earlier points, tracked as a sum of logs.
/// Ties keep the leftmost candidate.
pub fn generate_leja_points(count: usize, grid_resolution: usize) -> Result<LejaSequence> {
    if count == 0 {
        return Err(Error::InvalidRequest(
            "Leja point count must be positive".into(),
        ));
    }
    if grid_resolution < 10 * count || grid_resolution < 2 {
        return Err(Error::InvalidRequest(format!(
            "grid resolution {grid_resolution} below 10 x {count}"
        )));
    }
    let last = (grid_resolution - 1) as f64;
    let grid: Vec<f64> = (0..grid_resolution)
        .map(|i| -2.0 + 4.0 * i as f64 / last)
        .collect();
    let mut logsum = vec![0.0_f64; grid.len()];
    let mut points = Vec::with_capacity(count);
    let add = |x: f64, points: &mut Vec<f64>, logsum: &mut [f64]| {
        points.push(x);
        for (ls, g) in logsum.iter_mut().zip(&grid) {
            *ls += (g - x).abs().ln();
        }
    };
    for &x in [2.0, -2.0, 0.0].iter().take(count) {
        add(x, &mut points, &mut logsum);
    }
    while points.len() < count {
        let (best, _) =
            logsum
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| {
                    if v > acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                });
        let x = grid[best];
        add(x, &mut points, &mut logsum);
    }
    LejaSequence::from_points(points)
}

/// Newton divided differences of `z -> phi_p(shift + scale z)` on `points`.
///
/// Uses the first column of `phi_p(shift I + scale Z)` where `Z` is lower
/// bidiagonal with the points on the diagonal and ones below it.
pub fn divided_differences(points: &[f64], p: usize, shift: f64, scale: f64) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidRequest("no interpolation points".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicatePoint(w[0]));
    }
    let k = points.len();
    let mut m = DenseMatrix::zeros(k, k);
    for (i, &x) in points.iter().enumerate() {
        m[(i, i)] = shift + scale * x;
        if i > 0 {
            m[(i, i - 1)] = scale;
        }
    }
    let mut e1 = vec![0.0; k];
    e1[0] = 1.0;
    dense_phi_vector(&m, p, &e1)
}

/// [`divided_differences`] for the exponential.
pub fn divided_differences_exp(points: &[f64], scale: f64) -> Result<Vec<f64>> {
    divided_differences(points, 0, 0.0, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct DdKey {
    p: usize,
    sigma: u64,
    center: u64,
    gamma: u64,
    count: usize,
}

const CACHE_LIMIT: usize = 256;

/// Divided-difference tables keyed by `(p, substep, center, width)`.
#[derive(Debug, Default)]
pub(crate) struct DdCache {
    map: RefCell<HashMap<DdKey, Rc<Vec<f64>>>>,
}

impl DdCache {
    fn get(
        &self,
        points: &[f64],
        p: usize,
        sigma: f64,
        center: f64,
        gamma: f64,
    ) -> Result<Rc<Vec<f64>>> {
        let key = DdKey {
            p,
            sigma: sigma.to_bits(),
            center: center.to_bits(),
            gamma: gamma.to_bits(),
            count: points.len(),
        };
        if let Some(d) = self.map.borrow().get(&key) {
            return Ok(Rc::clone(d));
        }
        let d = Rc::new(divided_differences(
            points,
            p,
            sigma * center,
            sigma * gamma,
        )?);
        let mut map = self.map.borrow_mut();
        if map.len() >= CACHE_LIMIT {
            map.clear();
        }
        map.insert(key, Rc::clone(&d));
        Ok(d)
    }
}

/// Interpolation center and quarter width for a spectral box. Only the real
/// extent is used.
pub(crate) fn interval_params(bounds: &SpectralBounds) -> (f64, f64) {
    let c = bounds.center();
    let floor = 1e-8 * c.abs().max(1.0);
    (c, bounds.quarter_width().max(floor))
}

/// One unsplit Newton-Leja evaluation of `phi_p(sigma A) v`.
///
/// Stops once the two newest terms `|d_K| ||r_K||` are both below `tol`, so a
/// single small term between larger ones does not end the series. Gives up
/// when the point budget runs out, or when some term is so large that
/// cancellation alone would exceed `tol`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn attempt<A: LinearOperator + ?Sized>(
    op: &A,
    p: usize,
    sigma: f64,
    v: &[f64],
    tol: f64,
    bounds: &SpectralBounds,
    points: &[f64],
    cache: &DdCache,
    counter: &OpCounter,
) -> Result<Attempt> {
    let (c, gamma) = interval_params(bounds);
    let vnorm = counter.norm(v)?;
    if vnorm == 0.0 {
        return Ok(Attempt {
            y: Some(StateVector::zeros(v.len())),
            applies: 0,
            estimate: 0.0,
        });
    }
    let dd = cache.get(points, p, sigma, c, gamma)?;
    let mut y = counter.scale(dd[0], v)?;
    let mut r = StateVector::from(v.to_vec());
    let mut max_term = dd[0].abs() * vnorm;
    let mut applies = 0;
    let mut estimate = f64::INFINITY;
    let mut previous: f64;
    for j in 0..points.len() - 1 {
        let ar = op.apply(&r, counter)?;
        applies += 1;
        // r <- ((A - c) r) / gamma - xi_j r
        counter.axpby(-(c / gamma + points[j]), &mut r, 1.0 / gamma, &ar)?;
        counter.axpy(dd[j + 1], &r, &mut y)?;
        previous = estimate;
        estimate = dd[j + 1].abs() * counter.norm(&r)?;
        max_term = max_term.max(estimate);
        if !estimate.is_finite() {
            break;
        }
        if estimate <= tol && previous <= tol {
            return Ok(Attempt {
                y: Some(y),
                applies,
                estimate,
            });
        }
        if max_term * f64::EPSILON > tol {
            break;
        }
    }
    Ok(Attempt {
        y: None,
        applies,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixed_start_and_range() {
        let seq = generate_leja_points(40, 4001).unwrap();
        assert_eq!(&seq.points()[..3], &[2.0, -2.0, 0.0]);
        assert!(seq.points().iter().all(|p| p.abs() <= 2.0));
        let mut s = seq.points().to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(generate_leja_points(10, 50).is_err());
        assert!(generate_leja_points(0, 50).is_err());
    }

    #[test]
    fn fourth_point_matches_brute_force() {
        let seq = generate_leja_points(4, 100_001).unwrap();
        let x4 = seq.points()[3];
        let f = |x: f64| (x * (4.0 - x * x)).abs();
        // brute force over a finer grid
        let n = 1_000_001;
        let best = (0..n)
            .map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64)
            .map(f)
            .fold(0.0, f64::max);
        assert!((f(x4) - best).abs() < 1e-8, "{} vs {}", f(x4), best);
        assert!((x4.abs() - 2.0 / 3f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn greedy_property_holds() {
        let seq = generate_leja_points(12, 2001).unwrap();
        let pts = seq.points();
        for k in 3..pts.len() {
            let logprod = |x: f64| pts[..k].iter().map(|q| (x - q).abs().ln()).sum::<f64>();
            let chosen = logprod(pts[k]);
            for i in 0..2001 {
                let x = -2.0 + 4.0 * i as f64 / 2000.0;
                assert!(logprod(x) <= chosen + 1e-12);
            }
        }
    }

    #[test]
    fn dd_examples() {
        let d = divided_differences_exp(&[0.0], 1.0).unwrap();
        assert_relative_eq!(d[0], 1.0, epsilon = 1e-15);
        let d = divided_differences_exp(&[2.0, -2.0], 1.0).unwrap();
        let want = (2f64.exp() - (-2f64).exp()) / 4.0;
        assert_relative_eq!(d[1], want, max_relative = 1e-13);
        assert_relative_eq!(want, 1.813430204, epsilon = 1e-9);
        assert!(matches!(
            divided_differences_exp(&[1.0, 0.5, 1.0], 1.0),
            Err(Error::DuplicatePoint(_))
        ));
    }

    #[test]
    fn persistence_round_trip() {
        let seq = generate_leja_points(16, 1601).unwrap();
        let mut buf = Vec::new();
        seq.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 16);
        let back = LejaSequence::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, seq);
    }
}
