//! Level curves of `H̃` in the `(θ, p_θ)` plane by marching squares.

use std::collections::HashMap;

use serde::Serialize;

use super::{hamiltonian, ReducedState};
use crate::coefficients::Coefficients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub theta: (f64, f64),
    pub p_theta: (f64, f64),
    pub n_theta: usize,
    pub n_p: usize,
}

impl PhaseGrid {
    pub fn new(theta: (f64, f64), p_theta: (f64, f64), n_theta: usize, n_p: usize) -> Self {
        Self {
            theta,
            p_theta,
            n_theta,
            n_p,
        }
    }

    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.theta.1 - self.theta.0) / (self.n_theta - 1) as f64,
            (self.p_theta.1 - self.p_theta.0) / (self.n_p - 1) as f64,
        )
    }

    fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let (dt, dp) = self.spacing();
        (self.theta.0 + dt * i as f64, self.p_theta.0 + dp * j as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub level: f64,
    /// Polylines of `(θ, p_θ)` points; closed ones repeat their first point.
    pub polylines: Vec<Vec<(f64, f64)>>,
}

/// Grid edge: `(i, j, vertical)`. A horizontal edge joins `(i, j)`–`(i+1, j)`,
/// a vertical one `(i, j)`–`(i, j+1)`.
type EdgeId = (usize, usize, bool);

pub fn phase_portrait(coeffs: &Coefficients, ell: f64, levels: &[f64], grid: &PhaseGrid) -> Result<Vec<Contour>> {
    if grid.n_theta < 2 || grid.n_p < 2 {
        return Err(Error::InvalidArgument(format!(
            "phase grid {}x{} must be at least 2x2",
            grid.n_theta, grid.n_p
        )));
    }
    if !(grid.theta.1 > grid.theta.0 && grid.p_theta.1 > grid.p_theta.0) {
        return Err(Error::InvalidArgument("phase grid ranges must be increasing".into()));
    }
    let (nt, np) = (grid.n_theta, grid.n_p);
    let mut values = vec![f64::NAN; nt * np];
    for i in 0..nt {
        for j in 0..np {
            let (th, p) = grid.node(i, j);
            if let Ok(h) = hamiltonian(coeffs, &ReducedState::new(th, p, ell)) {
                values[i * np + j] = h;
            }
        }
    }
    Ok(levels
        .iter()
        .map(|&level| Contour {
            level,
            polylines: trace(grid, &values, level),
        })
        .collect())
}

fn trace(grid: &PhaseGrid, values: &[f64], level: f64) -> Vec<Vec<(f64, f64)>> {
    let np = grid.n_p;
    let v = |i: usize, j: usize| values[i * np + j];
    let above = |x: f64| x >= level;

    let crossing = |e: EdgeId| -> (f64, f64) {
        let (i, j, vertical) = e;
        let (i2, j2) = if vertical { (i, j + 1) } else { (i + 1, j) };
        let (a, b) = (v(i, j), v(i2, j2));
        let s = (level - a) / (b - a);
        let (p0, p1) = (grid.node(i, j), grid.node(i2, j2));
        (p0.0 + s * (p1.0 - p0.0), p0.1 + s * (p1.1 - p0.1))
    };

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for i in 0..grid.n_theta - 1 {
        for j in 0..np - 1 {
            let c = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            if c.iter().any(|x| x.is_nan()) {
                continue;
            }
            let bottom = (i, j, false);
            let right = (i + 1, j, true);
            let top = (i, j + 1, false);
            let left = (i, j, true);
            let edges = [bottom, right, top, left];
            let cut: Vec<EdgeId> = (0..4)
                .filter(|&k| above(c[k]) != above(c[(k + 1) % 4]))
                .map(|k| edges[k])
                .collect();
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let centre = 0.25 * c.iter().sum::<f64>();
                    if above(centre) == above(c[0]) {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }

    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    let walk = |start: usize, from: EdgeId, used: &mut Vec<bool>| -> Vec<EdgeId> {
        let mut chain = Vec::new();
        let mut seg = start;
        let mut at = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next_edge = if a == at { b } else { a };
            chain.push(next_edge);
            match by_edge[&next_edge].iter().find(|&&k| !used[k]) {
                Some(&k) => {
                    seg = k;
                    at = next_edge;
                }
                None => break,
            }
        }
        chain
    };

    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, _) = segments[k];
        // Walk both directions from the seed segment, then join.
        let forward = walk(k, a, &mut used);
        let backward = match by_edge[&a].iter().find(|&&s| !used[s]) {
            Some(&s) => walk(s, a, &mut used),
            None => Vec::new(),
        };
        let mut chain: Vec<EdgeId> = backward.into_iter().rev().collect();
        chain.push(a);
        chain.extend(forward);
        lines.push(chain.into_iter().map(crossing).collect());
    }
    lines
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::body::BodyParams;
    use crate::reduced::find_equilibria;
    use crate::surface::SurfaceProfile;

    fn torus() -> Coefficients {
        let body = BodyParams::new(1.0, 0.65625, 0.6875, 1.0).unwrap();
        Coefficients::from_profile(&SurfaceProfile::torus(1.0, 0.5), body).unwrap()
    }

    fn grid() -> PhaseGrid {
        PhaseGrid::new((0.05, PI - 0.05), (-2.5, 2.5), 201, 201)
    }

    #[test]
    fn circle_is_traced_closed() {
        let g = PhaseGrid::new((-1.0, 1.0), (-1.0, 1.0), 41, 41);
        let values: Vec<f64> = (0..41)
            .flat_map(|i| (0..41).map(move |j| (i, j)))
            .map(|(i, j)| {
                let (x, y) = g.node(i, j);
                x * x + y * y
            })
            .collect();
        let lines = trace(&g, &values, 0.25);
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        assert_eq!(l.first(), l.last());
        for &(x, y) in l {
            assert!(((x * x + y * y).sqrt() - 0.5).abs() < 2e-3);
        }
    }

    #[test]
    fn contour_points_sit_on_level() {
        let c = torus();
        let level = 1.2;
        let out = phase_portrait(&c, 0.1, &[level], &grid()).unwrap();
        let (dt, dp) = grid().spacing();
        let h = |th: f64, p: f64| hamiltonian(&c, &ReducedState::new(th, p, 0.1)).unwrap();
        let mut count = 0;
        for line in &out[0].polylines {
            for &(th, p) in line {
                // Linear interpolation error: at most |H''| Δ²/8 along an edge.
                let e = 1e-4;
                let h_tt = (h(th + e, p) - 2.0 * h(th, p) + h(th - e, p)) / (e * e);
                let h_pp = (h(th, p + e) - 2.0 * h(th, p) + h(th, p - e)) / (e * e);
                let bound = h_tt.abs() * dt * dt + h_pp.abs() * dp * dp + 1e-12;
                assert!((h(th, p) - level).abs() < bound, "{} vs {level}", h(th, p));
                count += 1;
            }
        }
        assert!(count > 50);
    }

    #[test]
    fn minimum_level_degenerates() {
        let c = torus();
        let eq = find_equilibria(&c, 0.1)[0];
        let level = hamiltonian(&c, &ReducedState::new(eq.theta, 0.0, 0.1)).unwrap();
        let out = phase_portrait(&c, 0.1, &[level], &grid()).unwrap();
        let (dt, dp) = grid().spacing();
        for line in &out[0].polylines {
            for &(th, p) in line {
                assert!((th - eq.theta).abs() <= 2.0 * dt && p.abs() <= 2.0 * dp);
            }
        }
    }

    #[test]
    fn separatrix_splits_regimes() {
        let c = torus();
        let sep = hamiltonian(&c, &ReducedState::new(FRAC_PI_2, 0.0, 0.1)).unwrap();
        let out = phase_portrait(&c, 0.1, &[sep - 0.05, sep + 0.05], &grid()).unwrap();
        let crosses =
            |line: &Vec<(f64, f64)>| line.iter().any(|p| p.0 < FRAC_PI_2) && line.iter().any(|p| p.0 > FRAC_PI_2);
        let below = &out[0].polylines;
        assert_eq!(below.len(), 2);
        assert!(below.iter().all(|l| !crosses(l) && l.first() == l.last()));
        let above = &out[1].polylines;
        assert!(above.iter().any(crosses));
    }

    #[test]
    fn rejects_tiny_grid() {
        let g = PhaseGrid::new((0.1, 1.0), (-1.0, 1.0), 1, 5);
        assert!(phase_portrait(&torus(), 0.1, &[1.0], &g).is_err());
    }
}
