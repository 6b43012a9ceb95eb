use super::{mean_curvature_field, ChartGrid, GraphHypersurface};
use crate::error::{Error, Result};
use crate::sparse::BandedLu;
use crate::spacetime::GrwSpacetime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the largest interior `|H|` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Central-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, fd_step: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalGraph {
    pub graph: GraphHypersurface,
    pub iterations: usize,
    /// Largest interior `|H|` before each step and after the last one.
    pub residual_history: Vec<f64>,
}

impl MaximalGraph {
    pub fn residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn solve_maximal_graph(ambient: &GrwSpacetime, grid: &ChartGrid, boundary: &[f64]) -> Result<MaximalGraph> {
    solve_maximal_graph_with(ambient, grid, boundary, SolverOptions::default())
}

struct Layout {
    nx: usize,
    interior: Vec<usize>,
    slot: Vec<Option<usize>>,
}

impl Layout {
    fn new(grid: &ChartGrid) -> Self {
        let (nx, ny) = grid.shape();
        let mut interior = Vec::new();
        let mut slot = vec![None; nx * ny];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let v = grid.index(i, j);
                slot[v] = Some(interior.len());
                interior.push(v);
            }
        }
        Self { nx, interior, slot }
    }

    fn bandwidth(&self) -> usize {
        self.nx - 1
    }
}

/// Expands `boundary` into a full height vector: either one value per
/// vertex (interior entries ignored) or one value per boundary vertex in
/// increasing vertex order.
fn boundary_heights(grid: &ChartGrid, boundary: &[f64]) -> Result<Vec<f64>> {
    let n = grid.num_vertices();
    if boundary.len() == n {
        return Ok(boundary.to_vec());
    }
    let bverts = grid.mesh().boundary_vertices();
    if boundary.len() != bverts.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} boundary values or {n} vertex values, got {}",
            bverts.len(),
            boundary.len()
        )));
    }
    let mut u = vec![0.0; n];
    for (&v, &b) in bverts.iter().zip(boundary) {
        u[v] = b;
    }
    Ok(u)
}

/// Five-point harmonic extension of the boundary values.
fn harmonic_extension(grid: &ChartGrid, layout: &Layout, u: &mut [f64]) -> Result<()> {
    let [hx, hy] = grid.spacing();
    let (cx, cy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let n = layout.interior.len();
    let mut trip = Vec::with_capacity(5 * n);
    let mut rhs = vec![0.0; n];
    for (k, &v) in layout.interior.iter().enumerate() {
        trip.push((k, k, 2.0 * (cx + cy)));
        let (i, j) = (v % layout.nx, v / layout.nx);
        for (w, c) in [
            (grid.index(i - 1, j), cx),
            (grid.index(i + 1, j), cx),
            (grid.index(i, j - 1), cy),
            (grid.index(i, j + 1), cy),
        ] {
            match layout.slot[w] {
                Some(l) => trip.push((k, l, -c)),
                None => rhs[k] += c * u[w],
            }
        }
    }
    let lu = BandedLu::factor(n, layout.bandwidth(), layout.bandwidth(), &trip)?;
    for (k, x) in lu.solve(&rhs).into_iter().enumerate() {
        u[layout.interior[k]] = x;
    }
    Ok(())
}

fn interior_residual(st: &GrwSpacetime, grid: &ChartGrid, kappa: f64, layout: &Layout, u: &[f64]) -> Result<Vec<f64>> {
    let h = mean_curvature_field(st, grid, kappa, u)?;
    Ok(layout.interior.iter().map(|&v| h[v]).collect())
}

fn max_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn norm2(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum()
}

/// Damped Newton iteration for `H = 0` on a rectangle patch with Dirichlet
/// data. The Jacobian is built column-wise by central differences over a
/// nine-coloring of the grid, which decouples the 3 × 3 stencils.
pub fn solve_maximal_graph_with(
    ambient: &GrwSpacetime,
    grid: &ChartGrid,
    boundary: &[f64],
    opts: SolverOptions,
) -> Result<MaximalGraph> {
    if grid.is_periodic() {
        return Err(Error::InvalidArgument("the maximal-graph solver needs a patch with boundary".into()));
    }
    let (nx, ny) = grid.shape();
    if nx < 4 || ny < 4 {
        return Err(Error::InvalidArgument("patch needs at least 4 × 4 vertices".into()));
    }
    let layout = Layout::new(grid);
    let mut u = boundary_heights(grid, boundary)?;
    harmonic_extension(grid, &layout, &mut u)?;
    let graph = GraphHypersurface::new(ambient.clone(), grid.clone(), u.clone())?;
    let kappa = graph.kappa_f();

    let n = layout.interior.len();
    let band = layout.bandwidth();
    let mut f = interior_residual(ambient, grid, kappa, &layout, &u)?;
    let mut history = vec![max_norm(&f)];
    let mut iterations = 0;
    while max_norm(&f) >= opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence { iterations, residual: max_norm(&f) });
        }
        let mut trip = Vec::with_capacity(9 * n);
        for color in 0..9 {
            let (ci, cj) = (color % 3, color / 3);
            let cols: Vec<usize> = layout
                .interior
                .iter()
                .copied()
                .filter(|&v| (v % nx) % 3 == ci && (v / nx) % 3 == cj)
                .collect();
            if cols.is_empty() {
                continue;
            }
            let mut up = u.clone();
            let mut dn = u.clone();
            for &v in &cols {
                up[v] += opts.fd_step;
                dn[v] -= opts.fd_step;
            }
            let hp = mean_curvature_field(ambient, grid, kappa, &up)?;
            let hm = mean_curvature_field(ambient, grid, kappa, &dn)?;
            for &v in &cols {
                let col = layout.slot[v].expect("interior vertex");
                let (i, j) = (v % nx, v / nx);
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                            continue;
                        }
                        let w = grid.index(a as usize, b as usize);
                        if let Some(row) = layout.slot[w] {
                            let d = (hp[w] - hm[w]) / (2.0 * opts.fd_step);
                            if d != 0.0 {
                                trip.push((row, col, d));
                            }
                        }
                    }
                }
            }
        }
        let lu = BandedLu::factor(n, band, band, &trip)?;
        let step: Vec<f64> = lu.solve(&f).into_iter().map(|x| -x).collect();
        let f2 = norm2(&f);
        let mut s = 1.0;
        loop {
            if s < 1e-10 {
                return Err(Error::NoConvergence { iterations, residual: max_norm(&f) });
            }
            let mut trial = u.clone();
            for (k, &v) in layout.interior.iter().enumerate() {
                trial[v] += s * step[k];
            }
            match interior_residual(ambient, grid, kappa, &layout, &trial) {
                Ok(ft) if norm2(&ft) <= (1.0 - 2e-4 * s) * f2 => {
                    u = trial;
                    f = ft;
                    break;
                }
                Ok(_) | Err(Error::NotSpacelike { .. }) | Err(Error::OutsideInterval { .. }) => s *= 0.5,
                Err(e) => return Err(e),
            }
        }
        iterations += 1;
        history.push(max_norm(&f));
    }
    let graph = GraphHypersurface::new(ambient.clone(), grid.clone(), u)?;
    Ok(MaximalGraph { graph, iterations, residual_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_gives_flat_graph() {
        let st = GrwSpacetime::minkowski(2).unwrap();
        let grid = ChartGrid::patch(12, 1.0).unwrap();
        let sol = solve_maximal_graph(&st, &grid, &vec![0.0; grid.num_vertices()]).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.graph.heights().iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn boundary_value_count_is_checked() {
        let st = GrwSpacetime::minkowski(2).unwrap();
        let grid = ChartGrid::patch(8, 1.0).unwrap();
        assert!(solve_maximal_graph(&st, &grid, &[0.0; 5]).is_err());
        let nb = grid.mesh().boundary_vertices().len();
        assert!(solve_maximal_graph(&st, &grid, &vec![0.1; nb]).is_ok());
    }
}
