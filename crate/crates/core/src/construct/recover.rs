use rayon::prelude::*;

use super::pde::{GField, SolutionGrid, Symbol};
use super::ConstructError;

/// Integrates `g_x = E(−f_y, f_x)`, `g_y = E(f_x, f_y)` along row 0 and then
/// up and down each column, anchored at `g = 0` on the row-0 node nearest
/// `x = 0`. The per-cell loop integral of `(g_x, g_y)` over the cell area is
/// the discrete residual of the construction equation.
pub fn recover_g(sol: &SolutionGrid) -> Result<SolutionGrid, ConstructError> {
    let sym = Symbol::new(sol.c, sol.branch);
    let (nx, ny) = (sol.nx, sol.ny);
    let n = nx * ny;
    let m = sol.scale;
    let mut gx = vec![f64::NAN; n];
    let mut gy = vec![f64::NAN; n];
    for k in 0..n {
        if sol.f[k].is_finite() {
            let (a, b) = sym.g_gradient(sol.fx[k] / m, sol.fy[k] / m);
            gx[k] = a * m;
            gy[k] = b * m;
        }
    }
    let Some((lo, hi)) = sol.windows[sol.row0] else {
        return Err(ConstructError::EmptySolution);
    };
    let r0 = sol.row0;
    let mut base = vec![f64::NAN; nx];
    base[lo] = 0.0;
    for i in lo + 1..=hi {
        base[i] = base[i - 1] + sol.hx * (gx[r0 * nx + i] + gx[r0 * nx + i - 1]) / 2.0;
    }
    let anchor = ((-sol.x0 / sol.hx).round().max(0.0) as usize).clamp(lo, hi);
    let shift = base[anchor];
    base.iter_mut().for_each(|g| *g -= shift);

    let columns: Vec<Vec<f64>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let mut col = vec![f64::NAN; ny];
            if !base[i].is_finite() {
                return col;
            }
            col[r0] = base[i];
            let mut r = r0 + 1;
            while r < ny && sol.in_window(r, i) {
                col[r] = col[r - 1] + sol.hy * (gy[r * nx + i] + gy[(r - 1) * nx + i]) / 2.0;
                r += 1;
            }
            let mut r = r0;
            while r > 0 && sol.in_window(r - 1, i) {
                col[r - 1] = col[r] - sol.hy * (gy[(r - 1) * nx + i] + gy[r * nx + i]) / 2.0;
                r -= 1;
            }
            col
        })
        .collect();
    let mut g = vec![f64::NAN; n];
    for (i, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            g[r * nx + i] = *v;
        }
    }

    let (cx, cy) = (nx.saturating_sub(1), ny.saturating_sub(1));
    let mut loop_defect = vec![f64::NAN; cx * cy];
    let mut masked = 0;
    let mut max_defect: f64 = 0.0;
    for r in 0..cy {
        for i in 0..cx {
            let (a, b, c, d) = (
                r * nx + i,
                r * nx + i + 1,
                (r + 1) * nx + i,
                (r + 1) * nx + i + 1,
            );
            let vals = [gx[a], gx[b], gx[c], gx[d], gy[a], gy[b], gy[c], gy[d]];
            let all_in = [a, b, c, d].iter().all(|&k| sol.f[k].is_finite());
            if !all_in {
                continue;
            }
            if vals.iter().any(|v| !v.is_finite()) {
                masked += 1;
                continue;
            }
            let circ = sol.hx * (gx[a] + gx[b]) / 2.0 + sol.hy * (gy[b] + gy[d]) / 2.0
                - sol.hx * (gx[c] + gx[d]) / 2.0
                - sol.hy * (gy[a] + gy[c]) / 2.0;
            let curl = circ / (sol.hx * sol.hy);
            loop_defect[r * cx + i] = curl;
            max_defect = max_defect.max(curl.abs());
        }
    }
    let mut out = sol.clone();
    out.g = Some(GField {
        g,
        gx,
        gy,
        loop_defect,
        max_loop_defect: max_defect,
        masked_cells: masked,
    });
    Ok(out)
}
