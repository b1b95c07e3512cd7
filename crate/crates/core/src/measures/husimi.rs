use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::model::DensityMatrix;

/// Regular grid of α = re + i·im, row-major with `im` as the slow index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl AlphaGrid {
    /// `n × n` points on [−extent, extent]² (n ≥ 2).
    pub fn square(extent: f64, n: usize) -> Self {
        Self::rect((-extent, extent), (-extent, extent), n, n)
    }

    pub fn rect(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Self {
        let axis = |(lo, hi): (f64, f64), n: usize| -> Vec<f64> {
            if n < 2 {
                return vec![0.5 * (lo + hi)];
            }
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        };
        Self {
            re: axis(re, n_re),
            im: axis(im, n_im),
        }
    }

    pub fn len(&self) -> usize {
        self.re.len() * self.im.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize) -> C64 {
        let n = self.re.len();
        C64::new(self.re[k % n], self.im[k / n])
    }

    fn cell_area(&self) -> f64 {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 0.0 };
        step(&self.re) * step(&self.im)
    }
}

/// Q(α) sampled on a grid, with a flag for points where |α|² exceeds half
/// the photon cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiField {
    pub grid: AlphaGrid,
    pub q: Vec<f64>,
    pub trunc_ok: Vec<bool>,
}

impl HusimiField {
    pub fn max(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// (1/π) Σ Q ΔA, which tends to 1 on a wide fine grid.
    pub fn normalization(&self) -> f64 {
        self.q.iter().sum::<f64>() * self.grid.cell_area() / std::f64::consts::PI
    }

    pub fn all_trunc_ok(&self) -> bool {
        self.trunc_ok.iter().all(|&b| b)
    }
}

/// e^{−|α|²/2} αⁿ/√(n!) for n = 0..dim.
fn coherent_vector(alpha: C64, dim: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        v.push(c);
    }
    v
}

/// Q(α) = ⟨α|ρ_c|α⟩ for a cavity state.
pub fn husimi(rho_c: &DensityMatrix, grid: &AlphaGrid) -> HusimiField {
    let dim = rho_c.dim();
    let m = rho_c.matrix();
    let n_max = (dim - 1) as f64;
    let mut q = Vec::with_capacity(grid.len());
    let mut ok = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let alpha = grid.point(k);
        let v = coherent_vector(alpha, dim);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..dim {
            let mut row = C64::new(0.0, 0.0);
            for i in 0..dim {
                row += v[i].conj() * m[(i, j)];
            }
            acc += row * v[j];
        }
        q.push(acc.re);
        ok.push(alpha.norm_sqr() <= 0.5 * n_max);
    }
    let bad = ok.iter().filter(|&&b| !b).count();
    if bad > 0 {
        log::warn!("{bad} Husimi grid points exceed |α|² ≤ n_max/2");
    }
    HusimiField {
        grid: grid.clone(),
        q,
        trunc_ok: ok,
    }
}

/// A local maximum of Q.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub alpha: C64,
    pub q: f64,
}

/// Local maxima over the 8-neighbourhood above 5% of the global maximum.
/// Maxima that touch (plateaus) are merged into the highest of them.
pub fn detect_modes(field: &HusimiField) -> Vec<Mode> {
    let (nx, ny) = (field.grid.re.len(), field.grid.im.len());
    let at = |x: usize, y: usize| field.q[y * nx + x];
    let threshold = 0.05 * field.max();
    let mut peaks: Vec<(usize, usize)> = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            let v = at(x, y);
            if v <= threshold {
                continue;
            }
            let mut is_max = true;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                    if xx < 0 || yy < 0 || xx >= nx as i64 || yy >= ny as i64 {
                        continue;
                    }
                    if at(xx as usize, yy as usize) > v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                peaks.push((x, y));
            }
        }
    }
    // merge peaks within one cell, keeping the first (row-major) of equal height
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for p in peaks {
        match merged
            .iter_mut()
            .find(|m| m.0.abs_diff(p.0) <= 1 && m.1.abs_diff(p.1) <= 1)
        {
            Some(m) if at(p.0, p.1) > at(m.0, m.1) => *m = p,
            Some(_) => {}
            None => merged.push(p),
        }
    }
    merged
        .into_iter()
        .map(|(x, y)| Mode {
            alpha: C64::new(field.grid.re[x], field.grid.im[y]),
            q: at(x, y),
        })
        .collect()
}
