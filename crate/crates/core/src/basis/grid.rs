//! Quadrature grids and horizontal transform tables.
//!
//! Horizontal directions use equispaced points with uniform weights, which
//! integrate trigonometric polynomials below the grid frequency exactly.
//! The vertical direction uses Gauss-Legendre points on (0,1); the grid is
//! clustered towards the walls and integrates the polynomial Stokes
//! profiles exactly and the trigonometric profiles to machine accuracy at
//! the resolutions used here.

use ndarray::Array2;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // ascending order
    xs.reverse();
    ws.reverse();
    (xs, ws)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Horizontal modal column layout: column 0 is the constant mode, and for
/// `m = 1..=nh` column `2m-1` is the cosine and column `2m` the sine mode.
pub fn column_count(nh: usize) -> usize {
    2 * nh + 1
}

/// Column index of the signed horizontal index (`m > 0` cosine, `m < 0`
/// sine, `0` constant).
pub fn column_of(m: i32) -> usize {
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => (2 * m - 1) as usize,
        std::cmp::Ordering::Less => (-2 * m) as usize,
    }
}

/// Signed index encoded by a column.
pub fn signed_of(col: usize) -> i32 {
    if col == 0 {
        0
    } else if col % 2 == 1 {
        ((col + 1) / 2) as i32
    } else {
        -((col / 2) as i32)
    }
}

/// Shared discretization of one domain: physical grid, quadrature weights
/// and dense synthesis/analysis tables for the horizontal factors.
#[derive(Debug)]
pub struct Discretization {
    pub ax: f64,
    pub ay: f64,
    pub nh: usize,
    /// Horizontal grid sizes (dealiased for triple products).
    pub gx: usize,
    pub gy: usize,
    /// Vertical grid size.
    pub gz: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Gauss-Legendre nodes on (0,1), ascending.
    pub zs: Vec<f64>,
    /// Vertical quadrature weights.
    pub wz: Vec<f64>,
    /// Uniform horizontal weights.
    pub wx: f64,
    pub wy: f64,
    /// `synth_x[i][c]` is the value of horizontal function `c` at `xs[i]`.
    pub synth_x: Array2<f64>,
    pub synth_y: Array2<f64>,
    /// Analysis tables `anal = synth^T * weight` so that
    /// `anal * samples` produces modal coefficients.
    pub anal_x: Array2<f64>,
    pub anal_y: Array2<f64>,
    /// `d/dx` maps modal column `c` to column `dx_map[c]` with factor
    /// `dx_scale[c]`.
    pub dx_map: Vec<usize>,
    pub dx_scale: Vec<f64>,
    pub dy_map: Vec<usize>,
    pub dy_scale: Vec<f64>,
}

impl Discretization {
    pub fn new(ax: f64, ay: f64, nh: usize, mv: usize) -> Self {
        let p = column_count(nh);
        let gx = 3 * nh + 2;
        let gy = 3 * nh + 2;
        let gz = (5 * mv + 1) / 2;
        let xs: Vec<f64> = (0..gx).map(|i| i as f64 * ax / gx as f64).collect();
        let ys: Vec<f64> = (0..gy).map(|i| i as f64 * ay / gy as f64).collect();
        let (zg, wg) = gauss_legendre(gz);
        let zs: Vec<f64> = zg.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let wz: Vec<f64> = wg.iter().map(|w| 0.5 * w).collect();

        let fill = |pts: &[f64], period: f64| -> Array2<f64> {
            let mut m = Array2::zeros((pts.len(), p));
            for (i, &t) in pts.iter().enumerate() {
                m[[i, 0]] = 1.0 / period.sqrt();
                for k in 1..=nh {
                    let w = 2.0 * PI * k as f64 / period;
                    let amp = (2.0 / period).sqrt();
                    m[[i, 2 * k - 1]] = amp * (w * t).cos();
                    m[[i, 2 * k]] = amp * (w * t).sin();
                }
            }
            m
        };
        let synth_x = fill(&xs, ax);
        let synth_y = fill(&ys, ay);
        let wx = ax / gx as f64;
        let wy = ay / gy as f64;
        let anal_x = synth_x.t().to_owned() * wx;
        let anal_y = synth_y.t().to_owned() * wy;

        let deriv = |period: f64| -> (Vec<usize>, Vec<f64>) {
            let mut map = vec![0usize; p];
            let mut scale = vec![0.0; p];
            for k in 1..=nh {
                let w = 2.0 * PI * k as f64 / period;
                map[2 * k - 1] = 2 * k; // cos -> sin
                scale[2 * k - 1] = -w;
                map[2 * k] = 2 * k - 1; // sin -> cos
                scale[2 * k] = w;
            }
            (map, scale)
        };
        let (dx_map, dx_scale) = deriv(ax);
        let (dy_map, dy_scale) = deriv(ay);

        Self {
            ax,
            ay,
            nh,
            gx,
            gy,
            gz,
            xs,
            ys,
            zs,
            wz,
            wx,
            wy,
            synth_x,
            synth_y,
            anal_x,
            anal_y,
            dx_map,
            dx_scale,
            dy_map,
            dy_scale,
        }
    }

    /// Number of modal columns per horizontal direction.
    pub fn columns(&self) -> usize {
        column_count(self.nh)
    }

    /// Total number of physical grid points.
    pub fn grid_len(&self) -> usize {
        self.gx * self.gy * self.gz
    }

    /// Quadrature weight of grid point `(ix, iy, iz)`.
    pub fn weight(&self, iz: usize) -> f64 {
        self.wx * self.wy * self.wz[iz]
    }

    /// Horizontal wavenumber of signed index `m` in x.
    pub fn kx(&self, m: i32) -> f64 {
        2.0 * PI * m.unsigned_abs() as f64 / self.ax
    }

    /// Horizontal wavenumber of signed index `n` in y.
    pub fn ky(&self, n: i32) -> f64 {
        2.0 * PI * n.unsigned_abs() as f64 / self.ay
    }
}
