use crate::error::{Error, Result};
use crate::stats::RandomSource;

use super::config::{p_for_index, BetaType, CScale};

/// A fixed design: raw columns and the same columns centred (intercept
/// partialled out).
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub columns: Vec<Vec<f64>>,
    pub centred: Vec<Vec<f64>>,
}

impl Design {
    pub fn new(columns: Vec<Vec<f64>>) -> Self {
        let centred = columns
            .iter()
            .map(|c| {
                let mu = c.iter().sum::<f64>() / c.len() as f64;
                c.iter().map(|v| v - mu).collect()
            })
            .collect();
        Self { columns, centred }
    }

    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    /// `X β` on the raw columns.
    pub fn mean_response(&self, beta: &[f64]) -> Vec<f64> {
        let mut mu = vec![0.0; self.n()];
        for (col, &b) in self.columns.iter().zip(beta) {
            if b != 0.0 {
                mu.iter_mut().zip(col).for_each(|(acc, &x)| *acc += b * x);
            }
        }
        mu
    }
}

/// `n` rows from `N(0, Σ)` with `Σ_ij = ρ^|i-j|`, via the AR(1) recursion
/// `x_j = ρ x_{j-1} + √(1-ρ²) ε_j`. Returned column-major.
pub fn gen_design(m: usize, n: usize, rho: f64, source: RandomSource) -> Result<Vec<Vec<f64>>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidConfig(format!("|rho| = {} must be < 1", rho.abs())));
    }
    let innov = (1.0 - rho * rho).sqrt();
    let mut draws = source.normals();
    let mut cols = vec![vec![0.0; n]; m];
    for i in 0..n {
        let mut prev = 0.0;
        for (j, col) in cols.iter_mut().enumerate() {
            let e = draws.next().unwrap();
            let x = if j == 0 { e } else { rho * prev + innov * e };
            col[i] = x;
            prev = x;
        }
    }
    Ok(cols)
}

/// Coefficient shape before scaling, length `p`. `sparse` selects the
/// uniform draw used by the harmonic shape at `p = √m`.
pub fn unit_beta(beta_type: BetaType, m: usize, p: usize, sparse: bool, source: RandomSource) -> Vec<f64> {
    match beta_type {
        BetaType::InverseSqrt => (1..=p).map(|i| 1.0 / (i as f64).sqrt()).collect(),
        BetaType::Harmonic if sparse => {
            let mut s = source.normals();
            (0..p).map(|_| s.uniform(1.0 / m as f64, 1.0)).collect()
        }
        BetaType::Harmonic => (1..=p).map(|i| p as f64 / (m as f64 * i as f64)).collect(),
        BetaType::Constant => vec![1.0; p],
    }
}

/// `c = √( (R²/(1-R²)) · n / (β_u' X'X β_u) )`, with `X` the centred design.
pub fn solve_c_for_r2(centred: &[Vec<f64>], unit: &[f64], r2: f64, n: usize) -> Result<f64> {
    let n_rows = centred.first().map_or(0, Vec::len);
    let mut xb = vec![0.0; n_rows];
    for (col, &b) in centred.iter().zip(unit) {
        xb.iter_mut().zip(col).for_each(|(acc, &x)| *acc += b * x);
    }
    let quad: f64 = xb.iter().map(|v| v * v).sum();
    if !(quad > 0.0) || !(r2 > 0.0 && r2 < 1.0) {
        return Err(Error::InvalidConfig(format!("degenerate quadratic form {quad} or R² {r2}")));
    }
    Ok((r2 / (1.0 - r2) * n as f64 / quad).sqrt())
}

/// Standard errors (σ = 1) of the least-squares coefficients of the first
/// `p` centred columns.
pub fn support_standard_errors(centred: &[Vec<f64>], p: usize) -> Result<Vec<f64>> {
    let cols = &centred[..p];
    let mut gram = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    // Cholesky G = L L'
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = gram[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::Singular);
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // diag(G⁻¹)_i = ‖L⁻¹ e_i‖²
    let mut out = vec![0.0; p];
    for i in 0..p {
        let mut w = vec![0.0; p];
        w[i] = 1.0 / l[i][i];
        for r in i + 1..p {
            let s: f64 = (i..r).map(|k| l[r][k] * w[k]).sum();
            w[r] = -s / l[r][r];
        }
        out[i] = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    Ok(out)
}

/// Full coefficient vector (zeros beyond `p`) and the scale `c` used.
pub fn gen_beta(
    beta_type: BetaType,
    design: &Design,
    p_index: u8,
    c_scale: CScale,
    r2: f64,
    source: RandomSource,
) -> Result<(Vec<f64>, f64)> {
    let m = design.m();
    if !(1..=6).contains(&p_index) {
        return Err(Error::InvalidConfig(format!("p index {p_index} (expected 1..=6)")));
    }
    let p = p_for_index(m, p_index);
    let unit = unit_beta(beta_type, m, p, p_index == 1, source);
    let c = match (beta_type, c_scale) {
        (BetaType::Constant, _) => solve_c_for_r2(&design.centred, &unit, r2, design.n())?,
        (_, CScale::Fixed(c)) => c,
        (_, CScale::Auto { effect_target }) => {
            let se = support_standard_errors(&design.centred, p)?;
            let weakest = unit.iter().zip(&se).map(|(b, s)| b.abs() / s).fold(f64::INFINITY, f64::min);
            effect_target / weakest
        }
    };
    let mut beta = vec![0.0; m];
    beta[..p].iter_mut().zip(&unit).for_each(|(b, u)| *b = c * u);
    Ok((beta, c))
}
