//! Single-mode Wigner functions on rectangular grids.
//!
//! Coordinates are the quadratures `x = √2 Re α`, `p = √2 Im α`, i.e. the
//! eigenvalues of `X = (c + c†)/√2` and `P = (c − c†)/(i√2)`. With this
//! normalization `∫W dx dp = 1` and the vacuum peak is `1/π`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Identifies the `(x, p)` quadrature convention in binary rasters.
pub const CONVENTION_XP_SQRT2: u32 = 1;
const RASTER_MAGIC: &[u8; 4] = b"WGRD";
const RASTER_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    pub fn square(center: (f64, f64), half_width: f64, points: usize) -> Self {
        Self {
            x_min: center.0 - half_width,
            x_max: center.0 + half_width,
            nx: points,
            p_min: center.1 - half_width,
            p_max: center.1 + half_width,
            np: points,
        }
    }

    /// Window centered on the mean quadratures with half-width
    /// `4(σ + 1)` per axis. `offset` is the frame displacement of the mode.
    pub fn auto(rho: &DMatrix<Complex64>, offset: Complex64, points: usize) -> Self {
        let n = rho.nrows();
        let mut mean_c = Complex64::new(0.0, 0.0);
        let mut mean_cc = Complex64::new(0.0, 0.0);
        let mut mean_n = 0.0;
        for k in 1..n {
            let s = (k as f64).sqrt();
            // ⟨c⟩ = Σ √k ρ[k, k−1]
            mean_c += s * rho[(k, k - 1)];
            mean_n += k as f64 * rho[(k, k)].re;
            if k >= 2 {
                mean_cc += s * ((k - 1) as f64).sqrt() * rho[(k, k - 2)];
            }
        }
        // ⟨X²⟩ = (⟨c²⟩ + ⟨c†²⟩ + 2⟨n⟩ + 1)/2, ⟨P²⟩ = (−⟨c²⟩ − ⟨c†²⟩ + 2⟨n⟩ + 1)/2
        let x_mean = std::f64::consts::SQRT_2 * mean_c.re;
        let p_mean = std::f64::consts::SQRT_2 * mean_c.im;
        let var_x = (2.0 * mean_cc.re + 2.0 * mean_n + 1.0) / 2.0 - x_mean * x_mean;
        let var_p = (-2.0 * mean_cc.re + 2.0 * mean_n + 1.0) / 2.0 - p_mean * p_mean;
        let hx = 4.0 * (var_x.max(0.0).sqrt() + 1.0);
        let hp = 4.0 * (var_p.max(0.0).sqrt() + 1.0);
        let cx = x_mean + std::f64::consts::SQRT_2 * offset.re;
        let cp = p_mean + std::f64::consts::SQRT_2 * offset.im;
        Self {
            x_min: cx - hx,
            x_max: cx + hx,
            nx: points,
            p_min: cp - hp,
            p_max: cp + hp,
            np: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(Error::Usage("Wigner grids need at least 2 points per axis".into()));
        }
        if !(self.x_max > self.x_min && self.p_max > self.p_min) {
            return Err(Error::Usage("Wigner grid ranges must be increasing".into()));
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        let step = (max - min) / (n - 1) as f64;
        (0..n).map(|i| min + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Row-major in `p`: `values[ip * nx + ix]`.
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip * self.x.len() + ix]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoidal `∫W dx dp` over the window.
    pub fn integral(&self) -> f64 {
        let wx = trapezoid_weights(&self.x);
        let wp = trapezoid_weights(&self.p);
        let nx = self.x.len();
        wp.iter()
            .enumerate()
            .map(|(ip, a)| a * wx.iter().enumerate().map(|(ix, b)| b * self.values[ip * nx + ix]).sum::<f64>())
            .sum()
    }

    /// `min W / max W`.
    pub fn negativity(&self) -> Result<f64> {
        let max = self.max();
        if !(max > 0.0) {
            return Err(Error::InvalidState(format!("Wigner maximum is {max}; the quotient is undefined")));
        }
        Ok(self.min() / max)
    }

    /// Largest |W| on the window border relative to the peak: a window-size check.
    pub fn border_fraction(&self) -> f64 {
        let (nx, np) = (self.x.len(), self.p.len());
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut edge = 0.0f64;
        for ix in 0..nx {
            edge = edge.max(self.at(ix, 0).abs()).max(self.at(ix, np - 1).abs());
        }
        for ip in 0..np {
            edge = edge.max(self.at(0, ip).abs()).max(self.at(nx - 1, ip).abs());
        }
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "p", "w"]).map_err(csv_err)?;
        for (ip, p) in self.p.iter().enumerate() {
            for (ix, x) in self.x.iter().enumerate() {
                w.write_record([
                    format!("{x:.11e}"),
                    format!("{p:.11e}"),
                    format!("{:.11e}", self.at(ix, ip)),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Binary raster: magic `WGRD`, then little-endian u32 version, u32
    /// convention, u32 nx, u32 np, f64 x_min, x_max, p_min, p_max, and the
    /// values row-major in `p`.
    pub fn write_raster<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(RASTER_MAGIC)?;
        for v in [RASTER_VERSION, CONVENTION_XP_SQRT2, self.x.len() as u32, self.p.len() as u32] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in [self.x[0], *self.x.last().unwrap(), self.p[0], *self.p.last().unwrap()] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raster<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != RASTER_MAGIC {
            return Err(Error::InvalidState("not a Wigner raster".into()));
        }
        let mut u = [0u8; 4];
        let mut header = [0u32; 4];
        for h in header.iter_mut() {
            input.read_exact(&mut u)?;
            *h = u32::from_le_bytes(u);
        }
        let [version, convention, nx, np] = header;
        if version != RASTER_VERSION || convention != CONVENTION_XP_SQRT2 {
            return Err(Error::InvalidState(format!(
                "unsupported raster version {version} / convention {convention}"
            )));
        }
        let mut f = [0u8; 8];
        let mut read_f64 = |input: &mut R| -> Result<f64> {
            input.read_exact(&mut f)?;
            Ok(f64::from_le_bytes(f))
        };
        let (x_min, x_max, p_min, p_max) = (
            read_f64(&mut input)?,
            read_f64(&mut input)?,
            read_f64(&mut input)?,
            read_f64(&mut input)?,
        );
        let (nx, np) = (nx as usize, np as usize);
        let mut values = Vec::with_capacity(nx * np);
        for _ in 0..nx * np {
            values.push(read_f64(&mut input)?);
        }
        Ok(Self {
            x: GridSpec::axis(x_min, x_max, nx),
            p: GridSpec::axis(p_min, p_max, np),
            values,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Wigner function of the single-mode density matrix `rho`. The grid is in
/// lab coordinates; `offset` is the displacement of the frame `rho` lives in,
/// so `W_lab(α) = W_frame(α − offset)`.
pub fn wigner(rho: &DMatrix<Complex64>, spec: &GridSpec, offset: Complex64) -> Result<WignerGrid> {
    spec.validate()?;
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "Wigner input must be square, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let x = GridSpec::axis(spec.x_min, spec.x_max, spec.nx);
    let p = GridSpec::axis(spec.p_min, spec.p_max, spec.np);
    let shift = offset * std::f64::consts::SQRT_2;
    let nx = x.len();
    let mut values = vec![0.0; nx * p.len()];
    values.par_chunks_mut(nx).zip(p.par_iter()).for_each(|(row, &pv)| {
        let mut work = vec![Complex64::new(0.0, 0.0); rho.nrows()];
        for (slot, &xv) in row.iter_mut().zip(&x) {
            let alpha = Complex64::new(xv - shift.re, pv - shift.im) / std::f64::consts::SQRT_2;
            *slot = wigner_point(rho, alpha, &mut work);
        }
    });
    let grid = WignerGrid { x, p, values };
    let border = grid.border_fraction();
    if border > 1e-4 {
        log::warn!("Wigner window clips the state: border/peak = {border:.2e}");
    }
    Ok(grid)
}

/// `W(α) = (1/π) Σ_{m,n} ρ_{mn} W_{mn}(α)` via the upward Laguerre recursion.
fn wigner_point(rho: &DMatrix<Complex64>, a: Complex64, w: &mut [Complex64]) -> f64 {
    let m_dim = rho.nrows();
    w[0] = Complex64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut acc = rho[(0, 0)].re * w[0].re;
    for n in 1..m_dim {
        w[n] = 2.0 * a * w[n - 1] / (n as f64).sqrt();
        acc += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for m in 1..m_dim {
        let sm = (m as f64).sqrt();
        let mut temp = w[m];
        w[m] = (2.0 * a.conj() * temp - sm * w[m - 1]) / sm;
        acc += (rho[(m, m)] * w[m]).re;
        for n in m + 1..m_dim {
            let next = (2.0 * a * w[n - 1] - sm * temp) / (n as f64).sqrt();
            temp = w[n];
            w[n] = next;
            acc += 2.0 * (rho[(m, n)] * w[n]).re;
        }
    }
    acc
}
