use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Field, Grid, Spectrum};
use crate::error::{Error, Result};

type Rule = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// How a factor is evaluated on the unpaired Nyquist frequency `-Nπ/L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NyquistRule {
    /// Mean of the values at `±ξ_N`; real whenever the rule is Hermitian.
    Average,
    /// Mode is dropped (derivatives).
    Zero,
}

#[derive(Clone)]
struct Factor {
    rule: Rule,
    nyquist: NyquistRule,
}

/// Fourier multiplier `ξ ↦ m(ξ)`.
///
/// A symbol is a product of factors; lattice values are the product of the
/// factors' lattice values, so composing symbols agrees exactly with applying
/// them one after the other.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    factors: Vec<Factor>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol").field("name", &self.name).finish()
    }
}

/// Relative tolerance for the lattice Hermitian check.
const HERMITIAN_TOL: f64 = 1e-12;

impl Symbol {
    pub fn new(
        name: impl Into<String>,
        nyquist: NyquistRule,
        rule: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            factors: vec![Factor {
                rule: Arc::new(rule),
                nyquist,
            }],
        }
    }

    /// Real-valued symbol, Nyquist averaged.
    pub fn real(name: impl Into<String>, rule: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, NyquistRule::Average, move |xi| Complex64::new(rule(xi), 0.0))
    }

    pub fn identity() -> Self {
        Self {
            name: "1".into(),
            factors: Vec::new(),
        }
    }

    /// `(iξ)^order`, Nyquist dropped.
    pub fn derivative(order: u32) -> Self {
        Self::new(format!("(i xi)^{order}"), NyquistRule::Zero, move |xi| {
            Complex64::new(0.0, xi).powu(order)
        })
    }

    /// `R_0(ϰ) = (−∂² + ϰ²)^{-1}`, i.e. `1/(ξ² + ϰ²)`.
    pub fn resolvent(kappa: f64) -> Self {
        Self::real(format!("R0({kappa})"), move |xi| 1.0 / (xi * xi + kappa * kappa))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn compose(&self, other: &Symbol) -> Symbol {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        let name = match (self.factors.is_empty(), other.factors.is_empty()) {
            (true, _) => other.name.clone(),
            (_, true) => self.name.clone(),
            _ => format!("{} * {}", self.name, other.name),
        };
        Symbol { name, factors }
    }

    /// Value at frequency `xi` (off-lattice evaluation, no Nyquist rule).
    pub fn eval(&self, xi: f64) -> Complex64 {
        self.factors
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, f| acc * (f.rule)(xi))
    }

    /// Lattice values in FFT order.
    pub fn lattice_values(&self, grid: &Grid) -> Vec<Complex64> {
        let n = grid.points();
        let nyq = grid.nyquist_index();
        let xi_n = grid.max_wavenumber();
        (0..n)
            .map(|k| {
                self.factors.iter().fold(Complex64::new(1.0, 0.0), |acc, f| {
                    let v = if k == nyq {
                        match f.nyquist {
                            NyquistRule::Zero => Complex64::new(0.0, 0.0),
                            NyquistRule::Average => 0.5 * ((f.rule)(xi_n) + (f.rule)(-xi_n)),
                        }
                    } else {
                        (f.rule)(grid.wavenumber(k))
                    };
                    acc * v
                })
            })
            .collect()
    }

    /// Worst lattice violation of `m(−ξ) = conj m(ξ)` and its mode, relative
    /// to the largest lattice value.
    pub fn hermitian_defect(&self, grid: &Grid) -> (i64, f64) {
        let v = self.lattice_values(grid);
        let n = v.len();
        let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
        let mut worst = (0i64, v[0].im.abs() / scale);
        let nyq = v[n / 2].im.abs() / scale;
        if nyq > worst.1 {
            worst = (grid.mode(n / 2), nyq);
        }
        for k in 1..n / 2 {
            let d = (v[n - k] - v[k].conj()).norm() / scale;
            if d > worst.1 {
                worst = (k as i64, d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, grid: &Grid) -> bool {
        self.hermitian_defect(grid).1 <= HERMITIAN_TOL
    }
}

/// Multiply the spectrum of `f` by `m` and return the real field.
///
/// Refuses symbols that are not Hermitian on the lattice, since their output
/// would not be real.
pub fn apply_multiplier(m: &Symbol, f: &Field) -> Result<Field> {
    let (mode, defect) = m.hermitian_defect(f.grid());
    if defect > HERMITIAN_TOL {
        return Err(Error::NonHermitianSymbol { mode, defect });
    }
    Ok(apply_multiplier_complex(m, f).to_field())
}

/// Multiply the spectrum of `f` by `m` without any reality requirement.
pub fn apply_multiplier_complex(m: &Symbol, f: &Field) -> Spectrum {
    let values = m.lattice_values(f.grid());
    let coeffs = f.spectrum().iter().zip(&values).map(|(c, v)| c * v).collect();
    Spectrum::new(*f.grid(), coeffs)
}
