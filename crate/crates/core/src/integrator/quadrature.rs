//! Evaluation of the averaged vector field `int_0^1 f((1-s) qa + s qb) ds`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectral::{Grid, ModeVector, NodalField};
use crate::system::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Closed-form integration of a polynomial `g` along the segment.
    ExactPolynomial,
    /// `f((qa + qb)/2)`.
    Midpoint,
    /// `n`-point Gauss-Legendre on `[0, 1]`.
    Gauss(usize),
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::ExactPolynomial
    }
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quadrature::ExactPolynomial => f.write_str("exact"),
            Quadrature::Midpoint => f.write_str("midpoint"),
            Quadrature::Gauss(n) => write!(f, "gauss:{n}"),
        }
    }
}

impl FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" | "exact-polynomial" => Ok(Quadrature::ExactPolynomial),
            "midpoint" => Ok(Quadrature::Midpoint),
            other => {
                let n = other
                    .strip_prefix("gauss:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| {
                        Error::Parse(format!(
                            "unknown quadrature '{other}' (expected exact, midpoint or gauss:<n>)"
                        ))
                    })?;
                Ok(Quadrature::Gauss(n))
            }
        }
    }
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Precomputed rule for repeated nodal evaluation.
#[derive(Debug, Clone)]
pub(crate) enum NodalRule {
    Exact(Vec<f64>),
    Midpoint,
    Gauss { nodes: Vec<f64>, weights: Vec<f64> },
}

impl NodalRule {
    pub(crate) fn new(quadrature: Quadrature, spec: &SystemSpec) -> Result<Self> {
        Ok(match quadrature {
            Quadrature::ExactPolynomial => {
                let coeffs = spec.g_coeffs().ok_or_else(|| {
                    Error::InvalidParameter(
                        "exact quadrature needs a polynomial nonlinearity".into(),
                    )
                })?;
                NodalRule::Exact(coeffs.to_vec())
            }
            Quadrature::Midpoint => NodalRule::Midpoint,
            Quadrature::Gauss(0) => {
                return Err(Error::InvalidParameter(
                    "Gauss rule needs at least one node".into(),
                ))
            }
            Quadrature::Gauss(n) => {
                let (nodes, weights) = gauss_legendre(n);
                NodalRule::Gauss { nodes, weights }
            }
        })
    }

    /// `int_0^1 g((1-s) a + s b) ds` at one node.
    pub(crate) fn integrate_g(&self, spec: &SystemSpec, a: f64, b: f64) -> f64 {
        match self {
            NodalRule::Exact(coeffs) => {
                // int_0^1 ((1-s)a + s b)^m ds = 1/(m+1) sum_{i=0}^m a^i b^(m-i)
                let mut sym = a + b; // m = 1
                let mut a_pow = a;
                let mut acc = 0.0;
                for (idx, g) in coeffs.iter().enumerate() {
                    let m = idx + 2;
                    a_pow *= a;
                    sym = b * sym + a_pow;
                    acc += g * sym / (m + 1) as f64;
                }
                acc
            }
            NodalRule::Midpoint => spec.g(0.5 * (a + b)),
            NodalRule::Gauss { nodes, weights } => nodes
                .iter()
                .zip(weights)
                .map(|(c, w)| w * spec.g(a + c * (b - a)))
                .sum(),
        }
    }

    /// Averaged `f` for nodal endpoint values `a`, `b`.
    pub(crate) fn integral(
        &self,
        spec: &SystemSpec,
        grid: &Grid,
        a: &NodalField,
        b: &NodalField,
    ) -> Result<ModeVector> {
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| -self.integrate_g(spec, x, y))
            .collect();
        grid.dft(&NodalField::new(values))
    }
}

/// Approximates `int_0^1 f((1-s) qa + s qb) ds` with the chosen rule.
pub fn avf_integral(
    qa: &ModeVector,
    qb: &ModeVector,
    spec: &SystemSpec,
    grid: &Grid,
    quadrature: Quadrature,
) -> Result<ModeVector> {
    let rule = NodalRule::new(quadrature, spec)?;
    let a = grid.idft(qa)?;
    let b = grid.idft(qb)?;
    rule.integral(spec, grid, &a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::apply_nonlinearity;
    use num_complex::Complex64;

    #[test]
    fn gauss_rules_integrate_monomials() {
        for n in 1..=8 {
            let (nodes, weights) = gauss_legendre(n);
            assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..2 * n {
                let approx: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                assert!(
                    (approx - 1.0 / (deg + 1) as f64).abs() < 1e-14,
                    "n={n} deg={deg}"
                );
            }
        }
    }

    #[test]
    fn parses_quadrature_names() {
        assert_eq!("exact".parse::<Quadrature>().unwrap(), Quadrature::ExactPolynomial);
        assert_eq!("midpoint".parse::<Quadrature>().unwrap(), Quadrature::Midpoint);
        assert_eq!("gauss:3".parse::<Quadrature>().unwrap(), Quadrature::Gauss(3));
        assert!("gauss:0".parse::<Quadrature>().is_err());
        assert!("simpson".parse::<Quadrature>().is_err());
        assert_eq!(Quadrature::Gauss(4).to_string(), "gauss:4");
    }

    #[test]
    fn pointwise_quadratic_segment() {
        let spec = SystemSpec::quadratic_preset();
        let exact = NodalRule::new(Quadrature::ExactPolynomial, &spec).unwrap();
        let mid = NodalRule::new(Quadrature::Midpoint, &spec).unwrap();
        let gauss = NodalRule::new(Quadrature::Gauss(2), &spec).unwrap();
        assert!((exact.integrate_g(&spec, 0.0, 1.0) + 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(mid.integrate_g(&spec, 0.0, 1.0), -0.25);
        for &(a, b) in &[(0.0, 1.0), (0.3, -0.7), (1.5, 1.5), (-2.0, 0.1)] {
            let closed = -(a * a + a * b + b * b) / 3.0;
            let e = exact.integrate_g(&spec, a, b);
            let g = gauss.integrate_g(&spec, a, b);
            assert!((e - closed).abs() < 1e-15);
            assert!((e - g).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_rule_on_higher_degree_matches_gauss() {
        let spec = SystemSpec::polynomial(0.5, vec![-1.0, 0.4, 0.0, 2.5]).unwrap();
        let exact = NodalRule::new(Quadrature::ExactPolynomial, &spec).unwrap();
        let gauss = NodalRule::new(Quadrature::Gauss(3), &spec).unwrap();
        for &(a, b) in &[(0.2, 0.9), (-0.4, 0.3), (0.7, 0.7)] {
            let e = exact.integrate_g(&spec, a, b);
            let g = gauss.integrate_g(&spec, a, b);
            assert!((e - g).abs() < 1e-14, "{e} vs {g}");
        }
    }

    #[test]
    fn constant_segment_gives_nonlinearity() {
        let grid = Grid::new(8).unwrap();
        let spec = SystemSpec::polynomial(0.5, vec![-1.0, 0.3]).unwrap();
        let mut q = ModeVector::zeros(16);
        q.set(0, Complex64::new(0.1, 0.0));
        q.set_pair(1, Complex64::new(0.05, -0.02));
        q.set_pair(3, Complex64::new(-0.01, 0.03));
        let f = apply_nonlinearity(&q, &spec, &grid).unwrap();
        for quad in [
            Quadrature::ExactPolynomial,
            Quadrature::Midpoint,
            Quadrature::Gauss(1),
            Quadrature::Gauss(3),
        ] {
            let avf = avf_integral(&q, &q, &spec, &grid, quad).unwrap();
            assert!(avf.max_abs_diff(&f) < 1e-16, "{quad}");
        }
    }

    #[test]
    fn exact_requires_polynomial() {
        let spec = SystemSpec::callable(0.5, |u| -u * u, |u| -u * u * u / 3.0).unwrap();
        assert!(NodalRule::new(Quadrature::ExactPolynomial, &spec).is_err());
        assert!(NodalRule::new(Quadrature::Gauss(2), &spec).is_ok());
    }
}
