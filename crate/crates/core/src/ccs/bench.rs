//! Standard analytic test functions on the unit cube, negated so that larger
//! is better.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, exp, powi, sin, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Branin,
    Hartmann6,
    /// Two objectives over `dim` variables.
    Dtlz2 { dim: usize },
}

impl Benchmark {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "branin" => Ok(Benchmark::Branin),
            "hartmann6" => Ok(Benchmark::Hartmann6),
            "dtlz2_m2" => Ok(Benchmark::Dtlz2 { dim: 6 }),
            _ => Err(Error::UnknownBenchmark(name.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Branin => "branin",
            Benchmark::Hartmann6 => "hartmann6",
            Benchmark::Dtlz2 { .. } => "dtlz2_m2",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Benchmark::Branin => 2,
            Benchmark::Hartmann6 => 6,
            Benchmark::Dtlz2 { dim } => dim,
        }
    }

    pub fn n_obj(self) -> usize {
        match self {
            Benchmark::Dtlz2 { .. } => 2,
            _ => 1,
        }
    }

    /// Best attainable value of single-objective benchmarks.
    pub fn optimum(self) -> Option<f64> {
        match self {
            Benchmark::Branin => Some(-0.397_887_357_729_738),
            Benchmark::Hartmann6 => Some(3.322_368_011_391_339),
            Benchmark::Dtlz2 { .. } => None,
        }
    }

    pub fn eval(self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(crate::error::dim_mismatch(self.name(), self.dim(), x.len()));
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfDomain(alloc::format!("{} input {v} outside [0, 1]", self.name())));
        }
        Ok(match self {
            Benchmark::Branin => vec![-branin(-5.0 + 15.0 * x[0], 15.0 * x[1])],
            Benchmark::Hartmann6 => vec![-hartmann6(x)],
            Benchmark::Dtlz2 { .. } => {
                let (f1, f2) = dtlz2(x);
                vec![-f1, -f2]
            }
        })
    }
}

pub fn benchmark_eval(name: &str, x: &[f64]) -> Result<Vec<f64>> {
    Benchmark::from_name(name)?.eval(x)
}

fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let u = x2 - b * x1 * x1 + c * x1 - 6.0;
    u * u + 10.0 * (1.0 - t) * cos(x1) + 10.0
}

const H6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const H6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const H6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Minimization form, minimum −3.32237.
fn hartmann6(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let e: f64 = (0..6).map(|j| H6_A[i][j] * powi(x[j] - H6_P[i][j], 2)).sum();
            H6_ALPHA[i] * exp(-e)
        })
        .sum::<f64>()
}

fn dtlz2(x: &[f64]) -> (f64, f64) {
    let g: f64 = x[1..].iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
    let a = x[0] * PI / 2.0;
    ((1.0 + g) * cos(a), (1.0 + g) * sin(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branin_optima() {
        for (x1, x2) in [(-PI, 12.275), (PI, 2.275), (9.42478, 2.475)] {
            let v = benchmark_eval("branin", &[(x1 + 5.0) / 15.0, x2 / 15.0]).unwrap()[0];
            assert!((v + 0.397887).abs() < 1e-5, "{v}");
        }
    }

    #[test]
    fn hartmann6_optimum() {
        let x = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
        let v = benchmark_eval("hartmann6", &x).unwrap()[0];
        assert!((v - 3.32237).abs() < 1e-4, "{v}");
    }

    #[test]
    fn dtlz2_front_is_quarter_circle() {
        for k in 0..=10 {
            let mut x = vec![0.5; 6];
            x[0] = k as f64 / 10.0;
            let f = benchmark_eval("dtlz2_m2", &x).unwrap();
            assert!((f[0] * f[0] + f[1] * f[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(benchmark_eval("rosenbrock", &[0.5]), Err(Error::UnknownBenchmark(_))));
        assert!(matches!(benchmark_eval("branin", &[1.5, 0.5]), Err(Error::OutOfDomain(_))));
        assert!(benchmark_eval("branin", &[0.5]).is_err());
    }
}
