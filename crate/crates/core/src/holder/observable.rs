//! Real observables `u` on the state space and their Hölder constants.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::process::{generate_trajectory, AnalyticDensity, MapSpec};
use crate::quad;
use crate::stats::pairwise_sum;

/// Shape of an observable. All kinds act on the first coordinate of a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableKind {
    Identity,
    /// `cos(2πx)`
    Cosine2Pi,
    /// `|x − shift|`
    AbsShift { shift: f64 },
    /// `Σ c_k x^k`
    Polynomial { coeffs: Vec<f64> },
    /// `Σ_k a_k cos(2πkx) + b_k sin(2πkx)`, frequencies `k ≥ 1`.
    TrigPolynomial { cos: Vec<f64>, sin: Vec<f64> },
    Constant { value: f64 },
}

/// An η-Hölder observable `u(x) = base(x₁) − offset` with declared constant `L_u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub kind: ObservableKind,
    pub eta: f64,
    pub holder_constant: f64,
    pub offset: f64,
    /// Interval of first coordinates the constant was declared on.
    pub domain: (f64, f64),
}

impl Observable {
    /// Build with the Hölder constant derived for `domain`: `L_η = L₁ · diam^{1−η}`.
    pub fn new(kind: ObservableKind, eta: f64, domain: (f64, f64)) -> Result<Self> {
        ensure(eta > 0.0 && eta <= 1.0, || Error::Parameter(format!("Hölder exponent {eta} outside (0, 1]")))?;
        ensure(domain.1 > domain.0, || Error::Parameter("empty observable domain".into()))?;
        let lip = lipschitz_constant(&kind, domain);
        let diam = domain.1 - domain.0;
        Ok(Self {
            kind,
            eta,
            holder_constant: lip * diam.powf(1.0 - eta),
            offset: 0.0,
            domain,
        })
    }

    pub fn identity() -> Self {
        Self::new(ObservableKind::Identity, 1.0, (0.0, 1.0)).expect("valid")
    }

    pub fn cosine() -> Self {
        Self::new(ObservableKind::Cosine2Pi, 1.0, (0.0, 1.0)).expect("valid")
    }

    pub fn constant(value: f64) -> Self {
        Self::new(ObservableKind::Constant { value }, 1.0, (0.0, 1.0)).expect("valid")
    }

    /// Same observable declared on the first-coordinate range of `map`.
    pub fn on_map(self, map: &MapSpec) -> Result<Self> {
        let (lo, hi) = map.domain()[0];
        let mut u = Self::new(self.kind, self.eta, (lo, hi))?;
        u.offset = self.offset;
        Ok(u)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        let mut u = Self::new(self.kind, eta, self.domain)?;
        u.offset = self.offset;
        Ok(u)
    }

    /// `u − c`.
    pub fn shifted(mut self, c: f64) -> Self {
        self.offset += c;
        self
    }

    /// `c·u`.
    pub fn scaled(self, c: f64) -> Self {
        let kind = match self.kind {
            ObservableKind::Identity => ObservableKind::Polynomial { coeffs: vec![0.0, c] },
            ObservableKind::Cosine2Pi => ObservableKind::TrigPolynomial { cos: vec![c], sin: vec![] },
            ObservableKind::AbsShift { shift } => {
                // c|x − s| has no closed kind of its own; fall back to a polynomial only for c = 1
                if c == 1.0 {
                    ObservableKind::AbsShift { shift }
                } else {
                    panic!("scaling an abs-shift observable is not supported")
                }
            }
            ObservableKind::Polynomial { coeffs } => ObservableKind::Polynomial {
                coeffs: coeffs.iter().map(|a| a * c).collect(),
            },
            ObservableKind::TrigPolynomial { cos, sin } => ObservableKind::TrigPolynomial {
                cos: cos.iter().map(|a| a * c).collect(),
                sin: sin.iter().map(|a| a * c).collect(),
            },
            ObservableKind::Constant { value } => ObservableKind::Constant { value: value * c },
        };
        let mut u = Self::new(kind, self.eta, self.domain).expect("valid");
        u.offset = self.offset * c;
        u
    }

    pub fn name(&self) -> String {
        let base = match &self.kind {
            ObservableKind::Identity => "identity".to_string(),
            ObservableKind::Cosine2Pi => "cosine2pi".to_string(),
            ObservableKind::AbsShift { shift } => format!("abs_shift({shift})"),
            ObservableKind::Polynomial { .. } => "custom_polynomial".to_string(),
            ObservableKind::TrigPolynomial { .. } => "trig_polynomial".to_string(),
            ObservableKind::Constant { value } => format!("constant({value})"),
        };
        if self.offset == 0.0 {
            base
        } else {
            format!("{base}-{}", self.offset)
        }
    }

    /// Parse the CLI names `identity`, `cosine2pi`, `abs_shift`, `constant`.
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        let kind = match name {
            "identity" => ObservableKind::Identity,
            "cosine2pi" | "cos" => ObservableKind::Cosine2Pi,
            "abs_shift" => ObservableKind::AbsShift { shift: params.first().copied().unwrap_or(0.5) },
            "custom_polynomial" => ObservableKind::Polynomial { coeffs: params.to_vec() },
            "constant" => ObservableKind::Constant { value: params.first().copied().unwrap_or(1.0) },
            other => return Err(Error::Parameter(format!("unknown observable '{other}'"))),
        };
        Self::new(kind, 1.0, (0.0, 1.0))
    }

    fn base(&self, x: f64) -> f64 {
        match &self.kind {
            ObservableKind::Identity => x,
            ObservableKind::Cosine2Pi => (2.0 * PI * x).cos(),
            ObservableKind::AbsShift { shift } => (x - shift).abs(),
            ObservableKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            ObservableKind::TrigPolynomial { cos, sin } => {
                let mut s = 0.0;
                for (k, a) in cos.iter().enumerate() {
                    s += a * (2.0 * PI * (k + 1) as f64 * x).cos();
                }
                for (k, b) in sin.iter().enumerate() {
                    s += b * (2.0 * PI * (k + 1) as f64 * x).sin();
                }
                s
            }
            ObservableKind::Constant { value } => *value,
        }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.base(point[0]) - self.offset
    }

    pub fn eval_scalar(&self, x: f64) -> f64 {
        self.base(x) - self.offset
    }

    /// `u(X_1), …, u(X_n)` for a flat point buffer of dimension `dim`.
    pub fn series(&self, flat: &[f64], dim: usize) -> Vec<f64> {
        flat.chunks_exact(dim).map(|p| self.eval(p)).collect()
    }

    /// Bracket `[min u, max u]` over the declared domain.
    pub fn range(&self) -> (f64, f64) {
        let (lo, hi) = self.domain;
        let (a, b) = match &self.kind {
            ObservableKind::Identity => (lo, hi),
            ObservableKind::Constant { value } => (*value, *value),
            ObservableKind::Cosine2Pi if hi - lo >= 1.0 => (-1.0, 1.0),
            ObservableKind::AbsShift { shift } => {
                let far = (lo - shift).abs().max((hi - shift).abs());
                let near = if *shift >= lo && *shift <= hi { 0.0 } else { (lo - shift).abs().min((hi - shift).abs()) };
                (near, far)
            }
            _ => {
                // dense grid plus the Lipschitz slack between nodes
                let m = 4096;
                let h = (hi - lo) / m as f64;
                let lip = lipschitz_constant(&self.kind, self.domain);
                let vals: Vec<f64> = (0..=m).map(|i| self.base(lo + h * i as f64)).collect();
                let mn = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (mn - 0.5 * lip * h, mx + 0.5 * lip * h)
            }
        };
        (a - self.offset, b - self.offset)
    }

    /// `sup |u|` over the domain.
    pub fn sup_abs(&self) -> f64 {
        let (a, b) = self.range();
        a.abs().max(b.abs())
    }

    /// Expectation of `u` under a closed-form density, by quadrature.
    pub fn mean_under(&self, density: AnalyticDensity) -> Result<f64> {
        match density {
            AnalyticDensity::Uniform => quad::integrate(|x| self.eval_scalar(x), 0.0, 1.0, 1e-13),
            // x = (1 − cos θ)/2 with θ uniform on [0, π]
            AnalyticDensity::Arcsine => {
                quad::integrate(|t| self.eval_scalar(0.5 * (1.0 - t.cos())), 0.0, PI, 1e-13).map(|v| v / PI)
            }
        }
    }
}

fn lipschitz_constant(kind: &ObservableKind, domain: (f64, f64)) -> f64 {
    match kind {
        ObservableKind::Identity | ObservableKind::AbsShift { .. } => 1.0,
        ObservableKind::Cosine2Pi => 2.0 * PI,
        ObservableKind::Constant { .. } => 0.0,
        ObservableKind::Polynomial { coeffs } => {
            let r = domain.0.abs().max(domain.1.abs());
            coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c.abs() * r.powi(k as i32 - 1))
                .sum()
        }
        ObservableKind::TrigPolynomial { cos, sin } => {
            let c: f64 = cos.iter().enumerate().map(|(k, a)| 2.0 * PI * (k + 1) as f64 * a.abs()).sum();
            let s: f64 = sin.iter().enumerate().map(|(k, b)| 2.0 * PI * (k + 1) as f64 * b.abs()).sum();
            c + s
        }
    }
}

/// Steps in the long-run average used when no invariant density is known.
pub const LONG_RUN_STEPS: usize = 10_000_000;

static LONG_RUN: Mutex<Option<HashMap<String, f64>>> = Mutex::new(None);

/// `E_μ u`: by quadrature against the invariant density when the catalog
/// has one, otherwise a cached 10⁷-step orbit average with a fixed seed.
pub fn invariant_mean(map: &MapSpec, u: &Observable) -> Result<f64> {
    if let Some(d) = map.analytic_density {
        return u.mean_under(d);
    }
    long_run_mean(map, u, LONG_RUN_STEPS)
}

pub fn long_run_mean(map: &MapSpec, u: &Observable, steps: usize) -> Result<f64> {
    let key = format!("{}|{}|{}", map, serde_json::to_string(u)?, steps);
    if let Some(v) = LONG_RUN.lock().expect("lock").as_ref().and_then(|m| m.get(&key)) {
        return Ok(*v);
    }
    let traj = generate_trajectory(map, steps, crate::process::DEFAULT_BURN_IN, 0x005E_ED0F_10E6)?;
    let vals = u.series(traj.flat(), traj.dim());
    let m = pairwise_sum(&vals) / vals.len() as f64;
    LONG_RUN.lock().expect("lock").get_or_insert_with(HashMap::new).insert(key, m);
    Ok(m)
}
