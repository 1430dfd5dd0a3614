//! Synthetic datasets with monotone ground truth.
//!
//! | scenario    | inputs (raw ranges)                                   | default size | signature      |
//! |-------------|-------------------------------------------------------|--------------|----------------|
//! | `glass2d`   | T_f in [480, 560], n_c in [40, 50]                    | 25 (5x5 grid)| (+1, +1)       |
//! | `press4d`   | T_f [871, 933], dt_h [0, 4], F_p [1750, 2250], t_q [2, 6] | 60 random | (+1, -1, 0, +1) |
//! | `mono-poly` | x in [0, 10]                                          | 12 equispaced| (+1)           |
//! | `sigmoid1d` | x in [0, 1]                                           | 6 equispaced | (+1)           |
//!
//! Truths use scaled inputs `s_j` in [0, 1]:
//!
//! * `glass2d`: `30 + 60 * logistic(6 (u - 0.5))` with `u = 0.7 s1 + 0.3 s2`.
//! * `press4d`: `250 + 200 * logistic(8 (s1 - 0.5)) - 30 s2 + 10 sin(2 pi s3) + 60 (1 - exp(-3 s4))`.
//! * `mono-poly`: `2 + 0.8 x + 0.05 x^2 - 0.002 x^3` (derivative at least 0.8 on the range).
//! * `sigmoid1d`: `10 * logistic(10 (x - 0.5))`.
//!
//! `bump` adds `bump * exp(-|s - c|^2 / (2 w^2))` with a scenario-specific centre
//! `c` and width `w`, which breaks monotonicity for large enough amplitudes;
//! `noise` adds i.i.d. normal noise with that standard deviation. Grid sizes
//! that are perfect squares give a tensor grid for `glass2d`, otherwise inputs
//! are uniform draws from the seeded ChaCha8 stream.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shapereg::Dataset;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Glass2d,
    Press4d,
    MonoPoly,
    Sigmoid1d,
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "glass2d" => Ok(Scenario::Glass2d),
            "press4d" => Ok(Scenario::Press4d),
            "mono-poly" => Ok(Scenario::MonoPoly),
            "sigmoid1d" => Ok(Scenario::Sigmoid1d),
            other => Err(CliError::validation(format!(
                "unknown scenario {other:?} (expected glass2d, press4d, mono-poly or sigmoid1d)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Glass2d => "glass2d",
            Scenario::Press4d => "press4d",
            Scenario::MonoPoly => "mono-poly",
            Scenario::Sigmoid1d => "sigmoid1d",
        })
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Scenario {
    pub fn bounds(self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Scenario::Glass2d => (vec![480.0, 40.0], vec![560.0, 50.0]),
            Scenario::Press4d => (
                vec![871.0, 0.0, 1750.0, 2.0],
                vec![933.0, 4.0, 2250.0, 6.0],
            ),
            Scenario::MonoPoly => (vec![0.0], vec![10.0]),
            Scenario::Sigmoid1d => (vec![0.0], vec![1.0]),
        }
    }

    pub fn dim(self) -> usize {
        self.bounds().0.len()
    }

    pub fn default_size(self) -> usize {
        match self {
            Scenario::Glass2d => 25,
            Scenario::Press4d => 60,
            Scenario::MonoPoly => 12,
            Scenario::Sigmoid1d => 6,
        }
    }

    /// Monotonicity signature of the ground truth.
    pub fn signature(self) -> Vec<i64> {
        match self {
            Scenario::Glass2d => vec![1, 1],
            Scenario::Press4d => vec![1, -1, 0, 1],
            Scenario::MonoPoly | Scenario::Sigmoid1d => vec![1],
        }
    }

    fn scaled(self, x: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        x.iter()
            .zip(lo.iter().zip(&hi))
            .map(|(v, (l, h))| (v - l) / (h - l))
            .collect()
    }

    /// Noise-free, bump-free ground truth at a raw input point.
    pub fn truth(self, x: &[f64]) -> f64 {
        let s = self.scaled(x);
        match self {
            Scenario::Glass2d => 30.0 + 60.0 * logistic(6.0 * (0.7 * s[0] + 0.3 * s[1] - 0.5)),
            Scenario::Press4d => {
                250.0 + 200.0 * logistic(8.0 * (s[0] - 0.5)) - 30.0 * s[1]
                    + 10.0 * (2.0 * PI * s[2]).sin()
                    + 60.0 * (1.0 - (-3.0 * s[3]).exp())
            }
            Scenario::MonoPoly => {
                let v = x[0];
                2.0 + 0.8 * v + 0.05 * v * v - 0.002 * v * v * v
            }
            Scenario::Sigmoid1d => 10.0 * logistic(10.0 * (s[0] - 0.5)),
        }
    }

    fn bump_shape(self, x: &[f64]) -> f64 {
        let s = self.scaled(x);
        let (centre, width): (&[f64], f64) = match self {
            Scenario::Glass2d => (&[0.55, 0.45], 0.15),
            Scenario::Press4d => (&[0.5, 0.5, 0.5, 0.5], 0.25),
            Scenario::MonoPoly => (&[0.6], 0.1),
            Scenario::Sigmoid1d => (&[0.4], 0.1),
        };
        let r2: f64 = s.iter().zip(centre).map(|(a, c)| (a - c).powi(2)).sum();
        (-r2 / (2.0 * width * width)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub scenario: Scenario,
    pub seed: u64,
    pub size: Option<usize>,
    pub noise: f64,
    pub bump: f64,
}

fn equispaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

pub fn generate(params: &SynthParams) -> Result<Dataset, CliError> {
    let sc = params.scenario;
    let n = params.size.unwrap_or_else(|| sc.default_size());
    if n == 0 {
        return Err(CliError::validation("size must be at least 1"));
    }
    if !(params.noise.is_finite() && params.noise >= 0.0) {
        return Err(CliError::validation("noise must be a nonnegative number"));
    }
    if !params.bump.is_finite() {
        return Err(CliError::validation("bump amplitude must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (lo, hi) = sc.bounds();
    let side = (n as f64).sqrt().round() as usize;
    let inputs: Vec<Vec<f64>> = match sc {
        Scenario::Glass2d if side * side == n => {
            let a = equispaced(lo[0], hi[0], side);
            let b = equispaced(lo[1], hi[1], side);
            a.iter()
                .flat_map(|&u| b.iter().map(move |&v| vec![u, v]))
                .collect()
        }
        Scenario::MonoPoly | Scenario::Sigmoid1d => {
            equispaced(lo[0], hi[0], n).into_iter().map(|v| vec![v]).collect()
        }
        _ => (0..n)
            .map(|_| {
                lo.iter()
                    .zip(&hi)
                    .map(|(&l, &h)| rng.random_range(l..=h))
                    .collect()
            })
            .collect(),
    };
    let normal = Normal::new(0.0, params.noise).expect("validated standard deviation");
    let targets = inputs
        .iter()
        .map(|x| {
            let eps = if params.noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            sc.truth(x) + params.bump * sc.bump_shape(x) + eps
        })
        .collect();
    Dataset::new(inputs, targets).map_err(CliError::validation)
}
