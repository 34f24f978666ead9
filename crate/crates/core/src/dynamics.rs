//! Recursive, incursive and hyper-incursive logistic maps.
//!
//! * recursive: `x[t+1] = a·x[t]·(1 - x[t])`
//! * incursive: `x[t+1] = a·x[t]·(1 - x[t+1])`, solved as `a·x / (1 + a·x)`
//! * hyper-incursive: `x[t] = a·x[t+1]·(1 - x[t+1])`, solved for the next state
//!   as `½ ± ½·√(1 - (4/a)·x[t])`, with a decision bit choosing the root

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for treating a trajectory as having reached a steady state.
pub const STEADY_STATE_TOLERANCE: f64 = 1e-9;

pub fn recursive_step(a: f64, x: f64) -> f64 {
    a * x * (1.0 - x)
}

pub fn incursive_step(a: f64, x: f64) -> f64 {
    a * x / (1.0 + a * x)
}

/// Picks the `+` root when `decision` is true, the `-` root otherwise.
pub fn hyper_incursive_step(a: f64, x: f64, decision: bool) -> Result<f64> {
    let discriminant = 1.0 - (4.0 / a) * x;
    if discriminant.is_nan() || discriminant < 0.0 {
        return Err(Error::ComplexRoot { a, x, discriminant });
    }
    let half_root = 0.5 * discriminant.sqrt();
    Ok(if decision {
        0.5 + half_root
    } else {
        0.5 - half_root
    })
}

/// Non-zero fixed point of the incursive map.
pub fn steady_state_incursive(a: f64) -> f64 {
    (a - 1.0) / a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Recursive,
    Incursive,
    HyperIncursive,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Recursive => "recursive",
            Variant::Incursive => "incursive",
            Variant::HyperIncursive => "hyper_incursive",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "recursive" => Ok(Variant::Recursive),
            "incursive" => Ok(Variant::Incursive),
            "hyper_incursive" => Ok(Variant::HyperIncursive),
            other => Err(Error::InvalidParameter(format!(
                "unknown variant `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub a: f64,
    pub x0: f64,
    pub steps: usize,
}

impl DynamicsParams {
    pub fn new(a: f64, x0: f64, steps: usize) -> Result<Self> {
        let p = DynamicsParams { a, x0, steps };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.x0) {
            return Err(Error::InvalidParameter(format!(
                "x0 = {} is outside [0, 1]",
                self.x0
            )));
        }
        if !self.a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "a = {} is not finite",
                self.a
            )));
        }
        Ok(())
    }
}

/// Where hyper-incursive root choices come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Decisions {
    Explicit(Vec<bool>),
    Seeded(u64),
}

/// Why a trajectory stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Truncation {
    /// The hyper-incursive step had no real root; the failing state is the last value.
    ComplexRoot { step: usize, discriminant: f64 },
    /// A state left [0, 1]; it is kept as the last value.
    LeftUnitInterval { step: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub variant: Variant,
    pub a: f64,
    /// `x_0 ..= x_T`.
    pub values: Vec<f64>,
    /// One bit per step taken, hyper-incursive only.
    pub decisions: Option<Vec<bool>>,
    pub truncation: Option<Truncation>,
}

impl Trajectory {
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trajectory holds x0")
    }

    pub fn is_truncated(&self) -> bool {
        self.truncation.is_some()
    }

    /// First step `t` with `|x_t - target| <= STEADY_STATE_TOLERANCE`.
    pub fn first_within(&self, target: f64) -> Option<usize> {
        self.values
            .iter()
            .position(|x| (x - target).abs() <= STEADY_STATE_TOLERANCE)
    }

    /// Columns `t,x,decision`; the decision column is empty outside the
    /// hyper-incursive variant and for `t = 0`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x", "decision"])?;
        for (t, x) in self.values.iter().enumerate() {
            let decision = match (&self.decisions, t) {
                (Some(d), t) if t > 0 => (d[t - 1] as u8).to_string(),
                _ => String::new(),
            };
            w.write_record([t.to_string(), x.to_string(), decision])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Iterates the chosen map `params.steps` times from `params.x0`.
///
/// Recursive runs stop after the first state outside [0, 1]; hyper-incursive
/// runs stop at the first complex root. Both cases set [`Trajectory::truncation`].
/// `decisions` is only consulted for the hyper-incursive variant; an explicit
/// list must hold at least `steps` bits.
pub fn simulate(
    params: DynamicsParams,
    variant: Variant,
    decisions: Option<Decisions>,
) -> Result<Trajectory> {
    params.validate()?;
    let DynamicsParams { a, x0, steps } = params;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(x0);
    let mut truncation = None;
    let mut used = None;

    match variant {
        Variant::Recursive => {
            let mut x = x0;
            for step in 1..=steps {
                x = recursive_step(a, x);
                values.push(x);
                if !(0.0..=1.0).contains(&x) {
                    truncation = Some(Truncation::LeftUnitInterval { step });
                    break;
                }
            }
        }
        Variant::Incursive => {
            if a.is_nan() || a <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "incursive map needs a > 0, got {a}"
                )));
            }
            let mut x = x0;
            for _ in 0..steps {
                x = incursive_step(a, x);
                values.push(x);
            }
        }
        Variant::HyperIncursive => {
            if a.is_nan() || a <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "hyper-incursive map needs a > 0, got {a}"
                )));
            }
            let bits: Vec<bool> = match decisions {
                Some(Decisions::Explicit(bits)) => {
                    if bits.len() < steps {
                        return Err(Error::InvalidParameter(format!(
                            "{} decisions supplied for {steps} steps",
                            bits.len()
                        )));
                    }
                    bits
                }
                Some(Decisions::Seeded(seed)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..steps).map(|_| rng.gen::<bool>()).collect()
                }
                None => {
                    return Err(Error::InvalidParameter(
                        "hyper-incursive simulation needs decisions or a seed".into(),
                    ))
                }
            };
            let mut taken = Vec::with_capacity(steps);
            let mut x = x0;
            for (step, &bit) in bits.iter().take(steps).enumerate() {
                match hyper_incursive_step(a, x, bit) {
                    Ok(next) => {
                        x = next;
                        values.push(x);
                        taken.push(bit);
                    }
                    Err(Error::ComplexRoot { discriminant, .. }) => {
                        truncation = Some(Truncation::ComplexRoot {
                            step: step + 1,
                            discriminant,
                        });
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            used = Some(taken);
        }
    }

    Ok(Trajectory {
        variant,
        a,
        values,
        decisions: used,
        truncation,
    })
}
