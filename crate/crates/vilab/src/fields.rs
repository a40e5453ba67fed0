//! Named closed-form data fields and seeded random vectors.
//!
//! Every baseline in a config file is describable as a small preset string,
//! so experiments need no external data files:
//!
//! * `const:c`         : constant c
//! * `step:a,b,t`      : a where x <= t, b where x > t (first coordinate)
//! * `sin:a,k`         : a·sin(kπx) (times sin(kπy) in 2D)
//! * `random:seed,amp` : i.i.d. uniform on [-amp, amp], ChaCha-seeded
//! * `zero`            : shorthand for const:0

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Role};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Parsed description of a closed-form nodal field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Const(f64),
    Step {
        low_x: f64,
        high_x: f64,
        threshold: f64,
    },
    Sin {
        amplitude: f64,
        frequency: f64,
    },
    Random {
        seed: u64,
        amplitude: f64,
    },
}

impl FieldSpec {
    pub fn parse(text: &str) -> Result<FieldSpec> {
        let text = text.trim();
        if text == "zero" {
            return Ok(FieldSpec::Const(0.0));
        }
        let (name, args) = match text.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (text, ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("bad numeric argument '{s}' in field '{text}'"))
                    })
                })
                .collect::<Result<_>>()?
        };
        match (name, nums.as_slice()) {
            ("const", [c]) => Ok(FieldSpec::Const(*c)),
            ("step", [a, b, t]) => Ok(FieldSpec::Step { low_x: *a, high_x: *b, threshold: *t }),
            ("sin", [a, k]) => Ok(FieldSpec::Sin { amplitude: *a, frequency: *k }),
            ("random", [seed, amp]) => {
                if *seed < 0.0 || seed.fract() != 0.0 {
                    return Err(Error::Config(format!("random seed must be a nonnegative integer, got {seed}")));
                }
                Ok(FieldSpec::Random { seed: *seed as u64, amplitude: *amp })
            }
            _ => Err(Error::Config(format!(
                "cannot parse field preset '{text}' (expected const:c | step:a,b,t | sin:a,k | random:seed,amp | zero)"
            ))),
        }
    }

    fn value_at(&self, x: f64, y: f64, dim: usize, draw: &mut Option<ChaCha8Rng>) -> f64 {
        match *self {
            FieldSpec::Const(c) => c,
            FieldSpec::Step {
                low_x,
                high_x,
                threshold,
            } => {
                if x <= threshold {
                    low_x
                } else {
                    high_x
                }
            }
            FieldSpec::Sin {
                amplitude,
                frequency,
            } => {
                let v = amplitude * (frequency * std::f64::consts::PI * x).sin();
                if dim == 2 {
                    v * (frequency * std::f64::consts::PI * y).sin()
                } else {
                    v
                }
            }
            FieldSpec::Random { amplitude, .. } => {
                let rng = draw.as_mut().expect("random field requires rng");
                amplitude * unit_symmetric(rng)
            }
        }
    }

    /// Evaluate at the nodes selected by `role` (all nodes for state/control,
    /// Γ-subsets for boundary data), in node-index order.
    pub fn evaluate(&self, grid: &Grid, role: Role) -> GridFunction {
        let mut rng = match self {
            FieldSpec::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        let idx: Vec<usize> = match role {
            Role::State | Role::Control => (0..grid.node_count()).collect(),
            Role::TraceData => grid.gamma1_nodes(),
            Role::FluxData => grid.gamma2_nodes(),
        };
        let values = idx
            .iter()
            .map(|&i| {
                let [x, y] = grid.coord(i);
                self.value_at(x, y, grid.dim(), &mut rng)
            })
            .collect();
        GridFunction { values, role }
    }
}

/// Uniform draw on [-1, 1), platform-independent (mantissa bits of a u64).
fn unit_symmetric(rng: &mut ChaCha8Rng) -> f64 {
    let u = rng.next_u64() >> 11; // 53 bits
    2.0 * (u as f64 / (1u64 << 53) as f64) - 1.0
}

/// Seeded vector of i.i.d. uniform values on [-amp, amp].
pub fn random_vector(seed: u64, len: usize, amp: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| amp * unit_symmetric(&mut rng)).collect()
}

/// Seeded vector of i.i.d. uniform values on [0, amp].
pub fn random_nonneg_vector(seed: u64, len: usize, amp: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| amp * 0.5 * (unit_symmetric(&mut rng) + 1.0))
        .collect()
}
