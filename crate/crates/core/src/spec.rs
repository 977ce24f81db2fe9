//! State specifiers accepted on the command line.
//!
//! | spec                   | state                                          |
//! |------------------------|------------------------------------------------|
//! | `maxent:d`             | maximally entangled state on `d x d`           |
//! | `isotropic:d:t`        | `(1-t) I/d^2 + t Phi(d)`                       |
//! | `tiles`                | 3x3 tiles UPB bound-entangled state            |
//! | `mixed:dA:dB`          | maximally mixed state                          |
//! | `random:dA:dB:seed`    | Hilbert-Schmidt random state                   |
//! | `sep:dA:dB:k:seed`     | mixture of `k` random product pure states      |
//! | `file:PATH`            | matrix JSON document                           |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{BipartiteShape, DensityMatrix};
use crate::states::{self, ProductEnsemble};

/// Parsed form of a state specifier, kept so reports can echo it.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    MaxEnt(usize),
    Isotropic(usize, f64),
    Tiles,
    Mixed(usize, usize),
    Random(usize, usize, u64),
    Separable { dim_a: usize, dim_b: usize, k: usize, seed: u64 },
    File(String),
}

/// A constructed state plus, for `sep:` specs, the ensemble certifying
/// separability.
#[derive(Clone, Debug)]
pub struct ParsedState {
    pub spec: StateSpec,
    pub state: DensityMatrix,
    pub ensemble: Option<ProductEnsemble>,
}

fn num<T: FromStr>(field: &str, what: &str, spec: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse(format!("bad {what} '{field}' in state spec '{spec}'")))
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::Parse("file: spec needs a path".into()));
            }
            return Ok(StateSpec::File(path.to_string()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let arity = |n: usize| -> Result<()> {
            if parts.len() != n + 1 {
                return Err(Error::Parse(format!("state spec '{s}' expects {n} argument(s)")));
            }
            Ok(())
        };
        match parts[0] {
            "maxent" => {
                arity(1)?;
                Ok(StateSpec::MaxEnt(num(parts[1], "dimension", s)?))
            }
            "isotropic" => {
                arity(2)?;
                Ok(StateSpec::Isotropic(num(parts[1], "dimension", s)?, num(parts[2], "weight", s)?))
            }
            "tiles" => {
                arity(0)?;
                Ok(StateSpec::Tiles)
            }
            "mixed" => {
                arity(2)?;
                Ok(StateSpec::Mixed(num(parts[1], "dimension", s)?, num(parts[2], "dimension", s)?))
            }
            "random" => {
                arity(3)?;
                Ok(StateSpec::Random(num(parts[1], "dimension", s)?, num(parts[2], "dimension", s)?, num(parts[3], "seed", s)?))
            }
            "sep" => {
                arity(4)?;
                Ok(StateSpec::Separable {
                    dim_a: num(parts[1], "dimension", s)?,
                    dim_b: num(parts[2], "dimension", s)?,
                    k: num(parts[3], "member count", s)?,
                    seed: num(parts[4], "seed", s)?,
                })
            }
            other => Err(Error::Parse(format!("unknown state family '{other}' in '{s}'"))),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::MaxEnt(d) => write!(f, "maxent:{d}"),
            StateSpec::Isotropic(d, t) => write!(f, "isotropic:{d}:{t}"),
            StateSpec::Tiles => write!(f, "tiles"),
            StateSpec::Mixed(a, b) => write!(f, "mixed:{a}:{b}"),
            StateSpec::Random(a, b, s) => write!(f, "random:{a}:{b}:{s}"),
            StateSpec::Separable { dim_a, dim_b, k, seed } => write!(f, "sep:{dim_a}:{dim_b}:{k}:{seed}"),
            StateSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

impl StateSpec {
    pub fn build(&self) -> Result<ParsedState> {
        let (state, ensemble) = match self {
            StateSpec::MaxEnt(d) => (states::max_entangled(*d)?, None),
            StateSpec::Isotropic(d, t) => (states::isotropic(*d, *t)?, None),
            StateSpec::Tiles => (states::tiles_upb_state(), None),
            StateSpec::Mixed(a, b) => (DensityMatrix::maximally_mixed(BipartiteShape::new(*a, *b)?), None),
            StateSpec::Random(a, b, seed) => (states::random_density(BipartiteShape::new(*a, *b)?, *seed), None),
            StateSpec::Separable { dim_a, dim_b, k, seed } => {
                let (rho, ens) = states::random_separable(BipartiteShape::new(*dim_a, *dim_b)?, *k, *seed)?;
                (rho, Some(ens))
            }
            StateSpec::File(path) => (io::read_density(path)?, None),
        };
        Ok(ParsedState { spec: self.clone(), state, ensemble })
    }
}

pub fn parse_state_spec(spec: &str) -> Result<ParsedState> {
    spec.parse::<StateSpec>()?.build()
}
