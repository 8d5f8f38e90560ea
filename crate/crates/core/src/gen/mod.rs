//! Seeded pseudo-random traces and specifications.

mod spec;

pub use spec::{random_spec, SpecShape};

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::interp::{Event, Trace};
use crate::ir::{Rational, Value, ValueType};
use crate::parser::Spec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("`{0}` is not an input of the specification")]
    UnknownInput(String),
    #[error("period for `{0}` must be positive")]
    NonPositivePeriod(String),
    #[error("invalid range for `{0}`")]
    BadRange(String),
    #[error("bias for `{0}` must be within [0, 1]")]
    BadBias(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Timing {
    /// Inputs sharing a period are emitted together at every positive
    /// multiple of it up to `duration`.
    Periodic { duration: Rational, rates: Vec<(Vec<String>, Rational)>, default_period: Rational },
    /// `events` records spaced by 0..=3 ticks, each covering a random
    /// non-empty subset of the inputs.
    Random { events: usize, tick: Rational },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub seed: u64,
    pub timing: Timing,
    /// Uniform ranges for numeric inputs.
    pub ranges: HashMap<String, (f64, f64)>,
    /// Probability of `true` for boolean inputs.
    pub bias: HashMap<String, f64>,
}

impl TraceConfig {
    pub fn periodic(duration: Rational, seed: u64) -> Self {
        TraceConfig {
            seed,
            timing: Timing::Periodic { duration, rates: Vec::new(), default_period: Rational::new(1, 10) },
            ranges: HashMap::new(),
            bias: HashMap::new(),
        }
    }

    pub fn random(events: usize, seed: u64) -> Self {
        TraceConfig {
            seed,
            timing: Timing::Random { events, tick: Rational::new(1, 100) },
            ranges: HashMap::new(),
            bias: HashMap::new(),
        }
    }

    /// Sets the period of a group of inputs (periodic timing only).
    pub fn rate(mut self, inputs: &[&str], period: Rational) -> Self {
        if let Timing::Periodic { rates, .. } = &mut self.timing {
            rates.push((inputs.iter().map(|s| s.to_string()).collect(), period));
        }
        self
    }

    pub fn range(mut self, input: &str, lo: f64, hi: f64) -> Self {
        self.ranges.insert(input.to_string(), (lo, hi));
        self
    }
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    cfg: &'a TraceConfig,
}

impl Sampler<'_> {
    fn value(&mut self, name: &str, ty: &ValueType) -> Value {
        match ty {
            ValueType::Bool => Value::Bool(self.rng.random_bool(*self.cfg.bias.get(name).unwrap_or(&0.5))),
            ValueType::Int64 => {
                let (lo, hi) = self.cfg.ranges.get(name).copied().unwrap_or((-100.0, 100.0));
                Value::Int(self.rng.random_range(lo.ceil() as i64..=hi.floor() as i64))
            }
            ValueType::Float64 => {
                let (lo, hi) = self.cfg.ranges.get(name).copied().unwrap_or((-1.0, 1.0));
                Value::Float(if lo == hi { lo } else { self.rng.random_range(lo..hi) })
            }
            ValueType::Tuple(items) => Value::Tuple(items.iter().map(|t| self.value(name, t)).collect()),
        }
    }
}

fn validate(spec: &Spec, cfg: &TraceConfig) -> Result<(), GenError> {
    let known = |n: &str| spec.input(n).is_some();
    for (name, (lo, hi)) in &cfg.ranges {
        if !known(name) {
            return Err(GenError::UnknownInput(name.clone()));
        }
        let int = spec.input(name).unwrap().ty == ValueType::Int64;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) || (int && lo.ceil() > hi.floor()) {
            return Err(GenError::BadRange(name.clone()));
        }
    }
    for (name, p) in &cfg.bias {
        if !known(name) {
            return Err(GenError::UnknownInput(name.clone()));
        }
        if !(0.0..=1.0).contains(p) {
            return Err(GenError::BadBias(name.clone()));
        }
    }
    if let Timing::Periodic { rates, default_period, .. } = &cfg.timing {
        if *default_period <= Rational::from_integer(0) {
            return Err(GenError::NonPositivePeriod("default".into()));
        }
        for (names, period) in rates {
            for n in names {
                if !known(n) {
                    return Err(GenError::UnknownInput(n.clone()));
                }
                if *period <= Rational::from_integer(0) {
                    return Err(GenError::NonPositivePeriod(n.clone()));
                }
            }
        }
    }
    Ok(())
}

pub fn generate(spec: &Spec, cfg: &TraceConfig) -> Result<Trace, GenError> {
    validate(spec, cfg)?;
    let mut trace = Trace::new(spec.inputs.iter().map(|i| i.name.clone()).collect());
    let mut s = Sampler { rng: ChaCha8Rng::seed_from_u64(cfg.seed), cfg };
    let n = spec.inputs.len();
    if n == 0 {
        return Ok(trace);
    }
    match &cfg.timing {
        Timing::Periodic { duration, rates, default_period } => {
            let mut period: Vec<Rational> = vec![*default_period; n];
            for (names, p) in rates {
                for name in names {
                    period[spec.inputs.iter().position(|i| i.name == *name).unwrap()] = *p;
                }
            }
            let mut at: BTreeMap<Rational, Vec<bool>> = BTreeMap::new();
            for (i, p) in period.iter().enumerate() {
                let count = (*duration / *p).floor().to_integer();
                for k in 1..=count {
                    at.entry(*p * k).or_insert_with(|| vec![false; n])[i] = true;
                }
            }
            for (time, covered) in at {
                let values =
                    spec.inputs.iter().zip(&covered).map(|(d, &c)| c.then(|| s.value(&d.name, &d.ty))).collect();
                trace.events.push(Event { time, values });
            }
        }
        Timing::Random { events, tick } => {
            let mut steps = 0i64;
            for _ in 0..*events {
                steps += match s.rng.random_range(0..20) {
                    0 if !trace.events.is_empty() => 0,
                    r => 1 + r % 3,
                };
                let mut covered = vec![false; n];
                while !covered.iter().any(|c| *c) {
                    covered.iter_mut().for_each(|c| *c = s.rng.random_bool(0.5));
                }
                let values =
                    spec.inputs.iter().zip(&covered).map(|(d, &c)| c.then(|| s.value(&d.name, &d.ty))).collect();
                trace.events.push(Event { time: *tick * steps, values });
            }
        }
    }
    Ok(trace)
}
