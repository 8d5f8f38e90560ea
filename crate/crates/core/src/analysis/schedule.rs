use std::collections::BTreeMap;

use num_integer::Integer;

use super::graph::StreamRef;
use super::typing::TypedSpec;
use crate::ir::{PacingType, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deadline {
    /// Offset from the start of the hyperperiod.
    pub offset: Rational,
    pub due: Vec<StreamRef>,
}

/// Static schedule of the periodic streams, repeating every `hyperperiod`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub hyperperiod: Rational,
    pub deadlines: Vec<Deadline>,
}

impl Schedule {
    pub fn is_empty(&self) -> bool {
        self.deadlines.is_empty()
    }
}

pub fn compute_schedule(ts: &TypedSpec) -> Schedule {
    let periodic: Vec<(StreamRef, crate::ir::Frequency)> = ts
        .output_types()
        .iter()
        .enumerate()
        .map(|(i, t)| (StreamRef::Output(i), &t.pacing))
        .chain(ts.trigger_types().iter().enumerate().map(|(i, t)| (StreamRef::Trigger(i), &t.pacing)))
        .filter_map(|(s, p)| match p {
            PacingType::Periodic(f) => Some((s, *f)),
            PacingType::EventBased(_) => None,
        })
        .collect();
    if periodic.is_empty() {
        return Schedule { hyperperiod: Rational::from_integer(0), deadlines: Vec::new() };
    }

    // Hyperperiod = lcm of periods = lcm(denominators) / gcd(numerators).
    let (num_gcd, den_lcm) = periodic.iter().fold((0u64, 1u64), |(g, l), (_, f)| {
        (g.gcd(&f.numerator()), l.lcm(&f.denominator()))
    });
    let hyperperiod = Rational::new(den_lcm as i64, num_gcd as i64);

    let mut at: BTreeMap<Rational, Vec<StreamRef>> = BTreeMap::new();
    for (s, f) in &periodic {
        let period = f.period();
        let count = (hyperperiod / period).to_integer();
        for k in 1..=count {
            at.entry(period * k).or_default().push(*s);
        }
    }
    let deadlines = at.into_iter().map(|(offset, due)| Deadline { offset, due }).collect();
    Schedule { hyperperiod, deadlines }
}
