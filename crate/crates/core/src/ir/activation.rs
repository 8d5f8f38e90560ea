use std::collections::BTreeSet;
use std::fmt;

use super::IrError;

/// Largest number of distinct inputs for which implication is decided by
/// enumerating every assignment.
pub const MAX_IMPLICATION_INPUTS: usize = 20;

/// A positive boolean formula over input-stream names. An event-based stream
/// is evaluated whenever the set of inputs covered by an event satisfies it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ActivationCondition {
    Input(String),
    Conjunction(Vec<ActivationCondition>),
    Disjunction(Vec<ActivationCondition>),
}

impl ActivationCondition {
    pub fn input(name: impl Into<String>) -> Self {
        ActivationCondition::Input(name.into())
    }

    /// Distinct input names mentioned by the formula.
    pub fn leaves(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            ActivationCondition::Input(name) => {
                out.insert(name.as_str());
            }
            ActivationCondition::Conjunction(parts) | ActivationCondition::Disjunction(parts) => {
                parts.iter().for_each(|p| p.collect_leaves(out))
            }
        }
    }

    /// Evaluates the formula with every covered input set to true.
    pub fn eval<F: Fn(&str) -> bool + Copy>(&self, covered: F) -> bool {
        match self {
            ActivationCondition::Input(name) => covered(name),
            ActivationCondition::Conjunction(parts) => parts.iter().all(|p| p.eval(covered)),
            ActivationCondition::Disjunction(parts) => parts.iter().any(|p| p.eval(covered)),
        }
    }

    pub fn implies(&self, other: &ActivationCondition) -> Result<bool, IrError> {
        ac_implies(self, other)
    }

    /// Implication in both directions.
    pub fn equivalent(&self, other: &ActivationCondition) -> Result<bool, IrError> {
        Ok(ac_implies(self, other)? && ac_implies(other, self)?)
    }

    pub fn and(&self, other: &ActivationCondition) -> ActivationCondition {
        ac_and(self, other)
    }

    pub fn or(&self, other: &ActivationCondition) -> ActivationCondition {
        ac_or(self, other)
    }

    fn eval_indexed(&self, names: &[&str], mask: u32) -> bool {
        self.eval(|name| {
            let idx = names.binary_search(&name).expect("leaf collected");
            mask & (1 << idx) != 0
        })
    }
}

/// Decides `phi => psi` by enumerating all assignments of the mentioned inputs.
pub fn ac_implies(phi: &ActivationCondition, psi: &ActivationCondition) -> Result<bool, IrError> {
    let mut names = phi.leaves();
    names.extend(psi.leaves());
    if names.len() > MAX_IMPLICATION_INPUTS {
        return Err(IrError::ImplicationCapacity(names.len()));
    }
    let names: Vec<&str> = names.into_iter().collect();
    let total = 1u32 << names.len();
    Ok((0..total).all(|mask| !phi.eval_indexed(&names, mask) || psi.eval_indexed(&names, mask)))
}

#[derive(Clone, Copy, PartialEq)]
enum Connective {
    And,
    Or,
}

fn flatten_into(out: &mut Vec<ActivationCondition>, ac: &ActivationCondition, connective: Connective) {
    match (ac, connective) {
        (ActivationCondition::Conjunction(parts), Connective::And)
        | (ActivationCondition::Disjunction(parts), Connective::Or) => {
            parts.iter().for_each(|p| flatten_into(out, p, connective))
        }
        _ => {
            if !out.contains(ac) {
                out.push(ac.clone());
            }
        }
    }
}

fn combine(phi: &ActivationCondition, psi: &ActivationCondition, connective: Connective) -> ActivationCondition {
    let mut operands = Vec::new();
    flatten_into(&mut operands, phi, connective);
    flatten_into(&mut operands, psi, connective);

    // Absorption: in a disjunction an operand implying another is redundant; in
    // a conjunction an operand implied by another is. Among equivalent
    // operands the first one survives.
    let redundant = |i: usize, ops: &[ActivationCondition]| {
        ops.iter().enumerate().any(|(j, other)| {
            if i == j {
                return false;
            }
            let (strong, weak) = match connective {
                Connective::Or => (&ops[i], other),
                Connective::And => (other, &ops[i]),
            };
            let Ok(true) = ac_implies(strong, weak) else { return false };
            let equivalent = matches!(ac_implies(weak, strong), Ok(true));
            !equivalent || j < i
        })
    };
    let keep: Vec<bool> = (0..operands.len()).map(|i| !redundant(i, &operands)).collect();
    let mut kept: Vec<ActivationCondition> =
        operands.into_iter().zip(keep).filter_map(|(op, k)| k.then_some(op)).collect();
    if kept.len() == 1 {
        return kept.pop().unwrap();
    }
    match connective {
        Connective::And => ActivationCondition::Conjunction(kept),
        Connective::Or => ActivationCondition::Disjunction(kept),
    }
}

pub fn ac_and(phi: &ActivationCondition, psi: &ActivationCondition) -> ActivationCondition {
    combine(phi, psi, Connective::And)
}

pub fn ac_or(phi: &ActivationCondition, psi: &ActivationCondition) -> ActivationCondition {
    combine(phi, psi, Connective::Or)
}

impl fmt::Display for ActivationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationCondition::Input(name) => f.write_str(name),
            ActivationCondition::Conjunction(parts) => {
                for (i, part) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" && ")?;
                    }
                    match part {
                        ActivationCondition::Disjunction(_) => write!(f, "({part})")?,
                        _ => write!(f, "{part}")?,
                    }
                }
                Ok(())
            }
            ActivationCondition::Disjunction(parts) => {
                for (i, part) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    write!(f, "{part}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(n: &str) -> ActivationCondition {
        ActivationCondition::input(n)
    }

    #[test]
    fn implication_examples() {
        let alt_lat = ac_and(&leaf("alt"), &leaf("lat"));
        assert!(ac_implies(&alt_lat, &leaf("alt")).unwrap());
        assert!(!ac_implies(&leaf("alt"), &alt_lat).unwrap());
        let a_or_b = ac_or(&leaf("a"), &leaf("b"));
        assert!(!ac_implies(&a_or_b, &leaf("a")).unwrap());
    }

    #[test]
    fn combination_examples() {
        let alt_lat = ac_and(&leaf("alt"), &leaf("lat"));
        assert_eq!(alt_lat, ActivationCondition::Conjunction(vec![leaf("alt"), leaf("lat")]));
        assert_eq!(alt_lat.to_string(), "alt && lat");
        assert_eq!(ac_or(&leaf("alt"), &leaf("alt")), leaf("alt"));
        assert_eq!(ac_or(&alt_lat, &leaf("alt")), leaf("alt"));
        assert_eq!(ac_and(&alt_lat, &alt_lat), alt_lat);
    }

    #[test]
    fn capacity() {
        let wide = (0..21)
            .map(|i| leaf(&format!("i{i}")))
            .reduce(|acc, x| ac_and(&acc, &x))
            .unwrap();
        assert!(matches!(ac_implies(&wide, &leaf("i0")), Err(IrError::ImplicationCapacity(21))));
    }

    #[test]
    fn display_nested() {
        let ac = ac_and(&leaf("a"), &ac_or(&leaf("b"), &leaf("c")));
        assert_eq!(ac.to_string(), "a && (b || c)");
    }
}
