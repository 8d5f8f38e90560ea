use std::collections::HashMap;

use super::fold::fold_counting;
use super::{dead_stream_elim, retype, Pass, PassError, PassReport};
use crate::analysis::TypedSpec;
use crate::ir::{Expr, PacingType, Value};
use crate::parser::Spec;

/// Sparse conditional constant propagation: materialises pacing annotations,
/// folds expressions, substitutes constant streams into their readers until
/// nothing changes, then removes dead streams.
pub fn sccp(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
    let mut report = PassReport::new(Pass::Sccp, ts);
    let mut spec = ts.materialized();
    let mut inlined: Vec<String> = Vec::new();

    loop {
        let mut folded = 0;
        fold_all(&mut spec, &mut folded)?;
        report.constants_folded += folded;

        let constants: HashMap<String, (Value, PacingType)> = spec
            .outputs
            .iter()
            .filter(|o| o.filter.is_none())
            .filter_map(|o| Some((o.name.clone(), (o.expr.as_literal()?.clone(), o.pacing.clone()?))))
            .collect();

        let mut substituted = 0;
        for out in &mut spec.outputs {
            let pacing = out.pacing.clone().expect("materialized");
            for e in std::iter::once(&mut out.expr).chain(out.filter.as_mut()) {
                *e = substitute(e, &pacing, &constants, &mut substituted, &mut inlined)?;
            }
        }
        for trig in &mut spec.triggers {
            let pacing = trig.pacing.clone().expect("materialized");
            for e in std::iter::once(&mut trig.condition).chain(trig.filter.as_mut()) {
                *e = substitute(e, &pacing, &constants, &mut substituted, &mut inlined)?;
            }
        }
        if folded == 0 && substituted == 0 {
            break;
        }
    }
    report.streams_inlined = inlined.len();
    report.inlined = inlined;

    let folded = retype(spec)?;
    let (after, dse) = dead_stream_elim(&folded)?;
    report.streams_removed = dse.streams_removed;
    report.removed = dse.removed;
    Ok((after.clone(), report.finish(ts, &after)))
}

fn fold_all(spec: &mut Spec, count: &mut usize) -> Result<(), PassError> {
    let fold = |e: &mut Expr, stream: &str, count: &mut usize| -> Result<(), PassError> {
        *e = fold_counting(e, count).map_err(|fault| PassError::Fold { stream: stream.to_string(), fault })?;
        Ok(())
    };
    for out in &mut spec.outputs {
        fold(&mut out.expr, &out.name, count)?;
        if let Some(f) = &mut out.filter {
            fold(f, &out.name, count)?;
        }
    }
    for (i, trig) in spec.triggers.iter_mut().enumerate() {
        let name = format!("trigger#{i}");
        fold(&mut trig.condition, &name, count)?;
        if let Some(f) = &mut trig.filter {
            fold(f, &name, count)?;
        }
    }
    Ok(())
}

/// Replaces reads of constant streams that are guaranteed to observe the
/// constant.
fn substitute(
    e: &Expr,
    reader: &PacingType,
    constants: &HashMap<String, (Value, PacingType)>,
    count: &mut usize,
    inlined: &mut Vec<String>,
) -> Result<Expr, PassError> {
    let mut fit = |target: &str, value: &Value| {
        *count += 1;
        if !inlined.iter().any(|n| n == target) {
            inlined.push(target.to_string());
        }
        Some(Expr::Literal(value.clone()))
    };
    let mut failure = None;
    let out = e.rewrite(&mut |sub| match sub {
        Expr::Sync { target, offset, default } => {
            let (value, _) = constants.get(target)?;
            // A past read sees the default until enough history exists.
            if *offset == 0 || default.as_ref() == Some(value) {
                fit(target, value)
            } else {
                None
            }
        }
        Expr::Hold { target, default } => {
            let (value, pacing) = constants.get(target)?;
            let fresh = match reader.can_access_sync(pacing) {
                Ok(ok) => ok,
                Err(e) => {
                    failure = Some(e);
                    false
                }
            };
            if default == value || fresh {
                fit(target, value)
            } else {
                None
            }
        }
        _ => None,
    });
    match failure {
        Some(e) => Err(PassError::Retype(e.into())),
        None => Ok(out),
    }
}
