use crate::ir::{Expr, PacingType, ValueType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDecl {
    pub name: String,
    pub ty: ValueType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDecl {
    pub name: String,
    pub ty: Option<ValueType>,
    pub pacing: Option<PacingType>,
    pub filter: Option<Expr>,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerDecl {
    pub pacing: Option<PacingType>,
    pub filter: Option<Expr>,
    pub condition: Expr,
    pub message: String,
}

/// An untyped specification: inputs, outputs and triggers in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Spec {
    pub inputs: Vec<InputDecl>,
    pub outputs: Vec<OutputDecl>,
    pub triggers: Vec<TriggerDecl>,
}

impl Spec {
    pub fn input(&self, name: &str) -> Option<&InputDecl> {
        self.inputs.iter().find(|i| i.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&OutputDecl> {
        self.outputs.iter().find(|o| o.name == name)
    }

    pub fn output_mut(&mut self, name: &str) -> Option<&mut OutputDecl> {
        self.outputs.iter_mut().find(|o| o.name == name)
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.input(name).is_some() || self.output(name).is_some()
    }

    /// Number of declared input and output streams.
    pub fn stream_count(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    /// Every expression and filter of the specification, mutably.
    pub fn expressions_mut(&mut self) -> impl Iterator<Item = &mut Expr> {
        let outputs = self.outputs.iter_mut().flat_map(|o| std::iter::once(&mut o.expr).chain(o.filter.as_mut()));
        let triggers =
            self.triggers.iter_mut().flat_map(|t| std::iter::once(&mut t.condition).chain(t.filter.as_mut()));
        outputs.chain(triggers)
    }

    pub fn expressions(&self) -> impl Iterator<Item = &Expr> {
        let outputs = self.outputs.iter().flat_map(|o| std::iter::once(&o.expr).chain(o.filter.as_ref()));
        let triggers = self.triggers.iter().flat_map(|t| std::iter::once(&t.condition).chain(t.filter.as_ref()));
        outputs.chain(triggers)
    }
}
