//! Model to circuit in one call: elaborate, lower, solve, emit, measure.

use crate::callgraph::{lower_to_graph, CallGraph, GraphError, LowerOptions};
use crate::circuit::{Circuit, Metrics};
use crate::domains::{ConstraintSet, Objective};
use crate::emitter::{emit, EmitError};
use crate::model::{elaborate, Elaborated, Model, ModelError};
use crate::solver::{solve, SolveOptions, SolveResult};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error("solution violates a constraint after emission: {0}")]
    Unsound(String),
}

pub struct Synthesis {
    pub elaborated: Elaborated,
    pub graph: CallGraph,
    pub result: SolveResult,
    /// Present when a solution was found.
    pub circuit: Option<Circuit>,
    pub metrics: Option<Metrics>,
}

/// Lowers a model to its call graph.
pub fn build_graph(model: &Model) -> Result<(Elaborated, CallGraph), SynthError> {
    let el = elaborate(model)?;
    let g = lower_to_graph(&el, LowerOptions::default())?;
    Ok((el, g))
}

pub fn synthesize(
    model: &Model,
    cons: &ConstraintSet,
    obj: Objective,
    opts: &SolveOptions,
) -> Result<Synthesis, SynthError> {
    let (el, graph) = build_graph(model)?;
    synthesize_graph(el, graph, cons, obj, opts)
}

pub fn synthesize_graph(
    el: Elaborated,
    graph: CallGraph,
    cons: &ConstraintSet,
    obj: Objective,
    opts: &SolveOptions,
) -> Result<Synthesis, SynthError> {
    let result = solve(&graph, cons, obj, opts);
    let (circuit, metrics) = match &result.solution {
        Some(sol) => {
            let c = emit(&graph, sol)?;
            let m = crate::circuit::measure(&c);
            if !cons.satisfied_by(m.width, m.depth, m.counts) {
                return Err(SynthError::Unsound(format!("{m:?} against {cons:?}")));
            }
            (Some(c), Some(m))
        }
        None => (None, None),
    };
    Ok(Synthesis { elaborated: el, graph, result, circuit, metrics })
}
