//! Circuit templates: local product layers interleaved with forward-only
//! applications of an unknown bipartite operation.
//!
//! A template with `k` queries stores `k + 1` local layers `L_0..L_k` in
//! application order and evaluates to `L_k X ... L_1 X L_0`.

use serde::{Deserialize, Serialize};

use crate::bipartite::operator_schmidt_matrix;
use crate::error::{dims_mismatch, Error, Result};
use crate::io::{matrix_entries, matrix_from_entries};
use crate::linalg::{identity, kron, unitarity_defect, BipartiteUnitary, CMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct LocalLayer {
    pub factor_a: CMatrix,
    pub factor_b: CMatrix,
}

impl LocalLayer {
    pub fn new(factor_a: CMatrix, factor_b: CMatrix) -> Self {
        Self { factor_a, factor_b }
    }

    pub fn identity(d_a: usize, d_b: usize) -> Self {
        Self::new(identity(d_a), identity(d_b))
    }

    pub fn on_a(a: CMatrix, d_b: usize) -> Self {
        Self::new(a, identity(d_b))
    }

    pub fn on_b(d_a: usize, b: CMatrix) -> Self {
        Self::new(identity(d_a), b)
    }

    pub fn matrix(&self) -> CMatrix {
        kron(&self.factor_a, &self.factor_b)
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &LocalLayer) -> LocalLayer {
        LocalLayer::new(&self.factor_a * &first.factor_a, &self.factor_b * &first.factor_b)
    }
}

/// One step of a circuit before normalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Local(LocalLayer),
    Query,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitTemplate {
    d_a: usize,
    d_b: usize,
    locals: Vec<LocalLayer>,
}

impl CircuitTemplate {
    /// Normal form of a step sequence: adjacent locals are merged and empty
    /// slots between queries get identity layers.
    pub fn from_steps(d_a: usize, d_b: usize, steps: impl IntoIterator<Item = Step>) -> Self {
        let mut locals = vec![LocalLayer::identity(d_a, d_b)];
        for step in steps {
            match step {
                Step::Local(l) => {
                    let last = locals.last_mut().expect("never empty");
                    *last = l.after(last);
                }
                Step::Query => locals.push(LocalLayer::identity(d_a, d_b)),
            }
        }
        Self { d_a, d_b, locals }
    }

    pub fn from_locals(d_a: usize, d_b: usize, locals: Vec<LocalLayer>) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::DimensionMismatch("template needs at least one local layer".into()));
        }
        for l in &locals {
            if l.factor_a.shape() != (d_a, d_a) || l.factor_b.shape() != (d_b, d_b) {
                return Err(dims_mismatch("template layer", (l.factor_a.nrows(), l.factor_b.nrows()), (d_a, d_b)));
            }
        }
        Ok(Self { d_a, d_b, locals })
    }

    /// The bare query `X`.
    pub fn query(d_a: usize, d_b: usize) -> Self {
        Self::from_steps(d_a, d_b, [Step::Query])
    }

    pub fn local(layer: LocalLayer) -> Self {
        let (d_a, d_b) = (layer.factor_a.nrows(), layer.factor_b.nrows());
        Self::from_steps(d_a, d_b, [Step::Local(layer)])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn query_count(&self) -> usize {
        self.locals.len() - 1
    }

    pub fn locals(&self) -> &[LocalLayer] {
        &self.locals
    }

    pub fn locals_mut(&mut self) -> &mut [LocalLayer] {
        &mut self.locals
    }

    pub fn steps(&self) -> Vec<Step> {
        let mut out = Vec::with_capacity(2 * self.locals.len());
        for (i, l) in self.locals.iter().enumerate() {
            if i > 0 {
                out.push(Step::Query);
            }
            out.push(Step::Local(l.clone()));
        }
        out
    }

    pub fn evaluate(&self, x: &BipartiteUnitary) -> Result<BipartiteUnitary> {
        if x.dims() != self.dims() {
            return Err(dims_mismatch("evaluate_template", x.dims(), self.dims()));
        }
        BipartiteUnitary::new(self.evaluate_matrix(x.matrix()), self.d_a, self.d_b)
    }

    /// Unchecked evaluation on a raw matrix of the right size.
    pub fn evaluate_matrix(&self, x: &CMatrix) -> CMatrix {
        let mut m = self.locals[0].matrix();
        for l in &self.locals[1..] {
            m = l.matrix() * (x * m);
        }
        m
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &CircuitTemplate) -> Result<CircuitTemplate> {
        if next.dims() != self.dims() {
            return Err(dims_mismatch("then", next.dims(), self.dims()));
        }
        Ok(Self::from_steps(self.d_a, self.d_b, self.steps().into_iter().chain(next.steps())))
    }

    pub fn then_local(&self, layer: LocalLayer) -> CircuitTemplate {
        Self::from_steps(self.d_a, self.d_b, self.steps().into_iter().chain([Step::Local(layer)]))
    }

    /// Substitutes `inner` at every query slot of `outer`.
    pub fn compose(outer: &CircuitTemplate, inner: &CircuitTemplate) -> Result<CircuitTemplate> {
        if outer.dims() != inner.dims() {
            return Err(dims_mismatch("compose_templates", outer.dims(), inner.dims()));
        }
        let inner_steps = inner.steps();
        let steps = outer.steps().into_iter().flat_map(|s| match s {
            Step::Query => inner_steps.clone(),
            local => vec![local],
        });
        Ok(Self::from_steps(outer.d_a, outer.d_b, steps))
    }

    /// `L_k (I + ...) L_0` with every slot padded by one more identity layer.
    pub fn padded(&self) -> CircuitTemplate {
        let mut t = self.clone();
        t.locals.push(LocalLayer::identity(self.d_a, self.d_b));
        t
    }

    /// Largest unitarity defect over all local factors.
    pub fn max_factor_defect(&self) -> f64 {
        self.locals
            .iter()
            .flat_map(|l| [unitarity_defect(&l.factor_a), unitarity_defect(&l.factor_b)])
            .fold(0.0, f64::max)
    }

    /// Every layer has operator Schmidt rank one and unitary factors.
    pub fn is_locc_legal(&self, tol: f64) -> bool {
        self.max_factor_defect() <= tol
            && self.locals.iter().all(|l| {
                let osd = operator_schmidt_matrix(&l.matrix(), self.d_a, self.d_b);
                osd.coefficients.iter().skip(1).all(|&s| s <= tol)
            })
    }

    pub fn to_file(&self) -> TemplateFile {
        let layers = self
            .steps()
            .into_iter()
            .map(|s| match s {
                Step::Query => LayerRecord::Query {},
                Step::Local(l) => LayerRecord::Local {
                    factor_a: matrix_entries(&l.factor_a),
                    factor_b: matrix_entries(&l.factor_b),
                },
            })
            .collect();
        TemplateFile { d_a: self.d_a, d_b: self.d_b, layers }
    }

    pub fn from_file(file: &TemplateFile, tol: f64) -> Result<Self> {
        let mut steps = Vec::with_capacity(file.layers.len());
        for rec in &file.layers {
            steps.push(match rec {
                LayerRecord::Query {} => Step::Query,
                LayerRecord::Local { factor_a, factor_b } => {
                    let a = matrix_from_entries(file.d_a, factor_a)?;
                    let b = matrix_from_entries(file.d_b, factor_b)?;
                    for m in [&a, &b] {
                        let defect = unitarity_defect(m);
                        if defect > tol {
                            return Err(Error::NotUnitary { defect });
                        }
                    }
                    Step::Local(LocalLayer::new(a, b))
                }
            });
        }
        Ok(Self::from_steps(file.d_a, file.d_b, steps))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayerRecord {
    Local { factor_a: Vec<[f64; 2]>, factor_b: Vec<[f64; 2]> },
    Query {},
}

/// Serialized template: a dims header and the ordered layer records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateFile {
    pub d_a: usize,
    pub d_b: usize,
    pub layers: Vec<LayerRecord>,
}

/// Structural scan of a serialized template: every record must be a local
/// layer or a forward query. Returns the number of queries.
pub fn scan_forward_only(value: &serde_json::Value) -> Result<usize> {
    let layers = value
        .get("layers")
        .and_then(|l| l.as_array())
        .ok_or_else(|| Error::Parse("template has no layer list".into()))?;
    let mut queries = 0;
    for rec in layers {
        match rec.get("kind").and_then(|k| k.as_str()) {
            Some("query") => {
                if rec.as_object().is_some_and(|o| o.len() != 1) {
                    return Err(Error::Parse("query record carries extra fields".into()));
                }
                queries += 1;
            }
            Some("local") => {}
            other => return Err(Error::Parse(format!("unexpected layer kind {other:?}"))),
        }
    }
    Ok(queries)
}
