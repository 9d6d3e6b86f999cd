//! Weighted multi-loss objectives: `L(f, S) = s_1 L_1 + ... + s_k L_k`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sym::SymParameter;
use crate::tensor::{Tape, TensorId};

/// A named loss term evaluated on (prediction, target) tape nodes.
pub struct LossTerm {
    name: String,
    eval: Box<dyn Fn(&mut Tape, TensorId, TensorId) -> Result<TensorId>>,
}

impl LossTerm {
    pub fn new(
        name: &str,
        eval: impl Fn(&mut Tape, TensorId, TensorId) -> Result<TensorId> + 'static,
    ) -> Self {
        LossTerm {
            name: String::from(name),
            eval: Box::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, tape: &mut Tape, pred: TensorId, target: TensorId) -> Result<TensorId> {
        (self.eval)(tape, pred, target)
    }
}

/// Ordered list of loss terms plus the weighted combinator.
pub struct WeightedObjective {
    terms: Vec<LossTerm>,
}

impl WeightedObjective {
    pub fn new(terms: Vec<LossTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Usage("objective needs at least one loss term".into()));
        }
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                if terms[i].name == terms[j].name {
                    return Err(Error::Usage(format!(
                        "duplicate loss term name '{}'",
                        terms[i].name
                    )));
                }
            }
        }
        Ok(WeightedObjective { terms })
    }

    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[LossTerm] {
        &self.terms
    }

    pub fn names(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.name.as_str()).collect()
    }

    /// Evaluate `sum_i s_i * L_i(pred, target_i)` on the tape. Returns the
    /// combined scalar and the per-term scalar ids (unweighted).
    pub fn combine(
        &self,
        tape: &mut Tape,
        s: &SymParameter,
        pred: TensorId,
        targets: &[TensorId],
    ) -> Result<(TensorId, Vec<TensorId>)> {
        if s.k() != self.terms.len() {
            return Err(Error::Usage(format!(
                "sym-parameter has k={}, objective has k={}",
                s.k(),
                self.terms.len()
            )));
        }
        if targets.len() != self.terms.len() {
            return Err(Error::Usage(format!(
                "expected {} targets, got {}",
                self.terms.len(),
                targets.len()
            )));
        }
        let mut term_ids = Vec::with_capacity(self.terms.len());
        for (term, &target) in self.terms.iter().zip(targets) {
            term_ids.push(term.eval(tape, pred, target)?);
        }
        let mut total: Option<TensorId> = None;
        for (&tid, &w) in term_ids.iter().zip(s.values()) {
            let weighted = tape.scale(tid, w)?;
            total = Some(match total {
                None => weighted,
                Some(acc) => tape.add(acc, weighted)?,
            });
        }
        Ok((total.unwrap(), term_ids))
    }
}
