//! BOLD: run a pool of undelayed base learners so that each instance only
//! predicts again after its previous feedback has come back.

use std::collections::HashMap;

use crate::baselines::classic::BaseLearner;
use crate::error::{Error, Result};
use crate::learners::{Feedback, FeedbackKind, OnlineLearner};
use crate::Vector;

#[derive(Clone, Debug)]
pub struct Bold<B> {
    prototype: B,
    instances: Vec<B>,
    busy: Vec<bool>,
    assignment: HashMap<usize, usize>,
    round: usize,
}

impl<B: BaseLearner> Bold<B> {
    /// New instances are clones of `prototype`.
    pub fn new(prototype: B) -> Self {
        Self {
            prototype,
            instances: Vec::new(),
            busy: Vec::new(),
            assignment: HashMap::new(),
            round: 0,
        }
    }

    pub fn pool_size(&self) -> usize {
        self.instances.len()
    }

    pub fn instance(&self, idx: usize) -> Option<&B> {
        self.instances.get(idx)
    }

    pub fn assigned(&self, origin: usize) -> Option<usize> {
        self.assignment.get(&origin).copied()
    }

    /// Smallest-index free instance, growing the pool when all are busy.
    pub fn route(&mut self, t: usize) -> usize {
        let idx = match self.busy.iter().position(|b| !b) {
            Some(i) => i,
            None => {
                self.instances.push(self.prototype.clone());
                self.busy.push(false);
                self.instances.len() - 1
            }
        };
        self.busy[idx] = true;
        self.assignment.insert(t, idx);
        idx
    }

    /// Hands a packet to the instance that played its origin round.
    pub fn feedback(&mut self, packet: &Feedback) -> Result<()> {
        let origin = packet.origin();
        let idx = self.assignment.remove(&origin).ok_or_else(|| {
            Error::Data(format!(
                "feedback for round {origin} which has no outstanding assignment"
            ))
        })?;
        self.instances[idx].update(packet)?;
        self.busy[idx] = false;
        Ok(())
    }
}

impl<B: BaseLearner> OnlineLearner for Bold<B> {
    fn feedback_kind(&self) -> FeedbackKind {
        self.prototype.feedback_kind()
    }

    fn play(&mut self, t: usize, context: Option<&Vector>) -> Result<Vector> {
        if t != self.round + 1 {
            return Err(Error::Sequencing(format!(
                "round {t} played after round {}",
                self.round
            )));
        }
        self.round = t;
        let idx = self.route(t);
        self.instances[idx].predict(context)
    }

    fn absorb(&mut self, t: usize, batch: &[Feedback]) -> Result<()> {
        if t != self.round {
            return Err(Error::Sequencing(format!(
                "feedback for round {t} while round {} is open",
                self.round
            )));
        }
        let mut sorted: Vec<&Feedback> = batch.iter().collect();
        sorted.sort_by_key(|p| p.origin());
        for p in sorted {
            if p.arrival() != t {
                return Err(Error::Data(format!(
                    "packet from round {} stamped for round {} delivered at round {t}",
                    p.origin(),
                    p.arrival()
                )));
            }
            self.feedback(p)?;
        }
        Ok(())
    }
}
