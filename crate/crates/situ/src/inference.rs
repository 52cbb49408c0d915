//! Decoding: verb ranking, frame realization, greedy and beam search.
//!
//! Decoding runs in two phases. Phase one scores every verb from the verb
//! slot's own trajectory, which is exact because no standard layout feeds
//! role evidence into the verb slot. Phase two realizes the frame of each
//! candidate verb with a full forward pass and picks each role's best noun.
//! A candidate's total score is its verb log-probability plus its role
//! log-probabilities, combined per the configured norm. Greedy decoding is
//! beam search with width one, so the two can never disagree.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Forward, Model};
use crate::numerics::{Real, Tensor2, PROB_FLOOR};
use crate::ontology::{Instance, NounId, Ontology, RoleId, VerbId};
use crate::topology::Topology;

/// How role log-probabilities enter a candidate's total score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreNorm {
    /// Mean over frame roles: frame size does not bias verb choice.
    #[default]
    MeanRoles,
    /// Plain sum: larger frames pay for every role.
    SumRoles,
}

/// One decoded situation: a verb and a noun per frame role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationPrediction {
    pub verb: VerbId,
    pub verb_logprob: f64,
    /// (role, noun, log-probability) in frame order.
    pub assignments: Vec<(RoleId, NounId, f64)>,
    pub total_score: f64,
}

impl SituationPrediction {
    pub fn role_map(&self) -> BTreeMap<RoleId, NounId> {
        self.assignments.iter().map(|&(r, n, _)| (r, n)).collect()
    }
}

/// Strictly-greater argmax: ties resolve to the lowest index.
pub fn argmax_f64(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

fn floored_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Reusable decoding context: one topology per verb, built once.
pub struct Decoder<'a, R: Real> {
    model: &'a Model<R>,
    ontology: &'a Ontology,
    topos: Vec<Topology>,
    pub score_norm: ScoreNorm,
}

impl<'a, R: Real> Decoder<'a, R> {
    pub fn new(model: &'a Model<R>, ontology: &'a Ontology, score_norm: ScoreNorm) -> Result<Self> {
        model.net.validate()?;
        let topos = (0..ontology.n_verbs())
            .map(|v| {
                Topology::build(ontology, VerbId(v), model.net.topology, model.net.fc_verb_edges)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decoder { model, ontology, topos, score_norm })
    }

    pub fn ontology(&self) -> &Ontology {
        self.ontology
    }

    pub fn topology(&self, verb: VerbId) -> &Topology {
        &self.topos[verb.0]
    }

    /// Floored verb log-probabilities from the verb-only trajectory.
    pub fn verb_log_probs(&self, phi_v: &Tensor2<f64>) -> Result<Vec<f64>> {
        let f = self.model.verb_forward(&phi_v.cast::<R>())?;
        Ok(f.tape.value(f.verb_probs).to_f64_vec().into_iter().map(floored_ln).collect())
    }

    /// Verbs sorted by descending log-probability, ties to the lower id.
    pub fn rank_verbs(&self, verb_lps: &[f64]) -> Vec<(VerbId, f64)> {
        let mut ranked: Vec<(VerbId, f64)> =
            verb_lps.iter().enumerate().map(|(v, &lp)| (VerbId(v), lp)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite logprobs").then(a.0.cmp(&b.0)));
        ranked
    }

    /// Realize `verb`'s frame: best noun per role from one forward pass.
    pub fn realize(
        &self,
        verb: VerbId,
        phi_v: &Tensor2<f64>,
        phi_n: &Tensor2<f64>,
        verb_logprob: f64,
    ) -> Result<SituationPrediction> {
        let f: Forward<R> =
            self.model.forward(&self.topos[verb.0], &phi_v.cast(), &phi_n.cast(), None)?;
        let mut assignments = Vec::with_capacity(f.roles.len());
        let mut role_lp_sum = 0.0;
        for out in &f.roles {
            let probs = f.tape.value(out.probs).to_f64_vec();
            let noun = argmax_f64(&probs);
            let lp = floored_ln(probs[noun]);
            role_lp_sum += lp;
            assignments.push((out.role, NounId(noun), lp));
        }
        let role_term = match self.score_norm {
            ScoreNorm::MeanRoles if !assignments.is_empty() => {
                role_lp_sum / assignments.len() as f64
            }
            _ => role_lp_sum,
        };
        Ok(SituationPrediction {
            verb,
            verb_logprob,
            assignments,
            total_score: verb_logprob + role_term,
        })
    }

    /// Decode under a fixed verb (its log-probability still comes from the
    /// verb ranking so totals stay comparable).
    pub fn decode_with_verb(
        &self,
        verb: VerbId,
        phi_v: &Tensor2<f64>,
        phi_n: &Tensor2<f64>,
    ) -> Result<SituationPrediction> {
        let lps = self.verb_log_probs(phi_v)?;
        self.realize(verb, phi_v, phi_n, lps[verb.0])
    }

    /// Beam search over the `beam` best verbs. Returns candidates sorted
    /// by descending total score, ties to the lower verb id; the first
    /// entry is the prediction.
    pub fn predict_beam(
        &self,
        phi_v: &Tensor2<f64>,
        phi_n: &Tensor2<f64>,
        beam: usize,
    ) -> Result<Vec<SituationPrediction>> {
        if beam == 0 {
            return Err(Error::Config("beam width must be >= 1".into()));
        }
        let lps = self.verb_log_probs(phi_v)?;
        let ranked = self.rank_verbs(&lps);
        let mut candidates = Vec::with_capacity(beam.min(ranked.len()));
        for &(verb, lp) in ranked.iter().take(beam) {
            candidates.push(self.realize(verb, phi_v, phi_n, lp)?);
        }
        candidates.sort_by(|a, b| {
            b.total_score
                .partial_cmp(&a.total_score)
                .expect("finite scores")
                .then(a.verb.cmp(&b.verb))
        });
        Ok(candidates)
    }

    /// Greedy decode: beam search with width one.
    pub fn predict(&self, phi_v: &Tensor2<f64>, phi_n: &Tensor2<f64>) -> Result<SituationPrediction> {
        Ok(self.predict_beam(phi_v, phi_n, 1)?.remove(0))
    }

    /// Everything the evaluation metrics need for one instance.
    pub fn predict_for_metrics(&self, inst: &Instance, beam: usize) -> Result<PredictionBundle> {
        if beam == 0 {
            return Err(Error::Config("beam width must be >= 1".into()));
        }
        let lps = self.verb_log_probs(&inst.phi_v)?;
        let ranked = self.rank_verbs(&lps);
        let mut candidates = Vec::with_capacity(beam.min(ranked.len()));
        for &(verb, lp) in ranked.iter().take(beam) {
            candidates.push(self.realize(verb, &inst.phi_v, &inst.phi_n, lp)?);
        }
        candidates.sort_by(|a, b| {
            b.total_score
                .partial_cmp(&a.total_score)
                .expect("finite scores")
                .then(a.verb.cmp(&b.verb))
        });
        let top1 = candidates[0].clone();
        let gt = self.realize(inst.verb, &inst.phi_v, &inst.phi_n, lps[inst.verb.0])?;
        Ok(PredictionBundle {
            top1,
            verb_ranking: ranked.iter().map(|&(v, _)| v).collect(),
            gt,
        })
    }
}

/// Per-instance decoding products consumed by the metrics.
#[derive(Debug, Clone)]
pub struct PredictionBundle {
    /// Best beam candidate.
    pub top1: SituationPrediction,
    /// All verbs by descending verb score (phase-one ranking).
    pub verb_ranking: Vec<VerbId>,
    /// Frame realized under the annotated verb.
    pub gt: SituationPrediction,
}

/// One JSONL line of the prediction dump.
#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub gold_verb: String,
    pub predicted_verb: String,
    pub total_score: f64,
    /// Predicted noun per role of the predicted verb's frame.
    pub roles: BTreeMap<String, String>,
    /// Leading verbs by verb score, with log-probabilities.
    pub top_verbs: Vec<(String, f64)>,
    /// Nouns decoded under the gold verb.
    pub gt_roles: BTreeMap<String, String>,
}

impl PredictionRecord {
    pub fn build(
        ontology: &Ontology,
        inst: &Instance,
        bundle: &PredictionBundle,
        verb_lps: &[f64],
        list_len: usize,
    ) -> PredictionRecord {
        let name_roles = |p: &SituationPrediction| {
            p.assignments
                .iter()
                .map(|&(r, n, _)| {
                    (ontology.role_name(r).to_string(), ontology.noun_name(n).to_string())
                })
                .collect()
        };
        PredictionRecord {
            id: inst.id.clone(),
            gold_verb: ontology.verb_name(inst.verb).to_string(),
            predicted_verb: ontology.verb_name(bundle.top1.verb).to_string(),
            total_score: bundle.top1.total_score,
            roles: name_roles(&bundle.top1),
            top_verbs: bundle
                .verb_ranking
                .iter()
                .take(list_len)
                .map(|&v| (ontology.verb_name(v).to_string(), verb_lps[v.0]))
                .collect(),
            gt_roles: name_roles(&bundle.gt),
        }
    }

    /// Rebuild the metric inputs from a serialized record. Dumps do not
    /// keep per-role log-probabilities, so reconstructed assignments carry
    /// zero scores; the metrics never read them.
    pub fn to_bundle(&self, ontology: &Ontology) -> Result<PredictionBundle> {
        let verb_of = |name: &str| {
            ontology.verb_id(name).ok_or_else(|| {
                Error::Data(format!("prediction record '{}': unknown verb '{name}'", self.id))
            })
        };
        let situation = |verb: VerbId,
                         roles: &BTreeMap<String, String>,
                         total: f64|
         -> Result<SituationPrediction> {
            let frame = ontology.frame(verb);
            if roles.len() != frame.len() {
                return Err(Error::Data(format!(
                    "prediction record '{}': {} roles listed, frame of '{}' has {}",
                    self.id,
                    roles.len(),
                    ontology.verb_name(verb),
                    frame.len()
                )));
            }
            let mut assignments = Vec::with_capacity(frame.len());
            for &role in frame {
                let rn = ontology.role_name(role);
                let noun_name = roles.get(rn).ok_or_else(|| {
                    Error::Data(format!("prediction record '{}': missing role '{rn}'", self.id))
                })?;
                let noun = ontology.noun_id(noun_name).ok_or_else(|| {
                    Error::Data(format!(
                        "prediction record '{}': unknown noun '{noun_name}'",
                        self.id
                    ))
                })?;
                assignments.push((role, noun, 0.0));
            }
            Ok(SituationPrediction { verb, verb_logprob: 0.0, assignments, total_score: total })
        };
        let top1 = situation(verb_of(&self.predicted_verb)?, &self.roles, self.total_score)?;
        let gt = situation(verb_of(&self.gold_verb)?, &self.gt_roles, 0.0)?;
        let verb_ranking = self
            .top_verbs
            .iter()
            .map(|(name, _)| verb_of(name))
            .collect::<Result<Vec<_>>>()?;
        Ok(PredictionBundle { top1, verb_ranking, gt })
    }
}
