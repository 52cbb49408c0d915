//! Metrics over decoded situations.
//!
//! Eight scores, each reported as a percentage: top-1 verb accuracy plus
//! role value and value-all, the same three for top-5 verbs, and value plus
//! value-all when decoding under the annotated verb. The report's mean
//! column is the arithmetic mean of the eight. A predicted noun matches a
//! role when any annotator listed it for that role; value is the matched
//! fraction of frame roles and value-all requires every role to match
//! (or, under the strict rule, one annotator to be matched exactly on all
//! roles at once). Role scores count as zero whenever the verb is wrong.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{PredictionBundle, ScoreNorm, SituationPrediction};
use crate::ontology::{Instance, Ontology, VerbId};

/// How value-all treats the three annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatchRule {
    /// Every role must match the union of annotators (role-independent).
    #[default]
    AnyAnnotator,
    /// Some single annotator must be matched exactly on every role.
    WholeAnnotator,
}

impl MatchRule {
    pub fn name(self) -> &'static str {
        match self {
            MatchRule::AnyAnnotator => "any_annotator",
            MatchRule::WholeAnnotator => "whole_annotator",
        }
    }
}

/// Role-match scores for a prediction already known to carry the right
/// verb: (matched fraction of roles, value-all indicator).
pub fn value_scores(inst: &Instance, pred: &SituationPrediction, rule: MatchRule) -> Result<(f64, f64)> {
    if pred.verb != inst.verb {
        return Err(Error::Contract(format!(
            "value_scores called with verb {:?} against instance verb {:?}",
            pred.verb, inst.verb
        )));
    }
    if pred.assignments.is_empty() {
        return Err(Error::Contract("prediction carries no role assignments".into()));
    }
    let mut matched = 0usize;
    for &(role, noun, _) in &pred.assignments {
        if inst.annotated_nouns(role).contains(&noun) {
            matched += 1;
        }
    }
    let value = matched as f64 / pred.assignments.len() as f64;
    let value_all = match rule {
        MatchRule::AnyAnnotator => (matched == pred.assignments.len()) as usize as f64,
        MatchRule::WholeAnnotator => inst
            .annotations
            .iter()
            .any(|ann| pred.assignments.iter().all(|&(r, n, _)| ann.get(&r) == Some(&n)))
            as usize as f64,
    };
    Ok((value, value_all))
}

/// Metrics of a single prediction against its instance, verb-gated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleScore {
    pub verb_correct: bool,
    pub value: f64,
    pub value_all: f64,
}

pub fn score_prediction(
    inst: &Instance,
    pred: &SituationPrediction,
    rule: MatchRule,
) -> Result<SingleScore> {
    if pred.verb != inst.verb {
        return Ok(SingleScore { verb_correct: false, value: 0.0, value_all: 0.0 });
    }
    let (value, value_all) = value_scores(inst, pred, rule)?;
    Ok(SingleScore { verb_correct: true, value, value_all })
}

/// The aggregate report; every score is a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub top1_verb: f64,
    pub top1_value: f64,
    pub top1_value_all: f64,
    pub top5_verb: f64,
    pub top5_value: f64,
    pub top5_value_all: f64,
    pub gt_value: f64,
    pub gt_value_all: f64,
    /// Arithmetic mean of the eight scores above.
    pub mean: f64,
    pub count: usize,
}

impl MetricReport {
    pub const COLUMNS: [&'static str; 10] = [
        "top1_verb",
        "top1_value",
        "top1_value_all",
        "top5_verb",
        "top5_value",
        "top5_value_all",
        "gt_value",
        "gt_value_all",
        "mean",
        "count",
    ];

    pub fn scores(&self) -> [f64; 8] {
        [
            self.top1_verb,
            self.top1_value,
            self.top1_value_all,
            self.top5_verb,
            self.top5_value,
            self.top5_value_all,
            self.gt_value,
            self.gt_value_all,
        ]
    }
}

/// Aggregate bundles against their instances (parallel slices).
pub fn aggregate(
    instances: &[Instance],
    bundles: &[PredictionBundle],
    rule: MatchRule,
) -> Result<MetricReport> {
    if instances.len() != bundles.len() {
        return Err(Error::Contract(format!(
            "{} instances but {} prediction bundles",
            instances.len(),
            bundles.len()
        )));
    }
    if instances.is_empty() {
        return Err(Error::Data("cannot aggregate metrics over zero instances".into()));
    }
    let n = instances.len() as f64;
    let mut sums = [0.0f64; 8];
    for (inst, bundle) in instances.iter().zip(bundles) {
        let top1 = score_prediction(inst, &bundle.top1, rule)?;
        sums[0] += top1.verb_correct as usize as f64;
        sums[1] += top1.value;
        sums[2] += top1.value_all;

        let in_top5 = bundle.verb_ranking.iter().take(5).any(|&v| v == inst.verb);
        let (gt_value, gt_value_all) = value_scores(inst, &bundle.gt, rule)?;
        if in_top5 {
            sums[3] += 1.0;
            sums[4] += gt_value;
            sums[5] += gt_value_all;
        }
        sums[6] += gt_value;
        sums[7] += gt_value_all;
    }
    let pct = |s: f64| 100.0 * s / n;
    let scores: Vec<f64> = sums.iter().map(|&s| pct(s)).collect();
    Ok(MetricReport {
        top1_verb: scores[0],
        top1_value: scores[1],
        top1_value_all: scores[2],
        top5_verb: scores[3],
        top5_value: scores[4],
        top5_value_all: scores[5],
        gt_value: scores[6],
        gt_value_all: scores[7],
        mean: scores.iter().sum::<f64>() / 8.0,
        count: instances.len(),
    })
}

/// Write the report as CSV with a commented preamble documenting the
/// scoring conventions.
pub fn write_report_csv(
    path: &Path,
    report: &MetricReport,
    rule: MatchRule,
    score_norm: ScoreNorm,
    beam: Option<usize>,
) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let preamble = format!(
        "# situation metrics over {} instances, scores in percent\n\
         # a noun matches a role when any annotator listed it; value = matched fraction of the frame's roles\n\
         # value_all rule '{}': {}\n\
         # top1/top5 role scores are zero unless the verb is right; gt_* columns decode under the annotated verb\n\
         # top5 columns reuse the annotated-verb decode when the verb ranks in the first five\n\
         # mean = (sum of the 8 score columns) / 8; candidate totals combined with score norm '{}', beam {}\n",
        report.count,
        rule.name(),
        match rule {
            MatchRule::AnyAnnotator => "every role independently matches some annotator",
            MatchRule::WholeAnnotator => "one annotator is matched exactly on every role",
        },
        match score_norm {
            ScoreNorm::MeanRoles => "mean_roles",
            ScoreNorm::SumRoles => "sum_roles",
        },
        beam.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
    );
    file.write_all(preamble.as_bytes()).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(MetricReport::COLUMNS)?;
    let mut row: Vec<String> = report.scores().iter().map(|s| format!("{s:.4}")).collect();
    row.push(format!("{:.4}", report.mean));
    row.push(report.count.to_string());
    w.write_record(&row)?;
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Row-normalized verb confusion within one verb cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub cluster: String,
    /// Column verbs: the cluster members, ascending id. A final implicit
    /// column ("other") collects predictions outside the cluster.
    pub verbs: Vec<VerbId>,
    pub rows: Vec<ConfusionRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionRow {
    pub gt: VerbId,
    /// Instances annotated with this verb.
    pub count: usize,
    /// Percent predicted as each cluster verb, aligned with `verbs`.
    pub pct: Vec<f64>,
    /// Percent predicted outside the cluster.
    pub other_pct: f64,
}

/// Build one confusion matrix per declared verb cluster. Rows appear only
/// for cluster verbs with at least one instance; each row sums to 100.
pub fn cluster_confusion(
    ontology: &Ontology,
    instances: &[Instance],
    top1_verbs: &[VerbId],
) -> Result<Vec<ConfusionMatrix>> {
    if instances.len() != top1_verbs.len() {
        return Err(Error::Contract(format!(
            "{} instances but {} predictions",
            instances.len(),
            top1_verbs.len()
        )));
    }
    let mut out = Vec::new();
    for (cluster, members) in ontology.clusters() {
        let mut rows = Vec::new();
        for &gt in &members {
            let hits: Vec<VerbId> = instances
                .iter()
                .zip(top1_verbs)
                .filter(|(inst, _)| inst.verb == gt)
                .map(|(_, &p)| p)
                .collect();
            if hits.is_empty() {
                continue;
            }
            let n = hits.len() as f64;
            let mut pct = Vec::with_capacity(members.len());
            let mut inside = 0usize;
            for &col in &members {
                let c = hits.iter().filter(|&&p| p == col).count();
                inside += c;
                pct.push(100.0 * c as f64 / n);
            }
            let other_pct = 100.0 * (hits.len() - inside) as f64 / n;
            rows.push(ConfusionRow { gt, count: hits.len(), pct, other_pct });
        }
        out.push(ConfusionMatrix { cluster: cluster.clone(), verbs: members, rows });
    }
    Ok(out)
}

/// One CSV holding every cluster's matrix, long format.
pub fn write_confusion_csv(
    path: &Path,
    ontology: &Ontology,
    matrices: &[ConfusionMatrix],
) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(
        b"# verb confusion within declared clusters, row-normalized percent\n\
          # 'other' counts predictions outside the row's cluster\n",
    )
    .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["cluster", "gt_verb", "count", "predicted_verb", "pct"])?;
    for m in matrices {
        for row in &m.rows {
            let gt = ontology.verb_name(row.gt);
            for (&col, &pct) in m.verbs.iter().zip(&row.pct) {
                w.write_record([
                    m.cluster.as_str(),
                    gt,
                    &row.count.to_string(),
                    ontology.verb_name(col),
                    &format!("{pct:.4}"),
                ])?;
            }
            w.write_record([
                m.cluster.as_str(),
                gt,
                &row.count.to_string(),
                "other",
                &format!("{:.4}", row.other_pct),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{NounId, RoleId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeMap, BTreeSet};

    fn ontology() -> Ontology {
        Ontology::build(
            vec!["ride".into(), "walk".into(), "sit".into(), "fly".into(), "dig".into(), "row".into()],
            vec!["agent".into(), "place".into()],
            vec!["∅".into(), "man".into(), "horse".into(), "park".into()],
            vec![
                vec![RoleId(0), RoleId(1)],
                vec![RoleId(0)],
                vec![RoleId(0), RoleId(1)],
                vec![RoleId(0)],
                vec![RoleId(0), RoleId(1)],
                vec![RoleId(0)],
            ],
            BTreeMap::new(),
            vec![
                Some("move".into()),
                Some("move".into()),
                Some("rest".into()),
                Some("move".into()),
                Some("rest".into()),
                Some("move".into()),
            ],
        )
        .unwrap()
    }

    fn instance(verb: usize, anns: [&[(usize, usize)]; 3]) -> Instance {
        let mut annotations: [BTreeMap<RoleId, NounId>; 3] = Default::default();
        for (slot, ann) in annotations.iter_mut().zip(anns) {
            for &(r, n) in ann {
                slot.insert(RoleId(r), NounId(n));
            }
        }
        Instance {
            id: format!("i{verb}"),
            verb: VerbId(verb),
            phi_v: crate::numerics::Tensor2::row_from_f64(&[0.0]),
            phi_n: crate::numerics::Tensor2::row_from_f64(&[0.0]),
            annotations,
        }
    }

    fn prediction(verb: usize, roles: &[(usize, usize)]) -> SituationPrediction {
        SituationPrediction {
            verb: VerbId(verb),
            verb_logprob: -1.0,
            assignments: roles.iter().map(|&(r, n)| (RoleId(r), NounId(n), -0.5)).collect(),
            total_score: -1.5,
        }
    }

    fn bundle(top1: SituationPrediction, ranking: Vec<usize>, gt: SituationPrediction) -> PredictionBundle {
        PredictionBundle { top1, verb_ranking: ranking.into_iter().map(VerbId).collect(), gt }
    }

    #[test]
    fn hand_checked_aggregate() {
        let inst_a = instance(0, [&[(0, 1), (1, 3)], &[(0, 2), (1, 3)], &[(0, 1), (1, 3)]]);
        let inst_b = instance(1, [&[(0, 1)], &[(0, 1)], &[(0, 2)]]);

        // A: right verb, agent matches annotator 2's noun, place misses.
        let bund_a = bundle(
            prediction(0, &[(0, 2), (1, 1)]),
            vec![0, 2, 3, 4, 5, 1],
            prediction(0, &[(0, 2), (1, 1)]),
        );
        // B: wrong verb; annotated verb not even in the top five.
        let bund_b = bundle(
            prediction(2, &[(0, 1), (1, 1)]),
            vec![2, 0, 3, 4, 5, 1],
            prediction(1, &[(0, 2)]),
        );

        let r = aggregate(&[inst_a, inst_b], &[bund_a, bund_b], MatchRule::AnyAnnotator).unwrap();
        assert_eq!(r.count, 2);
        assert!((r.top1_verb - 50.0).abs() < 1e-12);
        // A scores value 1/2, B zero → 25%.
        assert!((r.top1_value - 25.0).abs() < 1e-12);
        assert!((r.top1_value_all - 0.0).abs() < 1e-12);
        // A's verb ranks first (in top 5), B's does not.
        assert!((r.top5_verb - 50.0).abs() < 1e-12);
        assert!((r.top5_value - 25.0).abs() < 1e-12);
        // GT decode: A 1/2, B matches annotator 3 → 1 → mean 75%.
        assert!((r.gt_value - 75.0).abs() < 1e-12);
        assert!((r.gt_value_all - 50.0).abs() < 1e-12);
        let expect_mean = (50.0 + 25.0 + 0.0 + 50.0 + 25.0 + 0.0 + 75.0 + 50.0) / 8.0;
        assert!((r.mean - expect_mean).abs() < 1e-12);
    }

    #[test]
    fn whole_annotator_rule_is_stricter() {
        // Prediction mixes annotator 1's agent with annotator 2's place:
        // fine per-role, but no single annotator said both.
        let inst = instance(0, [&[(0, 1), (1, 3)], &[(0, 2), (1, 2)], &[(0, 1), (1, 3)]]);
        let pred = prediction(0, &[(0, 2), (1, 3)]);
        let (v_any, va_any) = value_scores(&inst, &pred, MatchRule::AnyAnnotator).unwrap();
        let (v_whole, va_whole) = value_scores(&inst, &pred, MatchRule::WholeAnnotator).unwrap();
        assert_eq!(v_any, 1.0);
        assert_eq!(va_any, 1.0);
        assert_eq!(v_whole, 1.0, "value itself is per-role under either rule");
        assert_eq!(va_whole, 0.0);

        let pred_exact = prediction(0, &[(0, 1), (1, 3)]);
        let (_, va) = value_scores(&inst, &pred_exact, MatchRule::WholeAnnotator).unwrap();
        assert_eq!(va, 1.0);
    }

    /// Independent re-computation of the whole report with nested counting
    /// loops, compared on randomized predictions.
    #[test]
    fn matches_brute_force_scorer_on_randomized_inputs() {
        let ont = ontology();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n_inst = rng.random_range(1..6);
            let mut insts = Vec::new();
            let mut bundles = Vec::new();
            for _ in 0..n_inst {
                let verb = rng.random_range(0..ont.n_verbs());
                let frame: Vec<RoleId> = ont.frame(VerbId(verb)).to_vec();
                let mut annotations: [BTreeMap<RoleId, NounId>; 3] = Default::default();
                for ann in annotations.iter_mut() {
                    for &r in &frame {
                        ann.insert(r, NounId(rng.random_range(0..ont.n_nouns())));
                    }
                }
                let inst = Instance {
                    id: format!("r{}", rng.random::<u32>()),
                    verb: VerbId(verb),
                    phi_v: crate::numerics::Tensor2::row_from_f64(&[0.0]),
                    phi_n: crate::numerics::Tensor2::row_from_f64(&[0.0]),
                    annotations,
                };

                let gt = SituationPrediction {
                    verb: VerbId(verb),
                    verb_logprob: -1.0,
                    assignments: frame
                        .iter()
                        .map(|&r| (r, NounId(rng.random_range(0..ont.n_nouns())), -0.1))
                        .collect(),
                    total_score: 0.0,
                };
                // Decoding is deterministic per verb, so a top-1 that
                // lands on the right verb carries the same assignments as
                // the annotated-verb decode; mirror that here.
                let pred_verb = rng.random_range(0..ont.n_verbs());
                let top1 = if pred_verb == verb {
                    gt.clone()
                } else {
                    let pred_frame = ont.frame(VerbId(pred_verb)).to_vec();
                    SituationPrediction {
                        verb: VerbId(pred_verb),
                        verb_logprob: -1.0,
                        assignments: pred_frame
                            .iter()
                            .map(|&r| (r, NounId(rng.random_range(0..ont.n_nouns())), -0.1))
                            .collect(),
                        total_score: 0.0,
                    }
                };
                let mut ranking: Vec<usize> = (0..ont.n_verbs()).collect();
                for i in (1..ranking.len()).rev() {
                    let j = rng.random_range(0..=i);
                    ranking.swap(i, j);
                }
                // Greedy decoding realizes the best-ranked verb, so the
                // top-1 verb heads the ranking; keep that shape or the
                // top5 >= top1 inequality would not be a theorem.
                let at = ranking.iter().position(|&v| v == pred_verb).unwrap();
                ranking.swap(0, at);
                bundles.push(bundle(top1, ranking, gt));
                insts.push(inst);
            }

            let got = aggregate(&insts, &bundles, MatchRule::AnyAnnotator).unwrap();

            // Brute force: count every metric with plain loops.
            let n = insts.len() as f64;
            let mut c = [0.0f64; 8];
            for (inst, b) in insts.iter().zip(&bundles) {
                let union = |role: RoleId| -> BTreeSet<NounId> {
                    let mut s = BTreeSet::new();
                    for ann in &inst.annotations {
                        s.insert(ann[&role]);
                    }
                    s
                };
                if b.top1.verb == inst.verb {
                    c[0] += 1.0;
                    let mut ok = 0;
                    for &(r, nn, _) in &b.top1.assignments {
                        if union(r).contains(&nn) {
                            ok += 1;
                        }
                    }
                    c[1] += ok as f64 / b.top1.assignments.len() as f64;
                    if ok == b.top1.assignments.len() {
                        c[2] += 1.0;
                    }
                }
                let mut gt_ok = 0;
                for &(r, nn, _) in &b.gt.assignments {
                    if union(r).contains(&nn) {
                        gt_ok += 1;
                    }
                }
                let gt_value = gt_ok as f64 / b.gt.assignments.len() as f64;
                let gt_all = (gt_ok == b.gt.assignments.len()) as usize as f64;
                let mut in5 = false;
                for k in 0..5.min(b.verb_ranking.len()) {
                    if b.verb_ranking[k] == inst.verb {
                        in5 = true;
                    }
                }
                if in5 {
                    c[3] += 1.0;
                    c[4] += gt_value;
                    c[5] += gt_all;
                }
                c[6] += gt_value;
                c[7] += gt_all;
            }
            let want: Vec<f64> = c.iter().map(|&x| 100.0 * x / n).collect();
            for (g, w) in got.scores().iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
            }
            assert!((got.mean - want.iter().sum::<f64>() / 8.0).abs() <= 1e-12);

            // Structural inequalities.
            assert!(got.top1_value_all <= got.top1_value + 1e-12);
            assert!(got.top1_value <= got.top1_verb + 1e-12);
            assert!(got.top5_verb + 1e-12 >= got.top1_verb);
            assert!(got.gt_value + 1e-12 >= got.top1_value);
        }
    }

    #[test]
    fn confusion_rows_sum_to_one_hundred() {
        let ont = ontology();
        let insts: Vec<Instance> = vec![
            instance(0, [&[(0, 1), (1, 2)]; 3]),
            instance(0, [&[(0, 1), (1, 2)]; 3]),
            instance(1, [&[(0, 1)]; 3]),
            instance(2, [&[(0, 1), (1, 2)]; 3]),
        ];
        // ride→ride, ride→sit (cross-cluster), walk→fly, sit→sit.
        let preds = vec![VerbId(0), VerbId(2), VerbId(3), VerbId(2)];
        let ms = cluster_confusion(&ont, &insts, &preds).unwrap();
        assert_eq!(ms.len(), 2);
        let move_m = ms.iter().find(|m| m.cluster == "move").unwrap();
        // Rows only for verbs with instances: ride, walk (fly/row absent).
        assert_eq!(move_m.rows.len(), 2);
        for row in &move_m.rows {
            let total: f64 = row.pct.iter().sum::<f64>() + row.other_pct;
            assert!((total - 100.0).abs() <= 1e-6);
        }
        let ride = &move_m.rows[0];
        assert_eq!(ride.gt, VerbId(0));
        assert_eq!(ride.count, 2);
        assert!((ride.pct[0] - 50.0).abs() <= 1e-12);
        assert!((ride.other_pct - 50.0).abs() <= 1e-12, "sit is outside 'move'");
        let walk = &move_m.rows[1];
        assert!((walk.pct[2] - 100.0).abs() <= 1e-12, "fly is inside 'move'");

        let rest_m = ms.iter().find(|m| m.cluster == "rest").unwrap();
        assert_eq!(rest_m.rows.len(), 1);
        assert!((rest_m.rows[0].pct[0] - 100.0).abs() <= 1e-12);
    }

    #[test]
    fn csv_reports_write_and_contain_documented_conventions() {
        let dir = tempfile::tempdir().unwrap();
        let report = MetricReport {
            top1_verb: 50.0,
            top1_value: 25.0,
            top1_value_all: 0.0,
            top5_verb: 50.0,
            top5_value: 25.0,
            top5_value_all: 0.0,
            gt_value: 75.0,
            gt_value_all: 50.0,
            mean: 34.375,
            count: 2,
        };
        let p = dir.path().join("report.csv");
        write_report_csv(&p, &report, MatchRule::AnyAnnotator, ScoreNorm::MeanRoles, Some(5))
            .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# situation metrics over 2 instances"));
        assert!(text.contains("mean = (sum of the 8 score columns) / 8"));
        assert!(text.contains("top1_verb,top1_value,top1_value_all"));
        assert!(text.contains("50.0000,25.0000,0.0000,50.0000"));

        let ont = ontology();
        let insts = vec![instance(0, [&[(0, 1), (1, 2)]; 3])];
        let ms = cluster_confusion(&ont, &insts, &[VerbId(0)]).unwrap();
        let cp = dir.path().join("confusion.csv");
        write_confusion_csv(&cp, &ont, &ms).unwrap();
        let text = std::fs::read_to_string(&cp).unwrap();
        assert!(text.contains("cluster,gt_verb,count,predicted_verb,pct"));
        assert!(text.contains("move,ride,1,ride,100.0000"));
        assert!(text.contains("move,ride,1,other,0.0000"));
    }

    #[test]
    fn mismatched_lengths_and_empty_sets_are_rejected() {
        let insts = vec![instance(0, [&[(0, 1), (1, 2)]; 3])];
        assert!(aggregate(&insts, &[], MatchRule::AnyAnnotator).is_err());
        assert!(aggregate(&[], &[], MatchRule::AnyAnnotator).is_err());
        let ont = ontology();
        assert!(cluster_confusion(&ont, &insts, &[]).is_err());
    }
}
