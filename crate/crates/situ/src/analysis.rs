//! Learned-structure introspection: propagation-norm matrices over role
//! pairs and raw embedding export.
//!
//! The propagation matrix asks, for one verb's graph, how strongly each
//! role pushes on each other role at the first step: entry (src, dst) is
//! the norm of the message sent along the src→dst edge from the initial
//! states, averaged over that verb's instances. Columns are normalized to
//! sum to one so each destination shows where its incoming mass comes
//! from; columns with no mass stay zero and are flagged.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Model, ParamBlock};
use crate::numerics::{affine, matvec, Real, Tensor2};
use crate::ontology::{Instance, Ontology, RoleId, VerbId};
use crate::topology::{Topology, TopologyKind, VERB_SLOT};

/// First-step message norms between a verb's roles, in frame order.
#[derive(Debug, Clone)]
pub struct PropagationMatrix {
    pub verb: VerbId,
    /// Row/column labels: the verb's frame roles in frame order.
    pub roles: Vec<RoleId>,
    pub kind: TopologyKind,
    pub include_bias: bool,
    /// Number of instances averaged over.
    pub instances: usize,
    /// Role→role edges measured (verb-sourced edges never count).
    pub edge_count: usize,
    /// Raw mean norms, entry (src, dst).
    pub mean_norms: Tensor2<f64>,
    /// Column-normalized norms: every unflagged column sums to 1.
    pub normalized: Tensor2<f64>,
    /// Roles whose column carries no mass (no in-edges or all-zero norms).
    pub zero_columns: Vec<RoleId>,
}

impl PropagationMatrix {
    /// True when the layout has no role→role edges to measure.
    pub fn is_structureless(&self) -> bool {
        self.edge_count == 0
    }
}

/// Average the first-step role→role message norms for `verb` over its
/// instances in `instances`, under the given layout. The message on an
/// edge is the source's initial state through the shared propagation map,
/// plus its bias unless `include_bias` is off.
pub fn propagation_norm_matrix<R: Real>(
    model: &Model<R>,
    ontology: &Ontology,
    verb: VerbId,
    instances: &[Instance],
    kind: TopologyKind,
    include_bias: bool,
) -> Result<PropagationMatrix> {
    let of_verb: Vec<&Instance> = instances.iter().filter(|i| i.verb == verb).collect();
    if of_verb.is_empty() {
        return Err(Error::Data(format!(
            "no instances of verb '{}' to average over",
            ontology.verb_name(verb)
        )));
    }
    let topo = Topology::build(ontology, verb, kind, false)?;
    let roles = ontology.frame(verb).to_vec();
    let k = roles.len();

    // Only the initial states matter, so probe with zero propagation
    // steps and the simultaneous initializer.
    let mut probe = model.clone();
    probe.net.steps = 0;
    probe.net.sequential = false;

    let wp = model.params.get(ParamBlock::WP);
    let bp = model.params.get(ParamBlock::BP);
    let role_edges: Vec<(usize, usize)> = topo
        .edges()
        .iter()
        .copied()
        .filter(|&(s, d)| s != VERB_SLOT && d != VERB_SLOT)
        .collect();

    let mut sums = Tensor2::<f64>::zeros(k.max(1), k.max(1));
    for inst in &of_verb {
        let f = probe.forward(&topo, &inst.phi_v.cast(), &inst.phi_n.cast(), None)?;
        for &(s, d) in &role_edges {
            let h = f.tape.value(f.init_states[s]);
            let msg = if include_bias { affine(h, wp, bp)? } else { matvec(h, wp)? };
            let norm = msg.l2_norm().as_f64();
            // Slot i holds frame role i-1.
            let v = sums.get(s - 1, d - 1) + norm;
            sums.set(s - 1, d - 1, v);
        }
    }
    let n = of_verb.len() as f64;
    let mean_norms = sums.map(|v| v / n);

    let mut normalized = Tensor2::<f64>::zeros(k.max(1), k.max(1));
    let mut zero_columns = Vec::new();
    for d in 0..k {
        let col_sum: f64 = (0..k).map(|s| mean_norms.get(s, d)).sum();
        if col_sum > 0.0 {
            for s in 0..k {
                normalized.set(s, d, mean_norms.get(s, d) / col_sum);
            }
        } else {
            zero_columns.push(roles[d]);
        }
    }

    Ok(PropagationMatrix {
        verb,
        roles,
        kind,
        include_bias,
        instances: of_verb.len(),
        edge_count: role_edges.len(),
        mean_norms,
        normalized,
        zero_columns,
    })
}

/// Write one verb's matrix as CSV: a commented preamble, then the raw and
/// normalized matrices stacked long-form so both survive in one file.
pub fn write_matrix_csv(path: &Path, pm: &PropagationMatrix, ontology: &Ontology) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# verb: {}\n", ontology.verb_name(pm.verb)));
    out.push_str(&format!("# topology: {}\n", pm.kind));
    out.push_str(&format!("# instances: {}\n", pm.instances));
    out.push_str(&format!("# include_bias: {}\n", pm.include_bias));
    out.push_str(
        "# entry (src,dst): mean first-step message norm from src to dst; normalized columns sum to 1\n",
    );
    let flagged = if pm.zero_columns.is_empty() {
        "-".to_string()
    } else {
        pm.zero_columns
            .iter()
            .map(|&r| ontology.role_name(r).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    out.push_str(&format!("# zero_columns: {flagged}\n"));
    if pm.is_structureless() {
        out.push_str("# note: layout has no role-to-role edges; matrix is all zero\n");
    }

    out.push_str("matrix,src_role");
    for &r in &pm.roles {
        out.push(',');
        out.push_str(ontology.role_name(r));
    }
    out.push('\n');
    for (label, m) in [("mean", &pm.mean_norms), ("normalized", &pm.normalized)] {
        for (s, &r) in pm.roles.iter().enumerate() {
            out.push_str(label);
            out.push(',');
            out.push_str(ontology.role_name(r));
            for d in 0..pm.roles.len() {
                out.push_str(&format!(",{}", m.get(s, d)));
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Linear blend between the low and high heat colors.
fn heat_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let lo = (247.0, 252.0, 250.0);
    let hi = (8.0, 104.0, 114.0);
    let r = (lo.0 + (hi.0 - lo.0) * v) as u8;
    let g = (lo.1 + (hi.1 - lo.1) * v) as u8;
    let b = (lo.2 + (hi.2 - lo.2) * v) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Render the normalized matrix as a self-contained SVG heatmap.
pub fn write_heatmap_svg(path: &Path, pm: &PropagationMatrix, ontology: &Ontology) -> Result<()> {
    let k = pm.roles.len();
    let cell = 52.0;
    let left = 120.0;
    let top = 70.0;
    let w = left + cell * k as f64 + 20.0;
    let h = top + cell * k as f64 + 40.0;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
         viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n"
    ));
    s.push_str(&format!(
        "<text x=\"{left}\" y=\"22\" font-size=\"15\">{} ({}, {} instances, src row → dst column)</text>\n",
        xml_escape(ontology.verb_name(pm.verb)),
        pm.kind,
        pm.instances
    ));
    for (d, &r) in pm.roles.iter().enumerate() {
        let x = left + cell * (d as f64 + 0.5);
        s.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            top - 10.0,
            xml_escape(ontology.role_name(r))
        ));
    }
    for (src, &r) in pm.roles.iter().enumerate() {
        let y = top + cell * (src as f64 + 0.5) + 4.0;
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            left - 8.0,
            xml_escape(ontology.role_name(r))
        ));
        for d in 0..k {
            let v = pm.normalized.get(src, d);
            let x = left + cell * d as f64;
            let yy = top + cell * src as f64;
            s.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{yy:.1}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"{}\" stroke=\"#ffffff\"/>\n",
                heat_color(v)
            ));
            let tcol = if v > 0.55 { "#ffffff" } else { "#1a1a1a" };
            s.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" \
                 fill=\"{tcol}\">{v:.2}</text>\n",
                x + cell / 2.0,
                yy + cell / 2.0 + 4.0
            ));
        }
    }
    let note = if pm.is_structureless() {
        "no role-to-role edges in this layout".to_string()
    } else if pm.zero_columns.is_empty() {
        "columns sum to 1".to_string()
    } else {
        format!("{} column(s) carry no mass", pm.zero_columns.len())
    };
    s.push_str(&format!(
        "<text x=\"{left}\" y=\"{:.1}\" font-size=\"11\" fill=\"#555555\">{note}</text>\n",
        top + cell * k as f64 + 24.0
    ));
    s.push_str("</svg>\n");
    std::fs::write(path, s).map_err(|e| Error::io(path.display().to_string(), e))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Dump the learned verb and role embeddings as labeled CSVs (one row per
/// verb or role, exact decimal values). Returns the two file paths.
pub fn export_embeddings<R: Real>(
    model: &Model<R>,
    ontology: &Ontology,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let write_one = |path: &Path, labels: Vec<&str>, m: &Tensor2<R>| -> Result<()> {
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut header = String::from("name");
        for d in 0..m.cols() {
            header.push_str(&format!(",d{d}"));
        }
        writeln!(w, "{header}").map_err(|e| Error::io(path.display().to_string(), e))?;
        for (i, label) in labels.iter().enumerate() {
            let mut line = String::from(*label);
            for d in 0..m.cols() {
                line.push_str(&format!(",{}", m.get(i, d).as_f64()));
            }
            writeln!(w, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))
    };

    let verbs_path = out_dir.join("verb_embeddings.csv");
    let roles_path = out_dir.join("role_embeddings.csv");
    let verb_labels = (0..ontology.n_verbs()).map(|v| ontology.verb_name(VerbId(v))).collect();
    let role_labels = (0..ontology.n_roles()).map(|r| ontology.role_name(RoleId(r))).collect();
    write_one(&verbs_path, verb_labels, model.params.get(ParamBlock::VerbEmbed))?;
    write_one(&roles_path, role_labels, model.params.get(ParamBlock::RoleEmbed))?;
    Ok((verbs_path, roles_path))
}

/// Cosine similarity of two equal-length vectors (0 when either is zero).
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine needs equal lengths");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Read an embedding CSV produced by `export_embeddings` back into
/// (labels, rows).
pub fn read_embeddings_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let mut it = record.iter();
        let label = it
            .next()
            .ok_or_else(|| Error::Data(format!("{}: empty row", path.display())))?;
        labels.push(label.to_string());
        let row: std::result::Result<Vec<f64>, _> = it.map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| {
            Error::Data(format!("{}: bad number in row '{label}': {e}", path.display()))
        })?);
    }
    Ok((labels, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NetConfig, Nonlinearity};
    use crate::ontology::{NounId, EMPTY_NOUN};
    use crate::synthetic::{generate_synthetic, GenConfig};
    use std::collections::BTreeMap;

    fn two_role_ontology() -> Ontology {
        Ontology::build(
            vec!["v0".into()],
            vec!["agent".into(), "place".into()],
            vec![EMPTY_NOUN.into(), "a".into(), "b".into()],
            vec![vec![RoleId(0), RoleId(1)]],
            BTreeMap::new(),
            vec![None],
        )
        .unwrap()
    }

    fn instance_of(ont: &Ontology, phi_v: &[f64], phi_n: &[f64]) -> Instance {
        let ann: BTreeMap<RoleId, NounId> =
            ont.frame(VerbId(0)).iter().map(|&r| (r, NounId(1))).collect();
        Instance {
            id: "i0".into(),
            verb: VerbId(0),
            phi_v: Tensor2::row_from_f64(phi_v),
            phi_n: Tensor2::row_from_f64(phi_n),
            annotations: [ann.clone(), ann.clone(), ann],
        }
    }

    fn hand_model(ont: &Ontology) -> Model<f64> {
        let net = NetConfig {
            hidden: 2,
            nonlinearity: Nonlinearity::Tanh,
            topology: crate::topology::TopologyKind::FullyConnected,
            steps: 1,
            ..NetConfig::default()
        };
        Model::init(ont, net, 2, 2, 0).unwrap()
    }

    #[test]
    fn bias_only_messages_match_the_scalar_oracle_exactly() {
        let ont = two_role_ontology();
        let mut m = hand_model(&ont);
        // Dead role inputs make every initial role state exactly zero, so
        // each message reduces to the bias.
        *m.params.get_mut(ParamBlock::WIn) = Tensor2::zeros(2, 2);
        *m.params.get_mut(ParamBlock::BP) = Tensor2::row_from_f64(&[3.0, 4.0]);
        let inst = instance_of(&ont, &[0.5, -0.2], &[0.6, -0.3]);

        let pm = propagation_norm_matrix(
            &m,
            &ont,
            VerbId(0),
            std::slice::from_ref(&inst),
            TopologyKind::FullyConnected,
            true,
        )
        .unwrap();
        assert_eq!(pm.edge_count, 2);
        assert_eq!(pm.instances, 1);
        assert!(pm.zero_columns.is_empty());
        assert!((pm.mean_norms.get(0, 1) - 5.0).abs() <= 1e-12);
        assert!((pm.mean_norms.get(1, 0) - 5.0).abs() <= 1e-12);
        assert_eq!(pm.mean_norms.get(0, 0), 0.0);
        assert_eq!(pm.normalized.get(0, 1), 1.0);
        assert_eq!(pm.normalized.get(1, 0), 1.0);

        // Without the bias the same model sends nothing at all.
        let pm = propagation_norm_matrix(
            &m,
            &ont,
            VerbId(0),
            std::slice::from_ref(&inst),
            TopologyKind::FullyConnected,
            false,
        )
        .unwrap();
        assert_eq!(pm.mean_norms.get(0, 1), 0.0);
        assert_eq!(pm.zero_columns, vec![RoleId(0), RoleId(1)]);
        assert_eq!(pm.normalized.get(1, 0), 0.0);
    }

    #[test]
    fn hand_weighted_two_role_model_matches_scalar_recomputation() {
        let ont = two_role_ontology();
        let mut m = hand_model(&ont);
        // Identity input map, all-ones verb factor, distinct role factors:
        // initial states are unit-normalized tanh of scaled noun features.
        *m.params.get_mut(ParamBlock::WIn) =
            Tensor2::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        *m.params.get_mut(ParamBlock::VerbEmbed) = Tensor2::filled(1, 2, 1.0);
        *m.params.get_mut(ParamBlock::RoleEmbed) =
            Tensor2::new(2, 2, vec![1.0, 1.0, 0.5, 2.0]).unwrap();
        let wp = [[0.5, -1.0], [2.0, 0.25]];
        *m.params.get_mut(ParamBlock::WP) =
            Tensor2::new(2, 2, vec![wp[0][0], wp[0][1], wp[1][0], wp[1][1]]).unwrap();
        *m.params.get_mut(ParamBlock::BP) = Tensor2::row_from_f64(&[0.1, -0.2]);

        let phi_n = [0.6, -0.3];
        let inst = instance_of(&ont, &[0.5, -0.2], &phi_n);

        let expect = |scale: [f64; 2]| -> f64 {
            let a = (phi_n[0] * scale[0]).tanh();
            let b = (phi_n[1] * scale[1]).tanh();
            let n = (a * a + b * b).sqrt();
            let (h0, h1) = (a / n, b / n);
            let m0 = wp[0][0] * h0 + wp[0][1] * h1 + 0.1;
            let m1 = wp[1][0] * h0 + wp[1][1] * h1 - 0.2;
            (m0 * m0 + m1 * m1).sqrt()
        };

        let pm = propagation_norm_matrix(
            &m,
            &ont,
            VerbId(0),
            std::slice::from_ref(&inst),
            TopologyKind::FullyConnected,
            true,
        )
        .unwrap();
        // Row = source role: entry (0,1) carries role 0's state.
        assert!((pm.mean_norms.get(0, 1) - expect([1.0, 1.0])).abs() <= 1e-10);
        assert!((pm.mean_norms.get(1, 0) - expect([0.5, 2.0])).abs() <= 1e-10);
        for d in 0..2 {
            let sum: f64 = (0..2).map(|s| pm.normalized.get(s, d)).sum();
            assert!((sum - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn equal_norms_give_uniform_columns() {
        let cfg = GenConfig {
            verbs: 2,
            roles: 4,
            nouns: 5,
            min_roles_per_frame: 3,
            max_roles_per_frame: 3,
            train_instances: 6,
            dev_instances: 0,
            with_alias_role: false,
            ..GenConfig::default()
        };
        let data = generate_synthetic(&cfg, 3).unwrap();
        let verb_feat = data.train[0].phi_v.cols();
        let noun_feat = data.train[0].phi_n.cols();
        let net = NetConfig { hidden: 3, ..NetConfig::default() };
        let mut m: Model<f64> = Model::init(&data.ontology, net, verb_feat, noun_feat, 1).unwrap();
        let (r, c) = m.dims.shape_of(ParamBlock::WP);
        *m.params.get_mut(ParamBlock::WP) = Tensor2::zeros(r, c);
        *m.params.get_mut(ParamBlock::BP) = Tensor2::row_from_f64(&[3.0, 0.0, 4.0]);

        let verb = data.train[0].verb;
        let pm = propagation_norm_matrix(
            &m,
            &data.ontology,
            verb,
            &data.train,
            TopologyKind::FullyConnected,
            true,
        )
        .unwrap();
        // Three roles, each destination fed by the two others equally.
        assert_eq!(pm.roles.len(), 3);
        for d in 0..3 {
            for s in 0..3 {
                let want = if s == d { 0.0 } else { 0.5 };
                assert!((pm.normalized.get(s, d) - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn column_sums_hold_across_kinds_and_instance_order() {
        let cfg = GenConfig {
            verbs: 3,
            roles: 5,
            nouns: 6,
            train_instances: 30,
            dev_instances: 0,
            ..GenConfig::default()
        };
        let data = generate_synthetic(&cfg, 11).unwrap();
        let net = NetConfig { hidden: 4, ..NetConfig::default() };
        let m: Model<f64> = Model::init(
            &data.ontology,
            net,
            data.train[0].phi_v.cols(),
            data.train[0].phi_n.cols(),
            2,
        )
        .unwrap();

        let mut reversed = data.train.clone();
        reversed.reverse();
        for kind in
            [TopologyKind::FullyConnected, TopologyKind::Chain, TopologyKind::Tree]
        {
            for v in 0..data.ontology.n_verbs() {
                let verb = VerbId(v);
                if !data.train.iter().any(|i| i.verb == verb) {
                    continue;
                }
                let pm =
                    propagation_norm_matrix(&m, &data.ontology, verb, &data.train, kind, true)
                        .unwrap();
                let k = pm.roles.len();
                for d in 0..k {
                    let sum: f64 = (0..k).map(|s| pm.normalized.get(s, d)).sum();
                    let flagged = pm.zero_columns.contains(&pm.roles[d]);
                    if flagged {
                        assert_eq!(sum, 0.0);
                    } else {
                        assert!((sum - 1.0).abs() <= 1e-9, "{kind:?} col {d}: {sum}");
                    }
                }
                let pm2 =
                    propagation_norm_matrix(&m, &data.ontology, verb, &reversed, kind, true)
                        .unwrap();
                for s in 0..k {
                    for d in 0..k {
                        let a = pm.mean_norms.get(s, d);
                        let b = pm2.mean_norms.get(s, d);
                        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn unaries_yield_an_explicit_no_edge_diagnostic() {
        let ont = two_role_ontology();
        let m = hand_model(&ont);
        let inst = instance_of(&ont, &[0.5, -0.2], &[0.6, -0.3]);
        let pm = propagation_norm_matrix(
            &m,
            &ont,
            VerbId(0),
            std::slice::from_ref(&inst),
            TopologyKind::Unaries,
            true,
        )
        .unwrap();
        assert!(pm.is_structureless());
        assert_eq!(pm.edge_count, 0);
        assert_eq!(pm.zero_columns, vec![RoleId(0), RoleId(1)]);
        assert!(pm.mean_norms.data().iter().all(|&v| v == 0.0));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_matrix_csv(&p, &pm, &ont).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("no role-to-role edges"));
        assert!(text.contains("# zero_columns: agent place"));
    }

    #[test]
    fn missing_verb_is_rejected() {
        let ont = two_role_ontology();
        let m = hand_model(&ont);
        let err = propagation_norm_matrix(
            &m,
            &ont,
            VerbId(0),
            &[],
            TopologyKind::Chain,
            true,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn embeddings_round_trip_exactly_and_csv_is_labeled() {
        let ont = two_role_ontology();
        let m = hand_model(&ont);
        let dir = tempfile::tempdir().unwrap();
        let (vp, rp) = export_embeddings(&m, &ont, dir.path()).unwrap();

        let (vl, vrows) = read_embeddings_csv(&vp).unwrap();
        assert_eq!(vl, vec!["v0"]);
        assert_eq!(vrows.len(), 1);
        let want = m.params.get(ParamBlock::VerbEmbed);
        for d in 0..2 {
            assert_eq!(vrows[0][d].to_bits(), want.get(0, d).to_bits());
        }

        let (rl, rrows) = read_embeddings_csv(&rp).unwrap();
        assert_eq!(rl, vec!["agent", "place"]);
        let want = m.params.get(ParamBlock::RoleEmbed);
        for (i, row) in rrows.iter().enumerate() {
            for (d, v) in row.iter().enumerate() {
                assert_eq!(v.to_bits(), want.get(i, d).to_bits());
            }
        }
    }

    #[test]
    fn heatmap_svg_is_well_formed_and_labeled() {
        let ont = two_role_ontology();
        let mut m = hand_model(&ont);
        *m.params.get_mut(ParamBlock::BP) = Tensor2::row_from_f64(&[3.0, 4.0]);
        let inst = instance_of(&ont, &[0.5, -0.2], &[0.6, -0.3]);
        let pm = propagation_norm_matrix(
            &m,
            &ont,
            VerbId(0),
            std::slice::from_ref(&inst),
            TopologyKind::FullyConnected,
            true,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.svg");
        write_heatmap_svg(&p, &pm, &ont).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("agent") && text.contains("place"));
        assert_eq!(text.matches("<rect").count(), 4);
    }

    #[test]
    fn cosine_handles_zero_and_identical_vectors() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        let v = [0.3, -0.7, 2.0];
        assert!((cosine(&v, &v) - 1.0).abs() <= 1e-12);
        assert!((cosine(&[1.0, 0.0], &[0.0, 1.0])).abs() <= 1e-12);
    }
}
