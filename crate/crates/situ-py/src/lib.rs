//! Python bindings for the `situ` library.
//!
//! The module mirrors the pipeline the CLI offers: generate a synthetic
//! dataset, train a graph network on it, decode and score predictions,
//! and inspect propagation structure — all driven from Python.
//!
//! ```python
//! import situ_py
//! ds = situ_py.generate(verbs=4, train_instances=80, seed=7)
//! model = situ_py.Model(ds, topology="fc", steps=2, hidden=16, seed=3)
//! model.train(ds, epochs=5, dropout=0.0, seed=3)
//! report = model.evaluate(ds, split="dev")
//! ```

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use std::path::Path;

use situ::analysis::{propagation_norm_matrix, PropagationMatrix};
use situ::inference::{Decoder, ScoreNorm, SituationPrediction};
use situ::model::{NetConfig, Nonlinearity, ParamBlock};
use situ::numerics::Tensor2;
use situ::ontology::{Instance, Ontology, VerbId};
use situ::synthetic::{generate_synthetic, GenConfig, SyntheticData};
use situ::topology::TopologyKind;
use situ::training::{train as train_model, Checkpoint, TrainConfig};

/// Map library errors onto Python exceptions: I/O failures raise OSError,
/// everything else (config, data, shape, contract) raises ValueError.
fn perr(e: situ::error::Error) -> PyErr {
    let msg = e.to_string();
    match e.exit_code() {
        4 => PyIOError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn topology_name(kind: TopologyKind) -> &'static str {
    match kind {
        TopologyKind::Unaries => "unaries",
        TopologyKind::Chain => "chain",
        TopologyKind::Tree => "tree",
        TopologyKind::FullyConnected => "fc",
    }
}

fn nonlinearity_name(n: Nonlinearity) -> &'static str {
    match n {
        Nonlinearity::Tanh => "tanh",
        Nonlinearity::Relu => "relu",
    }
}

fn tensor_rows(t: &Tensor2<f64>) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

fn row_tensor(values: &[f64], what: &str) -> PyResult<Tensor2<f64>> {
    if values.is_empty() {
        return Err(PyValueError::new_err(format!("{what} must not be empty")));
    }
    let mut t = Tensor2::<f64>::zeros(1, values.len());
    t.data_mut().copy_from_slice(values);
    Ok(t)
}

/// A synthetic dataset: ontology (verbs, frames, roles, nouns), train and
/// dev splits, and the per-verb planted role relations the generator hid
/// in the features.
#[pyclass(module = "situ_py")]
struct Dataset {
    data: SyntheticData,
}

impl Dataset {
    fn split(&self, name: &str) -> PyResult<&[Instance]> {
        match name {
            "train" => Ok(&self.data.train),
            "dev" => Ok(&self.data.dev),
            other => Err(PyValueError::new_err(format!(
                "unknown split '{other}' (expected 'train' or 'dev')"
            ))),
        }
    }

    fn instance(&self, split: &str, index: usize) -> PyResult<&Instance> {
        let set = self.split(split)?;
        set.get(index).ok_or_else(|| {
            PyValueError::new_err(format!(
                "index {index} out of range for split '{split}' of {} instances",
                set.len()
            ))
        })
    }

    fn verb_id(&self, name: &str) -> PyResult<VerbId> {
        self.data.ontology.verb_id(name).ok_or_else(|| {
            PyValueError::new_err(format!("unknown verb '{name}'"))
        })
    }
}

#[pymethods]
impl Dataset {
    #[getter]
    fn n_train(&self) -> usize {
        self.data.train.len()
    }

    #[getter]
    fn n_dev(&self) -> usize {
        self.data.dev.len()
    }

    #[getter]
    fn n_verbs(&self) -> usize {
        self.data.ontology.n_verbs()
    }

    #[getter]
    fn n_roles(&self) -> usize {
        self.data.ontology.n_roles()
    }

    #[getter]
    fn n_nouns(&self) -> usize {
        self.data.ontology.n_nouns()
    }

    /// Digest identifying the ontology; models remember it so a checkpoint
    /// can refuse to load against a different dataset.
    #[getter]
    fn ontology_sha(&self) -> String {
        self.data.ontology.sha256()
    }

    #[getter]
    fn verb_names(&self) -> Vec<String> {
        let o = &self.data.ontology;
        (0..o.n_verbs()).map(|v| o.verb_name(VerbId(v)).to_string()).collect()
    }

    /// Role names of one verb's frame, in frame order.
    fn frame(&self, verb: &str) -> PyResult<Vec<String>> {
        let v = self.verb_id(verb)?;
        let o = &self.data.ontology;
        Ok(o.frame(v).iter().map(|&r| o.role_name(r).to_string()).collect())
    }

    /// The planted role relation per verb: which source role determines
    /// which destination role, keyed by the parity role's noun.
    fn planted<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let o = &self.data.ontology;
        let out = PyDict::new(py);
        for (&verb, rel) in &self.data.planted {
            let entry = PyDict::new(py);
            entry.set_item("src", o.role_name(rel.src))?;
            entry.set_item("dst", o.role_name(rel.dst))?;
            entry.set_item("parity", rel.parity.map(|r| o.role_name(r).to_string()))?;
            out.set_item(o.verb_name(verb), entry)?;
        }
        Ok(out)
    }

    /// Ground truth of one instance: its verb and, per annotator, the
    /// role→noun assignment.
    fn truth<'py>(
        &self,
        py: Python<'py>,
        split: &str,
        index: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let inst = self.instance(split, index)?;
        let o = &self.data.ontology;
        let out = PyDict::new(py);
        out.set_item("id", &inst.id)?;
        out.set_item("verb", o.verb_name(inst.verb))?;
        let annotators = PyList::empty(py);
        for ann in &inst.annotations {
            let d = PyDict::new(py);
            for (&role, &noun) in ann {
                d.set_item(o.role_name(role), o.noun_name(noun))?;
            }
            annotators.append(d)?;
        }
        out.set_item("annotations", annotators)?;
        Ok(out)
    }

    /// Feature vectors of one instance as (verb_features, noun_features).
    fn features(&self, split: &str, index: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let inst = self.instance(split, index)?;
        Ok((inst.phi_v.data().to_vec(), inst.phi_n.data().to_vec()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(verbs={}, roles={}, nouns={}, train={}, dev={})",
            self.data.ontology.n_verbs(),
            self.data.ontology.n_roles(),
            self.data.ontology.n_nouns(),
            self.data.train.len(),
            self.data.dev.len()
        )
    }
}

/// Generate a synthetic dataset. Every keyword defaults to the library's
/// generator defaults; pass only what you want to change.
#[pyfunction]
#[pyo3(signature = (
    seed = 0,
    verbs = None,
    roles = None,
    nouns = None,
    min_roles_per_frame = None,
    max_roles_per_frame = None,
    train_instances = None,
    dev_instances = None,
    correlation = None,
    noise = None,
    feature_scale = None,
    empty_noun_prob = None,
    annotator_fidelity = None,
    with_alias_role = None,
    clusters = None,
))]
#[allow(clippy::too_many_arguments)]
fn generate(
    seed: u64,
    verbs: Option<usize>,
    roles: Option<usize>,
    nouns: Option<usize>,
    min_roles_per_frame: Option<usize>,
    max_roles_per_frame: Option<usize>,
    train_instances: Option<usize>,
    dev_instances: Option<usize>,
    correlation: Option<f64>,
    noise: Option<f64>,
    feature_scale: Option<f64>,
    empty_noun_prob: Option<f64>,
    annotator_fidelity: Option<f64>,
    with_alias_role: Option<bool>,
    clusters: Option<usize>,
) -> PyResult<Dataset> {
    let mut cfg = GenConfig::default();
    macro_rules! over {
        ($opt:expr, $field:expr) => {
            if let Some(v) = $opt {
                $field = v;
            }
        };
    }
    over!(verbs, cfg.verbs);
    over!(roles, cfg.roles);
    over!(nouns, cfg.nouns);
    over!(min_roles_per_frame, cfg.min_roles_per_frame);
    over!(max_roles_per_frame, cfg.max_roles_per_frame);
    over!(train_instances, cfg.train_instances);
    over!(dev_instances, cfg.dev_instances);
    over!(correlation, cfg.correlation);
    over!(noise, cfg.noise);
    over!(feature_scale, cfg.feature_scale);
    over!(empty_noun_prob, cfg.empty_noun_prob);
    over!(annotator_fidelity, cfg.annotator_fidelity);
    over!(with_alias_role, cfg.with_alias_role);
    over!(clusters, cfg.clusters);
    let data = generate_synthetic(&cfg, seed).map_err(perr)?;
    Ok(Dataset { data })
}

/// A graph network over situation frames, trained at f64 precision.
#[pyclass(module = "situ_py")]
struct Model {
    inner: situ::model::Model<f64>,
    ontology_sha: String,
}

impl Model {
    fn decoder<'a>(
        &'a self,
        dataset: &'a Dataset,
        score_norm: ScoreNorm,
    ) -> PyResult<Decoder<'a, f64>> {
        self.check_ontology(dataset)?;
        Decoder::new(&self.inner, &dataset.data.ontology, score_norm).map_err(perr)
    }

    fn check_ontology(&self, dataset: &Dataset) -> PyResult<()> {
        let sha = dataset.data.ontology.sha256();
        if sha != self.ontology_sha {
            return Err(PyValueError::new_err(format!(
                "dataset ontology {} does not match the model's ontology {}",
                &sha[..12.min(sha.len())],
                &self.ontology_sha[..12.min(self.ontology_sha.len())],
            )));
        }
        Ok(())
    }

    fn prediction_dict<'py>(
        &self,
        py: Python<'py>,
        ontology: &Ontology,
        pred: &SituationPrediction,
    ) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        out.set_item("verb", ontology.verb_name(pred.verb))?;
        out.set_item("verb_logprob", pred.verb_logprob)?;
        out.set_item("score", pred.total_score)?;
        let roles = PyDict::new(py);
        for &(role, noun, score) in &pred.assignments {
            roles.set_item(
                ontology.role_name(role),
                (ontology.noun_name(noun), score),
            )?;
        }
        out.set_item("roles", roles)?;
        Ok(out)
    }
}

fn parse_score_norm(name: &str) -> PyResult<ScoreNorm> {
    match name {
        "mean" => Ok(ScoreNorm::MeanRoles),
        "sum" => Ok(ScoreNorm::SumRoles),
        other => Err(PyValueError::new_err(format!(
            "unknown score_norm '{other}' (expected 'mean' or 'sum')"
        ))),
    }
}

#[pymethods]
impl Model {
    /// Build a freshly initialized model sized for `dataset`.
    #[new]
    #[pyo3(signature = (
        dataset,
        topology = "fc",
        steps = None,
        hidden = None,
        nonlinearity = None,
        verb_onehot = None,
        sequential = None,
        fc_verb_edges = None,
        seed = 0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        dataset: PyRef<'_, Dataset>,
        topology: &str,
        steps: Option<usize>,
        hidden: Option<usize>,
        nonlinearity: Option<&str>,
        verb_onehot: Option<bool>,
        sequential: Option<bool>,
        fc_verb_edges: Option<bool>,
        seed: u64,
    ) -> PyResult<Model> {
        let mut net = NetConfig {
            topology: topology.parse::<TopologyKind>().map_err(perr)?,
            ..NetConfig::default()
        };
        if let Some(v) = steps {
            net.steps = v;
        }
        if let Some(v) = hidden {
            net.hidden = v;
        }
        if let Some(v) = nonlinearity {
            net.nonlinearity = v.parse::<Nonlinearity>().map_err(perr)?;
        }
        if let Some(v) = verb_onehot {
            net.verb_onehot = v;
        }
        if let Some(v) = sequential {
            net.sequential = v;
        }
        if let Some(v) = fc_verb_edges {
            net.fc_verb_edges = v;
        }
        let first = dataset.data.train.first().or(dataset.data.dev.first()).ok_or_else(
            || PyValueError::new_err("dataset holds no instances to size the model from"),
        )?;
        let inner = situ::model::Model::<f64>::init(
            &dataset.data.ontology,
            net,
            first.phi_v.cols(),
            first.phi_n.cols(),
            seed,
        )
        .map_err(perr)?;
        Ok(Model { inner, ontology_sha: dataset.data.ontology.sha256() })
    }

    #[getter]
    fn topology(&self) -> &'static str {
        topology_name(self.inner.net.topology)
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.net.steps
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.net.hidden
    }

    #[getter]
    fn nonlinearity(&self) -> &'static str {
        nonlinearity_name(self.inner.net.nonlinearity)
    }

    /// Train in place on the dataset's train split. Returns per-epoch
    /// statistics (epoch, lr, train_loss, and dev scores when measured).
    #[pyo3(signature = (
        dataset,
        epochs = None,
        batch = None,
        lr = None,
        lr_decay = None,
        lr_decay_after = None,
        clip = None,
        dropout = None,
        dropout_verb_head = None,
        seed = None,
        dev_every = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train<'py>(
        &mut self,
        py: Python<'py>,
        dataset: PyRef<'_, Dataset>,
        epochs: Option<usize>,
        batch: Option<usize>,
        lr: Option<f64>,
        lr_decay: Option<f64>,
        lr_decay_after: Option<usize>,
        clip: Option<f64>,
        dropout: Option<f64>,
        dropout_verb_head: Option<bool>,
        seed: Option<u64>,
        dev_every: Option<usize>,
    ) -> PyResult<Bound<'py, PyList>> {
        self.check_ontology(&dataset)?;
        let mut cfg = TrainConfig::default();
        macro_rules! over {
            ($opt:expr, $field:expr) => {
                if let Some(v) = $opt {
                    $field = v;
                }
            };
        }
        over!(epochs, cfg.epochs);
        over!(batch, cfg.batch);
        over!(lr, cfg.lr);
        over!(lr_decay, cfg.lr_decay);
        over!(lr_decay_after, cfg.lr_decay_after);
        over!(clip, cfg.clip);
        over!(dropout, cfg.dropout);
        over!(dropout_verb_head, cfg.dropout_verb_head);
        over!(seed, cfg.seed);
        over!(dev_every, cfg.dev_every);
        let out = train_model(
            self.inner.clone(),
            &dataset.data.ontology,
            &dataset.data.train,
            &dataset.data.dev,
            &cfg,
        )
        .map_err(perr)?;
        self.inner = out.model;
        let history = PyList::empty(py);
        for s in &out.history {
            let d = PyDict::new(py);
            d.set_item("epoch", s.epoch)?;
            d.set_item("lr", s.lr)?;
            d.set_item("train_loss", s.train_loss)?;
            d.set_item("dev_verb", s.dev_verb)?;
            d.set_item("dev_value", s.dev_value)?;
            d.set_item("dev_value_all", s.dev_value_all)?;
            history.append(d)?;
        }
        Ok(history)
    }

    /// Decode one instance of a split and return the top situation.
    #[pyo3(signature = (dataset, split = "dev", index = 0, score_norm = "mean"))]
    fn predict_instance<'py>(
        &self,
        py: Python<'py>,
        dataset: PyRef<'_, Dataset>,
        split: &str,
        index: usize,
        score_norm: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let decoder = self.decoder(&dataset, parse_score_norm(score_norm)?)?;
        let inst = dataset.instance(split, index)?;
        let pred = decoder.predict(&inst.phi_v, &inst.phi_n).map_err(perr)?;
        self.prediction_dict(py, &dataset.data.ontology, &pred)
    }

    /// Decode raw feature vectors (one row each) and return the top
    /// situation.
    #[pyo3(signature = (dataset, phi_v, phi_n, score_norm = "mean"))]
    fn predict_features<'py>(
        &self,
        py: Python<'py>,
        dataset: PyRef<'_, Dataset>,
        phi_v: Vec<f64>,
        phi_n: Vec<f64>,
        score_norm: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let decoder = self.decoder(&dataset, parse_score_norm(score_norm)?)?;
        let pv = row_tensor(&phi_v, "phi_v")?;
        let pn = row_tensor(&phi_n, "phi_n")?;
        let pred = decoder.predict(&pv, &pn).map_err(perr)?;
        self.prediction_dict(py, &dataset.data.ontology, &pred)
    }

    /// Score a whole split: top-1/top-5/ground-truth-verb accuracies for
    /// verb, value, and value-all, plus their mean and the instance count.
    #[pyo3(signature = (dataset, split = "dev", beam = 1, whole_annotator = false, score_norm = "mean"))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        dataset: PyRef<'_, Dataset>,
        split: &str,
        beam: usize,
        whole_annotator: bool,
        score_norm: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let decoder = self.decoder(&dataset, parse_score_norm(score_norm)?)?;
        let instances = dataset.split(split)?;
        let bundles = instances
            .iter()
            .map(|inst| decoder.predict_for_metrics(inst, beam))
            .collect::<situ::error::Result<Vec<_>>>()
            .map_err(perr)?;
        let rule = if whole_annotator {
            situ::evaluation::MatchRule::WholeAnnotator
        } else {
            situ::evaluation::MatchRule::AnyAnnotator
        };
        let report = situ::evaluation::aggregate(instances, &bundles, rule).map_err(perr)?;
        let d = PyDict::new(py);
        d.set_item("top1_verb", report.top1_verb)?;
        d.set_item("top1_value", report.top1_value)?;
        d.set_item("top1_value_all", report.top1_value_all)?;
        d.set_item("top5_verb", report.top5_verb)?;
        d.set_item("top5_value", report.top5_value)?;
        d.set_item("top5_value_all", report.top5_value_all)?;
        d.set_item("gt_value", report.gt_value)?;
        d.set_item("gt_value_all", report.gt_value_all)?;
        d.set_item("mean", report.mean)?;
        d.set_item("count", report.count)?;
        Ok(d)
    }

    /// Average first-step role→role message norms for one verb over a
    /// split, column-normalized so each receiving role's column sums to 1.
    #[pyo3(signature = (dataset, verb, split = "train", topology = None, include_bias = false))]
    fn propagation_matrix<'py>(
        &self,
        py: Python<'py>,
        dataset: PyRef<'_, Dataset>,
        verb: &str,
        split: &str,
        topology: Option<&str>,
        include_bias: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        self.check_ontology(&dataset)?;
        let v = dataset.verb_id(verb)?;
        let kind = match topology {
            Some(name) => name.parse::<TopologyKind>().map_err(perr)?,
            None => self.inner.net.topology,
        };
        let instances = dataset.split(split)?;
        let m: PropagationMatrix = propagation_norm_matrix(
            &self.inner,
            &dataset.data.ontology,
            v,
            instances,
            kind,
            include_bias,
        )
        .map_err(perr)?;
        let o = &dataset.data.ontology;
        let d = PyDict::new(py);
        d.set_item("verb", o.verb_name(m.verb))?;
        d.set_item(
            "roles",
            m.roles.iter().map(|&r| o.role_name(r).to_string()).collect::<Vec<_>>(),
        )?;
        d.set_item("topology", topology_name(m.kind))?;
        d.set_item("include_bias", m.include_bias)?;
        d.set_item("instances", m.instances)?;
        d.set_item("edge_count", m.edge_count)?;
        d.set_item("mean_norms", tensor_rows(&m.mean_norms))?;
        d.set_item("normalized", tensor_rows(&m.normalized))?;
        d.set_item(
            "zero_columns",
            m.zero_columns.iter().map(|&r| o.role_name(r).to_string()).collect::<Vec<_>>(),
        )?;
        d.set_item("structureless", m.is_structureless())?;
        Ok(d)
    }

    /// Learned conditioning embeddings, keyed by verb or role name.
    #[pyo3(signature = (dataset, which = "role"))]
    fn embeddings<'py>(
        &self,
        py: Python<'py>,
        dataset: PyRef<'_, Dataset>,
        which: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        self.check_ontology(&dataset)?;
        let o = &dataset.data.ontology;
        let (block, labels): (ParamBlock, Vec<String>) = match which {
            "verb" => (
                ParamBlock::VerbEmbed,
                (0..o.n_verbs()).map(|v| o.verb_name(VerbId(v)).to_string()).collect(),
            ),
            "role" => (
                ParamBlock::RoleEmbed,
                (0..o.n_roles())
                    .map(|r| o.role_name(situ::ontology::RoleId(r)).to_string())
                    .collect(),
            ),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown embedding table '{other}' (expected 'verb' or 'role')"
                )))
            }
        };
        let t = self.inner.params.get(block);
        let d = PyDict::new(py);
        for (i, label) in labels.iter().enumerate() {
            d.set_item(label, t.row(i).to_vec())?;
        }
        Ok(d)
    }

    /// Save a checkpoint (parameters, sizes, and the ontology digest).
    fn save(&self, path: &str) -> PyResult<()> {
        Checkpoint::from_model(&self.inner, None, None, &self.ontology_sha)
            .save(Path::new(path))
            .map_err(perr)
    }

    /// Load a checkpoint; `dataset` must carry the ontology it was
    /// trained against.
    #[staticmethod]
    fn load(path: &str, dataset: PyRef<'_, Dataset>) -> PyResult<Model> {
        let ckpt = Checkpoint::load(Path::new(path)).map_err(perr)?;
        let sha = dataset.data.ontology.sha256();
        if ckpt.ontology_sha256 != sha {
            return Err(PyValueError::new_err(format!(
                "checkpoint was trained against ontology {}, dataset has {}",
                &ckpt.ontology_sha256[..12.min(ckpt.ontology_sha256.len())],
                &sha[..12.min(sha.len())],
            )));
        }
        let (inner, _) = ckpt.into_model::<f64>().map_err(perr)?;
        Ok(Model { inner, ontology_sha: sha })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(topology='{}', steps={}, hidden={})",
            topology_name(self.inner.net.topology),
            self.inner.net.steps,
            self.inner.net.hidden
        )
    }
}

#[pymodule]
fn situ_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
