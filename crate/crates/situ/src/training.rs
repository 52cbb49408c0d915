//! Teacher-forced maximum-likelihood training with RMSProp.
//!
//! Each instance is scored on its annotated verb's graph: the loss sums,
//! over the three annotations, the verb negative log-probability plus the
//! role negative log-probabilities averaged over the frame. Gradients are
//! averaged per batch, clipped elementwise, and applied with RMSProp. The
//! learning rate decays geometrically after a fixed epoch. All shuffling
//! and dropout randomness derives from the configured seed, so a run is
//! reproducible bit for bit.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{score_prediction, MatchRule};
use crate::inference::{Decoder, ScoreNorm};
use crate::model::{BlockVec, Forward, Model, ModelDims, NetConfig, ParamBlock};
use crate::numerics::{Real, Tensor2, ValueId};
use crate::ontology::{Instance, Ontology};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    /// Geometric decay factor applied per epoch past `lr_decay_after`.
    pub lr_decay: f64,
    /// Last 1-indexed epoch that still uses the base rate.
    pub lr_decay_after: usize,
    /// Elementwise gradient clip bound.
    pub clip: f64,
    /// Probability of zeroing a hidden unit before the output heads
    /// (surviving units are scaled up so expectations match).
    pub dropout: f64,
    /// Apply dropout to the verb slot too (false spares only the verb).
    pub dropout_verb_head: bool,
    pub seed: u64,
    /// RMSProp accumulator decay and denominator guard.
    pub rms_decay: f64,
    pub rms_eps: f64,
    /// Evaluate the dev split every this many epochs (0 = never).
    pub dev_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch: 16,
            lr: 1e-3,
            lr_decay: 0.85,
            lr_decay_after: 10,
            clip: 1.0,
            dropout: 0.5,
            dropout_verb_head: true,
            seed: 0,
            rms_decay: 0.9,
            rms_eps: 1e-8,
            dev_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::Config("train: batch size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("train: lr must be positive, got {}", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "train: lr_decay must be in (0,1], got {}",
                self.lr_decay
            )));
        }
        if !(self.clip.is_finite() && self.clip > 0.0) {
            return Err(Error::Config(format!("train: clip must be positive, got {}", self.clip)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "train: dropout must be in [0,1), got {}",
                self.dropout
            )));
        }
        if !(self.rms_decay > 0.0 && self.rms_decay < 1.0) {
            return Err(Error::Config(format!(
                "train: rms_decay must be in (0,1), got {}",
                self.rms_decay
            )));
        }
        if !(self.rms_eps.is_finite() && self.rms_eps > 0.0) {
            return Err(Error::Config(format!(
                "train: rms_eps must be positive, got {}",
                self.rms_eps
            )));
        }
        Ok(())
    }
}

/// Learning rate at a 1-indexed epoch.
pub fn lr_at_epoch(cfg: &TrainConfig, epoch: usize) -> f64 {
    let excess = epoch.saturating_sub(cfg.lr_decay_after) as i32;
    cfg.lr * cfg.lr_decay.powi(excess)
}

/// Deterministically mix seed parts into one stream seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut z = 0x243F6A8885A308D3u64; // arbitrary odd constant
    for &p in parts {
        z ^= p.wrapping_add(0x9E3779B97F4A7C15).wrapping_add(z << 6).wrapping_add(z >> 2);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
    }
    z
}

/// Inverted-dropout masks per active slot: zero with probability
/// `dropout`, else 1/(1-dropout). None when dropout is off. The verb
/// slot's mask is all-ones unless `verb_too`.
pub fn dropout_masks<R: Real>(
    n_active: usize,
    hidden: usize,
    dropout: f64,
    verb_too: bool,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Tensor2<R>>> {
    if dropout == 0.0 {
        return None;
    }
    let keep = R::from_f64(1.0 / (1.0 - dropout));
    let mut masks = Vec::with_capacity(n_active);
    for slot in 0..n_active {
        if slot == 0 && !verb_too {
            masks.push(Tensor2::filled(1, hidden, R::one()));
            continue;
        }
        let mut m = Tensor2::zeros(1, hidden);
        for v in m.data_mut() {
            if rng.random::<f64>() >= dropout {
                *v = keep;
            }
        }
        masks.push(m);
    }
    Some(masks)
}

/// Record the instance loss on the forward tape: over the three
/// annotations, verb NLL plus role NLLs averaged over the frame.
pub fn instance_loss<R: Real>(f: &mut Forward<R>, inst: &Instance) -> Result<ValueId> {
    if f.roles.is_empty() {
        return Err(Error::Contract("loss needs at least one role slot".into()));
    }
    let inv_frame = 1.0 / f.roles.len() as f64;
    let mut grand: Option<ValueId> = None;
    for ann in &inst.annotations {
        let lv = f.tape.pick_log_floor(f.verb_probs, inst.verb.0)?;
        let mut role_sum: Option<ValueId> = None;
        for out in &f.roles {
            let noun = ann.get(&out.role).copied().ok_or_else(|| {
                Error::Contract(format!(
                    "instance '{}' annotation misses role {:?}",
                    inst.id, out.role
                ))
            })?;
            let lp = f.tape.pick_log_floor(out.probs, noun.0)?;
            role_sum = Some(match role_sum {
                None => lp,
                Some(acc) => f.tape.add(acc, lp)?,
            });
        }
        let roles_scaled = f.tape.scale(role_sum.expect("roles nonempty"), R::from_f64(inv_frame))?;
        let total = f.tape.add(lv, roles_scaled)?;
        grand = Some(match grand {
            None => total,
            Some(acc) => f.tape.add(acc, total)?,
        });
    }
    f.tape.scale(grand.expect("annotations nonempty"), R::from_f64(-1.0))
}

/// RMSProp accumulator state.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<R: Real> {
    pub v: BlockVec<R>,
    pub steps: usize,
}

impl<R: Real> OptimizerState<R> {
    pub fn zeros(dims: &ModelDims) -> Self {
        OptimizerState { v: BlockVec::zeros(dims), steps: 0 }
    }
}

/// Elementwise clamp of every gradient block to [-limit, limit].
pub fn clip_elementwise<R: Real>(grads: &mut BlockVec<R>, limit: f64) {
    let hi = R::from_f64(limit);
    let lo = R::from_f64(-limit);
    for block in ParamBlock::ALL {
        for g in grads.get_mut(block).data_mut() {
            if *g > hi {
                *g = hi;
            } else if *g < lo {
                *g = lo;
            }
        }
    }
}

/// One RMSProp update: v ← d·v + (1-d)·g², θ ← θ − lr·g/(√v + eps).
pub fn rmsprop_step<R: Real>(
    params: &mut BlockVec<R>,
    grads: &BlockVec<R>,
    state: &mut OptimizerState<R>,
    lr: f64,
    decay: f64,
    eps: f64,
) {
    let d = R::from_f64(decay);
    let od = R::from_f64(1.0 - decay);
    let lr = R::from_f64(lr);
    let eps = R::from_f64(eps);
    for block in ParamBlock::ALL {
        let g = grads.get(block).data();
        let v = state.v.get_mut(block);
        for ((vv, &gv), p) in
            v.data_mut().iter_mut().zip(g).zip(params.get_mut(block).data_mut())
        {
            *vv = d * *vv + od * gv * gv;
            *p -= lr * gv / (vv.sqrt() + eps);
        }
    }
}

/// One epoch row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub dev_verb: Option<f64>,
    pub dev_value: Option<f64>,
    pub dev_value_all: Option<f64>,
}

pub struct TrainOutcome<R: Real> {
    pub model: Model<R>,
    pub optimizer: OptimizerState<R>,
    pub history: Vec<EpochStats>,
}

/// Accumulate `f`'s parameter gradients for `loss` into `acc`.
fn accumulate_grads<R: Real>(
    f: &Forward<R>,
    loss: ValueId,
    acc: &mut BlockVec<R>,
) -> Result<()> {
    let grads = f.tape.backward(loss)?;
    for (i, block) in ParamBlock::ALL.into_iter().enumerate() {
        if let Some(g) = grads.get(f.param_ids[i]) {
            let dst = acc.get_mut(block);
            for (a, b) in dst.data_mut().iter_mut().zip(g.data()) {
                *a += *b;
            }
        }
    }
    Ok(())
}

/// Run the full training loop. Deterministic for a given config and data.
pub fn train<R: Real>(
    mut model: Model<R>,
    ontology: &Ontology,
    train_set: &[Instance],
    dev_set: &[Instance],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<R>> {
    cfg.validate()?;
    model.net.validate()?;
    if train_set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }

    let topos: Vec<Topology> = (0..ontology.n_verbs())
        .map(|v| {
            Topology::build(
                ontology,
                crate::ontology::VerbId(v),
                model.net.topology,
                model.net.fc_verb_edges,
            )
        })
        .collect::<Result<_>>()?;
    let features: Vec<(Tensor2<R>, Tensor2<R>)> =
        train_set.iter().map(|i| (i.phi_v.cast::<R>(), i.phi_n.cast::<R>())).collect();

    let mut optimizer = OptimizerState::zeros(&model.dims);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr = lr_at_epoch(cfg, epoch);
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, 1, epoch as u64]));
        order.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch) {
            let mut grad_acc = BlockVec::<R>::zeros(&model.dims);
            for &idx in chunk {
                let inst = &train_set[idx];
                let topo = &topos[inst.verb.0];
                let mut mask_rng = ChaCha8Rng::seed_from_u64(derive_seed(&[
                    cfg.seed,
                    2,
                    epoch as u64,
                    idx as u64,
                ]));
                let masks = dropout_masks::<R>(
                    topo.n_active(),
                    model.dims.hidden,
                    cfg.dropout,
                    cfg.dropout_verb_head,
                    &mut mask_rng,
                );
                let (phi_v, phi_n) = &features[idx];
                let mut f = model.forward(topo, phi_v, phi_n, masks.as_deref())?;
                let loss = instance_loss(&mut f, inst)?;
                loss_sum += f.tape.value(loss).get(0, 0).as_f64();
                accumulate_grads(&f, loss, &mut grad_acc)?;
            }
            let inv = R::from_f64(1.0 / chunk.len() as f64);
            for block in ParamBlock::ALL {
                for g in grad_acc.get_mut(block).data_mut() {
                    *g *= inv;
                }
            }
            clip_elementwise(&mut grad_acc, cfg.clip);
            rmsprop_step(&mut model.params, &grad_acc, &mut optimizer, lr, cfg.rms_decay, cfg.rms_eps);
            optimizer.steps += 1;
            if !model.params.all_finite() {
                return Err(Error::NonFinite(format!(
                    "parameters left the finite range at epoch {epoch}"
                )));
            }
        }

        let train_loss = loss_sum / train_set.len() as f64;
        let mut stats = EpochStats {
            epoch,
            lr,
            train_loss,
            dev_verb: None,
            dev_value: None,
            dev_value_all: None,
        };
        let eval_now = cfg.dev_every > 0 && (epoch % cfg.dev_every == 0 || epoch == cfg.epochs);
        if eval_now && !dev_set.is_empty() {
            let (verb, value, value_all) = dev_scores(&model, ontology, dev_set)?;
            stats.dev_verb = Some(verb);
            stats.dev_value = Some(value);
            stats.dev_value_all = Some(value_all);
        }
        log::info!(
            "epoch {epoch}: lr {lr:.6e} loss {train_loss:.6} dev_verb {:?}",
            stats.dev_verb
        );
        history.push(stats);
    }

    Ok(TrainOutcome { model, optimizer, history })
}

/// Greedy top-1 dev metrics in percent: (verb, value, value-all).
pub fn dev_scores<R: Real>(
    model: &Model<R>,
    ontology: &Ontology,
    dev_set: &[Instance],
) -> Result<(f64, f64, f64)> {
    let decoder = Decoder::new(model, ontology, ScoreNorm::MeanRoles)?;
    let mut verb = 0.0;
    let mut value = 0.0;
    let mut value_all = 0.0;
    for inst in dev_set {
        let pred = decoder.predict(&inst.phi_v, &inst.phi_n)?;
        let s = score_prediction(inst, &pred, MatchRule::AnyAnnotator)?;
        verb += s.verb_correct as usize as f64;
        value += s.value;
        value_all += s.value_all;
    }
    let n = dev_set.len() as f64;
    Ok((100.0 * verb / n, 100.0 * value / n, 100.0 * value_all / n))
}

/// Write the per-epoch log as CSV (empty cells when dev was skipped).
pub fn write_history_csv(path: &Path, history: &[EpochStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
    w.write_record(["epoch", "lr", "train_loss", "dev_verb", "dev_value", "dev_value_all"])?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for row in history {
        w.write_record([
            row.epoch.to_string(),
            format!("{:.8e}", row.lr),
            format!("{:.8}", row.train_loss),
            cell(row.dev_verb),
            cell(row.dev_value),
            cell(row.dev_value_all),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

// ── Checkpoints ──

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorDump {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerDump {
    pub steps: usize,
    pub v: BTreeMap<String, TensorDump>,
}

/// On-disk model: everything needed to resume inference elsewhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    /// Digest of the ontology this model was trained against.
    pub ontology_sha256: String,
    /// "f32" or "f64"; values are stored as f64 either way.
    pub precision: String,
    pub dims: ModelDims,
    pub net: NetConfig,
    pub train_config: Option<TrainConfig>,
    pub params: BTreeMap<String, TensorDump>,
    pub optimizer: Option<OptimizerDump>,
}

pub const CHECKPOINT_FORMAT: u32 = 1;

fn dump_blocks<R: Real>(blocks: &BlockVec<R>) -> BTreeMap<String, TensorDump> {
    blocks
        .iter()
        .map(|(b, t)| {
            (
                b.name().to_string(),
                TensorDump { rows: t.rows(), cols: t.cols(), data: t.to_f64_vec() },
            )
        })
        .collect()
}

fn restore_blocks<R: Real>(
    dims: &ModelDims,
    dumped: &BTreeMap<String, TensorDump>,
    what: &str,
) -> Result<BlockVec<R>> {
    for name in dumped.keys() {
        if ParamBlock::from_name(name).is_none() {
            return Err(Error::Data(format!("checkpoint {what} has unknown block '{name}'")));
        }
    }
    let mut out = BlockVec::<R>::zeros(dims);
    for block in ParamBlock::ALL {
        let dump = dumped.get(block.name()).ok_or_else(|| {
            Error::Data(format!("checkpoint {what} misses block '{}'", block.name()))
        })?;
        let (r, c) = dims.shape_of(block);
        if (dump.rows, dump.cols) != (r, c) || dump.data.len() != r * c {
            return Err(Error::Data(format!(
                "checkpoint {what} block '{}' has shape {}x{} ({} values), expected {r}x{c}",
                block.name(),
                dump.rows,
                dump.cols,
                dump.data.len()
            )));
        }
        if dump.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "checkpoint {what} block '{}' holds non-finite values",
                block.name()
            )));
        }
        out.get_mut(block).data_mut().copy_from_slice(
            &dump.data.iter().map(|&v| R::from_f64(v)).collect::<Vec<_>>(),
        );
    }
    Ok(out)
}

impl Checkpoint {
    pub fn from_model<R: Real>(
        model: &Model<R>,
        optimizer: Option<&OptimizerState<R>>,
        train_config: Option<&TrainConfig>,
        ontology_sha256: &str,
    ) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT,
            ontology_sha256: ontology_sha256.to_string(),
            precision: R::NAME.to_string(),
            dims: model.dims,
            net: model.net,
            train_config: train_config.cloned(),
            params: dump_blocks(&model.params),
            optimizer: optimizer
                .map(|o| OptimizerDump { steps: o.steps, v: dump_blocks(&o.v) }),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, self)?;
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: not a checkpoint: {e}", path.display())))?;
        if ckpt.format_version != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!(
                "{}: checkpoint format {} unsupported (expected {})",
                path.display(),
                ckpt.format_version,
                CHECKPOINT_FORMAT
            )));
        }
        Ok(ckpt)
    }

    /// Rebuild the model (and optimizer, if stored) at precision R. The
    /// requested precision must match the stored one so numbers keep the
    /// meaning they trained with.
    pub fn into_model<R: Real>(&self) -> Result<(Model<R>, Option<OptimizerState<R>>)> {
        if self.precision != R::NAME {
            return Err(Error::Contract(format!(
                "checkpoint was written at {}, asked to load at {}",
                self.precision,
                R::NAME
            )));
        }
        self.net.validate()?;
        let params = restore_blocks::<R>(&self.dims, &self.params, "params")?;
        let model = Model { dims: self.dims, net: self.net, params };
        let optimizer = match &self.optimizer {
            None => None,
            Some(o) => Some(OptimizerState {
                v: restore_blocks::<R>(&self.dims, &o.v, "optimizer")?,
                steps: o.steps,
            }),
        };
        Ok((model, optimizer))
    }
}
