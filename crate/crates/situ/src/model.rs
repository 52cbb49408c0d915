//! Gated graph network over the verb/role slot graph.
//!
//! Each active slot holds a 1×D hidden state. The verb slot is initialized
//! from the verb feature vector, each role slot from the shared noun
//! feature vector modulated elementwise by its role embedding (and, when
//! enabled, the conditioning verb's embedding). States then exchange
//! messages along the topology for a fixed number of simultaneous steps,
//! each slot absorbing its summed incoming messages through a gated
//! recurrent update; slots with no incoming edges self-update on a zero
//! message. Output heads read the final states: a verb classifier on the
//! verb slot and one noun classifier shared by every role slot.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Real, Tape, Tensor2, ValueId, NORM_GUARD};
use crate::ontology::{Ontology, RoleId, VerbId};
use crate::topology::{Topology, TopologyKind, VERB_SLOT};

/// Every learnable parameter block, in serialization and seeding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamBlock {
    /// Verb-slot input map, hidden × verb_feat.
    WIv,
    /// Role-slot input map, hidden × noun_feat.
    WIn,
    /// Per-verb conditioning embedding, n_verbs × hidden.
    VerbEmbed,
    /// Per-role conditioning embedding, n_roles × hidden.
    RoleEmbed,
    /// Shared edge message map, hidden × hidden.
    WP,
    /// Shared edge message bias, 1 × hidden.
    BP,
    /// Update gate: input map, state map, bias.
    WZ,
    UZ,
    BZ,
    /// Reset gate: input map, state map, bias.
    WR,
    UR,
    BR,
    /// Candidate state: input map, state map, bias.
    WH,
    UH,
    BH,
    /// Verb head, n_verbs × hidden (+ 1 × n_verbs bias).
    WHv,
    BHv,
    /// Shared noun head, n_nouns × hidden (+ 1 × n_nouns bias).
    WHn,
    BHn,
}

impl ParamBlock {
    pub const COUNT: usize = 19;
    pub const ALL: [ParamBlock; Self::COUNT] = [
        ParamBlock::WIv,
        ParamBlock::WIn,
        ParamBlock::VerbEmbed,
        ParamBlock::RoleEmbed,
        ParamBlock::WP,
        ParamBlock::BP,
        ParamBlock::WZ,
        ParamBlock::UZ,
        ParamBlock::BZ,
        ParamBlock::WR,
        ParamBlock::UR,
        ParamBlock::BR,
        ParamBlock::WH,
        ParamBlock::UH,
        ParamBlock::BH,
        ParamBlock::WHv,
        ParamBlock::BHv,
        ParamBlock::WHn,
        ParamBlock::BHn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamBlock::WIv => "w_in_verb",
            ParamBlock::WIn => "w_in_noun",
            ParamBlock::VerbEmbed => "verb_embed",
            ParamBlock::RoleEmbed => "role_embed",
            ParamBlock::WP => "w_prop",
            ParamBlock::BP => "b_prop",
            ParamBlock::WZ => "w_update",
            ParamBlock::UZ => "u_update",
            ParamBlock::BZ => "b_update",
            ParamBlock::WR => "w_reset",
            ParamBlock::UR => "u_reset",
            ParamBlock::BR => "b_reset",
            ParamBlock::WH => "w_cand",
            ParamBlock::UH => "u_cand",
            ParamBlock::BH => "b_cand",
            ParamBlock::WHv => "w_head_verb",
            ParamBlock::BHv => "b_head_verb",
            ParamBlock::WHn => "w_head_noun",
            ParamBlock::BHn => "b_head_noun",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamBlock> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    /// Bias blocks start at zero instead of a random draw.
    pub fn is_bias(self) -> bool {
        matches!(
            self,
            ParamBlock::BP
                | ParamBlock::BZ
                | ParamBlock::BR
                | ParamBlock::BH
                | ParamBlock::BHv
                | ParamBlock::BHn
        )
    }
}

/// All size information needed to shape every parameter block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub hidden: usize,
    pub verb_feat: usize,
    pub noun_feat: usize,
    pub n_verbs: usize,
    pub n_roles: usize,
    pub n_nouns: usize,
}

impl ModelDims {
    pub fn new(ontology: &Ontology, hidden: usize, verb_feat: usize, noun_feat: usize) -> Self {
        ModelDims {
            hidden,
            verb_feat,
            noun_feat,
            n_verbs: ontology.n_verbs(),
            n_roles: ontology.n_roles(),
            n_nouns: ontology.n_nouns(),
        }
    }

    pub fn shape_of(&self, block: ParamBlock) -> (usize, usize) {
        let d = self.hidden;
        match block {
            ParamBlock::WIv => (d, self.verb_feat),
            ParamBlock::WIn => (d, self.noun_feat),
            ParamBlock::VerbEmbed => (self.n_verbs, d),
            ParamBlock::RoleEmbed => (self.n_roles, d),
            ParamBlock::WP | ParamBlock::WZ | ParamBlock::UZ | ParamBlock::WR
            | ParamBlock::UR | ParamBlock::WH | ParamBlock::UH => (d, d),
            ParamBlock::BP | ParamBlock::BZ | ParamBlock::BR | ParamBlock::BH => (1, d),
            ParamBlock::WHv => (self.n_verbs, d),
            ParamBlock::BHv => (1, self.n_verbs),
            ParamBlock::WHn => (self.n_nouns, d),
            ParamBlock::BHn => (1, self.n_nouns),
        }
    }

    pub fn n_params(&self) -> usize {
        ParamBlock::ALL
            .into_iter()
            .map(|b| {
                let (r, c) = self.shape_of(b);
                r * c
            })
            .sum()
    }
}

/// Nonlinearity applied to slot input transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    #[default]
    Tanh,
    Relu,
}

impl Nonlinearity {
    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::Tanh => "tanh",
            Nonlinearity::Relu => "relu",
        }
    }

    fn apply<R: Real>(self, tape: &mut Tape<R>, x: ValueId) -> Result<ValueId> {
        match self {
            Nonlinearity::Tanh => tape.tanh(x),
            Nonlinearity::Relu => tape.relu(x),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Nonlinearity::Tanh),
            "relu" => Ok(Nonlinearity::Relu),
            other => Err(Error::Config(format!("unknown nonlinearity '{other}' (tanh|relu)"))),
        }
    }
}

/// Architecture switches shared by training and inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub hidden: usize,
    pub nonlinearity: Nonlinearity,
    /// Modulate role initializations by the conditioning verb's embedding.
    pub verb_onehot: bool,
    pub topology: TopologyKind,
    /// Propagation steps (ignored by the sequential variants).
    pub steps: usize,
    /// Single-trajectory recurrent variant (chain and tree only): states
    /// are produced once along the graph instead of by simultaneous steps.
    pub sequential: bool,
    /// Add verb↔role edges in the fully-connected layout.
    pub fc_verb_edges: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: 32,
            nonlinearity: Nonlinearity::Tanh,
            verb_onehot: true,
            topology: TopologyKind::FullyConnected,
            steps: 4,
            sequential: false,
            fc_verb_edges: false,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::Config("net: hidden size must be >= 1".into()));
        }
        if self.sequential
            && !matches!(self.topology, TopologyKind::Chain | TopologyKind::Tree)
        {
            return Err(Error::Config(format!(
                "net: sequential variant requires chain or tree topology, got {}",
                self.topology
            )));
        }
        if self.fc_verb_edges && self.topology != TopologyKind::FullyConnected {
            return Err(Error::Config(format!(
                "net: fc_verb_edges only applies to the fully_connected topology, got {}",
                self.topology
            )));
        }
        Ok(())
    }
}

/// Dense storage for all parameter blocks, indexed by `ParamBlock`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVec<R: Real> {
    blocks: Vec<Tensor2<R>>,
}

impl<R: Real> BlockVec<R> {
    pub fn from_fn(
        dims: &ModelDims,
        mut f: impl FnMut(ParamBlock, usize, usize) -> Tensor2<R>,
    ) -> Self {
        let blocks = ParamBlock::ALL
            .into_iter()
            .map(|b| {
                let (r, c) = dims.shape_of(b);
                let t = f(b, r, c);
                assert_eq!(t.shape(), (r, c), "block {} built with wrong shape", b.name());
                t
            })
            .collect();
        BlockVec { blocks }
    }

    pub fn zeros(dims: &ModelDims) -> Self {
        Self::from_fn(dims, |_, r, c| Tensor2::zeros(r, c))
    }

    pub fn get(&self, block: ParamBlock) -> &Tensor2<R> {
        &self.blocks[block as usize]
    }

    pub fn get_mut(&mut self, block: ParamBlock) -> &mut Tensor2<R> {
        &mut self.blocks[block as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamBlock, &Tensor2<R>)> {
        ParamBlock::ALL.into_iter().zip(self.blocks.iter())
    }

    pub fn all_finite(&self) -> bool {
        self.blocks.iter().all(Tensor2::all_finite)
    }

    /// Total parameter count.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(Tensor2::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenate every block row-major, in `ParamBlock::ALL` order.
    pub fn flatten_f64(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for b in &self.blocks {
            out.extend(b.data().iter().map(|v| v.as_f64()));
        }
        out
    }

    /// Inverse of `flatten_f64`; the slice length must match exactly.
    pub fn assign_from_f64(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Shape(format!(
                "flat parameter vector has {} values, blocks hold {}",
                flat.len(),
                self.len()
            )));
        }
        let mut at = 0;
        for b in &mut self.blocks {
            for v in b.data_mut() {
                *v = R::from_f64(flat[at]);
                at += 1;
            }
        }
        Ok(())
    }

    pub fn cast<S: Real>(&self) -> BlockVec<S> {
        BlockVec { blocks: self.blocks.iter().map(Tensor2::cast).collect() }
    }
}

/// Per-role-slot output head ids on the forward tape.
#[derive(Debug, Clone, Copy)]
pub struct RoleOutput {
    pub slot: usize,
    pub role: RoleId,
    pub logits: ValueId,
    pub probs: ValueId,
}

/// One recorded forward pass: the tape plus the ids needed downstream.
pub struct Forward<R: Real> {
    pub tape: Tape<R>,
    /// Leaf id per parameter block, in `ParamBlock::ALL` order.
    pub param_ids: Vec<ValueId>,
    /// Initial hidden state per active slot.
    pub init_states: Vec<ValueId>,
    /// Final hidden state per active slot (after dropout when supplied).
    pub final_states: Vec<ValueId>,
    pub verb_logits: ValueId,
    pub verb_probs: ValueId,
    pub roles: Vec<RoleOutput>,
    /// Slots whose pre-normalization initial state was numerically dead.
    pub degenerate_inits: usize,
}

/// The network: sizes, switches, and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<R: Real> {
    pub dims: ModelDims,
    pub net: NetConfig,
    pub params: BlockVec<R>,
}

impl<R: Real> Model<R> {
    /// Seeded initialization: weights uniform in ±sqrt(6/(rows+cols)),
    /// biases zero. Values are drawn as f64 in `ParamBlock::ALL` order so
    /// a seed produces the same start regardless of precision.
    pub fn init(
        ontology: &Ontology,
        net: NetConfig,
        verb_feat: usize,
        noun_feat: usize,
        seed: u64,
    ) -> Result<Model<R>> {
        net.validate()?;
        if verb_feat == 0 || noun_feat == 0 {
            return Err(Error::Config("model: feature dimensions must be >= 1".into()));
        }
        let dims = ModelDims::new(ontology, net.hidden, verb_feat, noun_feat);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = BlockVec::from_fn(&dims, |block, rows, cols| {
            if block.is_bias() {
                return Tensor2::zeros(rows, cols);
            }
            let s = (6.0 / (rows + cols) as f64).sqrt();
            let mut t = Tensor2::zeros(rows, cols);
            for v in t.data_mut() {
                *v = R::from_f64(rng.random::<f64>() * 2.0 * s - s);
            }
            t
        });
        Ok(Model { dims, net, params })
    }

    fn leaves(&self, tape: &mut Tape<R>) -> Vec<ValueId> {
        ParamBlock::ALL.into_iter().map(|b| tape.leaf(self.params.get(b).clone())).collect()
    }

    fn check_features(&self, phi_v: &Tensor2<R>, phi_n: &Tensor2<R>) -> Result<()> {
        if phi_v.shape() != (1, self.dims.verb_feat) {
            return Err(Error::Shape(format!(
                "verb features are {:?}, model expects (1, {})",
                phi_v.shape(),
                self.dims.verb_feat
            )));
        }
        if phi_n.shape() != (1, self.dims.noun_feat) {
            return Err(Error::Shape(format!(
                "noun features are {:?}, model expects (1, {})",
                phi_n.shape(),
                self.dims.noun_feat
            )));
        }
        Ok(())
    }

    /// h⁰ for the verb slot: unit-normalized g(W φ_v).
    fn init_verb(
        &self,
        tape: &mut Tape<R>,
        p: &[ValueId],
        phi_v: ValueId,
        degenerate: &mut usize,
    ) -> Result<ValueId> {
        let lin = tape.matvec(phi_v, p[ParamBlock::WIv as usize])?;
        let act = self.net.nonlinearity.apply(tape, lin)?;
        if tape.value(act).l2_norm().as_f64() < NORM_GUARD {
            *degenerate += 1;
        }
        tape.unit_norm(act)
    }

    /// Pre-normalization role input: g(W φ_n ⊙ emb_role [⊙ emb_verb]).
    fn role_input(
        &self,
        tape: &mut Tape<R>,
        p: &[ValueId],
        phi_n: ValueId,
        role: RoleId,
        cond_verb: VerbId,
    ) -> Result<ValueId> {
        let lin = tape.matvec(phi_n, p[ParamBlock::WIn as usize])?;
        let er = tape.row(p[ParamBlock::RoleEmbed as usize], role.0)?;
        let mut x = tape.mul(lin, er)?;
        if self.net.verb_onehot {
            let ev = tape.row(p[ParamBlock::VerbEmbed as usize], cond_verb.0)?;
            x = tape.mul(x, ev)?;
        }
        self.net.nonlinearity.apply(tape, x)
    }

    /// h⁰ for a role slot: the unit-normalized role input.
    fn init_role(
        &self,
        tape: &mut Tape<R>,
        p: &[ValueId],
        phi_n: ValueId,
        role: RoleId,
        cond_verb: VerbId,
        degenerate: &mut usize,
    ) -> Result<ValueId> {
        let act = self.role_input(tape, p, phi_n, role, cond_verb)?;
        if tape.value(act).l2_norm().as_f64() < NORM_GUARD {
            *degenerate += 1;
        }
        tape.unit_norm(act)
    }

    /// Gated recurrent update absorbing input x into state h.
    fn gru(&self, tape: &mut Tape<R>, p: &[ValueId], x: ValueId, h: ValueId) -> Result<ValueId> {
        let zx = tape.matvec(x, p[ParamBlock::WZ as usize])?;
        let zh = tape.affine(h, p[ParamBlock::UZ as usize], p[ParamBlock::BZ as usize])?;
        let zs = tape.add(zx, zh)?;
        let z = tape.sigmoid(zs)?;

        let rx = tape.matvec(x, p[ParamBlock::WR as usize])?;
        let rh = tape.affine(h, p[ParamBlock::UR as usize], p[ParamBlock::BR as usize])?;
        let rs = tape.add(rx, rh)?;
        let r = tape.sigmoid(rs)?;

        let cx = tape.matvec(x, p[ParamBlock::WH as usize])?;
        let gated = tape.mul(r, h)?;
        let ch = tape.affine(gated, p[ParamBlock::UH as usize], p[ParamBlock::BH as usize])?;
        let cs = tape.add(cx, ch)?;
        let cand = tape.tanh(cs)?;

        let zb = tape.one_minus(z)?;
        let keep = tape.mul(zb, h)?;
        let take = tape.mul(z, cand)?;
        tape.add(keep, take)
    }

    /// Summed incoming messages for a slot; zero when nothing points at it.
    fn message(
        &self,
        tape: &mut Tape<R>,
        p: &[ValueId],
        topo: &Topology,
        slot: usize,
        states: &[ValueId],
    ) -> Result<ValueId> {
        let ins = topo.neighbors_in(slot)?;
        let mut acc: Option<ValueId> = None;
        for &src in ins {
            let term = tape.affine(
                states[src],
                p[ParamBlock::WP as usize],
                p[ParamBlock::BP as usize],
            )?;
            acc = Some(match acc {
                None => term,
                Some(a) => tape.add(a, term)?,
            });
        }
        Ok(match acc {
            Some(a) => a,
            None => tape.zeros_leaf(1, self.dims.hidden),
        })
    }

    fn heads(
        &self,
        tape: &mut Tape<R>,
        p: &[ValueId],
        topo: Option<&Topology>,
        states: &[ValueId],
    ) -> Result<(ValueId, ValueId, Vec<RoleOutput>)> {
        let verb_logits = tape.affine(
            states[VERB_SLOT],
            p[ParamBlock::WHv as usize],
            p[ParamBlock::BHv as usize],
        )?;
        let verb_probs = tape.softmax(verb_logits)?;
        let mut roles = Vec::new();
        if let Some(topo) = topo {
            for (slot, role) in topo.role_slots() {
                let logits = tape.affine(
                    states[slot],
                    p[ParamBlock::WHn as usize],
                    p[ParamBlock::BHn as usize],
                )?;
                let probs = tape.softmax(logits)?;
                roles.push(RoleOutput { slot, role, logits, probs });
            }
        }
        Ok((verb_logits, verb_probs, roles))
    }

    fn apply_dropout(
        &self,
        tape: &mut Tape<R>,
        states: &mut [ValueId],
        dropout: Option<&[Tensor2<R>]>,
    ) -> Result<()> {
        let Some(masks) = dropout else { return Ok(()) };
        if masks.len() != states.len() {
            return Err(Error::Contract(format!(
                "dropout supplies {} masks for {} active slots",
                masks.len(),
                states.len()
            )));
        }
        for (s, mask) in states.iter_mut().zip(masks) {
            let m = tape.leaf(mask.clone());
            *s = tape.mul(*s, m)?;
        }
        Ok(())
    }

    /// Full forward pass for one instance conditioned on `topo`'s verb.
    /// `dropout` supplies one pre-scaled mask per active slot (training
    /// only); inference passes None.
    pub fn forward(
        &self,
        topo: &Topology,
        phi_v: &Tensor2<R>,
        phi_n: &Tensor2<R>,
        dropout: Option<&[Tensor2<R>]>,
    ) -> Result<Forward<R>> {
        self.net.validate()?;
        self.check_features(phi_v, phi_n)?;
        if self.net.sequential {
            return self.forward_sequential(topo, phi_v, phi_n, dropout);
        }

        let mut tape = Tape::new();
        let p = self.leaves(&mut tape);
        let phi_v = tape.leaf(phi_v.clone());
        let phi_n = tape.leaf(phi_n.clone());

        let mut degenerate = 0;
        let mut states = Vec::with_capacity(topo.n_active());
        states.push(self.init_verb(&mut tape, &p, phi_v, &mut degenerate)?);
        for (_, role) in topo.role_slots() {
            states.push(self.init_role(&mut tape, &p, phi_n, role, topo.verb(), &mut degenerate)?);
        }
        let init_states = states.clone();

        for _ in 0..self.net.steps {
            // Simultaneous update: all messages read the previous states.
            let mut msgs = Vec::with_capacity(states.len());
            for slot in 0..states.len() {
                msgs.push(self.message(&mut tape, &p, topo, slot, &states)?);
            }
            let mut next = Vec::with_capacity(states.len());
            for (slot, &msg) in msgs.iter().enumerate() {
                next.push(self.gru(&mut tape, &p, msg, states[slot])?);
            }
            states = next;
        }

        self.apply_dropout(&mut tape, &mut states, dropout)?;
        let (verb_logits, verb_probs, roles) = self.heads(&mut tape, &p, Some(topo), &states)?;
        Ok(Forward {
            tape,
            param_ids: p,
            init_states,
            final_states: states,
            verb_logits,
            verb_probs,
            roles,
            degenerate_inits: degenerate,
        })
    }

    /// Sequential variant: one state trajectory along the chain, or down
    /// the two-level tree with hub states summed for their children. Role
    /// inputs are injected un-normalized; the verb keeps its initial state.
    fn forward_sequential(
        &self,
        topo: &Topology,
        phi_v: &Tensor2<R>,
        phi_n: &Tensor2<R>,
        dropout: Option<&[Tensor2<R>]>,
    ) -> Result<Forward<R>> {
        let mut tape = Tape::new();
        let p = self.leaves(&mut tape);
        let phi_v = tape.leaf(phi_v.clone());
        let phi_n = tape.leaf(phi_n.clone());

        let mut degenerate = 0;
        let root = self.init_verb(&mut tape, &p, phi_v, &mut degenerate)?;
        let mut states: Vec<Option<ValueId>> = vec![None; topo.n_active()];
        states[VERB_SLOT] = Some(root);

        // First the verb's children, then everything else; two passes
        // suffice because both layouts have depth at most two.
        for pass in 0..2 {
            for (slot, role) in topo.role_slots() {
                if states[slot].is_some() {
                    continue;
                }
                let parents = topo.neighbors_in(slot)?;
                if parents.is_empty() {
                    return Err(Error::Contract(format!(
                        "sequential forward: role slot {slot} has no parent"
                    )));
                }
                let ready = parents.iter().all(|&s| states[s].is_some());
                if !ready {
                    if pass == 1 {
                        return Err(Error::Contract(
                            "sequential forward: unresolved parent after two passes".into(),
                        ));
                    }
                    continue;
                }
                let mut ctx = states[parents[0]].expect("checked ready");
                for &s in &parents[1..] {
                    let other = states[s].expect("checked ready");
                    ctx = tape.add(ctx, other)?;
                }
                let inj = self.role_input(&mut tape, &p, phi_n, role, topo.verb())?;
                states[slot] = Some(self.gru(&mut tape, &p, inj, ctx)?);
            }
        }

        let init_states = vec![root];
        let mut states: Vec<ValueId> =
            states.into_iter().map(|s| s.expect("all slots resolved")).collect();
        self.apply_dropout(&mut tape, &mut states, dropout)?;
        let (verb_logits, verb_probs, roles) = self.heads(&mut tape, &p, Some(topo), &states)?;
        Ok(Forward {
            tape,
            param_ids: p,
            init_states,
            final_states: states,
            verb_logits,
            verb_probs,
            roles,
            degenerate_inits: degenerate,
        })
    }

    /// Verb-only forward: the verb slot's trajectory never receives role
    /// messages in the standard layouts, so its head scores are exact
    /// without building any frame. Used to rank candidate verbs.
    pub fn verb_forward(&self, phi_v: &Tensor2<R>) -> Result<Forward<R>> {
        self.net.validate()?;
        if phi_v.shape() != (1, self.dims.verb_feat) {
            return Err(Error::Shape(format!(
                "verb features are {:?}, model expects (1, {})",
                phi_v.shape(),
                self.dims.verb_feat
            )));
        }
        let mut tape = Tape::new();
        let p = self.leaves(&mut tape);
        let phi_v = tape.leaf(phi_v.clone());
        let mut degenerate = 0;
        let mut h = self.init_verb(&mut tape, &p, phi_v, &mut degenerate)?;
        let init_states = vec![h];
        if !self.net.sequential {
            for _ in 0..self.net.steps {
                let zero = tape.zeros_leaf(1, self.dims.hidden);
                h = self.gru(&mut tape, &p, zero, h)?;
            }
        }
        let (verb_logits, verb_probs, roles) = self.heads(&mut tape, &p, None, &[h])?;
        Ok(Forward {
            tape,
            param_ids: p,
            init_states,
            final_states: vec![h],
            verb_logits,
            verb_probs,
            roles,
            degenerate_inits: degenerate,
        })
    }
}
