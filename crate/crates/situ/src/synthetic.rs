//! Synthetic dataset generator.
//!
//! Features are noisy orthonormal-linear images of one-hot ground truth,
//! laid out as one block per role (plus a verb feature vector). Each verb
//! with at least two frame roles gets one planted relation: a destination
//! role whose true noun is the source role's noun shifted by 1 or 3
//! (wrapping within the noun range), where the shift is keyed to the
//! parity of a third role's noun when the frame has one. With probability
//! `correlation` the destination's feature block is dropped from the
//! instance, so its noun is then recoverable only by composing the other
//! roles' nouns. Three annotations are produced by independently
//! resampling within two-element noun synonym groups.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor2;
use crate::ontology::{Instance, NounId, Ontology, RoleId, VerbId, EMPTY_NOUN, N_ANNOTATIONS};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub verbs: usize,
    /// Base role inventory ("agent", "place", "r02", ...). One extra role
    /// ("actor", aliased to agent) is appended when `with_alias_role`.
    pub roles: usize,
    /// Nouns besides the reserved empty noun.
    pub nouns: usize,
    pub min_roles_per_frame: usize,
    pub max_roles_per_frame: usize,
    pub train_instances: usize,
    pub dev_instances: usize,
    /// Probability that the planted pair's dst feature block is dropped.
    pub correlation: f64,
    /// Standard deviation of Gaussian noise added to every feature dim.
    pub noise: f64,
    /// Norm of each encoded one-hot's feature image; `noise` is measured
    /// against this, so the default keeps noise a perturbation rather
    /// than half the signal energy.
    pub feature_scale: f64,
    /// Probability a non-planted role's noun is the empty noun.
    pub empty_noun_prob: f64,
    /// Probability an annotator keeps the true noun instead of its synonym.
    pub annotator_fidelity: f64,
    pub with_alias_role: bool,
    /// Number of verb clusters (0 = no cluster map).
    pub clusters: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            verbs: 6,
            roles: 6,
            nouns: 10,
            min_roles_per_frame: 2,
            max_roles_per_frame: 4,
            train_instances: 200,
            dev_instances: 50,
            correlation: 0.5,
            noise: 0.1,
            feature_scale: 3.0,
            empty_noun_prob: 0.05,
            annotator_fidelity: 0.75,
            with_alias_role: true,
            clusters: 2,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.verbs == 0 {
            return Err(Error::Config("gen: verbs must be >= 1".into()));
        }
        if self.roles == 0 {
            return Err(Error::Config("gen: roles must be >= 1".into()));
        }
        if self.nouns < 2 {
            return Err(Error::Config("gen: nouns must be >= 2".into()));
        }
        if self.min_roles_per_frame == 0 || self.min_roles_per_frame > self.max_roles_per_frame {
            return Err(Error::Config(format!(
                "gen: invalid roles-per-frame range {}..={}",
                self.min_roles_per_frame, self.max_roles_per_frame
            )));
        }
        if self.max_roles_per_frame > 6 {
            return Err(Error::Config("gen: max_roles_per_frame must be <= 6".into()));
        }
        if self.max_roles_per_frame > self.roles {
            return Err(Error::Config(format!(
                "gen: max_roles_per_frame {} exceeds the {} available roles",
                self.max_roles_per_frame, self.roles
            )));
        }
        if self.train_instances == 0 {
            return Err(Error::Config("gen: train_instances must be >= 1".into()));
        }
        for (name, v) in [
            ("correlation", self.correlation),
            ("empty_noun_prob", self.empty_noun_prob),
            ("annotator_fidelity", self.annotator_fidelity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("gen: {name} must be in [0,1], got {v}")));
            }
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::Config(format!("gen: noise must be >= 0, got {}", self.noise)));
        }
        if !self.feature_scale.is_finite() || self.feature_scale <= 0.0 {
            return Err(Error::Config(format!(
                "gen: feature_scale must be > 0, got {}",
                self.feature_scale
            )));
        }
        Ok(())
    }
}

/// The relation planted into one verb's instances: `dst`'s true noun is a
/// shift of `src`'s noun, with the shift amount keyed to the parity of the
/// `parity` role's noun when the frame is large enough to carry one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedRelation {
    pub src: RoleId,
    pub dst: RoleId,
    /// Second evidence role; `None` for two-role frames (shift is then
    /// always [`SHIFT_ODD`]).
    pub parity: Option<RoleId>,
}

/// Shift applied to the source noun when the parity noun is odd (or absent).
pub const SHIFT_ODD: usize = 1;
/// Shift applied when the parity noun is even.
pub const SHIFT_EVEN: usize = 3;

/// Shift selected by the parity evidence. The two candidate shifts differ
/// by 2, so with synonym groups (1,2), (3,4), ... the two candidate
/// destination nouns never share a group: annotator slack cannot hide a
/// wrong parity read. Falls back to [`SHIFT_ODD`] when the even shift
/// would wrap onto the source itself (tiny noun inventories).
pub fn planted_shift(parity_noun: Option<NounId>, n_nouns_without_empty: usize) -> usize {
    match parity_noun {
        Some(n) if n.0 % 2 == 0 && SHIFT_EVEN % n_nouns_without_empty != 0 => SHIFT_EVEN,
        _ => SHIFT_ODD,
    }
}

/// Destination noun for a planted relation: `src` shifted, wrapping within
/// nouns 1..=n.
pub fn planted_partner(src: NounId, shift: usize, n_nouns_without_empty: usize) -> NounId {
    debug_assert!(src.0 >= 1 && src.0 <= n_nouns_without_empty);
    NounId((src.0 - 1 + shift) % n_nouns_without_empty + 1)
}

/// Generator output. `planted` exposes each verb's planted relation so
/// tests and analysis can target it.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub ontology: Ontology,
    pub train: Vec<Instance>,
    pub dev: Vec<Instance>,
    pub planted: BTreeMap<VerbId, PlantedRelation>,
}

/// Synonym partner of a noun: pairs (1,2), (3,4), ...; a trailing odd noun
/// and the empty noun are their own synonyms.
pub fn synonym_partner(n: NounId, n_nouns_without_empty: usize) -> NounId {
    if n.0 == 0 {
        return n;
    }
    if n.0 % 2 == 1 {
        if n.0 + 1 <= n_nouns_without_empty {
            NounId(n.0 + 1)
        } else {
            n
        }
    } else {
        NounId(n.0 - 1)
    }
}

struct FeatureMaps {
    /// Row-orthonormal square mixing matrices; encoding uses columns.
    verb: Tensor2<f64>,
    role: Vec<Tensor2<f64>>,
    block: usize,
}

pub fn generate_synthetic(cfg: &GenConfig, seed: u64) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // ── Ontology ──
    let mut roles: Vec<String> = Vec::new();
    for i in 0..cfg.roles {
        roles.push(match i {
            0 => "agent".to_string(),
            1 => "place".to_string(),
            _ => format!("r{i:02}"),
        });
    }
    let has_alias = cfg.with_alias_role && cfg.roles >= 1;
    let actor = if has_alias {
        roles.push("actor".to_string());
        Some(RoleId(roles.len() - 1))
    } else {
        None
    };
    let agent = RoleId(0);

    let verbs: Vec<String> = (0..cfg.verbs).map(|i| format!("v{i:02}")).collect();
    let mut nouns = vec![EMPTY_NOUN.to_string()];
    nouns.extend((1..=cfg.nouns).map(|i| format!("noun{i:02}")));

    let mut frames: Vec<Vec<RoleId>> = Vec::with_capacity(cfg.verbs);
    for _ in 0..cfg.verbs {
        let k = rng.random_range(cfg.min_roles_per_frame..=cfg.max_roles_per_frame);
        let mut frame: Vec<RoleId> = Vec::with_capacity(k);
        // Bias the draw so agent/place usually participate; an aliased
        // "actor" occasionally stands in for agent (never both, since the
        // alias would collapse onto its target).
        if rng.random::<f64>() < 0.85 {
            match actor {
                Some(a) if rng.random::<f64>() < 0.3 => frame.push(a),
                _ => frame.push(agent),
            }
        }
        if cfg.roles >= 2 && frame.len() < k && rng.random::<f64>() < 0.85 {
            frame.push(RoleId(1));
        }
        let mut pool: Vec<RoleId> = (0..cfg.roles)
            .map(RoleId)
            .filter(|r| !frame.contains(r) && !(*r == agent && frame.first() == actor.as_ref()))
            .collect();
        while frame.len() < k && !pool.is_empty() {
            let idx = rng.random_range(0..pool.len());
            frame.push(pool.swap_remove(idx));
        }
        if frame.is_empty() {
            frame.push(agent);
        }
        frames.push(frame);
    }

    let clusters: Vec<Option<String>> = (0..cfg.verbs)
        .map(|i| {
            if cfg.clusters == 0 {
                None
            } else {
                Some(format!("cluster_{}", (b'a' + (i % cfg.clusters) as u8) as char))
            }
        })
        .collect();

    let mut aliases = BTreeMap::new();
    if let Some(a) = actor {
        aliases.insert(a, agent);
    }
    let ontology = Ontology::build(verbs, roles, nouns, frames, aliases, clusters)?;

    // ── Planted relations ──
    let mut planted = BTreeMap::new();
    for v in 0..cfg.verbs {
        let mut pool = ontology.frame(VerbId(v)).to_vec();
        if pool.len() < 2 {
            continue;
        }
        let mut draw = |pool: &mut Vec<RoleId>| pool.swap_remove(rng.random_range(0..pool.len()));
        let src = draw(&mut pool);
        let dst = draw(&mut pool);
        let parity = if pool.is_empty() { None } else { Some(draw(&mut pool)) };
        planted.insert(VerbId(v), PlantedRelation { src, dst, parity });
    }

    // ── Mixing maps ──
    let block = cfg.nouns + 1;
    let maps = FeatureMaps {
        verb: orthonormal(cfg.verbs, &mut rng),
        role: (0..ontology.n_roles()).map(|_| orthonormal(block, &mut rng)).collect(),
        block,
    };

    // ── Instances ──
    let mut train = Vec::with_capacity(cfg.train_instances);
    for i in 0..cfg.train_instances {
        train.push(gen_instance(cfg, &ontology, &planted, &maps, &mut rng, "train", i)?);
    }
    let mut dev = Vec::with_capacity(cfg.dev_instances);
    for i in 0..cfg.dev_instances {
        dev.push(gen_instance(cfg, &ontology, &planted, &maps, &mut rng, "dev", i)?);
    }

    Ok(SyntheticData { ontology, train, dev, planted })
}

fn gen_instance(
    cfg: &GenConfig,
    ontology: &Ontology,
    planted: &BTreeMap<VerbId, PlantedRelation>,
    maps: &FeatureMaps,
    rng: &mut ChaCha8Rng,
    split: &str,
    index: usize,
) -> Result<Instance> {
    let verb = VerbId(rng.random_range(0..ontology.n_verbs()));
    let frame = ontology.frame(verb).to_vec();
    let rel = planted.get(&verb).copied();

    // True nouns. Evidence roles (src and parity) are never empty so the
    // planted rule is always defined; dst is filled afterwards.
    let mut truth: BTreeMap<RoleId, NounId> = BTreeMap::new();
    for &r in &frame {
        if let Some(rel) = rel {
            if r == rel.dst {
                continue;
            }
            if r == rel.src || rel.parity == Some(r) {
                truth.insert(r, NounId(rng.random_range(1..=cfg.nouns)));
                continue;
            }
        }
        let n = if rng.random::<f64>() < cfg.empty_noun_prob {
            NounId(0)
        } else {
            NounId(rng.random_range(1..=cfg.nouns))
        };
        truth.insert(r, n);
    }
    if let Some(rel) = rel {
        let shift = planted_shift(rel.parity.map(|p| truth[&p]), cfg.nouns);
        truth.insert(rel.dst, planted_partner(truth[&rel.src], shift, cfg.nouns));
    }
    let masked = rel.is_some() && rng.random::<f64>() < cfg.correlation;

    // Features.
    let mut phi_v = vec![0.0f64; ontology.n_verbs()];
    for d in 0..ontology.n_verbs() {
        phi_v[d] = cfg.feature_scale * maps.verb.get(d, verb.0);
    }
    let mut phi_n = vec![0.0f64; ontology.n_roles() * maps.block];
    for (&r, &n) in &truth {
        if masked && rel.map(|rel| rel.dst) == Some(r) {
            continue;
        }
        let m = &maps.role[r.0];
        let base = r.0 * maps.block;
        for d in 0..maps.block {
            phi_n[base + d] = cfg.feature_scale * m.get(d, n.0);
        }
    }
    if cfg.noise > 0.0 {
        for v in phi_v.iter_mut() {
            *v += cfg.noise * gauss(rng);
        }
        for v in phi_n.iter_mut() {
            *v += cfg.noise * gauss(rng);
        }
    }

    // Annotations: resample within synonym groups.
    let mut annotations: [BTreeMap<RoleId, NounId>; N_ANNOTATIONS] = Default::default();
    for ann in annotations.iter_mut() {
        for (&r, &n) in &truth {
            let reported = if n.0 == 0 || rng.random::<f64>() < cfg.annotator_fidelity {
                n
            } else {
                synonym_partner(n, cfg.nouns)
            };
            ann.insert(r, reported);
        }
    }

    Ok(Instance {
        id: format!("{split}_{index:05}"),
        verb,
        phi_v: Tensor2::row_from_f64(&phi_v),
        phi_n: Tensor2::row_from_f64(&phi_n),
        annotations,
    })
}

/// Standard normal via Box-Muller.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = rng.random::<f64>().max(1e-12);
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Row-orthonormal k×k matrix via Gram-Schmidt on a Gaussian draw.
fn orthonormal(k: usize, rng: &mut ChaCha8Rng) -> Tensor2<f64> {
    let mut m = Tensor2::<f64>::zeros(k, k);
    for r in 0..k {
        let mut row: Vec<f64> = (0..k).map(|_| gauss(rng)).collect();
        for prev in 0..r {
            let p = m.row(prev);
            let dot: f64 = row.iter().zip(p).map(|(a, b)| a * b).sum();
            for (x, &pv) in row.iter_mut().zip(p) {
                *x -= dot * pv;
            }
        }
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            // Degenerate draw: fall back to a unit basis vector.
            row = vec![0.0; k];
            row[r] = 1.0;
        } else {
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
        m.row_mut(r).copy_from_slice(&row);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::write_dataset;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GenConfig { train_instances: 20, dev_instances: 5, ..GenConfig::default() };
        let a = generate_synthetic(&cfg, 7).unwrap();
        let b = generate_synthetic(&cfg, 7).unwrap();
        assert_eq!(a.ontology, b.ontology);
        assert_eq!(a.train, b.train);
        assert_eq!(a.dev, b.dev);

        let dir = tempfile::tempdir().unwrap();
        let pa = dir.path().join("a.json");
        let pb = dir.path().join("b.json");
        write_dataset(&pa, &a.ontology, &a.train).unwrap();
        write_dataset(&pb, &b.ontology, &b.train).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());

        let c = generate_synthetic(&cfg, 8).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn respects_declared_invariants_across_configs() {
        let mut seed = 100u64;
        for verbs in [1usize, 3, 8] {
            for roles in [2usize, 4, 6] {
                for nouns in [2usize, 9, 14] {
                    seed += 1;
                    let cfg = GenConfig {
                        verbs,
                        roles,
                        nouns,
                        min_roles_per_frame: 1,
                        max_roles_per_frame: roles.min(4),
                        train_instances: 12,
                        dev_instances: 4,
                        correlation: 0.6,
                        noise: 0.2,
                        ..GenConfig::default()
                    };
                    let data = generate_synthetic(&cfg, seed).unwrap();
                    let ont = &data.ontology;
                    assert_eq!(ont.n_verbs(), verbs);
                    assert_eq!(ont.n_nouns(), nouns + 1);
                    for v in 0..verbs {
                        let f = ont.frame(VerbId(v));
                        assert!(!f.is_empty() && f.len() <= cfg.max_roles_per_frame.min(6));
                    }
                    for inst in data.train.iter().chain(&data.dev) {
                        assert_eq!(inst.phi_v.cols(), verbs);
                        assert_eq!(inst.phi_n.cols(), ont.n_roles() * (nouns + 1));
                        assert!(inst.phi_v.all_finite() && inst.phi_n.all_finite());
                        let frame: std::collections::BTreeSet<_> =
                            ont.frame(inst.verb).iter().copied().collect();
                        for ann in &inst.annotations {
                            assert_eq!(
                                ann.keys().copied().collect::<std::collections::BTreeSet<_>>(),
                                frame
                            );
                        }
                    }
                    // Round-trips through the JSON container.
                    let dir = tempfile::tempdir().unwrap();
                    let p = dir.path().join("d.json");
                    write_dataset(&p, ont, &data.train).unwrap();
                    let (ont2, insts2) = crate::ontology::load_dataset(&p).unwrap();
                    assert_eq!(*ont, ont2);
                    assert_eq!(data.train, insts2);
                }
            }
        }
    }

    #[test]
    fn full_correlation_zero_noise_fully_masks_dst_block() {
        let cfg = GenConfig {
            correlation: 1.0,
            noise: 0.0,
            annotator_fidelity: 1.0,
            train_instances: 60,
            dev_instances: 0,
            ..GenConfig::default()
        };
        let data = generate_synthetic(&cfg, 3).unwrap();
        let block = cfg.nouns + 1;
        let mut planted_seen = 0;
        let mut parity_seen = 0;
        for inst in &data.train {
            let Some(&rel) = data.planted.get(&inst.verb) else { continue };
            planted_seen += 1;
            // dst block is exactly zero: its noun is unrecoverable from
            // per-role features alone.
            let base = rel.dst.0 * block;
            for d in 0..block {
                assert_eq!(inst.phi_n.get(0, base + d), 0.0);
            }
            // With fidelity 1 the annotations are the truth, so the dst
            // noun must follow the planted shift rule.
            let src_noun = inst.annotations[0][&rel.src];
            let dst_noun = inst.annotations[0][&rel.dst];
            let parity_noun = rel.parity.map(|p| inst.annotations[0][&p]);
            if parity_noun.is_some() {
                parity_seen += 1;
            }
            let shift = planted_shift(parity_noun, cfg.nouns);
            assert_eq!(dst_noun, planted_partner(src_noun, shift, cfg.nouns));
            assert_ne!(dst_noun, src_noun, "planted partner must change the noun");
        }
        assert!(planted_seen > 0, "no planted-relation instances generated");
        assert!(parity_seen > 0, "no parity-keyed instances generated");
    }

    #[test]
    fn zero_correlation_keeps_all_blocks() {
        let cfg = GenConfig {
            correlation: 0.0,
            noise: 0.0,
            train_instances: 40,
            dev_instances: 0,
            empty_noun_prob: 0.0,
            ..GenConfig::default()
        };
        let data = generate_synthetic(&cfg, 5).unwrap();
        let block = cfg.nouns + 1;
        for inst in &data.train {
            for &r in data.ontology.frame(inst.verb) {
                let base = r.0 * block;
                let norm: f64 =
                    (0..block).map(|d| inst.phi_n.get(0, base + d).powi(2)).sum::<f64>().sqrt();
                assert!(
                    (norm - cfg.feature_scale).abs() < 1e-9,
                    "block of {r:?} should be a scaled unit column"
                );
            }
        }
    }

    #[test]
    fn impossible_config_is_rejected() {
        let cfg = GenConfig { roles: 2, max_roles_per_frame: 5, ..GenConfig::default() };
        assert!(generate_synthetic(&cfg, 1).is_err());
        let cfg = GenConfig { nouns: 1, ..GenConfig::default() };
        assert!(generate_synthetic(&cfg, 1).is_err());
        let cfg = GenConfig { correlation: 1.5, ..GenConfig::default() };
        assert!(generate_synthetic(&cfg, 1).is_err());
    }

    #[test]
    fn synonym_partner_is_an_involution_and_annotators_stay_in_group() {
        let n = 9;
        for i in 0..=n {
            let id = NounId(i);
            let p = synonym_partner(id, n);
            assert_eq!(synonym_partner(p, n), id);
        }
        assert_eq!(synonym_partner(NounId(0), n), NounId(0));
        assert_eq!(synonym_partner(NounId(9), n), NounId(9));

        let cfg = GenConfig {
            annotator_fidelity: 0.5,
            noise: 0.0,
            correlation: 0.0,
            train_instances: 30,
            dev_instances: 0,
            ..GenConfig::default()
        };
        let data = generate_synthetic(&cfg, 11).unwrap();
        for inst in &data.train {
            for &r in data.ontology.frame(inst.verb) {
                let group: std::collections::BTreeSet<NounId> = inst
                    .annotations
                    .iter()
                    .flat_map(|a| {
                        let n = a[&r];
                        [n, synonym_partner(n, cfg.nouns)]
                    })
                    .collect();
                // All three reports fall in one two-element synonym group.
                assert!(group.len() <= 2, "annotations straddle synonym groups: {group:?}");
            }
        }
    }
}
