//! Verb/role/noun vocabularies, per-verb frames, and dataset instances.
//!
//! A dataset file is one JSON document carrying the ontology and its
//! instances; all cross-references in the file are by name, never by index.
//! Indices (`VerbId` etc.) are assigned by position in the file's lists.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::Tensor2;

/// Reserved noun at index 0: "no value / unknown".
pub const EMPTY_NOUN: &str = "∅";

/// Number of annotators per instance.
pub const N_ANNOTATIONS: usize = 3;

/// Role slots available in the padded graph (slot 0 is the verb).
pub const MAX_ROLES: usize = 6;

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        pub struct $name(pub usize);

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(VerbId);
id_newtype!(RoleId);
id_newtype!(NounId);

/// The empty noun is always index 0.
pub const EMPTY_NOUN_ID: NounId = NounId(0);

#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    verbs: Vec<String>,
    roles: Vec<String>,
    nouns: Vec<String>,
    frames: Vec<Vec<RoleId>>,
    role_frequency: Vec<usize>,
    agent_aliases: BTreeMap<RoleId, RoleId>,
    verb_clusters: Vec<Option<String>>,
    agent_role: Option<RoleId>,
    place_role: Option<RoleId>,
}

impl Ontology {
    /// Validate and assemble an ontology. `nouns` must already start with
    /// the reserved empty noun. Derived fields (role frequencies, the
    /// special agent/place roles) are computed here.
    pub fn build(
        verbs: Vec<String>,
        roles: Vec<String>,
        nouns: Vec<String>,
        frames: Vec<Vec<RoleId>>,
        agent_aliases: BTreeMap<RoleId, RoleId>,
        verb_clusters: Vec<Option<String>>,
    ) -> Result<Self> {
        if verbs.is_empty() {
            return Err(Error::Data("ontology: no verbs".into()));
        }
        if nouns.first().map(String::as_str) != Some(EMPTY_NOUN) {
            return Err(Error::Data(format!("ontology: nouns[0] must be the reserved {EMPTY_NOUN}")));
        }
        check_unique("verbs", &verbs)?;
        check_unique("roles", &roles)?;
        check_unique("nouns", &nouns)?;
        if frames.len() != verbs.len() {
            return Err(Error::Data(format!(
                "ontology: {} verbs but {} frames",
                verbs.len(),
                frames.len()
            )));
        }
        if verb_clusters.len() != verbs.len() {
            return Err(Error::Data("ontology: verb_clusters length != verbs length".into()));
        }
        for (v, frame) in frames.iter().enumerate() {
            if frame.is_empty() || frame.len() > MAX_ROLES {
                return Err(Error::Data(format!(
                    "ontology: frame of '{}' has {} roles, must be 1..={MAX_ROLES}",
                    verbs[v],
                    frame.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for r in frame {
                if r.0 >= roles.len() {
                    return Err(Error::Data(format!(
                        "ontology: frame of '{}' references unknown role index {}",
                        verbs[v], r.0
                    )));
                }
                if !seen.insert(*r) {
                    return Err(Error::Data(format!(
                        "ontology: frame of '{}' repeats role '{}'",
                        verbs[v], roles[r.0]
                    )));
                }
            }
        }
        for (alias, target) in &agent_aliases {
            if alias.0 >= roles.len() || target.0 >= roles.len() {
                return Err(Error::Data("ontology: agent_aliases references unknown role".into()));
            }
            if alias == target {
                return Err(Error::Data(format!(
                    "ontology: agent_aliases maps '{}' to itself",
                    roles[alias.0]
                )));
            }
        }
        // An aliased role stands in for the canonical agent; the two must
        // never share a frame.
        for (v, frame) in frames.iter().enumerate() {
            for r in frame {
                if let Some(target) = agent_aliases.get(r) {
                    if frame.contains(target) {
                        return Err(Error::Data(format!(
                            "ontology: frame of '{}' contains both '{}' and its alias target '{}'",
                            verbs[v], roles[r.0], roles[target.0]
                        )));
                    }
                }
            }
        }

        let mut role_frequency = vec![0usize; roles.len()];
        for frame in &frames {
            for r in frame {
                role_frequency[r.0] += 1;
            }
        }
        let agent_role = roles.iter().position(|r| r == "agent").map(RoleId);
        let place_role = roles.iter().position(|r| r == "place").map(RoleId);

        Ok(Ontology {
            verbs,
            roles,
            nouns,
            frames,
            role_frequency,
            agent_aliases,
            verb_clusters,
            agent_role,
            place_role,
        })
    }

    pub fn n_verbs(&self) -> usize {
        self.verbs.len()
    }

    pub fn n_roles(&self) -> usize {
        self.roles.len()
    }

    /// Noun count including the reserved empty noun.
    pub fn n_nouns(&self) -> usize {
        self.nouns.len()
    }

    pub fn verbs(&self) -> &[String] {
        &self.verbs
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn nouns(&self) -> &[String] {
        &self.nouns
    }

    pub fn verb_name(&self, v: VerbId) -> &str {
        &self.verbs[v.0]
    }

    pub fn role_name(&self, r: RoleId) -> &str {
        &self.roles[r.0]
    }

    pub fn noun_name(&self, n: NounId) -> &str {
        &self.nouns[n.0]
    }

    pub fn verb_id(&self, name: &str) -> Option<VerbId> {
        self.verbs.iter().position(|v| v == name).map(VerbId)
    }

    pub fn role_id(&self, name: &str) -> Option<RoleId> {
        self.roles.iter().position(|r| r == name).map(RoleId)
    }

    pub fn noun_id(&self, name: &str) -> Option<NounId> {
        self.nouns.iter().position(|n| n == name).map(NounId)
    }

    pub fn frame(&self, v: VerbId) -> &[RoleId] {
        &self.frames[v.0]
    }

    /// Frames a role participates in, across the whole ontology.
    pub fn role_frequency(&self, r: RoleId) -> usize {
        self.role_frequency[r.0]
    }

    pub fn agent_role(&self) -> Option<RoleId> {
        self.agent_role
    }

    pub fn place_role(&self) -> Option<RoleId> {
        self.place_role
    }

    pub fn agent_aliases(&self) -> &BTreeMap<RoleId, RoleId> {
        &self.agent_aliases
    }

    /// Alias target for agent-like roles; identity for everything else.
    pub fn canonical_agent(&self, role: RoleId) -> RoleId {
        *self.agent_aliases.get(&role).unwrap_or(&role)
    }

    /// Prediction order for the recurrent chain: place first when present,
    /// then the agent-like role (after aliasing), then the remaining roles
    /// by descending frame frequency with ties broken by ascending id.
    pub fn chain_order(&self, frame_roles: &[RoleId]) -> Vec<RoleId> {
        let mut rest: Vec<RoleId> = Vec::new();
        let mut place: Option<RoleId> = None;
        let mut agent: Option<RoleId> = None;
        for &r in frame_roles {
            if Some(r) == self.place_role {
                place = Some(r);
            } else if Some(self.canonical_agent(r)) == self.agent_role
                && agent.map_or(true, |a| r < a)
            {
                if let Some(prev) = agent.replace(r) {
                    rest.push(prev);
                }
            } else {
                rest.push(r);
            }
        }
        rest.sort_by(|a, b| {
            self.role_frequency[b.0]
                .cmp(&self.role_frequency[a.0])
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut out = Vec::with_capacity(frame_roles.len());
        out.extend(place);
        out.extend(agent);
        out.extend(rest);
        out
    }

    pub fn cluster_of(&self, v: VerbId) -> Option<&str> {
        self.verb_clusters[v.0].as_deref()
    }

    /// Cluster name -> member verbs, in id order.
    pub fn clusters(&self) -> BTreeMap<String, Vec<VerbId>> {
        let mut out: BTreeMap<String, Vec<VerbId>> = BTreeMap::new();
        for (i, c) in self.verb_clusters.iter().enumerate() {
            if let Some(name) = c {
                out.entry(name.clone()).or_default().push(VerbId(i));
            }
        }
        out
    }

    /// Content hash binding checkpoints to the ontology they were trained on.
    pub fn sha256(&self) -> String {
        let file = self.to_file_parts();
        let bytes = serde_json::to_vec(&file).expect("ontology serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    fn to_file_parts(&self) -> OntologyParts {
        OntologyParts {
            verbs: self.verbs.clone(),
            roles: self.roles.clone(),
            nouns: self.nouns[1..].to_vec(),
            frames: self
                .verbs
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    (v.clone(), self.frames[i].iter().map(|r| self.roles[r.0].clone()).collect())
                })
                .collect(),
            agent_aliases: self
                .agent_aliases
                .iter()
                .map(|(a, t)| (self.roles[a.0].clone(), self.roles[t.0].clone()))
                .collect(),
            verb_clusters: if self.verb_clusters.iter().all(Option::is_none) {
                None
            } else {
                Some(
                    self.verb_clusters
                        .iter()
                        .enumerate()
                        .filter_map(|(i, c)| c.as_ref().map(|c| (self.verbs[i].clone(), c.clone())))
                        .collect(),
                )
            },
        }
    }
}

fn check_unique(what: &str, names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if n.is_empty() {
            return Err(Error::Data(format!("ontology: empty name in {what}")));
        }
        if !seen.insert(n) {
            return Err(Error::Data(format!("ontology: duplicate name '{n}' in {what}")));
        }
    }
    Ok(())
}

/// One labeled image: gold verb, feature vectors, and three full role->noun
/// annotations over the gold verb's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub verb: VerbId,
    pub phi_v: Tensor2<f64>,
    pub phi_n: Tensor2<f64>,
    pub annotations: [BTreeMap<RoleId, NounId>; N_ANNOTATIONS],
}

impl Instance {
    /// Nouns any of the three annotators assigned to `role`.
    pub fn annotated_nouns(&self, role: RoleId) -> BTreeSet<NounId> {
        self.annotations.iter().filter_map(|a| a.get(&role).copied()).collect()
    }
}

// ── JSON container ────────────────────────────────────────────────────────

#[derive(Serialize)]
struct OntologyParts {
    verbs: Vec<String>,
    roles: Vec<String>,
    nouns: Vec<String>,
    frames: BTreeMap<String, Vec<String>>,
    agent_aliases: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verb_clusters: Option<BTreeMap<String, String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    verbs: Vec<String>,
    roles: Vec<String>,
    /// Without the reserved empty noun; the loader prepends it.
    nouns: Vec<String>,
    frames: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    agent_aliases: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verb_clusters: Option<BTreeMap<String, String>>,
    instances: Vec<InstanceFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    id: String,
    verb: String,
    phi_v: Vec<f64>,
    phi_n: Vec<f64>,
    annotations: Vec<BTreeMap<String, String>>,
}

/// Read and validate a dataset file. Feature dimensions must agree across
/// all instances; every name must resolve against the ontology.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<(Ontology, Vec<Instance>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: DatasetFile = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    dataset_from_file(file).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn dataset_from_file(file: DatasetFile) -> Result<(Ontology, Vec<Instance>)> {
    if file.nouns.iter().any(|n| n == EMPTY_NOUN) {
        return Err(Error::Data(format!(
            "nouns must not contain the reserved {EMPTY_NOUN} (it is implicit at index 0)"
        )));
    }
    let mut nouns = Vec::with_capacity(file.nouns.len() + 1);
    nouns.push(EMPTY_NOUN.to_string());
    nouns.extend(file.nouns);

    let role_id = |name: &str| -> Result<RoleId> {
        file.roles
            .iter()
            .position(|r| r == name)
            .map(RoleId)
            .ok_or_else(|| Error::Data(format!("unknown role '{name}'")))
    };

    let mut frames = Vec::with_capacity(file.verbs.len());
    for v in &file.verbs {
        let roles = file
            .frames
            .get(v)
            .ok_or_else(|| Error::Data(format!("frames: missing entry for verb '{v}'")))?;
        frames.push(roles.iter().map(|r| role_id(r)).collect::<Result<Vec<_>>>()?);
    }
    if file.frames.len() != file.verbs.len() {
        return Err(Error::Data("frames: contains entries for unknown verbs".into()));
    }

    let mut aliases = BTreeMap::new();
    for (a, t) in &file.agent_aliases {
        aliases.insert(role_id(a)?, role_id(t)?);
    }

    let mut clusters = vec![None; file.verbs.len()];
    if let Some(map) = &file.verb_clusters {
        for (v, c) in map {
            let idx = file
                .verbs
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| Error::Data(format!("verb_clusters: unknown verb '{v}'")))?;
            clusters[idx] = Some(c.clone());
        }
    }

    let ontology =
        Ontology::build(file.verbs, file.roles, nouns, frames, aliases, clusters)?;

    let mut instances = Vec::with_capacity(file.instances.len());
    let mut ids = BTreeSet::new();
    let mut dims: Option<(usize, usize)> = None;
    for (i, inst) in file.instances.into_iter().enumerate() {
        let ctx = format!("instances[{i}] (id '{}')", inst.id);
        if !ids.insert(inst.id.clone()) {
            return Err(Error::Data(format!("{ctx}: duplicate id")));
        }
        let verb = ontology
            .verb_id(&inst.verb)
            .ok_or_else(|| Error::Data(format!("{ctx}: unknown verb '{}'", inst.verb)))?;
        match dims {
            None => dims = Some((inst.phi_v.len(), inst.phi_n.len())),
            Some((dv, dn)) => {
                if inst.phi_v.len() != dv || inst.phi_n.len() != dn {
                    return Err(Error::Data(format!(
                        "{ctx}: feature dims {}x{} differ from first instance's {dv}x{dn}",
                        inst.phi_v.len(),
                        inst.phi_n.len()
                    )));
                }
            }
        }
        if inst.phi_v.is_empty() || inst.phi_n.is_empty() {
            return Err(Error::Data(format!("{ctx}: empty feature vector")));
        }
        if inst.phi_v.iter().chain(&inst.phi_n).any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{ctx}: non-finite feature value")));
        }
        if inst.annotations.len() != N_ANNOTATIONS {
            return Err(Error::Data(format!(
                "{ctx}: expected {N_ANNOTATIONS} annotations, got {}",
                inst.annotations.len()
            )));
        }
        let frame: BTreeSet<RoleId> = ontology.frame(verb).iter().copied().collect();
        let mut annotations: [BTreeMap<RoleId, NounId>; N_ANNOTATIONS] = Default::default();
        for (j, ann) in inst.annotations.iter().enumerate() {
            let mut parsed = BTreeMap::new();
            for (role, noun) in ann {
                let r = ontology.role_id(role).ok_or_else(|| {
                    Error::Data(format!("{ctx}: annotations[{j}]: unknown role '{role}'"))
                })?;
                if !frame.contains(&r) {
                    return Err(Error::Data(format!(
                        "{ctx}: annotations[{j}]: role '{role}' not in frame of '{}'",
                        ontology.verb_name(verb)
                    )));
                }
                let n = ontology.noun_id(noun).ok_or_else(|| {
                    Error::Data(format!("{ctx}: annotations[{j}]: unknown noun '{noun}'"))
                })?;
                parsed.insert(r, n);
            }
            if parsed.len() != frame.len() {
                return Err(Error::Data(format!(
                    "{ctx}: annotations[{j}]: covers {} roles, frame has {}",
                    parsed.len(),
                    frame.len()
                )));
            }
            annotations[j] = parsed;
        }
        instances.push(Instance {
            id: inst.id,
            verb,
            phi_v: Tensor2::row_from_f64(&inst.phi_v),
            phi_n: Tensor2::row_from_f64(&inst.phi_n),
            annotations,
        });
    }
    Ok((ontology, instances))
}

/// Serialize a dataset. `load_dataset(write_dataset(x)) == x`, and the byte
/// output is deterministic for identical input.
pub fn write_dataset(
    path: impl AsRef<Path>,
    ontology: &Ontology,
    instances: &[Instance],
) -> Result<()> {
    let path = path.as_ref();
    let parts = ontology.to_file_parts();
    let file = DatasetFile {
        verbs: parts.verbs,
        roles: parts.roles,
        nouns: parts.nouns,
        frames: parts.frames,
        agent_aliases: parts.agent_aliases,
        verb_clusters: parts.verb_clusters,
        instances: instances
            .iter()
            .map(|inst| InstanceFile {
                id: inst.id.clone(),
                verb: ontology.verb_name(inst.verb).to_string(),
                phi_v: inst.phi_v.to_f64_vec(),
                phi_n: inst.phi_n.to_f64_vec(),
                annotations: inst
                    .annotations
                    .iter()
                    .map(|ann| {
                        ann.iter()
                            .map(|(r, n)| {
                                (
                                    ontology.role_name(*r).to_string(),
                                    ontology.noun_name(*n).to_string(),
                                )
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_json() -> String {
        r#"{
            "verbs": ["carrying"],
            "roles": ["agent", "item"],
            "nouns": ["person", "box"],
            "frames": {"carrying": ["agent", "item"]},
            "instances": [
                {
                    "id": "img_0",
                    "verb": "carrying",
                    "phi_v": [0.1, 0.2],
                    "phi_n": [0.3, 0.4, 0.5],
                    "annotations": [
                        {"agent": "person", "item": "box"},
                        {"agent": "person", "item": "box"},
                        {"agent": "person", "item": "∅"}
                    ]
                }
            ]
        }"#
        .to_string()
    }

    fn load_str(json: &str) -> Result<(Ontology, Vec<Instance>)> {
        let dir = std::env::temp_dir().join(format!("situ_ont_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("d{}.json", rand::random::<u64>()));
        std::fs::write(&path, json).unwrap();
        let out = load_dataset(&path);
        let _ = std::fs::remove_file(&path);
        out
    }

    #[test]
    fn loads_minimal_dataset() {
        let (ont, insts) = load_str(&tiny_json()).unwrap();
        assert_eq!(ont.n_verbs(), 1);
        assert_eq!(ont.frame(VerbId(0)).len(), 2);
        assert_eq!(ont.nouns()[0], EMPTY_NOUN);
        assert_eq!(ont.n_nouns(), 3);
        assert_eq!(insts.len(), 1);
        assert_eq!(insts[0].phi_v.cols(), 2);
        assert_eq!(insts[0].phi_n.cols(), 3);
        let empty = insts[0].annotations[2][&ont.role_id("item").unwrap()];
        assert_eq!(empty, EMPTY_NOUN_ID);
    }

    #[test]
    fn rejects_wrong_annotation_count() {
        let json = tiny_json().replace(
            r#"{"agent": "person", "item": "box"},
                        {"agent": "person", "item": "∅"}"#,
            r#"{"agent": "person", "item": "box"}"#,
        );
        let err = load_str(&json).unwrap_err().to_string();
        assert!(err.contains("expected 3 annotations"), "got: {err}");
    }

    #[test]
    fn rejects_oversized_frame() {
        let json = r#"{
            "verbs": ["v"],
            "roles": ["r0","r1","r2","r3","r4","r5","r6"],
            "nouns": ["n"],
            "frames": {"v": ["r0","r1","r2","r3","r4","r5","r6"]},
            "instances": []
        }"#;
        let err = load_str(json).unwrap_err().to_string();
        assert!(err.contains("1..=6"), "got: {err}");
    }

    #[test]
    fn rejects_reserved_noun_in_file() {
        let json = tiny_json().replace(r#""nouns": ["person", "box"]"#, r#""nouns": ["person", "∅"]"#);
        let err = load_str(&json).unwrap_err().to_string();
        assert!(err.contains("reserved"), "got: {err}");
    }

    #[test]
    fn canonical_agent_follows_alias_table() {
        let ont = Ontology::build(
            vec!["v".into()],
            vec!["agent".into(), "teacher".into(), "item".into()],
            vec![EMPTY_NOUN.into(), "n".into()],
            vec![vec![RoleId(1), RoleId(2)]],
            BTreeMap::from([(RoleId(1), RoleId(0))]),
            vec![None],
        )
        .unwrap();
        assert_eq!(ont.canonical_agent(RoleId(1)), RoleId(0));
        assert_eq!(ont.canonical_agent(RoleId(2)), RoleId(2));
        assert_eq!(ont.canonical_agent(RoleId(0)), RoleId(0));
    }

    #[test]
    fn alias_and_target_cannot_share_a_frame() {
        let err = Ontology::build(
            vec!["v".into()],
            vec!["agent".into(), "teacher".into()],
            vec![EMPTY_NOUN.into()],
            vec![vec![RoleId(0), RoleId(1)]],
            BTreeMap::from([(RoleId(1), RoleId(0))]),
            vec![None],
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("alias"), "got: {err}");
    }

    /// Ontology with named roles and controllable frame frequencies.
    fn freq_ontology() -> Ontology {
        // roles: agent(0), place(1), vehicle(2), item(3), teacher(4)
        // vehicle appears in 10 frames, item in 2.
        let roles: Vec<String> =
            ["agent", "place", "vehicle", "item", "teacher"].map(String::from).to_vec();
        let mut verbs = vec!["main".to_string(), "second".to_string()];
        let mut frames = vec![
            vec![RoleId(0), RoleId(2), RoleId(1)],
            vec![RoleId(3), RoleId(2), RoleId(0)],
        ];
        for i in 0..9 {
            verbs.push(format!("filler{i}"));
            if i == 0 {
                frames.push(vec![RoleId(2), RoleId(3)]);
            } else {
                frames.push(vec![RoleId(2)]);
            }
        }
        Ontology::build(
            verbs,
            roles,
            vec![EMPTY_NOUN.into(), "n".into()],
            frames,
            BTreeMap::from([(RoleId(4), RoleId(0))]),
            vec![None; 11],
        )
        .unwrap()
    }

    #[test]
    fn chain_order_puts_place_then_agent_then_frequency() {
        let ont = freq_ontology();
        // frame {agent, vehicle, place}: place, agent, then vehicle.
        let order = ont.chain_order(&[RoleId(0), RoleId(2), RoleId(1)]);
        assert_eq!(order, vec![RoleId(1), RoleId(0), RoleId(2)]);
    }

    #[test]
    fn chain_order_uses_alias_for_agent_position() {
        let ont = freq_ontology();
        // teacher aliases agent: it takes the agent position.
        let order = ont.chain_order(&[RoleId(3), RoleId(4), RoleId(2)]);
        assert_eq!(order, vec![RoleId(4), RoleId(2), RoleId(3)]);
    }

    #[test]
    fn chain_order_breaks_frequency_ties_by_role_id() {
        let ont = freq_ontology();
        // agent freq 3? (frames: main, second, plus teacher alias doesn't count)
        // vehicle freq 11 > item freq 2: vehicle before item regardless of id.
        let order = ont.chain_order(&[RoleId(3), RoleId(2)]);
        assert_eq!(order, vec![RoleId(2), RoleId(3)]);
        // Equal frequencies fall back to ascending id: build a frame of two
        // roles with equal counts.
        let ont2 = Ontology::build(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![EMPTY_NOUN.into()],
            vec![vec![RoleId(0), RoleId(1)], vec![RoleId(1), RoleId(0)]],
            BTreeMap::new(),
            vec![None, None],
        )
        .unwrap();
        assert_eq!(ont2.chain_order(&[RoleId(1), RoleId(0)]), vec![RoleId(0), RoleId(1)]);
    }

    #[test]
    fn chain_order_single_role() {
        let ont = freq_ontology();
        assert_eq!(ont.chain_order(&[RoleId(2)]), vec![RoleId(2)]);
    }

    #[test]
    fn roundtrip_preserves_everything() {
        let (ont, insts) = load_str(&tiny_json()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_dataset(&path, &ont, &insts).unwrap();
        let (ont2, insts2) = load_dataset(&path).unwrap();
        assert_eq!(ont, ont2);
        assert_eq!(insts, insts2);

        // Serialization is deterministic.
        let path2 = dir.path().join("out2.json");
        write_dataset(&path2, &ont, &insts).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn sha256_tracks_content() {
        let (ont, _) = load_str(&tiny_json()).unwrap();
        let h1 = ont.sha256();
        assert_eq!(h1.len(), 64);
        assert_eq!(h1, ont.sha256());
        let (ont2, _) =
            load_str(&tiny_json().replace("\"box\"]", "\"crate\"]").replace(": \"box\"", ": \"crate\"")).unwrap();
        assert_ne!(h1, ont2.sha256());
    }
}
