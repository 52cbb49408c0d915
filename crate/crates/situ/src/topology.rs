//! Per-verb graph layouts over the padded slot array.
//!
//! Every graph uses the same 7-slot layout: slot 0 is the verb node and
//! slots 1..=k hold the verb's frame roles in frame order; remaining slots
//! are inactive padding. Edges are directed (src, dst) pairs between active
//! slots. The verb slot has no incoming edges in any standard layout, so
//! its state trajectory never depends on role evidence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{Ontology, RoleId, VerbId, MAX_ROLES};

/// Verb slot plus up to `MAX_ROLES` role slots.
pub const MAX_SLOTS: usize = MAX_ROLES + 1;
/// Slot index reserved for the verb node.
pub const VERB_SLOT: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    /// No edges: every node is classified from its own input alone.
    Unaries,
    /// Verb feeds a chain through the roles, most context-bearing first.
    Chain,
    /// Verb feeds agent/place hubs, which feed the remaining roles.
    Tree,
    /// Every ordered role pair is an edge; the verb stays isolated unless
    /// verb edges are explicitly enabled.
    FullyConnected,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] =
        [TopologyKind::Unaries, TopologyKind::Chain, TopologyKind::Tree, TopologyKind::FullyConnected];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Unaries => "unaries",
            TopologyKind::Chain => "chain",
            TopologyKind::Tree => "tree",
            TopologyKind::FullyConnected => "fully_connected",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unaries" => Ok(TopologyKind::Unaries),
            "chain" => Ok(TopologyKind::Chain),
            "tree" => Ok(TopologyKind::Tree),
            "fc" | "fully_connected" => Ok(TopologyKind::FullyConnected),
            other => Err(Error::Config(format!(
                "unknown topology '{other}' (expected unaries|chain|tree|fc)"
            ))),
        }
    }
}

/// A verb's graph: slot roles, directed edges, and per-slot incoming lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    verb: VerbId,
    role_of_slot: [Option<RoleId>; MAX_SLOTS],
    n_active: usize,
    /// Directed (src, dst) slot pairs, sorted by (src, dst).
    edges: Vec<(usize, usize)>,
    /// Incoming source slots per destination slot, each sorted ascending.
    in_lists: Vec<Vec<usize>>,
    /// Outgoing destination slots per source slot, each sorted ascending.
    out_lists: Vec<Vec<usize>>,
}

impl Topology {
    pub fn build(
        ontology: &Ontology,
        verb: VerbId,
        kind: TopologyKind,
        fc_verb_edges: bool,
    ) -> Result<Topology> {
        if verb.0 >= ontology.n_verbs() {
            return Err(Error::Contract(format!(
                "topology: verb id {} out of range ({} verbs)",
                verb.0,
                ontology.n_verbs()
            )));
        }
        let frame = ontology.frame(verb);
        let mut role_of_slot = [None; MAX_SLOTS];
        for (i, &r) in frame.iter().enumerate() {
            role_of_slot[i + 1] = Some(r);
        }
        let n_active = frame.len() + 1;
        let slot_of = |role: RoleId| -> usize {
            1 + frame.iter().position(|&r| r == role).expect("role taken from this frame")
        };

        let mut edges: Vec<(usize, usize)> = Vec::new();
        match kind {
            TopologyKind::Unaries => {}
            TopologyKind::Chain => {
                let order = ontology.chain_order(frame);
                let mut prev = VERB_SLOT;
                for r in order {
                    let s = slot_of(r);
                    edges.push((prev, s));
                    prev = s;
                }
            }
            TopologyKind::Tree => {
                let hubs: Vec<usize> = frame
                    .iter()
                    .filter(|&&r| {
                        Some(ontology.canonical_agent(r)) == ontology.agent_role()
                            || Some(r) == ontology.place_role()
                    })
                    .map(|&r| slot_of(r))
                    .collect();
                if hubs.is_empty() {
                    for &r in frame {
                        edges.push((VERB_SLOT, slot_of(r)));
                    }
                } else {
                    for &h in &hubs {
                        edges.push((VERB_SLOT, h));
                    }
                    for &r in frame {
                        let s = slot_of(r);
                        if hubs.contains(&s) {
                            continue;
                        }
                        for &h in &hubs {
                            edges.push((h, s));
                        }
                    }
                }
            }
            TopologyKind::FullyConnected => {
                for a in 1..n_active {
                    for b in 1..n_active {
                        if a != b {
                            edges.push((a, b));
                        }
                    }
                }
                if fc_verb_edges {
                    for s in 1..n_active {
                        edges.push((VERB_SLOT, s));
                        edges.push((s, VERB_SLOT));
                    }
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut in_lists = vec![Vec::new(); MAX_SLOTS];
        let mut out_lists = vec![Vec::new(); MAX_SLOTS];
        for &(src, dst) in &edges {
            in_lists[dst].push(src);
            out_lists[src].push(dst);
        }

        Ok(Topology { kind, verb, role_of_slot, n_active, edges, in_lists, out_lists })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn verb(&self) -> VerbId {
        self.verb
    }

    /// Active slot count (verb slot + role slots).
    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn is_active(&self, slot: usize) -> bool {
        slot < self.n_active
    }

    /// Role held by a slot; None for the verb slot and for padding.
    pub fn role_of_slot(&self, slot: usize) -> Option<RoleId> {
        self.role_of_slot.get(slot).copied().flatten()
    }

    pub fn slot_of_role(&self, role: RoleId) -> Option<usize> {
        (1..self.n_active).find(|&s| self.role_of_slot[s] == Some(role))
    }

    /// Active role slots with their roles, in slot order.
    pub fn role_slots(&self) -> impl Iterator<Item = (usize, RoleId)> + '_ {
        (1..self.n_active).map(|s| (s, self.role_of_slot[s].expect("active role slot")))
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted incoming source slots of an active slot.
    pub fn neighbors_in(&self, slot: usize) -> Result<&[usize]> {
        if !self.is_active(slot) {
            return Err(Error::Contract(format!(
                "topology: slot {slot} is inactive (only {} active slots)",
                self.n_active
            )));
        }
        Ok(&self.in_lists[slot])
    }

    /// Sorted outgoing destination slots of an active slot.
    pub fn neighbors_out(&self, slot: usize) -> Result<&[usize]> {
        if !self.is_active(slot) {
            return Err(Error::Contract(format!(
                "topology: slot {slot} is inactive (only {} active slots)",
                self.n_active
            )));
        }
        Ok(&self.out_lists[slot])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_synthetic, GenConfig};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    /// agent, place, vehicle; vehicle appears in more frames than agent or
    /// place so frequency ordering is observable.
    fn test_ontology() -> Ontology {
        let mut verbs = vec!["ride".to_string(), "drift".to_string(), "pose".to_string()];
        let roles = vec![
            "agent".to_string(),
            "place".to_string(),
            "vehicle".to_string(),
            "item".to_string(),
            "actor".to_string(),
        ];
        let nouns = vec!["∅".to_string(), "man".to_string(), "horse".to_string()];
        let mut frames = vec![
            vec![RoleId(0), RoleId(1), RoleId(2)], // ride: agent place vehicle
            vec![RoleId(2), RoleId(3)],            // drift: vehicle item
            vec![RoleId(4), RoleId(2)],            // pose: actor vehicle
        ];
        for i in 0..4 {
            verbs.push(format!("filler{i}"));
            frames.push(vec![RoleId(2)]); // boost vehicle frequency
        }
        let mut aliases = BTreeMap::new();
        aliases.insert(RoleId(4), RoleId(0));
        let clusters = vec![None; verbs.len()];
        Ontology::build(verbs, roles, nouns, frames, aliases, clusters).unwrap()
    }

    #[test]
    fn chain_runs_place_then_agent_then_frequency_order() {
        let ont = test_ontology();
        // ride frame [agent, place, vehicle] → slots 1,2,3; chain order is
        // place, agent, vehicle → verb→2→1→3.
        let t = Topology::build(&ont, VerbId(0), TopologyKind::Chain, false).unwrap();
        assert_eq!(t.edges(), &[(0, 2), (1, 3), (2, 1)]);
        assert_eq!(t.neighbors_in(3).unwrap(), &[1]);
        assert_eq!(t.neighbors_in(VERB_SLOT).unwrap(), &[] as &[usize]);
    }

    #[test]
    fn tree_uses_agent_and_place_as_hubs() {
        let ont = test_ontology();
        let t = Topology::build(&ont, VerbId(0), TopologyKind::Tree, false).unwrap();
        // hubs: agent (slot 1), place (slot 2); vehicle (slot 3) fed by both.
        let mut expect = vec![(0, 1), (0, 2), (1, 3), (2, 3)];
        expect.sort_unstable();
        assert_eq!(t.edges(), expect.as_slice());
    }

    #[test]
    fn tree_without_hubs_fans_out_from_verb() {
        let ont = test_ontology();
        // drift frame [vehicle, item]: no agent-like or place role.
        let t = Topology::build(&ont, VerbId(1), TopologyKind::Tree, false).unwrap();
        assert_eq!(t.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn tree_treats_alias_as_agent_hub() {
        let ont = test_ontology();
        // pose frame [actor, vehicle]: actor canonicalizes to agent.
        let t = Topology::build(&ont, VerbId(2), TopologyKind::Tree, false).unwrap();
        assert_eq!(t.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn fully_connected_isolates_verb_unless_asked() {
        let ont = test_ontology();
        let t = Topology::build(&ont, VerbId(0), TopologyKind::FullyConnected, false).unwrap();
        let expect = vec![(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)];
        assert_eq!(t.edges(), expect.as_slice());
        assert!(t.neighbors_in(VERB_SLOT).unwrap().is_empty());

        let t = Topology::build(&ont, VerbId(0), TopologyKind::FullyConnected, true).unwrap();
        assert_eq!(t.edges().len(), 6 + 2 * 3);
        assert_eq!(t.neighbors_in(VERB_SLOT).unwrap(), &[1, 2, 3]);
    }

    #[test]
    fn unaries_have_no_edges_and_padding_is_rejected() {
        let ont = test_ontology();
        let t = Topology::build(&ont, VerbId(1), TopologyKind::Unaries, false).unwrap();
        assert!(t.edges().is_empty());
        assert_eq!(t.n_active(), 3);
        let err = t.neighbors_in(5).unwrap_err();
        assert!(err.to_string().contains("slot 5"), "unhelpful message: {err}");
        assert!(Topology::build(&ont, VerbId(99), TopologyKind::Unaries, false).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in TopologyKind::ALL {
            assert_eq!(kind.name().parse::<TopologyKind>().unwrap(), kind);
        }
        assert_eq!("fc".parse::<TopologyKind>().unwrap(), TopologyKind::FullyConnected);
        assert!("ring".parse::<TopologyKind>().is_err());
    }

    fn kind_strategy() -> impl Strategy<Value = TopologyKind> {
        prop_oneof![
            Just(TopologyKind::Unaries),
            Just(TopologyKind::Chain),
            Just(TopologyKind::Tree),
            Just(TopologyKind::FullyConnected),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Structural invariants hold for every verb of freshly generated
        /// ontologies under every layout.
        #[test]
        fn structural_invariants(
            seed in 0u64..1000,
            verbs in 1usize..6,
            roles in 2usize..7,
            kind in kind_strategy(),
            fc_verb_edges in any::<bool>(),
        ) {
            let cfg = GenConfig {
                verbs,
                roles,
                min_roles_per_frame: 1,
                max_roles_per_frame: roles.min(6),
                train_instances: 1,
                dev_instances: 0,
                ..GenConfig::default()
            };
            let ont = generate_synthetic(&cfg, seed).unwrap().ontology;
            for v in 0..ont.n_verbs() {
                let t = Topology::build(&ont, VerbId(v), kind, fc_verb_edges).unwrap();
                let k = ont.frame(VerbId(v)).len();
                prop_assert_eq!(t.n_active(), k + 1);

                // Edges touch only active slots, never self-loop, never repeat.
                let mut seen = std::collections::BTreeSet::new();
                for &(src, dst) in t.edges() {
                    prop_assert!(t.is_active(src) && t.is_active(dst));
                    prop_assert_ne!(src, dst);
                    prop_assert!(seen.insert((src, dst)));
                }

                // Incoming lists agree with the edge set and stay sorted.
                for s in 0..t.n_active() {
                    let ins = t.neighbors_in(s).unwrap();
                    prop_assert!(ins.windows(2).all(|w| w[0] < w[1]));
                    for &src in ins {
                        prop_assert!(t.edges().contains(&(src, s)));
                    }
                }

                // The verb slot only ever receives edges in the opt-in
                // fully-connected variant.
                if !(kind == TopologyKind::FullyConnected && fc_verb_edges) {
                    prop_assert!(t.neighbors_in(VERB_SLOT).unwrap().is_empty());
                }

                match kind {
                    TopologyKind::Unaries => prop_assert!(t.edges().is_empty()),
                    TopologyKind::Chain => {
                        // Path through all roles: every role slot has
                        // exactly one parent.
                        for s in 1..t.n_active() {
                            prop_assert_eq!(t.neighbors_in(s).unwrap().len(), 1);
                        }
                        prop_assert_eq!(t.edges().len(), k);
                    }
                    TopologyKind::Tree => {
                        for s in 1..t.n_active() {
                            prop_assert!(!t.neighbors_in(s).unwrap().is_empty());
                        }
                    }
                    TopologyKind::FullyConnected => {
                        let extra = if fc_verb_edges { 2 * k } else { 0 };
                        prop_assert_eq!(t.edges().len(), k * k.saturating_sub(1) + extra);
                    }
                }

                // Slot/role lookups are mutually inverse on active slots.
                for (s, r) in t.role_slots() {
                    prop_assert_eq!(t.slot_of_role(r), Some(s));
                }
                prop_assert_eq!(t.role_of_slot(VERB_SLOT), None);
                prop_assert_eq!(t.role_of_slot(6), ont.frame(VerbId(v)).get(5).copied());
            }
        }
    }
}
