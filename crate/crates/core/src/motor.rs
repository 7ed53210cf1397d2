//! Distributed ladder model of a star-connected three-phase stator winding.
//!
//! Each phase is a chain of lumped sections. A section covering `n` turns is
//! a series resistor and inductor (`n * r`, `n * l`, joined at an internal
//! node), an inter-turn capacitor `c_tt / n` across the section, and a
//! turn-to-frame capacitance `n * c_tf` split equally between the section's
//! two boundary nodes. Turn 0 of each phase is its terminal, the last turn of
//! every phase is the common star point, and the frame returns to ground
//! through a series R-L branch.
//!
//! Section boundaries fall on every tap turn of every phase, so all three
//! phases share one boundary layout and stay isomorphic until a fault or a
//! perturbation is applied.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{ElementKind, Network, NodeId, GROUND};
use crate::fault::FaultSpec;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Phase::A => 'A',
            Phase::B => 'B',
            Phase::C => 'C',
        }
    }

    pub fn from_letter(c: char) -> Option<Phase> {
        match c {
            'A' | 'a' => Some(Phase::A),
            'B' | 'b' => Some(Phase::B),
            'C' | 'c' => Some(Phase::C),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Phase {
    type Err = MotorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next().and_then(Phase::from_letter), chars.next()) {
            (Some(p), None) => Ok(p),
            _ => Err(MotorError::UnknownPhase(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotorError {
    #[error("unknown phase {0:?}")]
    UnknownPhase(String),
    #[error("turns_per_phase must be at least 1")]
    NoTurns,
    #[error("phase {phase} tap at turn {turn} is outside 1..={turns}")]
    TapOutOfRange { phase: Phase, turn: u32, turns: u32 },
    #[error("phase {0} taps must be strictly increasing")]
    TapsNotSorted(Phase),
    #[error("{sections} sections per phase cannot honor {segments} tap segments")]
    TooCoarse { sections: u32, segments: usize },
    #[error("{sections} sections per phase exceed {turns} turns")]
    TooFine { sections: u32, turns: u32 },
    #[error("parameter {name} = {value} is out of range")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("phase {phase} turn {turn} is not a tap point")]
    UnmappedTap { phase: Phase, turn: u32 },
    #[error("no element labelled {0}")]
    UnknownElement(String),
}

/// Turn count, tap points and ladder granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindingSpec {
    pub turns_per_phase: u32,
    pub taps: BTreeMap<Phase, Vec<u32>>,
    pub sections_per_phase: u32,
}

impl Default for WindingSpec {
    /// 288 turns per phase, tapped at A24, A27, A34, A120, A264 and B120.
    fn default() -> Self {
        Self {
            turns_per_phase: 288,
            taps: BTreeMap::from([
                (Phase::A, vec![24, 27, 34, 120, 264]),
                (Phase::B, vec![120]),
            ]),
            sections_per_phase: 48,
        }
    }
}

impl WindingSpec {
    pub fn validate(&self) -> Result<(), MotorError> {
        if self.turns_per_phase == 0 {
            return Err(MotorError::NoTurns);
        }
        for (&phase, taps) in &self.taps {
            if taps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(MotorError::TapsNotSorted(phase));
            }
            if let Some(&turn) = taps
                .iter()
                .find(|&&t| t == 0 || t > self.turns_per_phase)
            {
                return Err(MotorError::TapOutOfRange {
                    phase,
                    turn,
                    turns: self.turns_per_phase,
                });
            }
        }
        if self.sections_per_phase > self.turns_per_phase {
            return Err(MotorError::TooFine {
                sections: self.sections_per_phase,
                turns: self.turns_per_phase,
            });
        }
        let segments = self.tap_union().len() + 1;
        if (self.sections_per_phase as usize) < segments {
            return Err(MotorError::TooCoarse {
                sections: self.sections_per_phase,
                segments,
            });
        }
        Ok(())
    }

    /// Interior tap turns over all phases.
    fn tap_union(&self) -> BTreeSet<u32> {
        self.taps
            .values()
            .flatten()
            .copied()
            .filter(|&t| t < self.turns_per_phase)
            .collect()
    }

    pub fn is_tap(&self, phase: Phase, turn: u32) -> bool {
        self.taps.get(&phase).is_some_and(|t| t.contains(&turn))
    }

    /// Turn index of every section boundary, from 0 to `turns_per_phase`.
    pub fn boundaries(&self) -> Result<Vec<u32>, MotorError> {
        self.validate()?;
        let turns = self.turns_per_phase;
        let mut cuts = vec![0];
        cuts.extend(self.tap_union());
        cuts.push(turns);

        let lengths: Vec<u32> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
        let total = self.sections_per_phase as i64;
        let ideal: Vec<f64> = lengths
            .iter()
            .map(|&l| total as f64 * l as f64 / turns as f64)
            .collect();
        let mut alloc: Vec<i64> = ideal
            .iter()
            .zip(&lengths)
            .map(|(&q, &l)| (q.floor() as i64).clamp(1, l as i64))
            .collect();

        // largest-remainder adjustment, ties to the lowest segment index
        loop {
            let sum: i64 = alloc.iter().sum();
            if sum == total {
                break;
            }
            let pick = if sum < total {
                (0..alloc.len())
                    .filter(|&i| alloc[i] < lengths[i] as i64)
                    .max_by(|&i, &j| {
                        (ideal[i] - alloc[i] as f64)
                            .total_cmp(&(ideal[j] - alloc[j] as f64))
                            .then(j.cmp(&i))
                    })
            } else {
                (0..alloc.len()).filter(|&i| alloc[i] > 1).min_by(|&i, &j| {
                    (ideal[i] - alloc[i] as f64)
                        .total_cmp(&(ideal[j] - alloc[j] as f64))
                        .then(i.cmp(&j))
                })
            };
            let i = pick.expect("validated section count is feasible");
            alloc[i] += if sum < total { 1 } else { -1 };
        }

        let mut out = Vec::with_capacity(self.sections_per_phase as usize + 1);
        out.push(0);
        for (seg, (&len, &sections)) in lengths.iter().zip(&alloc).enumerate() {
            let sections = sections as u32;
            let (base, extra) = (len / sections, len % sections);
            let mut at = cuts[seg];
            for s in 0..sections {
                at += base + u32::from(s < extra);
                out.push(at);
            }
        }
        Ok(out)
    }
}

/// Per-turn parasitics of the winding and the frame return path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectionParams {
    pub r_per_turn: f64,
    pub l_per_turn: f64,
    pub c_turn_frame_per_turn: f64,
    pub c_turn_turn_per_turn: f64,
    /// Adjacent-section mutual coupling inside each phase; 0 disables it.
    pub coupling_k: f64,
    pub frame_r: f64,
    pub frame_l: f64,
    /// Optional phase-to-phase capacitance per turn between matching
    /// boundaries of neighbouring phases; 0 omits it.
    pub c_phase_phase_per_turn: f64,
}

impl Default for SectionParams {
    /// Synthetic reference values, not measurements of any physical machine.
    fn default() -> Self {
        Self {
            r_per_turn: 0.02,
            l_per_turn: 3e-6,
            c_turn_frame_per_turn: 1.5e-12,
            c_turn_turn_per_turn: 20e-12,
            coupling_k: 0.0,
            frame_r: 0.05,
            frame_l: 50e-9,
            c_phase_phase_per_turn: 0.0,
        }
    }
}

impl SectionParams {
    pub fn validate(&self) -> Result<(), MotorError> {
        let positive = [
            ("r_per_turn", self.r_per_turn),
            ("l_per_turn", self.l_per_turn),
            ("c_turn_frame_per_turn", self.c_turn_frame_per_turn),
            ("c_turn_turn_per_turn", self.c_turn_turn_per_turn),
            ("frame_r", self.frame_r),
            ("frame_l", self.frame_l),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(MotorError::InvalidParameter { name, value });
            }
        }
        if !(0.0..1.0).contains(&self.coupling_k) {
            return Err(MotorError::InvalidParameter {
                name: "coupling_k",
                value: self.coupling_k,
            });
        }
        if !(self.c_phase_phase_per_turn >= 0.0 && self.c_phase_phase_per_turn.is_finite()) {
            return Err(MotorError::InvalidParameter {
                name: "c_phase_phase_per_turn",
                value: self.c_phase_phase_per_turn,
            });
        }
        Ok(())
    }
}

/// A built stator network with its node bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorModel {
    pub network: Network,
    pub spec: WindingSpec,
    pub params: SectionParams,
    /// Turn index of every section boundary, shared by all phases.
    pub boundaries: Vec<u32>,
    /// Node at every `(phase, boundary turn)`.
    pub node_map: BTreeMap<(Phase, u32), NodeId>,
    pub terminals: [NodeId; 3],
    pub star: NodeId,
    pub frame: NodeId,
    /// Faults applied so far, in order.
    pub faults: Vec<FaultSpec>,
}

/// Phase node blocks start right after the reference node.
const FIRST_PHASE_NODE: NodeId = 1;

const PAIRS: [(Phase, Phase); 3] = [(Phase::A, Phase::B), (Phase::B, Phase::C), (Phase::C, Phase::A)];

fn pair_name(x: Phase, y: Phase) -> String {
    // canonical cyclic order AB, BC, CA
    let (p, q) = PAIRS
        .iter()
        .copied()
        .find(|&(p, q)| (p, q) == (x, y) || (q, p) == (x, y))
        .expect("distinct phases");
    format!("{p}{q}")
}

/// Builds the ladder network for `spec` and `params`.
pub fn build_motor(spec: &WindingSpec, params: &SectionParams) -> Result<MotorModel, MotorError> {
    params.validate()?;
    let boundaries = spec.boundaries()?;
    let sections = boundaries.len() - 1;

    let per_phase = 2 * sections;
    let star = 1 + 3 * per_phase;
    let frame = star + 1;
    let frame_mid = star + 2;
    let mut network = Network::new(star + 3);

    let boundary_node = |phase: Phase, i: usize| -> NodeId {
        if i == sections {
            star
        } else {
            1 + phase.index() * per_phase + 2 * i
        }
    };
    let mid_node = |phase: Phase, i: usize| 1 + phase.index() * per_phase + 2 * i + 1;

    for phase in Phase::ALL {
        for i in 0..sections {
            let n = f64::from(boundaries[i + 1] - boundaries[i]);
            let (lo, hi, mid) = (boundary_node(phase, i), boundary_node(phase, i + 1), mid_node(phase, i));
            network.resistor(format!("{phase}.s{i}.r"), lo, mid, n * params.r_per_turn);
            network.inductor(format!("{phase}.s{i}.l"), mid, hi, n * params.l_per_turn);
            network.capacitor(format!("{phase}.s{i}.ct"), lo, hi, params.c_turn_turn_per_turn / n);
            let half = 0.5 * n * params.c_turn_frame_per_turn;
            network.capacitor(format!("{phase}.s{i}.cf0"), lo, frame, half);
            network.capacitor(format!("{phase}.s{i}.cf1"), hi, frame, half);
        }
        if params.coupling_k > 0.0 {
            for i in 1..sections {
                network.couple(
                    format!("{phase}.k{i}"),
                    format!("{phase}.s{}.l", i - 1),
                    format!("{phase}.s{i}.l"),
                    params.coupling_k,
                );
            }
        }
    }

    if params.c_phase_phase_per_turn > 0.0 {
        for (p, q) in PAIRS {
            let name = pair_name(p, q);
            // the star boundary is common to all phases and carries no
            // inter-phase capacitance
            for i in 0..sections {
                let n = f64::from(boundaries[i + 1] - boundaries[i]);
                let c = 0.5 * n * params.c_phase_phase_per_turn;
                network.capacitor(format!("{name}.s{i}.cp0"), boundary_node(p, i), boundary_node(q, i), c);
                if i + 1 < sections {
                    network.capacitor(
                        format!("{name}.s{i}.cp1"),
                        boundary_node(p, i + 1),
                        boundary_node(q, i + 1),
                        c,
                    );
                }
            }
        }
    }

    network.resistor("frame.r", frame, frame_mid, params.frame_r);
    network.inductor("frame.l", frame_mid, GROUND, params.frame_l);

    let mut node_map = BTreeMap::new();
    for phase in Phase::ALL {
        for (i, &turn) in boundaries.iter().enumerate() {
            node_map.insert((phase, turn), boundary_node(phase, i));
        }
    }

    Ok(MotorModel {
        network,
        spec: spec.clone(),
        params: params.clone(),
        terminals: Phase::ALL.map(|p| boundary_node(p, 0)),
        boundaries,
        node_map,
        star,
        frame,
        faults: Vec::new(),
    })
}

/// Which part of the model a node belongs to, with the phase stripped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum NodeRole {
    Ground,
    Boundary(usize),
    Mid(usize),
    Star,
    Frame,
    FrameMid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub symmetric: bool,
    /// Labels of elements that break phase isomorphism.
    pub violations: Vec<String>,
}

#[derive(Serialize)]
struct NodeMapDump<'a> {
    terminals: BTreeMap<Phase, NodeId>,
    star: NodeId,
    frame: NodeId,
    node_count: usize,
    boundaries: Vec<BoundaryDump>,
    taps: &'a BTreeMap<Phase, Vec<u32>>,
}

#[derive(Serialize)]
struct BoundaryDump {
    phase: Phase,
    turn: u32,
    node: NodeId,
}

impl MotorModel {
    pub fn sections(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn terminal(&self, phase: Phase) -> NodeId {
        self.terminals[phase.index()]
    }

    /// Node at a declared tap, a phase terminal (turn 0) or the phase end
    /// (the star point).
    pub fn tap_node(&self, phase: Phase, turn: u32) -> Result<NodeId, MotorError> {
        let accessible =
            turn == 0 || turn == self.spec.turns_per_phase || self.spec.is_tap(phase, turn);
        match self.node_map.get(&(phase, turn)) {
            Some(&node) if accessible => Ok(node),
            _ => Err(MotorError::UnmappedTap { phase, turn }),
        }
    }

    fn role(&self, node: NodeId) -> (Option<Phase>, NodeRole) {
        let per_phase = 2 * self.sections();
        match node {
            GROUND => (None, NodeRole::Ground),
            n if n == self.star => (None, NodeRole::Star),
            n if n == self.frame => (None, NodeRole::Frame),
            n if n == self.frame + 1 => (None, NodeRole::FrameMid),
            n => {
                let local = n - FIRST_PHASE_NODE;
                let phase = Phase::ALL[local / per_phase];
                let offset = local % per_phase;
                let role = if offset % 2 == 0 {
                    NodeRole::Boundary(offset / 2)
                } else {
                    NodeRole::Mid(offset / 2)
                };
                (Some(phase), role)
            }
        }
    }

    /// Checks that the three phases carry identical elements on identical
    /// relative positions, and lists the elements that do not.
    pub fn validate_symmetry(&self) -> SymmetryReport {
        // key: label with phase letters stripped + kind + endpoint roles
        type Key = (String, &'static str, [NodeRole; 2]);
        let mut groups: BTreeMap<Key, Vec<(String, Option<f64>)>> = BTreeMap::new();
        let mut violations = Vec::new();

        for e in self.network.elements() {
            let Some((prefix, rest)) = e.label.split_once('.') else {
                violations.push(e.label.clone());
                continue;
            };
            let phased = prefix.len() <= 2 && prefix.chars().all(|c| Phase::from_letter(c).is_some());
            if !phased {
                if prefix != "frame" {
                    violations.push(e.label.clone());
                }
                continue;
            }
            let mut roles = [self.role(e.a).1, self.role(e.b).1];
            roles.sort();
            let key = (rest.to_string(), e.kind.tag(), roles);
            groups
                .entry(key)
                .or_default()
                .push((e.label.clone(), e.kind.value()));
        }

        for members in groups.values() {
            if members.len() != 3 {
                violations.extend(members.iter().map(|(l, _)| l.clone()));
                continue;
            }
            let values: Vec<Option<f64>> = members.iter().map(|(_, v)| *v).collect();
            if values.iter().all(|v| *v == values[0]) {
                continue;
            }
            // report the odd one out, or all three if they all differ
            for (i, (label, v)) in members.iter().enumerate() {
                let agrees = values
                    .iter()
                    .enumerate()
                    .any(|(j, w)| j != i && w == v);
                if !agrees {
                    violations.push(label.clone());
                }
            }
        }
        violations.sort();
        SymmetryReport {
            symmetric: violations.is_empty(),
            violations,
        }
    }

    /// Returns a copy with element `label` scaled by `factor`.
    pub fn scale_element(&self, label: &str, factor: f64) -> Result<MotorModel, MotorError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(MotorError::InvalidParameter {
                name: "scale factor",
                value: factor,
            });
        }
        let mut out = self.clone();
        let e = out
            .network
            .element_mut(label)
            .ok_or_else(|| MotorError::UnknownElement(label.to_string()))?;
        e.kind = match e.kind {
            ElementKind::Resistor(v) => ElementKind::Resistor(v * factor),
            ElementKind::Inductor(v) => ElementKind::Inductor(v * factor),
            ElementKind::Capacitor(v) => ElementKind::Capacitor(v * factor),
            _ => return Err(MotorError::UnknownElement(label.to_string())),
        };
        Ok(out)
    }

    /// Labels of the turn-to-frame capacitors of one phase.
    pub fn turn_frame_labels(&self, phase: Phase) -> Vec<String> {
        (0..self.sections())
            .flat_map(|i| [format!("{phase}.s{i}.cf0"), format!("{phase}.s{i}.cf1")])
            .collect()
    }

    /// Sum of all turn-to-frame capacitor values.
    pub fn total_frame_capacitance(&self) -> f64 {
        self.network
            .elements()
            .iter()
            .filter(|e| e.label.ends_with(".cf0") || e.label.ends_with(".cf1"))
            .filter_map(|e| e.kind.value())
            .sum()
    }

    /// Same model with phases renamed by `perm` (old phase `p` becomes
    /// `perm[p]`). Phase node blocks are renumbered accordingly, so the
    /// network matrix is permuted rather than merely relabelled.
    pub fn relabel_phases(&self, perm: [Phase; 3]) -> MotorModel {
        let per_phase = 2 * self.sections();
        let first = FIRST_PHASE_NODE;
        let map_node = |n: NodeId| -> NodeId {
            if n >= first && n < first + 3 * per_phase {
                let local = n - first;
                let phase = local / per_phase;
                first + perm[phase].index() * per_phase + local % per_phase
            } else {
                n
            }
        };
        let map_label = |label: &str| -> String {
            match label.split_once('.') {
                Some((prefix, rest)) if prefix.len() <= 2 && prefix.chars().all(|c| Phase::from_letter(c).is_some()) => {
                    let phases: Vec<Phase> = prefix
                        .chars()
                        .map(|c| perm[Phase::from_letter(c).unwrap().index()])
                        .collect();
                    let new_prefix = match phases.as_slice() {
                        [p] => p.to_string(),
                        [p, q] => pair_name(*p, *q),
                        _ => unreachable!(),
                    };
                    format!("{new_prefix}.{rest}")
                }
                _ => label.to_string(),
            }
        };

        let mut network = Network::new(self.network.node_count());
        for e in self.network.elements() {
            network.add(map_label(&e.label), e.kind, map_node(e.a), map_node(e.b));
        }
        for c in self.network.couplings() {
            network.couple(map_label(&c.label), map_label(&c.first), map_label(&c.second), c.k);
        }
        let mut spec = self.spec.clone();
        spec.taps = self
            .spec
            .taps
            .iter()
            .map(|(p, t)| (perm[p.index()], t.clone()))
            .collect();
        let node_map = self
            .node_map
            .iter()
            .map(|(&(p, t), &n)| ((perm[p.index()], t), map_node(n)))
            .collect();
        let mut terminals = self.terminals;
        for p in Phase::ALL {
            terminals[perm[p.index()].index()] = map_node(self.terminals[p.index()]);
        }
        MotorModel {
            network,
            spec,
            params: self.params.clone(),
            boundaries: self.boundaries.clone(),
            node_map,
            terminals,
            star: self.star,
            frame: self.frame,
            faults: self.faults.clone(),
        }
    }

    /// Node map as pretty JSON, for debugging.
    pub fn node_map_json(&self) -> String {
        let dump = NodeMapDump {
            terminals: Phase::ALL.iter().map(|&p| (p, self.terminal(p))).collect(),
            star: self.star,
            frame: self.frame,
            node_count: self.network.node_count(),
            boundaries: self
                .node_map
                .iter()
                .map(|(&(phase, turn), &node)| BoundaryDump { phase, turn, node })
                .collect(),
            taps: &self.spec.taps,
        };
        serde_json::to_string_pretty(&dump).expect("node map serializes")
    }
}
