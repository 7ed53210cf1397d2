//! Frequency-domain linear circuit engine.
//!
//! A [`Network`] is a set of two-terminal elements between numbered nodes,
//! node 0 being the reference (ground plane). Networks are solved one
//! frequency at a time with modified nodal analysis: node voltages plus one
//! current unknown per ideal voltage source or short.

mod lu;
mod mna;

pub use lu::{DenseMatrix, LuFactors};
pub use mna::{
    assemble, branch_current, driving_point_impedance, solve_ac, AcSolution, MnaSystem,
};

use num_complex::Complex64;
use thiserror::Error;

pub type NodeId = usize;

/// The reference node.
pub const GROUND: NodeId = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementKind {
    Resistor(f64),
    Inductor(f64),
    Capacitor(f64),
    VoltageSource(Complex64),
    /// Zero-volt ideal source.
    Short,
}

impl ElementKind {
    pub fn is_source(&self) -> bool {
        matches!(self, ElementKind::VoltageSource(_) | ElementKind::Short)
    }

    /// Element value, or `None` for sources.
    pub fn value(&self) -> Option<f64> {
        match *self {
            ElementKind::Resistor(v) | ElementKind::Inductor(v) | ElementKind::Capacitor(v) => {
                Some(v)
            }
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ElementKind::Resistor(_) => "R",
            ElementKind::Inductor(_) => "L",
            ElementKind::Capacitor(_) => "C",
            ElementKind::VoltageSource(_) => "V",
            ElementKind::Short => "S",
        }
    }
}

/// Two-terminal element. For sources, `a` is the positive terminal and the
/// branch current is the current entering at `a` and leaving at `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub label: String,
    pub kind: ElementKind,
    pub a: NodeId,
    pub b: NodeId,
}

/// Magnetic coupling between two inductor elements, `M = k * sqrt(L1 * L2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub label: String,
    pub first: String,
    pub second: String,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("frequency must be positive and finite, got {0} Hz")]
    InvalidFrequency(f64),
    #[error("element {label}: invalid value {value}")]
    InvalidValue { label: String, value: f64 },
    #[error("element {label}: endpoint {node} outside network of {node_count} nodes")]
    NodeOutOfRange {
        label: String,
        node: NodeId,
        node_count: usize,
    },
    #[error("duplicate element label {0}")]
    DuplicateLabel(String),
    #[error("unknown element label {0}")]
    UnknownLabel(String),
    #[error("coupling {label}: {reason}")]
    InvalidCoupling { label: String, reason: String },
    #[error("singular system: {reason} ({})", .labels.join(", "))]
    SingularSystem { reason: String, labels: Vec<String> },
    #[error("port ({0}, {1}) must join two distinct nodes")]
    InvalidPort(NodeId, NodeId),
    #[error("port ({a}, {b}) is shorted by ideal element(s) {}; impedance is 0 ohm", .labels.join(", "))]
    PortShorted {
        a: NodeId,
        b: NodeId,
        labels: Vec<String>,
    },
}

impl CircuitError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CircuitError::InvalidFrequency(_) => "invalid_frequency",
            CircuitError::InvalidValue { .. } => "invalid_value",
            CircuitError::NodeOutOfRange { .. } => "node_out_of_range",
            CircuitError::DuplicateLabel(_) => "duplicate_label",
            CircuitError::UnknownLabel(_) => "unknown_label",
            CircuitError::InvalidCoupling { .. } => "invalid_coupling",
            CircuitError::SingularSystem { .. } => "singular_system",
            CircuitError::InvalidPort(..) => "invalid_port",
            CircuitError::PortShorted { .. } => "port_shorted",
        }
    }
}

/// Linear RLC network with ideal voltage sources and shorts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    node_count: usize,
    elements: Vec<Element>,
    couplings: Vec<Coupling>,
}

impl Network {
    /// A network with `node_count` nodes, including the reference node 0.
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count: node_count.max(1),
            elements: Vec::new(),
            couplings: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn add_node(&mut self) -> NodeId {
        self.node_count += 1;
        self.node_count - 1
    }

    pub fn element(&self, label: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.label == label)
    }

    pub fn element_mut(&mut self, label: &str) -> Option<&mut Element> {
        self.elements.iter_mut().find(|e| e.label == label)
    }

    /// Adds an element. Values are checked by [`Network::validate`], which
    /// every solve runs.
    pub fn add(&mut self, label: impl Into<String>, kind: ElementKind, a: NodeId, b: NodeId) {
        self.elements.push(Element {
            label: label.into(),
            kind,
            a,
            b,
        });
    }

    pub fn resistor(&mut self, label: impl Into<String>, a: NodeId, b: NodeId, ohms: f64) {
        self.add(label, ElementKind::Resistor(ohms), a, b);
    }

    pub fn inductor(&mut self, label: impl Into<String>, a: NodeId, b: NodeId, henries: f64) {
        self.add(label, ElementKind::Inductor(henries), a, b);
    }

    pub fn capacitor(&mut self, label: impl Into<String>, a: NodeId, b: NodeId, farads: f64) {
        self.add(label, ElementKind::Capacitor(farads), a, b);
    }

    pub fn voltage_source(
        &mut self,
        label: impl Into<String>,
        pos: NodeId,
        neg: NodeId,
        volts: Complex64,
    ) {
        self.add(label, ElementKind::VoltageSource(volts), pos, neg);
    }

    pub fn short(&mut self, label: impl Into<String>, a: NodeId, b: NodeId) {
        self.add(label, ElementKind::Short, a, b);
    }

    pub fn couple(
        &mut self,
        label: impl Into<String>,
        first: impl Into<String>,
        second: impl Into<String>,
        k: f64,
    ) {
        self.couplings.push(Coupling {
            label: label.into(),
            first: first.into(),
            second: second.into(),
            k,
        });
    }

    /// Sources and shorts in MNA order.
    pub fn sources(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| e.kind.is_source())
    }

    pub fn source_count(&self) -> usize {
        self.sources().count()
    }

    /// Checks element values, endpoints, labels and couplings.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.elements {
            if !seen.insert(e.label.as_str()) {
                return Err(CircuitError::DuplicateLabel(e.label.clone()));
            }
            for node in [e.a, e.b] {
                if node >= self.node_count {
                    return Err(CircuitError::NodeOutOfRange {
                        label: e.label.clone(),
                        node,
                        node_count: self.node_count,
                    });
                }
            }
            match e.kind {
                ElementKind::Resistor(v) | ElementKind::Inductor(v) | ElementKind::Capacitor(v) => {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(CircuitError::InvalidValue {
                            label: e.label.clone(),
                            value: v,
                        });
                    }
                }
                ElementKind::VoltageSource(v) => {
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(CircuitError::InvalidValue {
                            label: e.label.clone(),
                            value: v.norm(),
                        });
                    }
                }
                ElementKind::Short => {}
            }
        }
        for c in &self.couplings {
            if !(0.0..1.0).contains(&c.k) {
                return Err(CircuitError::InvalidCoupling {
                    label: c.label.clone(),
                    reason: format!("coefficient {} outside [0, 1)", c.k),
                });
            }
            if c.first == c.second {
                return Err(CircuitError::InvalidCoupling {
                    label: c.label.clone(),
                    reason: "couples an inductor to itself".into(),
                });
            }
            for name in [&c.first, &c.second] {
                match self.element(name) {
                    Some(Element {
                        kind: ElementKind::Inductor(_),
                        ..
                    }) => {}
                    Some(_) => {
                        return Err(CircuitError::InvalidCoupling {
                            label: c.label.clone(),
                            reason: format!("{name} is not an inductor"),
                        })
                    }
                    None => return Err(CircuitError::UnknownLabel(name.clone())),
                }
            }
        }
        Ok(())
    }
}
