use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::lu::{DenseMatrix, LuFactors};
use super::{CircuitError, Element, ElementKind, Network, NodeId, GROUND};

const MAX_REFINE_STEPS: usize = 4;
const RESIDUAL_MAX: f64 = 1e-9;
const PROBE_LABEL: &str = "__port_probe";

/// Assembled modified-nodal system `matrix * x = rhs`.
///
/// Unknowns `0..node_unknowns` are the voltages of nodes `1..node_count`;
/// the remaining unknowns are source currents in [`Network::sources`] order.
#[derive(Debug, Clone)]
pub struct MnaSystem {
    pub freq: f64,
    pub node_unknowns: usize,
    pub matrix: DenseMatrix,
    pub rhs: Vec<Complex64>,
    pub source_labels: Vec<String>,
}

impl MnaSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Solves the system for an arbitrary right-hand side, e.g. a unit
    /// current injection.
    pub fn solve_with(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>, CircuitError> {
        let lu = LuFactors::factor(&self.matrix).map_err(|zp| self.singular(zp.column))?;
        refine(&self.matrix, &lu, rhs).ok_or_else(|| CircuitError::SingularSystem {
            reason: format!("backward error above {RESIDUAL_MAX:e} at {:e} Hz", self.freq),
            labels: Vec::new(),
        })
    }

    fn singular(&self, column: usize) -> CircuitError {
        let label = if column < self.node_unknowns {
            format!("node {}", column + 1)
        } else {
            self.source_labels[column - self.node_unknowns].clone()
        };
        CircuitError::SingularSystem {
            reason: format!("zero pivot at {:e} Hz", self.freq),
            labels: vec![label],
        }
    }
}

/// Node voltages and source currents at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub freq: f64,
    /// One entry per node; entry 0 is the reference and always zero.
    pub node_voltages: Vec<Complex64>,
    /// One entry per source or short, in [`Network::sources`] order.
    pub source_currents: Vec<Complex64>,
}

impl AcSolution {
    pub fn voltage(&self, node: NodeId) -> Complex64 {
        self.node_voltages[node]
    }
}

fn omega(freq: f64) -> Result<f64, CircuitError> {
    if freq > 0.0 && freq.is_finite() {
        Ok(2.0 * PI * freq)
    } else {
        Err(CircuitError::InvalidFrequency(freq))
    }
}

#[inline]
fn unknown(node: NodeId) -> Option<usize> {
    (node != GROUND).then(|| node - 1)
}

fn stamp(m: &mut DenseMatrix, a: NodeId, b: NodeId, c: NodeId, d: NodeId, y: Complex64) {
    // current leaving a toward b caused by voltage (v_c - v_d)
    if let Some(ra) = unknown(a) {
        if let Some(cc) = unknown(c) {
            m.add(ra, cc, y);
        }
        if let Some(cd) = unknown(d) {
            m.add(ra, cd, -y);
        }
    }
    if let Some(rb) = unknown(b) {
        if let Some(cc) = unknown(c) {
            m.add(rb, cc, -y);
        }
        if let Some(cd) = unknown(d) {
            m.add(rb, cd, y);
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
}

/// Mutually coupled inductor groups: element indices and the admittance
/// matrix `(j w L)^-1` over the group's branch voltages.
struct InductorGroup {
    members: Vec<usize>,
    admittance: Vec<Complex64>,
}

fn coupled_groups(network: &Network, w: f64) -> Result<Vec<InductorGroup>, CircuitError> {
    if network.couplings().is_empty() {
        return Ok(Vec::new());
    }
    let index: HashMap<&str, usize> = network
        .elements()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.label.as_str(), i))
        .collect();
    let n = network.elements().len();
    let mut uf = UnionFind::new(n);
    let mut pairs = Vec::new();
    for c in network.couplings() {
        let i = index[c.first.as_str()];
        let j = index[c.second.as_str()];
        uf.union(i, j);
        pairs.push((i, j, c.k, c.label.as_str()));
    }
    let mut by_root: Vec<(usize, Vec<usize>)> = Vec::new();
    for &(i, j, _, _) in &pairs {
        for x in [i, j] {
            let root = uf.find(x);
            match by_root.iter_mut().find(|(r, _)| *r == root) {
                Some((_, members)) => {
                    if !members.contains(&x) {
                        members.push(x)
                    }
                }
                None => by_root.push((root, vec![x])),
            }
        }
    }

    let inductance = |i: usize| match network.elements()[i].kind {
        ElementKind::Inductor(l) => l,
        _ => unreachable!("validated"),
    };

    let mut groups = Vec::with_capacity(by_root.len());
    for (_, mut members) in by_root {
        members.sort_unstable();
        let m = members.len();
        let pos = |x: usize| members.iter().position(|&y| y == x).unwrap();
        let mut z = DenseMatrix::zeros(m);
        for (p, &i) in members.iter().enumerate() {
            z.set(p, p, Complex64::new(0.0, w * inductance(i)));
        }
        let mut first_label = "";
        for &(i, j, k, label) in &pairs {
            if uf.find(i) != uf.find(members[0]) {
                continue;
            }
            first_label = label;
            let mutual = Complex64::new(0.0, w * k * (inductance(i) * inductance(j)).sqrt());
            z.add(pos(i), pos(j), mutual);
            z.add(pos(j), pos(i), mutual);
        }
        let lu = LuFactors::factor(&z).map_err(|_| CircuitError::InvalidCoupling {
            label: first_label.to_string(),
            reason: "coupled inductance matrix is singular".into(),
        })?;
        let mut admittance = vec![Complex64::new(0.0, 0.0); m * m];
        for col in 0..m {
            let mut e = vec![Complex64::new(0.0, 0.0); m];
            e[col] = Complex64::new(1.0, 0.0);
            let x = lu.solve(&e);
            for row in 0..m {
                admittance[row * m + col] = x[row];
            }
        }
        groups.push(InductorGroup {
            members,
            admittance,
        });
    }
    Ok(groups)
}

fn admittance(kind: &ElementKind, w: f64) -> Complex64 {
    match *kind {
        ElementKind::Resistor(r) => Complex64::new(1.0 / r, 0.0),
        ElementKind::Capacitor(c) => Complex64::new(0.0, w * c),
        ElementKind::Inductor(l) => Complex64::new(0.0, -1.0 / (w * l)),
        ElementKind::VoltageSource(_) | ElementKind::Short => unreachable!("sources have no admittance"),
    }
}

/// Builds the modified-nodal system of `network` at `freq`.
pub fn assemble(network: &Network, freq: f64) -> Result<MnaSystem, CircuitError> {
    let w = omega(freq)?;
    network.validate()?;

    let node_unknowns = network.node_count() - 1;
    let source_labels: Vec<String> = network.sources().map(|e| e.label.clone()).collect();
    let dim = node_unknowns + source_labels.len();
    let mut matrix = DenseMatrix::zeros(dim);
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim];

    let groups = coupled_groups(network, w)?;
    let mut in_group = vec![false; network.elements().len()];
    for g in &groups {
        for &i in &g.members {
            in_group[i] = true;
        }
    }

    let one = Complex64::new(1.0, 0.0);
    let mut source_row = node_unknowns;
    for (i, e) in network.elements().iter().enumerate() {
        match e.kind {
            ElementKind::VoltageSource(_) | ElementKind::Short => {
                let v = match e.kind {
                    ElementKind::VoltageSource(v) => v,
                    _ => Complex64::new(0.0, 0.0),
                };
                // branch current enters at a, leaves at b
                if let Some(ra) = unknown(e.a) {
                    matrix.add(ra, source_row, one);
                    matrix.add(source_row, ra, one);
                }
                if let Some(rb) = unknown(e.b) {
                    matrix.add(rb, source_row, -one);
                    matrix.add(source_row, rb, -one);
                }
                rhs[source_row] = v;
                source_row += 1;
            }
            _ if in_group[i] => {}
            ref kind => stamp(&mut matrix, e.a, e.b, e.a, e.b, admittance(kind, w)),
        }
    }

    for g in &groups {
        let m = g.members.len();
        for (p, &i) in g.members.iter().enumerate() {
            let ei = &network.elements()[i];
            for (q, &j) in g.members.iter().enumerate() {
                let ej = &network.elements()[j];
                stamp(&mut matrix, ei.a, ei.b, ej.a, ej.b, g.admittance[p * m + q]);
            }
        }
    }

    Ok(MnaSystem {
        freq,
        node_unknowns,
        matrix,
        rhs,
        source_labels,
    })
}

/// Catches floating subnetworks and loops of ideal sources before factoring,
/// so the error names the offending parts.
fn check_topology(network: &Network) -> Result<(), CircuitError> {
    let n = network.node_count();
    let mut all = UnionFind::new(n);
    let mut sources = UnionFind::new(n);
    for e in network.elements() {
        all.union(e.a, e.b);
        if e.kind.is_source() && !sources.union(e.a, e.b) {
            return Err(CircuitError::SingularSystem {
                reason: "loop of ideal voltage sources/shorts".into(),
                labels: vec![e.label.clone()],
            });
        }
    }
    let floating: Vec<NodeId> = (1..n).filter(|&v| all.find(v) != all.find(GROUND)).collect();
    if !floating.is_empty() {
        let mut labels: Vec<String> = floating.iter().map(|v| format!("node {v}")).collect();
        labels.extend(
            network
                .elements()
                .iter()
                .filter(|e| floating.contains(&e.a) || floating.contains(&e.b))
                .map(|e| e.label.clone()),
        );
        return Err(CircuitError::SingularSystem {
            reason: "floating subnetwork".into(),
            labels,
        });
    }
    Ok(())
}

fn norm_inf(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sum of floating-point terms carried in twice working precision.
#[derive(Default)]
struct Accumulator {
    hi: f64,
    lo: f64,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let t = s - self.hi;
        self.lo += (self.hi - (s - t)) + (x - t);
        self.hi = s;
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.lo += a.mul_add(b, -p);
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// `b - A x` with compensated dot products, so the residual is accurate even
/// when it is far below the rounding level of `A x`.
fn residual(matrix: &DenseMatrix, x: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
    (0..matrix.dim())
        .map(|r| {
            let (mut re, mut im) = (Accumulator::default(), Accumulator::default());
            re.add(rhs[r].re);
            im.add(rhs[r].im);
            for (a, xj) in matrix.row(r).iter().zip(x) {
                if *a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                re.add_product(-a.re, xj.re);
                re.add_product(a.im, xj.im);
                im.add_product(-a.re, xj.im);
                im.add_product(-a.im, xj.re);
            }
            Complex64::new(re.value(), im.value())
        })
        .collect()
}

/// Solve plus iterative refinement against an extra-precision residual,
/// stopping once corrections no longer shrink. `None` when the backward
/// error stays above tolerance or the result is not finite.
fn refine(matrix: &DenseMatrix, lu: &LuFactors, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let a_norm = (0..matrix.dim())
        .map(|r| matrix.row(r).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    // normwise backward error: |r| / (|A| |x| + |b|)
    let scale = |x: &[Complex64]| a_norm * norm_inf(x) + norm_inf(rhs);
    let mut x = lu.solve(rhs);
    let mut r = residual(matrix, &x, rhs);
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_REFINE_STEPS {
        let dx = lu.solve(&r);
        let step = norm_inf(&dx);
        if !(step < 0.5 * last_step) {
            break;
        }
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        r = residual(matrix, &x, rhs);
        last_step = step;
        if step <= f64::EPSILON * norm_inf(&x) {
            break;
        }
    }
    let finite = x.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    (finite && norm_inf(&r) <= RESIDUAL_MAX * scale(&x)).then_some(x)
}

/// Solves `network` at `freq`.
pub fn solve_ac(network: &Network, freq: f64) -> Result<AcSolution, CircuitError> {
    let system = assemble(network, freq)?;
    check_topology(network)?;
    let x = system.solve_with(&system.rhs)?;

    let mut node_voltages = Vec::with_capacity(network.node_count());
    node_voltages.push(Complex64::new(0.0, 0.0));
    node_voltages.extend_from_slice(&x[..system.node_unknowns]);
    Ok(AcSolution {
        freq,
        node_voltages,
        source_currents: x[system.node_unknowns..].to_vec(),
    })
}

/// Impedance seen by a 1 V probe source placed across `port`.
pub fn driving_point_impedance(
    network: &Network,
    port: (NodeId, NodeId),
    freq: f64,
) -> Result<Complex64, CircuitError> {
    let (a, b) = port;
    if a == b || a >= network.node_count() || b >= network.node_count() {
        return Err(CircuitError::InvalidPort(a, b));
    }
    let mut shorts = UnionFind::new(network.node_count());
    let mut short_labels = Vec::new();
    for e in network.elements() {
        if e.kind == ElementKind::Short {
            shorts.union(e.a, e.b);
            short_labels.push(e);
        }
    }
    if shorts.find(a) == shorts.find(b) {
        let root = shorts.find(a);
        let labels = short_labels
            .iter()
            .filter(|e| shorts.find(e.a) == root)
            .map(|e| e.label.clone())
            .collect();
        return Err(CircuitError::PortShorted { a, b, labels });
    }

    let mut probed = network.clone();
    let mut label = PROBE_LABEL.to_string();
    while probed.element(&label).is_some() {
        label.push('_');
    }
    probed.voltage_source(label, a, b, Complex64::new(1.0, 0.0));
    let solution = solve_ac(&probed, freq)?;
    let current = *solution
        .source_currents
        .last()
        .expect("probe source was appended last");
    // the probe's branch current enters at its positive node, so the current
    // delivered into the port is its negative
    let delivered = -current;
    let z = Complex64::new(1.0, 0.0) / delivered;
    if network
        .elements()
        .iter()
        .any(|e| matches!(e.kind, ElementKind::VoltageSource(_)))
    {
        return Ok(z);
    }
    // Without internal sources the real part equals the resistor dissipation
    // per |I|^2, which avoids cancellation when the port is nearly reactive.
    let dissipated: f64 = network
        .elements()
        .iter()
        .filter_map(|e| match e.kind {
            ElementKind::Resistor(r) => {
                Some((solution.voltage(e.a) - solution.voltage(e.b)).norm_sqr() / r)
            }
            _ => None,
        })
        .sum();
    Ok(Complex64::new(dissipated / delivered.norm_sqr(), z.im))
}

/// Current through the element named `label`, from its first node to its
/// second.
pub fn branch_current(
    solution: &AcSolution,
    network: &Network,
    label: &str,
    freq: f64,
) -> Result<Complex64, CircuitError> {
    let w = omega(freq)?;
    let (index, element): (usize, &Element) = network
        .elements()
        .iter()
        .enumerate()
        .find(|(_, e)| e.label == label)
        .ok_or_else(|| CircuitError::UnknownLabel(label.to_string()))?;
    let drop = |e: &Element| solution.voltage(e.a) - solution.voltage(e.b);

    match element.kind {
        ElementKind::VoltageSource(_) | ElementKind::Short => {
            let k = network
                .sources()
                .position(|e| e.label == label)
                .expect("element is a source");
            Ok(solution.source_currents[k])
        }
        ElementKind::Inductor(_) => {
            let coupled = network
                .couplings()
                .iter()
                .any(|c| c.first == label || c.second == label);
            if !coupled {
                return Ok(drop(element) * admittance(&element.kind, w));
            }
            let groups = coupled_groups(network, w)?;
            let g = groups
                .iter()
                .find(|g| g.members.contains(&index))
                .expect("coupled inductor belongs to a group");
            let m = g.members.len();
            let p = g.members.iter().position(|&i| i == index).unwrap();
            Ok(g.members
                .iter()
                .enumerate()
                .map(|(q, &j)| g.admittance[p * m + q] * drop(&network.elements()[j]))
                .sum())
        }
        ref kind => Ok(drop(element) * admittance(kind, w)),
    }
}
