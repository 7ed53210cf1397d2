//! Random networks and reference solvers shared by the integration tests.
//!
//! The reference solver deliberately uses a different formulation from the
//! library: every inductor gets its own branch-current unknown (so mutual
//! coupling enters as plain `jwM` terms), and the system is solved by
//! Gauss-Jordan elimination with full pivoting.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stator_emc::circuit::{ElementKind, Network, GROUND};
use stator_emc::Complex64;

pub mod fft;

pub type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_passive(rng: &mut ChaCha8Rng) -> ElementKind {
    match rng.gen_range(0..4) {
        0 | 1 => ElementKind::Resistor(log_uniform(rng, 1.0, 1e4)),
        2 => ElementKind::Inductor(log_uniform(rng, 1e-7, 1e-3)),
        _ => ElementKind::Capacitor(log_uniform(rng, 1e-12, 1e-7)),
    }
}

pub struct Spec {
    /// Node count including ground.
    pub nodes: usize,
    pub extra_elements: usize,
    pub sources: usize,
    pub shorts: usize,
    pub couplings: usize,
}

struct Forest(Vec<usize>);

impl Forest {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
    fn join(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

/// Connected random network. Sources and shorts never form a loop and no
/// two shorts connect the same pair, so the system is solvable.
pub fn random_network(rng: &mut ChaCha8Rng, spec: &Spec) -> Network {
    let n = spec.nodes;
    let mut net = Network::new(n);
    let mut count = 0;
    let mut label = |p: &str| {
        count += 1;
        format!("{p}{count}")
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        net.add(label("t"), random_passive(rng), i, j);
    }
    for _ in 0..spec.extra_elements {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        while b == a {
            b = rng.gen_range(0..n);
        }
        net.add(label("x"), random_passive(rng), a, b);
    }
    let mut forest = Forest((0..n).collect());
    let mut placed = 0;
    let mut attempts = 0;
    while placed < spec.sources + spec.shorts && attempts < 1000 {
        attempts += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b || !forest.join(a, b) {
            continue;
        }
        if placed < spec.sources {
            let v = C::from_polar(log_uniform(rng, 0.1, 10.0), rng.gen_range(-3.0..3.0));
            net.voltage_source(label("v"), a, b, v);
        } else {
            net.short(label("s"), a, b);
        }
        placed += 1;
    }
    let inductors: Vec<String> = net
        .elements()
        .iter()
        .filter(|e| matches!(e.kind, ElementKind::Inductor(_)))
        .map(|e| e.label.clone())
        .collect();
    if inductors.len() >= 2 {
        let mut used = std::collections::BTreeSet::new();
        for _ in 0..spec.couplings {
            let i = rng.gen_range(0..inductors.len());
            let j = rng.gen_range(0..inductors.len());
            if i == j || !used.insert((i.min(j), i.max(j))) {
                continue;
            }
            let k = rng.gen_range(0.0..0.9);
            net.couple(label("k"), &inductors[i], &inductors[j], k);
        }
    }
    net
}

pub fn random_passive_network(rng: &mut ChaCha8Rng, nodes: usize, couplings: usize) -> Network {
    let extra = rng.gen_range(0..nodes + 1);
    random_network(
        rng,
        &Spec {
            nodes,
            extra_elements: extra,
            sources: 0,
            shorts: 0,
            couplings,
        },
    )
}

pub fn log_frequencies(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Gauss-Jordan elimination with full pivoting; `None` when singular.
pub fn gauss_jordan(mut a: Vec<Vec<C>>, mut b: Vec<C>) -> Option<Vec<C>> {
    let n = b.len();
    let mut col_of: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for r in k..n {
            for c in k..n {
                let v = a[r][c].norm();
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best == 0.0 {
            return None;
        }
        a.swap(k, pr);
        b.swap(k, pr);
        for row in a.iter_mut() {
            row.swap(k, pc);
        }
        col_of.swap(k, pc);
        let p = a[k][k];
        for c in 0..n {
            a[k][c] /= p;
        }
        b[k] /= p;
        for r in 0..n {
            if r != k && a[r][k] != C::new(0.0, 0.0) {
                let f = a[r][k];
                for c in 0..n {
                    let t = f * a[k][c];
                    a[r][c] -= t;
                }
                let t = f * b[k];
                b[r] -= t;
            }
        }
    }
    let mut x = vec![C::new(0.0, 0.0); n];
    for k in 0..n {
        x[col_of[k]] = b[k];
    }
    Some(x)
}

pub struct Reference {
    /// Index 0 is ground.
    pub voltages: Vec<C>,
    /// Per element in network order: current from `a` to `b`.
    pub currents: Vec<C>,
}

/// Reference solve with extra `injections` (node, amps into node).
pub fn reference_solve(net: &Network, freq: f64, injections: &[(usize, C)]) -> Option<Reference> {
    let w = 2.0 * std::f64::consts::PI * freq;
    let jw = C::new(0.0, w);
    let n = net.node_count();
    let elements = net.elements();

    // Unknowns: node voltages 1..n, then one current per branch element
    // (inductors, sources, shorts).
    let mut branch_of = vec![None; elements.len()];
    let mut m = n - 1;
    for (i, e) in elements.iter().enumerate() {
        if matches!(
            e.kind,
            ElementKind::Inductor(_) | ElementKind::VoltageSource(_) | ElementKind::Short
        ) {
            branch_of[i] = Some(m);
            m += 1;
        }
    }
    let mut a = vec![vec![C::new(0.0, 0.0); m]; m];
    let mut b = vec![C::new(0.0, 0.0); m];
    let v = |node: usize| if node == GROUND { None } else { Some(node - 1) };

    for &(node, amps) in injections {
        if let Some(r) = v(node) {
            b[r] += amps;
        }
    }
    for (i, e) in elements.iter().enumerate() {
        match e.kind {
            ElementKind::Resistor(_) | ElementKind::Capacitor(_) => {
                let y = match e.kind {
                    ElementKind::Resistor(r) => C::new(1.0 / r, 0.0),
                    ElementKind::Capacitor(c) => jw * c,
                    _ => unreachable!(),
                };
                for (p, sp) in [(e.a, 1.0), (e.b, -1.0)] {
                    for (q, sq) in [(e.a, 1.0), (e.b, -1.0)] {
                        if let (Some(rp), Some(rq)) = (v(p), v(q)) {
                            a[rp][rq] += y * (sp * sq);
                        }
                    }
                }
            }
            ElementKind::Inductor(l) => {
                let k = branch_of[i].unwrap();
                incidence(&mut a, v(e.a), v(e.b), k);
                a[k][k] -= jw * l;
            }
            ElementKind::VoltageSource(src) => {
                let k = branch_of[i].unwrap();
                incidence(&mut a, v(e.a), v(e.b), k);
                b[k] = src;
            }
            ElementKind::Short => {
                let k = branch_of[i].unwrap();
                incidence(&mut a, v(e.a), v(e.b), k);
            }
        }
    }
    for c in net.couplings() {
        let find = |label: &str| elements.iter().position(|e| e.label == label).unwrap();
        let (i, j) = (find(&c.first), find(&c.second));
        let (ElementKind::Inductor(l1), ElementKind::Inductor(l2)) = (elements[i].kind, elements[j].kind)
        else {
            return None;
        };
        let mutual = jw * (c.k * (l1 * l2).sqrt());
        let (bi, bj) = (branch_of[i].unwrap(), branch_of[j].unwrap());
        a[bi][bj] -= mutual;
        a[bj][bi] -= mutual;
    }

    let x = gauss_jordan(a, b)?;
    let mut voltages = vec![C::new(0.0, 0.0); n];
    voltages[1..n].copy_from_slice(&x[..n - 1]);
    let currents = elements
        .iter()
        .enumerate()
        .map(|(i, e)| match (branch_of[i], e.kind) {
            (Some(k), _) => x[k],
            (None, ElementKind::Resistor(r)) => (voltages[e.a] - voltages[e.b]) / r,
            (None, ElementKind::Capacitor(c)) => (voltages[e.a] - voltages[e.b]) * jw * c,
            _ => unreachable!(),
        })
        .collect();
    Some(Reference { voltages, currents })
}

/// Branch current `I` leaves node `a`, enters node `b`; branch row reads
/// `V_a - V_b - (branch drop) = source`.
fn incidence(a: &mut [Vec<C>], ra: Option<usize>, rb: Option<usize>, k: usize) {
    let one = C::new(1.0, 0.0);
    if let Some(r) = ra {
        a[r][k] += one;
        a[k][r] += one;
    }
    if let Some(r) = rb {
        a[r][k] -= one;
        a[k][r] -= one;
    }
}

pub fn max_norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

use stator_emc::circuit::{assemble, branch_current, driving_point_impedance, solve_ac};

/// Random network for the solver-equivalence checks: up to `max_nodes`
/// nodes, 1 to 3 sources, sometimes a short and mutual coupling.
pub fn random_driven_network(rng: &mut ChaCha8Rng, max_nodes: usize) -> Network {
    let nodes = rng.gen_range(3..=max_nodes);
    let spec = Spec {
        nodes,
        extra_elements: rng.gen_range(0..=nodes),
        sources: rng.gen_range(1..=3),
        shorts: rng.gen_range(0..=1),
        couplings: rng.gen_range(0..=2),
    };
    random_network(rng, &spec)
}

/// `max |V_lib - V_ref| / max |V_ref|` over all nodes.
pub fn oracle_error(net: &Network, freq: f64) -> f64 {
    let lib = solve_ac(net, freq).expect("library solve");
    let reference = reference_solve(net, freq, &[]).expect("reference solve");
    max_diff(&lib.node_voltages, &reference.voltages) / max_norm(&reference.voltages)
}

/// Worst KCL imbalance over the non-reference nodes, relative to the largest
/// branch current. Currents come from the library.
pub fn kcl_error(net: &Network, freq: f64) -> f64 {
    let sol = solve_ac(net, freq).expect("library solve");
    let mut sums = vec![C::new(0.0, 0.0); net.node_count()];
    let mut largest: f64 = 0.0;
    for e in net.elements() {
        let i = branch_current(&sol, net, &e.label, freq).expect("branch current");
        sums[e.a] -= i;
        sums[e.b] += i;
        largest = largest.max(i.norm());
    }
    max_norm(&sums[1..]) / largest
}

/// Transfer impedances between two random port pairs, both directions,
/// relative to the larger node-voltage norm of the two injection solves.
pub fn reciprocity_error(net: &Network, freq: f64, rng: &mut ChaCha8Rng) -> f64 {
    let n = net.node_count();
    let sys = assemble(net, freq).expect("assemble");
    let pair = |rng: &mut ChaCha8Rng| {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        while b == a {
            b = rng.gen_range(0..n);
        }
        (a, b)
    };
    let (p, q) = (pair(rng), pair(rng));
    let inject = |(a, b): (usize, usize)| {
        let mut rhs = vec![C::new(0.0, 0.0); sys.dim()];
        if a != GROUND {
            rhs[a - 1] += 1.0;
        }
        if b != GROUND {
            rhs[b - 1] -= 1.0;
        }
        sys.solve_with(&rhs).expect("solve")
    };
    let at = |x: &[C], node: usize| if node == GROUND { C::new(0.0, 0.0) } else { x[node - 1] };
    let xp = inject(p);
    let xq = inject(q);
    let z_qp = at(&xp, q.0) - at(&xp, q.1);
    let z_pq = at(&xq, p.0) - at(&xq, p.1);
    let scale = max_norm(&xp[..n - 1]).max(max_norm(&xq[..n - 1]));
    (z_qp - z_pq).norm() / scale
}

/// Real part of the driving-point impedance at a random port.
pub fn passivity_margin(net: &Network, freq: f64, rng: &mut ChaCha8Rng) -> f64 {
    let n = net.node_count();
    let a = rng.gen_range(1..n);
    let b = rng.gen_range(0..a);
    driving_point_impedance(net, (a, b), freq).expect("impedance").re
}
