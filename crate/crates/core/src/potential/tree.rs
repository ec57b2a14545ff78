use super::PotentialError;
use crate::numeric::CompensatedSum;
use crate::topology::{Edge, RootedTree};

/// A unit current flow from the root to the boundary of a ball.
///
/// `flow[v]` is the current on the edge from `v`'s parent to `v`, oriented
/// away from the root; it is zero for the root and outside the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMap {
    radius: u32,
    flow: Vec<f64>,
}

impl FlowMap {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Current on the edge into `child`.
    pub fn current(&self, child: u32) -> f64 {
        self.flow[child as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.flow
    }

    /// Inflow minus outflow at `v` (zero at internal vertices).
    pub fn node_residual(&self, tree: &RootedTree, v: u32) -> f64 {
        let inflow = if v == 0 { 1.0 } else { self.flow[v as usize] };
        let out: f64 = tree.children(v).iter().map(|&c| self.flow[c as usize]).sum();
        inflow - out
    }

    /// Total current leaving the root.
    pub fn root_outflow(&self, tree: &RootedTree) -> f64 {
        tree.children(0).iter().map(|&c| self.flow[c as usize]).sum()
    }
}

/// Leafward resistance recursion; returns `R(v)` for every vertex in the
/// ball (`R = 0` on the boundary, infinite for dead ends).
fn subtree_resistances(
    tree: &RootedTree,
    weight: &impl Fn(Edge) -> f64,
    radius: u32,
) -> Result<Vec<f64>, PotentialError> {
    if radius == 0 {
        return Err(PotentialError::EmptyBall);
    }
    let mut r = vec![f64::INFINITY; tree.len()];
    // children have larger indices than their parents
    for v in (0..tree.len() as u32).rev() {
        let d = tree.depth(v);
        if d > radius {
            continue;
        }
        if d == radius {
            r[v as usize] = 0.0;
            continue;
        }
        let mut g = CompensatedSum::new();
        for &c in tree.children(v) {
            let e = tree.edge_to_parent(c);
            let w = weight(e);
            if w.is_nan() || w <= 0.0 {
                return Err(PotentialError::ZeroWeightEdge(e));
            }
            let rc = r[c as usize];
            if rc.is_finite() {
                g.add(1.0 / (1.0 / w + rc));
            }
        }
        let g = g.value();
        r[v as usize] = if g > 0.0 { 1.0 / g } else { f64::INFINITY };
    }
    if !r[0].is_finite() {
        return Err(PotentialError::DisconnectedBall { radius });
    }
    Ok(r)
}

/// Effective resistance between the root and the boundary of the radius-`radius` ball.
pub fn tree_effective_resistance(
    tree: &RootedTree,
    weight: impl Fn(Edge) -> f64,
    radius: u32,
) -> Result<f64, PotentialError> {
    Ok(subtree_resistances(tree, &weight, radius)?[0])
}

/// The unit current flow from the root to the ball boundary: the current
/// entering a vertex splits among its children in proportion to the
/// conductance `1 / (1/C(e) + R(child))` of each branch.
pub fn tree_unit_current_flow(
    tree: &RootedTree,
    weight: impl Fn(Edge) -> f64,
    radius: u32,
) -> Result<FlowMap, PotentialError> {
    let r = subtree_resistances(tree, &weight, radius)?;
    let mut flow = vec![0.0; tree.len()];
    let mut inflow = vec![0.0; tree.len()];
    inflow[0] = 1.0;
    let mut branch = Vec::new();
    for v in 0..tree.len() as u32 {
        if tree.depth(v) >= radius {
            continue;
        }
        let current = inflow[v as usize];
        if current == 0.0 {
            continue;
        }
        branch.clear();
        let mut total = CompensatedSum::new();
        for &c in tree.children(v) {
            let rc = r[c as usize];
            let g = if rc.is_finite() {
                1.0 / (1.0 / weight(tree.edge_to_parent(c)) + rc)
            } else {
                0.0
            };
            branch.push(g);
            total.add(g);
        }
        let total = total.value();
        for (&c, &g) in tree.children(v).iter().zip(&branch) {
            let i = current * g / total;
            flow[c as usize] = i;
            inflow[c as usize] = i;
        }
    }
    Ok(FlowMap { radius, flow })
}

/// Voltages `F(v) = sum over root-path edges of i(e) / C(e)` for every vertex
/// of the flow's ball; vertices outside the ball get `NaN`.
pub fn potential_from_flow(
    tree: &RootedTree,
    weight: impl Fn(Edge) -> f64,
    flow: &FlowMap,
) -> Result<Vec<f64>, PotentialError> {
    let mut f = vec![f64::NAN; tree.len()];
    f[0] = 0.0;
    for v in 1..tree.len() as u32 {
        if tree.depth(v) > flow.radius {
            continue;
        }
        let e = tree.edge_to_parent(v);
        let w = weight(e);
        if w.is_nan() || w <= 0.0 {
            return Err(PotentialError::ZeroWeightEdge(e));
        }
        let p = tree.parent(v).expect("non-root has a parent");
        f[v as usize] = f[p as usize] + flow.flow[v as usize] / w;
    }
    Ok(f)
}

/// `F(v)` for a single vertex, summed along its root path.
pub(crate) fn voltage_at(tree: &RootedTree, weight: impl Fn(Edge) -> f64, flow: &FlowMap, mut v: u32) -> f64 {
    let mut s = CompensatedSum::new();
    while v != 0 {
        s.add(flow.flow[v as usize] / weight(tree.edge_to_parent(v)));
        v = tree.parent(v).expect("non-root has a parent");
    }
    s.value()
}
