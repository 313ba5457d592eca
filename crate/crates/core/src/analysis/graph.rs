//! Dependency graph, cycle detection and evaluation layers.
//!
//! Nodes are streams (inputs, then outputs) followed by triggers. Synchronous
//! and window accesses order evaluation within a cycle. Hold accesses order it
//! too, except inside a cycle of holds, where the reader sees whichever value
//! is current at its position in the fixed evaluation order. Offset accesses
//! never constrain order: they skip a value written in the current cycle.

use crate::lang::ast::SpecificationAst;

use super::names::{accesses, parts, Access, Decl, Names, Part};

pub(crate) struct Graph {
    /// `edges[v]` = (dependency, kind).
    pub edges: Vec<Vec<(usize, Access)>>,
}

impl Graph {
    pub(crate) fn build(ast: &SpecificationAst, names: &Names) -> Graph {
        let num_streams = ast.inputs.len() + ast.outputs.len();
        let mut edges = vec![Vec::new(); num_streams + ast.triggers.len()];
        for decl in super::names::decls(ast) {
            let node = match decl {
                Decl::Output(i) => names.num_inputs + i,
                Decl::Trigger(i) => num_streams + i,
            };
            for (part, e) in parts(ast, decl) {
                // lifecycle conditions run before the evaluation phase
                if matches!(part, Part::Spawn | Part::Close) {
                    continue;
                }
                for (target, kind) in accesses(names, e) {
                    if !matches!(kind, Access::Offset(_)) && !edges[node].contains(&(target, kind)) {
                        edges[node].push((target, kind));
                    }
                }
            }
        }
        Graph { edges }
    }

    fn adjacency(&self, include: impl Fn(Access) -> bool) -> Vec<Vec<usize>> {
        self.edges.iter().map(|es| es.iter().filter(|(_, k)| include(*k)).map(|&(t, _)| t).collect()).collect()
    }

    /// Cycles made of synchronous and window edges, each as a sorted node list.
    pub(crate) fn illegal_cycles(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency(|k| matches!(k, Access::Sync | Access::Window));
        let comp = scc(&adj);
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); comp.iter().max().map_or(0, |m| m + 1)];
        for (v, &c) in comp.iter().enumerate() {
            groups[c].push(v);
        }
        let mut cycles: Vec<Vec<usize>> = groups
            .into_iter()
            .filter(|g| g.len() > 1 || g.first().is_some_and(|&v| adj[v].contains(&v)))
            .collect();
        cycles.sort();
        cycles
    }

    /// Layer per node. Requires `illegal_cycles()` to be empty.
    pub(crate) fn layers(&self, num_inputs: usize) -> Vec<u32> {
        let full = self.adjacency(|k| !matches!(k, Access::Offset(_)));
        let comp = scc(&full);
        let n = self.edges.len();
        let mut layer: Vec<Option<u32>> = vec![None; n];
        fn visit(v: usize, g: &Graph, comp: &[usize], num_inputs: usize, layer: &mut Vec<Option<u32>>) -> u32 {
            if let Some(l) = layer[v] {
                return l;
            }
            if v < num_inputs {
                layer[v] = Some(0);
                return 0;
            }
            let mut l = 1;
            for &(t, kind) in &g.edges[v] {
                let counts = match kind {
                    Access::Sync | Access::Window => true,
                    Access::Hold => comp[t] != comp[v],
                    Access::Offset(_) => false,
                };
                if counts {
                    l = l.max(visit(t, g, comp, num_inputs, layer) + 1);
                }
            }
            layer[v] = Some(l);
            l
        }
        (0..n).map(|v| visit(v, self, &comp, num_inputs, &mut layer)).collect()
    }
}

/// Tarjan's strongly connected components; returns a component id per node.
fn scc(adj: &[Vec<usize>]) -> Vec<usize> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }
    fn connect(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for i in 0..s.adj[v].len() {
            let w = s.adj[v][i];
            match s.index[w] {
                None => {
                    connect(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().expect("tarjan stack underflow");
                s.on_stack[w] = false;
                s.comp[w] = s.next_comp;
                if w == v {
                    break;
                }
            }
            s.next_comp += 1;
        }
    }
    let n = adj.len();
    let mut s = State {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![0; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            connect(&mut s, v);
        }
    }
    s.comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_groups_cycles() {
        let adj = vec![vec![1], vec![0], vec![2], vec![]];
        let c = scc(&adj);
        assert_eq!(c[0], c[1]);
        assert_ne!(c[0], c[2]);
        assert_ne!(c[2], c[3]);
    }
}
