//! Newick rendering of a Ward dendrogram. Branch lengths are height
//! differences, so every leaf sits at the root height.

use conflict_seq_core::cluster::Dendrogram;
use conflict_seq_core::CellId;

use super::{cell_label, fmt_f64};

/// `labels[i]` names leaf `i`.
pub fn to_newick(dg: &Dendrogram, labels: &[CellId]) -> String {
    let n = dg.n_leaves();
    assert_eq!(labels.len(), n, "one label per leaf");
    let mut text: Vec<String> = labels.iter().map(|&c| cell_label(c)).collect();
    let mut height = vec![0.0f64; n];
    text.reserve(n.saturating_sub(1));
    height.reserve(n.saturating_sub(1));
    for m in dg.merges() {
        let a = std::mem::take(&mut text[m.a]);
        let b = std::mem::take(&mut text[m.b]);
        let la = fmt_f64(m.height - height[m.a]);
        let lb = fmt_f64(m.height - height[m.b]);
        text.push(format!("({a}:{la},{b}:{lb})"));
        height.push(m.height);
    }
    let mut root = text.pop().unwrap_or_default();
    root.push_str(";\n");
    root
}
