use critlink::dataset::*;
use critlink::grid::GridCase;
use critlink::mgat::*;

fn main() {
    let base = GridCase::parse(critlink::IEEE30_CASE).unwrap();
    let ds = generate_dataset(&base, 300, 42, &GenConfig::default(), None).unwrap();
    let target = Target::Nodes;
    let to_graphs = |idx: &[usize]| -> Vec<AttentionGraph> {
        ds.normalized_split(idx).iter().map(|fg| AttentionGraph::of(fg, target)).collect()
    };
    let train_g = to_graphs(&ds.meta.split.train);
    let val_g = to_graphs(&ds.meta.split.val);
    let test_g = to_graphs(&ds.meta.split.test);

    for (dropout, lr, hidden) in [
        (0.5, 0.01, 8usize), (0.2, 0.01, 8), (0.0, 0.01, 8),
        (0.2, 0.005, 8), (0.2, 0.01, 16), (0.0, 0.01, 16), (0.0, 0.005, 16),
    ] {
        let arch = MgatConfig { hidden: vec![hidden], dropout, ..MgatConfig::with_input(NODE_FEATURES) };
        let mut cfg = TrainConfig::new(arch, 7);
        cfg.epochs = 40;
        cfg.lr = lr;
        let (model, report) = train(&train_g, &val_g, &cfg).unwrap();
        let mut correct = 0usize; let mut total = 0usize;
        for g in &test_g {
            let (lbl, _) = identify(&model, g).unwrap();
            correct += lbl.iter().zip(&g.labels).filter(|(a, b)| a == b).count();
            total += g.labels.len();
        }
        let acc = correct as f64 / total as f64;
        let e20 = report.epochs.get(19).map(|e| e.val_loss).unwrap_or(f64::NAN);
        let min_val = report.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
        println!("dropout {dropout} lr {lr} hidden {hidden}: acc {acc:.4} best_ep {} val20 {e20:.4} min {min_val:.4}",
                 report.best_epoch);
    }
}
