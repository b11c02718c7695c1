// Generate a cluster and a workload, then round-trip both through JSON.

use edgesched::model::{generate_workload, ClusterSettings, ClusterSpec, Workload};

pub fn run_example() -> edgesched::Result<(ClusterSpec, Workload)> {
    let cluster = ClusterSettings::default().generate()?;
    let workload = generate_workload(100, 50.0, 150.0, cluster.edge_count(), 7)?;

    let cluster_json = serde_json::to_string(&cluster).expect("cluster serializes");
    let workload_json = serde_json::to_string(&workload).expect("workload serializes");
    let cluster_back: ClusterSpec = serde_json::from_str(&cluster_json).expect("cluster parses");
    let workload_back: Workload = serde_json::from_str(&workload_json).expect("workload parses");
    assert_eq!(cluster_back, cluster);
    assert_eq!(workload_back, workload);

    for node in cluster.nodes() {
        println!("node {:>2} {:?} capacity {:.1} MIPS", node.id, node.kind, node.capacity);
    }
    let total: f64 = workload.tasks().iter().map(|t| t.demand).sum();
    println!("{} tasks, {:.0} MI in total", workload.len(), total);
    Ok((cluster, workload))
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
