// Exhaustive search on a tiny instance, then the randomized cross-check.

use edgesched::harness::{oracle_check, OracleCheckReport, OracleCheckSettings};
use edgesched::model::{generate_cluster, generate_workload, MigrationCostModel};
use edgesched::oracle::brute_force_optimal;

pub fn run_example() -> edgesched::Result<OracleCheckReport> {
    let cluster = generate_cluster(2, 1, (80.0, 120.0), (300.0, 500.0), 3)?;
    let workload = generate_workload(5, 50.0, 150.0, 2, 3)?;
    let (best, metrics) = brute_force_optimal(&workload, &cluster, &MigrationCostModel::default())?;
    println!("optimal placement {:?}: {metrics}", best.placement);

    let report = oracle_check(&OracleCheckSettings {
        instances: 50,
        ..OracleCheckSettings::default()
    })?;
    println!("{report}");
    Ok(report)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
