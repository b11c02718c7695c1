// Backprop against central finite differences.

use edgesched::nn::{gradient_check, GradCheckReport, MlpSpec};

pub fn run_example() -> edgesched::Result<Vec<GradCheckReport>> {
    let specs = [
        MlpSpec::new(4, vec![8], 3, 0),
        MlpSpec::new(17, vec![64, 64], 13, 1),
    ];
    let mut reports = Vec::new();
    for spec in &specs {
        let r = gradient_check(spec, 42, 1e-4)?;
        println!("{r}");
        reports.push(r);
    }
    Ok(reports)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
