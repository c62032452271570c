use std::path::PathBuf;

use krig_core::compromise::{
    energy, gibbs_compromise, minimize_energy_unconstrained, minimize_energy_weak, FiniteKernelSystem, JointTable,
};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::{json_bytes, write_atomic};

#[derive(clap::Args)]
pub struct Args {
    /// Kernel system as JSON: {"sizes": [...], "kernels": [[row, ...], ...]}.
    input: PathBuf,
    /// Also minimize the energy under the marginal constraints.
    #[arg(long)]
    weak: bool,
    /// JSON output file.
    #[arg(long, default_value = "compromise.json")]
    out: PathBuf,
}

fn show(name: &str, t: &JointTable, e: f64) {
    let probs: Vec<String> = t.probs().iter().map(|p| format!("{p:.15}")).collect();
    println!("{name}: [{}]", probs.join(", "));
    println!("{name} energy: {e:.15}");
}

pub fn run(args: Args) -> CliResult<()> {
    let system = FiniteKernelSystem::from_json_path(&args.input).map_err(|e| CliError::parse(args.input.display(), e))?;
    let gibbs = gibbs_compromise(&system)?;
    let e_gibbs = energy(&gibbs, &system)?;
    show("gibbs compromise", &gibbs, e_gibbs);
    let unconstrained = minimize_energy_unconstrained(&system)?;
    let e_unconstrained = energy(&unconstrained, &system)?;
    show("energy minimizer", &unconstrained, e_unconstrained);
    let mut doc = json!({
        "sizes": system.sizes(),
        "gibbs": { "probs": gibbs.probs(), "energy": e_gibbs },
        "unconstrained": { "probs": unconstrained.probs(), "energy": e_unconstrained },
    });
    if args.weak {
        let weak = minimize_energy_weak(&system)?;
        let e_weak = energy(&weak, &system)?;
        show("weak minimizer", &weak, e_weak);
        doc["weak"] = json!({ "probs": weak.probs(), "energy": e_weak });
    }
    write_atomic(&args.out, &json_bytes(&doc)?)
}
