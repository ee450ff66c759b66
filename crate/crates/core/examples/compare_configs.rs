//! Config-file driven runs and a repeated DA versus MH comparison.

use delayed_acceptance::experiment::{compare, run, ExperimentConfig};

const MH: &str = "
seed = 12
[model]
name = beta_binomial
n_parts = 100
[kernel]
variant = mh
[proposal]
scale = 0.1
[run]
iterations = 20000
repetitions = 5
";

fn main() -> delayed_acceptance::Result<()> {
    let mh = ExperimentConfig::parse(MH)?;
    let da = ExperimentConfig::parse(&MH.replace("variant = mh", "variant = da"))?;
    let out = std::env::temp_dir().join("da-bench-example");
    let summary = run(&da, 12, &out)?;
    println!("wrote {}\n{}", out.display(), summary.text);
    print!("{}", compare(&[mh, da], None)?.to_text());
    Ok(())
}
