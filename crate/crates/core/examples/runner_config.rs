//! Parse, validate and run a config into a temporary directory, then read the
//! CSV back.

use hjlab::runner::{run, validate, RunConfig};

const CONFIG: &str = r#"
kind = "hj"
name = "demo"
seed = 1

[exponents]
d = 1
gamma = 1.2

[grid]
n = 32
nt = 1024
"#;

fn main() -> hjlab::Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    let rep = validate(&cfg)?;
    for w in &rep.warnings {
        println!("warning: {w}");
    }
    println!("classification: {:?}", rep.classification);
    let root = std::env::temp_dir().join("hjlab-example");
    let out = run(&cfg, &root)?;
    print!("{}", std::fs::read_to_string(out.dir.join("rows.csv"))?);
    println!("passed: {}", out.passed());
    Ok(())
}
