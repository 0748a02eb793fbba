//! The config-driven pipeline, run twice: artifacts must be byte-identical.
//!
//! Same entry point the `mosersys` binary uses. A run writes report.json,
//! field CSVs with sidecar metadata, and a manifest with SHA-256 checksums
//! of every artifact; certificates decide the exit code. Nothing in the
//! output depends on wall-clock time, pointer values, or thread scheduling,
//! so a rerun with the same config reproduces every byte.

use mosersys::config::RunConfig;
use mosersys::runner::{run, EXIT_OK};

fn main() -> mosersys::Result<()> {
    let toml = r#"
        regime = "small-beta"
        [domain]
        shape = "unit-square"
        n = 31
        [params]
        mu1 = 2.0
        mu2 = 3.0
        beta = 0.4
        [solver]
        seed = 42
        restarts = 2
    "#;
    let config = RunConfig::from_toml(toml)?;
    let tmp = std::env::temp_dir().join("mosersys_pipeline_demo");

    let first = run(&config, Some(&tmp.join("a")), false)?;
    let second = run(&config, Some(&tmp.join("b")), false)?;
    assert_eq!(first.exit_code, EXIT_OK);

    println!("regime {}, seed {}", first.manifest.regime, first.manifest.seed);
    println!("{:>18} {:>10}  sha256", "artifact", "bytes");
    for (fa, fb) in first.manifest.files.iter().zip(&second.manifest.files) {
        assert_eq!(fa.sha256, fb.sha256, "{} differs between reruns", fa.name);
        println!("{:>18} {:>10}  {}...", fa.name, fa.bytes, &fa.sha256[..16]);
    }
    println!("\ncertificates:");
    for (name, ok) in &first.manifest.certificates {
        println!("  [{}] {name}", if *ok { "pass" } else { "FAIL" });
    }
    println!("\nreruns are byte-identical");
    std::fs::remove_dir_all(&tmp).ok();
    Ok(())
}
