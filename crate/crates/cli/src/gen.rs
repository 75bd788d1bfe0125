//! `gen`: draw a synthetic dataset and write it with its spec sidecar.

use serde::Serialize;

use randepth::{generate, sample_spec, FriedmanSpec, Result, RngStream};

use crate::args::GenArgs;
use crate::manifest::ManifestWriter;

/// Everything needed to regenerate or extend the dataset: the drawn spec,
/// both seeds, and the noise-free signal column.
#[derive(Serialize)]
struct SpecSidecar<'a> {
    spec: &'a FriedmanSpec,
    spec_seed: u64,
    data_seed: u64,
    median_signal: f64,
    signal: &'a [f64],
}

pub fn run(args: &GenArgs) -> Result<()> {
    let mut manifest = ManifestWriter::new("gen", serde_json::to_value(args)?);
    manifest.seed("spec_seed", args.spec_seed);
    manifest.seed("data_seed", args.data_seed);

    let spec = sample_spec(args.p_signal, args.p_noise, &RngStream::new(args.spec_seed))?;
    let generated = generate(&spec, args.n, &RngStream::new(args.data_seed))?;
    generated.dataset.write_csv(&args.out)?;

    let sidecar_path = args.out.with_extension("spec.json");
    let sidecar = SpecSidecar {
        spec: &spec,
        spec_seed: generated.spec_seed,
        data_seed: generated.data_seed,
        median_signal: generated.median_signal,
        signal: &generated.signal,
    };
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;

    manifest.output(&args.out);
    manifest.output(&sidecar_path);
    manifest.write(&args.out.with_extension("manifest.json"))?;
    println!(
        "wrote {} rows x {} features to {}",
        args.n,
        spec.n_features(),
        args.out.display()
    );
    Ok(())
}
