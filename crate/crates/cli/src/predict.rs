//! `predict`: score a serialized model on a CSV dataset.

use randepth::adaboost::ClassNode;
use randepth::tree::Node;
use randepth::{Dataset, Error, Result};

use crate::args::PredictArgs;
use crate::manifest::ManifestWriter;
use crate::models::ModelFile;

fn node_feature_ceiling(node: &Node) -> usize {
    match node {
        Node::Leaf { .. } => 0,
        Node::Split {
            feature,
            left,
            right,
            ..
        } => (feature + 1)
            .max(node_feature_ceiling(left))
            .max(node_feature_ceiling(right)),
    }
}

fn class_node_feature_ceiling(node: &ClassNode) -> usize {
    match node {
        ClassNode::Leaf { .. } => 0,
        ClassNode::Split {
            feature,
            left,
            right,
            ..
        } => (feature + 1)
            .max(class_node_feature_ceiling(left))
            .max(class_node_feature_ceiling(right)),
    }
}

/// Smallest feature count the model's splits can run against.
fn required_features(model: &ModelFile) -> usize {
    match model {
        ModelFile::Forest(m) => m
            .trees
            .iter()
            .map(|t| node_feature_ceiling(&t.root))
            .max()
            .unwrap_or(0),
        ModelFile::Boost(m) => m
            .stages
            .iter()
            .map(|s| node_feature_ceiling(&s.tree.root))
            .max()
            .unwrap_or(0),
        ModelFile::AdaBoost(m) => m
            .stages
            .iter()
            .map(|s| class_node_feature_ceiling(&s.tree))
            .max()
            .unwrap_or(0),
    }
}

pub fn run(args: &PredictArgs) -> Result<()> {
    let mut manifest = ManifestWriter::new("predict", serde_json::to_value(args)?);

    let model = ModelFile::load(&args.model)?;
    let data = Dataset::read_csv(&args.data)?;
    let required = required_features(&model);
    if data.n_features() < required {
        return Err(Error::contract(format!(
            "model splits on feature {} but data has only {} features",
            required,
            data.n_features()
        )));
    }

    let predictions = model.predict_batch(&data);
    let mut out = String::from("prediction\n");
    for p in &predictions {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    std::fs::write(&args.out, out)?;

    manifest.output(&args.out);
    manifest.write(&args.out.with_extension("manifest.json"))?;
    println!("wrote {} predictions to {}", predictions.len(), args.out.display());
    Ok(())
}
