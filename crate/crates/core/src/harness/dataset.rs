use std::collections::BTreeMap;

use crate::data::{
    gen_clustered, gen_uniform_tagged, label_paired, label_with_tutor, load_grounded, perturb_view, read_labels_csv,
    DatasetMetadata, Grounded, LabelMatrix, LabeledDataset, LinearScaler, ObjectMatrix, SourceTag,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RNG_ALGORITHM};
use crate::tutor::{generate_lexicon, Lexicon};

use super::spec::{DataSource, ExperimentSpec};

/// A labeled dataset ready for evaluation, with everything needed to
/// regenerate or describe it.
#[derive(Debug, Clone)]
pub struct PreparedData {
    /// Features the learner sees, with the tutor's labels.
    pub dataset: LabeledDataset,
    /// Features the tutor saw, when they differ from the learner's.
    pub tutor_view: Option<ObjectMatrix>,
    pub lexicon: Option<Lexicon>,
    pub tag: String,
    pub source_tag: SourceTag,
    pub proxy: bool,
    pub scaler: Option<LinearScaler>,
    pub n: usize,
    pub sensitivity_p: f64,
    pub lexicon_seed: u64,
    pub objects_seed: u64,
    pub folds_seed: u64,
}

impl PreparedData {
    pub fn metadata(&self, config: Vec<String>) -> DatasetMetadata {
        let mut seeds = BTreeMap::new();
        seeds.insert("lexicon".to_string(), self.lexicon_seed);
        seeds.insert("objects".to_string(), self.objects_seed);
        seeds.insert("folds".to_string(), self.folds_seed);
        DatasetMetadata {
            source_tag: self.source_tag,
            rows: self.dataset.rows(),
            n: self.n,
            m: Some(self.dataset.labels.m()),
            k: Some(self.dataset.k),
            sensitivity_p: self.lexicon.as_ref().map(|l| l.sensitivity_p),
            scaler: self.scaler.clone(),
            seeds,
            rng: RNG_ALGORITHM.to_string(),
            proxy: self.proxy,
            config,
        }
    }
}

/// Component names for the data seeds of one source. SIM-DEVELOP uses its
/// own names so it never shares a stream with SIM under the same master seed.
fn seed_names(source: &DataSource) -> [&'static str; 4] {
    match source {
        DataSource::SimDevelop => ["develop.lexicon", "develop.objects", "develop.folds", "develop.view"],
        _ => ["lexicon", "objects", "folds", "view"],
    }
}

/// Builds the dataset for sweep point `point` with dimension `n` and tutor
/// sensitivity `p`.
pub fn build_dataset(spec: &ExperimentSpec, point: usize, n: usize, p: f64) -> Result<PreparedData> {
    let d = &spec.dataset;
    let t = &spec.tutor;
    let [lex_name, obj_name, fold_name, view_name] = seed_names(&d.source);
    let index = point as u64;
    let lexicon_seed = t.seed.unwrap_or_else(|| derive_seed(spec.seed, lex_name, index));
    let objects_seed = derive_seed(spec.seed, obj_name, index);
    let folds_seed = derive_seed(spec.seed, fold_name, index);
    let base = |dataset, tutor_view, lexicon, tag: &str, source_tag, proxy, scaler| PreparedData {
        dataset,
        tutor_view,
        lexicon,
        tag: tag.to_string(),
        source_tag,
        proxy,
        scaler,
        n,
        sensitivity_p: p,
        lexicon_seed,
        objects_seed,
        folds_seed,
    };
    match d.source {
        DataSource::Sim | DataSource::SimDevelop | DataSource::Clustered => {
            let lexicon = generate_lexicon(t.m, n, p, lexicon_seed)?;
            let (objects, tag) = match d.source {
                DataSource::Sim => (gen_uniform_tagged(d.rows, n, objects_seed, SourceTag::Sim)?, SourceTag::Sim),
                DataSource::SimDevelop => (
                    gen_uniform_tagged(d.rows, n, objects_seed, SourceTag::SimDevelop)?,
                    SourceTag::SimDevelop,
                ),
                _ => (gen_clustered(d.rows, n, d.clusters, d.spread, objects_seed)?.objects, SourceTag::Clustered),
            };
            let dataset = label_with_tutor(&objects, &lexicon, t.k)?;
            Ok(base(dataset, None, Some(lexicon), tag.as_str(), tag, false, None))
        }
        DataSource::PairedProxy => {
            let lexicon = generate_lexicon(t.m, n, p, lexicon_seed)?;
            let tutor_view = gen_clustered(d.rows, n, d.clusters, d.spread, objects_seed)?.objects;
            let learner_view = perturb_view(&tutor_view, d.noise, derive_seed(spec.seed, view_name, index))?;
            let paired = label_paired(&tutor_view, &learner_view, &lexicon, t.k)?;
            let dataset = paired.learner_dataset();
            Ok(base(
                dataset,
                Some(tutor_view),
                Some(lexicon),
                "PAIRED-PROXY",
                SourceTag::Clustered,
                true,
                None,
            ))
        }
        DataSource::Files => {
            let features = d.features.as_ref().ok_or_else(|| Error::Config("data.features is not set".into()))?;
            let grounded = load_grounded(features, d.learner_features.as_deref())?;
            let (tutor_view, learner_view, scaler, tag) = match grounded {
                Grounded::Single { objects, scaler } => (objects.clone(), objects, scaler, SourceTag::Gro1),
                Grounded::Paired {
                    tutor_view,
                    learner_view,
                    scalers,
                } => (tutor_view, learner_view, scalers.1, SourceTag::Gro2Learner),
            };
            let n = learner_view.n();
            let (labels, lexicon) = match &d.labels {
                Some(path) => {
                    let rows = read_labels_csv(path)?;
                    if rows.len() != learner_view.rows() {
                        return Err(Error::shape(format!(
                            "{} label rows for {} objects",
                            rows.len(),
                            learner_view.rows()
                        )));
                    }
                    (LabelMatrix::new(t.m, rows)?, None)
                }
                None => {
                    let lexicon = generate_lexicon(t.m, n, p, lexicon_seed)?;
                    (label_with_tutor(&tutor_view, &lexicon, t.k)?.labels, Some(lexicon))
                }
            };
            let dataset = LabeledDataset {
                objects: learner_view,
                labels,
                k: t.k,
                lexicon_seed: lexicon.as_ref().map(|l| l.rng_seed),
            };
            let paired = tag == SourceTag::Gro2Learner;
            let mut out = base(
                dataset,
                paired.then_some(tutor_view),
                lexicon,
                tag.as_str(),
                tag,
                false,
                Some(scaler),
            );
            out.n = n;
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::spec::ExperimentKind;

    fn spec(source: DataSource) -> ExperimentSpec {
        let mut s = ExperimentSpec::standard(ExperimentKind::Xval).with_seed(5);
        s.dataset.source = source;
        s.dataset.rows = 60;
        s.dataset.n = 4;
        s.tutor.m = 10;
        s.tutor.k = 3;
        s
    }

    #[test]
    fn develop_data_is_independent_of_sim() {
        let a = build_dataset(&spec(DataSource::Sim), 0, 4, 0.5).unwrap();
        let b = build_dataset(&spec(DataSource::SimDevelop), 0, 4, 0.5).unwrap();
        assert_eq!(a.tag, "SIM");
        assert_eq!(b.tag, "SIM-DEVELOP");
        assert_ne!(a.dataset.objects.values, b.dataset.objects.values);
        assert_ne!(a.lexicon_seed, b.lexicon_seed);
        let again = build_dataset(&spec(DataSource::Sim), 0, 4, 0.5).unwrap();
        assert_eq!(a.dataset.objects, again.dataset.objects);
        assert_eq!(a.dataset.labels, again.dataset.labels);
    }

    #[test]
    fn proxy_labels_come_from_the_tutor_view() {
        let p = build_dataset(&spec(DataSource::PairedProxy), 0, 4, 0.5).unwrap();
        assert!(p.proxy);
        let tutor_view = p.tutor_view.as_ref().unwrap();
        assert_ne!(tutor_view.values, p.dataset.objects.values);
        let relabeled = label_with_tutor(tutor_view, p.lexicon.as_ref().unwrap(), 3).unwrap();
        assert_eq!(relabeled.labels, p.dataset.labels);
    }

    #[test]
    fn files_source_reads_features_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.csv");
        let l = dir.path().join("y.csv");
        std::fs::write(&f, "f0,f1\n0,10\n1,20\n2,30\n3,40\n").unwrap();
        std::fs::write(&l, "word_ids\n0 1\n1\n\n2\n").unwrap();
        let mut s = spec(DataSource::Files);
        s.dataset.features = Some(f.clone());
        s.dataset.labels = Some(l);
        s.tutor.m = 3;
        let p = build_dataset(&s, 0, 17, 0.5).unwrap();
        assert_eq!(p.n, 2);
        assert_eq!(p.dataset.objects.values[[3, 1]], 1.0);
        assert_eq!(p.dataset.labels.row(0).ids(), &[0, 1]);
        assert!(p.lexicon.is_none());
        s.dataset.labels = None;
        let p = build_dataset(&s, 0, 17, 0.5).unwrap();
        assert!(p.dataset.labels.rows().iter().all(|r| r.len() == 3));
    }
}
