//! Document records, archive staging, synthetic corpora and perturbations.

mod perturb;
mod record;
mod stage;
mod synth;

pub use perturb::{
    dropped_pages, perturb, perturb_pages, unit_count, PerturbationMode, PerturbationSpec,
    SubstitutionTarget,
};
pub use record::{join_pages, DocumentMetadata, DocumentRecord};
pub use stage::{
    stage_archives, write_archive, write_archives, StageLogEntry, StageStatus, StagedCorpus,
    STAGING_LOG,
};
pub use synth::{latex_density, synth_corpus, tools, SynthProfile};
