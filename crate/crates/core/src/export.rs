//! CSV exports of consensus results and raw annotations.

use crate::state::PlatformState;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `image_id,status,label,total_qualified,agreement,difficulty,incorrect_flags,inappropriate_flags`
pub fn consensus_csv(state: &PlatformState) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "image_id",
        "status",
        "label",
        "total_qualified",
        "agreement",
        "difficulty",
        "incorrect_flags",
        "inappropriate_flags",
    ])
    .expect("in-memory write");
    for id in state.images.keys() {
        let cs = state.consensus_state(id).expect("listed image");
        w.write_record([
            cs.image_id,
            cs.status.as_str().to_string(),
            opt(cs.settled_label),
            cs.tally.total_qualified.to_string(),
            opt(cs.agreement),
            opt(cs.difficulty),
            cs.incorrect_flags.to_string(),
            cs.inappropriate_flags.to_string(),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

/// `image_id,annotator_id,label,seq,qualified`, in submission order.
pub fn annotations_csv(state: &PlatformState) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image_id", "annotator_id", "label", "seq", "qualified"])
        .expect("in-memory write");
    for e in &state.annotations {
        let a = &e.annotation;
        w.write_record([
            a.image_id.clone(),
            a.annotator_id.clone(),
            a.label.to_string(),
            a.submitted_at.to_string(),
            a.qualified_at_submission.to_string(),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("csv of utf-8 fields")
}
