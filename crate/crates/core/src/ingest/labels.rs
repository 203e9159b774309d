//! Cell labels. A cell is written as a POS tag followed by feature tags,
//! the features sorted alphabetically and joined with ";" (e.g. "V;PST" or
//! "V;PST;PTCP"). Labels from dependency annotations and from inflection
//! tables must canonicalize identically or grid slots silently diverge.

/// UD POS tag to its short label. Unmapped tags pass through unchanged.
pub fn pos_tag(upos: &str) -> &str {
    match upos {
        "VERB" => "V",
        "NOUN" => "N",
        "ADJ" => "ADJ",
        other => other,
    }
}

/// One UD `Key=Val` feature to a compact tag. Unknown pairs keep the
/// literal "Key=Val" spelling so no information is lost and the result is
/// still deterministic.
pub fn feature_tag(key: &str, val: &str) -> String {
    let tag = match (key, val) {
        ("Tense", "Past") => "PST",
        ("Tense", "Pres") => "PRS",
        ("Tense", "Fut") => "FUT",
        ("Tense", "Imp") => "IPFV",
        ("Tense", "Pqp") => "PQP",
        ("Number", "Sing") => "SG",
        ("Number", "Plur") => "PL",
        ("Number", "Dual") => "DU",
        ("Person", "1") => "1",
        ("Person", "2") => "2",
        ("Person", "3") => "3",
        ("Case", "Nom") => "NOM",
        ("Case", "Acc") => "ACC",
        ("Case", "Dat") => "DAT",
        ("Case", "Gen") => "GEN",
        ("Case", "Abl") => "ABL",
        ("Case", "Loc") => "LOC",
        ("Case", "Ins") => "INS",
        ("Case", "Voc") => "VOC",
        ("Gender", "Masc") => "MASC",
        ("Gender", "Fem") => "FEM",
        ("Gender", "Neut") => "NEUT",
        ("Mood", "Ind") => "IND",
        ("Mood", "Imp") => "IMP",
        ("Mood", "Sub") => "SBJV",
        ("Mood", "Cnd") => "COND",
        ("VerbForm", "Fin") => "FIN",
        ("VerbForm", "Inf") => "NFIN",
        ("VerbForm", "Part") => "PTCP",
        ("VerbForm", "Ger") => "GER",
        ("Aspect", "Perf") => "PFV",
        ("Aspect", "Imp") => "IPFV",
        ("Aspect", "Prog") => "PROG",
        ("Voice", "Act") => "ACT",
        ("Voice", "Pass") => "PASS",
        ("Degree", "Cmp") => "CMP",
        ("Degree", "Sup") => "SUP",
        ("Definite", "Def") => "DEF",
        ("Definite", "Ind") => "INDF",
        ("Polarity", "Neg") => "NEG",
        ("Polarity", "Pos") => "POS",
        _ => return format!("{key}={val}"),
    };
    tag.to_string()
}

/// Builds the canonical label from a POS tag and raw `Key=Val` features.
pub fn build_label<'a>(
    upos: &str,
    features: impl Iterator<Item = (&'a str, &'a str)>,
) -> String {
    let mut tags: Vec<String> =
        features.map(|(k, v)| feature_tag(k, v)).collect();
    tags.sort();
    tags.dedup();
    let mut label = pos_tag(upos).to_string();
    for t in &tags {
        label.push(';');
        label.push_str(t);
    }
    label
}

/// Re-canonicalizes a ";"-joined label: the leading POS tag stays first,
/// everything after it is sorted. Applied to labels read from table files,
/// whose authors may list features in any order.
pub fn canonicalize_label(label: &str) -> String {
    let mut parts = label.split(';').map(str::trim).filter(|p| !p.is_empty());
    let Some(pos) = parts.next() else {
        return String::new();
    };
    let mut feats: Vec<&str> = parts.collect();
    feats.sort();
    feats.dedup();
    let mut out = pos.to_string();
    for f in &feats {
        out.push(';');
        out.push_str(f);
    }
    out
}
