//! Patient data model, vocabulary, tokenizer, and the cohort file format.
//!
//! A patient history is an ordered list of coded encounters grouped into
//! visits. Tokenization lays the history out as three aligned arrays
//! (token id, age in months, visit number), inserts a `SEP` token after
//! each visit, and appends a final `PRED` token carrying the baseline age
//! and visit number `V+1`. The encoder reads its latent state from the
//! `PRED` position.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

pub const PAD_ID: u32 = 0;
pub const SEP_ID: u32 = 1;
pub const PRED_ID: u32 = 2;
pub const UNK_ID: u32 = 3;
pub const RESERVED_TOKENS: [&str; 4] = ["PAD", "SEP", "PRED", "UNK"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sex {
    Male,
    Female,
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::Male => "male",
            Sex::Female => "female",
        })
    }
}

impl std::str::FromStr for Sex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "male" => Ok(Sex::Male),
            "female" => Ok(Sex::Female),
            other => Err(Error::data(format!("invalid sex {other:?}"))),
        }
    }
}

/// One coded clinical encounter. Codes carry a modality prefix:
/// `D` diagnosis, `M` medication, `P` procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncounterRecord {
    pub code: String,
    pub age_months: u32,
    pub visit_index: u32,
}

impl EncounterRecord {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.code.chars().next(), Some('D' | 'M' | 'P')) {
            return Err(Error::data(format!(
                "invalid code prefix in {:?}: expected D, M or P",
                self.code
            )));
        }
        if self.visit_index == 0 {
            return Err(Error::data("visit_index must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    pub sex: Sex,
    pub encounters: Vec<EncounterRecord>,
    pub baseline_age_months: u32,
    /// Time from baseline to event or censoring, in months.
    pub event_time_months: f64,
    /// `true` when death was observed, `false` when censored.
    pub event_indicator: bool,
}

impl PatientRecord {
    pub fn validate(&self) -> Result<()> {
        if self.event_time_months < 0.0 || !self.event_time_months.is_finite() {
            return Err(Error::data(format!(
                "patient {}: event_time_months must be finite and non-negative",
                self.patient_id
            )));
        }
        let mut prev_visit = 0u32;
        for enc in &self.encounters {
            enc.validate()?;
            if enc.age_months > self.baseline_age_months {
                return Err(Error::data(format!(
                    "patient {}: encounter age {} exceeds baseline age {}",
                    self.patient_id, enc.age_months, self.baseline_age_months
                )));
            }
            if enc.visit_index < prev_visit {
                return Err(Error::data(format!(
                    "patient {}: encounters not sorted by visit",
                    self.patient_id
                )));
            }
            prev_visit = enc.visit_index;
        }
        Ok(())
    }

    /// Distinct codes in this history.
    pub fn distinct_codes(&self) -> BTreeSet<&str> {
        self.encounters.iter().map(|e| e.code.as_str()).collect()
    }
}

/// Bijection between token strings and dense ids. The four reserved
/// tokens occupy ids 0..=3; clinical codes follow in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: BTreeMap<String, u32>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    fn from_codes(codes: impl IntoIterator<Item = String>) -> Self {
        let mut id_to_token: Vec<String> =
            RESERVED_TOKENS.iter().map(|s| s.to_string()).collect();
        let sorted: BTreeSet<String> = codes.into_iter().collect();
        id_to_token.extend(sorted);
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            token_to_id,
            id_to_token,
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    /// Id for a clinical code, falling back to `UNK`.
    pub fn encode(&self, code: &str) -> u32 {
        self.id_of(code).unwrap_or(UNK_ID)
    }

    pub fn token_of(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(|s| s.as_str())
    }

    /// Clinical codes (everything past the reserved block), in id order.
    pub fn clinical_codes(&self) -> impl Iterator<Item = &str> {
        self.id_to_token[RESERVED_TOKENS.len()..]
            .iter()
            .map(|s| s.as_str())
    }

    /// Count of codes per modality prefix (D, M, P), for reporting.
    pub fn modality_counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for code in self.clinical_codes() {
            match code.chars().next() {
                Some('D') => c.0 += 1,
                Some('M') => c.1 += 1,
                Some('P') => c.2 += 1,
                _ => {}
            }
        }
        c
    }

    /// Canonical text serialization: `token \t id` lines, reserved first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, token) in self.id_to_token.iter().enumerate() {
            out.push_str(token);
            out.push('\t');
            out.push_str(&id.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut id_to_token = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let (token, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::data(format!("malformed vocabulary line {}", lineno + 1)))?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::data(format!("invalid id at vocabulary line {}", lineno + 1)))?;
            if id != id_to_token.len() {
                return Err(Error::data(format!(
                    "non-contiguous id at vocabulary line {}",
                    lineno + 1
                )));
            }
            id_to_token.push(token.to_string());
        }
        for (i, reserved) in RESERVED_TOKENS.iter().enumerate() {
            if id_to_token.get(i).map(|s| s.as_str()) != Some(*reserved) {
                return Err(Error::data("vocabulary missing reserved token block"));
            }
        }
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            token_to_id,
            id_to_token,
        })
    }

    /// SHA-256 of the canonical serialization, hex-encoded.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_text().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Build the vocabulary of codes appearing in at least `min_prevalence`
/// of patients. Ids are assigned deterministically: reserved tokens, then
/// codes in lexicographic order, so construction is invariant to cohort
/// permutation.
pub fn build_vocabulary(cohort: &[PatientRecord], min_prevalence: f64) -> Result<Vocabulary> {
    if cohort.is_empty() {
        return Err(Error::data("empty cohort"));
    }
    if !(0.0..1.0).contains(&min_prevalence) {
        return Err(Error::data("min_prevalence must be in [0, 1)"));
    }
    let n = cohort.len() as f64;
    let mut patient_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for patient in cohort {
        for code in patient.distinct_codes() {
            *patient_counts.entry(code).or_insert(0) += 1;
        }
    }
    let kept = patient_counts
        .into_iter()
        .filter(|(_, count)| *count as f64 >= min_prevalence * n)
        .map(|(code, _)| code.to_string());
    Ok(Vocabulary::from_codes(kept))
}

/// Token ids, ages, and visit numbers, aligned; ends in `PRED`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSequence {
    pub token_ids: Vec<u32>,
    pub ages_months: Vec<u32>,
    pub visit_positions: Vec<u32>,
}

impl TokenizedSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Position of the trailing `PRED` token.
    pub fn pred_position(&self) -> Result<usize> {
        match self.token_ids.last() {
            Some(&PRED_ID) => Ok(self.token_ids.len() - 1),
            _ => Err(Error::data("sequence does not end in PRED")),
        }
    }
}

/// Tokenize one patient history.
///
/// Encounters are emitted in order with a `SEP` after each visit (the
/// `SEP` inherits its visit's age and number); `PRED` is appended with the
/// baseline age and visit `V+1`. When the raw stream exceeds `max_len`,
/// the oldest tokens are dropped so the most recent `max_len - 1` tokens
/// plus `PRED` remain. Codes absent from the vocabulary map to `UNK`.
pub fn tokenize(patient: &PatientRecord, vocab: &Vocabulary, max_len: usize) -> TokenizedSequence {
    assert!(max_len >= 2, "max_len must be >= 2");
    let mut ids = Vec::new();
    let mut ages = Vec::new();
    let mut visits = Vec::new();
    let mut i = 0;
    let encs = &patient.encounters;
    while i < encs.len() {
        let visit = encs[i].visit_index;
        let mut visit_age = encs[i].age_months;
        while i < encs.len() && encs[i].visit_index == visit {
            ids.push(vocab.encode(&encs[i].code));
            ages.push(encs[i].age_months);
            visits.push(visit);
            visit_age = encs[i].age_months;
            i += 1;
        }
        ids.push(SEP_ID);
        ages.push(visit_age);
        visits.push(visit);
    }
    let last_visit = encs.last().map_or(0, |e| e.visit_index);
    ids.push(PRED_ID);
    ages.push(patient.baseline_age_months);
    visits.push(last_visit + 1);

    if ids.len() > max_len {
        let drop = ids.len() - max_len;
        ids.drain(..drop);
        ages.drain(..drop);
        visits.drain(..drop);
    }
    TokenizedSequence {
        token_ids: ids,
        ages_months: ages,
        visit_positions: visits,
    }
}

fn canonical_f64(v: f64) -> String {
    // Shortest round-trip representation; keeps cohort files byte-stable
    // across read/write cycles.
    format!("{v}")
}

fn encounter_field(patient: &PatientRecord) -> String {
    patient
        .encounters
        .iter()
        .map(|e| format!("{}:{}:{}", e.visit_index, e.code, e.age_months))
        .collect::<Vec<_>>()
        .join(";")
}

/// Serialize a cohort in the line-delimited format:
/// `patient_id \t sex \t baseline_age_months \t event_time_months \t
/// event_indicator \t visit:code:age;...`
pub fn write_cohort(cohort: &[PatientRecord], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in cohort {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.patient_id,
            p.sex,
            p.baseline_age_months,
            canonical_f64(p.event_time_months),
            u8::from(p.event_indicator),
            encounter_field(p)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn parse_line(lineno: usize, line: &str) -> Result<PatientRecord> {
    let err = |field: &str| Error::data(format!("invalid {field} at line {lineno}"));
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 6 {
        return Err(Error::data(format!(
            "expected 6 tab-separated fields at line {lineno}, found {}",
            fields.len()
        )));
    }
    let patient_id = fields[0].to_string();
    if patient_id.is_empty() {
        return Err(err("patient_id"));
    }
    let sex: Sex = fields[1].parse().map_err(|_| err("sex"))?;
    let baseline_age_months: u32 = fields[2].parse().map_err(|_| err("baseline_age_months"))?;
    let event_time_months: f64 = fields[3].parse().map_err(|_| err("event_time_months"))?;
    if !event_time_months.is_finite() || event_time_months < 0.0 {
        return Err(err("event_time_months"));
    }
    let event_indicator = match fields[4] {
        "0" => false,
        "1" => true,
        _ => return Err(err("event_indicator")),
    };
    let mut encounters = Vec::new();
    if !fields[5].is_empty() {
        for part in fields[5].split(';') {
            let mut it = part.splitn(3, ':');
            let (v, c, a) = (it.next(), it.next(), it.next());
            let (Some(v), Some(c), Some(a)) = (v, c, a) else {
                return Err(err("encounters"));
            };
            let visit_index: u32 = v.parse().map_err(|_| err("encounter visit_index"))?;
            let age_months: u32 = a.parse().map_err(|_| err("encounter age_months"))?;
            encounters.push(EncounterRecord {
                code: c.to_string(),
                age_months,
                visit_index,
            });
        }
    }
    let record = PatientRecord {
        patient_id,
        sex,
        encounters,
        baseline_age_months,
        event_time_months,
        event_indicator,
    };
    record
        .validate()
        .map_err(|e| Error::data(format!("{e} (line {lineno})")))?;
    Ok(record)
}

pub fn read_cohort(path: &Path) -> Result<Vec<PatientRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut cohort = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        cohort.push(parse_line(i + 1, &line)?);
    }
    Ok(cohort)
}
