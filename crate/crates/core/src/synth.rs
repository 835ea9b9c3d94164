//! Synthetic cohorts with known, code-conditioned hazards.
//!
//! Event and censoring times are exponential, so every downstream check
//! has a closed form: proportional hazards hold exactly, group-wise event
//! times have mean `1/hazard`, and the population survival function is an
//! explicit mixture. Each patient draws from a ChaCha substream keyed by
//! `(seed, patient index)`, so generation is deterministic and safe to
//! parallelize per patient.

use crate::data::{EncounterRecord, PatientRecord, Sex};
use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::io::{BufRead, Write};
use std::path::Path;

/// A planted risk code: carried by a `prevalence` fraction of patients,
/// multiplying their hazard by `exp(log_hazard_ratio)`.
#[derive(Debug, Clone)]
pub struct RiskCode {
    pub code: String,
    pub prevalence: f64,
    pub log_hazard_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub seed: u64,
    pub risk_codes: Vec<RiskCode>,
    pub baseline_hazard_per_month: f64,
    pub mean_visits: f64,
    pub censoring_hazard_per_month: f64,
    pub horizon_months: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_patients: 1000,
            seed: 7,
            risk_codes: vec![
                RiskCode {
                    code: "D001".into(),
                    prevalence: 0.5,
                    log_hazard_ratio: 4.0f64.ln(),
                },
                RiskCode {
                    code: "M002".into(),
                    prevalence: 0.5,
                    log_hazard_ratio: 2.0f64.ln(),
                },
            ],
            baseline_hazard_per_month: 0.01,
            mean_visits: 4.0,
            censoring_hazard_per_month: 0.0,
            horizon_months: 48.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_patients == 0 {
            return Err(Error::data("n_patients must be positive"));
        }
        if self.baseline_hazard_per_month <= 0.0 {
            return Err(Error::data("baseline_hazard_per_month must be positive"));
        }
        if self.censoring_hazard_per_month < 0.0 {
            return Err(Error::data("censoring_hazard_per_month must be non-negative"));
        }
        if self.mean_visits <= 0.0 {
            return Err(Error::data("mean_visits must be positive"));
        }
        if self.horizon_months <= 0.0 {
            return Err(Error::data("horizon_months must be positive"));
        }
        for rc in &self.risk_codes {
            if !(rc.prevalence > 0.0 && rc.prevalence < 1.0) {
                return Err(Error::data(format!(
                    "prevalence of {} must be in (0, 1)",
                    rc.code
                )));
            }
            EncounterRecord {
                code: rc.code.clone(),
                age_months: 0,
                visit_index: 1,
            }
            .validate()?;
        }
        Ok(())
    }

    /// Append `n` null codes (log-HR zero) to pad the vocabulary.
    pub fn with_noise_codes(mut self, n: usize, prevalence: f64) -> Self {
        for i in 0..n {
            self.risk_codes.push(RiskCode {
                code: format!("D9{i:02}"),
                prevalence,
                log_hazard_ratio: 0.0,
            });
        }
        self
    }
}

/// Ground truth for one generated patient.
#[derive(Debug, Clone)]
pub struct OracleRisk {
    pub patient_id: String,
    pub true_hazard_per_month: f64,
}

impl OracleRisk {
    /// True survival under the constant-hazard model.
    pub fn true_survival_at(&self, t_months: f64) -> f64 {
        (-self.true_hazard_per_month * t_months).exp()
    }

    pub fn true_risk_at(&self, t_months: f64) -> f64 {
        1.0 - self.true_survival_at(t_months)
    }
}

fn patient_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // Inverse CDF on an open-interval uniform.
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    -u.ln() / rate
}

fn generate_patient(config: &SynthConfig, index: usize) -> (PatientRecord, OracleRisk) {
    let mut rng = patient_rng(config.seed, index);
    let patient_id = format!("P{index:06}");
    let sex = if rng.gen_bool(0.5) { Sex::Male } else { Sex::Female };
    let baseline_age_months: u32 = rng.gen_range(480..=1080);

    let mut log_hr_sum = 0.0;
    let mut codes = Vec::new();
    for rc in &config.risk_codes {
        if rng.gen_bool(rc.prevalence) {
            log_hr_sum += rc.log_hazard_ratio;
            codes.push(rc.code.clone());
        }
    }
    let hazard = config.baseline_hazard_per_month * log_hr_sum.exp();

    let event_time = exponential(&mut rng, hazard);
    let censor_time = if config.censoring_hazard_per_month > 0.0 {
        exponential(&mut rng, config.censoring_hazard_per_month).min(config.horizon_months)
    } else {
        config.horizon_months
    };
    let (event_time_months, event_indicator) = if event_time <= censor_time {
        (event_time, true)
    } else {
        (censor_time, false)
    };

    // Lay the assigned codes out over Poisson-many visits, ages spaced
    // monthly backward from baseline.
    let n_visits_raw = Poisson::new(config.mean_visits).unwrap().sample(&mut rng) as usize;
    let n_visits = n_visits_raw.max(1);
    let mut slots: Vec<usize> = codes.iter().map(|_| rng.gen_range(0..n_visits)).collect();
    slots.sort_unstable();
    let mut used: Vec<usize> = slots.clone();
    used.dedup();
    let mut encounters = Vec::new();
    for (code, slot) in codes.into_iter().zip(slots) {
        let visit_ordinal = used.iter().position(|&s| s == slot).unwrap() + 1;
        let age_offset = (used.len() - visit_ordinal + 1) as u32;
        encounters.push(EncounterRecord {
            code,
            age_months: baseline_age_months.saturating_sub(age_offset),
            visit_index: visit_ordinal as u32,
        });
    }
    encounters.sort_by(|a, b| {
        a.visit_index
            .cmp(&b.visit_index)
            .then_with(|| a.code.cmp(&b.code))
    });

    let record = PatientRecord {
        patient_id: patient_id.clone(),
        sex,
        encounters,
        baseline_age_months,
        event_time_months,
        event_indicator,
    };
    let oracle = OracleRisk {
        patient_id,
        true_hazard_per_month: hazard,
    };
    (record, oracle)
}

/// Generate a cohort and its matching ground-truth hazards.
pub fn generate(config: &SynthConfig) -> Result<(Vec<PatientRecord>, Vec<OracleRisk>)> {
    config.validate()?;
    let mut patients = Vec::with_capacity(config.n_patients);
    let mut oracle = Vec::with_capacity(config.n_patients);
    for i in 0..config.n_patients {
        let (p, o) = generate_patient(config, i);
        patients.push(p);
        oracle.push(o);
    }
    Ok((patients, oracle))
}

/// Sidecar format: `patient_id \t true_hazard` per line.
pub fn write_oracle(oracle: &[OracleRisk], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for o in oracle {
        writeln!(out, "{}\t{}", o.patient_id, o.true_hazard_per_month)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_oracle(path: &Path) -> Result<Vec<OracleRisk>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (id, hazard) = line
            .split_once('\t')
            .ok_or_else(|| Error::data(format!("malformed oracle line {}", i + 1)))?;
        let hazard: f64 = hazard
            .parse()
            .map_err(|_| Error::data(format!("invalid true_hazard at line {}", i + 1)))?;
        out.push(OracleRisk {
            patient_id: id.to_string(),
            true_hazard_per_month: hazard,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_vocabulary;

    #[test]
    fn deterministic_given_seed() {
        let config = SynthConfig {
            n_patients: 50,
            ..SynthConfig::default()
        };
        let (a, _) = generate(&config).unwrap();
        let (b, _) = generate(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_censoring_all_events() {
        let config = SynthConfig {
            n_patients: 200,
            censoring_hazard_per_month: 0.0,
            horizon_months: 1e6,
            ..SynthConfig::default()
        };
        let (patients, _) = generate(&config).unwrap();
        assert!(patients.iter().all(|p| p.event_indicator));
    }

    #[test]
    fn event_times_truncated_at_horizon() {
        let config = SynthConfig {
            n_patients: 500,
            baseline_hazard_per_month: 0.001,
            ..SynthConfig::default()
        };
        let (patients, _) = generate(&config).unwrap();
        assert!(patients.iter().all(|p| p.event_time_months <= 48.0));
        assert!(patients
            .iter()
            .any(|p| !p.event_indicator && p.event_time_months == 48.0));
        for p in &patients {
            p.validate().unwrap();
        }
    }

    #[test]
    fn group_event_time_means_match_exponential() {
        // Monte-Carlo check on the uncensored generator.
        let config = SynthConfig {
            n_patients: 10_000,
            seed: 11,
            risk_codes: vec![RiskCode {
                code: "D001".into(),
                prevalence: 0.5,
                log_hazard_ratio: 4.0f64.ln(),
            }],
            baseline_hazard_per_month: 0.02,
            censoring_hazard_per_month: 0.0,
            horizon_months: 1e6,
            mean_visits: 4.0,
        };
        let (patients, oracle) = generate(&config).unwrap();
        let mut sums = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for (p, o) in patients.iter().zip(&oracle) {
            let group = usize::from(o.true_hazard_per_month > 0.03);
            sums[group] += p.event_time_months;
            counts[group] += 1;
        }
        let mean_low = sums[0] / counts[0] as f64;
        let mean_high = sums[1] / counts[1] as f64;
        assert!((mean_low - 50.0).abs() / 50.0 < 0.05, "low mean {mean_low}");
        assert!((mean_high - 12.5).abs() / 12.5 < 0.05, "high mean {mean_high}");
    }

    #[test]
    fn empirical_prevalence_within_binomial_ci() {
        let config = SynthConfig {
            n_patients: 10_000,
            seed: 3,
            ..SynthConfig::default()
        };
        let (patients, _) = generate(&config).unwrap();
        for rc in &config.risk_codes {
            let count = patients
                .iter()
                .filter(|p| p.encounters.iter().any(|e| e.code == rc.code))
                .count() as f64;
            let n = config.n_patients as f64;
            let se = (rc.prevalence * (1.0 - rc.prevalence) / n).sqrt();
            // 99% two-sided normal interval
            assert!(
                (count / n - rc.prevalence).abs() < 2.576 * se,
                "prevalence of {} = {}",
                rc.code,
                count / n
            );
        }
    }

    #[test]
    fn oracle_survival_properties() {
        let o = OracleRisk {
            patient_id: "x".into(),
            true_hazard_per_month: 0.05,
        };
        assert_eq!(o.true_survival_at(0.0), 1.0);
        let mut last = 1.0;
        for t in 1..=48 {
            let s = o.true_survival_at(t as f64);
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn generated_cohort_is_tokenizable() {
        let config = SynthConfig {
            n_patients: 100,
            ..SynthConfig::default()
        }
        .with_noise_codes(5, 0.3);
        let (patients, _) = generate(&config).unwrap();
        let vocab = build_vocabulary(&patients, 0.001).unwrap();
        // Direct counting oracle: every code held by at least one patient
        // out of 100 clears the 0.1% prevalence floor.
        let mut seen = std::collections::BTreeSet::new();
        for p in &patients {
            seen.extend(p.distinct_codes().into_iter().map(str::to_string));
        }
        let from_vocab: std::collections::BTreeSet<String> =
            vocab.clinical_codes().map(str::to_string).collect();
        assert_eq!(seen, from_vocab);
    }

    #[test]
    fn oracle_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.tsv");
        let oracle = vec![
            OracleRisk {
                patient_id: "P000000".into(),
                true_hazard_per_month: 0.0325,
            },
            OracleRisk {
                patient_id: "P000001".into(),
                true_hazard_per_month: 0.01,
            },
        ];
        write_oracle(&oracle, &path).unwrap();
        let back = read_oracle(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].true_hazard_per_month, 0.0325);
    }
}
