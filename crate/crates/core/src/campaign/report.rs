// SPDX-License-Identifier: Apache-2.0

//! Campaign reports and their comparison with an oracle campaign.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bmc::Verdict;
use crate::oracle::{CampaignResult, Effect};
use crate::property::{Directive, Family};

use super::{rank_bits, CampaignError, PairRecord, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BitClass {
    Safe,
    Vulnerable,
    Undetermined,
}

/// Why a bit is Safe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SafeBy {
    /// Outside the cone of every property; no solver call.
    Coi,
    /// Every assertion proven by induction.
    Proof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitClassification {
    pub bit_id: u32,
    pub label: String,
    pub register: String,
    pub bit: u32,
    pub class: BitClass,
    pub safe_by: Option<SafeBy>,
    pub effects: BTreeSet<Effect>,
    /// Number of failed assertions.
    pub score: usize,
    pub budget_exceeded: bool,
    /// Some strobe assertion fails while every architectural one is proven,
    /// or the other way round.
    pub consistency_flag: bool,
    /// Exactly one of the strobe and architectural families has a failure.
    pub family_disagreement: bool,
    pub verdicts: BTreeMap<String, PairRecord>,
}

impl BitClassification {
    /// Class name with effects, e.g. `Vulnerable(SDC,Crash(2))`.
    pub fn class_label(&self) -> String {
        match self.class {
            BitClass::Vulnerable => {
                let e: Vec<String> = self.effects.iter().map(|e| e.to_string()).collect();
                format!("Vulnerable({})", e.join(","))
            }
            c => format!("{c:?}"),
        }
    }
}

/// Bit counts per verdict for one property; the three sum to the number of
/// bits in the campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub property: String,
    pub family: Family,
    pub directive: Directive,
    pub proven: usize,
    pub bounded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    /// Wall-clock per family, summed over checks.
    pub family_secs: BTreeMap<String, f64>,
    pub elapsed_secs: f64,
    pub checks: usize,
    pub solver_calls: u64,
    pub cache_hits: usize,
    pub harvested: usize,
    pub coi_safe_bits: usize,
    pub replay_ok: usize,
    pub replay_failed: usize,
    pub budget_exceeded: usize,
    pub consistency_flags: usize,
    pub family_disagreements: usize,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub k_max: usize,
    pub induction: bool,
    pub total_bits: usize,
    pub properties: Vec<PropertyRow>,
    pub bits: Vec<BitClassification>,
    /// Bit ids by descending susceptibility.
    pub ranking: Vec<u32>,
    pub stats: Stats,
}

impl Report {
    pub(super) fn assemble(setup: &Setup, bits: Vec<BitClassification>, stats: Stats) -> Report {
        let properties = setup
            .props
            .iter()
            .map(|p| {
                let mut row = PropertyRow {
                    property: p.name().to_string(),
                    family: p.family,
                    directive: p.directive(),
                    proven: 0,
                    bounded: 0,
                    failed: 0,
                };
                for b in &bits {
                    match b.verdicts.get(p.name()).map(|r| r.verdict) {
                        Some(Verdict::Proven) => row.proven += 1,
                        Some(Verdict::Failed) => row.failed += 1,
                        _ => row.bounded += 1,
                    }
                }
                row
            })
            .collect();
        Report {
            k_max: setup.config.k_max,
            induction: setup.config.induction,
            total_bits: bits.len(),
            properties,
            ranking: rank_bits(&bits),
            bits,
            stats,
        }
    }

    pub fn bit(&self, id: u32) -> Option<&BitClassification> {
        self.bits.iter().find(|b| b.bit_id == id)
    }

    pub fn count(&self, class: BitClass) -> usize {
        self.bits.iter().filter(|b| b.class == class).count()
    }

    pub fn vulnerable(&self) -> BTreeSet<u32> {
        self.bits.iter().filter(|b| b.class == BitClass::Vulnerable).map(|b| b.bit_id).collect()
    }

    /// Vulnerable bits with at least one failure in `family`.
    pub fn failing_in(&self, family: Family) -> BTreeSet<u32> {
        let names: BTreeSet<&str> =
            self.properties.iter().filter(|r| r.family == family && r.directive == Directive::Assert).map(|r| r.property.as_str()).collect();
        self.bits
            .iter()
            .filter(|b| b.verdicts.iter().any(|(n, r)| names.contains(n.as_str()) && r.verdict == Verdict::Failed))
            .map(|b| b.bit_id)
            .collect()
    }

    pub fn properties_csv(&self) -> String {
        let mut s = String::from("family,property,directive,proven,bounded_proven,failed\n");
        for r in &self.properties {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.family, r.property, r.directive.keyword(), r.proven, r.bounded, r.failed);
        }
        s
    }

    pub fn bits_csv(&self) -> String {
        let mut s = String::from("rank,bit_id,register,bit,class,safe_by,effects,score,first_failure,activation,budget_exceeded\n");
        let rank: BTreeMap<u32, usize> = self.ranking.iter().enumerate().map(|(i, &b)| (b, i + 1)).collect();
        for b in &self.bits {
            let first = b
                .verdicts
                .iter()
                .filter(|(_, r)| r.verdict == Verdict::Failed)
                .filter_map(|(n, r)| r.failed_at.map(|k| (k, n, r.activation)))
                .min();
            let effects: Vec<String> = b.effects.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{:?},{},\"{}\",{},{},{},{}",
                rank[&b.bit_id],
                b.bit_id,
                b.register,
                b.bit,
                b.class,
                match b.safe_by {
                    Some(SafeBy::Coi) => "coi",
                    Some(SafeBy::Proof) => "proof",
                    None => "",
                },
                effects.join(";"),
                b.score,
                first.map(|(k, n, _)| format!("{n}@{k}")).unwrap_or_default(),
                first.and_then(|(_, _, a)| a).map(|a| a.to_string()).unwrap_or_default(),
                b.budget_exceeded
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let st = &self.stats;
        let mut s = String::new();
        let _ = writeln!(s, "bits: {} (k_max {}, induction {})", self.total_bits, self.k_max, if self.induction { "on" } else { "off" });
        let _ = writeln!(
            s,
            "safe: {} (coi {}), vulnerable: {}, undetermined: {}",
            self.count(BitClass::Safe),
            st.coi_safe_bits,
            self.count(BitClass::Vulnerable),
            self.count(BitClass::Undetermined)
        );
        let _ = writeln!(s, "\n{:<28} {:>8} {:>8} {:>8}", "property", "proven", "bounded", "failed");
        for r in &self.properties {
            let _ = writeln!(s, "{:<28} {:>8} {:>8} {:>8}", r.property, r.proven, r.bounded, r.failed);
        }
        let _ = writeln!(s, "\ntop bits:");
        for &id in self.ranking.iter().take(20) {
            let b = self.bit(id).expect("ranked bit");
            if b.score == 0 {
                break;
            }
            let _ = writeln!(s, "  {:<20} score {:>3}  {}", b.label, b.score, b.class_label());
        }
        let coi: Vec<&str> = self.bits.iter().filter(|b| b.safe_by == Some(SafeBy::Coi)).map(|b| b.label.as_str()).collect();
        let _ = writeln!(s, "\nsafe by cone of influence ({}): {}", coi.len(), coi.join(" "));
        let _ = writeln!(s, "\nchecks: {}, solver calls: {}, cache hits: {}, harvested: {}", st.checks, st.solver_calls, st.cache_hits, st.harvested);
        let _ = writeln!(s, "witness replays: {} ok, {} failed", st.replay_ok, st.replay_failed);
        let _ = writeln!(s, "consistency flags: {}, family disagreements: {}", st.consistency_flags, st.family_disagreements);
        for (f, t) in &st.family_secs {
            let _ = writeln!(s, "time {f}: {t:.1} s");
        }
        let _ = writeln!(s, "elapsed: {:.1} s{}", st.elapsed_secs, if st.partial { " (partial: budget exceeded)" } else { "" });
        s
    }

    /// Writes `properties.csv`, `bits.csv`, `summary.txt` and `summary.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), CampaignError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("properties.csv"), self.properties_csv())?;
        std::fs::write(dir.join("bits.csv"), self.bits_csv())?;
        std::fs::write(dir.join("summary.txt"), self.summary())?;
        let json = serde_json::to_string_pretty(self).map_err(|e| CampaignError::Config(e.to_string()))?;
        std::fs::write(dir.join("summary.json"), json)?;
        Ok(())
    }
}

/// Formal versus oracle classification.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agreement {
    /// `(formal class, oracle class)` → bit count; the oracle class is
    /// `None` or `Effect`.
    pub matrix: BTreeMap<(String, String), usize>,
    pub decided: usize,
    pub decided_agree: usize,
    pub undetermined: usize,
    /// Bits whose formal result conflicts with the oracle, with a reason.
    pub contradictions: Vec<(u32, String)>,
}

impl Agreement {
    pub fn percent(&self) -> f64 {
        if self.decided == 0 {
            100.0
        } else {
            100.0 * self.decided_agree as f64 / self.decided as f64
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>8} {:>8}", "formal\\oracle", "None", "Effect");
        for c in ["Safe", "Vulnerable", "Undetermined"] {
            let g = |o: &str| self.matrix.get(&(c.to_string(), o.to_string())).copied().unwrap_or(0);
            let _ = writeln!(s, "{:<14} {:>8} {:>8}", c, g("None"), g("Effect"));
        }
        let _ = writeln!(
            s,
            "agreement on decided bits: {}/{} ({:.1}%), undetermined: {}, contradictions: {}",
            self.decided_agree,
            self.decided,
            self.percent(),
            self.undetermined,
            self.contradictions.len()
        );
        for (b, why) in self.contradictions.iter().take(20) {
            let _ = writeln!(s, "  bit {b}: {why}");
        }
        s
    }
}

fn covered(formal: Effect, oracle: &BTreeSet<Effect>) -> bool {
    oracle.contains(&formal) || (formal == Effect::HangProgress && oracle.contains(&Effect::HangQuiet))
}

/// Compares a formal report with an oracle campaign over the same bits.
///
/// Safe bits must show no oracle effect; Vulnerable bits must show every
/// formal effect in the oracle; Undetermined bits must not carry a formal
/// effect the oracle lacks (they carry none, so they never contradict).
pub fn compare(report: &Report, oracle: &CampaignResult) -> Agreement {
    let mut a = Agreement::default();
    for b in &report.bits {
        let Some(o) = oracle.bits.get(&b.bit_id) else { continue };
        let oclass = if o.effects.is_empty() { "None" } else { "Effect" };
        *a.matrix.entry((format!("{:?}", b.class), oclass.to_string())).or_default() += 1;
        let missing: Vec<String> = b.effects.iter().filter(|&&e| !covered(e, &o.effects)).map(|e| e.to_string()).collect();
        match b.class {
            BitClass::Safe => {
                a.decided += 1;
                if o.effects.is_empty() {
                    a.decided_agree += 1;
                } else {
                    let e: Vec<String> = o.effects.iter().map(|e| e.to_string()).collect();
                    a.contradictions.push((b.bit_id, format!("{} Safe, oracle {}", b.label, e.join(","))));
                }
            }
            BitClass::Vulnerable => {
                a.decided += 1;
                if missing.is_empty() && !o.effects.is_empty() {
                    a.decided_agree += 1;
                } else {
                    a.contradictions.push((b.bit_id, format!("{} formal {} not in oracle", b.label, missing.join(","))));
                }
            }
            BitClass::Undetermined => {
                a.undetermined += 1;
                if !missing.is_empty() {
                    a.contradictions.push((b.bit_id, format!("{} formal {} not in oracle", b.label, missing.join(","))));
                }
            }
        }
    }
    a
}
