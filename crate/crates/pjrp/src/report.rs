//! Named exact-comparison entries shared by the verification and gap
//! reports. `margin` is always `lhs - rhs`, and `pass` records whether the
//! entry's stated relation holds for the exact values.

use crate::numerics::{format_rational, Rational};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq,
    Ge,
    Gt,
    Le,
    Lt,
}

impl Relation {
    fn holds(&self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    #[serde(with = "crate::numerics::rational_string")]
    pub lhs: Rational,
    #[serde(with = "crate::numerics::rational_string")]
    pub rhs: Rational,
    #[serde(with = "crate::numerics::rational_string")]
    pub margin: Rational,
    pub relation: Relation,
    pub pass: bool,
    pub notes: String,
}

impl ReportEntry {
    pub fn new(
        name: impl Into<String>,
        lhs: Rational,
        rhs: Rational,
        relation: Relation,
        notes: impl Into<String>,
    ) -> Self {
        let margin = &lhs - &rhs;
        let pass = relation.holds(&lhs, &rhs);
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            relation,
            pass,
            notes: notes.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn push(&mut self, entry: ReportEntry) {
        self.entries.push(entry);
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,lhs,rhs,margin,pass,notes\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.name,
                format_rational(&e.lhs),
                format_rational(&e.rhs),
                format_rational(&e.margin),
                e.pass,
                e.notes.replace(',', ";")
            ));
        }
        out
    }
}
