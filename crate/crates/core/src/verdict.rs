use serde::Serialize;

/// Epistemic status of a reported claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Computed exactly and matches.
    Verified,
    /// Matches a cited external constant that is not recomputed.
    Consistent,
    /// A hypothesis carried as a flag.
    Assumed,
    /// Computed exactly and does not match.
    Failed,
}

impl Verdict {
    pub fn from_check(ok: bool) -> Self {
        if ok {
            Verdict::Verified
        } else {
            Verdict::Failed
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Verified => "VERIFIED",
            Verdict::Consistent => "CONSISTENT",
            Verdict::Assumed => "ASSUMED",
            Verdict::Failed => "FAILED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl Claim {
    pub fn new(id: impl Into<String>, statement: impl Into<String>, verdict: Verdict, detail: impl Into<String>) -> Self {
        Claim { id: id.into(), statement: statement.into(), verdict, detail: detail.into() }
    }

    pub fn check(id: impl Into<String>, statement: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(id, statement, Verdict::from_check(ok), detail)
    }
}
