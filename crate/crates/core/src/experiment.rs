//! Experiment bookkeeping: candidates, status transitions, best-tracking,
//! and the CSV result log.
//!
//! An [`Experiment`] owns the parameter definitions and three disjoint
//! candidate lists — finished, pending, working. Every state change goes
//! through [`Experiment::update`], which enforces validation and keeps the
//! lists a partition. The CSV format is fixed byte-for-byte so result logs
//! diff cleanly across runs.

use indexmap::IndexMap;
use thiserror::Error;

use crate::param_space::{ParamDef, ParamMap, ParamValue};

/// One hyperparameter assignment, with its evaluation outcome once known.
///
/// Identity is the opaque `id`, not parameter equality — two candidates may
/// share the same values. An empty `id` means "not yet admitted"; the
/// experiment mints one on first update.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub params: IndexMap<String, ParamValue>,
    pub result: Option<f64>,
    pub cost: Option<f64>,
    pub worker_info: Option<String>,
}

impl Candidate {
    pub fn new(params: IndexMap<String, ParamValue>) -> Self {
        Candidate {
            id: String::new(),
            params,
            result: None,
            cost: None,
            worker_info: None,
        }
    }

    pub fn with_result(mut self, result: f64) -> Self {
        self.result = Some(result);
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = Some(cost);
        self
    }
}

/// Where a candidate sits in its lifecycle. `Pausing` parks it on the
/// pending list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateStatus {
    Finished,
    Pausing,
    Working,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment definition: {0}")]
    BadDefinition(String),
    #[error("candidate `{id}` fails validation on dimensions: {}", dims.join(", "))]
    InvalidCandidate { id: String, dims: Vec<String> },
    #[error("a finished candidate requires a finite result")]
    MissingResult,
    #[error("candidate result must be finite when present")]
    BadResult,
    #[error("candidate cost must be non-negative and finite")]
    BadCost,
    #[error("malformed results CSV: {0}")]
    Parse(String),
}

/// The bookkeeping aggregate for one optimization run.
#[derive(Debug, Clone)]
pub struct Experiment {
    name: String,
    param_defs: ParamMap,
    minimization: bool,
    finished: Vec<Candidate>,
    pending: Vec<Candidate>,
    working: Vec<Candidate>,
    next_id: u64,
}

fn valid_dimension_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Experiment {
    /// Builds an empty experiment, checking every parameter definition and
    /// restricting dimension names to `[A-Za-z0-9_]+` so the CSV format
    /// never needs quoting.
    pub fn new(
        name: impl Into<String>,
        param_defs: ParamMap,
        minimization: bool,
    ) -> Result<Self, ExperimentError> {
        if param_defs.is_empty() {
            return Err(ExperimentError::BadDefinition(
                "experiment needs at least one dimension".into(),
            ));
        }
        for (dim, def) in &param_defs {
            if !valid_dimension_name(dim) {
                return Err(ExperimentError::BadDefinition(format!(
                    "dimension name `{}` is not [A-Za-z0-9_]+",
                    dim
                )));
            }
            def.check()
                .map_err(|e| ExperimentError::BadDefinition(format!("dimension `{}`: {}", dim, e)))?;
        }
        Ok(Experiment {
            name: name.into(),
            param_defs,
            minimization,
            finished: Vec::new(),
            pending: Vec::new(),
            working: Vec::new(),
            next_id: 1,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn param_defs(&self) -> &ParamMap {
        &self.param_defs
    }

    pub fn minimization(&self) -> bool {
        self.minimization
    }

    pub fn finished(&self) -> &[Candidate] {
        &self.finished
    }

    pub fn pending(&self) -> &[Candidate] {
        &self.pending
    }

    pub fn working(&self) -> &[Candidate] {
        &self.working
    }

    /// The best finished candidate — minimal result for minimization
    /// experiments, maximal otherwise; ties go to the earliest finish.
    pub fn best(&self) -> Option<&Candidate> {
        let mut best: Option<&Candidate> = None;
        for c in &self.finished {
            let r = c.result.expect("finished candidates always carry results");
            let better = match best.and_then(|b| b.result) {
                None => true,
                Some(current) => {
                    if self.minimization {
                        r < current
                    } else {
                        r > current
                    }
                }
            };
            if better {
                best = Some(c);
            }
        }
        best
    }

    pub fn best_result(&self) -> Option<f64> {
        self.best().and_then(|c| c.result)
    }

    /// True iff the candidate's key set matches the experiment's dimensions
    /// and every value lies in its definition's domain.
    pub fn validate_candidate(&self, candidate: &Candidate) -> bool {
        self.offending_dimensions(candidate).is_empty()
    }

    fn offending_dimensions(&self, candidate: &Candidate) -> Vec<String> {
        let mut offending: Vec<String> = Vec::new();
        for (dim, def) in &self.param_defs {
            match candidate.params.get(dim) {
                None => offending.push(format!("{} (missing)", dim)),
                Some(v) if !def.validate(v) => offending.push(format!("{} (out of domain)", dim)),
                Some(_) => {}
            }
        }
        for dim in candidate.params.keys() {
            if !self.param_defs.contains_key(dim) {
                offending.push(format!("{} (unknown)", dim));
            }
        }
        offending
    }

    /// Admits or moves a candidate. The candidate lands on the list matching
    /// `status` and disappears from the others; an empty id gets a freshly
    /// minted one. Returns a reference to the stored candidate.
    pub fn update(
        &mut self,
        mut candidate: Candidate,
        status: CandidateStatus,
    ) -> Result<&Candidate, ExperimentError> {
        let offending = self.offending_dimensions(&candidate);
        if !offending.is_empty() {
            return Err(ExperimentError::InvalidCandidate {
                id: candidate.id.clone(),
                dims: offending,
            });
        }
        if let Some(r) = candidate.result {
            if !r.is_finite() {
                return Err(ExperimentError::BadResult);
            }
        }
        if let Some(c) = candidate.cost {
            if !c.is_finite() || c < 0.0 {
                return Err(ExperimentError::BadCost);
            }
        }
        if status == CandidateStatus::Finished && candidate.result.is_none() {
            return Err(ExperimentError::MissingResult);
        }

        if candidate.id.is_empty() {
            candidate.id = format!("c{}", self.next_id);
            self.next_id += 1;
        } else {
            // Externally minted ids that look like ours must not collide
            // with future mints.
            if let Some(n) = candidate.id.strip_prefix('c').and_then(|s| s.parse::<u64>().ok()) {
                self.next_id = self.next_id.max(n + 1);
            }
            self.remove_everywhere(&candidate.id);
        }

        let list = match status {
            CandidateStatus::Finished => &mut self.finished,
            CandidateStatus::Pausing => &mut self.pending,
            CandidateStatus::Working => &mut self.working,
        };
        list.push(candidate);
        Ok(list.last().expect("just pushed"))
    }

    fn remove_everywhere(&mut self, id: &str) {
        self.finished.retain(|c| c.id != id);
        self.pending.retain(|c| c.id != id);
        self.working.retain(|c| c.id != id);
    }

    fn csv_header(&self) -> String {
        let mut header = String::from("step,id,status,result,cost,best_result");
        for dim in self.param_defs.keys() {
            header.push(',');
            header.push_str(dim);
        }
        header
    }

    /// Serializes the finished candidates in finish order.
    ///
    /// Exact format: header `step,id,status,result,cost,best_result,<dims>`,
    /// `\n` line endings, numbers in shortest round-trip form, empty cells
    /// for absent optionals. Byte-deterministic for a given state.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        let mut running_best: Option<f64> = None;
        for (i, c) in self.finished.iter().enumerate() {
            let r = c.result.expect("finished candidates always carry results");
            let improved = match running_best {
                None => true,
                Some(b) => {
                    if self.minimization {
                        r < b
                    } else {
                        r > b
                    }
                }
            };
            if improved {
                running_best = Some(r);
            }
            out.push_str(&format!(
                "{},{},finished,{},{},{}",
                i + 1,
                c.id,
                r,
                c.cost.map(|v| v.to_string()).unwrap_or_default(),
                running_best.expect("set on first row"),
            ));
            for dim in self.param_defs.keys() {
                out.push(',');
                out.push_str(&c.params[dim].to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Rebuilds an experiment's finished history from [`Experiment::to_csv`]
    /// output. Reserialization of the parsed experiment reproduces the input
    /// byte-for-byte.
    pub fn from_csv(
        name: impl Into<String>,
        param_defs: ParamMap,
        minimization: bool,
        text: &str,
    ) -> Result<Self, ExperimentError> {
        let mut experiment = Experiment::new(name, param_defs, minimization)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| ExperimentError::Parse("missing header".into()))?;
        if header != experiment.csv_header() {
            return Err(ExperimentError::Parse(format!(
                "header `{}` does not match the experiment's dimensions",
                header
            )));
        }
        let n_fixed = 6;
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != n_fixed + experiment.param_defs.len() {
                return Err(ExperimentError::Parse(format!(
                    "line {}: expected {} cells, got {}",
                    lineno + 2,
                    n_fixed + experiment.param_defs.len(),
                    cells.len()
                )));
            }
            if cells[2] != "finished" {
                return Err(ExperimentError::Parse(format!(
                    "line {}: unexpected status `{}`",
                    lineno + 2,
                    cells[2]
                )));
            }
            let parse_real = |cell: &str| {
                cell.parse::<f64>().map_err(|_| {
                    ExperimentError::Parse(format!("line {}: bad number `{}`", lineno + 2, cell))
                })
            };
            let result = parse_real(cells[3])?;
            let cost = if cells[4].is_empty() {
                None
            } else {
                Some(parse_real(cells[4])?)
            };
            let mut params = IndexMap::with_capacity(experiment.param_defs.len());
            for ((dim, def), cell) in experiment.param_defs.iter().zip(&cells[n_fixed..]) {
                let value = match def {
                    ParamDef::Nominal { .. } | ParamDef::Ordinal { .. } => {
                        ParamValue::Token((*cell).to_owned())
                    }
                    _ => ParamValue::Real(parse_real(cell)?),
                };
                params.insert(dim.clone(), value);
            }
            let candidate = Candidate {
                id: cells[1].to_owned(),
                params,
                result: Some(result),
                cost,
                worker_info: None,
            };
            experiment.update(candidate, CandidateStatus::Finished)?;
        }
        Ok(experiment)
    }
}
