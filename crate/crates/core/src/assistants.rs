//! The user-facing façade: an assistant per experiment (ask/tell/best/CSV)
//! and a lab assistant that runs several experiments side by side, shares
//! initial samples between them, and emits comparison data as CSV plus a
//! dependency-free SVG chart.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use thiserror::Error;

use crate::experiment::{Candidate, CandidateStatus, Experiment, ExperimentError};
use crate::optimizers::{self, Optimizer, OptimizerError, OptimizerParams};
use crate::param_space::{sample_params, ParamMap, ParamValue};
use crate::seed;

#[derive(Debug, Error)]
pub enum AssistantError {
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("experiment name `{0}` already exists in this lab")]
    DuplicateName(String),
    #[error("experiment name `{0}` is not [A-Za-z0-9_-]+")]
    BadName(String),
    #[error("no experiments")]
    NoExperiments,
    #[error("experiment `{0}` does not share the lab's parameter space")]
    MismatchedSpaces(String),
    #[error("experiment `{0}` has already started; shared initials must come first")]
    AlreadyStarted(String),
    #[error("assistant has no CSV sink configured")]
    NoCsvSink,
}

/// When result CSVs hit disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvWritePolicy {
    /// Rewrite the file after every finished tell.
    OnUpdate,
    /// Only write when explicitly asked via [`ExperimentAssistant::write_csv`].
    OnDemand,
}

#[derive(Debug, Clone)]
pub struct CsvSink {
    pub path: PathBuf,
    pub policy: CsvWritePolicy,
}

/// Administers one experiment: proposals come from its optimizer, results
/// go into its history, and an optional CSV sink mirrors the finished list.
pub struct ExperimentAssistant {
    experiment: Experiment,
    optimizer: Box<dyn Optimizer>,
    optimizer_name: String,
    csv_sink: Option<CsvSink>,
}

impl ExperimentAssistant {
    /// Builds a fresh assistant: empty histories, optimizer constructed by
    /// name (`random` or `bayes`). Unsupported configurations (unknown
    /// names, Bayesian optimization over nominal dimensions) error here.
    pub fn new(
        name: impl Into<String>,
        optimizer_name: &str,
        optimizer_params: OptimizerParams,
        param_defs: ParamMap,
        minimization: bool,
    ) -> Result<Self, AssistantError> {
        let experiment = Experiment::new(name, param_defs, minimization)?;
        let optimizer = optimizers::by_name(optimizer_name, optimizer_params, &experiment)?;
        Ok(ExperimentAssistant {
            experiment,
            optimizer,
            optimizer_name: optimizer_name.to_owned(),
            csv_sink: None,
        })
    }

    pub fn with_csv_sink(mut self, path: impl Into<PathBuf>, policy: CsvWritePolicy) -> Self {
        self.csv_sink = Some(CsvSink {
            path: path.into(),
            policy,
        });
        self
    }

    pub fn experiment(&self) -> &Experiment {
        &self.experiment
    }

    pub fn optimizer_name(&self) -> &str {
        &self.optimizer_name
    }

    /// Asks the optimizer for one proposal and records it as pending.
    pub fn get_next_candidate(&mut self) -> Result<Candidate, AssistantError> {
        let candidate = self
            .optimizer
            .get_next_candidates(&self.experiment, 1)?
            .remove(0);
        let admitted = self
            .experiment
            .update(candidate, CandidateStatus::Pausing)?
            .clone();
        Ok(admitted)
    }

    /// Reports progress on a candidate. Finished tells flush the CSV sink
    /// when its policy is on-update.
    pub fn tell(
        &mut self,
        candidate: Candidate,
        status: CandidateStatus,
    ) -> Result<(), AssistantError> {
        self.experiment.update(candidate, status)?;
        if status == CandidateStatus::Finished {
            if let Some(sink) = &self.csv_sink {
                if sink.policy == CsvWritePolicy::OnUpdate {
                    let path = sink.path.clone();
                    self.write_csv_to(&path)?;
                }
            }
        }
        Ok(())
    }

    /// Writes the finished history to the configured sink path.
    pub fn write_csv(&self) -> Result<PathBuf, AssistantError> {
        let sink = self.csv_sink.as_ref().ok_or(AssistantError::NoCsvSink)?;
        let path = sink.path.clone();
        self.write_csv_to(&path)?;
        Ok(path)
    }

    fn write_csv_to(&self, path: &Path) -> Result<(), AssistantError> {
        write_atomic(path, self.experiment.to_csv().as_bytes())?;
        Ok(())
    }

    /// Cumulative best result after each finished evaluation, in finish
    /// order: `[(1, best_after_1), (2, best_after_2), ...]`.
    pub fn best_result_series(&self) -> Vec<(usize, f64)> {
        let minimization = self.experiment.minimization();
        let mut best = f64::NAN;
        self.experiment
            .finished()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let r = c.result.expect("finished candidates always carry results");
                if i == 0 || (minimization && r < best) || (!minimization && r > best) {
                    best = r;
                }
                (i + 1, best)
            })
            .collect()
    }
}

/// Runs several experiments over the same parameter space and compares
/// their progress.
#[derive(Default)]
pub struct LabAssistant {
    assistants: IndexMap<String, ExperimentAssistant>,
}

impl LabAssistant {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a new experiment under a unique name. Names become output
    /// directory names, so they are restricted to `[A-Za-z0-9_-]+`.
    pub fn init_experiment(
        &mut self,
        name: &str,
        optimizer_name: &str,
        optimizer_params: OptimizerParams,
        param_defs: ParamMap,
        minimization: bool,
    ) -> Result<&mut ExperimentAssistant, AssistantError> {
        if name.is_empty()
            || !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(AssistantError::BadName(name.to_owned()));
        }
        if self.assistants.contains_key(name) {
            return Err(AssistantError::DuplicateName(name.to_owned()));
        }
        let assistant = ExperimentAssistant::new(
            name,
            optimizer_name,
            optimizer_params,
            param_defs,
            minimization,
        )?;
        Ok(self.assistants.entry(name.to_owned()).or_insert(assistant))
    }

    pub fn assistant(&mut self, name: &str) -> Option<&mut ExperimentAssistant> {
        self.assistants.get_mut(name)
    }

    pub fn assistants(&self) -> impl Iterator<Item = (&String, &ExperimentAssistant)> {
        self.assistants.iter()
    }

    pub fn assistants_mut(&mut self) -> impl Iterator<Item = (&String, &mut ExperimentAssistant)> {
        self.assistants.iter_mut()
    }

    pub fn is_empty(&self) -> bool {
        self.assistants.is_empty()
    }

    /// Draws `count` random parameter vectors once and queues the identical
    /// set as the forced first proposals of every managed experiment, so all
    /// optimizers start from the same evidence.
    pub fn inject_shared_initial(&mut self, count: usize, seed_val: u64) -> Result<(), AssistantError> {
        if count == 0 {
            return Ok(());
        }
        if self.assistants.is_empty() {
            return Err(AssistantError::NoExperiments);
        }
        let reference_defs = self.assistants[0].experiment.param_defs().clone();
        for (name, a) in &self.assistants {
            let e = &a.experiment;
            if !e.finished().is_empty() || !e.pending().is_empty() || !e.working().is_empty() {
                return Err(AssistantError::AlreadyStarted(name.clone()));
            }
            if *e.param_defs() != reference_defs {
                return Err(AssistantError::MismatchedSpaces(name.clone()));
            }
        }
        let mut rng = seed::rng(seed_val);
        let shared: Vec<IndexMap<String, ParamValue>> = (0..count)
            .map(|_| sample_params(&reference_defs, &mut rng))
            .collect();
        for a in self.assistants.values_mut() {
            a.optimizer.force_proposals(shared.clone());
        }
        Ok(())
    }

    /// Writes `<out_dir>/<name>/results.csv` per experiment, a combined
    /// `comparison.csv` (step plus one best-result column per experiment),
    /// and `comparison.svg` (line chart of the best-result series). Output
    /// bytes depend only on experiment state. Returns the written paths.
    pub fn compare_and_emit(&self, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, AssistantError> {
        if self.assistants.is_empty() {
            return Err(AssistantError::NoExperiments);
        }
        let out_dir = out_dir.as_ref();
        fs::create_dir_all(out_dir)?;
        let mut written = Vec::new();

        for (name, a) in &self.assistants {
            let dir = out_dir.join(name);
            fs::create_dir_all(&dir)?;
            let path = dir.join("results.csv");
            write_atomic(&path, a.experiment.to_csv().as_bytes())?;
            written.push(path);
        }

        let series: Vec<(&str, Vec<(usize, f64)>)> = self
            .assistants
            .iter()
            .map(|(name, a)| (name.as_str(), a.best_result_series()))
            .collect();

        let mut combined = String::from("step");
        for (name, _) in &series {
            combined.push(',');
            combined.push_str(name);
        }
        combined.push('\n');
        let max_steps = series.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
        for step in 1..=max_steps {
            combined.push_str(&step.to_string());
            for (_, s) in &series {
                combined.push(',');
                if let Some((_, best)) = s.get(step - 1) {
                    combined.push_str(&best.to_string());
                }
            }
            combined.push('\n');
        }
        let combined_path = out_dir.join("comparison.csv");
        write_atomic(&combined_path, combined.as_bytes())?;
        written.push(combined_path);

        let svg_path = out_dir.join("comparison.svg");
        write_atomic(&svg_path, render_series_chart(&series).as_bytes())?;
        written.push(svg_path);

        Ok(written)
    }
}

/// Writes through a temp file and renames, so readers never see a torn file.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

const CHART_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders best-result series as a static polyline chart: axes, ticks,
/// labels, legend. Pure string assembly, so output is byte-deterministic.
fn render_series_chart(series: &[(&str, Vec<(usize, f64)>)]) -> String {
    let (width, height) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 24.0, 24.0, 56.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let max_step = series
        .iter()
        .flat_map(|(_, s)| s.iter().map(|&(step, _)| step))
        .max()
        .unwrap_or(1) as f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, s) in series {
        for &(_, y) in s {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if y_max - y_min < 1e-12 {
        let pad = y_min.abs().max(0.5) * 0.1;
        y_min -= pad;
        y_max += pad;
    } else {
        let pad = (y_max - y_min) * 0.05;
        y_min -= pad;
        y_max += pad;
    }
    let x_lo = 1.0_f64.min(max_step);
    let x_span = (max_step - x_lo).max(1e-12);
    let to_x = |step: f64| left + (step - x_lo) / x_span * plot_w;
    let to_y = |y: f64| top + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = width,
        h = height
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        width, height
    ));
    svg.push_str(&format!(
        "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>\n",
        left, top, plot_w, plot_h
    ));

    // Axis ticks: a handful of evenly spaced labels on each side.
    let tick_count = 5;
    let mut seen_steps = Vec::new();
    for i in 0..tick_count {
        let frac = i as f64 / (tick_count - 1) as f64;
        let step = (x_lo + frac * x_span).round();
        if seen_steps.contains(&(step as u64)) {
            continue;
        }
        seen_steps.push(step as u64);
        let x = to_x(step);
        svg.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{y1:.2}\" x2=\"{x:.2}\" y2=\"{y2:.2}\" stroke=\"#444\"/>\n",
            x = x,
            y1 = top + plot_h,
            y2 = top + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            x,
            top + plot_h + 20.0,
            step as u64
        ));
    }
    for i in 0..tick_count {
        let frac = i as f64 / (tick_count - 1) as f64;
        let y_val = y_min + frac * (y_max - y_min);
        let y = to_y(y_val);
        svg.push_str(&format!(
            "  <line x1=\"{x1:.2}\" y1=\"{y:.2}\" x2=\"{x2:.2}\" y2=\"{y:.2}\" stroke=\"#444\"/>\n",
            x1 = left - 5.0,
            x2 = left,
            y = y
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            left - 9.0,
            y + 4.0,
            format_tick(y_val)
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">evaluations</text>\n",
        left + plot_w / 2.0,
        height - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 {x} {y})\">best result</text>\n",
        18.0,
        top + plot_h / 2.0,
        x = 18.0,
        y = top + plot_h / 2.0
    ));

    for (idx, (name, s)) in series.iter().enumerate() {
        let color = CHART_COLORS[idx % CHART_COLORS.len()];
        if !s.is_empty() {
            let points: Vec<String> = s
                .iter()
                .map(|&(step, y)| format!("{:.2},{:.2}", to_x(step as f64), to_y(y)))
                .collect();
            svg.push_str(&format!(
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                points.join(" "),
                color
            ));
        }
        // Legend swatch + label, stacked in the top-right corner.
        let ly = top + 10.0 + idx as f64 * 18.0;
        svg.push_str(&format!(
            "  <line x1=\"{x1:.2}\" y1=\"{y:.2}\" x2=\"{x2:.2}\" y2=\"{y:.2}\" stroke=\"{c}\" stroke-width=\"2\"/>\n",
            x1 = left + plot_w - 130.0,
            x2 = left + plot_w - 106.0,
            y = ly,
            c = color
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            left + plot_w - 100.0,
            ly + 4.0,
            name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Compact tick label: fixed precision with trailing zeros trimmed.
fn format_tick(v: f64) -> String {
    let mut s = format!("{:.4}", v);
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param_space::ParamDef;

    fn unit_space() -> ParamMap {
        let mut defs = ParamMap::new();
        defs.insert("x".into(), ParamDef::min_max(0.0, 1.0).unwrap());
        defs
    }

    fn finished(x: f64, result: f64) -> Candidate {
        Candidate::new(
            [("x".to_string(), ParamValue::Real(x))].into_iter().collect(),
        )
        .with_result(result)
    }

    #[test]
    fn init_builds_an_empty_assistant_and_bad_configs_error() {
        let a = ExperimentAssistant::new(
            "exp1",
            "random",
            OptimizerParams::default(),
            unit_space(),
            true,
        )
        .unwrap();
        assert_eq!(a.experiment().finished().len(), 0);

        assert!(matches!(
            ExperimentAssistant::new(
                "exp2",
                "simulated_annealing",
                OptimizerParams::default(),
                unit_space(),
                true,
            ),
            Err(AssistantError::Optimizer(OptimizerError::UnknownName(_)))
        ));

        let mut nominal = ParamMap::new();
        nominal.insert("act".into(), ParamDef::nominal(["relu", "tanh"]).unwrap());
        assert!(matches!(
            ExperimentAssistant::new(
                "exp3",
                "bayes",
                OptimizerParams::default(),
                nominal,
                true
            ),
            Err(AssistantError::Optimizer(OptimizerError::NominalUnsupported))
        ));
    }

    #[test]
    fn ask_records_pending_and_tell_moves_to_finished() {
        let mut a = ExperimentAssistant::new(
            "t",
            "random",
            OptimizerParams::default(),
            unit_space(),
            true,
        )
        .unwrap();
        let c1 = a.get_next_candidate().unwrap();
        assert!(a.experiment().validate_candidate(&c1));
        assert_eq!(a.experiment().pending().len(), 1);

        let c2 = a.get_next_candidate().unwrap();
        assert_eq!(a.experiment().pending().len(), 2);
        assert_ne!(c1.id, c2.id);
        assert_ne!(c1.params, c2.params);

        a.tell(c1.with_result(0.5), CandidateStatus::Finished).unwrap();
        a.tell(c2.with_result(0.25), CandidateStatus::Finished).unwrap();
        let c3 = a.get_next_candidate().unwrap();
        assert_eq!(a.experiment().pending().len(), 1);
        assert_eq!(a.experiment().pending()[0].id, c3.id);
        assert_eq!(a.experiment().finished().len(), 2);
        assert_eq!(a.experiment().best_result(), Some(0.25));
    }

    #[test]
    fn tell_rejects_candidates_from_the_wrong_space() {
        let mut a = ExperimentAssistant::new(
            "t",
            "random",
            OptimizerParams::default(),
            unit_space(),
            true,
        )
        .unwrap();
        let alien = Candidate::new(
            [("y".to_string(), ParamValue::Real(0.5))].into_iter().collect(),
        )
        .with_result(1.0);
        assert!(a.tell(alien, CandidateStatus::Finished).is_err());
    }

    #[test]
    fn best_result_series_tracks_the_cumulative_best() {
        let mut a = ExperimentAssistant::new(
            "min",
            "random",
            OptimizerParams::default(),
            unit_space(),
            true,
        )
        .unwrap();
        assert!(a.best_result_series().is_empty());
        for (i, r) in [3.0, 5.0, 2.0].into_iter().enumerate() {
            a.tell(finished(i as f64 * 0.1, r), CandidateStatus::Finished)
                .unwrap();
        }
        assert_eq!(a.best_result_series(), vec![(1, 3.0), (2, 3.0), (3, 2.0)]);

        let mut b = ExperimentAssistant::new(
            "max",
            "random",
            OptimizerParams::default(),
            unit_space(),
            false,
        )
        .unwrap();
        for (i, r) in [1.0, 0.0, 2.0].into_iter().enumerate() {
            b.tell(finished(i as f64 * 0.1, r), CandidateStatus::Finished)
                .unwrap();
        }
        assert_eq!(b.best_result_series(), vec![(1, 1.0), (2, 1.0), (3, 2.0)]);

        let mut single = ExperimentAssistant::new(
            "one",
            "random",
            OptimizerParams::default(),
            unit_space(),
            true,
        )
        .unwrap();
        single.tell(finished(0.5, 1.0), CandidateStatus::Finished).unwrap();
        assert_eq!(single.best_result_series(), vec![(1, 1.0)]);
    }

    #[test]
    fn csv_sink_policies_write_when_promised() {
        let dir = tempfile::tempdir().unwrap();
        let on_update = dir.path().join("on_update.csv");
        let mut a = ExperimentAssistant::new(
            "t",
            "random",
            OptimizerParams::default(),
            unit_space(),
            true,
        )
        .unwrap()
        .with_csv_sink(&on_update, CsvWritePolicy::OnUpdate);
        assert!(!on_update.exists());
        a.tell(finished(0.5, 2.0), CandidateStatus::Finished).unwrap();
        let text = fs::read_to_string(&on_update).unwrap();
        assert_eq!(text, "step,id,status,result,cost,best_result,x\n1,c1,finished,2,,2,0.5\n");

        let on_demand = dir.path().join("on_demand.csv");
        let mut b = ExperimentAssistant::new(
            "t",
            "random",
            OptimizerParams::default(),
            unit_space(),
            true,
        )
        .unwrap()
        .with_csv_sink(&on_demand, CsvWritePolicy::OnDemand);
        b.tell(finished(0.5, 2.0), CandidateStatus::Finished).unwrap();
        assert!(!on_demand.exists());
        b.write_csv().unwrap();
        assert!(on_demand.exists());
    }

    #[test]
    fn lab_rejects_duplicate_and_unsafe_names() {
        let mut lab = LabAssistant::new();
        lab.init_experiment("a", "random", OptimizerParams::default(), unit_space(), true)
            .unwrap();
        assert!(matches!(
            lab.init_experiment("a", "random", OptimizerParams::default(), unit_space(), true),
            Err(AssistantError::DuplicateName(_))
        ));
        assert!(matches!(
            lab.init_experiment("../evil", "random", OptimizerParams::default(), unit_space(), true),
            Err(AssistantError::BadName(_))
        ));
    }

    #[test]
    fn shared_initials_give_every_experiment_identical_first_draws() {
        let mut lab = LabAssistant::new();
        lab.init_experiment("rand", "random", OptimizerParams { seed: 1, ..OptimizerParams::default() }, unit_space(), true)
            .unwrap();
        lab.init_experiment("bo", "bayes", OptimizerParams { seed: 2, ..OptimizerParams::default() }, unit_space(), true)
            .unwrap();
        lab.inject_shared_initial(10, 7).unwrap();

        let mut first_params = Vec::new();
        for step in 0..10 {
            let mut told = Vec::new();
            for (_, a) in lab.assistants_mut() {
                let c = a.get_next_candidate().unwrap();
                told.push((c.params.clone(), c));
            }
            assert_eq!(told[0].0, told[1].0, "step {} params differ", step);
            first_params.push(told[0].0.clone());
            for (_, a) in lab.assistants_mut() {
                let (_, c) = told.remove(0);
                a.tell(c.with_result(step as f64), CandidateStatus::Finished)
                    .unwrap();
            }
        }

        // Same seed, fresh lab: the injected set reproduces bit for bit.
        let mut lab2 = LabAssistant::new();
        lab2.init_experiment("only", "random", OptimizerParams::default(), unit_space(), true)
            .unwrap();
        lab2.inject_shared_initial(10, 7).unwrap();
        for expected in &first_params {
            let c = lab2.assistant("only").unwrap().get_next_candidate().unwrap();
            assert_eq!(&c.params, expected);
        }
    }

    #[test]
    fn shared_initial_edge_cases() {
        let mut empty = LabAssistant::new();
        assert!(matches!(
            empty.inject_shared_initial(5, 0),
            Err(AssistantError::NoExperiments)
        ));
        assert!(empty.inject_shared_initial(0, 0).is_ok());

        let mut started = LabAssistant::new();
        started
            .init_experiment("a", "random", OptimizerParams::default(), unit_space(), true)
            .unwrap();
        started
            .assistant("a")
            .unwrap()
            .tell(finished(0.5, 1.0), CandidateStatus::Finished)
            .unwrap();
        assert!(matches!(
            started.inject_shared_initial(5, 0),
            Err(AssistantError::AlreadyStarted(_))
        ));

        let mut mismatched = LabAssistant::new();
        mismatched
            .init_experiment("a", "random", OptimizerParams::default(), unit_space(), true)
            .unwrap();
        let mut other = ParamMap::new();
        other.insert("x".into(), ParamDef::min_max(0.0, 2.0).unwrap());
        mismatched
            .init_experiment("b", "random", OptimizerParams::default(), other, true)
            .unwrap();
        assert!(matches!(
            mismatched.inject_shared_initial(5, 0),
            Err(AssistantError::MismatchedSpaces(_))
        ));
    }

    #[test]
    fn compare_and_emit_writes_deterministic_outputs() {
        let mut lab = LabAssistant::new();
        lab.init_experiment("alpha", "random", OptimizerParams::default(), unit_space(), true)
            .unwrap();
        lab.init_experiment("beta", "random", OptimizerParams::default(), unit_space(), true)
            .unwrap();
        for (name, results) in [("alpha", [3.0, 1.0, 2.0]), ("beta", [4.0, 2.5, 0.5])] {
            let a = lab.assistant(name).unwrap();
            for (i, r) in results.into_iter().enumerate() {
                a.tell(finished(i as f64 * 0.2, r), CandidateStatus::Finished)
                    .unwrap();
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("cmp");
        let written = lab.compare_and_emit(&out).unwrap();
        assert_eq!(written.len(), 4);
        assert!(out.join("alpha/results.csv").exists());
        assert!(out.join("beta/results.csv").exists());

        let combined = fs::read_to_string(out.join("comparison.csv")).unwrap();
        assert_eq!(combined, "step,alpha,beta\n1,3,4\n2,1,2.5\n3,1,0.5\n");

        let svg = fs::read_to_string(out.join("comparison.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">alpha</text>"));
        assert!(svg.contains(">beta</text>"));
        assert!(svg.contains("evaluations"));
        assert!(svg.contains("best result"));

        // Rerun on unchanged state: identical bytes everywhere.
        lab.compare_and_emit(&out).unwrap();
        assert_eq!(fs::read_to_string(out.join("comparison.csv")).unwrap(), combined);
        assert_eq!(fs::read_to_string(out.join("comparison.svg")).unwrap(), svg);

        let empty = LabAssistant::new();
        let err = empty.compare_and_emit(&out).unwrap_err();
        assert!(err.to_string().contains("no experiments"));
    }

    #[test]
    fn interleaved_asks_and_tells_keep_the_partition_consistent() {
        let mut a = ExperimentAssistant::new(
            "t",
            "bayes",
            OptimizerParams {
                initial_random_count: 4,
                ..OptimizerParams::default()
            },
            unit_space(),
            true,
        )
        .unwrap();
        let mut open = Vec::new();
        for step in 0..12 {
            open.push(a.get_next_candidate().unwrap());
            if step % 3 != 0 {
                let c = open.remove(0);
                let x = c.params["x"].as_real().unwrap();
                a.tell(c.with_result((x - 0.3).abs()), CandidateStatus::Finished)
                    .unwrap();
            }
        }
        let e = a.experiment();
        assert_eq!(e.finished().len() + e.pending().len(), 12);
        let series = a.best_result_series();
        for win in series.windows(2) {
            assert!(win[1].1 <= win[0].1, "series not monotone: {:?}", series);
        }
    }
}
