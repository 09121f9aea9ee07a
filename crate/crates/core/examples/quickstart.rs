//! Minimal ask/tell loop: Bayesian optimization of a 2-D toy loss.

use hypertune_core::assistants::ExperimentAssistant;
use hypertune_core::experiment::CandidateStatus;
use hypertune_core::optimizers::OptimizerParams;
use hypertune_core::param_space::{ParamDef, ParamMap};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut space = ParamMap::new();
    space.insert("x".into(), ParamDef::min_max(-5.0, 10.0)?);
    space.insert("lr".into(), ParamDef::asymptotic(0.0, 1.0)?); // log-ish toward 0

    let mut assistant = ExperimentAssistant::new(
        "demo",
        "bayes",
        OptimizerParams::default(),
        space,
        true,
    )?;

    for _ in 0..30 {
        let candidate = assistant.get_next_candidate()?;
        let x = candidate.params["x"].as_real().unwrap();
        let lr = candidate.params["lr"].as_real().unwrap();
        let loss = (x - 2.0).powi(2) + (lr.log10() + 3.0).powi(2);
        assistant.tell(candidate.with_result(loss), CandidateStatus::Finished)?;
    }
    println!("best: {:?}", assistant.experiment().best_result());
    Ok(())
}
