use crate::frontend::parser::SourceFile;
use crate::frontend::printer::print_tactic;
use crate::relational::{apply_tactic, Counterexample, RelGoal, Tactic, TacticError};

#[derive(Clone, Debug)]
pub enum Outcome {
    Proven,
    /// The open goal and why the script could not continue.
    Stuck(Box<RelGoal>, String),
    Counterexample(Box<RelGoal>, Box<Counterexample>),
}

impl Outcome {
    pub fn is_proven(&self) -> bool {
        matches!(self, Outcome::Proven)
    }
}

/// Runs the proof of `name`, or of each member in turn when `name` is a group.
pub fn check_script(file: &SourceFile, name: &str, fuel: u32) -> Result<Outcome, String> {
    if let Some(members) = file.group(name) {
        for m in members {
            let out = check_script(file, m, fuel)?;
            if !out.is_proven() {
                return Ok(out);
            }
        }
        return Ok(Outcome::Proven);
    }
    let goal = file.goal(name).ok_or_else(|| format!("no goal or group named `{name}`"))?;
    let Some(proof) = file.proof(name) else {
        return Ok(Outcome::Stuck(Box::new(goal.clone()), "no proof script".into()));
    };
    Ok(run_tactics(file, goal, &proof.tactics, fuel))
}

/// Applies tactics to the first open goal until none remain.
pub fn run_tactics(file: &SourceFile, goal: &RelGoal, tactics: &[Tactic], fuel: u32) -> Outcome {
    let mut open = vec![goal.clone()];
    for t in tactics {
        if let Tactic::Done = t {
            if let Some(g) = open.first() {
                return Outcome::Stuck(Box::new(g.clone()), format!("`done` with {} open goal(s)", open.len()));
            }
            continue;
        }
        let Some(g) = open.first().cloned() else {
            return Outcome::Stuck(Box::new(goal.clone()), format!("`{}` applied after the proof was complete", print_tactic(t)));
        };
        match apply_tactic(&file.decls, &g, t, fuel) {
            Ok(subs) => {
                open.splice(0..1, subs);
            }
            Err(TacticError::Refuted(c)) => return Outcome::Counterexample(Box::new(g), c),
            Err(e) => return Outcome::Stuck(Box::new(g), format!("{}: {e}", print_tactic(t))),
        }
    }
    match open.into_iter().next() {
        None => Outcome::Proven,
        Some(g) => Outcome::Stuck(Box::new(g), "proof incomplete".into()),
    }
}
