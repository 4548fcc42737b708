//! Wire format for `--json` output. Every report the driver prints has a
//! serde mirror here, built from strings in the same grammars the parsers
//! read, so emitted output re-parses to equal values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sessio_core::{
    print_process, print_type, ApcpReport, CheckVerdict, ExplorationReport, PrioritySolution,
    Trace, TypingContext,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDto {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureDto {
    pub rule: String,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDto {
    pub discipline: String,
    pub accepted: bool,
    /// Context entries the process left unconsumed.
    pub residual: Vec<EntryDto>,
    pub failure: Option<FailureDto>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionDto {
    Assignment(BTreeMap<String, u64>),
    Infeasible(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApcpDto {
    pub verdict: VerdictDto,
    pub constraints: Vec<String>,
    pub solution: Option<SolutionDto>,
    /// The checked process with every connective annotated.
    pub process: String,
    pub context: Vec<EntryDto>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDto {
    pub index: usize,
    pub kind: String,
    pub pair: (String, String),
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDto {
    pub initial: String,
    pub steps: Vec<StepDto>,
    pub terminal: String,
    /// The terminal is the empty process.
    pub finished: bool,
    /// The terminal has no redexes yet is not the empty process.
    pub deadlocked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalDto {
    pub state: String,
    pub zero_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreDto {
    pub states_visited: usize,
    pub terminals: Vec<TerminalDto>,
    pub deadlocked: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslateDto {
    pub process: String,
    pub result_name: String,
    pub result_type: String,
    pub context: Vec<EntryDto>,
}

/// Verdict on the functional source itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunVerdictDto {
    pub accepted: bool,
    pub return_type: Option<String>,
    pub failure: Option<FailureDto>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineDto {
    pub source: FunVerdictDto,
    pub result_type: Option<String>,
    pub check: Option<ApcpDto>,
    /// Whether acceptance proved the source deadlock free; a rejection
    /// leaves the question open rather than answering it.
    pub deadlock_free: bool,
}

pub fn entries(ctx: &TypingContext) -> Vec<EntryDto> {
    ctx.iter()
        .map(|(n, t)| EntryDto { name: n.origin(), ty: print_type(t) })
        .collect()
}

pub fn verdict_dto(v: &CheckVerdict) -> VerdictDto {
    VerdictDto {
        discipline: v.discipline.to_string(),
        accepted: v.accepted,
        residual: entries(&v.residual),
        failure: v.failure.as_ref().map(|f| FailureDto {
            rule: f.rule.clone(),
            path: f.path.clone(),
            message: f.message.clone(),
        }),
    }
}

pub fn apcp_dto(r: &ApcpReport) -> ApcpDto {
    ApcpDto {
        verdict: verdict_dto(&r.verdict),
        constraints: r.constraints.iter().map(|c| c.to_string()).collect(),
        solution: r.solution.as_ref().map(|s| match s {
            PrioritySolution::Assignment(map) => SolutionDto::Assignment(
                map.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            ),
            PrioritySolution::Infeasible(cycle) => {
                SolutionDto::Infeasible(cycle.iter().map(|c| c.to_string()).collect())
            }
        }),
        process: print_process(&r.process),
        context: entries(&r.context),
    }
}

pub fn trace_dto(t: &Trace) -> TraceDto {
    let stuck = sessio_core::find_redexes(&t.terminal.residual).is_empty();
    TraceDto {
        initial: print_process(&t.initial),
        steps: t
            .steps
            .iter()
            .enumerate()
            .map(|(i, (r, state))| StepDto {
                index: i + 1,
                kind: r.kind.to_string(),
                pair: (r.pair.0.origin(), r.pair.1.origin()),
                state: print_process(state),
            })
            .collect(),
        terminal: print_process(&t.terminal.residual),
        finished: t.terminal.zero_flag,
        deadlocked: stuck && !t.terminal.zero_flag,
    }
}

pub fn explore_dto(r: &ExplorationReport) -> ExploreDto {
    ExploreDto {
        states_visited: r.states_visited,
        terminals: r
            .terminals
            .iter()
            .map(|c| TerminalDto {
                state: print_process(&c.residual),
                zero_flag: c.zero_flag,
            })
            .collect(),
        deadlocked: r.deadlocked.len(),
        truncated: r.truncated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sessio_core::{check_apcp, parse_context, parse_process, run, Strategy};

    fn roundtrip<T>(value: &T)
    where
        T: Serialize + for<'de> Deserialize<'de> + PartialEq + std::fmt::Debug,
    {
        let text = serde_json::to_string(value).unwrap();
        let back: T = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, value);
    }

    #[test]
    fn verdicts_roundtrip() {
        let p = parse_process("new (x : end *[p] end y) (send x[a, b] | recv y(v, w). 0)")
            .unwrap();
        let ctx = parse_context("a : end, b : end").unwrap();
        let report = check_apcp(&p, &ctx);
        roundtrip(&verdict_dto(&report.verdict));
        roundtrip(&apcp_dto(&report));
    }

    #[test]
    fn traces_roundtrip() {
        let p = parse_process("new (x : end * end y) (send x[a, b] | recv y(v, w). 0)").unwrap();
        let trace = run(&p, 10, Strategy::First);
        let dto = trace_dto(&trace);
        assert_eq!(dto.steps.len(), 1);
        roundtrip(&dto);
        let report = sessio_core::explore(&p, 100);
        roundtrip(&explore_dto(&report));
    }

    #[test]
    fn infeasible_solutions_roundtrip() {
        let dto = SolutionDto::Infeasible(vec!["p < q".into(), "q < p".into()]);
        roundtrip(&dto);
        let dto = SolutionDto::Assignment([("p".to_string(), 0u64)].into_iter().collect());
        roundtrip(&dto);
    }
}
