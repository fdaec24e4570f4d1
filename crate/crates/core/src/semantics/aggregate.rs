use super::{solve, AggregationConfig, SemanticsError, SolverConfig, NEUTRAL_SCORE, SCORE_SPAN};
use crate::argcore::{ArgumentGraph, DegreeAssignment, OptionId, Stance};

/// Temperature-weighted soft-max: `Σ v·exp(v/T) / Σ exp(v/T)`, and 0 for
/// an empty slice. It moves from the mean toward the maximum as `T`
/// shrinks. Values are summed in sorted order, so any permutation of the
/// same values gives the same bits.
pub fn soft_max(values: &[f64], temperature: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let Some(&max) = sorted.last() else {
        return 0.0;
    };
    let (num, den) = sorted.iter().fold((0.0, 0.0), |(num, den), &v| {
        let w = ((v - max) / temperature).exp();
        (num + v * w, den + w)
    });
    num / den
}

/// Option score `F = clip(0.5 + 0.5·(smax(f⁺) − smax(f⁻)))` over the live
/// supporting and challenging arguments of `option_id`.
pub fn aggregate_option(
    option_id: &OptionId,
    graph: &ArgumentGraph,
    degrees: &DegreeAssignment,
    agg: &AggregationConfig,
) -> Result<f64, SemanticsError> {
    agg.validate()?;
    if graph.option(option_id).is_none() {
        return Err(SemanticsError::UnknownOption(option_id.clone()));
    }
    let collect = |stance| -> Result<Vec<f64>, SemanticsError> {
        graph
            .arguments_on(option_id, stance)
            .map(|a| {
                degrees
                    .degree(&a.arg_id)
                    .ok_or_else(|| SemanticsError::UnknownArgument(a.arg_id.clone()))
            })
            .collect()
    };
    let support = soft_max(&collect(Stance::Support)?, agg.temperature);
    let challenge = soft_max(&collect(Stance::Challenge)?, agg.temperature);
    Ok((NEUTRAL_SCORE + SCORE_SPAN * (support - challenge)).clamp(0.0, 1.0))
}

/// Solves the graph and scores every option.
///
/// On non-convergence the error's partial result also carries option scores
/// computed from the partial degrees.
pub fn score_all_options(
    graph: &ArgumentGraph,
    cfg: &SolverConfig,
    agg: &AggregationConfig,
) -> Result<DegreeAssignment, SemanticsError> {
    agg.validate()?;
    let fill = |d: &mut DegreeAssignment| -> Result<(), SemanticsError> {
        for option in graph.options() {
            let score = aggregate_option(&option.option_id, graph, d, agg)?;
            d.option_scores.insert(option.option_id.clone(), score);
        }
        Ok(())
    };
    match solve(graph, cfg) {
        Ok(mut d) => {
            fill(&mut d)?;
            Ok(d)
        }
        Err(SemanticsError::NonConvergence {
            iterations,
            residual,
            mut partial,
        }) => {
            fill(&mut partial)?;
            Err(SemanticsError::NonConvergence {
                iterations,
                residual,
                partial,
            })
        }
        Err(e) => Err(e),
    }
}
