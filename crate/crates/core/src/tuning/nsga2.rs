//! Elitist bi-objective evolutionary search (NSGA-II) over mixed genomes.
//!
//! The genome is the parameter space in declaration order. Real genes cross
//! with simulated binary crossover and mutate with bounded polynomial
//! mutation; integer genes do the same in real space and round back; boolean
//! genes swap on crossover and re-draw uniformly on mutation. Selection is
//! the standard binary tournament on (nondomination rank, crowding
//! distance), survival is elitist by whole fronts with the boundary front
//! trimmed by crowding. Every evaluated candidate lands in an archive and
//! the reported front is the nondominated filter of that archive, so the
//! answer can only improve with budget.

use super::{
    nondominated_filter, Candidate, Objectives, ParamKind, ParamSpace, ParamValue, Params,
    ParetoFront,
};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use rand::Rng;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Config {
    pub generations: usize,
    pub population: usize,
    pub crossover_probability: f64,
    /// SBX distribution index; larger keeps children closer to parents.
    pub sbx_eta: f64,
    /// Polynomial-mutation distribution index.
    pub mutation_eta: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            generations: 10,
            population: 80,
            crossover_probability: 0.9,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Nsga2Outcome {
    pub front: ParetoFront,
    /// Every successfully evaluated candidate, in evaluation order.
    pub archive: Vec<Candidate>,
    pub evaluations: usize,
    pub skipped: Vec<(u32, String)>,
    pub total_seconds: f64,
}

/// Nondomination rank per objective vector (0 = nondominated), by the
/// classic peeling of dominance counts.
pub fn pareto_ranks(objectives: &[Objectives]) -> Vec<usize> {
    let n = objectives.len();
    let mut ranks = vec![0usize; n];
    let mut dominators = vec![0usize; n];
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if objectives[i].dominates(&objectives[j]) {
                dominated[i].push(j);
                dominators[j] += 1;
            } else if objectives[j].dominates(&objectives[i]) {
                dominated[j].push(i);
                dominators[i] += 1;
            }
        }
    }
    let mut current: Vec<usize> = (0..n).filter(|&i| dominators[i] == 0).collect();
    let mut rank = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            ranks[i] = rank;
            for &j in &dominated[i] {
                dominators[j] -= 1;
                if dominators[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        rank += 1;
    }
    ranks
}

/// Crowding distances for one front, parallel to `members` (indices into
/// `objectives`). Boundary members per objective are infinite; interior
/// members sum range-normalized neighbor gaps.
fn crowding_distances(objectives: &[Objectives], members: &[usize]) -> Vec<f64> {
    let m = members.len();
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let mut dist = vec![0.0; m];
    for objective in 0..2 {
        let key = |idx: usize| {
            let o = &objectives[members[idx]];
            if objective == 0 {
                o.mse
            } else {
                o.fit_seconds
            }
        };
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        let span = key(order[m - 1]) - key(order[0]);
        if span > 0.0 {
            for w in 1..m - 1 {
                dist[order[w]] += (key(order[w + 1]) - key(order[w - 1])) / span;
            }
        }
    }
    dist
}

/// Binary tournament: lower rank wins, then larger crowding; a full tie
/// keeps the first contestant.
fn tournament<R: Rng>(ranks: &[usize], crowding: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..ranks.len());
    let b = rng.random_range(0..ranks.len());
    if ranks[b] < ranks[a] || (ranks[b] == ranks[a] && crowding[b] > crowding[a]) {
        b
    } else {
        a
    }
}

fn sbx_pair<R: Rng>(a: f64, b: f64, lo: f64, hi: f64, eta: f64, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    let beta = if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    };
    let c1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
    let c2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
    (c1.clamp(lo, hi), c2.clamp(lo, hi))
}

fn polynomial_mutation<R: Rng>(x: f64, lo: f64, hi: f64, eta: f64, rng: &mut R) -> f64 {
    if hi <= lo {
        return x;
    }
    let u: f64 = rng.random();
    let pow = 1.0 / (eta + 1.0);
    let delta = if u < 0.5 {
        let d = (x - lo) / (hi - lo);
        (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d).powf(eta + 1.0)).powf(pow) - 1.0
    } else {
        let d = (hi - x) / (hi - lo);
        1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d).powf(eta + 1.0)).powf(pow)
    };
    (x + delta * (hi - lo)).clamp(lo, hi)
}

fn genes_from_params(space: &ParamSpace, params: &Params) -> Vec<ParamValue> {
    space.specs().iter().map(|s| params[&s.name]).collect()
}

fn params_from_genes(space: &ParamSpace, genes: &[ParamValue]) -> Params {
    space
        .specs()
        .iter()
        .zip(genes)
        .map(|(s, v)| (s.name.clone(), *v))
        .collect()
}

fn crossover<R: Rng>(
    space: &ParamSpace,
    pa: &[ParamValue],
    pb: &[ParamValue],
    config: &Nsga2Config,
    rng: &mut R,
) -> (Vec<ParamValue>, Vec<ParamValue>) {
    let mut c1 = pa.to_vec();
    let mut c2 = pb.to_vec();
    if rng.random::<f64>() >= config.crossover_probability {
        return (c1, c2);
    }
    for (g, spec) in space.specs().iter().enumerate() {
        // Per-gene activation with probability 1/2, drawn for every gene so
        // the stream position does not depend on gene kinds.
        if rng.random::<f64>() >= 0.5 {
            continue;
        }
        match spec.kind {
            ParamKind::IntRange { lo, hi } => {
                let a = c1[g].as_int().expect("genome aligned with space") as f64;
                let b = c2[g].as_int().expect("genome aligned with space") as f64;
                let (n1, n2) = sbx_pair(a, b, lo as f64, hi as f64, config.sbx_eta, rng);
                c1[g] = ParamValue::Int((n1.round() as i64).clamp(lo, hi));
                c2[g] = ParamValue::Int((n2.round() as i64).clamp(lo, hi));
            }
            ParamKind::IntervalReal { lo, hi } => {
                let a = c1[g].as_real().expect("genome aligned with space");
                let b = c2[g].as_real().expect("genome aligned with space");
                let (n1, n2) = sbx_pair(a, b, lo, hi, config.sbx_eta, rng);
                c1[g] = ParamValue::Real(n1);
                c2[g] = ParamValue::Real(n2);
            }
            ParamKind::Boolean => {
                std::mem::swap(&mut c1[g], &mut c2[g]);
            }
        }
    }
    (c1, c2)
}

fn mutate<R: Rng>(
    space: &ParamSpace,
    genes: &mut [ParamValue],
    config: &Nsga2Config,
    rng: &mut R,
) {
    let rate = 1.0 / space.len() as f64;
    for (g, spec) in space.specs().iter().enumerate() {
        if rng.random::<f64>() >= rate {
            continue;
        }
        match spec.kind {
            ParamKind::IntRange { lo, hi } => {
                genes[g] = ParamValue::Int(rng.random_range(lo..=hi));
            }
            ParamKind::IntervalReal { lo, hi } => {
                let x = genes[g].as_real().expect("genome aligned with space");
                genes[g] = ParamValue::Real(polynomial_mutation(x, lo, hi, config.mutation_eta, rng));
            }
            ParamKind::Boolean => {
                genes[g] = ParamValue::Bool(rng.random());
            }
        }
    }
}

#[derive(Clone)]
struct Individual {
    genes: Vec<ParamValue>,
    objectives: Objectives,
}

/// Failed evaluations stay in the population with worst-case objectives so
/// sizing is undisturbed, but never enter the archive.
const PENALTY: Objectives = Objectives {
    mse: f64::MAX,
    fit_seconds: f64::MAX,
};

#[allow(clippy::too_many_arguments)]
fn evaluate_individual<F>(
    space: &ParamSpace,
    genes: Vec<ParamValue>,
    generation: u32,
    index: usize,
    stream: &RngStream,
    evaluator: &mut F,
    archive: &mut Vec<Candidate>,
    skipped: &mut Vec<(u32, String)>,
) -> Individual
where
    F: FnMut(&Params, &RngStream) -> Result<Objectives>,
{
    let params = params_from_genes(space, &genes);
    let eval_stream = stream.child("eval").child(generation).child(index);
    match evaluator(&params, &eval_stream) {
        Ok(objectives) if objectives.is_valid() => {
            archive.push(Candidate {
                params,
                objectives,
                provenance: generation,
                eval_stream,
            });
            Individual { genes, objectives }
        }
        Ok(objectives) => {
            skipped.push((
                generation,
                format!("invalid objectives ({}, {})", objectives.mse, objectives.fit_seconds),
            ));
            Individual { genes, objectives: PENALTY }
        }
        Err(e) => {
            skipped.push((generation, e.to_string()));
            Individual { genes, objectives: PENALTY }
        }
    }
}

/// Crowding distance per population position, computed front by front.
fn population_crowding(objectives: &[Objectives], ranks: &[usize]) -> Vec<f64> {
    let mut crowding = vec![0.0; objectives.len()];
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    for rank in 0..=max_rank {
        let members: Vec<usize> = (0..objectives.len()).filter(|&i| ranks[i] == rank).collect();
        if members.is_empty() {
            continue;
        }
        for (pos, dist) in members.iter().zip(crowding_distances(objectives, &members)) {
            crowding[*pos] = dist;
        }
    }
    crowding
}

/// Elitist survival: take whole fronts while they fit, then trim the
/// boundary front by crowding distance (ties keep the earlier individual).
fn environmental_selection(combined: Vec<Individual>, target: usize) -> Vec<Individual> {
    let objectives: Vec<Objectives> = combined.iter().map(|i| i.objectives).collect();
    let ranks = pareto_ranks(&objectives);
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let mut keep: Vec<usize> = Vec::with_capacity(target);
    for rank in 0..=max_rank {
        let front: Vec<usize> = (0..combined.len()).filter(|&i| ranks[i] == rank).collect();
        if keep.len() + front.len() <= target {
            keep.extend(&front);
            if keep.len() == target {
                break;
            }
        } else {
            let crowding = crowding_distances(&objectives, &front);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| {
                crowding[b]
                    .total_cmp(&crowding[a])
                    .then(front[a].cmp(&front[b]))
            });
            keep.extend(order[..target - keep.len()].iter().map(|&w| front[w]));
            break;
        }
    }
    keep.into_iter().map(|i| combined[i].clone()).collect()
}

/// Run the evolutionary search. Exactly population * (generations + 1)
/// evaluator calls are made: the initial population plus one offspring
/// population per generation.
pub fn nsga2<F>(
    space: &ParamSpace,
    mut evaluator: F,
    config: &Nsga2Config,
    stream: &RngStream,
) -> Result<Nsga2Outcome>
where
    F: FnMut(&Params, &RngStream) -> Result<Objectives>,
{
    if config.population < 4 || config.population % 2 != 0 {
        return Err(Error::contract(format!(
            "population must be even and at least 4, got {}",
            config.population
        )));
    }
    if !(0.0..=1.0).contains(&config.crossover_probability) {
        return Err(Error::contract("crossover probability outside [0, 1]"));
    }
    if config.sbx_eta <= 0.0 || config.mutation_eta <= 0.0 {
        return Err(Error::contract("distribution indices must be positive"));
    }
    let start = Instant::now();
    let mut archive = Vec::new();
    let mut skipped = Vec::new();
    let mut evaluations = 0usize;

    let mut init_rng = stream.child("init").rng();
    let mut population: Vec<Individual> = Vec::with_capacity(config.population);
    for i in 0..config.population {
        let genes = genes_from_params(space, &space.sample(&mut init_rng));
        evaluations += 1;
        population.push(evaluate_individual(
            space, genes, 0, i, stream, &mut evaluator, &mut archive, &mut skipped,
        ));
    }

    for g in 1..=config.generations {
        let mut var_rng = stream.child("var").child(g).rng();
        let objectives: Vec<Objectives> = population.iter().map(|i| i.objectives).collect();
        let ranks = pareto_ranks(&objectives);
        let crowding = population_crowding(&objectives, &ranks);

        let mut offspring_genes = Vec::with_capacity(config.population);
        while offspring_genes.len() < config.population {
            let pa = tournament(&ranks, &crowding, &mut var_rng);
            let pb = tournament(&ranks, &crowding, &mut var_rng);
            let (mut c1, mut c2) = crossover(
                space,
                &population[pa].genes,
                &population[pb].genes,
                config,
                &mut var_rng,
            );
            mutate(space, &mut c1, config, &mut var_rng);
            mutate(space, &mut c2, config, &mut var_rng);
            offspring_genes.push(c1);
            if offspring_genes.len() < config.population {
                offspring_genes.push(c2);
            }
        }

        let mut combined = population;
        for (i, genes) in offspring_genes.into_iter().enumerate() {
            evaluations += 1;
            combined.push(evaluate_individual(
                space,
                genes,
                g as u32,
                i,
                stream,
                &mut evaluator,
                &mut archive,
                &mut skipped,
            ));
        }
        population = environmental_selection(combined, config.population);
    }

    if archive.is_empty() {
        return Err(Error::contract("every candidate failed evaluation"));
    }
    Ok(Nsga2Outcome {
        front: nondominated_filter(&archive),
        archive,
        evaluations,
        skipped,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuning::ParamSpec;

    fn objectives(mse: f64, fit_seconds: f64) -> Objectives {
        Objectives { mse, fit_seconds }
    }

    #[test]
    fn ranks_peel_fronts_in_dominance_order() {
        let objs = vec![
            objectives(1.0, 2.0),
            objectives(2.0, 1.0),
            objectives(2.0, 2.0),
            objectives(3.0, 3.0),
        ];
        assert_eq!(pareto_ranks(&objs), vec![0, 0, 1, 2]);
    }

    #[test]
    fn duplicates_share_a_rank() {
        let objs = vec![objectives(1.0, 1.0), objectives(1.0, 1.0), objectives(2.0, 2.0)];
        assert_eq!(pareto_ranks(&objs), vec![0, 0, 1]);
    }

    #[test]
    fn crowding_marks_boundaries_infinite_and_sums_gaps() {
        let objs = vec![objectives(0.0, 2.0), objectives(1.0, 1.0), objectives(2.0, 0.0)];
        let d = crowding_distances(&objs, &[0, 1, 2]);
        assert_eq!(d[0], f64::INFINITY);
        assert_eq!(d[2], f64::INFINITY);
        assert!((d[1] - 2.0).abs() < 1e-12, "middle of an even grid sums to 2");
        assert_eq!(crowding_distances(&objs, &[0, 1]), vec![f64::INFINITY; 2]);
    }

    #[test]
    fn rejects_bad_population_sizes() {
        let space = ParamSpace::new(vec![ParamSpec::real("x", 0.0, 1.0)]).unwrap();
        for population in [0, 2, 5] {
            let config = Nsga2Config { population, generations: 1, ..Default::default() };
            let r = nsga2(
                &space,
                |_, _| Ok(objectives(1.0, 1.0)),
                &config,
                &RngStream::new(1),
            );
            assert!(r.is_err(), "population {} must be rejected", population);
        }
    }

    #[test]
    fn fails_when_every_candidate_fails() {
        let space = ParamSpace::new(vec![ParamSpec::real("x", 0.0, 1.0)]).unwrap();
        let config = Nsga2Config { population: 4, generations: 1, ..Default::default() };
        let r = nsga2(
            &space,
            |_, _| Err(Error::contract("nope")),
            &config,
            &RngStream::new(1),
        );
        assert!(r.is_err());
    }

    #[test]
    fn recovers_the_analytic_tradeoff_curve() {
        // Minimize (x^2, (x-2)^2) on [0,2]: the whole interval is optimal
        // and the front satisfies f2 = (2 - sqrt(f1))^2.
        let space = ParamSpace::new(vec![ParamSpec::real("x", 0.0, 2.0)]).unwrap();
        let config = Nsga2Config { population: 40, generations: 8, ..Default::default() };
        let mut calls = 0usize;
        let outcome = nsga2(
            &space,
            |params, _| {
                calls += 1;
                let x = params["x"].as_real()?;
                Ok(objectives(x * x, (x - 2.0) * (x - 2.0)))
            },
            &config,
            &RngStream::new(5).child("nsga"),
        )
        .unwrap();
        assert_eq!(calls, 40 + 8 * 40, "exact evaluation budget");
        assert_eq!(outcome.evaluations, calls);
        assert!(outcome.front.members.len() >= 10, "front should be well populated");
        for member in &outcome.front.members {
            let f1 = member.objectives.mse;
            let f2 = member.objectives.fit_seconds;
            let ideal = (2.0 - f1.sqrt()).powi(2);
            assert!(
                (f2 - ideal).abs() <= 0.05,
                "({}, {}) strays from the analytic front by {}",
                f1,
                f2,
                (f2 - ideal).abs()
            );
        }
        // Nothing in the archive may dominate a front member.
        for c in &outcome.archive {
            for member in &outcome.front.members {
                assert!(!c.objectives.dominates(&member.objectives));
            }
        }
        // Members arrive sorted by the runtime-like objective.
        for pair in outcome.front.members.windows(2) {
            assert!(pair[0].objectives.fit_seconds < pair[1].objectives.fit_seconds);
        }
    }

    #[test]
    fn search_is_deterministic_per_stream() {
        let space = ParamSpace::new(vec![
            ParamSpec::real("x", 0.0, 2.0),
            ParamSpec::int("k", 0, 5),
        ])
        .unwrap();
        let config = Nsga2Config { population: 12, generations: 3, ..Default::default() };
        let run = || {
            nsga2(
                &space,
                |params, _| {
                    let x = params["x"].as_real()?;
                    let k = params["k"].as_int()? as f64;
                    Ok(objectives(x * x + k, (x - 2.0) * (x - 2.0) + (5.0 - k)))
                },
                &config,
                &RngStream::new(77).child("nsga"),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.front.members.len(), b.front.members.len());
        for (x, y) in a.front.members.iter().zip(&b.front.members) {
            assert_eq!(x.params, y.params);
            assert_eq!(x.objectives.mse.to_bits(), y.objectives.mse.to_bits());
        }
    }

    #[test]
    fn degenerate_space_collapses_to_one_front_point() {
        let space = ParamSpace::new(vec![
            ParamSpec::int("k", 3, 3),
            ParamSpec::real("x", 1.5, 1.5),
        ])
        .unwrap();
        let config = Nsga2Config { population: 8, generations: 2, ..Default::default() };
        let outcome = nsga2(
            &space,
            |params, _| {
                let x = params["x"].as_real()?;
                let k = params["k"].as_int()? as f64;
                Ok(objectives(x + k, x * k))
            },
            &config,
            &RngStream::new(8),
        )
        .unwrap();
        assert_eq!(outcome.front.members.len(), 1);
        assert_eq!(outcome.front.members[0].objectives, objectives(4.5, 4.5));
        assert_eq!(outcome.front.members[0].provenance, 0, "first evaluation wins the duplicate rule");
    }

    #[test]
    fn discrete_and_boolean_genes_evolve_toward_the_front() {
        // f1 falls with k until 7 and is penalized by the flag; f2 grows
        // with k. Optimal candidates therefore have the flag off.
        let space = ParamSpace::new(vec![
            ParamSpec::int("k", 0, 10),
            ParamSpec::boolean("flag"),
        ])
        .unwrap();
        let config = Nsga2Config { population: 16, generations: 6, ..Default::default() };
        let outcome = nsga2(
            &space,
            |params, _| {
                let k = params["k"].as_int()? as f64;
                let penalty = if params["flag"].as_bool()? { 5.0 } else { 0.0 };
                Ok(objectives((k - 7.0) * (k - 7.0) + penalty, k))
            },
            &config,
            &RngStream::new(21).child("nsga"),
        )
        .unwrap();
        assert!(!outcome.front.members.is_empty());
        for member in &outcome.front.members {
            assert_eq!(member.params["flag"], ParamValue::Bool(false));
            assert!(member.params["k"].as_int().unwrap() <= 7);
        }
        // The full tradeoff range should be represented.
        assert!(outcome.front.members.len() >= 6);
    }
}
