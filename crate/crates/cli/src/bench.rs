use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparsecount::gen;
use sparsecount::qe::check_sentence;
use sparsecount::{Formula, LabeledGraph, Result};

use crate::config::RunConfig;
use crate::Family;

pub const DEFAULT_QUERY: &str = "#x. (#y. (E(x, y) & #z. E(y, z) > 3) > 2) > 100";

pub const HEADER: &str = "family,n,m,wall_time_ms,answer,max_indegree,predicates_added";

pub struct BenchSpec<'a> {
    pub family: Family,
    pub sizes: &'a [usize],
    pub query: &'a Formula,
    pub repetitions: usize,
    pub degree: usize,
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Grid => "grid",
        Family::Tree => "tree",
        Family::BoundedDegreeRandom => "bounded-degree-random",
    }
}

fn generate(spec: &BenchSpec, size: usize, seed: u64) -> LabeledGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ size as u64);
    match spec.family {
        Family::Grid => gen::grid(size, size),
        Family::Tree => gen::random_tree(size, &mut rng),
        Family::BoundedDegreeRandom => gen::random_bounded_degree(size, spec.degree, &mut rng),
    }
}

/// One CSV row per size; the time is the median over the repetitions.
pub fn run(spec: &BenchSpec, cfg: &RunConfig) -> Result<String> {
    let mut out = format!("{HEADER}\n");
    for &size in spec.sizes {
        let g = generate(spec, size, cfg.seed);
        let mut times = Vec::new();
        let mut last = None;
        for _ in 0..spec.repetitions.max(1) {
            let start = Instant::now();
            let r = check_sentence(&g, spec.query, &cfg.epsilon)?;
            times.push(start.elapsed().as_secs_f64() * 1000.0);
            last = Some(r);
        }
        times.sort_by(f64::total_cmp);
        let r = last.expect("at least one repetition");
        log::info!("{} n={} answer {}", family_name(spec.family), g.vertex_count(), r.answer);
        writeln!(
            out,
            "{},{},{},{:.3},{},{},{}",
            family_name(spec.family),
            g.vertex_count(),
            g.edge_count(),
            times[times.len() / 2],
            r.answer,
            r.max_indegree,
            r.predicates_added
        )
        .unwrap();
    }
    Ok(out)
}
