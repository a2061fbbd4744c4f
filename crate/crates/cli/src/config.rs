use num_rational::BigRational;
use num_traits::Signed;
use sparsecount::qe::parse_rational;

use crate::{Cli, Format};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub epsilon: BigRational,
    pub format: Format,
    pub seed: u64,
    pub oracle_cap: u64,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> anyhow::Result<RunConfig> {
        let epsilon = parse_rational(&cli.epsilon)?;
        anyhow::ensure!(epsilon.is_positive(), "--epsilon must be positive");
        anyhow::ensure!(cli.oracle_cap > 0, "--oracle-cap must be positive");
        Ok(RunConfig { epsilon, format: cli.format, seed: cli.seed, oracle_cap: cli.oracle_cap })
    }
}
