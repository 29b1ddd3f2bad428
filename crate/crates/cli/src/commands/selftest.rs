use clap::Args;

use freechan::selftest::{criteria, criterion};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Criterion ids to run, comma separated; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u8>>,
}

pub fn run(args: SelftestArgs) -> CliResult<()> {
    let selected = match &args.only {
        None => criteria(),
        Some(ids) => ids
            .iter()
            .map(|&id| criterion(id).ok_or_else(|| CliError::Validation(format!("no criterion {id}"))))
            .collect::<CliResult<Vec<_>>>()?,
    };
    let mut failed = 0;
    for c in &selected {
        let outcome = c.run();
        failed += !outcome.passed as usize;
        println!("{}", c.report(&outcome));
    }
    println!("{} of {} criteria passed", selected.len() - failed, selected.len());
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} criteria failed")));
    }
    Ok(())
}
