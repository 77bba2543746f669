use std::io::Write;

use anyhow::Context;

fn main() -> anyhow::Result<()> {
    let code = maslov::cli::run(std::env::args_os());
    std::io::stdout().flush().context("flushing the report")?;
    std::process::exit(code);
}
