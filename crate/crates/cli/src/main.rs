use clap::Parser;

use haem_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let report = run(&cli);
    println!("{}", report.render(cli.opts.json));
    std::process::exit(report.exit_code());
}
