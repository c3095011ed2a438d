use clap::Parser;
use optobind::error::EXIT_OK;
use optobind::Cli;

fn main() {
    let arguments: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match optobind::run(cli, arguments) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for line in &report.lines {
                println!("{line}");
            }
            std::process::exit(EXIT_OK);
        }
        Err(e) => {
            eprintln!("{}", e.machine_line());
            std::process::exit(e.exit_code());
        }
    }
}
