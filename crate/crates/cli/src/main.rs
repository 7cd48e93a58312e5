use clap::Parser;
use hardy_graph_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(outcome) => {
            match &cli.out_file {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.rendered) {
                        eprintln!("cannot write {}: {e}", path.display());
                        std::process::exit(2);
                    }
                }
                None => print!("{}", outcome.rendered),
            }
            std::process::exit(if outcome.all_passed { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
