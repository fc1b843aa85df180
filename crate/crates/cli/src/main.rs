use clap::Parser;
use mdchase::{render, run, Cli};

fn main() {
    let cli = Cli::parse();
    let format = cli.config.format;
    let code = match run(cli.command, cli.config).and_then(|o| Ok((render(&o.report, format)?, o.code))) {
        Ok((text, code)) => {
            print!("{text}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
