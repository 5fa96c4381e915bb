use clap::Parser;

fn main() {
    let cli = guidelab_harness::Cli::parse();
    if let Err(e) = guidelab_harness::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
