use clap::Parser;

fn main() {
    let cli = style_quotient::cli::Cli::parse();
    std::process::exit(style_quotient::cli::run(cli));
}
