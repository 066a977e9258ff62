fn main() {
    let code = cpcsim::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
