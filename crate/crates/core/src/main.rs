fn main() {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_target(false)
        .init();
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(qmud::cli::main(&args));
}
