fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("BROCCOLI_LOG", "warn")).init();
    std::process::exit(vocabweave::cli::run(std::env::args_os()));
}
