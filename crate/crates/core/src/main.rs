fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("WEAKCORR_LOG")).init();
    std::process::exit(weakcorr::cli::main_with_args(std::env::args_os()));
}
