fn main() {
    let env_seed = std::env::var(biphoton_cli::SEED_ENV).ok();
    std::process::exit(biphoton_cli::main_with_args(
        std::env::args_os(),
        env_seed.as_deref(),
    ));
}
