fn main() {
    std::process::exit(gamma_stft_cli::run(std::env::args_os()));
}
