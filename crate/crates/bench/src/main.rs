fn main() {
    std::process::exit(lota_bench::cli::main());
}
