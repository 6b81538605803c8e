fn main() {
    let env = |name: &str| std::env::var(name).ok();
    let code = foonforge_cli::run(
        std::env::args_os(),
        &mut foonforge_cli::Io {
            stdout: &mut std::io::stdout().lock(),
            stderr: &mut std::io::stderr().lock(),
            env: &env,
        },
    );
    std::process::exit(code);
}
