use nbglide::cli::{run, CliEnv, EXIT_BUILD_FAILURE};

fn main() {
    let env = match CliEnv::from_process() {
        Ok(env) => env,
        Err(e) => {
            eprintln!("error: cannot read the working directory: {e}");
            std::process::exit(EXIT_BUILD_FAILURE);
        }
    };
    let code = run(
        std::env::args_os().skip(1),
        &env,
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
