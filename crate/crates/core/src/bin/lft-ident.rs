fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = {
        let mut out: Box<dyn std::io::Write> = Box::new(stdout.lock());
        let mut err: Box<dyn std::io::Write> = Box::new(stderr.lock());
        lft_ident::cli::run(std::env::args_os(), &mut out, &mut err)
    };
    std::process::exit(code);
}
