use forged_eeg_cli::{parse_args, run_command, AppError};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (command, cfg) = match parse_args(std::env::args()) {
        Ok(v) => v,
        Err(AppError::Exit { message, code }) => {
            if code == 0 {
                println!("{message}");
            } else {
                eprintln!("{message}");
            }
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };

    let threads = if cfg.threads > 0 {
        cfg.threads
    } else {
        std::env::var("FORGED_EEG_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    };
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::warn!("could not cap worker threads: {e}");
        }
    }

    if let Err(e) = run_command(&command, &cfg) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
