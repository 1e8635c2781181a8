//! `cylwave`: batch driver for the simulator and the decay analysis.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 configuration error,
//! 3 numerical-domain error, 4 blow-up detected, 5 inversion sigma-check failure.

mod config;
mod output;
mod run;

use config::{RunConfig, KEYS, OUT_DIR_ENV};
use output::{meta_text, Artifacts};
use run::Facts;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CYLWAVE_GIT_REV"), ")");

fn print_keys() {
    for k in KEYS {
        let default = if k.default.is_empty() { "-" } else { k.default };
        println!("{:<22} {:<14} {}", k.name, default, k.help);
    }
}

fn execute(cfg: &RunConfig) -> i32 {
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let mut out = match Artifacts::new(&cfg.out_dir) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("cannot create output directory {}: {e}", cfg.out_dir.display());
            return 1;
        }
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut facts = Facts::default();
    let result = run::run(cfg, &mut out, &mut facts);
    let (code, status) = match &result {
        Ok(()) => (0, "ok"),
        Err(f) => (f.exit_code(), f.status()),
    };
    if let Err(f) = &result {
        eprintln!("{f}");
        if let Err(e) = out.mark_partial() {
            eprintln!("could not rename partial outputs: {e}");
        }
    }
    let mut info = vec![
        ("version".to_string(), format!("cylwave {VERSION}")),
        ("status".to_string(), status.to_string()),
        ("exit_code".to_string(), code.to_string()),
        ("started_unix".to_string(), started.to_string()),
        ("wall_time_s".to_string(), format!("{:.3}", clock.elapsed().as_secs_f64())),
        ("threads".to_string(), rayon::current_num_threads().to_string()),
        ("files".to_string(), out.names().join(" ")),
    ];
    if let Err(f) = &result {
        info.push(("error".to_string(), f.to_string().replace('\n', " ").trim().to_string()));
    }
    if !facts.0.iter().any(|(k, _)| k == "compatibility") {
        facts.0.push(("compatibility".into(), "not applicable".into()));
    }
    let meta = meta_text(&[("run", &info), ("config", &cfg.resolved), ("results", &facts.0)]);
    if let Err(e) = std::fs::write(out.dir().join("run.meta"), meta) {
        eprintln!("could not write run.meta: {e}");
        return if code == 0 { 1 } else { code };
    }
    if code == 0 {
        println!("{} finished; outputs in {}", cfg.command, out.dir().display());
    }
    code
}

fn main() -> ExitCode {
    let matches = match config::command_line().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if matches.get_flag("list-keys") {
        print_keys();
        return ExitCode::SUCCESS;
    }
    let cfg = match config::from_matches(&matches, std::env::var(OUT_DIR_ENV).ok()) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    ExitCode::from(execute(&cfg) as u8)
}
