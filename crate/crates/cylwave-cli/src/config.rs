//! Run configuration: one key table feeds both the command-line flags and the
//! `key = value` config file. Flags override the file.

use clap::{Arg, ArgAction, ArgMatches, Command};
use cylwave::params::Forcing;
use cylwave::shode::FluxVariant;
use cylwave::simulator::{DtPolicy, SimConfig};
use cylwave::PhysParams;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CYLWAVE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "cylwave-out";

pub struct Key {
    pub name: &'static str,
    /// empty when the default depends on other settings
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

pub const KEYS: &[Key] = &[
    key("epsilon", "0", "nonlinearity, in [0, 1)"),
    key("kappa", "0.3", "shallowness, in (0, 1); 0 is allowed for decay and branch-cuts"),
    key("nu", "0", "viscosity, in [0, 1)"),
    key("R", "1", "cylinder radius"),
    key("tau_buoy_sq", "1", "buoyancy coefficient"),
    key("h_i_eq", "1", "equilibrium water height under the body"),
    key("forcing", "zero", "external force: zero, constant:F or sine:A:OMEGA"),
    key("r_max", "40", "outer radius of the mesh"),
    key("n", "800", "number of mesh nodes"),
    key("boundary_layer_width", "", "mesh clustering width at r = R [default: max(kappa, 0.05)]"),
    key("T", "50", "simulation end time"),
    key("dt", "auto", "time step, or auto"),
    key("cfl", "0.5", "CFL number used when dt = auto"),
    key("output_every", "1", "steps between trajectory rows"),
    key("snapshot_every", "0", "steps between field snapshots, 0 disables"),
    key("delta0", "", "initial heave [default: 0 for simulate, 1 for decay]"),
    key("bump_amplitude", "0", "amplitude of the initial Gaussian surface bump"),
    key("bump_center", "4", "centre of the bump"),
    key("bump_width", "0.7", "width of the bump"),
    key("h_min", "0.05", "smallest admissible water height"),
    key("sponge_fraction", "0.15", "fraction of [R, r_max] covered by the absorbing layer"),
    key("sponge_strength", "2", "peak damping rate of the absorbing layer"),
    key("flux_variant", "half-zeta-sq", "trace flux: half-zeta-sq or zeta-sq-over-h"),
    key("blowup_ceiling", "1e6", "threshold of the blow-up monitor"),
    key("t_max", "100", "horizon of the decay response"),
    key("dt_out", "0.05", "output step of the decay response"),
    key("sigma", "", "abscissa of the inversion line [default: min(0.05, 12/t_max)]"),
    key("N", "1048576", "FFT size of the inversion, a power of two"),
    key("betas", "0.5,1,1.5,2", "exponents beta of the tails int |delta|^2 t^beta dt"),
    key("one_d", "false", "use the one-dimensional mode (B = 1)"),
    key("omega_max", "50", "upper frequency of the imaginary-axis scan"),
    key("n_omega", "2001", "frequencies in the imaginary-axis scan"),
    key("re_min", "0", "scan region, smallest Re s"),
    key("re_max", "5", "scan region, largest Re s"),
    key("im_min", "-10", "scan region, smallest Im s"),
    key("im_max", "10", "scan region, largest Im s"),
    key("nx", "400", "scan points along Re s"),
    key("ny", "400", "scan points along Im s"),
    key("threads", "", "worker threads [default: all cores]"),
    key("out", "", "output directory [default: $CYLWAVE_OUT_DIR, else ./cylwave-out]"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmd {
    Simulate,
    Decay,
    ScanDenominator,
    BranchCuts,
    SpecfunCheck,
    OperatorsCheck,
}

impl Cmd {
    pub const ALL: [Cmd; 6] =
        [Cmd::Simulate, Cmd::Decay, Cmd::ScanDenominator, Cmd::BranchCuts, Cmd::SpecfunCheck, Cmd::OperatorsCheck];

    pub fn name(self) -> &'static str {
        match self {
            Cmd::Simulate => "simulate",
            Cmd::Decay => "decay",
            Cmd::ScanDenominator => "scan-denominator",
            Cmd::BranchCuts => "branch-cuts",
            Cmd::SpecfunCheck => "specfun-check",
            Cmd::OperatorsCheck => "operators-check",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Cmd::Simulate => "integrate the coupled wave/body system in time",
            Cmd::Decay => "return to equilibrium by Laplace inversion",
            Cmd::ScanDenominator => "scan |P| over a rectangle of the right half-plane",
            Cmd::BranchCuts => "branch points and cuts of sqrt(1 + nu s + kappa^2 s^2)",
            Cmd::SpecfunCheck => "Bessel function self-test",
            Cmd::OperatorsCheck => "non-local operator self-test",
        }
    }

    fn parse(s: &str) -> Option<Cmd> {
        Cmd::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
    pub boundary_layer_width: f64,
}

#[derive(Debug, Clone)]
pub struct TimeSpec {
    pub t_end: f64,
    pub dt: DtPolicy,
    pub output_every: usize,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone)]
pub struct InitSpec {
    pub delta0: f64,
    pub bump_amplitude: f64,
    pub bump_center: f64,
    pub bump_width: f64,
}

#[derive(Debug, Clone)]
pub struct DecaySpec {
    pub t_max: f64,
    pub dt_out: f64,
    pub sigma: Option<f64>,
    pub n_fft: usize,
    pub betas: Vec<f64>,
    pub one_d: bool,
    pub omega_max: f64,
    pub n_omega: usize,
}

#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Cmd,
    pub params: PhysParams,
    pub grid: GridSpec,
    pub sim: SimConfig,
    pub time: TimeSpec,
    pub init: InitSpec,
    pub decay: DecaySpec,
    pub scan: ScanSpec,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    /// resolved key/value pairs, in table order, for run.meta
    pub resolved: Vec<(String, String)>,
}

/// Every problem found while building a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn canonical(key: &str) -> Option<&'static str> {
    let k = key.replace('-', "_");
    KEYS.iter().find(|x| x.name == k).map(|x| x.name)
}

pub fn command_line() -> Command {
    let mut cmd = Command::new("cylwave")
        .version(crate::VERSION)
        .about("Waves around a heaving floating cylinder: simulation and decay analysis")
        .after_help(
            "Settings can also come from a file of `key = value` lines (keys as the long flags, \
             '-' or '_' accepted, '#' starts a comment). A `command = NAME` line selects the \
             subcommand when none is given. Flags override the file.",
        )
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .global(true)
                .help("read settings from a key = value file"),
        );
    for k in KEYS {
        let mut arg = Arg::new(k.name).long(flag_name(k.name)).value_name("VALUE").global(true).help(k.help);
        if !k.default.is_empty() {
            arg = arg.help(format!("{} [default: {}]", k.help, k.default));
        }
        if k.name == "one_d" {
            arg = arg.num_args(0..=1).default_missing_value("true");
        }
        cmd = cmd.arg(arg);
    }
    for c in Cmd::ALL {
        cmd = cmd.subcommand(Command::new(c.name()).about(c.about()));
    }
    cmd.arg(Arg::new("list-keys").long("list-keys").action(ArgAction::SetTrue).help("print the settings table and exit"))
}

/// Parses `key = value` lines. Keys are checked against the table.
pub fn parse_file_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    let mut errors = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("line {}: expected `key = value`, got '{line}'", no + 1));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        let name = if k == "command" {
            "command"
        } else if let Some(name) = canonical(k) {
            name
        } else {
            errors.push(format!("line {}: unknown key '{k}'", no + 1));
            continue;
        };
        if out.insert(name.to_string(), v.to_string()).is_some() {
            errors.push(format!("line {}: key '{k}' given twice", no + 1));
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ConfigError(errors))
    }
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(vec![format!("config: cannot read {}: {e}", path.display())]))?;
    parse_file_text(&text)
        .map_err(|ConfigError(v)| ConfigError(v.into_iter().map(|e| format!("{}: {e}", path.display())).collect()))
}

/// Typed lookups that record failures instead of stopping at the first one.
struct Lookup<'a> {
    values: &'a BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str()).filter(|s| !s.is_empty())
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let raw = self.raw(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("{key}: expected {what}, got '{raw}'"));
                None
            }
        }
    }

    fn f64(&mut self, key: &str, fallback: f64) -> f64 {
        match self.parse::<f64>(key, "a number") {
            Some(v) if v.is_finite() => v,
            Some(v) => {
                self.errors.push(format!("{key}: expected a finite number, got {v}"));
                fallback
            }
            None => fallback,
        }
    }

    fn opt_f64(&mut self, key: &str) -> Option<f64> {
        self.raw(key)?;
        Some(self.f64(key, f64::NAN))
    }

    fn usize(&mut self, key: &str, fallback: usize) -> usize {
        self.parse::<usize>(key, "a non-negative integer").unwrap_or(fallback)
    }

    fn bool(&mut self, key: &str) -> bool {
        match self.raw(key) {
            None => false,
            Some("true" | "yes" | "1" | "on") => true,
            Some("false" | "no" | "0" | "off") => false,
            Some(other) => {
                self.errors.push(format!("{key}: expected true or false, got '{other}'"));
                false
            }
        }
    }

    fn list(&mut self, key: &str) -> Vec<f64> {
        let Some(raw) = self.raw(key) else { return Vec::new() };
        let mut out = Vec::new();
        for part in raw.split(',') {
            match part.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.errors.push(format!("{key}: expected comma-separated numbers, got '{raw}'"));
                    return Vec::new();
                }
            }
        }
        out
    }

    fn forcing(&mut self, key: &str) -> Forcing {
        let Some(raw) = self.raw(key).map(str::to_string) else { return Forcing::Zero };
        let parts: Vec<&str> = raw.split(':').map(str::trim).collect();
        let nums: Option<Vec<f64>> = parts[1..].iter().map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        match (parts[0], nums.as_deref()) {
            ("zero", Some([])) => Forcing::Zero,
            ("constant", Some([c])) => Forcing::Constant(*c),
            ("sine", Some([a, w])) => Forcing::Sine { amplitude: *a, omega: *w },
            _ => {
                self.errors.push(format!("{key}: expected zero, constant:F or sine:A:OMEGA, got '{raw}'"));
                Forcing::Zero
            }
        }
    }
}

/// Merges the config file and the flags found in `matches`.
pub fn from_matches(matches: &ArgMatches, env_out_dir: Option<String>) -> Result<RunConfig, ConfigError> {
    let (sub_name, sub) = match matches.subcommand() {
        Some((name, m)) => (Some(name.to_string()), m),
        None => (None, matches),
    };
    let mut values = match sub.get_one::<String>("config") {
        Some(path) => read_file(Path::new(path))?,
        None => BTreeMap::new(),
    };
    for k in KEYS {
        if sub.value_source(k.name) == Some(clap::parser::ValueSource::CommandLine) {
            if let Some(v) = sub.get_one::<String>(k.name) {
                values.insert(k.name.to_string(), v.clone());
            }
        }
    }
    let command = match (sub_name, values.get("command")) {
        (Some(name), _) => Cmd::parse(&name),
        (None, Some(name)) => Cmd::parse(name),
        (None, None) => None,
    };
    let Some(command) = command else {
        let names: Vec<&str> = Cmd::ALL.iter().map(|c| c.name()).collect();
        return Err(ConfigError(vec![match values.get("command") {
            Some(bad) => format!("command: unknown command '{bad}', expected one of {}", names.join(", ")),
            None => format!("no command given, expected one of {}", names.join(", ")),
        }]));
    };
    build(command, values, env_out_dir)
}

/// Builds and validates a configuration from raw string values.
pub fn build(
    command: Cmd,
    mut values: BTreeMap<String, String>,
    env_out_dir: Option<String>,
) -> Result<RunConfig, ConfigError> {
    values.remove("command");
    for k in KEYS {
        if !k.default.is_empty() {
            values.entry(k.name.to_string()).or_insert_with(|| k.default.to_string());
        }
    }
    let mut l = Lookup { values: &values, errors: Vec::new() };

    let params = PhysParams {
        epsilon: l.f64("epsilon", 0.0),
        kappa: l.f64("kappa", 0.3),
        nu: l.f64("nu", 0.0),
        radius: l.f64("R", 1.0),
        tau_buoy_sq: l.f64("tau_buoy_sq", 1.0),
        h_i_eq: l.f64("h_i_eq", 1.0),
        forcing: l.forcing("forcing"),
    };
    let grid = GridSpec {
        r_max: l.f64("r_max", 40.0),
        n: l.usize("n", 800),
        boundary_layer_width: l.opt_f64("boundary_layer_width").unwrap_or(params.kappa.max(0.05)),
    };
    let flux_variant = match l.raw("flux_variant") {
        Some("half-zeta-sq") => FluxVariant::HalfZetaSq,
        Some("zeta-sq-over-h") => FluxVariant::ZetaSqOverH,
        other => {
            l.errors.push(format!("flux_variant: expected half-zeta-sq or zeta-sq-over-h, got '{}'", other.unwrap_or("")));
            FluxVariant::HalfZetaSq
        }
    };
    let sim = SimConfig {
        h_min: l.f64("h_min", 0.05),
        sponge_fraction: l.f64("sponge_fraction", 0.15),
        sponge_strength: l.f64("sponge_strength", 2.0),
        flux_variant,
        blowup_ceiling: l.f64("blowup_ceiling", 1e6),
    };
    let dt = match l.raw("dt") {
        Some("auto") => DtPolicy::Auto { cfl: l.f64("cfl", 0.5) },
        _ => DtPolicy::Fixed(l.f64("dt", 0.01)),
    };
    let time = TimeSpec {
        t_end: l.f64("T", 50.0),
        dt,
        output_every: l.usize("output_every", 1),
        snapshot_every: l.usize("snapshot_every", 0),
    };
    let default_delta0 = if command == Cmd::Decay { 1.0 } else { 0.0 };
    let init = InitSpec {
        delta0: l.opt_f64("delta0").unwrap_or(default_delta0),
        bump_amplitude: l.f64("bump_amplitude", 0.0),
        bump_center: l.f64("bump_center", 4.0),
        bump_width: l.f64("bump_width", 0.7),
    };
    let decay = DecaySpec {
        t_max: l.f64("t_max", 100.0),
        dt_out: l.f64("dt_out", 0.05),
        sigma: l.opt_f64("sigma"),
        n_fft: l.usize("N", 1 << 20),
        betas: l.list("betas"),
        one_d: l.bool("one_d"),
        omega_max: l.f64("omega_max", 50.0),
        n_omega: l.usize("n_omega", 2001),
    };
    let scan = ScanSpec {
        re: (l.f64("re_min", 0.0), l.f64("re_max", 5.0)),
        im: (l.f64("im_min", -10.0), l.f64("im_max", 10.0)),
        nx: l.usize("nx", 400),
        ny: l.usize("ny", 400),
    };
    let threads = l.raw("threads").is_some().then(|| l.usize("threads", 0));
    let out_dir = PathBuf::from(
        l.raw("out").map(str::to_string).or(env_out_dir.filter(|s| !s.is_empty())).unwrap_or(DEFAULT_OUT_DIR.into()),
    );
    let mut errors = l.errors;

    let mut resolved = vec![("command".to_string(), command.name().to_string())];
    for k in KEYS {
        let v = match k.name {
            "delta0" => format!("{}", init.delta0),
            "boundary_layer_width" => format!("{}", grid.boundary_layer_width),
            "sigma" => decay.sigma.map_or("auto".into(), |s| format!("{s}")),
            "threads" => threads.map_or("auto".into(), |t| t.to_string()),
            "out" => out_dir.display().to_string(),
            _ => values.get(k.name).cloned().unwrap_or_default(),
        };
        resolved.push((k.name.to_string(), v));
    }

    let cfg = RunConfig { command, params, grid, sim, time, init, decay, scan, out_dir, threads, resolved };
    validate(&cfg, &mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(errors))
    }
}

fn split_library_message(e: cylwave::Error, errors: &mut Vec<String>) {
    match e {
        cylwave::Error::InvalidArgument(msg) => errors.extend(msg.split("; ").map(str::to_string)),
        other => errors.push(other.to_string()),
    }
}

fn validate(c: &RunConfig, errors: &mut Vec<String>) {
    if c.threads == Some(0) {
        errors.push("threads: must be at least 1".into());
    }
    let p = &c.params;
    match c.command {
        Cmd::Simulate => {
            if let Err(e) = p.validate() {
                split_library_message(e, errors);
            }
            if !(c.grid.r_max > p.radius) {
                errors.push(format!("r_max: {} must exceed R = {}", c.grid.r_max, p.radius));
            }
            if c.grid.n < 16 {
                errors.push(format!("n: {} mesh nodes is too few (need at least 16)", c.grid.n));
            }
            if !(c.grid.boundary_layer_width > 0.0) {
                errors.push("boundary_layer_width: must be positive".into());
            }
            if !(c.time.t_end > 0.0) {
                errors.push(format!("T: {} must be positive", c.time.t_end));
            }
            match c.time.dt {
                DtPolicy::Fixed(dt) if !(dt > 0.0) => errors.push(format!("dt: {dt} must be positive")),
                DtPolicy::Auto { cfl } if !(cfl > 0.0 && cfl <= 2.0) => {
                    errors.push(format!("cfl: {cfl} not in (0, 2]"))
                }
                _ => {}
            }
            if c.time.output_every == 0 {
                errors.push("output_every: must be at least 1".into());
            }
            if !(c.init.bump_width > 0.0) {
                errors.push("bump_width: must be positive".into());
            }
            if !(c.sim.h_min > 0.0 && c.sim.h_min < 1.0) {
                errors.push(format!("h_min: {} not in (0, 1)", c.sim.h_min));
            }
            if !(0.0..1.0).contains(&c.sim.sponge_fraction) {
                errors.push(format!("sponge_fraction: {} not in [0, 1)", c.sim.sponge_fraction));
            }
            if !(c.sim.sponge_strength >= 0.0) {
                errors.push("sponge_strength: must be non-negative".into());
            }
            if !(c.sim.blowup_ceiling > 0.0) {
                errors.push("blowup_ceiling: must be positive".into());
            }
            if p.epsilon * c.init.delta0 <= -1.0 {
                errors.push(format!("delta0: 1 + epsilon delta0 = {} must be positive", 1.0 + p.epsilon * c.init.delta0));
            }
        }
        Cmd::Decay => {
            if let Err(e) = p.validate_laplace() {
                split_library_message(e, errors);
            }
            let d = &c.decay;
            if !(d.t_max > 0.0) {
                errors.push(format!("t_max: {} must be positive", d.t_max));
            }
            if !(d.dt_out > 0.0 && d.dt_out <= d.t_max) {
                errors.push(format!("dt_out: {} not in (0, t_max]", d.dt_out));
            }
            if let Some(s) = d.sigma {
                if !(s > 0.0) {
                    errors.push(format!("sigma: {s} must be positive"));
                }
            }
            if !d.n_fft.is_power_of_two() || d.n_fft < 1024 {
                errors.push(format!("N: {} must be a power of two, at least 1024", d.n_fft));
            }
            if d.betas.is_empty() || d.betas.iter().any(|b| *b < 0.0) {
                errors.push("betas: need at least one non-negative exponent".into());
            }
            if !(d.omega_max > 0.0) {
                errors.push("omega_max: must be positive".into());
            }
            if d.n_omega < 2 {
                errors.push("n_omega: need at least 2 frequencies".into());
            }
        }
        Cmd::ScanDenominator => {
            if let Err(e) = p.validate_laplace() {
                split_library_message(e, errors);
            }
            let s = &c.scan;
            if !(s.re.0 >= 0.0) {
                errors.push(format!("re_min: {} must be >= 0 (closed right half-plane)", s.re.0));
            }
            if !(s.re.1 >= s.re.0) {
                errors.push("re_max: must not be below re_min".into());
            }
            if !(s.im.1 >= s.im.0) {
                errors.push("im_max: must not be below im_min".into());
            }
            if s.nx == 0 || s.ny == 0 {
                errors.push("nx, ny: need at least one point each".into());
            }
        }
        Cmd::BranchCuts => {
            if !(0.0..1.0).contains(&p.kappa) {
                errors.push(format!("kappa = {} not in [0, 1)", p.kappa));
            }
            if !(0.0..1.0).contains(&p.nu) {
                errors.push(format!("nu = {} not in [0, 1)", p.nu));
            }
        }
        Cmd::SpecfunCheck | Cmd::OperatorsCheck => {}
    }
}
