use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use keyrate::blockstate::BlockState;
use keyrate::distill::{corner_norm_trajectory, recurrence_oracle_branches, MemoryBudget};
use keyrate::families::{
    example1_state, example2, example3, example4, fig1_sweep, q_grid, Ex1Params, Ex2Params,
    Ex34Params, Family34, SweepRow,
};
use keyrate::format::sig;
use keyrate::opalg::trace_norm;
use keyrate::privstate::certificate_from_corner_norm;

use crate::report::{build_report, PT_INVARIANCE_TOL};
use crate::statefile::{read_state, write_state};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

pub const CSV_HEADER: &str = "q,p,x,y,z,w,S_E,K_DW";

#[derive(Debug, Parser)]
#[command(name = "keyrate", version, about = "Distillable-key conditions for states with shields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a state and evaluate every key condition on it.
    Verify(VerifyArgs),
    /// Corner-norm trajectory under repeated recurrence.
    Recur(RecurArgs),
    /// One-way key rate of the squeezed Example 3/4 states over a q grid.
    Sweep(SweepArgs),
    /// Partial-transpose test over Bob's side.
    Ppt(PptArgs),
    /// Write a family state to a state file.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
}

#[derive(Debug, Clone, Args)]
pub struct StateSource {
    /// Generate the state from a family (default ex4 when no --input is given).
    #[arg(long, value_enum, conflicts_with = "input")]
    pub family: Option<FamilyName>,
    /// Read the state from a JSON state file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Example 3/4 noise parameter.
    #[arg(long, default_value_t = 0.03)]
    pub q: f64,
    /// Example 2 weight of the first pbit.
    #[arg(long, default_value_t = 0.75)]
    pub p1: f64,
    /// Example 1 local dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Example 1 tensor power.
    #[arg(long, default_value_t = 1)]
    pub l: u32,
    /// Example 1 recurrence exponent.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Example 1 mixing weight.
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,
}

impl StateSource {
    pub fn describe(&self) -> String {
        if let Some(path) = &self.input {
            return format!("file {}", path.display());
        }
        match self.family.unwrap_or(FamilyName::Ex4) {
            FamilyName::Ex1 => format!("ex1 d={} l={} m={} p={}", self.d, self.l, self.m, self.p),
            FamilyName::Ex2 => format!("ex2 p1={}", self.p1),
            FamilyName::Ex3 => format!("ex3 q={}", self.q),
            FamilyName::Ex4 => format!("ex4 q={}", self.q),
        }
    }

    pub fn load(&self) -> Result<BlockState, String> {
        if let Some(path) = &self.input {
            return read_state(path).map_err(|e| e.to_string());
        }
        let state = match self.family.unwrap_or(FamilyName::Ex4) {
            FamilyName::Ex1 => example1_state(
                &Ex1Params {
                    d: self.d,
                    l: self.l,
                    p: self.p,
                    m: self.m,
                },
                &MemoryBudget::default(),
            ),
            FamilyName::Ex2 => example2(&Ex2Params::with_p1(self.p1)),
            FamilyName::Ex3 => Ex34Params::new(self.q)
                .and_then(|p| example3(&p))
                .map(|b| b.render_blocks()),
            FamilyName::Ex4 => Ex34Params::new(self.q).and_then(|p| example4(&p)),
        };
        state.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Emit a flat JSON object instead of text.
    #[arg(long)]
    pub json: bool,
    /// Target deficit for the round estimate.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecurMode {
    /// Scalar closed form of the iterate.
    Closed,
    /// Dense LOCC simulation, one copy added per round.
    Oracle,
}

#[derive(Debug, Args)]
pub struct RecurArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Largest number of combined copies.
    #[arg(long, default_value_t = 8)]
    pub rounds: u32,
    #[arg(long, value_enum, default_value_t = RecurMode::Closed)]
    pub mode: RecurMode,
    /// Dense dimension limit for oracle mode.
    #[arg(long, default_value_t = 4096)]
    pub max_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFamily {
    Ex3,
    Ex4,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepFamily::Ex3)]
    pub family: SweepFamily,
    #[arg(long, default_value_t = 0.0)]
    pub q_from: f64,
    #[arg(long, default_value_t = 0.073)]
    pub q_to: f64,
    #[arg(long, default_value_t = 0.001)]
    pub q_step: f64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PptArgs {
    #[command(flatten)]
    pub source: StateSource,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[arg(long)]
    pub out: PathBuf,
}

/// Command output and exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            stdout: String::new(),
            stderr: format!("error: {}\n", message.into()),
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Verify(a) => verify(&a),
        Command::Recur(a) => recur(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Ppt(a) => ppt(&a),
        Command::Export(a) => export(&a),
    }
}

pub fn verify(args: &VerifyArgs) -> Outcome {
    let state = match args.source.load() {
        Ok(s) => s,
        Err(e) => return Outcome::invalid(e),
    };
    let v = state.validate();
    if !v.is_valid() {
        return Outcome::invalid(format!("not a valid state: {}", v.problems().join("; ")));
    }
    match build_report(&state, &args.source.describe(), args.eps) {
        Ok(r) => Outcome::ok(if args.json { r.to_json() } else { r.to_text() }),
        Err(e) => Outcome::invalid(e.to_string()),
    }
}

pub fn recur(args: &RecurArgs) -> Outcome {
    if args.rounds == 0 {
        return Outcome::invalid("--rounds must be at least 1");
    }
    let state = match args.source.load() {
        Ok(s) => s,
        Err(e) => return Outcome::invalid(e),
    };
    match args.mode {
        RecurMode::Closed => recur_closed(&state, args.rounds),
        RecurMode::Oracle => recur_oracle(&state, args.rounds, args.max_dim),
    }
}

fn certificate_lines(corner: f64) -> String {
    let c = certificate_from_corner_norm(corner);
    let delta = c.delta.map_or("n/a".to_string(), |d| sig(d, 12));
    format!(
        "pbit certificate: epsilon={} delta={} valid={}\n",
        sig(c.epsilon, 12),
        delta,
        if c.valid { "yes" } else { "no" }
    )
}

fn recur_closed(state: &BlockState, rounds: u32) -> Outcome {
    let trajectory = match corner_norm_trajectory(state, rounds) {
        Ok(t) => t,
        Err(e) => return Outcome::invalid(e.to_string()),
    };
    let mut out = String::from("n,corner_norm\n");
    for (i, c) in trajectory.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, sig(*c, 12));
    }
    out.push_str(&certificate_lines(*trajectory.last().expect("rounds >= 1")));
    Outcome::ok(out)
}

fn recur_oracle(state: &BlockState, rounds: u32, max_dim: usize) -> Outcome {
    let budget = MemoryBudget {
        max_dense_dim: max_dim,
    };
    let mut out = String::from("n,corner_norm,probability\n");
    let mut current = state.clone();
    let mut corner = match trace_norm(current.block_bits(0, 0, 1, 1)) {
        Ok(c) => c,
        Err(e) => return Outcome::invalid(e.to_string()),
    };
    let _ = writeln!(out, "1,{},", sig(corner, 12));
    for n in 2..=rounds {
        let branches = match recurrence_oracle_branches(&current, state, &budget) {
            Ok(b) => b,
            Err(e) => {
                return Outcome {
                    code: EXIT_INVALID,
                    stdout: out,
                    stderr: format!("error: round {n}: {e}\n"),
                }
            }
        };
        let [kept, ..] = branches.states;
        let Some(kept) = kept else {
            return Outcome {
                code: EXIT_INVALID,
                stdout: out,
                stderr: format!("error: round {n}: outcome 00 has zero probability\n"),
            };
        };
        current = kept;
        corner = match trace_norm(current.block_bits(0, 0, 1, 1)) {
            Ok(c) => c,
            Err(e) => return Outcome::invalid(e.to_string()),
        };
        let _ = writeln!(out, "{n},{},{}", sig(corner, 12), sig(branches.probabilities[0], 12));
    }
    out.push_str(&certificate_lines(corner));
    Outcome::ok(out)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let s = &r.summary;
        let fields = [r.q, r.p, s.x, s.y, s.z, s.w, s.s_e, s.k_dw].map(|v| sig(v, 12));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let family = match args.family {
        SweepFamily::Ex3 => Family34::Ex3,
        SweepFamily::Ex4 => Family34::Ex4,
    };
    let rows = q_grid(args.q_from, args.q_to, args.q_step).and_then(|g| fig1_sweep(family, &g));
    let csv = match rows {
        Ok(rows) => sweep_csv(&rows),
        Err(e) => return Outcome::invalid(e.to_string()),
    };
    match &args.out {
        Some(path) => match std::fs::write(path, &csv) {
            Ok(()) => Outcome::ok(String::new()),
            Err(e) => Outcome::invalid(format!("{}: {e}", path.display())),
        },
        None => Outcome::ok(csv),
    }
}

pub fn ppt(args: &PptArgs) -> Outcome {
    let state = match args.source.load() {
        Ok(s) => s,
        Err(e) => return Outcome::invalid(e),
    };
    let v = state.validate();
    if !v.is_valid() {
        return Outcome::invalid(format!("not a valid state: {}", v.problems().join("; ")));
    }
    let verdict = match state.ppt_check() {
        Ok(v) => v,
        Err(e) => return Outcome::invalid(e.to_string()),
    };
    let pt_gap = state.partial_transpose_bb().max_abs_diff(&state.to_dense());
    let mut out = String::new();
    let _ = writeln!(out, "{}", if verdict.psd { "PPT" } else { "NPT" });
    let _ = writeln!(out, "min eigenvalue: {}", sig(verdict.min_eigenvalue, 12));
    let _ = writeln!(
        out,
        "PT-invariant: {}",
        if pt_gap <= PT_INVARIANCE_TOL { "yes" } else { "no" }
    );
    if let Some(w) = &verdict.witness {
        out.push_str("witness:\n");
        for z in w {
            let _ = writeln!(out, "  {} {}", sig(z.re, 12), sig(z.im, 12));
        }
    }
    Outcome {
        code: if verdict.psd { EXIT_OK } else { EXIT_NEGATIVE },
        stdout: out,
        stderr: String::new(),
    }
}

pub fn export(args: &ExportArgs) -> Outcome {
    let state = match args.source.load() {
        Ok(s) => s,
        Err(e) => return Outcome::invalid(e),
    };
    match write_state(&args.out, &state) {
        Ok(()) => Outcome::ok(String::new()),
        Err(e) => Outcome::invalid(e.to_string()),
    }
}

/// Writes an outcome to the process streams and returns its exit code.
pub fn emit(outcome: &Outcome) -> i32 {
    print!("{}", outcome.stdout);
    let _ = std::io::stdout().flush();
    eprint!("{}", outcome.stderr);
    outcome.code
}
