//! Command line front-end.
//!
//! ```text
//! nbglide [-h] [-v] [-m] [-p] [-i INPUT] [filename]
//! nbglide scaffold-ci [--force] [dir]
//! ```
//!
//! Exit codes: 0 success, 1 build failure, 2 usage error.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand as ClapSubcommand};

use crate::emit::{is_valid_input_name, BuildConfig, DEFAULT_OUTPUT_DIR, ENV_AI_TOKEN};
use crate::pipeline::compile;
use crate::{BUNDLED_EXAMPLE, BUNDLED_EXAMPLE_NAME};

pub const USAGE: &str = "nbglide [-h] [-v] [-m] [-p] [-i INPUT] [filename]\n       nbglide scaffold-ci [--force] [dir]";
pub const WORKFLOW_PATH: &str = ".github/workflows/build-course.yml";
pub const WORKFLOW: &str = include_str!("assets/build-course.yml");
pub const TEMPLATE_README: &str = include_str!("assets/template-README.md");

pub const EXIT_OK: i32 = 0;
pub const EXIT_BUILD_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "nbglide",
    version,
    about = "Compile an annotated Jupyter notebook into a standalone interactive course",
    override_usage = USAGE,
    disable_version_flag = true,
    args_conflicts_with_subcommands = true,
    disable_help_subcommand = true
)]
struct Args {
    /// Display the version of nbglide
    #[arg(short = 'v', long = "version")]
    version: bool,

    /// Mute the audio
    #[arg(short = 'm', long = "mute")]
    mute: bool,

    /// Disable prompt window
    #[arg(short = 'p', long = "dPrompt")]
    disable_prompt: bool,

    /// The file name without extension
    #[arg(short = 'i', value_name = "INPUT")]
    input: Option<String>,

    /// Pass the file name without extension
    filename: Option<String>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Write a GitHub Pages workflow that builds every notebook in a repository
    #[command(name = "scaffold-ci")]
    ScaffoldCi {
        /// Overwrite existing files
        #[arg(long)]
        force: bool,
        /// Repository root
        #[arg(default_value = ".")]
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subcommand {
    Build,
    ScaffoldCi { dir: PathBuf, force: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliInvocation {
    pub filename: Option<String>,
    pub input_flag: Option<String>,
    pub mute: bool,
    pub disable_prompt: bool,
    pub show_version: bool,
    pub show_help: bool,
    pub subcommand: Subcommand,
}

impl CliInvocation {
    /// The notebook name for a build, from `-i` or the positional argument.
    pub fn input_name(&self) -> Option<&str> {
        self.input_flag.as_deref().or(self.filename.as_deref())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct UsageError {
    pub message: String,
}

impl UsageError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

pub fn parse_args<I, S>(argv: I) -> Result<CliInvocation, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("nbglide"))
        .chain(argv.into_iter().map(Into::into));
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) if e.kind() == ErrorKind::DisplayHelp => {
            return Ok(CliInvocation {
                filename: None,
                input_flag: None,
                mute: false,
                disable_prompt: false,
                show_version: false,
                show_help: true,
                subcommand: Subcommand::Build,
            })
        }
        Err(e) => return Err(UsageError::new(e.render().to_string().trim_end())),
    };

    let subcommand = match args.command {
        Some(Command::ScaffoldCi { force, dir }) => Subcommand::ScaffoldCi { dir, force },
        None => Subcommand::Build,
    };
    let inv = CliInvocation {
        filename: args.filename,
        input_flag: args.input,
        mute: args.mute,
        disable_prompt: args.disable_prompt,
        show_version: args.version,
        show_help: false,
        subcommand,
    };

    if inv.subcommand == Subcommand::Build && !inv.show_version {
        match (&inv.input_flag, &inv.filename) {
            (Some(a), Some(b)) if a != b => {
                return Err(UsageError::new(format!(
                    "error: conflicting inputs `-i {a}` and `{b}`; pass the notebook once"
                )))
            }
            (None, None) => {
                return Err(UsageError::new(
                    "error: no notebook given; pass the file name without extension",
                ))
            }
            _ => {}
        }
        let name = inv.input_name().unwrap_or_default();
        if !is_valid_input_name(name) {
            return Err(UsageError::new(format!(
                "error: `{name}` is not a bare file name; pass the notebook name without directory or `.ipynb`"
            )));
        }
    }
    Ok(inv)
}

pub fn help_text() -> String {
    Args::command().render_help().to_string()
}

pub fn version_text() -> String {
    format!("nbglide {}", env!("CARGO_PKG_VERSION"))
}

/// Working directory and environment for one invocation.
#[derive(Debug, Clone)]
pub struct CliEnv {
    pub cwd: PathBuf,
    pub vars: HashMap<String, String>,
}

impl CliEnv {
    pub fn from_process() -> std::io::Result<Self> {
        Ok(Self {
            cwd: std::env::current_dir()?,
            vars: std::env::vars().collect(),
        })
    }

    pub fn var(&self, key: &str) -> Option<String> {
        self.vars.get(key).cloned()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error(
        "notebook `{name}` not found: tried {tried} in {cwd}, and `{name}` is not the bundled example (`{BUNDLED_EXAMPLE_NAME}`)",
        tried = format!("{name}.ipynb"),
        cwd = .cwd.display()
    )]
    InputNotFound { name: String, cwd: PathBuf },
    #[error("could not materialize the bundled example: {0}")]
    Io(#[from] std::io::Error),
}

/// A notebook located for a build. Holds the scratch directory alive when
/// the bundled example had to be written out.
#[derive(Debug)]
pub struct ResolvedInput {
    pub path: PathBuf,
    pub bundled: bool,
    _scratch: Option<tempfile::TempDir>,
}

/// `{name}.ipynb` in `cwd`, else the bundled example when asked for by name.
pub fn resolve_input(name: &str, cwd: &Path) -> Result<ResolvedInput, InputError> {
    let local = cwd.join(format!("{name}.ipynb"));
    if local.is_file() {
        return Ok(ResolvedInput {
            path: local,
            bundled: false,
            _scratch: None,
        });
    }
    if name == BUNDLED_EXAMPLE_NAME {
        let scratch = tempfile::tempdir()?;
        let path = scratch.path().join(format!("{name}.ipynb"));
        std::fs::write(&path, BUNDLED_EXAMPLE)?;
        return Ok(ResolvedInput {
            path,
            bundled: true,
            _scratch: Some(scratch),
        });
    }
    Err(InputError::InputNotFound {
        name: name.to_string(),
        cwd: cwd.to_path_buf(),
    })
}

/// Parses `argv` (without the program name) and runs it.
pub fn run<I, S>(argv: I, env: &CliEnv, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let inv = match parse_args(argv) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = writeln!(err, "usage: {USAGE}\n{e}");
            return EXIT_USAGE;
        }
    };
    if inv.show_help {
        let _ = write!(out, "{}", help_text());
        return EXIT_OK;
    }
    if inv.show_version {
        let _ = writeln!(out, "{}", version_text());
        return EXIT_OK;
    }
    match &inv.subcommand {
        Subcommand::Build => run_build(&inv, env, out, err),
        Subcommand::ScaffoldCi { dir, force } => {
            let dir = env.cwd.join(dir);
            match scaffold_ci(&dir, *force) {
                Ok(written) => {
                    for path in written {
                        let _ = writeln!(out, "{}", display_path(&path, &env.cwd));
                    }
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_BUILD_FAILURE
                }
            }
        }
    }
}

pub fn run_build(inv: &CliInvocation, env: &CliEnv, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(name) = inv.input_name() else {
        let _ = writeln!(err, "usage: {USAGE}\nerror: no notebook given");
        return EXIT_USAGE;
    };

    let input = match resolve_input(name, &env.cwd) {
        Ok(input) => input,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_BUILD_FAILURE;
        }
    };
    if input.bundled {
        let _ = writeln!(err, "note: using the bundled example notebook");
    }

    let mut cfg = BuildConfig::new(name).apply_env(|k| env.var(k));
    cfg.mute = inv.mute;
    cfg.assistant_enabled = !inv.disable_prompt;
    cfg.output_dir = env.cwd.join(DEFAULT_OUTPUT_DIR);
    if cfg.assistant_enabled && env.var(ENV_AI_TOKEN).is_some_and(|t| !t.is_empty()) {
        let _ = writeln!(
            err,
            "warning: {ENV_AI_TOKEN} is set but is never written into the course; learners supply their own key"
        );
    }

    match compile(&input.path, &cfg) {
        Ok(report) => {
            for d in &report.diagnostics {
                let _ = writeln!(err, "{d}");
            }
            for path in &report.written {
                let _ = writeln!(out, "{}", display_path(path, &env.cwd));
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                let _ = writeln!(err, "  caused by: {cause}");
                source = cause.source();
            }
            EXIT_BUILD_FAILURE
        }
    }
}

fn display_path(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).display().to_string()
}

#[derive(Debug, thiserror::Error)]
pub enum ScaffoldError {
    #[error("{} already exists; rerun with --force to overwrite", .0.display())]
    RefusesOverwrite(PathBuf),
    #[error("could not write {}: {source}", .path.display())]
    IoFailure {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Writes the Pages workflow and a starter README into `target_dir`.
pub fn scaffold_ci(target_dir: &Path, force: bool) -> Result<Vec<PathBuf>, ScaffoldError> {
    let files = [
        (target_dir.join(WORKFLOW_PATH), WORKFLOW),
        (target_dir.join("README.md"), TEMPLATE_README),
    ];
    if !force {
        if let Some((path, _)) = files.iter().find(|(p, _)| p.exists()) {
            return Err(ScaffoldError::RefusesOverwrite(path.clone()));
        }
    }
    let mut written = Vec::new();
    for (path, contents) in files {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| ScaffoldError::IoFailure {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        std::fs::write(&path, contents).map_err(|source| ScaffoldError::IoFailure {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positional_build() {
        let inv = parse_args(["original_example"]).unwrap();
        assert_eq!(inv.subcommand, Subcommand::Build);
        assert_eq!(inv.input_name(), Some("original_example"));
        assert!(!inv.mute && !inv.disable_prompt);
    }

    #[test]
    fn mute_and_prompt_flags() {
        let inv = parse_args(["-m", "-p", "mycourse"]).unwrap();
        assert!(inv.mute && inv.disable_prompt);
        let inv = parse_args(["--mute", "--dPrompt", "-i", "mycourse"]).unwrap();
        assert!(inv.mute && inv.disable_prompt);
        assert_eq!(inv.input_name(), Some("mycourse"));
    }

    #[test]
    fn conflicting_inputs() {
        assert!(parse_args(["-i", "a", "b"]).is_err());
        assert_eq!(parse_args(["-i", "a", "a"]).unwrap().input_name(), Some("a"));
    }

    #[test]
    fn missing_input_and_unknown_flags() {
        assert!(parse_args(Vec::<String>::new()).is_err());
        let err = parse_args(["-x", "a"]).unwrap_err();
        assert!(err.message.contains("-x"));
        assert!(parse_args(["a.ipynb"]).is_err());
        assert!(parse_args(["../a"]).is_err());
    }

    #[test]
    fn version_and_help() {
        assert!(parse_args(["-v"]).unwrap().show_version);
        assert!(parse_args(["--version"]).unwrap().show_version);
        assert!(parse_args(["-h"]).unwrap().show_help);
        let help = help_text();
        assert!(help.contains("Mute the audio"));
        assert!(help.contains("Disable prompt window"));
        assert!(help.contains("The file name without extension"));
        assert!(help.contains("Pass the file name without extension"));
        assert!(help.contains("Display the version"));
    }

    #[test]
    fn scaffold_subcommand() {
        let inv = parse_args(["scaffold-ci", "--force", "repo"]).unwrap();
        assert_eq!(
            inv.subcommand,
            Subcommand::ScaffoldCi {
                dir: "repo".into(),
                force: true
            }
        );
        let inv = parse_args(["scaffold-ci"]).unwrap();
        assert_eq!(
            inv.subcommand,
            Subcommand::ScaffoldCi {
                dir: ".".into(),
                force: false
            }
        );
    }

    #[test]
    fn resolution_order() {
        let dir = tempfile::tempdir().unwrap();
        let bundled = resolve_input("original_example", dir.path()).unwrap();
        assert!(bundled.bundled);
        assert_eq!(std::fs::read_to_string(&bundled.path).unwrap(), BUNDLED_EXAMPLE);

        std::fs::write(dir.path().join("mycourse.ipynb"), "{}").unwrap();
        let local = resolve_input("mycourse", dir.path()).unwrap();
        assert!(!local.bundled);
        assert_eq!(local.path, dir.path().join("mycourse.ipynb"));

        let err = resolve_input("ghost", dir.path()).unwrap_err();
        assert!(matches!(err, InputError::InputNotFound { .. }));
        let msg = err.to_string();
        assert!(msg.contains("ghost.ipynb") && msg.contains("original_example"));
    }

    #[test]
    fn local_copy_of_example_wins() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("original_example.ipynb"), "{}").unwrap();
        assert!(!resolve_input("original_example", dir.path()).unwrap().bundled);
    }

    #[test]
    fn scaffold_writes_two_files_then_refuses() {
        let dir = tempfile::tempdir().unwrap();
        let written = scaffold_ci(dir.path(), false).unwrap();
        assert_eq!(written.len(), 2);
        assert!(dir.path().join(WORKFLOW_PATH).is_file());
        assert!(matches!(
            scaffold_ci(dir.path(), false),
            Err(ScaffoldError::RefusesOverwrite(_))
        ));
        assert_eq!(scaffold_ci(dir.path(), true).unwrap().len(), 2);
    }

    #[test]
    fn workflow_mentions_the_pieces() {
        assert!(WORKFLOW.contains("on:\n  push:"));
        assert!(WORKFLOW.contains("cargo install"));
        assert!(WORKFLOW.contains("*.ipynb"));
        assert!(WORKFLOW.contains("output/index.html"));
        assert!(WORKFLOW.contains("_pyglide.html"));
        assert!(WORKFLOW.contains("actions/deploy-pages"));
        assert!(TEMPLATE_README.contains("Use this template"));
    }
}
