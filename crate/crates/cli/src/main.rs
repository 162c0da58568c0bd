use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ebchan::{HolevoForm, Tolerances};
use ebchan_cli::analyze::analyze;
use ebchan_cli::document::{
    from_json, parse_document, ChannelDocument, DocumentError, KrausFile, StateFile, StochasticFile,
};
use ebchan_cli::error::CliError;
use ebchan_cli::iterate::iterate;
use ebchan_cli::verify::{plural, random_subjects, verify, Subject};

/// Entanglement breaking channels in Holevo form: build, analyze, iterate, verify.
#[derive(Parser)]
#[command(name = "ebchan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// F = I, R = I/n
    Depolarizing,
    /// F_k = R_k = |k><k|
    Diag,
    /// Quantum-classical channel of a column-stochastic matrix
    Qc,
    /// Holevo form of rank-one Kraus operators
    FromKraus,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Write a channel document for one of the standard constructions.
    Build {
        kind: Kind,
        #[arg(long)]
        n: Option<usize>,
        /// JSON file {"r": r, "entries": [[...], ...]}
        #[arg(long, value_name = "FILE")]
        stochastic: Option<PathBuf>,
        /// JSON file {"n": n, "kraus": [matrix, ...]}
        #[arg(long, value_name = "FILE")]
        kraus: Option<PathBuf>,
        /// Output file; standard output if omitted
        #[arg(short, value_name = "FILE")]
        o: Option<PathBuf>,
    },
    /// Stochastic representation, spectra, primitivity, fixed point and rank bounds.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long, value_name = "X")]
        psd_tol: Option<f64>,
        #[arg(long, value_name = "X")]
        zero_eig_tol: Option<f64>,
        #[arg(long, value_name = "X")]
        match_tol: Option<f64>,
        #[arg(long, value_name = "X")]
        stochastic_tol: Option<f64>,
    },
    /// Apply the channel repeatedly to a state and track S^t c alongside.
    Iterate {
        file: PathBuf,
        /// JSON file {"n": n, "rho": matrix}
        #[arg(long, value_name = "FILE")]
        state: PathBuf,
        #[arg(long, value_name = "M", value_parser = clap::value_parser!(u64).range(1..))]
        steps: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run the invariant suite on a channel document or on random channels.
    Verify {
        #[arg(conflicts_with = "random")]
        file: Option<PathBuf>,
        /// Number of random channels (50 when neither FILE nor --random is given)
        #[arg(long, value_name = "N")]
        random: Option<usize>,
        #[arg(long, value_name = "K", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    from_json(&read(path)?).map_err(|source| CliError::Document {
        path: path.display().to_string(),
        source,
    })
}

fn load_channel(path: &Path, tol: &Tolerances) -> Result<(ChannelDocument, HolevoForm), CliError> {
    let doc: ChannelDocument = read_json(path)?;
    let form = doc.to_form(tol).map_err(|e| CliError::Document {
        path: path.display().to_string(),
        source: e.into(),
    })?;
    Ok((doc, form))
}

fn input_err(path: &Path, message: impl ToString) -> CliError {
    CliError::Input {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn build(
    kind: Kind,
    n: Option<usize>,
    stochastic: Option<PathBuf>,
    kraus: Option<PathBuf>,
) -> Result<ChannelDocument, CliError> {
    let tol = Tolerances::default();
    let need_n = || match n {
        Some(0) => Err(CliError::Usage("--n must be at least 1".into())),
        Some(n) => Ok(n),
        None => Err(CliError::Usage("this kind needs --n".into())),
    };
    let (form, name) = match kind {
        Kind::Depolarizing => (HolevoForm::depolarizing(need_n()?), "depolarizing"),
        Kind::Diag => (HolevoForm::map_to_diagonal(need_n()?), "diag"),
        Kind::Qc => {
            let path =
                stochastic.ok_or_else(|| CliError::Usage("qc needs --stochastic FILE".into()))?;
            let file: StochasticFile = read_json(&path)?;
            let s = file.to_matrix(&tol).map_err(|e| input_err(&path, e))?;
            (HolevoForm::qc_from_stochastic(&s, &tol), "qc")
        }
        Kind::FromKraus => {
            let path =
                kraus.ok_or_else(|| CliError::Usage("from-kraus needs --kraus FILE".into()))?;
            let file: KrausFile = read_json(&path)?;
            let form = file.to_form(&tol).map_err(|e| input_err(&path, e))?;
            (Ok(form), "from-kraus")
        }
    };
    let form = form.map_err(|e| CliError::Usage(e.to_string()))?;
    let metadata = BTreeMap::from([("construction".to_string(), name.to_string())]);
    Ok(ChannelDocument::from_form(&form, Some(metadata)))
}

fn emit_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Build {
            kind,
            n,
            stochastic,
            kraus,
            o,
        } => {
            let text = build(kind, n, stochastic, kraus)?.emit();
            match o {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Analyze {
            file,
            format,
            psd_tol,
            zero_eig_tol,
            match_tol,
            stochastic_tol,
        } => {
            let d = Tolerances::default();
            let tol = Tolerances {
                psd_tol: psd_tol.unwrap_or(d.psd_tol),
                zero_eig_tol: zero_eig_tol.unwrap_or(d.zero_eig_tol),
                match_tol: match_tol.unwrap_or(d.match_tol),
                stochastic_tol: stochastic_tol.unwrap_or(d.stochastic_tol),
            }
            .validated()
            .ok_or_else(|| CliError::Usage("tolerances must be finite and non-negative".into()))?;
            let (doc, form) = load_channel(&file, &tol)?;
            let report = analyze(doc, &form, &tol).map_err(CliError::Consistency)?;
            match format {
                Format::Text => print!("{}", report.render_text()),
                Format::Machine => print!("{}", emit_json(&report)),
            }
            if !report.passed {
                return Err(CliError::Consistency("analysis checks failed".into()));
            }
        }
        Command::Iterate {
            file,
            state,
            steps,
            format,
        } => {
            let tol = Tolerances::default();
            let (_, form) = load_channel(&file, &tol)?;
            let sf: StateFile = read_json(&state)?;
            if sf.n != form.n() {
                return Err(input_err(
                    &state,
                    format!("state is {0}x{0}, channel acts on n = {1}", sf.n, form.n()),
                ));
            }
            let rho = sf.to_state(&tol).map_err(|e| input_err(&state, e))?;
            let trajectory =
                iterate(&form, rho, steps as usize, &tol).map_err(CliError::Consistency)?;
            match format {
                Format::Text => print!("{}", trajectory.render_text()),
                Format::Machine => print!("{}", emit_json(&trajectory)),
            }
            if !trajectory.agreement_ok {
                return Err(CliError::Consistency("apply and S^t c disagree".into()));
            }
        }
        Command::Verify {
            file,
            random,
            seed,
            format,
        } => {
            let tol = Tolerances::default();
            let subjects: Vec<Subject> = match file {
                Some(path) => {
                    let label = path.display().to_string();
                    let doc =
                        parse_document(&read(&path)?).map_err(|source| CliError::Document {
                            path: label.clone(),
                            source,
                        })?;
                    let built = doc.to_form(&tol).map_err(|e| {
                        ("validation".to_string(), DocumentError::from(e).to_string())
                    });
                    vec![(label, built)]
                }
                None => random_subjects(random.unwrap_or(50), seed, &tol),
            };
            let summary = verify(subjects, seed, &tol);
            match format {
                Format::Text => print!("{}", summary.render_text()),
                Format::Machine => print!("{}", emit_json(&summary)),
            }
            if !summary.passed {
                return Err(CliError::Consistency(format!(
                    "{} failed",
                    plural(summary.failures.len(), "check")
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ebchan: {e}");
            (&e).into()
        }
    }
}
