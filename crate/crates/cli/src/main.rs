use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use wds_cli::config::{default_out, read_config_file, schema, validate, Kind, SCHEMAS};
use wds_cli::{run, run_report, CliError};

fn cli() -> Command {
    let mut cmd = Command::new("wds")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Sturmian systems, Denjoy maps, twist maps and horseshoes")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for s in SCHEMAS {
        let mut sub = Command::new(s.command)
            .about(s.about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value file; flags override it"))
            .arg(Arg::new("out").long("out").value_name("DIR").help("output directory"))
            .arg(Arg::new("seed").long("seed").value_name("N").default_value("0").help("seed for multi-start optimizers"));
        for k in s.keys {
            let value_name = match k.kind {
                Kind::Real => "REAL",
                Kind::Int => "INT",
                Kind::Rational => "P/Q",
                Kind::Angle => "ANGLE",
                Kind::Path => "PATH",
                Kind::Text => "TEXT",
            };
            let help = match k.default {
                Some(d) if !d.is_empty() => format!("{} [default: {d}]", k.help),
                _ => k.help.to_string(),
            };
            sub = sub.arg(Arg::new(k.name).long(k.name).value_name(value_name).allow_hyphen_values(true).help(help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd.subcommand(
        Command::new("report")
            .about("Verify manifests and write a summary")
            .arg(Arg::new("manifests").value_name("MANIFEST").action(ArgAction::Append).value_parser(clap::value_parser!(PathBuf)))
            .arg(Arg::new("out").long("out").value_name("DIR").value_parser(clap::value_parser!(PathBuf))),
    )
}

fn dispatch(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    if name == "report" {
        let manifests: Vec<PathBuf> = m.get_many::<PathBuf>("manifests").map(|v| v.cloned().collect()).unwrap_or_default();
        let out = m.get_one::<PathBuf>("out").cloned().unwrap_or_else(|| default_out("report"));
        let (path, summary) = run_report(&manifests, &out)?;
        println!("{} runs, {} checks, manifest {}", summary.runs, summary.rows.len(), path.display());
        return Ok(());
    }
    let s = schema(name).ok_or_else(|| CliError::Validation(format!("unknown command {name}")))?;
    let file = match m.get_one::<String>("config") {
        Some(p) => read_config_file(p.as_ref())?,
        None => BTreeMap::new(),
    };
    let flags = s
        .keys
        .iter()
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect();
    let seed = m.get_one::<String>("seed").map_or("0", String::as_str);
    let seed: u64 = seed.parse().map_err(|_| CliError::Validation(format!("{name}.seed: expected an integer, got `{seed}`")))?;
    let cfg = validate(s, file, flags, m.get_one::<String>("out").map(PathBuf::from), seed)?;
    let (path, manifest) = run(&cfg)?;
    for c in &manifest.checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    println!("manifest {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match dispatch(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
