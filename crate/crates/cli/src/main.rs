use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use logicnet::compiler::{self, VerificationReport};
use logicnet::formula::{self, Assignment, Formula, Verdict};
use logicnet::hopfield::{HopfieldNet, Pattern, UpdateOrder};
use logicnet::network::{binarize, Network, DEFAULT_CUT};
use logicnet::training::{self, Dataset, ExampleOrder, TrainError, TrainSpec};

// Like println!/print!, but a closed stdout (e.g. `| head`) becomes an error
// instead of a panic.
macro_rules! outln {
    ($($t:tt)*) => {
        if let Err(e) = writeln!(std::io::stdout(), $($t)*) {
            return Err(e.into());
        }
    };
}

macro_rules! out {
    ($($t:tt)*) => {
        if let Err(e) = write!(std::io::stdout(), $($t)*) {
            return Err(e.into());
        }
    };
}

mod table_csv;

const EXIT_USAGE: u8 = 1;
const EXIT_INCOMPATIBLE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "logicnet",
    version,
    about = "Compile propositional formulas to sigmoid gate networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Doc,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and print it back in canonical form.
    Parse {
        /// Formula text, or `-` to read it from stdin.
        formula: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print the truth table of a formula.
    Table {
        formula: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Evaluate a formula and its compiled network on one assignment, e.g. `p=1 q=0`.
    Eval {
        formula: String,
        assignments: Vec<String>,
        /// Evaluate this network document instead of compiling the formula.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compile a formula to a network document.
    Compile {
        formula: String,
        /// Compile the counterexample detector `x & !y` of an implication `x -> y` instead.
        #[arg(long)]
        probe: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the compiled network against the truth table on every assignment.
    Verify {
        formula: String,
        /// Also print the activation table (inputs, hidden activations, output).
        #[arg(long)]
        raw: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether a claim is compatible with a possibility `<>(...)`.
    Compat {
        claim: String,
        possibility: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Train a sigmoid network with full-batch backpropagation.
    Train(TrainArgs),
    /// Train a single threshold unit with the perceptron rule.
    Perceptron(PerceptronArgs),
    /// Hopfield associative memory.
    #[command(subcommand)]
    Hopfield(HopfieldCommand),
}

#[derive(Args)]
struct DataArgs {
    /// Use the truth table of this formula as the dataset.
    #[arg(
        long,
        conflicts_with = "truth_table",
        required_unless_present = "truth_table"
    )]
    formula: Option<String>,
    /// CSV file: header of input names then `y`, one row of 0/1 bits per example.
    #[arg(long)]
    truth_table: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Layer widths including the input layer, e.g. `2,2,1`.
    #[arg(long, value_delimiter = ',', default_value = "2,2,1")]
    topology: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
    #[arg(long, default_value_t = 20_000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.4)]
    target_error: f64,
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct PerceptronArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    /// Shuffle the presentation order every epoch with this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Ascending,
    Shuffled,
}

#[derive(Subcommand)]
enum HopfieldCommand {
    /// Store patterns (0/1 or +/- strings) and print the network document.
    Store {
        #[arg(long = "pattern", required = true)]
        patterns: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recall from a probe with a stored network.
    Recall {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        probe: String,
        #[arg(long, value_enum, default_value = "ascending")]
        order: OrderArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Store random patterns, corrupt each one and try to recall it.
    Demo {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        patterns: usize,
        /// Bits flipped in every probe.
        #[arg(long, default_value_t = 3)]
        flip: usize,
        #[arg(long, value_enum, default_value = "ascending")]
        order: OrderArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<std::io::Error>()
        .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn read_formula(text: &str) -> Result<Formula> {
    let owned;
    let text = if text == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        owned = buf;
        owned.trim_end()
    } else {
        text
    };
    formula::parse(text).map_err(|e| {
        let caret = format!("{}^", " ".repeat(text[..e.offset].chars().count()));
        anyhow::anyhow!("{e}\n  {text}\n  {caret}")
    })
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Parse { formula, format } => {
            let f = read_formula(&formula)?;
            match format {
                Format::Doc => out!("{}", json(&f)),
                _ => outln!("{f}"),
            }
            Ok(0)
        }
        Command::Table { formula, format } => {
            let f = read_formula(&formula)?;
            let table = formula::truth_table(&f)?;
            match format {
                Format::Text => out!("{}", table.render(&f.to_string())),
                Format::Csv => out!("{}", table.to_csv()),
                Format::Doc => out!("{}", json(&table)),
            }
            Ok(0)
        }
        Command::Eval {
            formula,
            assignments,
            network,
            format,
        } => cmd_eval(&formula, &assignments, network.as_deref(), format),
        Command::Compile {
            formula,
            probe,
            out,
        } => {
            let f = read_formula(&formula)?;
            let net = if probe {
                compiler::compile_incompatibility_probe(&f)?
            } else {
                compiler::compile(&f)?
            };
            let doc = format!("{}\n", net.to_document());
            match out {
                Some(dir) => write_out(&dir, "network.json", &doc)?,
                None => out!("{doc}"),
            }
            Ok(0)
        }
        Command::Verify {
            formula,
            raw,
            format,
            out,
        } => cmd_verify(&formula, raw, format, out.as_deref()),
        Command::Compat {
            claim,
            possibility,
            format,
        } => {
            let claim = read_formula(&claim)?;
            let possibility = read_formula(&possibility)?;
            let verdict = formula::compatible(&claim, &possibility)?;
            match format {
                Format::Doc => out!(
                    "{}",
                    json(&serde_json::json!({
                        "claim": claim.to_string(),
                        "possibility": possibility.to_string(),
                        "verdict": verdict,
                    }))
                ),
                _ => outln!("{verdict}"),
            }
            Ok(match verdict {
                Verdict::Compatible => 0,
                Verdict::Incompatible => EXIT_INCOMPATIBLE,
            })
        }
        Command::Train(args) => cmd_train(args),
        Command::Perceptron(args) => cmd_perceptron(args),
        Command::Hopfield(cmd) => cmd_hopfield(cmd),
    }
}

fn cmd_eval(
    formula: &str,
    assignments: &[String],
    network: Option<&Path>,
    format: Format,
) -> Result<u8> {
    let f = read_formula(formula)?;
    let mut a = Assignment::new();
    for item in assignments {
        let (name, value) = item
            .split_once('=')
            .with_context(|| format!("expected NAME=0|1, got `{item}`"))?;
        let value = match value {
            "1" | "t" | "true" => true,
            "0" | "f" | "false" => false,
            other => bail!("`{other}` is not a truth value"),
        };
        a.set(name, value);
    }
    let value = f.eval(&a)?;
    let net = match network {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Network::from_document(&text)?
        }
        None => compiler::compile(&f)?,
    };
    let input: Vec<f64> = net
        .inputs()
        .iter()
        .map(|v| {
            a.get(v)
                .map(f64::from)
                .with_context(|| format!("network input `{v}` is not assigned"))
        })
        .collect::<Result<_>>()?;
    let output = net.forward(&input)?.output()[0];
    match format {
        Format::Doc => out!(
            "{}",
            json(&serde_json::json!({
                "formula": f.to_string(),
                "assignment": a,
                "value": u8::from(value),
                "network_output": output,
                "network_value": u8::from(output >= DEFAULT_CUT),
            }))
        ),
        _ => outln!("{}", u8::from(value)),
    }
    Ok(0)
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Activation table: inputs, binarized hidden activations per layer, output bit
/// and the raw output values under both propagation modes.
fn activation_table(report: &VerificationReport) -> String {
    let mut headers: Vec<String> = report.vars.clone();
    if let Some(row) = report.rows.first() {
        for (l, layer) in row.hidden.iter().enumerate() {
            // Inputs are layer 1, so the first hidden layer is [2].
            headers.extend((1..=layer.len()).map(|i| format!("a{i}[{}]", l + 2)));
        }
    }
    headers.extend([
        "h(x)".to_owned(),
        "raw".to_owned(),
        "raw end-to-end".to_owned(),
    ]);
    let mut lines = vec![headers];
    for row in &report.rows {
        let mut cells: Vec<String> = row.inputs.iter().map(|&b| bit(b).to_owned()).collect();
        for layer in &row.hidden {
            cells.extend(
                binarize(layer, DEFAULT_CUT)
                    .iter()
                    .map(|&b| bit(b).to_owned()),
            );
        }
        cells.push(bit(row.output >= DEFAULT_CUT).to_owned());
        cells.push(format!("{:.6}", row.output));
        cells.push(format!("{:.6}", row.output_end_to_end));
        lines.push(cells);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn cmd_verify(formula: &str, raw: bool, format: Format, out: Option<&Path>) -> Result<u8> {
    let f = read_formula(formula)?;
    let report = compiler::verify(&f)?;
    let text = match format {
        Format::Doc => json(&report),
        Format::Csv => {
            let mut s = report.vars.join(",");
            s.push_str(",expected,output,output_end_to_end,agrees\n");
            for r in &report.rows {
                let ins: Vec<&str> = r.inputs.iter().map(|&b| bit(b)).collect();
                s.push_str(&format!(
                    "{},{},{:e},{:e},{}\n",
                    ins.join(","),
                    bit(r.expected),
                    r.output,
                    r.output_end_to_end,
                    bit(r.agrees)
                ));
            }
            s
        }
        Format::Text => {
            let mut s = format!(
                "formula: {}\nresult: {}\nrows agreeing: {}/{}\nmax distance (gate-level): {:.6e}\nmax distance (end-to-end): {:.6e}\n",
                report.formula,
                if report.passed { "pass" } else { "FAIL" },
                report.agreeing_rows,
                report.rows.len(),
                report.max_distance,
                report.max_distance_end_to_end,
            );
            if raw {
                s.push('\n');
                s.push_str(&activation_table(&report));
            }
            s
        }
    };
    out!("{text}");
    if let Some(dir) = out {
        write_out(dir, "verification.json", &json(&report))?;
    }
    Ok(if report.passed { 0 } else { EXIT_USAGE })
}

fn load_dataset(data: &DataArgs) -> Result<(Dataset, Vec<String>)> {
    if let Some(text) = &data.formula {
        let f = read_formula(text)?;
        let table = formula::truth_table(&f)?;
        return Ok((Dataset::from_truth_table(&table), table.vars().to_vec()));
    }
    let path = data.truth_table.as_ref().expect("clap enforces one source");
    table_csv::read(path)
}

fn cmd_train(args: TrainArgs) -> Result<u8> {
    let (data, names) = load_dataset(&args.data)?;
    let spec = TrainSpec {
        topology: args.topology,
        learning_rate: args.rate,
        max_epochs: args.epochs,
        target_max_error: args.target_error,
        seed: args.seed,
        init_scale: args.init_scale,
    };
    if spec.topology.first() != Some(&data.input_width()) {
        bail!(
            "topology starts with {:?} but the dataset has {} inputs",
            spec.topology.first(),
            data.input_width()
        );
    }
    let (report, diverged) = match training::train_backprop_named(&spec, &data, names) {
        Ok(r) => (r, false),
        Err(TrainError::Diverged { report }) => (*report, true),
        Err(e) => return Err(e.into()),
    };
    if let Some(dir) = &args.out {
        write_out(dir, "report.json", &json(&report))?;
        write_out(dir, "loss.csv", &report.loss_csv())?;
        write_out(
            dir,
            "network.json",
            &format!("{}\n", report.network.to_document()),
        )?;
    }
    match args.format {
        Format::Doc => out!("{}", json(&report)),
        Format::Csv => out!("{}", report.loss_csv()),
        Format::Text => {
            outln!("topology: {:?}", report.spec.topology);
            outln!("rng: {} seed {}", report.rng, report.spec.seed);
            outln!("epochs: {}", report.epochs_run);
            outln!("final loss: {:.6e}", report.final_loss);
            outln!("max error: {:.6}", report.max_error);
            outln!(
                "converged: {}",
                if diverged {
                    "no (diverged)"
                } else if report.converged {
                    "yes"
                } else {
                    "no"
                }
            );
        }
    }
    Ok(if report.converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn cmd_perceptron(args: PerceptronArgs) -> Result<u8> {
    let (data, _) = load_dataset(&args.data)?;
    let order = args
        .seed
        .map_or(ExampleOrder::Fixed, |seed| ExampleOrder::Shuffled { seed });
    let report = training::train_perceptron_ordered(&data, args.rate, args.epochs, order)?;
    if let Some(dir) = &args.out {
        write_out(dir, "perceptron.json", &json(&report))?;
    }
    match args.format {
        Format::Doc => out!("{}", json(&report)),
        _ => {
            outln!("weights: {:?}", report.weights);
            outln!("bias: {}", report.bias);
            outln!("epochs: {}", report.epochs_run);
            outln!(
                "misclassified: {}/{}",
                report.misclassifications,
                data.len()
            );
            outln!("converged: {}", if report.converged { "yes" } else { "no" });
        }
    }
    Ok(if report.converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn order(arg: OrderArg, seed: u64) -> UpdateOrder {
    match arg {
        OrderArg::Ascending => UpdateOrder::Ascending,
        OrderArg::Shuffled => UpdateOrder::Shuffled { seed },
    }
}

fn parse_pattern(s: &str) -> Result<Pattern> {
    s.parse::<Pattern>()
        .with_context(|| format!("pattern `{s}`"))
}

fn cmd_hopfield(cmd: HopfieldCommand) -> Result<u8> {
    match cmd {
        HopfieldCommand::Store { patterns, out } => {
            let patterns = patterns
                .iter()
                .map(|p| parse_pattern(p))
                .collect::<Result<Vec<_>>>()?;
            let net = HopfieldNet::store(&patterns, patterns[0].len())?;
            let doc = json(&net);
            match out {
                Some(dir) => write_out(&dir, "hopfield.json", &doc)?,
                None => out!("{doc}"),
            }
            Ok(0)
        }
        HopfieldCommand::Recall {
            net,
            probe,
            order: order_arg,
            seed,
            max_sweeps,
            out,
            format,
        } => {
            let text =
                fs::read_to_string(&net).with_context(|| format!("reading {}", net.display()))?;
            let net: HopfieldNet =
                serde_json::from_str(&text).context("malformed Hopfield document")?;
            let net = HopfieldNet::from_weights(net.weights().to_vec())?;
            let probe = parse_pattern(&probe)?;
            let r = net.recall(&probe, order(order_arg, seed), max_sweeps)?;
            if let Some(dir) = &out {
                write_out(dir, "energy.csv", &r.energy_csv())?;
            }
            match format {
                Format::Csv => out!("{}", r.energy_csv()),
                Format::Doc => out!("{}", json(&r)),
                Format::Text => {
                    outln!("probe:  {probe}");
                    outln!("state:  {}", r.state);
                    outln!("sweeps: {}", r.sweeps);
                    outln!("flips:  {}", r.flips);
                    let last = r
                        .energy_history()
                        .last()
                        .copied()
                        .unwrap_or(r.initial_energy);
                    // `+ 0.0` turns a negative zero into a positive one.
                    outln!("energy: {:.6} -> {:.6}", r.initial_energy + 0.0, last + 0.0);
                    outln!("stable: {}", if r.stable { "yes" } else { "no" });
                }
            }
            Ok(if r.stable { 0 } else { EXIT_NOT_CONVERGED })
        }
        HopfieldCommand::Demo {
            n,
            patterns,
            flip,
            order: order_arg,
            seed,
            max_sweeps,
            out,
            format,
        } => demo(
            n,
            patterns,
            flip,
            order(order_arg, seed),
            seed,
            max_sweeps,
            out.as_deref(),
            format,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn demo(
    n: usize,
    count: usize,
    flip: usize,
    order: UpdateOrder,
    seed: u64,
    max_sweeps: usize,
    out: Option<&Path>,
    format: Format,
) -> Result<u8> {
    if n == 0 || count == 0 {
        bail!("need at least one neuron and one pattern");
    }
    if flip > n {
        bail!("cannot flip {flip} of {n} bits");
    }
    let mut rng = training::seeded_rng(seed);
    let stored: Vec<Pattern> = (0..count).map(|_| Pattern::random(n, &mut rng)).collect();
    let net = HopfieldNet::store(&stored, n)?;
    let mut csv = String::from("pattern,step,sweep,neuron,flipped,energy\n");
    let mut summary = String::new();
    let mut recalled = 0;
    let mut all_stable = true;
    let mut monotone = true;
    for (k, p) in stored.iter().enumerate() {
        let (probe, flipped) = p.corrupted(flip, &mut rng);
        let r = net.recall(&probe, order, max_sweeps)?;
        let ok = r.state == *p;
        recalled += usize::from(ok);
        all_stable &= r.stable;
        monotone &= r.energy_history().windows(2).all(|w| w[1] <= w[0]);
        for line in r.energy_csv().lines().skip(1) {
            csv.push_str(&format!("{k},{line}\n"));
        }
        summary.push_str(&format!(
            "pattern {k}: {p}  flipped {flipped:?}  -> {}  sweeps {}  {}\n",
            r.state,
            r.sweeps,
            if ok { "recalled" } else { "NOT recalled" }
        ));
    }
    summary.push_str(&format!(
        "recalled {recalled}/{count}; energy monotone: {}\n",
        if monotone { "yes" } else { "no" }
    ));
    if let Some(dir) = out {
        write_out(dir, "energy.csv", &csv)?;
        write_out(dir, "hopfield.json", &json(&net))?;
    }
    match format {
        Format::Csv => out!("{csv}"),
        Format::Doc => out!(
            "{}",
            json(&serde_json::json!({
                "n": n,
                "patterns": stored.iter().map(Pattern::to_bitstring).collect::<Vec<_>>(),
                "flip": flip,
                "seed": seed,
                "recalled": recalled,
                "energy_monotone": monotone,
            }))
        ),
        Format::Text => out!("{summary}"),
    }
    Ok(if all_stable { 0 } else { EXIT_NOT_CONVERGED })
}
