use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use triquad::iwasawa::{pi_layer, predict_structure, RankClaim};
use triquad::quadratic::{class_group_of, fundamental_unit};
use triquad::report::{render_markdown, render_survey_markdown, run_verification, survey_pairs, PairReport, SurveyTable, Verification};
use triquad::splitting::{field_for, layer_splitting, split_prime, FieldSpec, LayerVariant};
use triquad::units::fsu_of;
use triquad::verdict::Verdict;

#[derive(Parser)]
#[command(name = "triquad", version, about = "Units, 2-class numbers and Iwasawa modules of Q(sqrt 2, sqrt p, sqrt q)")]
struct Cli {
    /// Include a generation timestamp in reports.
    #[arg(long, global = true, value_enum, default_value_t = Toggle::On)]
    timestamp: Toggle,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CondSel {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

#[derive(Args)]
struct Format {
    #[arg(long, conflicts_with = "markdown")]
    json: bool,
    #[arg(long)]
    markdown: bool,
    /// Write the report to a file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify every claim for one pair.
    Verify {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[command(flatten)]
        format: Format,
    },
    /// Verify all qualifying pairs with p, q <= bound.
    Survey {
        #[arg(long)]
        bound: u64,
        #[arg(long, value_enum, default_value_t = CondSel::Both)]
        cond: CondSel,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Also print the full per-pair reports (JSON only).
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        format: Format,
    },
    /// Fundamental system of units of a multiquadratic field.
    Fsu {
        #[arg(long, value_delimiter = ',', num_args = 1..=3, allow_negative_numbers = true)]
        radicands: Vec<i64>,
        #[arg(long)]
        json: bool,
    },
    /// Class group of Q(sqrt d) from binary quadratic forms.
    Classnum {
        #[arg(long, allow_negative_numbers = true)]
        d: i64,
        #[arg(long)]
        json: bool,
    },
    /// Splitting of p in Q(zeta_{2^{N+2}}), or in Q(sqrt p, sqrt q, zeta_{2^{N+2}}) with --q.
    Split {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        q: Option<u64>,
        /// Use the maximal real subfield.
        #[arg(long)]
        plus: bool,
        #[arg(long)]
        json: bool,
    },
    /// Layers of the cyclotomic Z_2-extension of Q(sqrt p, sqrt q, i).
    Tower {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        levels: u32,
        #[arg(long)]
        json: bool,
    },
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Style { color: !no_color && std::io::stdout().is_terminal() }
    }

    fn verdict(&self, v: Verdict) -> String {
        let code = match v {
            Verdict::Verified => "32",
            Verdict::Consistent => "36",
            Verdict::Assumed => "33",
            Verdict::Failed => "31",
        };
        if self.color {
            format!("\x1b[{code}m{:<10}\x1b[0m", v.as_str())
        } else {
            format!("{:<10}", v.as_str())
        }
    }
}

fn now() -> Option<u64> {
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing to stdout")?;
            if !text.ends_with('\n') {
                out.write_all(b"\n").context("writing to stdout")?;
            }
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).context("serializing report")
}

fn text_report(r: &PairReport, style: &Style) -> String {
    let mut s = format!("(p, q) = ({}, {}), condition ({})\n", r.pair.0, r.pair.1, r.condition);
    s += &format!("FSU: {}\nq(K) = {}, h_2(K) = {}\n", r.fsu.generators.join(", "), r.fsu.q_index, r.fsu.h2);
    s += &format!(
        "Iwasawa: structure {}, lambda {}, no finite part: {}\n\n",
        r.iwasawa.structure,
        r.iwasawa.lambda.map_or("?".into(), |l| l.to_string()),
        r.iwasawa.no_finite_part
    );
    for c in &r.verdicts {
        s += &format!("{} {}", style.verdict(c.verdict), c.statement);
        if !c.detail.is_empty() {
            s += &format!("  [{}]", c.detail);
        }
        s.push('\n');
    }
    s
}

fn rank_text(c: &RankClaim) -> String {
    match c {
        RankClaim::Exact(v) => v.to_string(),
        RankClaim::AtMost(v) => format!("<= {v}"),
        RankClaim::Unknown => "?".into(),
    }
}

/// Returns whether every claim passed.
fn run(cli: Cli) -> Result<bool> {
    let style = Style::detect();
    let stamp = if cli.timestamp == Toggle::On { now() } else { None };
    match cli.command {
        Command::Verify { p, q, format } => {
            let v = run_verification(p, q)?;
            let ok = v.passed();
            let text = match (&v, format.json, format.markdown) {
                (Verification::Report(r), _, _) => {
                    let mut r = (**r).clone();
                    r.timestamp = stamp;
                    if format.json {
                        to_json(&r)?
                    } else if format.markdown {
                        render_markdown(&r)
                    } else {
                        text_report(&r, &style)
                    }
                }
                (Verification::OutOfFamily(o), true, _) => to_json(o)?,
                (Verification::OutOfFamily(o), false, _) => format!("({}, {}) is out of family: {}", o.pair.0, o.pair.1, o.reason),
            };
            emit(&format.output, &text)?;
            Ok(ok)
        }
        Command::Survey { bound, cond, jobs, full, format } => {
            if bound < 10 {
                bail!("survey bound must be at least 10");
            }
            let (c1, c2) = match cond {
                CondSel::One => (true, false),
                CondSel::Two => (false, true),
                CondSel::Both => (true, true),
            };
            let pairs = survey_pairs(bound, c1, c2);
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                builder = builder.num_threads(j.max(1));
            }
            let pool = builder.build().context("starting worker pool")?;
            let results: Vec<Result<PairReport>> = pool.install(|| {
                pairs
                    .par_iter()
                    .map(|&(p, q)| match run_verification(p, q)? {
                        Verification::Report(r) => Ok(*r),
                        Verification::OutOfFamily(o) => bail!("({}, {}) unexpectedly out of family", o.pair.0, o.pair.1),
                    })
                    .collect()
            });
            let reports: Vec<PairReport> = results.into_iter().collect::<Result<_>>()?;
            let conditions = [(c1, 1u8), (c2, 2u8)].iter().filter(|(on, _)| *on).map(|&(_, c)| c).collect();
            let mut table = SurveyTable::new(bound, conditions, &reports);
            table.timestamp = stamp;
            let text = if format.json {
                if full {
                    #[derive(Serialize)]
                    struct Full<'a> {
                        #[serde(flatten)]
                        table: &'a SurveyTable,
                        reports: &'a [PairReport],
                    }
                    to_json(&Full { table: &table, reports: &reports })?
                } else {
                    to_json(&table)?
                }
            } else {
                render_survey_markdown(&table)
            };
            emit(&format.output, &text)?;
            Ok(table.failed_pairs == 0)
        }
        Command::Fsu { radicands, json } => {
            let f = fsu_of(&radicands)?.with_class_number()?;
            if json {
                emit(&None, &to_json(&f)?)?;
            } else {
                let mut s = format!("Q({})\n", radicands.iter().map(|d| format!("sqrt {d}")).collect::<Vec<_>>().join(", "));
                for g in f.labels() {
                    s += &format!("  {g}\n");
                }
                s += &format!("q = {}, h_2 = {}", f.q_index, f.h2.as_ref().map_or("?".into(), |h| h.to_string()));
                emit(&None, &s)?;
            }
            Ok(true)
        }
        Command::Classnum { d, json } => {
            let g = class_group_of(d)?;
            let unit = if d > 1 { Some(fundamental_unit(triquad::arith::squarefree_part(d))?) } else { None };
            if json {
                #[derive(Serialize)]
                struct Out {
                    d: i64,
                    class_group: triquad::quadratic::FormClassGroup,
                    unit: Option<triquad::quadratic::QuadUnit>,
                }
                emit(&None, &to_json(&Out { d, class_group: g, unit })?)?;
            } else {
                let mut s = format!("Q(sqrt {d}): discriminant {}, h = {}, h_2 = {}", g.discriminant, g.h, g.h2);
                if d > 1 {
                    s += &format!(", narrow h = {}", g.h_narrow);
                }
                if let Some(u) = unit {
                    s += &format!("\nfundamental unit {} (norm {})", u.display(), u.norm);
                }
                emit(&None, &s)?;
            }
            Ok(true)
        }
        Command::Split { p, level, q, plus, json } => {
            if level == 0 {
                bail!("level must be at least 1");
            }
            let spec = FieldSpec { radicands: q.map_or(vec![], |q| vec![p as i64, q as i64]), level: Some(level), real: plus };
            let field = field_for(&spec)?;
            let data = split_prime(&field, p)?;
            if json {
                #[derive(Serialize)]
                struct Out<'a> {
                    spec: &'a FieldSpec,
                    conductor: u64,
                    degree: u64,
                    splitting: triquad::splitting::SplittingData,
                }
                emit(&None, &to_json(&Out { spec: &spec, conductor: field.conductor, degree: field.degree(), splitting: data })?)?;
            } else {
                emit(&None, &format!("conductor {}, degree {}: e = {}, f = {}, g = {}", field.conductor, field.degree(), data.e, data.f, data.g))?;
            }
            Ok(true)
        }
        Command::Tower { p, q, levels, json } => {
            if levels == 0 {
                bail!("levels must be at least 1");
            }
            let iw = predict_structure(p, q)?;
            #[derive(Serialize)]
            struct Layer {
                n: u32,
                pi: String,
                pi_approx: f64,
                degree_full: u64,
                g_full: u64,
                g_plus: u64,
                rank: RankClaim,
            }
            let mut layers = Vec::new();
            for n in 1..=levels {
                let t = pi_layer(n)?;
                let full = layer_splitting(p, q, n, LayerVariant::Full)?;
                let plus = layer_splitting(p, q, n, LayerVariant::Plus)?;
                let rank = match iw.lambda {
                    Some(l) => triquad::iwasawa::rank_from_lambda(l as u64, n),
                    None => RankClaim::Unknown,
                };
                layers.push(Layer { n, pi: t.expression, pi_approx: t.approx, degree_full: full.degree, g_full: full.data.g, g_plus: plus.data.g, rank });
            }
            let ok = !iw.claims.iter().any(|c| c.verdict == Verdict::Failed);
            if json {
                #[derive(Serialize)]
                struct Out<'a> {
                    pair: (u64, u64),
                    lambda: Option<i64>,
                    structure: &'a str,
                    layers: &'a [Layer],
                }
                emit(&None, &to_json(&Out { pair: (p, q), lambda: iw.lambda, structure: &iw.structure, layers: &layers })?)?;
            } else {
                let mut s = format!("F = Q(sqrt {p}, sqrt {q}, i): structure {}\n", iw.structure);
                s += "n  [F_n:Q]  g(p,F_n)  g(p,F_n+)  rank_2(A_n)  pi_n\n";
                for l in &layers {
                    s += &format!("{:<3}{:<9}{:<10}{:<11}{:<13}{} ~ {:.12}\n", l.n, l.degree_full, l.g_full, l.g_plus, rank_text(&l.rank), l.pi, l.pi_approx);
                }
                emit(&None, &s)?;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
