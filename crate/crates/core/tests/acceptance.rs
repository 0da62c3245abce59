//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};

use num_complex::Complex64;
use num_rational::Rational64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use quart_qkd::analytics::{
    cross_dimension_comparison, iid_bit_flip_control, key_material_bits, mapping_error_analysis,
    per_photon_information, BitEncoding,
};
use quart_qkd::cli::{cmd_analyze, parse_config, OutputFormat, RunSpec, Subcommand};
use quart_qkd::eavesdrop::{
    eve_empirical_stats, predicted_eve_accuracy, predicted_eve_info, predicted_qter, EveStrategy,
};
use quart_qkd::exact::{transition_table, QSqrt2};
use quart_qkd::photonic::{
    alice_prepare_photonic, build_multiport, photonic_equivalence_check,
    photonic_outcome_distribution, routing_matrix, PhaseSettings, PhotonicBasis,
};
use quart_qkd::protocol::{run_session, run_session_sequential, sift, ProtocolConfig, Transcript};
use quart_qkd::qudit::{
    exact_outcome_distribution, overlap, BasisCatalog, BasisLabel, Dimension, Letter, StateVector,
    BORN_TOL,
};
use quart_qkd::rng::{aux_stream, CONTROL_STREAM};

const ROUNDS: usize = 200_000;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn all(parts: Vec<Outcome>) -> Outcome {
    Outcome {
        ok: parts.iter().all(|p| p.ok),
        detail: parts
            .into_iter()
            .map(|p| p.detail)
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Outcome {
    check(
        (got - want).abs() <= tol,
        format!("{name} = {got:.6} (target {want:.6} ± {tol})"),
    )
}

fn session(dim: Dimension, eve: EveStrategy, seed: u64) -> Transcript {
    run_session(&ProtocolConfig::new(dim, ROUNDS, seed).with_eve(eve)).expect("session runs")
}

fn c1() -> Outcome {
    let t = session(Dimension::Four, EveStrategy::intercept_resend(), 101);
    let q = sift(&t).error_rate();
    let oracle = predicted_qter(&EveStrategy::intercept_resend(), Dimension::Four).unwrap();
    all(vec![
        within("sifted QTER", q, 0.375, 0.005),
        check(oracle == Rational64::new(3, 8), format!("oracle {oracle}")),
    ])
}

fn c2() -> Outcome {
    let t = session(Dimension::Two, EveStrategy::intercept_resend(), 102);
    let q = sift(&t).error_rate();
    let oracle = predicted_qter(&EveStrategy::intercept_resend(), Dimension::Two).unwrap();
    all(vec![
        within("sifted QBER", q, 0.25, 0.005),
        check(oracle == Rational64::new(1, 4), format!("oracle {oracle}")),
    ])
}

fn c3() -> Outcome {
    let mut parts = Vec::new();
    for (dim, want, seed) in [(Dimension::Four, 1.0, 103), (Dimension::Two, 0.5, 104)] {
        let s = EveStrategy::intercept_resend();
        let closed = predicted_eve_info(&s, dim).unwrap();
        parts.push(check(
            closed == want,
            format!("d={dim} closed form {closed}"),
        ));
        let t = session(dim, s, seed);
        let keys = sift(&t);
        let stats = eve_empirical_stats(&t, &keys).unwrap();
        parts.push(within(
            &format!("d={dim} plug-in MI ({} sifted)", keys.len()),
            stats.eve_info_estimate,
            want,
            0.02,
        ));
    }
    all(parts)
}

fn c4() -> Outcome {
    let s = EveStrategy::intermediate();
    let t = session(Dimension::Four, s.clone(), 105);
    let mut counts = [[0usize; 4]; 4];
    for r in t.rounds() {
        let e = r.eve.expect("every round intercepted");
        counts[r.alice_letter.index()][e.letter_observed.index()] += 1;
    }
    let mut worst_hit: f64 = 0.0;
    let mut worst_miss: f64 = 0.0;
    for (a, row) in counts.iter().enumerate() {
        let n: usize = row.iter().sum();
        for (b, &c) in row.iter().enumerate() {
            let f = c as f64 / n as f64;
            if a == b {
                worst_hit = worst_hit.max((f - 0.75).abs());
            } else {
                worst_miss = worst_miss.max((f - 1.0 / 12.0).abs());
            }
        }
    }
    let keys = sift(&t);
    let stats = eve_empirical_stats(&t, &keys).unwrap();
    let acc = predicted_eve_accuracy(&s, Dimension::Four).unwrap();
    all(vec![
        check(
            worst_hit <= 0.01,
            format!("max |f(correct) - 3/4| = {worst_hit:.4}"),
        ),
        check(
            worst_miss <= 0.01,
            format!("max |f(wrong) - 1/12| = {worst_miss:.4}"),
        ),
        within(
            "closed-form info",
            predicted_eve_info(&s, Dimension::Four).unwrap(),
            0.7925,
            0.0005,
        ),
        within("Eve accuracy", stats.eve_letter_accuracy, 0.75, 0.01),
        check(
            acc == Some(QSqrt2::frac(3, 4)),
            format!(
                "oracle accuracy {}",
                acc.map(|a| a.to_string()).unwrap_or_default()
            ),
        ),
    ])
}

fn c5() -> Outcome {
    let s = EveStrategy::intermediate();
    let q = sift(&session(Dimension::Four, s.clone(), 106)).error_rate();
    let oracle = predicted_qter(&s, Dimension::Four).unwrap();
    let spec = RunSpec {
        subcommand: Subcommand::Analyze,
        settings: parse_config("seed = 1").unwrap(),
        format: OutputFormat::Text,
        out: None,
        transcript: None,
    };
    let text = cmd_analyze(&spec).unwrap().to_text();
    let documented = text.contains("oracle-differs-from-published")
        && text.contains("5/12")
        && text.contains("3/8");
    all(vec![
        within("Bob correct", 1.0 - q, 7.0 / 12.0, 0.01),
        within("QTER", q, 5.0 / 12.0, 0.01),
        check(
            oracle == Rational64::new(5, 12),
            format!(
                "oracle QTER {oracle}, Bob correct {}",
                Rational64::new(1, 1) - oracle
            ),
        ),
        check(
            documented,
            format!("analyze documents discrepancy: {documented}"),
        ),
    ])
}

fn c6() -> Outcome {
    let s = EveStrategy::intermediate();
    let q = sift(&session(Dimension::Two, s.clone(), 107)).error_rate();
    let info = predicted_eve_info(&s, Dimension::Two).unwrap();
    let rows = cross_dimension_comparison().unwrap();
    let im = rows.iter().find(|r| r.kind == s.kind).unwrap();
    let quart = format!("{:.3}", im.quart_string_info_per_n);
    let qubit = format!("{:.3}", im.qubit_info_per_symbol);
    let pair = format!("{:.3}", im.qubit_string_info_per_n);
    all(vec![
        within("QBER", q, 0.25, 0.005),
        within("info", info, 0.399, 0.001),
        check(
            quart == "0.792" && qubit == "0.399" && pair == "0.798",
            format!("{quart}n vs 2n×{qubit} = {pair}n"),
        ),
    ])
}

fn c7() -> Outcome {
    let t = session(Dimension::Four, EveStrategy::none(), 108);
    let n = sift(&t).len();
    all(vec![
        within("sifted fraction", t.sifted_fraction(), 0.5, 0.005),
        check(
            key_material_bits(n, Dimension::Four) == 2 * n
                && per_photon_information(Dimension::Four) == 2.0,
            format!(
                "{n} sifted quarts -> {} bits",
                key_material_bits(n, Dimension::Four)
            ),
        ),
    ])
}

fn c8() -> Outcome {
    let parse = |s: &str| {
        s.split_whitespace()
            .map(|x| x.parse::<Letter>().unwrap())
            .collect::<Vec<_>>()
    };
    let alice = parse("α δ β α γ δ δ β γ α β δ");
    let eve = parse("α δ γ α γ β δ β γ α α δ");
    let r =
        mapping_error_analysis(&alice, &eve, &BitEncoding::default_for(Dimension::Four)).unwrap();
    check(
        r.symbols == 12 && r.symbol_errors == 3 && r.bit_errors == 4,
        format!(
            "symbol errors {}/{}, bit errors {}/{}",
            r.symbol_errors,
            r.symbols,
            r.bit_errors,
            2 * r.symbols
        ),
    )
}

fn c9() -> Outcome {
    let t = session(Dimension::Four, EveStrategy::intermediate(), 109);
    let n = 100_000;
    let (alice, eve): (Vec<Letter>, Vec<Letter>) = t
        .rounds()
        .iter()
        .filter_map(|r| r.eve.map(|e| (r.alice_letter, e.letter_observed)))
        .take(n)
        .unzip();
    let enc = BitEncoding::default_for(Dimension::Four);
    let attack = mapping_error_analysis(&alice, &eve, &enc).unwrap();
    let (gap, sigma) = attack.dependence_gap().unwrap();
    let control_letters = iid_bit_flip_control(
        &alice,
        attack.bit_error_rate,
        &enc,
        &mut aux_stream(109, CONTROL_STREAM),
    )
    .unwrap();
    let control = mapping_error_analysis(&alice, &control_letters, &enc).unwrap();
    let (cgap, csigma) = control.dependence_gap().unwrap();
    all(vec![
        check(alice.len() == n, format!("{} symbols", alice.len())),
        check(
            gap > 5.0 * sigma,
            format!("attack gap {gap:.4} = {:.1}σ", gap / sigma),
        ),
        check(
            cgap.abs() <= 3.0 * csigma,
            format!(
                "i.i.d. control at BER {:.4}: gap {cgap:.4} = {:.2}σ",
                control.bit_error_rate,
                cgap / csigma
            ),
        ),
    ])
}

fn c10() -> Outcome {
    let coupler = build_multiport();
    let bob = PhaseSettings::bob_default();
    let r = routing_matrix(&coupler, &PhaseSettings::alice_table(), &bob).unwrap();
    let mut uniform_dev: f64 = 0.0;
    for l in Dimension::Four.letters() {
        let s = alice_prepare_photonic(&coupler, PhotonicBasis::Time, l, None).unwrap();
        for p in photonic_outcome_distribution(&coupler, &s, PhotonicBasis::Energy, &bob) {
            uniform_dev = uniform_dev.max((p - 0.25).abs());
        }
    }
    let eq = photonic_equivalence_check(0, 0).unwrap();
    all(vec![
        check(
            r.is_permutation(1e-10),
            format!("routing max off-diagonal {:.1e}", r.max_off_diagonal()),
        ),
        check(
            uniform_dev <= 1e-10,
            format!("time states in energy analyzer: max |p - 1/4| {uniform_dev:.1e}"),
        ),
        check(
            eq.entries.len() == 16 && eq.max_exact_deviation <= 1e-10,
            format!(
                "{} state/analyzer pairs, max deviation {:.1e}",
                eq.entries.len(),
                eq.max_exact_deviation
            ),
        ),
    ])
}

fn random_state(dim: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("non-zero", |v| {
            v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3
        })
        .prop_map(|v| {
            StateVector::normalized(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
                .unwrap()
        })
}

fn c11() -> Outcome {
    let mut parts = Vec::new();
    let mut ortho: f64 = 0.0;
    for dim in [Dimension::Two, Dimension::Four] {
        let cat = BasisCatalog::new(dim);
        for l in [BasisLabel::Psi, BasisLabel::Phi, BasisLabel::Theta] {
            ortho = ortho.max(cat.get(l).orthonormality_defect());
        }
    }
    parts.push(check(
        ortho <= 1e-10,
        format!("orthonormality defect {ortho:.1e}"),
    ));

    let cat = BasisCatalog::new(Dimension::Four);
    let mut mub: f64 = 0.0;
    for a in cat.get(BasisLabel::Psi).vectors() {
        for b in cat.get(BasisLabel::Phi).vectors() {
            mub = mub.max((overlap(a, b).unwrap().norm() - 0.5).abs());
        }
    }
    parts.push(check(
        mub <= 1e-10,
        format!("max ||<psi|phi>| - 1/2| {mub:.1e}"),
    ));

    let mut theta_ok = true;
    for from in [BasisLabel::Psi, BasisLabel::Phi] {
        let table = transition_table(from, BasisLabel::Theta, Dimension::Four);
        for (i, row) in table.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                let want = if i == j {
                    QSqrt2::frac(3, 4)
                } else {
                    QSqrt2::frac(1, 12)
                };
                let float = overlap(
                    &cat.get(from).vectors()[i],
                    &cat.get(BasisLabel::Theta).vectors()[j],
                )
                .unwrap()
                .norm_sqr();
                theta_ok &= *p == want && (float - want.to_f64()).abs() <= 1e-10;
            }
        }
    }
    parts.push(check(
        theta_ok,
        "theta overlaps 3/4 and 1/12 (exact and float)".into(),
    ));

    let mut runner = TestRunner::new(Config {
        cases: 512,
        failure_persistence: None,
        ..Config::default()
    });
    let labels = prop::sample::select(vec![BasisLabel::Psi, BasisLabel::Phi, BasisLabel::Theta]);
    let born = runner.run(&(random_state(4), labels), |(s, l)| {
        let p = exact_outcome_distribution(&s, cat.get(l)).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= BORN_TOL);
        prop_assert!(p.iter().all(|x| *x >= -BORN_TOL));
        Ok(())
    });
    parts.push(check(
        born.is_ok(),
        format!("Born normalization over 512 random states: {born:?}"),
    ));

    let cfg = ProtocolConfig::new(Dimension::Four, 20_000, 9).with_eve(EveStrategy::intermediate());
    let a = run_session(&cfg).unwrap().to_lines();
    let b = run_session(&cfg).unwrap().to_lines();
    let c = run_session_sequential(&cfg).unwrap().to_lines();
    parts.push(check(
        a == b && a == c,
        "transcripts identical across reruns and execution modes".into(),
    ));

    let cli = || {
        Command::new(env!("CARGO_BIN_EXE_quart-qkd"))
            .args([
                "run",
                "--seed",
                "9",
                "--set",
                "rounds=20000",
                "--set",
                "eve=intermediate",
                "--format",
                "csv",
            ])
            .output()
            .expect("binary runs")
    };
    let (x, y) = (cli(), cli());
    parts.push(check(
        x.status.success() && !x.stdout.is_empty() && x.stdout == y.stdout,
        format!("CLI reruns byte-identical ({} bytes)", x.stdout.len()),
    ));
    all(parts)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("intercept/resend QTER d=4", c1),
        ("intercept/resend QBER d=2", c2),
        ("Eve information, intercept/resend", c3),
        ("intermediate basis d=4, Eve statistics", c4),
        ("intermediate basis d=4, Bob statistics", c5),
        ("intermediate basis d=2 and cross-dimension table", c6),
        ("sifting and key material", c7),
        ("worked mapping example", c8),
        ("block-error dependence", c9),
        ("photonic model", c10),
        ("property suites and determinism", c11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += usize::from(!o.ok);
        println!(
            "{} criterion {:>2} ({name}): {}",
            if o.ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
