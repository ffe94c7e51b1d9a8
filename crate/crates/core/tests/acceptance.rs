//! Acceptance criteria, one line per criterion. Run with
//! `cargo test -p nlbd-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nlbd_core::equivalence::{affine_factorize, build_equivalent_boxes, DeltaPolynomial};
use nlbd_core::fourier_bound::{
    nonadaptive_value_fourier, parity_bound, parity_bound_with_constant_term, walsh_transform, PmOutputFunction,
};
use nlbd_core::search::{
    adaptive_search_max, cc_threshold, enumerate_nonadaptive_max, enumerate_nonadaptive_max_chsh, or_interval,
    region_scan, reproduce_tables, write_csv, AllcockMapping, ScanGrid, ScanRange, WiringLabel,
};
use nlbd_core::wirings::{
    allcock_value, apply_nonadaptive, apply_nonadaptive_multi, bs_output_box, closed_form_values,
    fit_allcock_combination, or_protocol, parity_protocol, AdaptiveTwoCopyProtocol, AllcockParams,
    NonAdaptiveProtocol,
};
use nlbd_core::xor_multipartite::{simulate_parity, xor_value};
use nlbd_core::{box_from_correlators, correlators_from_box, make_named_box, BipartiteBox, CorrelatorForm, DEFAULT_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_symmetric, random_valid_form, random_xor_box};

/// Criteria whose literal statement is known not to hold.
const KNOWN_FAILURES: [u32; 1] = [3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn symmetric_box(alpha: f64, beta: f64, delta: f64, eps: f64) -> BipartiteBox {
    make_named_box("symmetric", &[alpha, beta, delta, eps]).unwrap().to_box()
}

fn chsh_of(boxes: &[BipartiteBox], proto: &NonAdaptiveProtocol) -> f64 {
    apply_nonadaptive(boxes, proto).unwrap().chsh_value()
}

fn c1_roundtrip() -> Outcome {
    let mut r = rng(1);
    let (mut roundtrip, mut norm) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let form = random_valid_form(&mut r);
        let b = box_from_correlators(&form);
        let back = correlators_from_box(&b).unwrap();
        roundtrip = roundtrip.max(form.max_abs_diff(&back));
        roundtrip = roundtrip.max(b.max_abs_diff(&back.to_box()));
        for row in &b.p {
            norm = norm.max((row.iter().sum::<f64>() - 1.0).abs());
        }
    }
    let pr = BipartiteBox::pr_box();
    let pr_ok = pr.validate(DEFAULT_TOL).is_valid() && pr.chsh_value() == 4.0;
    outcome(
        roundtrip <= 1e-12 && norm <= 1e-15 && pr_ok,
        format!("roundtrip {roundtrip:.1e}, normalization {norm:.1e}, PR valid with V=4: {pr_ok}"),
    )
}

fn c2_parity_lemma() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for m in 1..=4 {
            for _ in 0..100 {
                let b = random_xor_box(&mut r, n);
                let simulated = xor_value(&simulate_parity(&b, m).unwrap());
                let predicted: f64 = (0..b.game.inputs())
                    .map(|x| b.game.sign(x) * b.delta[x].powi(m as i32))
                    .sum();
                worst = worst.max((simulated - predicted).abs());
            }
        }
    }
    outcome(worst <= 1e-9, format!("max |simulated - formula| = {worst:.1e} over 800 boxes"))
}

fn c3_parity_optimal() -> Outcome {
    let mut r = rng(3);
    let (mut above, mut below, mut above_k0, mut total) = (0, 0, 0, 0);
    let mut example = String::new();
    for (n, m) in [(2, 2), (2, 3), (3, 2)] {
        for _ in 0..100 {
            let b = random_xor_box(&mut r, n);
            let best = enumerate_nonadaptive_max(&b.to_multiparty(), &b.game, m, false, 0)
                .unwrap()
                .best_value;
            let bound = parity_bound(&b.game, &b.delta, m).value;
            let bound_k0 = parity_bound_with_constant_term(&b.game, &b.delta, m).value;
            total += 1;
            if best > bound + 1e-9 {
                above += 1;
                if example.is_empty() {
                    example = format!("; e.g. n={n} m={m}: search {best:.6} > bound {bound:.6}");
                }
            }
            if best < bound - 1e-9 {
                below += 1;
            }
            if (best - bound_k0).abs() > 1e-9 {
                above_k0 += 1;
            }
        }
    }
    // input-dependent tables, measured against the bound with k=0
    let mut dep_above = 0;
    for n in [2, 3] {
        for _ in 0..100 {
            let b = random_xor_box(&mut r, n);
            let best = enumerate_nonadaptive_max(&b.to_multiparty(), &b.game, 2, true, 0)
                .unwrap()
                .best_value;
            if best > parity_bound_with_constant_term(&b.game, &b.delta, 2).value + 1e-9 {
                dep_above += 1;
            }
        }
    }
    outcome(
        above == 0 && below == 0,
        format!(
            "{above}/{total} searches exceed the bound, {below} fall short{example}; \
             with the k=0 term the search equals the bound in {}/{total}; \
             input-dependent class (m=2) exceeds the k=0 bound in {dep_above}/200",
            total - above_k0
        ),
    )
}

fn c4_or_beats_parity() -> Outcome {
    let b = make_named_box("correlated", &[0.5, 0.01]).unwrap().to_box();
    let or = chsh_of(&[b, b], &or_protocol());
    let parity = chsh_of(&[b, b], &parity_protocol(2, 2));
    let mut pass = (or - 3.239975).abs() <= 1e-6 && (parity - 2.9999).abs() <= 1e-6 && or > parity;
    let printed = [
        (0.26, -0.04, 0.013),
        (0.30, -0.20, 0.066),
        (0.35, -0.30, 0.133),
        (0.40, -0.20, 0.200),
        (0.45, -0.10, 0.266),
        (0.50, 0.00, 0.333),
    ];
    let mut worst = 0.0f64;
    for (alpha, lo, hi) in printed {
        let grid = ScanGrid {
            alpha: ScanRange::single(alpha),
            beta: None,
            delta: ScanRange::single(1.0),
            eps: ScanRange::new(-1.0, 1.0, 1e-4).unwrap(),
        };
        let rows = region_scan(&grid, &[WiringLabel::Parity, WiringLabel::Or], AllcockMapping::DFromAlpha, 0).unwrap();
        match or_interval(&rows) {
            Some((a, b)) => worst = worst.max((a - lo).abs()).max((b - hi).abs()),
            None => worst = f64::INFINITY,
        }
    }
    pass &= worst <= 1e-3;
    outcome(
        pass,
        format!("V_OR {or:.6}, V_parity {parity:.6}, worst endpoint deviation {worst:.1e}"),
    )
}

fn c5_cc_collapse() -> Outcome {
    let b = symmetric_box(0.42, 0.42, 0.99, -0.16);
    let or = chsh_of(&[b, b], &or_protocol());
    let threshold = cc_threshold();
    let mut pass = (or - 3.2683).abs() <= 5e-4 && or > threshold;
    let report = reproduce_tables(3, 0).unwrap();
    let flagged = report.flagged();
    pass &= flagged.len() == 7 && flagged.iter().all(|(_, c)| c.column == "V_parity");
    let mut parity_dev = 0.0f64;
    for row in &report.rows {
        let eps = row.params.iter().find(|(k, _)| *k == "eps").unwrap().1;
        let delta = row.params.iter().find(|(k, _)| *k == "delta").unwrap().1;
        for c in &row.cells {
            if c.column == "V_parity" {
                parity_dev = parity_dev.max((c.computed - (3.0 * delta * delta - eps * eps)).abs());
            }
        }
    }
    pass &= parity_dev <= 1e-9;
    let v_rows_ok = report
        .rows
        .iter()
        .all(|r| r.cells.iter().filter(|c| c.column == "V" || c.column == "V_OR").all(|c| c.matches()));
    pass &= v_rows_ok;
    outcome(
        pass,
        format!(
            "V_OR {or:.6} vs threshold {threshold:.6}; V and V_OR match: {v_rows_ok}; \
             flagged {} cells (V_parity = 3δ²-ε² within {parity_dev:.0e})",
            flagged.len()
        ),
    )
}

fn c6_closed_forms() -> (Outcome, Vec<String>) {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (alpha, beta, delta, eps) = random_symmetric(&mut r);
        let b = symmetric_box(alpha, beta, delta, eps);
        let simulated = chsh_of(&[b, b], &or_protocol());
        let closed = closed_form_values(alpha, beta, delta, eps, &AllcockParams::default()).v_or;
        worst = worst.max((simulated - closed).abs());
    }
    let v_a = allcock_value(1.0, -0.7, AllcockParams::default().combination());
    let pass = worst <= 1e-9 && (v_a - 3.8275).abs() <= 1e-12;

    let mut fits = Vec::new();
    for (delta, eps, printed) in [
        (1.0, -0.7, 3.8360),
        (1.0, -0.7, 3.8275),
        (0.92, -0.22, 2.9924),
        (0.92, -0.22, 2.9867),
        (0.917, -0.22, 2.97539),
        (0.917, -0.22, 2.96971),
    ] {
        let x = fit_allcock_combination(delta, eps, printed).unwrap();
        fits.push(format!("table 1 δ={delta} ε={eps} V_A={printed}: b-a+2d = {x:.6}"));
    }
    for (alpha, eps, printed) in [
        (0.42, -0.16, 3.101575),
        (0.41, -0.18, 3.121425),
        (0.40, -0.20, 3.141275),
        (0.39, -0.22, 3.161125),
        (0.38, -0.24, 3.180975),
        (0.37, -0.26, 3.200825),
        (0.36, -0.28, 3.220675),
    ] {
        let x = fit_allcock_combination(0.99, eps, printed).unwrap();
        fits.push(format!("table 3 α={alpha} ε={eps} V_A={printed}: b-a+2d = {x:.6}"));
    }
    (
        outcome(
            pass,
            format!("V_OR closed form vs simulation {worst:.1e} on 200 boxes; V_A(a=b=c=d=0) = {v_a}"),
        ),
        fits,
    )
}

fn c7_adaptive_audit() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (delta, eps, printed) in [(1.0, -0.7, 3.8275), (0.92, -0.22, 2.9867), (0.917, -0.22, 2.96971)] {
        let b = CorrelatorForm::from_parts([0.0; 2], [0.0; 2], [delta, delta, delta, eps]).to_box();
        let best = adaptive_search_max(&b, 0).unwrap().best_value;
        pass &= best >= printed - 1e-4;
        parts.push(format!("{best:.6} vs {printed}"));
    }
    outcome(pass, format!("adaptive best {}", parts.join(", ")))
}

fn c8_bs_equivalence() -> Outcome {
    let target = DeltaPolynomial::new(vec![0.0, 0.5, 0.5]);
    let factors = affine_factorize(&target, 2).unwrap();
    let expected = [(1.0, 0.0), (0.5, 0.5)];
    let mut coeff_dev = 0.0f64;
    for (f, (c1, c0)) in factors.iter().zip(expected) {
        coeff_dev = coeff_dev.max((f.c1 - c1).abs()).max((f.c0 - c0).abs());
    }
    let eq = build_equivalent_boxes(&AdaptiveTwoCopyProtocol::brunner_skrzypczyk()).unwrap();
    let mut box_dev = 0.0f64;
    for delta in [0.0, 0.3, 0.7, 1.0] {
        let boxes = eq.boxes_at(delta);
        let wired = apply_nonadaptive(&boxes, &parity_protocol(2, boxes.len())).unwrap();
        box_dev = box_dev.max(wired.max_abs_diff(&bs_output_box(delta)));
    }
    outcome(
        factors.len() == 2 && coeff_dev <= 1e-12 && box_dev <= 1e-9,
        format!("factors δ and (1+δ)/2 within {coeff_dev:.1e}; PARITY(N1, N2) vs BS box {box_dev:.1e}"),
    )
}

fn c9_fourier() -> Outcome {
    let mut r = rng(9);
    let mut parseval = 0.0f64;
    for packed in 0..16u64 {
        let s = walsh_transform(&PmOutputFunction::from_packed(2, packed));
        parseval = parseval.max((s.parseval_sum() - 1.0).abs());
    }
    for m in [3, 4] {
        for _ in 0..1000 {
            let packed = r.random::<u64>();
            let s = walsh_transform(&PmOutputFunction::from_packed(m, packed));
            parseval = parseval.max((s.parseval_sum() - 1.0).abs());
        }
    }
    let mut value_dev = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(2..=3);
        let m = r.random_range(1..=3);
        let b = random_xor_box(&mut r, n);
        let fs: Vec<PmOutputFunction> = (0..n)
            .map(|_| PmOutputFunction::from_packed(m, r.random::<u64>()))
            .collect();
        let spectra: Vec<_> = fs.iter().map(walsh_transform).collect();
        let fourier = nonadaptive_value_fourier(&spectra, &b.game, &b.delta).unwrap();
        let proto = NonAdaptiveProtocol::from_fn(n, m, |p, _, s| fs[p].table()[s] == -1);
        let copies = vec![b.to_multiparty(); m];
        let direct = apply_nonadaptive_multi(&copies, &proto).unwrap().xor_value(&b.game);
        value_dev = value_dev.max((fourier - direct).abs());
    }
    outcome(
        parseval <= 1e-12 && value_dev <= 1e-9,
        format!("Parseval {parseval:.1e}; Fourier vs direct value {value_dev:.1e} on 100 instances"),
    )
}

fn c10_determinism() -> Outcome {
    let b = symmetric_box(0.3, 0.2, 0.8, -0.1);
    let mut r = rng(10);
    let xb = random_xor_box(&mut r, 3);
    let grid = ScanGrid {
        alpha: ScanRange::new(0.0, 0.5, 0.01).unwrap(),
        beta: None,
        delta: ScanRange::new(0.9, 1.0, 0.05).unwrap(),
        eps: ScanRange::new(-0.5, 0.5, 0.01).unwrap(),
    };
    let labels = [WiringLabel::Parity, WiringLabel::Or, WiringLabel::Allcock];
    let fingerprint = |threads: usize| {
        let mut out = String::new();
        for (m, dep) in [(2, false), (2, true), (3, false)] {
            let s = enumerate_nonadaptive_max_chsh(&b, m, dep, threads).unwrap();
            out += &format!("{:016x} {} {}\n", s.best_value.to_bits(), s.best_protocol, s.examined);
        }
        let s = enumerate_nonadaptive_max(&xb.to_multiparty(), &xb.game, 2, true, threads).unwrap();
        out += &format!("{:016x} {} {}\n", s.best_value.to_bits(), s.best_protocol, s.examined);
        let s = adaptive_search_max(&b, threads).unwrap();
        out += &format!("{:016x} {} {}\n", s.best_value.to_bits(), s.best_protocol, s.examined);
        let rows = region_scan(&grid, &labels, AllcockMapping::DFromAlpha, threads).unwrap();
        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        out.push_str(&String::from_utf8(csv).unwrap());
        out
    };
    let reference = fingerprint(1);
    let same = [4, 8].iter().all(|&t| fingerprint(t) == reference);
    outcome(
        same,
        format!("5 searches and a {}-cell scan identical at 1, 4 and 8 threads", grid.cells()),
    )
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "roundtrip & validity", c1_roundtrip),
        (2, "parity wiring value", c2_parity_lemma),
        (3, "parity optimal among input-free wirings", c3_parity_optimal),
        (4, "OR beats parity on correlated boxes", c4_or_beats_parity),
        (5, "communication-complexity collapse", c5_cc_collapse),
        (6, "closed forms", || {
            let (o, fits) = c6_closed_forms();
            for f in fits {
                println!("      {f}");
            }
            o
        }),
        (7, "adaptive audit", c7_adaptive_audit),
        (8, "BS equivalence", c8_bs_equivalence),
        (9, "Fourier machinery", c9_fourier),
        (10, "determinism across threads", c10_determinism),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "{tag:<12} criterion {id:>2} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
