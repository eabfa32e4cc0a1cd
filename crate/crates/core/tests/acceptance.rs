//! Acceptance suite. Prints one line per criterion and exits nonzero when a
//! part fails that is not on the known-unattainable list.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use primeforms_core::arch::{Arch, BoxRegion, QuadSpec};
use primeforms_core::count::{
    arc_parameter, classify_arc, count_prime_solutions, exp_sum, major_arc_measure,
    minor_arc_probe, sieve_lambda, Strategy,
};
use primeforms_core::local::{Budget, Local, SeriesMethod};
use primeforms_core::numeric::{gcd, totient, Dd};
use primeforms_core::pipeline::{analyze, compare, predict, CheckStatus, RunConfig};
use primeforms_core::poly::parse_system;
use primeforms_core::profile::{
    all_t_positive, degree_profile, power_saving_profile, threshold_report, DegreeProfile,
};
use primeforms_core::PolySystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Parts that cannot pass as stated, with the reason. They are still run
/// and reported; they only do not fail the suite.
const KNOWN_UNATTAINABLE: &[(u32, &str, &str)] = &[
    (
        4,
        "two squares: product vs series",
        "n = 2 is far below the convergence range; the product is 0 (no unit zeros mod 4) while the partial series oscillates",
    ),
    (
        4,
        "two squares: term decay",
        "terms of a binary form do not decay like q^(-1/2)",
    ),
    (
        6,
        "p=3 level 1",
        "(1,1,1) is a nonsingular unit zero mod 3, so no obstruction exists at 3",
    ),
    (
        9,
        "ratio in [0.5, 1.5]",
        "the split quaternary quadric has N ~ P^2 log P and a divergent singular series",
    ),
    (9, "|ratio - 1| non-increasing", "same cause: the ratio grows with log P"),
    (
        10,
        "max_norm non-increasing",
        "alpha = 1/2 is a minor arc for P < 256 and |S(1/2)|/P^2 grows over 50, 100, 200",
    ),
];

type Check = fn() -> Vec<Part>;

struct Part {
    name: String,
    pass: bool,
    detail: String,
}

fn part(name: &str, pass: bool, detail: impl Into<String>) -> Part {
    Part {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn system(name: &str) -> PolySystem {
    parse_system(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

fn units(q: u64) -> Vec<u64> {
    (1..=q).filter(|&x| gcd(x, q) == 1).map(|x| x % q).collect()
}

fn runtime(limit: f64, start: Instant) -> Part {
    let s = start.elapsed().as_secs_f64();
    part(
        &format!("runtime < {limit} s"),
        s < limit,
        format!("{s:.2} s"),
    )
}

fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    let scale = x.abs().max(y.abs());
    // Both sides vanish: relative error is undefined, compare absolutely.
    if scale < 1e-12 {
        return (x - y).abs() < 1e-12;
    }
    (x - y).abs() <= tol * scale
}

fn c1() -> Vec<Part> {
    let start = Instant::now();
    let sys = parse_system("vars 2\nx1^2 + x2^2").unwrap();
    let local = Local::new(&sys, Budget::default());
    let brute = |q: u64| -> u64 {
        let u = units(q);
        let mut c = 0;
        for &a in &u {
            for &b in &u {
                if (a * a + b * b) % q == 0 {
                    c += 1;
                }
            }
        }
        c
    };
    let mut parts = Vec::new();
    for (q, want) in [(5u64, 8u128), (25, 40)] {
        let got = local.count(q).unwrap().value;
        let b = brute(q) as u128;
        parts.push(part(
            &format!("N({q}) = {want}"),
            got == want && b == want,
            format!("engine {got}, scan {b}"),
        ));
    }
    let half = BigRational::new(BigInt::from(5), BigInt::from(2));
    let mut seq = Vec::new();
    let mut ok = true;
    for k in 1..=4u32 {
        let v = local.density_at(5, k).unwrap();
        if k <= 3 {
            let q = 5u64.pow(k);
            let phi = totient(q);
            let oracle = BigRational::new(BigInt::from(q * brute(q)), BigInt::from(phi * phi));
            ok &= v == oracle;
        }
        ok &= v == half;
        seq.push(v.to_string());
    }
    parts.push(part("S_5 sequence constant at 5/2", ok, seq.join(", ")));
    let b5 = local.b_of_q(5).unwrap();
    let u = units(5);
    let mut oracle = 0f64;
    for a in 1..5u64 {
        for &x in &u {
            for &y in &u {
                oracle += (TAU * (a * (x * x + y * y) % 5) as f64 / 5.0).cos();
            }
        }
    }
    parts.push(part(
        "B(5) = 24",
        (b5.re - 24.0).abs() < 1e-9 && (oracle - 24.0).abs() < 1e-9 && b5.im.abs() < 1e-9,
        format!("engine {:.12}, scan {:.12}", b5.re, oracle),
    ));
    let layer = 1.0 + b5.re / 16.0;
    parts.push(part(
        "1 + B(5)/phi(5)^2 = 5/2",
        (layer - 2.5).abs() < 1e-9,
        format!("{layer:.12}"),
    ));
    parts.push(runtime(1.0, start));
    parts
}

fn c2() -> Vec<Part> {
    let start = Instant::now();
    let names = [
        "sum_two_squares.txt",
        "diff_squares.txt",
        "three_squares.txt",
        "quaternary_quadric.txt",
    ];
    let mut pairs = Vec::new();
    for q1 in 1..=60u64 {
        for q2 in q1..=60u64 {
            if gcd(q1, q2) == 1 {
                pairs.push((q1, q2));
            }
        }
    }
    let mut parts = Vec::new();
    for name in names {
        let sys = system(name);
        let local = Local::new(&sys, Budget::default());
        let mut direct: BTreeMap<u64, u128> = BTreeMap::new();
        let mut n_direct = |q: u64| {
            *direct
                .entry(q)
                .or_insert_with(|| local.count_direct(q).unwrap())
        };
        let mut bad_n = Vec::new();
        let mut bad_exact = Vec::new();
        let mut bad_gauss = Vec::new();
        let mut gauss: BTreeMap<u64, f64> = BTreeMap::new();
        for &(q1, q2) in &pairs {
            let q = q1 * q2;
            if n_direct(q) != n_direct(q1) * n_direct(q2) {
                bad_n.push(q);
            }
            let e = local.b_normalized_exact(q).unwrap();
            if e != local.b_normalized_exact(q1).unwrap() * local.b_normalized_exact(q2).unwrap() {
                bad_exact.push(q);
            }
            let mut g = |q: u64| {
                *gauss
                    .entry(q)
                    .or_insert_with(|| local.b_of_q(q).unwrap().term())
            };
            if !rel_close(g(q), g(q1) * g(q2), 1e-9) {
                bad_gauss.push(q);
            }
        }
        let stem = name.trim_end_matches(".txt");
        parts.push(part(
            &format!("{stem}: N multiplicative"),
            bad_n.is_empty(),
            format!("{} coprime pairs, failures {bad_n:?}", pairs.len()),
        ));
        parts.push(part(
            &format!("{stem}: B/phi^n multiplicative"),
            bad_exact.is_empty() && bad_gauss.is_empty(),
            format!("exact and Gauss routes, failures {bad_exact:?} {bad_gauss:?}"),
        ));
    }
    parts.push(runtime(60.0, start));
    parts
}

fn c3() -> Vec<Part> {
    let names = [
        "sum_two_squares.txt",
        "diff_squares.txt",
        "three_squares.txt",
        "quaternary_quadric.txt",
        "quadric_cubic.txt",
        "diagonal_cubic_12.txt",
    ];
    let mut parts = Vec::new();
    for name in names {
        let sys = system(name);
        let local = Local::new(&sys, Budget::default());
        let mut worst = 0f64;
        for q in 1..=40u64 {
            let (re, im) = local.gauss_total_all(q).unwrap().to_pair();
            let want = (q as f64).powi(sys.r() as i32) * local.count(q).unwrap().value as f64;
            let err = (re - want).abs().max(im.abs()) / want.max(1.0);
            worst = worst.max(err);
        }
        parts.push(part(
            name.trim_end_matches(".txt"),
            worst <= 1e-6,
            format!("max relative error {worst:.2e} over q <= 40"),
        ));
    }
    parts
}

fn c4() -> Vec<Part> {
    let mut parts = Vec::new();
    for (label, name) in [
        ("two squares", "sum_two_squares.txt"),
        ("diagonal cubic", "diagonal_cubic_12.txt"),
    ] {
        let sys = system(name);
        let local = Local::new(&sys, Budget::default());
        let series = local.singular_series(200, SeriesMethod::Gauss).unwrap();
        let euler = local.euler_product(200, 6).unwrap();
        let s = series.partial.value;
        let e = euler.value.value;
        let rel = (e - s).abs() / s.abs();
        parts.push(part(
            &format!("{label}: product vs series"),
            (e - s).abs() <= 0.02 * s.abs(),
            format!(
                "product {e:.6}, series {s:.6}, relative gap {rel:.4}, obstructions {:?}",
                euler.obstructions
            ),
        ));
        let fit = series.fitted_exponent;
        parts.push(part(
            &format!("{label}: term decay"),
            fit.is_some_and(|f| f <= -0.4),
            format!("fitted exponent {fit:?}"),
        ));
    }
    parts
}

fn c5() -> Vec<Part> {
    let start = Instant::now();
    let sys = parse_system("vars 2\nx1^2 - x2^2").unwrap();
    let region = BoxRegion::cube(2, 0.1, 0.9).unwrap();
    let arch = Arch::new(&sys, &region, QuadSpec::default()).unwrap();
    let integral = arch.singular_integral(1000.0, 1_000_000, 1).unwrap();
    let density = arch.real_density(1e-3, 20_000_000, 1).unwrap();
    let target = 9f64.ln() / 2.0;
    let gap = (integral.value - density.value).abs();
    let bars = integral.error + density.std_error;
    vec![
        part(
            "integral within 5%",
            (integral.value - target).abs() <= 0.05 * target,
            format!(
                "{:.5} +- {:.1e} against {target:.5}",
                integral.value, integral.error
            ),
        ),
        part(
            "slab density within 5%",
            (density.value - target).abs() <= 0.05 * target,
            format!("{:.5} +- {:.1e}", density.value, density.std_error),
        ),
        part(
            "methods within combined error bars",
            gap <= bars,
            format!("gap {gap:.2e}, bars {bars:.2e}"),
        ),
        runtime(60.0, start),
    ]
}

fn c6() -> Vec<Part> {
    let start = Instant::now();
    let sys = system("three_squares.txt");
    let local = Local::new(&sys, Budget::default());
    let h2 = local.hensel_check(2, 6, 1).unwrap();
    let h3 = local.hensel_check(3, 6, 1).unwrap();
    // Independent look at p = 3: is (1,1,1) a zero with nonzero gradient?
    let ms = sys.compile().reduce_mod(3);
    let nonsingular_at_3 = ms.eval(&[1, 1, 1]) == [0]
        && ms
            .jacobian(&[1, 1, 1], 3)
            .iter()
            .flatten()
            .any(|&v| v % 3 != 0);
    let cfg = RunConfig::default();
    let pred = predict(&sys, &BoxRegion::default_for(3), 100, &cfg).unwrap();
    let reason = pred.reason.clone().unwrap_or_default();
    let two = parse_system("vars 2\nx1^2 + x2^2").unwrap();
    let h3_two = Local::new(&two, Budget::default())
        .hensel_check(3, 6, 1)
        .unwrap();
    vec![
        part(
            "p=2 level 3",
            h2.obstruction_level() == Some(3),
            format!("{:?}", h2.outcome),
        ),
        part(
            "p=3 level 1",
            h3.obstruction_level() == Some(1),
            format!(
                "{:?} at {:?}; (1,1,1) nonsingular mod 3: {nonsingular_at_3}",
                h3.outcome, h3.h
            ),
        ),
        part(
            "x1^2+x2^2 at p=3 level 1",
            h3_two.obstruction_level() == Some(1),
            format!("{:?}", h3_two.outcome),
        ),
        part(
            "predict returns 0 naming p=2",
            pred.value.value == 0.0 && reason.contains("p=2"),
            reason,
        ),
        runtime(1.0, start),
    ]
}

fn c7() -> Vec<Part> {
    let sys = system("quadric_cubic.txt");
    let report = analyze(&sys, &RunConfig::default()).unwrap();
    let exact = |q: &primeforms_core::report::Quantity| q.exact.clone().unwrap_or_default();
    let mut parts = vec![
        part(
            "cal_D = 5",
            exact(&report.profile.cal_d) == "5",
            exact(&report.profile.cal_d),
        ),
        part(
            "varpi = 1/12",
            exact(&report.threshold.varpi) == "1/12",
            exact(&report.threshold.varpi),
        ),
        part(
            "n_min = 75497472",
            exact(&report.threshold.n_min) == "75497472",
            exact(&report.threshold.n_min),
        ),
    ];
    match &report.power_saving {
        Some(ps) => {
            let s: Vec<String> = ps.s.values().map(exact).collect();
            let c = 2u32;
            let max =
                ps.s.values()
                    .map(|q| q.exact.clone().unwrap().parse::<BigRational>().unwrap())
                    .max()
                    .unwrap();
            let s1: BigRational = exact(&ps.s[&1]).parse().unwrap();
            let sc: BigRational = exact(&ps.s[&c]).parse().unwrap();
            parts.push(part(
                "s_1 = s_C = max s_d",
                s1 == sc && s1 == max,
                format!("s = {s:?}"),
            ));
        }
        None => parts.push(part(
            "s_1 = s_C = max s_d",
            false,
            report.power_saving_error.clone().unwrap_or_default(),
        )),
    }
    // iota_1 and iota_2 from their defining formulas, D = 3, R = 2, cal_D = 5.
    let (d, r, cal) = (3u128, 2u128, 5u128);
    let c = (1u128 << (d - 1)) * (d - 1);
    let tail = r + c * r * (r + 1);
    let iota1 = (cal - d + 1 + (1 << (d + 3)) * r * r * (r + 1)) * (r + 1) * c + tail;
    let iota2 = (cal - d + (1 << (d + 3)) * r * r * (r + 1) + 8 * r) * (r + 1) * c + tail;
    let iota3 = r * iota2 + iota1 + d * r * r * r + 2 * r * r + r;
    let got = [
        &report.threshold.iota1,
        &report.threshold.iota2,
        &report.threshold.iota3,
    ]
    .map(exact);
    let want = [iota1, iota2, iota3].map(|v| v.to_string());
    parts.push(part(
        "iota_3 = R iota_2 + iota_1 + D R^3 + 2R^2 + R",
        got == want,
        format!("reported {got:?}, formulas {want:?}"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    let mut admissible = 0;
    let mut s_ok = true;
    for _ in 0..200 {
        let mut counts = BTreeMap::new();
        while counts.is_empty() {
            for deg in 1..=4u32 {
                if rng.gen_bool(0.5) {
                    counts.insert(deg, rng.gen_range(1..=3usize));
                }
            }
        }
        let profile = DegreeProfile::from_counts(counts).unwrap();
        let n = rng.gen_range(2..=20_000usize);
        let birch: BTreeMap<u32, usize> = profile
            .delta()
            .into_iter()
            .map(|deg| {
                (
                    deg,
                    if rng.gen_bool(0.3) {
                        0
                    } else {
                        rng.gen_range(0..n)
                    },
                )
            })
            .collect();
        let psp = power_saving_profile(n, &profile, &birch, None).unwrap();
        if psp.admissible == all_t_positive(&psp) {
            agree += 1;
        }
        admissible += psp.admissible as usize;
        let max = psp.s.iter().max().unwrap();
        s_ok &= psp.s_at(1) == psp.s_at(profile.c())
            && &psp.s_at(1) == max
            && !psp.s_at(1).is_negative();
    }
    parts.push(part(
        "admissible <=> all t > 0 on 200 random profiles",
        agree == 200,
        format!("{agree}/200 agree, {admissible} admissible"),
    ));
    parts.push(part("s_1 = s_C = max s_d on random profiles", s_ok, ""));
    // The bundled system profile itself, for the record.
    let tr = threshold_report(&degree_profile(&sys), None, None);
    parts.push(part(
        "iota_3 within D^2 4^(D+2) R^5",
        tr.iota3_within_bound(),
        format!("{} <= {}", tr.iota3, tr.iota3_bound),
    ));
    parts
}

fn c8() -> Vec<Part> {
    let sys = system("quaternary_quadric.txt");
    let compiled = sys.compile();
    let region = BoxRegion::default_for(4);
    let full = count_prime_solutions(&compiled, &region, 200, Strategy::Full, u128::MAX).unwrap();
    let auto = count_prime_solutions(&compiled, &region, 200, Strategy::Auto, u128::MAX).unwrap();
    let same = full.weighted.to_bits() == auto.weighted.to_bits()
        && full.unweighted == auto.unweighted
        && full.solutions == auto.solutions;

    let table = sieve_lambda(200).unwrap();
    let one_d: f64 = (21..=180).map(|m| table.lambda(m)).sum();
    let zero = exp_sum(&sys, &region, 200, &[Dd::from(0.0)], u128::MAX).unwrap();
    let want = one_d.powi(4);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut periodic = 0;
    for _ in 0..20 {
        let a: f64 = rng.gen();
        let s = exp_sum(&sys, &region, 200, &[Dd::from(a)], u128::MAX).unwrap();
        let t = exp_sum(
            &sys,
            &region,
            200,
            &[Dd::from(a) + Dd::from(1.0)],
            u128::MAX,
        )
        .unwrap();
        if s.re.to_bits() == t.re.to_bits() && s.im.to_bits() == t.im.to_bits() {
            periodic += 1;
        }
    }
    vec![
        part(
            "hash-join equals full enumeration at P=200",
            same && auto.strategy == "hash-join",
            format!(
                "{} vs {} ({}), weighted {:.6}, {} prime tuples",
                full.strategy, auto.strategy, same, full.weighted, full.unweighted
            ),
        ),
        part(
            "S(0) = product of 1-D sums",
            (zero.re - want).abs() <= 1e-9 * want && zero.im.abs() <= 1e-9 * want,
            format!("{:.6e} vs {want:.6e}", zero.re),
        ),
        part(
            "S(a+1) = S(a) at 20 random a",
            periodic == 20,
            format!("{periodic}/20 bit-identical"),
        ),
    ]
}

fn c9() -> Vec<Part> {
    let start = Instant::now();
    let sys = system("quaternary_quadric.txt");
    let cfg = RunConfig::from_json(&std::fs::read_to_string(data("compare_quadric.json")).unwrap())
        .unwrap();
    let report = compare(&sys, &cfg).unwrap();
    let ratios: Vec<f64> = report.rows.iter().filter_map(|r| r.ratio).collect();
    let complete = ratios.len() == 3;
    let in_band = complete && ratios.iter().all(|r| (0.5..=1.5).contains(r));
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let monotone = complete && dev.windows(2).all(|w| w[1] <= w[0]);
    let flagged = report
        .checklist
        .first()
        .is_some_and(|c| c.status == CheckStatus::Fail);
    let series = report
        .factors
        .as_ref()
        .and_then(|f| f.series.as_ref())
        .map(|s| {
            format!(
                "series {:.3}, fitted exponent {:?}",
                s.value.value, s.fitted_exponent
            )
        })
        .unwrap_or_default();
    vec![
        part(
            "ratio in [0.5, 1.5]",
            in_band,
            format!("ratios {ratios:.3?}; {series}"),
        ),
        part("|ratio - 1| non-increasing", monotone, format!("{dev:.3?}")),
        part(
            "variable-count hypothesis flagged FAIL",
            flagged,
            report
                .checklist
                .first()
                .map(|c| c.detail.clone())
                .unwrap_or_default(),
        ),
        runtime(600.0, start),
    ]
}

fn c10() -> Vec<Part> {
    let (p, r) = (100.0, 1usize);
    let q_cap = arc_parameter(p, r);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut multiple = 0;
    let mut major = 0;
    for _ in 0..10_000 {
        let a: f64 = 1.0 - rng.gen::<f64>();
        let label = classify_arc(&[a], &[2], p, q_cap).unwrap();
        multiple += (label.witnesses > 1) as usize;
        major += label.is_major() as usize;
    }
    let mut measure_ok = true;
    let mut rows = Vec::new();
    for degrees in [vec![2u32], vec![3], vec![2, 3], vec![2, 2, 3]] {
        for pp in [100.0, 1e4, 1e6, 1e9] {
            let qc = arc_parameter(pp, degrees.len());
            let m = major_arc_measure(&degrees, pp, qc);
            measure_ok &= m.measure <= m.bound;
            if pp == 1e6 {
                rows.push(format!("{degrees:?}: {:.2e} <= {:.2e}", m.measure, m.bound));
            }
        }
    }
    let sys = parse_system("vars 2\nx1^2 + x2^2").unwrap();
    let region = BoxRegion::default_for(2);
    let probe = minor_arc_probe(&sys, &region, &[50, 100, 200], 2000, 1, u128::MAX).unwrap();
    let max: Vec<f64> = probe.rows.iter().map(|r| r.max_norm).collect();
    let q90: Vec<f64> = probe.rows.iter().map(|r| r.q90_norm).collect();
    let half: Vec<f64> = [50u64, 100, 200]
        .iter()
        .map(|&pp| {
            exp_sum(&sys, &region, pp, &[Dd::from(0.5)], u128::MAX)
                .unwrap()
                .normalized
        })
        .collect();
    vec![
        part(
            "witness uniqueness over 10^4 alpha",
            multiple == 0,
            format!("Q = {q_cap:.3}, {major} major, {multiple} with several witnesses"),
        ),
        part("major-arc measure below bound", measure_ok, rows.join("; ")),
        part(
            "max_norm non-increasing",
            max.windows(2).all(|w| w[1] <= w[0]),
            format!("max {max:.3?}, q90 {q90:.3?}, |S(1/2)|/P^2 {half:.3?}"),
        ),
    ]
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 10] = [
        (1, "modular layer oracles", c1),
        (2, "multiplicativity", c2),
        (3, "orthogonality", c3),
        (4, "Euler product vs series", c4),
        (5, "archimedean agreement", c5),
        (6, "local obstructions", c6),
        (7, "profile arithmetic", c7),
        (8, "counting invariants", c8),
        (9, "end-to-end trend", c9),
        (10, "arc geometry", c10),
    ];
    // ACCEPTANCE_ONLY=2,5 runs a subset.
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let parts = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = parts.iter().all(|p| p.pass);
        println!(
            "criterion {id}: {} ({title}, {secs:.2} s)",
            if pass { "PASS" } else { "FAIL" }
        );
        for p in &parts {
            let known = KNOWN_UNATTAINABLE
                .iter()
                .find(|(k, name, _)| *k == id && *name == p.name);
            let tag = match (p.pass, known) {
                (true, _) => "pass",
                (false, Some(_)) => "FAIL known",
                (false, None) => "FAIL",
            };
            println!("    {tag}: {}: {}", p.name, p.detail);
            if let (false, Some((_, _, why))) = (p.pass, known) {
                println!("        why: {why}");
            }
            if !p.pass && known.is_none() {
                unexpected.push(format!("{id}: {}", p.name));
            }
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: every failing part is a known unattainable one");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        ExitCode::FAILURE
    }
}
