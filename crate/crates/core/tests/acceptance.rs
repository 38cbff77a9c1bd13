//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Every random draw comes from a fixed-seed ChaCha8 stream.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scd_core::io::{
    format_seconds, parse_change_stamps, parse_nbest, parse_rttm, write_change_stamps,
    write_nbest, write_rttm,
};
use scd_core::metrics::DEFAULT_COLLAR;
use scd_core::risk::{per_hyp_risk, RiskConfig};
use scd_core::toy::{st_vs_word_space, ToyModel};
use scd_core::{
    align, batch_loss, brute_force_align, expected_risk, f1, purity_coverage, risk_gradient,
    score_changes, train, AlignmentCosts, Annotation, ChangeHypothesis, NBest, ScoredHypothesis,
    SpeakerSegment, Token, TokenSequence, TrainConfig,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn seq(text: &str) -> TokenSequence {
    TokenSequence::parse(text).unwrap()
}

fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize, alphabet: &[&str]) -> TokenSequence {
    let n = rng.gen_range(0..=max_len);
    (0..n)
        .map(|_| match *alphabet.choose(rng).unwrap() {
            "<st>" => Token::SpeakerTurn,
            w => Token::Word(w.to_string()),
        })
        .collect()
}

fn alignment_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ks = [1.0, 1.1, 2.0, 2.5];
    let start = Instant::now();
    for i in 0..10_000 {
        let r = random_tokens(&mut rng, 6, &["a", "b", "<st>"]);
        let h = random_tokens(&mut rng, 6, &["a", "b", "<st>"]);
        let costs = AlignmentCosts::from_k(ks[i % ks.len()]).unwrap();
        let dp = align(&r, &h, costs);
        let oracle = brute_force_align(&r, &h, costs).map_err(|e| e.to_string())?;
        ensure(dp.cost_milli == oracle.cost_milli, || {
            format!("pair {i} `{r}` / `{h}`: dp {} vs oracle {}", dp.cost_milli, oracle.cost_milli)
        })?;
        ensure(oracle.optimal_counts.contains(&dp.counts), || {
            format!("pair {i} `{r}` / `{h}`: counts {:?} not optimal", dp.counts)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("10000 pairs, {elapsed:.2?}"))
}

fn levenshtein(a: &[Token], b: &[Token]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y))
                .min(prev[j + 1] + 1)
                .min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn levenshtein_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1_000 {
        let r = random_tokens(&mut rng, 10, &["a", "b", "c", "d"]);
        let h = random_tokens(&mut rng, 10, &["a", "b", "c", "d"]);
        let got = align(&r, &h, AlignmentCosts::default()).counts.word_errors as usize;
        let want = levenshtein(&r, &h);
        ensure(got == want, || format!("pair {i} `{r}` / `{h}`: W {got}, edit distance {want}"))?;
    }
    Ok("1000 pairs".into())
}

fn offset_tolerance() -> Check {
    let left = ["w1", "w2", "w3", "w4", "w5"];
    let right = ["v1", "v2", "v3", "v4", "v5"];
    let reference = seq(&format!("{} <st> {}", left.join(" "), right.join(" ")));
    let mut checked = 0;
    for k in [1.0, 1.1, 2.0, 2.5, 3.0] {
        let costs = AlignmentCosts::from_k(k).unwrap();
        for m in 0..=4usize {
            // the turn moved m tokens earlier, then m tokens later
            let early = format!(
                "{} <st> {} {}",
                left[..5 - m].join(" "),
                left[5 - m..].join(" "),
                right.join(" ")
            );
            let late = format!(
                "{} {} <st> {}",
                left.join(" "),
                right[..m].join(" "),
                right[m..].join(" ")
            );
            for hyp in [early, late] {
                let c = align(&reference, &seq(&hyp), costs).counts;
                let clean = c.st_insertions == 0 && c.st_deletions == 0;
                let tolerated = m <= k.floor() as usize;
                ensure(clean == tolerated, || {
                    format!("k={k} m={m} `{hyp}`: FA={} FR={}", c.st_insertions, c.st_deletions)
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} shifted hypotheses"))
}

fn risk_arithmetic() -> Check {
    let cfg = RiskConfig::default();
    let reference = seq("a b <st> c d");
    let hyp = seq("a x <st> c d <st>");
    let counts = align(&reference, &hyp, cfg.costs).counts;
    ensure(
        (counts.word_errors, counts.st_insertions, counts.st_deletions) == (1, 1, 0),
        || format!("fixture counts {counts:?}"),
    )?;
    let r = per_hyp_risk(&reference, &hyp, &cfg).map_err(|e| e.to_string())?;
    ensure(r == 2.2, || format!("risk {r:?} != 2.2"))?;

    // zero-risk batch: every hypothesis is the reference
    let nbest = NBest::new(
        "u",
        reference.clone(),
        vec![
            ScoredHypothesis { tokens: reference.clone(), log_score: -0.1 },
            ScoredHypothesis { tokens: reference.clone(), log_score: -2.0 },
        ],
    )
    .map_err(|e| e.to_string())?;
    let b = batch_loss(&[nbest], 0.03, 2.0, &cfg).map_err(|e| e.to_string())?;
    ensure((b.total - 0.06).abs() <= 1e-12, || format!("batch total {}", b.total))?;
    Ok(format!("risk {r}, batch total {}", b.total))
}

fn random_nbest(rng: &mut ChaCha8Rng) -> NBest {
    let alphabet = ["a", "b", "c", "<st>"];
    let reference = loop {
        let r = random_tokens(rng, 6, &alphabet);
        if !r.is_empty() {
            break r;
        }
    };
    let n = rng.gen_range(1..=8);
    let hypotheses = (0..n)
        .map(|_| ScoredHypothesis {
            tokens: random_tokens(rng, 7, &alphabet),
            log_score: rng.gen_range(-6.0..0.0),
        })
        .collect();
    NBest::new("u", reference, hypotheses).unwrap()
}

// |analytic - numeric| / max(|analytic|, |numeric|, FLOOR). The floor keeps
// the ratio meaningful for components that are zero or near the
// finite-difference noise level (about 1e-10 absolute here).
const REL_FLOOR: f64 = 1e-3;

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut floored = 0;
    let mut total = 0;
    for _ in 0..100 {
        let cfg = RiskConfig {
            alpha: rng.gen_range(0.1..3.0),
            beta: rng.gen_range(0.0..20.0),
            gamma: rng.gen_range(0.0..20.0),
            ..RiskConfig::default()
        };
        let nbest = random_nbest(&mut rng);
        let analytic = risk_gradient(&nbest, &cfg).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max(analytic.iter().sum::<f64>().abs());
        for (j, &a) in analytic.iter().enumerate() {
            let at = |delta: f64| {
                let mut n = nbest.clone();
                n.hypotheses[j].log_score += delta;
                expected_risk(&n, &cfg).unwrap().expected_risk
            };
            let numeric = (at(h) - at(-h)) / (2.0 * h);
            let scale = a.abs().max(numeric.abs());
            if scale < REL_FLOOR {
                floored += 1;
            }
            worst = worst.max((a - numeric).abs() / scale.max(REL_FLOOR));
            total += 1;
        }
    }
    ensure(worst <= 1e-6, || format!("max relative error {worst:e}"))?;
    ensure(worst_sum <= 1e-12, || format!("gradient sum {worst_sum:e}"))?;
    Ok(format!(
        "100 instances, {total} components ({floored} below floor {REL_FLOOR:e}), max rel err {worst:.2e}, max |sum| {worst_sum:.1e}"
    ))
}

fn toy_training() -> Check {
    let start = Instant::now();
    let space = st_vs_word_space();
    let config = TrainConfig { seed: 7, ..TrainConfig::default() };
    let trace = train(&space, &config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let st_errors = |i: usize| trace.candidate_counts[i].st_errors();
    let fa_fr = |s: &scd_core::toy::TrainStep| s.expected_fa + s.expected_fr;
    let (first, last) = (trace.initial(), trace.last());
    let ratio = fa_fr(last) / fa_fr(first);
    ensure(ratio <= 0.05, || format!("FA+FR ratio {ratio}"))?;

    let best = last.argmax_candidate_index;
    ensure(st_errors(best) == 0, || {
        format!("argmax `{}` has {} turn errors", space.candidates[best], st_errors(best))
    })?;

    // The turn-dropping competitor: no word errors, one turn error.
    let h3 = space
        .candidates
        .iter()
        .position(|c| *c == seq("a b c"))
        .ok_or("`a b c` missing from the space")?;
    let c3 = trace.candidate_counts[h3];
    ensure(c3.word_errors == 0 && c3.st_errors() == 1, || format!("`a b c` counts {c3:?}"))?;
    let word_only_winner = trace.candidate_counts[best].word_errors;
    ensure(c3.word_errors <= word_only_winner, || "competitor is not word-competitive".into())?;

    let p0 = ToyModel::zeros(space.candidates.len()).log_softmax()[h3].exp();
    let p1 = trace.final_model.log_softmax()[h3].exp();
    ensure(p1 < p0, || format!("p(a b c) {p0} -> {p1}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} candidates, FA+FR {:.4} -> {:.6} ({:.2}%), argmax `{}`, p(a b c) {p0:.4} -> {p1:.2e}, {elapsed:.2?}",
        space.candidates.len(),
        fa_fr(first),
        fa_fr(last),
        100.0 * ratio,
        space.candidates[best],
    ))
}

fn annotation(id: &str, segs: &[(&str, f64, f64)]) -> Annotation {
    Annotation::new(
        id,
        segs.iter().map(|&(s, a, b)| SpeakerSegment::new(s, a, b)).collect(),
    )
    .unwrap()
}

fn changes(id: &str, ts: &[f64]) -> ChangeHypothesis {
    ChangeHypothesis::new(id, ts.to_vec()).unwrap()
}

// Independent purity/coverage: merge each speaker's segments by repeated
// pairwise absorption, cut the span at the predictions, and take the best
// overlap of every segment with a double loop.
fn brute_purity_coverage(segs: &[(String, f64, f64)], preds: &[f64]) -> (f64, f64) {
    let mut by_speaker: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for (s, a, b) in segs {
        by_speaker.entry(s).or_default().push((*a, *b));
    }
    let mut reference = Vec::new();
    for mut ivs in by_speaker.into_values() {
        let mut merged = true;
        while merged {
            merged = false;
            'outer: for i in 0..ivs.len() {
                for j in i + 1..ivs.len() {
                    let (a, b) = (ivs[i], ivs[j]);
                    if a.0 <= b.1 && b.0 <= a.1 {
                        ivs[i] = (a.0.min(b.0), a.1.max(b.1));
                        ivs.remove(j);
                        merged = true;
                        break 'outer;
                    }
                }
            }
        }
        reference.extend(ivs);
    }
    let t_min = segs.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let t_max = segs.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let mut cuts: Vec<f64> = preds.iter().copied().filter(|&t| t_min < t && t < t_max).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bounds = vec![t_min];
    bounds.extend(cuts);
    bounds.push(t_max);
    let hyp: Vec<(f64, f64)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();

    let overlap = |x: (f64, f64), y: (f64, f64)| (x.1.min(y.1) - x.0.max(y.0)).max(0.0);
    let score = |items: &[(f64, f64)], against: &[(f64, f64)]| {
        let mut num = 0.0;
        let mut den = 0.0;
        for &x in items {
            let mut best: f64 = 0.0;
            for &y in against {
                best = best.max(overlap(x, y));
            }
            num += best;
            den += x.1 - x.0;
        }
        num / den
    };
    (score(&hyp, &reference), score(&reference, &hyp))
}

fn random_scenario(rng: &mut ChaCha8Rng) -> (Vec<(String, f64, f64)>, Vec<f64>) {
    let speakers = ["A", "B", "C"];
    let n = rng.gen_range(1..=6);
    let mut segs = Vec::new();
    let mut t: f64 = 0.0;
    for _ in 0..n {
        // start may step back into the previous segment to create overlap
        let start = (t + rng.gen_range(-2.0..2.0)).max(0.0);
        let end = start + rng.gen_range(0.5..6.0);
        let round = |x: f64| (x * 100.0).round() / 100.0;
        segs.push((speakers.choose(rng).unwrap().to_string(), round(start), round(end)));
        t = end;
    }
    let n_pred = rng.gen_range(0..=6);
    let preds = (0..n_pred).map(|_| (rng.gen_range(-1.0..t + 1.0) * 100.0f64).round() / 100.0).collect();
    (segs, preds)
}

fn to_annotation(segs: &[(String, f64, f64)]) -> Annotation {
    Annotation::new(
        "r",
        segs.iter().map(|(s, a, b)| SpeakerSegment::new(s.as_str(), *a, *b)).collect(),
    )
    .unwrap()
}

fn metrics_fixtures() -> Check {
    let fig1 = annotation("rec", &[("A", 0.0, 10.0), ("B", 10.5, 20.0), ("C", 19.0, 25.0)]);
    let r = score_changes(&fig1, &changes("rec", &[10.2, 15.0, 19.5]), DEFAULT_COLLAR)
        .map_err(|e| e.to_string())?;
    ensure(r.precision == Some(2.0 / 3.0) && r.recall_count == Some(1.0), || {
        format!("fig1 precision {:?} recall {:?}", r.precision, r.recall_count)
    })?;

    // one prediction strictly inside each change interval
    let overlapping = annotation("o", &[("A", 0.0, 10.0), ("B", 9.0, 20.0), ("C", 19.5, 30.0)]);
    let perfect = score_changes(&overlapping, &changes("o", &[9.5, 19.75]), DEFAULT_COLLAR)
        .map_err(|e| e.to_string())?;
    ensure(
        perfect.precision == Some(1.0)
            && perfect.recall_count == Some(1.0)
            && perfect.recall_duration == Some(1.0),
        || format!("perfect predictor {perfect:?}"),
    )?;

    let empty_hyp = changes("rec", &[]);
    let empty = score_changes(&fig1, &empty_hyp, DEFAULT_COLLAR).map_err(|e| e.to_string())?;
    ensure(empty.precision.is_none() && empty.recall_count == Some(0.0), || {
        format!("empty predictor {empty:?}")
    })?;
    let seg = purity_coverage(&fig1, &empty_hyp).map_err(|e| e.to_string())?;
    // every reference segment lies inside the single hypothesis segment [0, 25]
    ensure((seg.coverage - 1.0).abs() <= 1e-12, || format!("empty coverage {}", seg.coverage))?;
    ensure((seg.purity - 10.0 / 25.0).abs() <= 1e-12, || format!("empty purity {}", seg.purity))?;

    let two = annotation("t", &[("A", 0.0, 10.0), ("B", 10.0, 20.0)]);
    let pc = purity_coverage(&two, &changes("t", &[15.0])).map_err(|e| e.to_string())?;
    ensure((pc.purity - 0.75).abs() <= 1e-9 && (pc.coverage - 0.75).abs() <= 1e-9, || {
        format!("purity {} coverage {}", pc.purity, pc.coverage)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let (segs, preds) = random_scenario(&mut rng);
        let got = purity_coverage(&to_annotation(&segs), &ChangeHypothesis::new("r", preds.clone()).unwrap())
            .map_err(|e| e.to_string())?;
        let (p, c) = brute_purity_coverage(&segs, &preds);
        let err = (got.purity - p).abs().max((got.coverage - c).abs());
        worst = worst.max(err);
        ensure(err <= 1e-9, || {
            format!("scenario {i}: purity {} vs {p}, coverage {} vs {c}", got.purity, got.coverage)
        })?;
    }
    Ok(format!("fixtures ok, 200 random scenarios, max |diff| {worst:.1e}"))
}

fn collar_monotonicity() -> Check {
    let collars = [0.0, 0.1, 0.25, 0.5, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let (segs, preds) = random_scenario(&mut rng);
        let ann = to_annotation(&segs);
        let hyp = ChangeHypothesis::new("r", preds).unwrap();
        let reports: Vec<_> = collars
            .iter()
            .map(|&c| score_changes(&ann, &hyp, c).unwrap())
            .collect();
        for w in reports.windows(2) {
            let le = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(x), Some(y)) => x <= y,
                (None, None) => true,
                _ => false,
            };
            ensure(le(w[0].precision, w[1].precision), || {
                format!("scenario {i}: precision {:?} -> {:?}", w[0].precision, w[1].precision)
            })?;
            ensure(le(w[0].recall_count, w[1].recall_count), || {
                format!("scenario {i}: recall {:?} -> {:?}", w[0].recall_count, w[1].recall_count)
            })?;
        }
    }
    Ok("100 scenarios x 5 collars".into())
}

fn f1_spot_check() -> Check {
    let a = format!("{:.1}", 100.0 * f1(0.781, 0.558));
    let b = format!("{:.1}", 100.0 * f1(0.776, 0.652));
    ensure(a == "65.1" && b == "70.9", || format!("got {a} and {b}"))?;
    Ok(format!("{a}, {b}"))
}

fn random_annotations(rng: &mut ChaCha8Rng, n: usize) -> Vec<Annotation> {
    (0..n)
        .map(|i| {
            let k = rng.gen_range(1..=8);
            let mut t_ms: u64 = rng.gen_range(0..5_000);
            let segs = (0..k)
                .map(|_| {
                    let start = t_ms.saturating_sub(rng.gen_range(0..1_500));
                    let end = start + rng.gen_range(1..20_000);
                    t_ms = end;
                    let spk = format!("spk{}", rng.gen_range(0..3));
                    SpeakerSegment::new(spk, start as f64 / 1000.0, end as f64 / 1000.0)
                })
                .collect();
            Annotation::new(format!("rec{i}"), segs).unwrap()
        })
        .collect()
}

fn io_round_trips() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for round in 0..50 {
        let n_rec = rng.gen_range(1..=5);
        let anns = random_annotations(&mut rng, n_rec);
        let text = write_rttm(&anns);
        let back = parse_rttm(&text).map_err(|e| e.to_string())?.annotations;
        ensure(back == anns, || format!("round {round}: RTTM round trip differs"))?;
        ensure(write_rttm(&back) == text, || format!("round {round}: RTTM text differs"))?;

        let stamps: Vec<ChangeHypothesis> = anns
            .iter()
            .map(|a| {
                let n = rng.gen_range(0..=6);
                let ts = (0..n).map(|_| rng.gen_range(0..60_000) as f64 / 1000.0).collect();
                ChangeHypothesis::new(a.recording_id.clone(), ts).unwrap()
            })
            .collect();
        let text = write_change_stamps(&stamps);
        let back = parse_change_stamps(&text).map_err(|e| e.to_string())?;
        ensure(back == stamps, || format!("round {round}: change stamps differ"))?;

        let batch: Vec<NBest> = (0..rng.gen_range(1..=4))
            .map(|i| {
                let mut n = random_nbest(&mut rng);
                n.utterance_id = format!("utt{i}");
                n
            })
            .collect();
        let text = write_nbest(&batch);
        let back = parse_nbest(&text).map_err(|e| e.to_string())?;
        ensure(back == batch, || format!("round {round}: N-best round trip differs"))?;
    }
    ensure(format_seconds(19.5) == "19.50" && format_seconds(0.125) == "0.125", || {
        "time formatting".into()
    })?;

    let failures: Vec<String> = common::GOLDEN
        .iter()
        .filter_map(|case| common::run_golden(case).err())
        .collect();
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("50 generated corpora, {} golden CLI outputs", common::GOLDEN.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("alignment oracle equivalence", alignment_oracle),
        ("levenshtein reduction", levenshtein_reduction),
        ("offset tolerance", offset_tolerance),
        ("risk arithmetic", risk_arithmetic),
        ("gradient correctness", gradient_check),
        ("toy training effect", toy_training),
        ("metrics fixtures", metrics_fixtures),
        ("collar monotonicity", collar_monotonicity),
        ("f1 spot check", f1_spot_check),
        ("i/o round trips and golden cli", io_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check)
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS  {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
