use proptest::prelude::*;
use scitower::decision::{
    cantor_unpair, decide_exact, decide_stage, horizon, level_horizon, Answer, FinDesc, MatrixDesc, Problem, SeqDesc,
};

fn seq_strategy() -> impl Strategy<Value = SeqDesc> {
    prop_oneof![
        prop::collection::vec(1u64..30, 0..5).prop_map(|v| SeqDesc::support(&v)),
        (prop::collection::vec(0u8..2, 0..6), prop::collection::vec(prop::bool::weighted(0.3), 1..4))
            .prop_map(|(pre, per)| SeqDesc::periodic(&pre, &per.into_iter().map(u8::from).collect::<Vec<_>>())),
    ]
}

fn matrix_strategy() -> impl Strategy<Value = MatrixDesc> {
    prop_oneof![
        1 => prop::collection::vec((1u64..10, 1u64..10), 0..6).prop_map(|v| MatrixDesc::support(&v)),
        4 => (prop::collection::vec(seq_strategy(), 0..4), prop::collection::vec(seq_strategy(), 1..3))
            .prop_map(|(pre, per)| MatrixDesc::columns(pre, per)),
    ]
}

fn input_for(problem: Problem) -> BoxedStrategy<FinDesc> {
    if problem.on_sequences() {
        seq_strategy().prop_map(FinDesc::Sequence).boxed()
    } else {
        matrix_strategy().prop_map(FinDesc::Matrix).boxed()
    }
}

fn problem_strategy() -> impl Strategy<Value = Problem> {
    prop::sample::select(Problem::ALL.to_vec())
}

/// Stage answers straight from the entries.
fn brute_stage(problem: Problem, x: &FinDesc, idx: &[u64]) -> bool {
    let s = |n: u64| match x {
        FinDesc::Sequence(s) => (1..=n).filter(|&i| s.entry(i)).count() as u64,
        FinDesc::Matrix(a) => (1..=n).filter(|&k| {
            let (i, j) = cantor_unpair(k);
            a.entry(i, j)
        })
        .count() as u64,
    };
    let col = |j: u64, n: u64| match x {
        FinDesc::Matrix(a) => (1..=n).filter(|&i| a.entry(i, j)).count() as u64,
        FinDesc::Sequence(_) => unreachable!(),
    };
    match problem {
        Problem::Xi1 | Problem::Xi3 => s(idx[0]) > 0,
        Problem::Xi2 | Problem::Xi4 => s(idx[1]) > idx[0],
        Problem::Xi5 => (1..=idx[0]).any(|j| col(j, idx[2]) > idx[1]),
        Problem::Xi6 => (1..=idx[1]).filter(|&j| col(j, idx[3]) > idx[2]).count() as u64 > idx[0],
        Problem::Xi7 => ((1..=idx[1]).filter(|&j| col(j, idx[2]) < idx[1]).count() as u64) < idx[0],
    }
}

fn with_input() -> impl Strategy<Value = (Problem, FinDesc)> {
    problem_strategy().prop_flat_map(|p| (Just(p), input_for(p)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn stage_matches_entrywise_count((problem, x) in with_input(), idx in prop::collection::vec(1u64..25, 4)) {
        let idx = &idx[..problem.height()];
        prop_assert_eq!(decide_stage(problem, &x, idx).unwrap(), Answer::from(brute_stage(problem, &x, idx)));
    }

    /// Past every level horizon the stage equals the exact answer.
    #[test]
    fn stages_stabilize((problem, x) in with_input(), offsets in prop::collection::vec(0u64..6, 4)) {
        let mut idx = Vec::new();
        for level in 0..problem.height() {
            let h = level_horizon(problem, &x, &idx).unwrap();
            idx.push(h + offsets[level]);
        }
        prop_assert_eq!(decide_stage(problem, &x, &idx).unwrap(), decide_exact(problem, &x).unwrap(), "{:?}", idx);
        let h = horizon(problem, &x).unwrap();
        prop_assert_eq!(decide_stage(problem, &x, &h).unwrap(), decide_exact(problem, &x).unwrap());
    }

    /// Xi2 at fixed m: once yes, yes for every larger n.
    #[test]
    fn xi2_monotone_in_n(s in seq_strategy(), m in 1u64..6) {
        let x = FinDesc::Sequence(s);
        let mut seen_yes = false;
        for n in 1..80 {
            let yes = decide_stage(Problem::Xi2, &x, &[m, n]).unwrap() == Answer::Yes;
            prop_assert!(!seen_yes || yes);
            seen_yes |= yes;
        }
    }

    #[test]
    fn json_roundtrip((_, x) in with_input()) {
        prop_assert_eq!(FinDesc::from_json(&x.to_json()).unwrap(), x);
    }
}

#[test]
fn spelled_out_examples() {
    let ones = FinDesc::Sequence(SeqDesc::periodic(&[], &[1]));
    assert_eq!(decide_stage(Problem::Xi2, &ones, &[5, 10]).unwrap(), Answer::Yes);
    let two = FinDesc::Sequence(SeqDesc::support(&[1, 3]));
    assert_eq!(decide_stage(Problem::Xi2, &two, &[2, 100]).unwrap(), Answer::No);
    let s = FinDesc::Sequence(SeqDesc::periodic(&[1, 1, 0], &[0]));
    assert_eq!(decide_exact(Problem::Xi2, &s).unwrap(), Answer::No);
    let ones_col = SeqDesc::periodic(&[], &[1]);
    let three = FinDesc::Matrix(MatrixDesc::columns(vec![ones_col.clone(); 3], vec![SeqDesc::zeros()]));
    assert_eq!(decide_exact(Problem::Xi6, &three).unwrap(), Answer::No);
    let all = FinDesc::Matrix(MatrixDesc::columns(vec![], vec![ones_col]));
    assert_eq!(decide_exact(Problem::Xi6, &all).unwrap(), Answer::Yes);
    assert_eq!(decide_exact(Problem::Xi7, &all).unwrap(), Answer::Yes);
}

#[test]
fn problem_names() {
    for p in Problem::ALL {
        assert_eq!(p.to_string().parse::<Problem>().unwrap(), p);
    }
    assert_eq!("3".parse::<Problem>().unwrap(), Problem::Xi3);
    assert!("xi8".parse::<Problem>().is_err());
}
