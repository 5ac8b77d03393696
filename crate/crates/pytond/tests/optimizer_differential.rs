//! Semantics preservation of the optimizer against the reference
//! interpreter: random pipelines over random databases, all levels.

mod common;

use pytond::optimizer::{optimize, OptLevel};
use pytond::oracle::{bag_compare, eval_program};
use pytond::testkit::gen_pipeline;
use pytond::tondir::{print_program, validate, Severity};

const LEVELS: [OptLevel; 4] = [OptLevel::O1, OptLevel::O2, OptLevel::O3, OptLevel::O4];

#[test]
fn random_pipelines_are_oracle_equal_across_levels() {
    for seed in 0..120u64 {
        let case = gen_pipeline(seed);
        let baseline = eval_program(&case.program, &case.db)
            .unwrap_or_else(|e| panic!("seed {seed}: O0 eval failed: {e}"));
        for level in LEVELS {
            let opt = optimize(&case.program, level, &case.catalog);
            let diags = validate(&opt);
            assert!(
                !diags.iter().any(|d| d.severity == Severity::Error),
                "seed {seed} {level:?}: invalid output\n{}",
                print_program(&opt)
            );
            let got = eval_program(&opt, &case.db)
                .unwrap_or_else(|e| panic!("seed {seed} {level:?}: eval failed: {e}"));
            let diff = bag_compare(&baseline, &got, false);
            assert!(
                diff.is_equal(),
                "seed {seed} {level:?}: results diverge: {diff:?}\nbefore:\n{}\nafter:\n{}",
                print_program(&case.program),
                print_program(&opt)
            );
        }
    }
}

#[test]
fn dce_never_grows_programs() {
    use pytond::optimizer::{global_dce, local_dce};
    fn size(p: &pytond::tondir::ast::Program) -> (usize, usize, usize) {
        let atoms: usize = p.rules.iter().map(|r| r.body.len()).sum();
        let arity: usize = p.rules.iter().map(|r| r.head.rel.vars.len()).sum();
        (p.rules.len(), atoms, arity)
    }
    for seed in 0..150u64 {
        let case = gen_pipeline(seed);
        let before = size(&case.program);
        let local = local_dce(&case.program);
        let after_local = size(&local);
        assert!(after_local <= before, "seed {seed}: local DCE grew the program");
        let global = global_dce(&case.program);
        let after_global = size(&global);
        assert!(
            after_global <= before,
            "seed {seed}: global DCE grew the program"
        );
    }
}

#[test]
fn optimizer_passes_are_idempotent_on_random_pipelines() {
    for seed in 0..60u64 {
        let case = gen_pipeline(seed);
        for level in LEVELS {
            let once = optimize(&case.program, level, &case.catalog);
            let twice = optimize(&once, level, &case.catalog);
            assert_eq!(
                once,
                twice,
                "seed {seed} {level:?}: optimize is not idempotent\nonce:\n{}",
                print_program(&once)
            );
        }
    }
}

#[test]
fn o0_is_identity_everywhere() {
    for seed in 0..40u64 {
        let case = gen_pipeline(seed);
        assert_eq!(
            optimize(&case.program, OptLevel::O0, &case.catalog),
            case.program
        );
    }
}
