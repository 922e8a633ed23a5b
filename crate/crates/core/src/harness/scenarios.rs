//! Scripted models and problems with known outcomes, used by the test suites
//! and by `adadec scenario` to write ready-to-run fixture files.

use crate::lm::{tokens, MockRule, TableMock, TokenId};

use super::Problem;

pub const EOS: TokenId = TokenId(0);
pub const WRONG: TokenId = TokenId(3);
pub const RIGHT: TokenId = TokenId(4);

fn dist(entries: &[(u32, f64)]) -> Vec<f64> {
    let mut p = vec![0.0; 10];
    for &(t, q) in entries {
        p[t as usize] = q;
    }
    p
}

/// Two-branch drift model.
///
/// After `def f():` and a confident body line, the model splits between
/// `return wrong` (p 0.45) and `return right` (p 0.44). The wrong branch
/// continues with top probabilities of 0.3; the right branch with 0.95.
/// Greedy takes the wrong branch. A two-candidate, two-token lookahead
/// scores the right branch higher.
pub fn drift_rescue_model() -> TableMock {
    let texts = [
        "",
        "def f():\n",
        "    x = 1\n",
        "    return wrong",
        "    return right",
        "\n",
        " # a",
        " # b",
        " # c",
        " # d",
    ];
    let rules = vec![
        MockRule {
            suffix: tokens(&[1]),
            probs: dist(&[(2, 0.97), (9, 0.03)]),
        },
        MockRule {
            suffix: tokens(&[2]),
            probs: dist(&[(3, 0.45), (4, 0.44), (9, 0.11)]),
        },
        MockRule {
            suffix: tokens(&[3]),
            probs: dist(&[(6, 0.3), (7, 0.25), (8, 0.25), (9, 0.2)]),
        },
        MockRule {
            suffix: tokens(&[6]),
            probs: dist(&[(7, 0.3), (8, 0.25), (9, 0.25), (5, 0.2)]),
        },
        MockRule {
            suffix: tokens(&[4]),
            probs: dist(&[(5, 0.95), (9, 0.05)]),
        },
        MockRule {
            suffix: tokens(&[5]),
            probs: dist(&[(0, 0.95), (9, 0.05)]),
        },
    ];
    TableMock::new(rules, dist(&[(0, 1.0)]))
        .expect("scenario distributions are normalised")
        .with_eos(EOS)
        .with_token_texts(texts.iter().map(|s| s.to_string()).collect())
        .expect("one text per token")
        .with_model_id("drift-rescue-mock")
}

/// The matching problem; its test passes only if the program returns `right`.
pub fn drift_rescue_problem() -> Problem {
    Problem::new("drift-rescue", tokens(&[1]))
        .with_reference(tokens(&[2, 4, 5, 0]))
        .with_test_command("grep -q 'return right' {program}")
}
