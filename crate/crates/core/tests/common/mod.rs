//! Shared helpers for the acceptance suite.

use std::io::Write;

/// Prints one verdict line for a criterion and passes the verdict through.
///
/// The harness captures the print macros of passing tests, but the verdict
/// lines must stay visible in plain `cargo test` output, so the line goes
/// straight to the process's real stderr in one atomic write.
pub fn verdict(criterion: usize, name: &str, pass: bool, detail: &str) -> bool {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = if detail.is_empty() {
        format!("[{tag}] criterion {criterion:02}: {name}\n")
    } else {
        format!("[{tag}] criterion {criterion:02}: {name} ({detail})\n")
    };
    #[cfg(unix)]
    {
        use std::os::unix::io::FromRawFd;
        let mut stderr =
            std::mem::ManuallyDrop::new(unsafe { std::fs::File::from_raw_fd(2) });
        let _ = stderr.write_all(line.as_bytes());
    }
    #[cfg(not(unix))]
    {
        let _ = std::io::stderr().write_all(line.as_bytes());
    }
    pass
}

/// Accuracy of a plain multinomial logistic regression (full-batch gradient
/// descent on the softmax cross-entropy, zero-initialised, deterministic)
/// trained on `train` and scored on `eval`. The sanity oracle: when this
/// classical baseline solves a dataset, high model accuracy on it proves
/// nothing hard.
pub fn logistic_oracle_accuracy(
    train_x: &[Vec<f64>],
    train_y: &[u8],
    eval_x: &[Vec<f64>],
    eval_y: &[u8],
) -> f64 {
    const CLASSES: usize = 3;
    const STEPS: usize = 4000;
    const LEARNING_RATE: f64 = 10.0;
    const MOMENTUM: f64 = 0.9;
    const RIDGE: f64 = 1e-6;

    let d = train_x[0].len();
    // Row-major [class][feature..., bias].
    let mut w = vec![vec![0.0f64; d + 1]; CLASSES];
    let mut velocity = vec![vec![0.0f64; d + 1]; CLASSES];
    let n = train_x.len() as f64;

    let logits = |w: &[Vec<f64>], x: &[f64]| -> [f64; CLASSES] {
        let mut z = [0.0; CLASSES];
        for (k, row) in w.iter().enumerate() {
            z[k] = row[d] + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        }
        z
    };
    let softmax = |z: [f64; CLASSES]| -> [f64; CLASSES] {
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = z.map(|v| (v - m).exp());
        let s: f64 = e.iter().sum();
        e.map(|v| v / s)
    };

    for _ in 0..STEPS {
        let mut grad = vec![vec![0.0f64; d + 1]; CLASSES];
        for (x, &y) in train_x.iter().zip(train_y) {
            let p = softmax(logits(&w, x));
            for (k, g) in grad.iter_mut().enumerate() {
                let delta = p[k] - if k == y as usize { 1.0 } else { 0.0 };
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += delta * xi;
                }
                g[d] += delta;
            }
        }
        // Heavy-ball update with a light ridge; the near-separable data
        // needs large weights, which plain small-step descent reaches far
        // too slowly to certify learnability within the suite's budget.
        for ((row, v), g) in w.iter_mut().zip(&mut velocity).zip(&grad) {
            for ((wi, vi), gi) in row.iter_mut().zip(v).zip(g) {
                *vi = MOMENTUM * *vi - LEARNING_RATE * (gi / n + RIDGE * *wi);
                *wi += *vi;
            }
        }
    }

    let correct = eval_x
        .iter()
        .zip(eval_y)
        .filter(|(x, &y)| {
            let p = logits(&w, x);
            let pred = (0..CLASSES)
                .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap())
                .unwrap();
            pred == y as usize
        })
        .count();
    correct as f64 / eval_x.len() as f64
}
