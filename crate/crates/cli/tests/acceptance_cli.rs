//! Acceptance criterion 8, CLI half: two `check` runs with the same
//! config produce byte-identical report files, and MORREYLAB_THREADS in
//! {1, 4} produces identical ratios.

use std::process::Command;

#[test]
fn criterion_8_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("accept.cfg"),
        "grid.points = 128\nbank.size = 3\n",
    )
    .unwrap();

    // Same config twice: byte-identical reports.
    for name in ["run1.json", "run2.json"] {
        let out = Command::new(env!("CARGO_BIN_EXE_morreylab"))
            .args([
                "check",
                "--experiment",
                "T1.1",
                "--config",
                "accept.cfg",
                "--out",
                name,
            ])
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let run1 = std::fs::read(dir.path().join("run1.json")).unwrap();
    let run2 = std::fs::read(dir.path().join("run2.json")).unwrap();
    assert_eq!(run1, run2, "same config produced different bytes");

    // Worker cap {1, 4}: identical ratios (and identical bytes).
    for (name, threads) in [("t1.json", "1"), ("t4.json", "4")] {
        let out = Command::new(env!("CARGO_BIN_EXE_morreylab"))
            .args([
                "check",
                "--experiment",
                "T4.2",
                "--config",
                "accept.cfg",
                "--out",
                name,
            ])
            .env("MORREYLAB_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let t1 = std::fs::read(dir.path().join("t1.json")).unwrap();
    let t4 = std::fs::read(dir.path().join("t4.json")).unwrap();
    assert_eq!(t1, t4, "thread cap changed the report");

    println!(
        "[PASS] criterion 8: byte-identical `check` runs; MORREYLAB_THREADS in {{1,4}} identical"
    );
}
