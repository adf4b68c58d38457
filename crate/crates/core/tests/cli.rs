use std::path::{Path, PathBuf};
use std::process::Command;

use bayes_pc::app::synthetic::sparse_instance;
use bayes_pc::app::{write_csv, FitReport};

#[path = "../examples/cli_inputs.rs"]
mod cli_inputs;

fn bpc(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bpc")).args(args).output().expect("bpc runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().expect("exited"), text)
}

fn run_cmd(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bpc(&args)
}

fn demo() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    cli_inputs::run(dir.path()).unwrap();
    dir
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn linear_subcommands_write_their_outputs() {
    let dir = demo();
    let cfg = dir.path().join("condition.toml");
    let expect: [(&str, &[&str]); 6] = [
        ("fit", &["coefficients.csv", "report.json", "rmse.csv", "rmse_summary.csv"]),
        ("predict", &["predict.json", "predictions.csv"]),
        ("moments", &["moments.json"]),
        ("sobol", &["sobol.csv", "sobol.json"]),
        ("condition-mean", &["coefficients.csv", "coefficients_conditioned.csv", "conditioned.json"]),
        ("oracle", &["oracle.json"]),
    ];
    for (cmd, wanted) in expect {
        let out = dir.path().join(format!("out_{cmd}"));
        let (code, text) = run_cmd(cmd, &cfg, &out, &[]);
        assert_eq!(code, 0, "{cmd}: {text}");
        let have = files(&out);
        for f in wanted {
            assert!(have.iter().any(|h| h == f), "{cmd} missing {f}: {have:?}");
        }
    }
    let oracle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out_oracle/oracle.json")).unwrap()).unwrap();
    assert!(oracle.is_object());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = demo();
    let cfg = dir.path().join("condition.toml");
    let report = |name: &str, seed: &str| -> FitReport {
        let out = dir.path().join(name);
        let (code, text) = run_cmd("fit", &cfg, &out, &["--seed", seed]);
        assert_eq!(code, 0, "{text}");
        FitReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
    };
    let a = report("a", "11");
    let b = report("b", "11");
    let c = report("c", "12");
    assert_eq!(a.config.split.as_ref().unwrap().seed, 11);
    assert_eq!(a.config.mcmc.seed, 11);
    assert_eq!(a, b);
    assert_ne!(a.trials, c.trials);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "noise_variance = \"loud\"\n").unwrap();
    assert_eq!(run_cmd("fit", &bad, &out, &[]).0, 2);
    let no_data = dir.path().join("no_data.toml");
    std::fs::write(
        &no_data,
        "noise_variance = 1.0\n[basis]\nfamily = \"legendre\"\nscheme = \"total_order\"\nmax_degree = 2\n[prior]\nkind = \"zero_gaussian\"\n",
    )
    .unwrap();
    assert_eq!(run_cmd("moments", &no_data, &out, &[]).0, 2);
    assert_eq!(run_cmd("fit", &dir.path().join("absent.toml"), &out, &[]).0, 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), "x1,y\n0.1,1\n0.2,oops\n").unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "noise_variance = 1.0\n[basis]\nfamily = \"legendre\"\nscheme = \"total_order\"\nmax_degree = 1\n\
         [data]\npath = \"t.csv\"\n[prior]\nkind = \"zero_gaussian\"\n",
    )
    .unwrap();
    let (code, text) = run_cmd("moments", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code, 3, "{text}");
    assert!(text.contains("row 3"), "{text}");
}

fn sparse_config(dir: &Path, mcmc: &str) -> PathBuf {
    let inst = sparse_instance(3, 30, 1).unwrap();
    write_csv(&inst.train, &dir.join("sparse.csv"), None).unwrap();
    let cfg = dir.join("hs.toml");
    std::fs::write(
        &cfg,
        format!(
            "noise_variance = 0.01\n[basis]\nfamily = \"legendre\"\nscheme = \"total_order\"\nmax_degree = 2\n\
             [data]\npath = \"sparse.csv\"\n[prior]\nkind = \"horseshoe\"\nnu = 25.0\ns = 3.0\nbeta = 0.1\n\
             [mcmc]\n{mcmc}\n[split]\ntrain_sizes = [15]\nn_trials = 1\nseed = 3\n[moments]\nsamples = 1000\n"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn horseshoe_fit_runs_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sparse_config(dir.path(), "chains = 2\nwarmup = 300\ndraws = 300\nseed = 3");
    let out = dir.path().join("out");
    let (code, text) = run_cmd("fit", &cfg, &out, &[]);
    assert_eq!(code, 0, "{text}");
    let report = FitReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.median(15, "horseshoe").is_some());
    assert!(report.converged);
    let (code, text) = run_cmd("sobol", &cfg, &dir.path().join("sobol"), &[]);
    assert_eq!(code, 0, "{text}");
}

#[test]
fn unconverged_sampler_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sparse_config(dir.path(), "chains = 4\nwarmup = 100\ndraws = 4\nseed = 1\nmax_leapfrog = 1\ninit_scale = 5.0\ntrajectory_length = 0.01");
    let (code, text) = run_cmd("moments", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code, 5, "{text}");
    assert!(text.contains("R-hat"), "{text}");
}

#[test]
fn coregional_subcommand_reports_both_models() {
    let dir = demo();
    let cfg = dir.path().join("coregional.toml");
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("max_degree = 2", "max_degree = 1")
        .replace("warmup = 300\ndraws = 300", "warmup = 150\ndraws = 150");
    let small = dir.path().join("small.toml");
    std::fs::write(&small, text).unwrap();
    let out = dir.path().join("out");
    let (code, text) = run_cmd("coregional", &small, &out, &[]);
    assert!(code == 0 || code == 5, "{text}");
    let have = files(&out);
    assert!(have.contains(&"coregional.json".to_string()), "{have:?}");
}

#[test]
fn help_lists_every_subcommand() {
    let (code, text) = bpc(&["--help"]);
    assert_eq!(code, 0);
    for cmd in ["fit", "predict", "moments", "sobol", "condition-mean", "coregional", "oracle"] {
        assert!(text.contains(cmd), "{cmd}");
    }
    assert_eq!(bpc(&["fit"]).0, 2);
}
