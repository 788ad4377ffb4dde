"""Command-line harness: synth, fit, active, compare, treat, serve.

Every command takes explicit seeds, prints each file it writes, and exits with
a distinct code per failure class: 0 success, 2 flag errors (argparse), 3
missing input file, 4 oracle timeout, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import sys
import threading
from pathlib import Path

import numpy as np

from . import __version__
from .active import (
    ActiveLearningState,
    CoxModelClass,
    EpiSelector,
    RandomSelector,
    RsfModelClass,
    build_represented_state,
    run_active_loop,
    write_history_csv,
)
from .cox import CoxConfig, concordance_index, fit_cox
from .data import (
    Dataset,
    SplitSpec,
    SynthConfig,
    generate,
    load_csv,
    load_truth_csv,
    split,
    write_csv,
    write_truth_csv,
)
from .errors import OracleTimeoutError, SurvactError
from .oracle import GroundTruthOracle
from .rsf import RsfConfig, fit_rsf
from .sae import SaeConfig, SaeWeights, train_sae
from .service import HumanOracle, OracleGateway, create_app
from .treatment import (
    RecommendConfig,
    baseline_hazard_ratios,
    format_report,
    recommend,
    write_report_csv,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_ORACLE_TIMEOUT = 4


def _emit(path: Path) -> None:
    print(str(path))


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    return p


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _sae_config(args) -> SaeConfig | None:
    widths = _parse_ints(args.encoder_widths) if args.encoder_widths else []
    if not widths:
        return None
    return SaeConfig(
        layer_sizes=tuple(widths),
        epochs=args.sae_epochs,
        seed=args.seed,
    )


def _model_class(name: str, seed: int):
    if name == "cox":
        return CoxModelClass(CoxConfig())
    return RsfModelClass(RsfConfig(n_trees=50, seed=seed))


def _selector(name: str, args, seed):
    if name == "random":
        return RandomSelector(seed=seed)
    return EpiSelector(grid_size=args.grid_size, subsample=args.subsample or None, seed=seed)


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    beta = _parse_floats(args.beta) if args.beta else [0.0] * args.p
    if args.baseline == "exponential":
        baseline = ("exponential", args.rate)
    else:
        baseline = ("weibull", args.shape, args.scale)
    treatment_betas = None
    if args.treatment:
        treatment_betas = {}
        for item in args.treatment:
            name, _, value = item.partition("=")
            treatment_betas[name] = float(value)
    config = SynthConfig(
        n=args.n,
        p=args.p,
        true_beta=tuple(beta),
        baseline=baseline,
        censoring_rate=args.censoring_rate,
        treatment_betas=treatment_betas,
        seed=args.seed,
    )
    data, latent = generate(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(data, out)
    _emit(out)
    truth = out.parent / (out.stem + ".truth.csv")
    write_truth_csv(latent, truth)
    _emit(truth)
    return EXIT_OK


def cmd_fit(args) -> int:
    data = load_csv(_require_file(args.data))
    if args.model == "cox":
        model = fit_cox(data, CoxConfig())
        c = concordance_index(model.risk_scores(data.covariates), data)
        print(f"model=cox converged={model.converged} iterations={model.iterations}")
        print(f"log_partial_likelihood={model.log_partial_likelihood:.6f} train_c_index={c.c_index:.4f}")
        for name, b in zip(model.feature_names, model.beta):
            print(f"  {name}: beta={b:+.6f} hazard_ratio={np.exp(b):.4f}")
        if args.out:
            import json

            payload = {
                "model": "cox",
                "feature_names": model.feature_names,
                "beta": model.beta.tolist(),
                "log_partial_likelihood": model.log_partial_likelihood,
                "converged": model.converged,
            }
            out = Path(args.out)
            out.write_text(json.dumps(payload, indent=2))
            _emit(out)
    else:
        model = fit_rsf(data, RsfConfig(n_trees=args.trees, seed=args.seed))
        c = concordance_index(model.risk_scores(data.covariates), data)
        print(f"model=rsf n_trees={args.trees} seed={args.seed} train_c_index={c.c_index:.4f}")
    return EXIT_OK


def _load_pair(args) -> tuple[Dataset, dict]:
    data = load_csv(_require_file(args.data))
    truth = load_truth_csv(_require_file(args.truth))
    return data, truth


def cmd_active(args) -> int:
    data, truth = _load_pair(args)
    spec = SplitSpec(args.train_n, args.pool_n, args.validation_n, seed=args.seed)
    parts = split(data, spec, truth)
    weights = SaeWeights.load(_require_file(args.load_encoder)) if args.load_encoder else None
    sae_config = _sae_config(args) if weights is None else None
    if weights is None and sae_config is not None and args.save_encoder:
        union = np.vstack([parts.train.covariates, parts.pool.covariates])
        weights = train_sae(union, sae_config)
    state = build_represented_state(parts, args.rounds, sae_config, weights=weights)
    if args.save_encoder and weights is not None:
        weights.save(args.save_encoder)
        _emit(Path(args.save_encoder))
    selector = _selector(args.strategy, args, args.seed)
    model_class = _model_class(args.model, args.seed)

    state = run_active_loop(state, GroundTruthOracle(truth), model_class, selector)
    if state.error:
        print(f"run aborted: {state.error}", file=sys.stderr)
        return EXIT_FAILURE

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_history_csv(state, out)
    _emit(out)
    print(f"rounds={state.round} c_index_start={state.history[0][1]:.4f} c_index_final={state.history[-1][1]:.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    sizes = _parse_ints(args.sizes)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    strategies = ("epi", "random")
    summary_rows = []

    for size in sizes:
        curves: dict[str, list[list[float]]] = {s: [] for s in strategies}
        for run in range(args.runs):
            n = size + args.pool_n + args.validation_n
            config = SynthConfig(
                n=n,
                p=args.p,
                true_beta=tuple(_parse_floats(args.beta)) if args.beta else tuple([0.5] * args.p),
                censoring_rate=args.censoring_rate,
                seed=(args.seed, size, run),
            )
            data, truth = generate(config)
            parts = split(data, SplitSpec(size, args.pool_n, args.validation_n, seed=(args.seed, run)), truth)
            sae_config = _sae_config(args)
            for strategy in strategies:
                state = build_represented_state(parts, args.rounds, sae_config)
                selector = _selector(strategy, args, (args.seed, size, run))
                model_class = _model_class(args.model, args.seed)
                state = run_active_loop(state, GroundTruthOracle(truth), model_class, selector)
                if state.error:
                    print(f"run aborted: {state.error}", file=sys.stderr)
                    return EXIT_FAILURE
                curves[strategy].append([c for _, c in state.history])

        for strategy in strategies:
            rounds_matrix = np.array(curves[strategy])
            mean_curve = rounds_matrix.mean(axis=0)
            curve_path = out_dir / f"curve_{args.model}_{strategy}_size{size}.csv"
            with curve_path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["round", "mean_c_index"])
                for rnd, value in enumerate(mean_curve):
                    writer.writerow([rnd, repr(float(value))])
            _emit(curve_path)
            summary_rows.append(
                [
                    args.model,
                    strategy,
                    size,
                    args.runs,
                    repr(float(mean_curve[0])),
                    repr(float(mean_curve[-1])),
                ]
            )

    summary_path = out_dir / "summary.csv"
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "strategy", "training_size", "runs", "mean_round0_c_index", "mean_final_c_index"])
        writer.writerows(summary_rows)
    _emit(summary_path)
    return EXIT_OK


def cmd_treat(args) -> int:
    data, truth = _load_pair(args)
    treatments = [t.strip() for t in args.treatments.split(",") if t.strip()]
    widths = _parse_ints(args.encoder_widths) if args.encoder_widths else [12, 5]
    config = RecommendConfig(
        runs=args.runs,
        rounds=args.rounds,
        seed=args.seed,
        train_n=args.train_n,
        validation_n=args.validation_n,
        sae=SaeConfig(layer_sizes=tuple(widths), epochs=args.sae_epochs, seed=args.seed),
        pool_subsample=args.subsample or None,
        grid_size=args.grid_size,
    )
    report = recommend(data, truth, treatments, config)
    baseline = baseline_hazard_ratios(data, treatments)
    print(format_report(report, baseline))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, out)
    _emit(out)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    data = load_csv(_require_file(args.data))
    spec = SplitSpec(args.train_n, args.pool_n, args.validation_n, seed=args.seed)
    parts = split(data, spec)
    state = build_represented_state(parts, args.rounds, _sae_config(args))
    gateway = OracleGateway()
    oracle = HumanOracle(gateway, timeout=args.timeout_seconds)
    selector = _selector(args.strategy, args, args.seed)
    model_class = _model_class(args.model, args.seed)

    server = uvicorn.Server(
        uvicorn.Config(create_app(gateway), host=args.host, port=args.port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    print(f"labeling gateway listening on http://{args.host}:{args.port}")

    try:
        state = run_active_loop(state, oracle, model_class, selector, status_sink=gateway.update_status)
    finally:
        server.should_exit = True
        thread.join(timeout=10)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    history_path = out_dir / "history.csv"
    write_history_csv(state, history_path)
    _emit(history_path)
    answers_path = out_dir / "answers.csv"
    gateway.write_answer_log(answers_path)
    _emit(answers_path)

    if state.error:
        print(f"run aborted: {state.error}", file=sys.stderr)
        return EXIT_ORACLE_TIMEOUT if "within" in state.error else EXIT_FAILURE
    print(f"rounds={state.round} final c_index={state.history[-1][1]:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="survact", description=__doc__)
    parser.add_argument("--version", action="version", version=f"survact {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic dataset plus its latent-truth sidecar")
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--p", type=int, required=True)
    synth.add_argument("--beta", default="", help="comma-separated true coefficients (default zeros)")
    synth.add_argument("--baseline", choices=("exponential", "weibull"), default="exponential")
    synth.add_argument("--rate", type=float, default=0.05)
    synth.add_argument("--shape", type=float, default=1.5)
    synth.add_argument("--scale", type=float, default=24.0)
    synth.add_argument("--censoring-rate", type=float, default=0.2)
    synth.add_argument("--treatment", action="append", metavar="NAME=BETA")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    fit = sub.add_parser("fit", help="fit a survival model on a CSV dataset")
    fit.add_argument("--data", required=True)
    fit.add_argument("--model", choices=("cox", "rsf"), default="cox")
    fit.add_argument("--trees", type=int, default=200)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default="")
    fit.set_defaults(func=cmd_fit)

    def loop_flags(p, need_truth=True):
        p.add_argument("--data", required=True)
        if need_truth:
            p.add_argument("--truth", required=True)
        p.add_argument("--train-n", type=int, default=25)
        p.add_argument("--pool-n", type=int, default=200)
        p.add_argument("--validation-n", type=int, default=100)
        p.add_argument("--rounds", type=_positive_int, default=20)
        p.add_argument("--model", choices=("cox", "rsf"), default="cox")
        p.add_argument("--grid-size", type=int, default=10)
        p.add_argument("--subsample", type=int, default=0, help="score at most this many pool records per round (0 = all)")
        p.add_argument("--encoder-widths", default="", help="comma-separated encoder widths, e.g. 12,5 (empty = raw features)")
        p.add_argument("--sae-epochs", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)

    active = sub.add_parser("active", help="one active-learning run against the ground-truth oracle")
    loop_flags(active)
    active.add_argument("--strategy", choices=("epi", "random"), default="epi")
    active.add_argument("--save-encoder", default="", help="write the trained encoder weights to this JSON file")
    active.add_argument("--load-encoder", default="", help="reuse encoder weights saved by a previous run")
    active.add_argument("--out", required=True)
    active.set_defaults(func=cmd_active)

    compare = sub.add_parser("compare", help="strategy-vs-baseline grid on synthetic data")
    compare.add_argument("--model", choices=("cox", "rsf"), default="cox")
    compare.add_argument("--sizes", default="25", help="comma-separated training sizes")
    compare.add_argument("--rounds", type=_positive_int, default=20)
    compare.add_argument("--runs", type=_positive_int, default=10)
    compare.add_argument("--p", type=int, default=20)
    compare.add_argument("--beta", default="", help="true coefficients for the generator")
    compare.add_argument("--censoring-rate", type=float, default=0.2)
    compare.add_argument("--pool-n", type=int, default=200)
    compare.add_argument("--validation-n", type=int, default=100)
    compare.add_argument("--grid-size", type=int, default=10)
    compare.add_argument("--subsample", type=int, default=0)
    compare.add_argument("--encoder-widths", default="12,5")
    compare.add_argument("--sae-epochs", type=int, default=100)
    compare.add_argument("--seed", type=int, default=0)
    compare.add_argument("--out", required=True, help="output directory")
    compare.set_defaults(func=cmd_compare)

    treat = sub.add_parser("treat", help="rank treatment hazard ratios via the active loop")
    treat.add_argument("--data", required=True)
    treat.add_argument("--truth", required=True)
    treat.add_argument("--treatments", required=True, help="comma-separated treatment column names")
    treat.add_argument("--runs", type=_positive_int, default=10)
    treat.add_argument("--rounds", type=_positive_int, default=20)
    treat.add_argument("--train-n", type=int, default=50)
    treat.add_argument("--validation-n", type=int, default=40)
    treat.add_argument("--grid-size", type=int, default=10)
    treat.add_argument("--subsample", type=int, default=0)
    treat.add_argument("--encoder-widths", default="12,5")
    treat.add_argument("--sae-epochs", type=int, default=100)
    treat.add_argument("--seed", type=int, default=0)
    treat.add_argument("--out", required=True)
    treat.set_defaults(func=cmd_treat)

    serve = sub.add_parser("serve", help="serve the labeling gateway and block on a human oracle")
    loop_flags(serve, need_truth=False)
    serve.add_argument("--strategy", choices=("epi", "random"), default="epi")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--timeout-seconds", type=float, default=300.0)
    serve.add_argument("--out", required=True, help="output directory")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except OracleTimeoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_TIMEOUT
    except SurvactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
