"""Command-line interface: ``reuseboost {bench,verify,boost,halfspace,rl}``.

Tables go to ``--out`` as CSV (or to stdout when ``--out`` is absent);
``--markdown`` renders the same cells as a markdown table on stdout. Run
metadata (seed, config hash, fresh samples drawn per algorithm) is logged to
stderr. Every random stream derives from ``--seed`` and the index of the
table cell, so outputs are byte-identical across runs.

A ``--config FILE`` holds flat ``key = value`` lines whose keys are the long
flag names (dashes or underscores); ``#`` starts a comment and flags given on
the command line win over the file.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 data error.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import pickle
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import rl_sim
from .booster import BoostConfig, boost
from .data import DataError, Dataset, NoisePlan, gen_halfspace, inject_noise, kfold, load_csv
from .estimators import AgnosticBoostClassifier, BHS20Classifier, KK09Classifier
from .oracles import exact_loss
from .sources import CallableSource, SourceExhausted
from .verify import run_suite
from .weak_learners import DecisionStump, ERMLearner, ParityLearner, fit_parity

log = logging.getLogger("reuseboost")

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_DATA = 0, 1, 2, 3
ALGOS = ("ours", "kk09", "bhs20")
BENCH_COLUMNS = ["dataset", "noise", "algo", "T", "sigma", "folds", "mean_accuracy",
                 "std_error", "samples_drawn"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def _add_booster_flags(p):
    p.add_argument("--relabel", choices=("stochastic", "fractional"), default="fractional")
    p.add_argument("--branch", choices=("threshold", "empirical-best"), default="empirical-best")
    p.add_argument("--step", choices=("fixed", "adaptive"), default="adaptive")


def build_parser():
    parser = _Parser(prog="reuseboost", description="Agnostic boosting with sample reuse.")
    parser.add_argument("--config", help="flat key = value file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--markdown", action="store_true", help="render the table as markdown")

    b = sub.add_parser("bench", help="cross-validated accuracy grid")
    b.add_argument("--dataset", action="append", required=True,
                   help="CSV path or builtin:NAME; repeatable")
    b.add_argument("--algo", action="append", choices=ALGOS)
    b.add_argument("--noise", type=_float_list, default=[0.0, 0.05, 0.10, 0.20])
    b.add_argument("--folds", type=int, default=30)
    b.add_argument("--grid-t", type=_int_list, default=[25, 50, 100])
    b.add_argument("--grid-sigma", type=_float_list, default=[0.1, 0.25, 0.5])
    b.add_argument("--eta", type=float, default=1.0)
    b.add_argument("--label-column", type=int, default=-1)
    b.add_argument("--header", action="store_true")
    _add_booster_flags(b)
    common(b)

    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    v.add_argument("--only", help="run groups whose name starts with this prefix")
    common(v)

    o = sub.add_parser("boost", help="fit one booster on a train/test split")
    o.add_argument("--dataset", required=True)
    o.add_argument("--algo", choices=ALGOS, default="ours")
    o.add_argument("--noise", type=float, default=0.0)
    o.add_argument("--rounds", type=int, default=50)
    o.add_argument("--sigma", type=float, default=0.25)
    o.add_argument("--eta", type=float, default=1.0)
    o.add_argument("--test-fraction", type=float, default=0.25)
    o.add_argument("--label-column", type=int, default=-1)
    o.add_argument("--header", action="store_true")
    o.add_argument("--save-model", help="pickle the fitted estimator here")
    _add_booster_flags(o)
    common(o)

    h = sub.add_parser("halfspace", help="parity boosting on a noisy hypercube halfspace")
    h.add_argument("--n", type=int, default=7)
    h.add_argument("--degree", type=int, default=1)
    h.add_argument("--epsilon", type=float, default=0.1, help="sets the holdout to 1/eps^2")
    h.add_argument("--corrupt", type=float, default=0.1)
    h.add_argument("--rounds", type=int, default=100)
    h.add_argument("--sigma", type=float, default=0.25)
    h.add_argument("--eta", type=float, default=0.5)
    h.add_argument("--fresh", type=int, default=100)
    h.add_argument("--weak-batch", type=int, default=1000)
    _add_booster_flags(h)
    common(h)

    r = sub.add_parser("rl", help="boost a policy on an MDP file")
    r.add_argument("mdp", help="MDP JSON path or builtin:NAME")
    r.add_argument("--rounds", type=int, default=10)
    r.add_argument("--access", choices=("episodic", "reset"), default="episodic")
    r.add_argument("--rollouts", type=int, default=1000)
    r.add_argument("--learner", choices=("stump", "constant"), default="stump")
    r.add_argument("--inner-rounds", type=int, default=10)
    r.add_argument("--fresh", type=int, default=200)
    r.add_argument("--sigma", type=float, default=0.5)
    r.add_argument("--eta", type=float, default=0.5)
    _add_booster_flags(r)
    common(r)
    return parser


def read_config(path):
    """Parse a flat ``key = value`` file into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, argv, cfg):
    """Parse with file values as defaults, converted by each flag's own type."""
    command = next((a for a in argv if a in COMMANDS), None)
    if command is None:
        return parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[command]
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    defaults = {}
    for key, value in cfg.items():
        if key not in actions:
            raise UsageError(f"config key {key!r} is not a flag of '{command}'")
        action = actions[key]
        if any(opt in argv or any(a.startswith(opt + "=") for a in argv)
               for opt in action.option_strings):
            continue
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
            continue
        items = [v.strip() for v in value.split(",")] if isinstance(action, argparse._AppendAction) \
            else [value]
        try:
            conv = [action.type(v) if action.type else v for v in items]
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices and any(c not in action.choices for c in conv):
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[key] = conv if isinstance(action, argparse._AppendAction) else conv[0]
    sub.set_defaults(**defaults)
    for a in sub._actions:
        if a.dest in defaults:
            a.required = False
    return parser.parse_args(argv)


def config_hash(args):
    keep = {k: v for k, v in sorted(vars(args).items())
            if k not in ("out", "markdown", "config", "save_model")}
    blob = json.dumps(keep, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _fixture(name):
    return resources.files("reuseboost").joinpath("fixtures", name)


def resolve_path(spec, suffix):
    if spec.startswith("builtin:"):
        path = _fixture(spec.split(":", 1)[1] + suffix)
        if not path.is_file():
            raise DataError(f"no bundled fixture named {spec!r}")
        return Path(str(path))
    return Path(spec)


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def emit_table(rows, columns, args):
    """Write ``rows`` (dicts) as CSV to ``--out`` or stdout; markdown on request."""
    cells = [[_fmt(row[c]) for c in columns] for row in rows]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(cells)
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    md = "\n".join(["| " + " | ".join(columns) + " |",
                    "|" + "|".join("---" for _ in columns) + "|"]
                   + ["| " + " | ".join(r) + " |" for r in cells]) + "\n"
    if args.markdown:
        sys.stdout.write(md)
    elif not args.out:
        sys.stdout.write(buf.getvalue())


def _cell_seed(seed, index):
    return np.random.SeedSequence([seed, index]).generate_state(1)[0]


def _estimator(algo, T, sigma, args, seed):
    if algo == "ours":
        return AgnosticBoostClassifier(n_rounds=T, sigma=sigma, eta=args.eta, relabel=args.relabel,
                                       branch=args.branch, step=args.step, random_state=seed)
    if algo == "kk09":
        return KK09Classifier(n_rounds=T, eta=args.eta, step=args.step, random_state=seed)
    return BHS20Classifier(n_rounds=T, eta=args.eta, step=args.step, branch=args.branch,
                           random_state=seed)


def cross_validate(data, algo, T, sigma, noise, folds, args, seed):
    """Per-fold test accuracies and total samples drawn; noise hits training folds only."""
    plan = kfold(len(data), folds, seed=seed)
    accs, drawn = [], 0
    for f, (train, test) in enumerate(plan.splits()):
        fold_seed = _cell_seed(seed, f)
        tr = inject_noise(data.subset(train), NoisePlan(noise, seed=fold_seed))
        est = _estimator(algo, T, sigma, args, fold_seed).fit(tr.X, tr.y)
        accs.append(float(np.mean(est.predict(data.X[test]) == data.y[test])))
        drawn += est.samples_drawn_
    return np.array(accs), drawn


def select_winner(scores):
    """Best ``(T, sigma)`` by mean accuracy; ties to smaller T, then smaller sigma."""
    return min(scores, key=lambda k: (-round(scores[k][0].mean(), 12), k[0], k[1]))


def cmd_bench(args):
    algos = args.algo or list(ALGOS)
    datasets = []
    for spec in args.dataset:
        try:
            datasets.append((spec, load_csv(resolve_path(spec, ".csv"), args.label_column,
                                            header=args.header)))
        except (OSError, DataError) as exc:
            log.warning("skipping dataset %s: %s", spec, exc)
    if not datasets:
        log.error("no dataset could be loaded")
        return EXIT_DATA
    rows, totals = [], dict.fromkeys(algos, 0)
    cell = 0
    for name, data in datasets:
        if args.folds > len(data) or args.folds < 2:
            log.warning("skipping dataset %s: cannot make %d folds", name, args.folds)
            continue
        for noise in args.noise:
            for algo in algos:
                cell += 1
                seed = _cell_seed(args.seed, cell)
                sigmas = args.grid_sigma if algo == "ours" else [float("nan")]
                scores = {}
                for T in args.grid_t:
                    for sigma in sigmas:
                        try:
                            scores[(T, sigma)] = cross_validate(data, algo, T, sigma, noise,
                                                                args.folds, args, seed)
                        except (ValueError, SourceExhausted) as exc:
                            log.warning("%s %s T=%d: %s", name, algo, T, exc)
                        else:
                            totals[algo] += scores[(T, sigma)][1]
                if not scores:
                    continue
                T, sigma = select_winner(scores)
                accs, drawn = scores[(T, sigma)]
                rows.append({"dataset": name, "noise": noise, "algo": algo, "T": T,
                             "sigma": "" if math.isnan(sigma) else sigma, "folds": args.folds,
                             "mean_accuracy": float(accs.mean()),
                             "std_error": float(accs.std(ddof=1) / math.sqrt(len(accs))),
                             "samples_drawn": drawn})
    for algo in algos:
        log.info("fresh samples drawn by %s: %d", algo, totals[algo])
    if not rows:
        log.error("every dataset was skipped")
        return EXIT_DATA
    emit_table(rows, BENCH_COLUMNS, args)
    return EXIT_OK


def cmd_verify(args):
    results = run_suite(args.level, args.seed, args.only)
    if not results:
        raise UsageError(f"no invariant group matches {args.only!r}")
    rows = [{"group": r.name, "module": r.module, "invariant": r.invariant,
             "status": "pass" if r.passed else "FAIL", "detail": r.detail} for r in results]
    emit_table(rows, ["group", "module", "invariant", "status", "detail"], args)
    failed = [r.name for r in results if not r.passed]
    log.info("%d groups, %d failed", len(results), len(failed))
    for name in failed:
        log.error("invariant failed: %s", name)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_boost(args):
    try:
        data = load_csv(resolve_path(args.dataset, ".csv"), args.label_column, header=args.header)
    except (OSError, DataError) as exc:
        log.error("cannot load %s: %s", args.dataset, exc)
        return EXIT_DATA
    if not 0 < args.test_fraction < 1:
        raise UsageError("--test-fraction must lie in (0, 1)")
    rng = np.random.default_rng(args.seed)
    perm = rng.permutation(len(data))
    n_test = max(1, int(round(args.test_fraction * len(data))))
    train = inject_noise(data.subset(perm[n_test:]), NoisePlan(args.noise, seed=args.seed))
    test = data.subset(perm[:n_test])
    est = _estimator(args.algo, args.rounds, args.sigma, args, args.seed)
    try:
        est.fit(train.X, train.y)
    except (ValueError, SourceExhausted) as exc:
        log.error("fit failed: %s", exc)
        return EXIT_DATA
    res = est.result_
    row = {"dataset": args.dataset, "algo": args.algo, "rounds": args.rounds,
           "train_accuracy": float(np.mean(est.predict(train.X) == train.y)),
           "test_accuracy": float(np.mean(est.predict(test.X) == test.y)),
           "selected_round": res.selected_round, "samples_drawn": res.samples_drawn,
           "weak_rounds": sum(t.branch == "weak" for t in res.trace)}
    log.info("fresh samples drawn by %s: %d", args.algo, res.samples_drawn)
    if args.save_model:
        with open(args.save_model, "wb") as fh:
            pickle.dump(est, fh)
    emit_table([row], list(row), args)
    return EXIT_OK


def run_halfspace(n, degree, corrupt, rounds, sigma, eta, fresh, weak_batch, holdout, seed,
                  relabel="fractional", branch="empirical-best", step="adaptive"):
    """Boost degree-``degree`` parities on majority of ``n`` bits with label noise.

    Returns a dict with the exact population accuracy of the boosted
    classifier and of the best single parity of that degree.
    """
    dist = gen_halfspace(n, corrupt_rate=corrupt)
    cfg = BoostConfig(rounds=rounds, step=eta, mix=sigma, fresh_per_round=fresh,
                      weak_batch=weak_batch, final_holdout=holdout, relabel_mode=relabel,
                      branch_mode=branch, step_mode=step)
    res = boost(CallableSource(dist.draw), ParityLearner(degree), cfg, seed)
    best, _ = fit_parity(dist.X, dist.y, degree, dist.probs)
    return {"n": n, "degree": degree, "corrupt": corrupt, "rounds": rounds,
            "boosted_accuracy": 1 - exact_loss(dist, res.final_hypothesis),
            "best_parity_accuracy": 1 - exact_loss(dist, best),
            "bayes_accuracy": 1 - corrupt, "samples_drawn": res.samples_drawn}


def cmd_halfspace(args):
    if not 0 < args.epsilon <= 1:
        raise UsageError("--epsilon must lie in (0, 1]")
    try:
        row = run_halfspace(args.n, args.degree, args.corrupt, args.rounds, args.sigma, args.eta,
                            args.fresh, args.weak_batch, math.ceil(1 / args.epsilon ** 2),
                            args.seed, args.relabel, args.branch, args.step)
    except DataError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    log.info("fresh samples drawn by ours: %d", row["samples_drawn"])
    emit_table([row], list(row), args)
    return EXIT_OK


def cmd_rl(args):
    try:
        mdp = rl_sim.load_mdp(resolve_path(args.mdp, ".json"))
    except (OSError, ValueError) as exc:
        log.error("cannot load %s: %s", args.mdp, exc)
        return EXIT_DATA
    learner = DecisionStump() if args.learner == "stump" else ERMLearner([1, -1])
    cfg = BoostConfig(rounds=args.inner_rounds, step=args.eta, mix=args.sigma,
                      fresh_per_round=args.fresh, weak_batch=2 * args.fresh,
                      final_holdout=2 * args.fresh, relabel_mode=args.relabel,
                      branch_mode=args.branch, step_mode=args.step)
    res = rl_sim.boost_policy(mdp, learner, args.access, args.rounds, P=args.rollouts,
                              booster_cfg=cfg, rng=args.seed)
    rows = []
    for t, (pol, est) in enumerate(zip(res.policies, res.value_estimates), 1):
        rows.append({"round": t, "rollout_value": float(est),
                     "exact_value": float(rl_sim.exact_value(mdp, pol) @ mdp.start),
                     "selected": int(t == res.selected_round)})
    log.info("environment steps: %d; clipped acceptance events: %d", res.env_steps, res.clipped)
    log.info("final exact value: %.6f", rows[res.selected_round - 1]["exact_value"])
    emit_table(rows, ["round", "rollout_value", "exact_value", "selected"], args)
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "verify": cmd_verify, "boost": cmd_boost,
            "halfspace": cmd_halfspace, "rl": cmd_rl}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO)
    log.propagate = False
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        args = parser.parse_args(argv) if not known.config else \
            _apply_config(parser, argv, read_config(known.config))
    except UsageError as exc:
        sys.stderr.write(f"reuseboost: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"reuseboost: error: cannot read config: {exc}\n")
        return EXIT_USAGE
    log.info("command=%s seed=%d config_hash=%s", args.command, args.seed, config_hash(args))
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"reuseboost: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
