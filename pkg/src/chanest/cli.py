"""Command-line front end: ``chanest {gen-data,train,eval,prune,params}``.

Exit codes: 0 success, 2 configuration or usage error, 3 missing or corrupt
artifact, 4 numerical failure. ``CHANEST_THREADS`` caps the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from chanest._rng import keyed_seed
from chanest.channel import pilot_pattern, standard_pdp
from chanest.config import RunConfig
from chanest.errors import ArtifactError, ChanestError, ConfigError, NumericalError
from chanest.estimators import LSEstimator, MMSEEstimator, estimate_correlations
from chanest.models import (
    NeuralEstimator,
    build_model,
    check_weights,
    count_nonzero,
    count_parameters,
    load_checkpoint,
    prune_magnitude,
    save_checkpoint,
)
from chanest.pipeline import Dataset, TrainConfig, evaluate, generate_dataset, snr_grid, train
from chanest.tensor import LrSchedule

EXIT_OK, EXIT_CONFIG, EXIT_ARTIFACT, EXIT_NUMERICAL = 0, 2, 3, 4
THREADS_ENV = "CHANEST_THREADS"

# stream ids for seeds derived from the master seed
_EVAL_STREAM, _CORR_STREAM = 1, 2

log = logging.getLogger("chanest")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    return cfg.override("\n".join(args.set), "--set") if args.set else cfg


def _model_spec(cfg: RunConfig):
    pattern = pilot_pattern(cfg.pattern)
    return build_model(cfg.model, (*pattern.shape, 2), cfg.n_filter)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out or cfg.dataset)
    data = generate_dataset(standard_pdp(cfg.channel), pilot_pattern(cfg.pattern),
                            snr_grid(cfg.snr_min, cfg.snr_max, cfg.snr_step), cfg.n_per_snr,
                            cfg.seed, cfg.doppler_max, float32=cfg.float32_dataset)
    data.save(out)
    print(f"records={len(data)} sha256={_sha256(out)} path={out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_config(args)
    data_path = Path(args.dataset or cfg.dataset)
    data = Dataset.load(data_path)
    if data.pattern != pilot_pattern(cfg.pattern).name:
        raise ConfigError(f"{data_path}: dataset pattern {data.pattern!r} does not match config {cfg.pattern!r}")
    spec = _model_spec(cfg)
    tc = TrainConfig(max_epochs=cfg.epochs,
                     schedule=LrSchedule(cfg.learning_rate, cfg.drop_period, cfg.drop_factor),
                     minibatch=cfg.minibatch, l2=cfg.l2, validation_fraction=cfg.validation_fraction,
                     seed=cfg.seed, dtype=cfg.precision)
    result = train(spec, data, tc)
    ckpt = Path(args.checkpoint or cfg.checkpoint)
    save_checkpoint(ckpt, result.weights)
    loss_log = Path(args.loss_log or cfg.loss_log)
    loss_log.write_text(result.loss_csv())
    last = result.history[-1]
    print(f"epochs={len(result.history)} train_mse={last.train_mse:.6g} val_mse={last.val_mse:.6g} "
          f"checkpoint={ckpt}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    pattern = pilot_pattern(cfg.pattern)
    pdp = standard_pdp(args.channel or cfg.channel)
    estimators = []
    for name in cfg.estimator_names:
        if name == "ls":
            estimators.append(LSEstimator())
        elif name == "mmse":
            corr = estimate_correlations(pdp, pattern, cfg.correlation_realizations,
                                         keyed_seed(cfg.seed, _CORR_STREAM), max_doppler_hz=cfg.doppler_max)
            estimators.append(MMSEEstimator(corr))
        else:
            ckpt = Path(args.checkpoint or cfg.checkpoint)
            weights, _ = load_checkpoint(ckpt)
            spec = _model_spec(cfg)
            try:
                check_weights(spec, weights)
            except ChanestError as exc:
                raise ConfigError(f"{ckpt}: {exc}") from None
            estimators.append(NeuralEstimator(spec, weights))
    report = evaluate(estimators, pdp, pattern, snr_grid(cfg.eval_snr_min, cfg.eval_snr_max, cfg.eval_snr_step),
                      cfg.eval_frames, keyed_seed(cfg.seed, _EVAL_STREAM), cfg.doppler_max)
    out = args.out or cfg.report
    if out == "-":
        sys.stdout.write(report.to_csv())
    else:
        report.save(out)
        print(f"rows={len(report.rows)} path={out}")
    return EXIT_OK


def cmd_prune(args) -> int:
    weights, _ = load_checkpoint(args.checkpoint)
    pruned, mask = prune_magnitude(weights, args.rate)
    save_checkpoint(args.out, pruned, mask)
    zeroed = sum(int((~m).sum()) for m in mask.values())
    print(f"rate={args.rate} pruned={zeroed} path={args.out}")
    return EXIT_OK


def cmd_params(args) -> int:
    if args.nonzero:
        if not args.checkpoint:
            raise ConfigError("--nonzero needs --checkpoint")
        weights, _ = load_checkpoint(args.checkpoint)
        print(count_nonzero(weights))
        return EXIT_OK
    pattern = pilot_pattern(args.pattern)
    print(count_parameters(build_model(args.model, (*pattern.shape, 2), args.n_filter)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chanest", description="OFDM channel-estimation laboratory")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("-c", "--config", help="key = value run configuration (defaults if omitted)")
        p.add_argument("-s", "--set", action="append", metavar="KEY=VALUE", help="override one config key")
        return p

    p = with_config(sub.add_parser("gen-data", help="generate a training dataset"))
    p.add_argument("--out", help="dataset path (config: dataset)")
    p.set_defaults(func=cmd_gen_data)

    p = with_config(sub.add_parser("train", help="train a network on a dataset"))
    p.add_argument("--dataset", help="input dataset (config: dataset)")
    p.add_argument("--checkpoint", help="output checkpoint (config: checkpoint)")
    p.add_argument("--loss-log", help="per-epoch loss CSV (config: loss_log)")
    p.set_defaults(func=cmd_train)

    p = with_config(sub.add_parser("eval", help="MSE-vs-SNR report for the configured estimators"))
    p.add_argument("--checkpoint", help="network checkpoint (config: checkpoint)")
    p.add_argument("--channel", help="test channel model, overriding the config")
    p.add_argument("--out", help="report CSV, or - for stdout (config: report)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("prune", help="magnitude-prune a checkpoint")
    p.add_argument("--rate", type=float, required=True, help="fraction of kernel weights to zero")
    p.add_argument("--checkpoint", required=True, help="input checkpoint")
    p.add_argument("--out", required=True, help="output checkpoint with mask")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("params", help="print a parameter count")
    p.add_argument("--model", default="interp-resnet", help="interp-resnet, reesnet-a or reesnet-b")
    p.add_argument("--n-filter", type=int, default=8)
    p.add_argument("--pattern", default="default")
    p.add_argument("--checkpoint", help="checkpoint to inspect with --nonzero")
    p.add_argument("--nonzero", action="store_true", help="count nonzero weights in --checkpoint")
    p.set_defaults(func=cmd_params)
    return parser


def _threads() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with threadpool_limits(_threads()):
            return args.func(args)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ChanestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
