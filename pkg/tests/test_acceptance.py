"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The desk-scale network (Interpolation-ResNet-4F, 2,000 EPA training records,
20 epochs) is trained once per session and shared by criteria 6, 7 and 9.
"""

import math
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import special

from chanest import cli
from chanest.channel import (
    ALTERNATE_PATTERN,
    DEFAULT_PATTERN,
    OfdmConfig,
    generate_channel,
    simulate_frame,
    standard_pdp,
)
from chanest.estimators import LSEstimator, MMSEEstimator, estimate_correlations, ls_estimate
from chanest.models import (
    NeuralEstimator,
    build_interpolation_resnet,
    build_reesnet,
    count_parameters,
    prune_magnitude,
    reesnet_stride,
)
from chanest.pipeline import TrainConfig, evaluate, generalization_suite, generate_dataset, snr_grid, train
from chanest.tensor import Tensor, add_n, bilinear_resize, conv2d, mse_loss, relu, transposed_conv2d
from gradcheck import numeric_grad, relative_error

CFG = OfdmConfig()
EPA, EVA, ETU = (standard_pdp(n) for n in ("EPA", "EVA", "ETU"))

RESULTS: dict[int, str] = {}

# desk-scale training run shared by criteria 6, 7 and 9
DESK_FILTERS = 4
DESK_RECORDS_PER_SNR = 100  # 21 SNRs -> 2,100 records, 1,995 after the 5% validation split
DESK_EPOCHS = 20
# Same optimizer updates per epoch as the reference run (95,000 records at 128 per batch),
# so the per-epoch rate schedule keeps its meaning: round(1995 * 128 / 95000) = 3.
DESK_MINIBATCH = 3
DESK_TRAIN = TrainConfig(max_epochs=DESK_EPOCHS, minibatch=DESK_MINIBATCH, seed=11)
TEST_FRAMES = 500
TEST_SEED = 2024


@contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException as exc:
        detail = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        RESULTS[number] = f"criterion {number:2d} FAIL  {title}: {detail}"
        print(RESULTS[number])
        raise
    RESULTS[number] = f"criterion {number:2d} PASS  {title}"
    print(RESULTS[number])


@pytest.fixture(scope="module")
def desk_model():
    data = generate_dataset(EPA, DEFAULT_PATTERN, snr_grid(0, 20), DESK_RECORDS_PER_SNR, seed=5)
    spec = build_interpolation_resnet(DESK_FILTERS, (*DEFAULT_PATTERN.shape, 2))
    result = train(spec, data, DESK_TRAIN)
    return spec, result


@pytest.fixture(scope="module")
def epa_report(desk_model):
    spec, result = desk_model
    corr = estimate_correlations(EPA, DEFAULT_PATTERN, 10_000, seed=3)
    estimators = [LSEstimator(), MMSEEstimator(corr), NeuralEstimator(spec, result.weights)]
    return evaluate(estimators, EPA, DEFAULT_PATTERN, [0, 5, 10, 15, 20], TEST_FRAMES, seed=TEST_SEED)


def test_01_parameter_counts():
    with criterion(1, "Interpolation-ResNet parameter counts match the complexity table exactly"):
        expected = {2: 1390, 4: 3426, 6: 6110, 8: 9442, 10: 13422}
        got = {n: count_parameters(build_interpolation_resnet(n, (*DEFAULT_PATTERN.shape, 2))) for n in expected}
        assert got == expected, f"{got}"


def _grad_cases(rng):
    """(name, forward(*arrays) -> Tensor, arrays) for every differentiable op."""
    x = rng.normal(size=(2, 4, 5, 2))
    k = rng.normal(size=(3, 3, 2, 3))
    b = rng.normal(size=3)
    xt = rng.normal(size=(2, 3, 2, 2))
    kt = rng.normal(size=(3, 2, 2, 3))
    r = rng.normal(size=(2, 3, 4, 2))
    r = np.where(np.abs(r) < 0.05, 0.5, r)  # keep finite differences away from the kink
    a, c, d = (rng.normal(size=(3, 4, 2)) for _ in range(3))
    pred, label = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
    return [
        ("conv2d", lambda *t: conv2d(*t), [x, k, b]),
        ("conv2d_even_kernel", lambda *t: conv2d(*t), [x, rng.normal(size=(2, 4, 2, 3)), b]),
        ("transposed_conv2d", lambda *t: transposed_conv2d(*t, (3, 2), (8, 5)), [xt, kt, b]),
        ("relu", lambda t: relu(t), [r]),
        ("add_n", lambda *t: add_n(t), [a, c, d]),
        ("bilinear_resize", lambda t: bilinear_resize(t, (7, 6)), [r]),
        ("mse_loss", lambda p, q: mse_loss(p, q), [pred, label]),
    ]


def _mse_against(target):
    return lambda out: mse_loss(out, target) if out.shape != () else out


def test_02_gradient_suite():
    with criterion(2, "finite-difference gradients (20 seeds per op) and resize adjoint"):
        worst = {}
        for seed in range(20):
            rng = np.random.default_rng(seed)
            for name, op, arrays in _grad_cases(rng):
                out_shape = op(*arrays).shape
                target = rng.normal(size=out_shape) if out_shape != () else None
                score = _mse_against(target)
                tensors = [Tensor(a, requires_grad=True) for a in arrays]
                score(op(*tensors)).backward()
                for i, t in enumerate(tensors):
                    numeric = numeric_grad(lambda *arrs: score(op(*arrs)).item(), arrays, i, h=1e-5)
                    worst[name] = max(worst.get(name, 0.0), relative_error(t.grad, numeric))
        bad = {k: v for k, v in worst.items() if not v < 1e-4}
        assert not bad, f"relative error >= 1e-4: {bad}"

        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            v = rng.normal(size=(2, 24, 2, 3))
            u = rng.normal(size=(2, 72, 14, 3))
            jv = bilinear_resize(v, (72, 14)).data
            vt = Tensor(v, requires_grad=True)
            # d mse(out, label) / d out == u when label = out - u * N / 2
            mse_loss(bilinear_resize(vt, (72, 14)), jv - u * u.size / 2).backward()
            assert abs(np.sum(jv * u) - np.sum(v * vt.grad)) < 1e-10


def test_03_link_equivalence():
    with criterion(3, "noise-free time-domain link equals H * X on 100 EPA/EVA/ETU frames"):
        rng = np.random.default_rng(3)
        worst = 0.0
        for i in range(100):
            pdp = (EPA, EVA, ETU)[i % 3]
            assert pdp.quantized_delays(CFG.sample_rate).max() < CFG.cp_length
            frame = simulate_frame(pdp, DEFAULT_PATTERN, np.inf, rng.uniform(0, 97), seed=[3, i])
            worst = max(worst, float(np.max(np.abs(frame.y - frame.h * frame.x))))
        assert worst < 1e-9, f"max abs error {worst:.3e}"


def test_04_ls_noise_law():
    with criterion(4, "pilot LS MSE equals 1/SNR within 5% over 10^4 frames"):
        for snr in (0.0, 10.0, 20.0):
            err = []
            for i in range(10_000):
                f = simulate_frame(EPA, DEFAULT_PATTERN, snr, 50.0, seed=[4, int(snr), i])
                obs = ls_estimate(DEFAULT_PATTERN.extract(f.y), DEFAULT_PATTERN.extract(f.x), DEFAULT_PATTERN)
                err.append(np.mean(np.abs(obs.h_ls - DEFAULT_PATTERN.extract(f.h)) ** 2))
            mse, target = float(np.mean(err)), 10 ** (-snr / 10)
            assert abs(mse / target - 1) < 0.05, f"{snr} dB: {mse:.4g} vs {target:.4g}"


def test_05_fading_statistics():
    with criterion(5, "tap powers within 5% and Jakes autocorrelation within 0.05 of J0"):
        fd, n = 97.0, 2000
        for pdp in (EPA, EVA, ETU):
            gains = np.stack([generate_channel(pdp, fd, 14, seed=[5, i]).tap_gains for i in range(n)])
            power = np.mean(np.abs(gains) ** 2, axis=(0, 1))
            rel = np.abs(power / pdp.powers - 1)
            assert np.all(rel < 0.05), f"{pdp.name}: tap power deviation {rel.max():.3f}"
            norm = gains / np.sqrt(pdp.powers)
            for lag in range(14):
                r = np.mean(norm[:, lag:] * norm[:, :14 - lag].conj()).real
                ref = special.j0(2 * np.pi * fd * lag * CFG.symbol_duration)
                assert abs(r - ref) < 0.05, f"{pdp.name} lag {lag}: {r:.3f} vs J0 {ref:.3f}"


def test_06_estimator_ordering(epa_report):
    with criterion(6, "after desk-scale training, NN and MMSE beat LS at 0..20 dB on EPA"):
        lines = []
        for snr in (0, 5, 10, 15, 20):
            ls, mmse, nn = (epa_report.mse(e, snr) for e in ("ls", "mmse", "nn"))
            lines.append(f"{snr} dB: ls={ls:.3e} mmse={mmse:.3e} nn={nn:.3e}")
        print("\n".join(lines))
        for snr in (0, 5, 10, 15, 20):
            ls = epa_report.mse("ls", snr)
            assert epa_report.mse("mmse", snr) < ls, f"MMSE not below LS at {snr} dB"
            assert epa_report.mse("nn", snr) < ls, f"NN not below LS at {snr} dB: {lines[snr // 5]}"


def test_07_generalization_shape(desk_model):
    with criterion(7, "EPA-trained network floors on ETU (higher MSE, flatter curve)"):
        spec, result = desk_model
        reports = generalization_suite([NeuralEstimator(spec, result.weights)], [EPA, ETU], DEFAULT_PATTERN,
                                       [5.0, 25.0], TEST_FRAMES, seed=TEST_SEED)
        epa, etu = reports["EPA"], reports["ETU"]
        print(f"EPA 5/25 dB: {epa.mse('nn', 5.0):.3e} {epa.mse('nn', 25.0):.3e}; "
              f"ETU 5/25 dB: {etu.mse('nn', 5.0):.3e} {etu.mse('nn', 25.0):.3e}")
        assert etu.mse("nn", 25.0) > epa.mse("nn", 25.0)
        assert etu.mse("nn", 25.0) / etu.mse("nn", 5.0) > epa.mse("nn", 25.0) / epa.mse("nn", 5.0)


def test_08_pattern_portability():
    with criterion(8, "one Interpolation-ResNet config serves both patterns; ReEsNet needs new strides"):
        d_in, a_in = (*DEFAULT_PATTERN.shape, 2), (*ALTERNATE_PATTERN.shape, 2)
        assert d_in == (24, 2, 2) and a_in == (12, 4, 2)
        for n in (2, 4, 6, 8, 10):
            sd, sa = build_interpolation_resnet(n, d_in), build_interpolation_resnet(n, a_in)
            assert sd.shapes[sd.output] == sa.shapes[sa.output] == (72, 14, 2)
            assert sd.param_shapes() == sa.param_shapes()
        assert reesnet_stride(d_in) != reesnet_stride(a_in)
        for variant in ("A", "B"):
            rd, ra = build_reesnet(variant, d_in), build_reesnet(variant, a_in)
            up_d = next(layer for layer in rd.layers if layer.name == "upsample")
            up_a = next(layer for layer in ra.layers if layer.name == "upsample")
            assert up_d.stride != up_a.stride
            assert rd.shapes[rd.output] == ra.shapes[ra.output] == (72, 14, 2)


def test_09_pruning(desk_model):
    with criterion(9, "pruning zeroes floor(r*W) weights and 20 dB MSE is non-decreasing in r"):
        spec, result = desk_model
        mses = []
        for rate in (0.0, 0.1, 0.2, 0.3):
            pruned, mask = prune_magnitude(result.weights, rate)
            total = sum(w.size for k, w in pruned.items() if k.endswith(".kernel"))
            zeroed = sum(int((~m).sum()) for m in mask.values())
            assert zeroed == math.floor(rate * total), (rate, zeroed, total)
            report = evaluate([NeuralEstimator(spec, pruned)], EPA, DEFAULT_PATTERN, [20.0], TEST_FRAMES,
                              seed=TEST_SEED)
            mses.append(report.mse("nn", 20.0))
        base = evaluate([NeuralEstimator(spec, result.weights)], EPA, DEFAULT_PATTERN, [20.0], TEST_FRAMES,
                        seed=TEST_SEED).mse("nn", 20.0)
        print("20 dB MSE by rate:", ", ".join(f"{m:.4e}" for m in mses))
        assert mses[0] == base
        assert all(a <= b for a, b in zip(mses, mses[1:])), mses


def test_10_determinism(tmp_path, monkeypatch, capsys):
    with criterion(10, "gen-data -> train -> eval twice gives byte-identical artifacts"):
        monkeypatch.chdir(tmp_path)
        (tmp_path / "run.cfg").write_text(
            "seed = 77\nn_per_snr = 5\nn_filter = 2\nepochs = 2\nminibatch = 16\n"
            "eval_frames = 20\ncorrelation_realizations = 200\n")
        outputs = []
        for run in ("a", "b"):
            sets = [f"dataset={run}.ceds", f"checkpoint={run}.cewt", f"loss_log={run}.loss.csv", f"report={run}.csv"]
            args = ["-c", "run.cfg"] + [x for s in sets for x in ("--set", s)]
            for command in ("gen-data", "train", "eval"):
                assert cli.main([command, *args]) == 0
            outputs.append([(tmp_path / f"{run}{ext}").read_bytes()
                            for ext in (".ceds", ".cewt", ".loss.csv", ".csv")])
        capsys.readouterr()
        for name, x, y in zip(("dataset", "checkpoint", "loss log", "report"), *outputs):
            assert x == y, f"{name} differs between runs"


def test_desk_validation_trend(desk_model):
    # training sanity: 5-epoch moving average of validation MSE does not rise over the first 10 epochs
    _, result = desk_model
    val = np.array([s.val_mse for s in result.history[:10]])
    moving = np.convolve(val, np.ones(5) / 5, mode="valid")
    assert np.all(np.diff(moving) <= 0), moving
