import math
import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import integrate

from sensikit.blackbox import extern_target, run_program
from sensikit.errors import DomainError, NonDeterministicTargetError, TargetEvaluationError
from sensikit.sampler import Norm, measure_pair, sample_sensitivity
from sensikit.targets import (
    MIXTURE_MEANS,
    MIXTURE_VARIANCES,
    MIXTURE_WEIGHTS,
    KdeConfig,
    format_records,
    gen_exponential,
    gen_gaussian_mixture,
    gen_two_gaussians,
    gen_uniform_cube,
    kde_density,
    kde_global_sensitivity,
    kde_target,
    load_dataset,
    mean_target,
    parse_distribution,
    save_dataset,
)


class TestMean:
    def test_two_records(self):
        assert mean_target(1, 2)(np.array([[0.0], [1.0]]))[0] == 0.5

    def test_global_bound(self):
        assert mean_target(3, 50, unit_cube=True).global_bound == pytest.approx(3 / 50)
        assert mean_target(3, 50).global_bound is None

    def test_dimension_check(self):
        with pytest.raises(DomainError):
            mean_target(2, 2)(np.zeros((2, 3)))

    @given(hnp.arrays(np.float64, (6, 2), elements=st.floats(0, 1)))
    def test_unit_cube_bound(self, records):
        target = mean_target(2, 5, unit_cube=True)
        assert measure_pair(target, records) <= target.global_bound + 1e-15


class TestKde:
    def test_integrates_to_one(self):
        data = np.array([0.0, 0.3, 0.99])
        total, _ = integrate.quad(lambda y: kde_density(data, [y], 0.05)[0], 0, 1, points=list(data), limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)

    @given(hnp.arrays(np.float64, st.integers(1, 20), elements=st.floats(0, 1)))
    def test_nonnegative_and_symmetric(self, data):
        target = kde_target(KdeConfig(), data.size)
        values = target(data[:, None])
        assert np.all(values >= 0)
        mirrored = target(1.0 - data[:, None])
        np.testing.assert_allclose(mirrored, values[::-1], rtol=1e-12, atol=1e-300)

    def test_symmetric_dataset(self):
        data = np.array([0.1, 0.35, 0.5, 0.65, 0.9])
        values = kde_target(KdeConfig(), 5)(data[:, None])
        np.testing.assert_allclose(values, values[::-1], rtol=1e-12)

    def test_identical_datasets(self):
        target = kde_target(KdeConfig(), 3)
        records = np.array([[0.2], [0.4], [0.6], [0.6]])
        assert measure_pair(target, records) == 0.0

    def test_global_bound_is_sharp(self):
        cfg = KdeConfig(bandwidth=0.05)
        n = 10
        bound = kde_global_sensitivity(cfg, n)
        target = kde_target(cfg, n)
        xs = np.linspace(0, 1, 101)
        base = np.full(n - 1, 0.5)
        worst = 0.0
        for a in xs:
            for b in xs[::5]:
                records = np.concatenate([base, [a, b]])[:, None]
                worst = max(worst, measure_pair(target, records))
        assert worst <= bound
        assert worst >= 0.999 * bound
        assert target.norm is Norm.LATTICE_SUP

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            kde_density(np.array([1.2]), np.array([0.5]), 0.05)

    @pytest.mark.parametrize("kwargs", [dict(bandwidth=0), dict(lattice_size=0), dict(dims=2)])
    def test_config(self, kwargs):
        with pytest.raises(DomainError):
            KdeConfig(**kwargs)

    def test_lattice(self):
        np.testing.assert_allclose(KdeConfig(lattice_size=4).lattice, [0, 0.25, 0.5, 0.75, 1])


class TestGenerators:
    def test_exponential(self):
        draws = gen_exponential(2.0)(np.random.default_rng(0), 100_000)
        assert draws.shape == (100_000, 1)
        assert draws.mean() == pytest.approx(0.5, rel=0.02)

    def test_uniform_cube(self):
        draws = gen_uniform_cube(3)(np.random.default_rng(0), 1000)
        assert draws.shape == (1000, 3) and draws.min() >= 0 and draws.max() < 1

    def test_two_gaussians(self):
        draws = gen_two_gaussians(4)(np.random.default_rng(0), 50_000)
        x, y = draws[:, :-1], draws[:, -1]
        assert set(np.unique(y)) == {-1.0, 1.0}
        assert np.mean(y > 0) == pytest.approx(0.5, abs=0.01)
        assert x.min() >= 0 and x.max() <= 1
        assert x[y > 0].mean() == pytest.approx(0.2, abs=0.005)
        assert x[y < 0].mean() == pytest.approx(0.8, abs=0.005)
        assert x[y > 0, 0].var() == pytest.approx(0.01, rel=0.05)

    def test_mixture(self):
        draws = gen_gaussian_mixture()(np.random.default_rng(0), 200_000)[:, 0]
        assert draws.min() >= 0 and draws.max() <= 1
        mean = sum(w * m for w, m in zip(MIXTURE_WEIGHTS, MIXTURE_MEANS))
        var = sum(w * (v + m * m) for w, m, v in zip(MIXTURE_WEIGHTS, MIXTURE_MEANS, MIXTURE_VARIANCES)) - mean**2
        # Clipping trims a little of the first component's tails.
        assert draws.mean() == pytest.approx(mean, abs=0.003)
        assert draws.var() == pytest.approx(var, rel=0.03)

    @pytest.mark.parametrize(
        "text, width", [("exp:2", 1), ("exp", 1), ("uniform:3", 3), ("twogauss:2", 3), ("mixture", 1)]
    )
    def test_parse(self, text, width):
        assert parse_distribution(text)(np.random.default_rng(0), 2).shape == (2, width)

    @pytest.mark.parametrize("text", ["normal", "exp:x", "uniform:0", "mixture:3", "exp:-1"])
    def test_parse_errors(self, text):
        with pytest.raises(DomainError):
            parse_distribution(text)


class TestDatasetFiles:
    def test_round_trip(self, tmp_path):
        records = gen_two_gaussians(2)(np.random.default_rng(0), 10)
        path = tmp_path / "d.csv"
        save_dataset(path, records)
        assert np.array_equal(load_dataset(path), records)
        assert b"\r" not in path.read_bytes()

    def test_format(self):
        assert format_records(np.array([[0.1, 1.0]])) == "0.1,1.0\n"

    @pytest.mark.parametrize("text", ["", "1,2\n3\n", "a,b\n"])
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(DomainError):
            load_dataset(path)


def write_program(tmp_path, body, name="prog.py"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return f"{sys.executable} {path}"


MEAN_PROGRAM = """
    import sys
    rows = [[float(v) for v in line.split(",")] for line in sys.stdin if line.strip()]
    cols = list(zip(*rows))
    print(" ".join(repr(sum(c) / len(c)) for c in cols))
"""


class TestBlackBox:
    def test_matches_builtin_mean(self, tmp_path):
        cmd = write_program(tmp_path, MEAN_PROGRAM)
        extern = extern_target(cmd, 20)
        builtin = mean_target(1, 20)
        p = gen_exponential()
        a = sample_sensitivity(extern, p, 5, 3)
        b = sample_sensitivity(builtin, p, 5, 3)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-12)
        assert extern.verify_determinism and extern.label.startswith("extern:")

    def test_nondeterministic_program(self, tmp_path):
        cmd = write_program(tmp_path, """
            import random, sys
            sys.stdin.read()
            print(random.random())
        """)
        with pytest.raises(NonDeterministicTargetError):
            sample_sensitivity(extern_target(cmd, 3), gen_exponential(), 3, 0)

    @pytest.mark.parametrize(
        "body, message",
        [
            ("import sys\nsys.exit(3)\n", "status 3"),
            ("print('1 2')\nprint('3')\n", "exactly one"),
            ("print('one two')\n", "non-decimal"),
        ],
    )
    def test_protocol_violations(self, tmp_path, body, message):
        cmd = write_program(tmp_path, body)
        with pytest.raises(TargetEvaluationError, match=message):
            run_program(cmd.split(), np.zeros((2, 1)))

    def test_missing_program(self, tmp_path):
        with pytest.raises(TargetEvaluationError):
            run_program([str(tmp_path / "missing")], np.zeros((1, 1)))

    def test_timeout(self, tmp_path):
        cmd = write_program(tmp_path, "import time\ntime.sleep(5)\n")
        with pytest.raises(TargetEvaluationError):
            run_program(cmd.split(), np.zeros((1, 1)), timeout=0.5)

    def test_empty_command(self):
        with pytest.raises(DomainError):
            extern_target("   ", 3)
