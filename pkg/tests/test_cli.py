import numpy as np
import pytest

from mpshrink.cli import main
from mpshrink.data import format_example
from mpshrink.synth import make_inseparable, make_separable

TOY = "+1 1:1\n-1 1:-1\n"


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "toy.txt"
    path.write_text(TOY)
    return str(path)


@pytest.fixture
def random_file(tmp_path):
    rng = np.random.default_rng(61)
    examples = make_separable(80, 6, 0.15, rng)
    path = tmp_path / "rand.txt"
    path.write_text("\n".join(format_example(e) for e in examples) + "\n")
    return str(path)


def parse_report(captured: str) -> dict:
    out = {}
    for line in captured.splitlines():
        if "=" in line and not line.startswith(("stage=", "#")):
            k, v = line.split("=", 1)
            out[k] = v
    return out


class TestTrain:
    def test_toy_train_and_report(self, toy_file, tmp_path, capsys):
        model = str(tmp_path / "model.txt")
        code = main(["train", toy_file, "--algo", "mpvs", "--n", "0",
                     "--eta", "1", "--b", "0.5", "--model-out", model])
        assert code == 0
        rep = parse_report(capsys.readouterr().out)
        assert rep["converged"] == "true"
        assert rep["t_c"] == "2"
        assert float(rep["gamma_prime"]) == 1.0
        assert float(rep["f_after"]) == pytest.approx(1.0, abs=1e-12)

    def test_b_auto_resolves_to_R_squared(self, toy_file, capsys):
        code = main(["train", toy_file, "--algo", "mpvs", "--n", "3"])
        assert code == 0
        rep = parse_report(capsys.readouterr().out)
        assert float(rep["b"]) == pytest.approx(float(rep["R"]) ** 2,
                                                rel=1e-15)

    def test_mpcs_lambda_zero_notes_epsilon_one(self, toy_file, capsys):
        code = main(["train", toy_file, "--algo", "mpcs", "--lambda", "0",
                     "--eta", "0.01"])
        assert code == 0
        rep = parse_report(capsys.readouterr().out)
        assert float(rep["epsilon_p"]) == 1.0

    def test_lup_one_same_verdict(self, toy_file, capsys):
        code = main(["train", toy_file, "--algo", "mpvs", "--n", "0",
                     "--eta", "1", "--b", "0.5", "--lup", "1"])
        assert code == 0
        rep = parse_report(capsys.readouterr().out)
        assert rep["converged"] == "true"
        assert rep["t_c"] == "2"

    def test_invalid_eta_lambda_exit3(self, toy_file):
        assert main(["train", toy_file, "--algo", "mpcs",
                     "--lambda", "20", "--eta", "0.1"]) == 3

    def test_strict_bounds_delta_exit3(self, toy_file):
        assert main(["train", toy_file, "--algo", "perceptron",
                     "--eta", "50", "--b", "0.5", "--strict-bounds"]) == 3

    def test_mpcs_needs_lambda(self, toy_file):
        assert main(["train", toy_file, "--algo", "mpcs"]) == 3

    def test_budget_exit2(self, random_file):
        assert main(["train", random_file, "--algo", "mpvs", "--n", "3",
                     "--eta", "0.1", "--max-updates", "2"]) == 2

    def test_missing_file_exit4(self):
        assert main(["train", "/nonexistent/data.txt", "--algo", "mpvs"]) == 4

    def test_malformed_data_exit4(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("+1 1:abc\n")
        assert main(["train", str(path), "--algo", "mpvs"]) == 4

    def test_csv_report(self, toy_file, capsys):
        code = main(["train", toy_file, "--algo", "mpvs", "--n", "0",
                     "--eta", "1", "--b", "0.5", "--report", "csv"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        header, row = lines[0].split(","), lines[1].split(",")
        assert len(header) == len(row)
        assert "gamma_prime" in header

    def test_epsilon_flag_mpvs(self, toy_file, capsys):
        code = main(["train", toy_file, "--algo", "mpvs",
                     "--epsilon", "0.25"])
        assert code == 0
        rep = parse_report(capsys.readouterr().out)
        assert rep["n"] == "3"

    def test_zeta_flag_mpcs(self, toy_file, capsys):
        code = main(["train", toy_file, "--algo", "mpcs", "--zeta", "0.3",
                     "--gamma-hat", "1.0"])
        assert code == 0
        rep = parse_report(capsys.readouterr().out)
        assert rep["converged"] == "true"

    def test_zeta_requires_gamma_hat(self, toy_file):
        assert main(["train", toy_file, "--algo", "mpcs",
                     "--zeta", "0.3"]) == 3


class TestEval:
    def test_round_trip_reproduces_gamma(self, random_file, tmp_path, capsys):
        model = str(tmp_path / "m.txt")
        assert main(["train", random_file, "--algo", "mpvs", "--n", "3",
                     "--model-out", model]) == 0
        trained = parse_report(capsys.readouterr().out)
        assert main(["eval", random_file, "--model-in", model]) == 0
        evaled = parse_report(capsys.readouterr().out)
        assert float(evaled["gamma_prime"]) == pytest.approx(
            float(trained["gamma_prime"]), rel=1e-12)
        assert evaled["errors_pos"] == "0" and evaled["errors_neg"] == "0"

    def test_dim_mismatch_exit3(self, toy_file, random_file, tmp_path, capsys):
        model = str(tmp_path / "m.txt")
        assert main(["train", random_file, "--algo", "mpvs",
                     "--model-out", model]) == 0
        capsys.readouterr()
        assert main(["eval", toy_file, "--model-in", model]) == 3

    def test_zero_weight_model_rejected(self, toy_file, tmp_path):
        model = tmp_path / "zero.txt"
        model.write_text("algo=mpvs\neta=1\nb=0.5\nn=0\nt=0\nrho=1\n"
                         "delta=0\ndim=2\n")
        assert main(["eval", toy_file, "--model-in", str(model)]) == 3

    def test_threaded_eval_matches(self, random_file, tmp_path, capsys):
        model = str(tmp_path / "m.txt")
        assert main(["train", random_file, "--algo", "mpvs",
                     "--model-out", model]) == 0
        capsys.readouterr()
        assert main(["eval", random_file, "--model-in", model]) == 0
        single = parse_report(capsys.readouterr().out)
        assert main(["eval", random_file, "--model-in", model,
                     "--threads", "4"]) == 0
        multi = parse_report(capsys.readouterr().out)
        assert single["gamma_prime"] == multi["gamma_prime"]
        assert single["argmin_index"] == multi["argmin_index"]


class TestAutotune:
    def test_reaches_target(self, random_file, tmp_path, capsys):
        model = str(tmp_path / "m.txt")
        code = main(["autotune", random_file, "--target-f", "0.95",
                     "--model-out", model])
        out = capsys.readouterr().out
        assert code == 0
        rep = parse_report(out)
        assert rep["reached"] == "true"
        assert float(rep["f_after"]) >= 0.95
        assert any(line.startswith("stage=0 lambda=0") for line in
                   out.splitlines())

    def test_low_target_single_stage(self, random_file, capsys):
        code = main(["autotune", random_file, "--target-f", "0.1"])
        assert code == 0
        out = capsys.readouterr().out
        assert sum(1 for ln in out.splitlines()
                   if ln.startswith("stage=")) == 1

    def test_unreachable_exit2_with_best_model(self, random_file, tmp_path,
                                               capsys):
        model = str(tmp_path / "best.txt")
        code = main(["autotune", random_file, "--target-f", "0.9999",
                     "--max-stages", "1", "--model-out", model])
        assert code == 2
        rep = parse_report(capsys.readouterr().out)
        assert rep["reached"] == "false"
        # best-so-far model still written and evaluates clean
        assert main(["eval", random_file, "--model-in", model]) == 0


class TestOracleCmd:
    def test_toy(self, toy_file, capsys):
        assert main(["oracle", toy_file]) == 0
        rep = parse_report(capsys.readouterr().out)
        assert float(rep["gamma_d"]) == pytest.approx(1.0, rel=1e-12)
        assert rep["separable"] == "true"

    def test_single_pattern(self, tmp_path, capsys):
        path = tmp_path / "one.txt"
        path.write_text("+1 1:3 2:4\n")
        assert main(["oracle", str(path)]) == 0
        rep = parse_report(capsys.readouterr().out)
        assert float(rep["gamma_d"]) == pytest.approx(26 ** 0.5, rel=1e-12)

    def test_inseparable_with_extension(self, tmp_path, capsys):
        rng = np.random.default_rng(62)
        examples = make_inseparable(30, 4, 0.2, rng, n_conflicts=3)
        path = tmp_path / "insep.txt"
        path.write_text("\n".join(format_example(e) for e in examples) + "\n")
        assert main(["oracle", str(path)]) == 0
        rep = parse_report(capsys.readouterr().out)
        assert rep["separable"] == "false"
        assert main(["oracle", str(path), "--delta-ext", "1.0"]) == 0
        rep = parse_report(capsys.readouterr().out)
        assert rep["separable"] == "true"
        assert float(rep["gamma_d"]) > 0


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_bench_smoke(capsys):
    assert main(["bench", "--m", "60", "--d", "5", "--repeats", "1"]) == 0
    out = capsys.readouterr().out
    assert "backend=" in out


def test_usage_error_exit3(capsys):
    assert main(["train"]) == 3
