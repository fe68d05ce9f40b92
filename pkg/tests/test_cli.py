import json

import pytest

from supercrit.cli import build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_exp(capsys):
    code, out, _ = run(capsys, "classify", "--f", "exp", "--N", "3")
    d = json.loads(out)
    assert code == 0
    assert d["q"] == 1 and d["q_S"] == 1.25 and d["k"] == 2 and d["regime"] == "Oscillatory"
    assert d["q_JL"] == pytest.approx(0.0428932, abs=1e-7)


@pytest.mark.parametrize("argv,code", [
    (["classify", "--f", "bogus", "--N", "3"], 1),
    (["shoot", "--f", "exp", "--N", "3", "--rho", "1"], 1),
    (["shoot", "--f", "exp", "--N", "2", "--rho", "1", "--format", "json"], 1),
    (["singular", "--f", "power:p=5", "--N", "3", "--format", "json"], 3),
    (["bifurcate", "--f", "power:p=5", "--N", "3", "--points", "5"], 4),
])
def test_exit_codes(capsys, argv, code):
    assert main(argv) == code
    capsys.readouterr()


def test_usage_error_exits_with_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["classify", "--N", "3"])
    assert info.value.code == 1


def test_shoot_csv_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for dest in (a, b):
        assert main(["shoot", "--f", "power:p=5", "--N", "3", "--rho", "1", "--r-max", "5",
                     "--out", str(dest)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "r,u,du"
    out, _ = capsys.readouterr()
    assert "tol=1e-09" in out


def test_limit_shoot_and_singular_csv(tmp_path, capsys):
    assert main(["limit-shoot", "--f", "exp", "--N", "3", "--sigma", "0", "--s-max", "5",
                 "--out", str(tmp_path / "v.csv")]) == 0
    assert main(["singular", "--f", "exp", "--N", "3", "--r-max", "2", "--out", str(tmp_path / "s.csv")]) == 0
    assert (tmp_path / "s.csv").read_text().startswith("r,theta,u_star,du_star\n")
    capsys.readouterr()


def test_intersect(capsys):
    code, out, _ = run(capsys, "intersect", "--f", "power:p=5", "--N", "3", "--sigma0", "1", "--sigma1", "2")
    d = json.loads(out)
    assert code == 0 and d["count"] == 1
    assert set(d) == {"interval", "count", "zeros", "near_tangencies", "truncated"}


def test_bifurcate_exp10(capsys, tmp_path):
    csv_path = tmp_path / "b.csv"
    code, out, _ = run(capsys, "bifurcate", "--f", "exp", "--N", "10", "--rho-min", "0.01", "--rho-max", "100",
                       "--points", "100", "--csv", str(csv_path))
    d = json.loads(out)
    assert code == 0
    assert d["classification"] == "Monotone-consistent"
    assert d["mu_star"] == pytest.approx(16, abs=1e-6)
    assert csv_path.read_text().splitlines()[0] == "rho,mu,dmu_drho"


def test_morse(capsys):
    code, out, _ = run(capsys, "morse", "--f", "exp", "--N", "12")
    assert code == 0 and json.loads(out)["verdict"] == "FiniteIndexConsistent"


def test_verify_subset(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--suite", "1,2,10", "--out", str(tmp_path))
    assert code == 0
    assert out.count("[PASS]") == 3
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "criterion_01.json", "criterion_02.json", "criterion_10.json"]


def test_verify_bad_suite(capsys):
    assert main(["verify", "--suite", "1,99"]) == 1
    capsys.readouterr()


def test_parser_lists_all_commands():
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(sub.choices) == {"classify", "shoot", "limit-shoot", "singular", "intersect",
                                "bifurcate", "morse", "verify"}
