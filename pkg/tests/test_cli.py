import shlex
import subprocess
import sys
from collections import defaultdict

import pytest

from amrproxy import report
from amrproxy.cli import main
from amrproxy.generator import GeneratorSpec, spec_to_text, tree_digest
from amrproxy.oracle import LevelSpec, OracleProfile, profile_to_text, synthesize_run


def _series_csv(path, values):
    path.write_text("dump,bytes\n" + "".join(f"{i},{v}\n" for i, v in enumerate(values)))
    return path


@pytest.fixture
def oracle_tree(tmp_path):
    profile = OracleProfile(nprocs=6, num_dumps=5, levels=[LevelSpec(60_000), LevelSpec(20_000, 1.05, 0.3)],
                            header_bytes=30, job_info_bytes=40, cell_h_bytes=10, seed=2)
    root = tmp_path / "tree"
    return root, synthesize_run(profile, root)


def test_scan_by_level(oracle_tree, tmp_path, capsys):
    root, manifest = oracle_tree
    out = tmp_path / "levels.csv"
    assert main(["scan", str(root), "--by", "level", "--csv", str(out)]) == 0
    expected = defaultdict(int)
    for r in manifest.records:
        expected[r.level] += r.bytes
    lines = out.read_text().splitlines()
    assert lines[0] == "level,bytes"
    got = {(None if k == "" else int(k)): int(v) for k, v in (ln.split(",") for ln in lines[1:])}
    assert got == dict(expected)


def test_scan_empty(tmp_path, capsys):
    assert main(["scan", str(tmp_path)]) == 0
    assert capsys.readouterr().out == "step_index,plt_step,level,task,kind,bytes\n"


def test_scan_missing(tmp_path, capsys):
    assert main(["scan", str(tmp_path / "missing")]) == 2
    assert "path not found" in capsys.readouterr().err


def test_scan_outputs_deterministic(oracle_tree, tmp_path, sedov_deck_path):
    root, _ = oracle_tree
    outs = []
    for i in range(2):
        csv_, svg_, ser = (tmp_path / f"s{i}.csv", tmp_path / f"s{i}.svg", tmp_path / f"r{i}.csv")
        assert main(["scan", str(root), "--by", "step,level", "--deck", str(sedov_deck_path),
                     "--csv", str(csv_), "--svg", str(svg_), "--series", str(ser)]) == 0
        outs.append((csv_.read_bytes(), svg_.read_bytes(), ser.read_bytes()))
    assert outs[0] == outs[1]
    # the chart is a function of the CSV alone
    assert report.aggregate_svg(outs[0][0].decode()).encode() == outs[0][1]
    assert b"cumulative_cells" in outs[0][0]


@pytest.mark.parametrize("by", ["task", "level,task", "step", "level", ""])
def test_scan_svg_views(oracle_tree, tmp_path, by):
    root, _ = oracle_tree
    svg_path = tmp_path / "v.svg"
    assert main(["scan", str(root), "--by", by, "--svg", str(svg_path), "--quiet"]) == 0
    assert svg_path.read_text().startswith("<svg")


def test_fit_recovers_growth(tmp_path, capsys):
    base = 1_550_000 * 32
    series = _series_csv(tmp_path / "s.csv", [base * 1.013075**k for k in range(20)])
    assert main(["fit", str(series), "--base", str(base)]) == 0
    out = dict(ln.split(" = ") for ln in capsys.readouterr().out.splitlines())
    assert abs(float(out["data_growth"]) - 1.013075) < 1e-4
    assert out["method"] == "grid_1d"


def test_fit_base_from_deck(tmp_path, capsys):
    deck = tmp_path / "deck"
    deck.write_text("max_step = 20\namr.n_cell = 512 512\namr.max_level = 3\n"
                    "amr.plot_int = 1\ncastro.cfl = 0.4\n")
    base = 32 * 23.65 * 8 * 512 * 512 / 32
    series = _series_csv(tmp_path / "s.csv", [round(base * 1.01**k) for k in range(21)])
    assert main(["fit", str(series), "--deck", str(deck), "--nprocs", "32", "--f", "23.65"]) == 0
    out = dict(ln.split(" = ") for ln in capsys.readouterr().out.splitlines())
    assert abs(float(out["data_growth"]) - 1.01) < 1e-5
    assert float(out["part_size"]) == pytest.approx(1_549_926.4)


def test_fit_constant(tmp_path, capsys):
    series = _series_csv(tmp_path / "s.csv", [700] * 6)
    assert main(["fit", str(series), "--base", "700"]) == 0
    assert "data_growth = 1.0\n" in capsys.readouterr().out


def test_fit_methods_agree(tmp_path, capsys):
    base = 3e7
    series = _series_csv(tmp_path / "s.csv", [base * 1.012**k for k in range(20)])
    growth = {}
    for flags in (["--base", str(base)], ["--loglinear"]):
        assert main(["fit", str(series), *flags]) == 0
        out = dict(ln.split(" = ") for ln in capsys.readouterr().out.splitlines())
        growth[flags[0]] = float(out["data_growth"])
    assert abs(growth["--base"] - growth["--loglinear"]) < 1e-3


def test_fit_csv_and_svg(tmp_path):
    series = _series_csv(tmp_path / "s.csv", [100 * 1.02**k for k in range(8)])
    csv_, svg_ = tmp_path / "f.csv", tmp_path / "f.svg"
    assert main(["fit", str(series), "--base", "100", "--csv", str(csv_), "--svg", str(svg_),
                 "--quiet"]) == 0
    assert csv_.read_text().splitlines()[0] == ",".join(report.FIT_FIELDS)
    assert report.fit_svg(csv_.read_text()) == svg_.read_text()


def test_fit_failures(tmp_path, capsys):
    assert main(["fit", str(_series_csv(tmp_path / "one.csv", [5])), "--base", "5"]) == 1
    assert main(["fit", str(_series_csv(tmp_path / "z.csv", [5, 0, 3])), "--loglinear"]) == 1
    assert main(["fit", str(tmp_path / "nope.csv"), "--loglinear"]) == 2
    assert main(["fit", str(tmp_path / "one.csv")]) == 2


def test_translate_sedov(sedov_deck_path, tmp_path, capsys):
    spec_path = tmp_path / "spec.txt"
    assert main(["translate", str(sedov_deck_path), "--nprocs", "32", "--f", "23.65",
                 "--growth", "1.013075", "--spec", str(spec_path)]) == 0
    line = capsys.readouterr().out.strip()
    assert "--num_dumps 26 " in line
    assert line.endswith("--dataset_growth 1.013075")
    assert "--parallel_file_mode MIF 32" in line
    assert spec_path.read_text().startswith("interface = miftmpl")


def test_translate_minimal(tmp_path, capsys):
    deck = tmp_path / "deck"
    deck.write_text("max_step = 1\namr.n_cell = 1 1\namr.max_level = 0\n"
                    "amr.plot_int = 1\ncastro.cfl = 0.5\n")
    assert main(["translate", str(deck), "--nprocs", "1", "--f", "1"]) == 0
    assert "--num_dumps 2 --part_size 8 " in capsys.readouterr().out


def test_translate_bad_deck(tmp_path, capsys):
    deck = tmp_path / "deck"
    deck.write_text("max_step = 1\n")
    assert main(["translate", str(deck), "--nprocs", "2"]) == 2
    assert "amr.n_cell" in capsys.readouterr().err


def test_spec_file_and_command_line_drive_identical_trees(tmp_path, capsys):
    deck = tmp_path / "deck"
    deck.write_text("max_step = 6\namr.n_cell = 48 40\namr.max_level = 2\n"
                    "amr.plot_int = 2\ncastro.cfl = 0.3\n")
    spec_path = tmp_path / "spec.txt"
    assert main(["translate", str(deck), "--nprocs", "3", "--f", "23.65", "--growth", "1.04",
                 "--meta_size", "300", "--spec", str(spec_path)]) == 0
    argv = shlex.split(capsys.readouterr().out)
    flags = argv[argv.index("macsio") + 1:]
    assert main(["generate", "--spec", str(spec_path), "--out", str(tmp_path / "a"), "--quiet"]) == 0
    assert main(["generate", *flags, "--out", str(tmp_path / "b"), "--quiet"]) == 0
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")


def test_generate_flags_and_reports(tmp_path, capsys):
    out = tmp_path / "g"
    rep_csv, man = tmp_path / "r.csv", tmp_path / "m.csv"
    assert main(["generate", "--interface", "miftmpl", "--parallel_file_mode", "MIF", "2",
                 "--num_dumps", "3", "--part_size", "100", "--avg_num_parts", "1",
                 "--vars_per_part", "1", "--meta_size", "10", "--dataset_growth", "1.0",
                 "--compute_time", "0", "--seed", "5", "--out", str(out),
                 "--csv", str(rep_csv), "--manifest", str(man)]) == 0
    assert "bytes_written = 630" in capsys.readouterr().out
    assert len(man.read_text().splitlines()) == 1 + 9
    assert main(["generate", "--parallel_file_mode", "MIF", "2", "--num_dumps", "3",
                 "--part_size", "100", "--out", str(out)]) == 2
    assert "not empty" in capsys.readouterr().err
    assert main(["generate", "--parallel_file_mode", "MIF", "2", "--num_dumps", "3",
                 "--part_size", "100", "--avg_num_parts", "2", "--out", str(tmp_path / "h")]) == 2


def test_synthesize_and_compare_self(tmp_path, capsys):
    prof = tmp_path / "p.txt"
    prof.write_text(profile_to_text(OracleProfile(nprocs=2, num_dumps=4,
                                                  levels=[LevelSpec(1000, 1.1)])))
    manifest = tmp_path / "manifest.csv"
    assert main(["synthesize", str(prof), "--out", str(tmp_path / "t"), "--csv", str(manifest),
                 "--quiet"]) == 0
    series = tmp_path / "series.csv"
    assert main(["scan", str(tmp_path / "t"), "--series", str(series), "--quiet"]) == 0

    # a spec that reproduces the observed dumps exactly
    observed = report.read_series(series.read_text())
    spec = tmp_path / "spec.txt"
    spec.write_text(spec_to_text(GeneratorSpec(nprocs=1, num_dumps=4, part_size=1000,
                                               data_growth=1.1)))
    assert observed == [1000, 1100, 1210, 1331]
    cmp_csv, cmp_svg = tmp_path / "c.csv", tmp_path / "c.svg"
    assert main(["compare", str(series), str(spec), "--csv", str(cmp_csv), "--svg", str(cmp_svg),
                 "--window", "1", "3"]) == 0
    out = capsys.readouterr().out
    assert "max_abs_relative_error = 0\n" in out
    rows = cmp_csv.read_text().splitlines()
    assert rows[0] == "dump,observed_cumulative_bytes,modeled_cumulative_bytes,relative_error"
    assert all(r.endswith(",0.0") for r in rows[1:])
    assert report.compare_svg(cmp_csv.read_text()) == cmp_svg.read_text()
    # manifest CSV doubles as observed input
    assert main(["compare", str(manifest), str(spec), "--quiet"]) == 0


def test_compare_length_mismatch(tmp_path, capsys):
    series = _series_csv(tmp_path / "s.csv", [10, 10, 10])
    spec = tmp_path / "spec.txt"
    spec.write_text(spec_to_text(GeneratorSpec(nprocs=1, num_dumps=5, part_size=10)))
    assert main(["compare", str(series), str(spec)]) == 2
    assert "series length mismatch" in capsys.readouterr().err


def test_bad_usage_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["scan"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "amrproxy", "scan", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("step_index,")


def test_report_redraws_every_chart(oracle_tree, tmp_path, capsys):
    root, _ = oracle_tree
    made = []
    for by in ("step,level", "level,task"):
        c, v = tmp_path / f"{by}.csv", tmp_path / f"{by}.svg"
        assert main(["scan", str(root), "--by", by, "--csv", str(c), "--svg", str(v)]) == 0
        made.append((c, v))
    series = tmp_path / "series.csv"
    assert main(["scan", str(root), "--series", str(series), "--quiet"]) == 0
    fc, fv = tmp_path / "fit.csv", tmp_path / "fit.svg"
    assert main(["fit", str(series), "--loglinear", "--csv", str(fc), "--svg", str(fv),
                 "--quiet"]) == 0
    made.append((fc, fv))
    for c, v in made:
        out = tmp_path / "again.svg"
        assert main(["report", str(c), "--svg", str(out)]) == 0
        assert out.read_text() == v.read_text()
    assert main(["report", str(series)]) == 0
    assert capsys.readouterr().out.startswith("<svg")


def test_report_rejects_unknown_csv(tmp_path, capsys):
    bad = tmp_path / "x.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["report", str(bad)]) == 2
    assert "no chart" in capsys.readouterr().err
