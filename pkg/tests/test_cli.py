import subprocess
import sys

import pytest

from gendersignal import cli
from gendersignal.effects import estimate_from_magnitude, quadrant_classify
from gendersignal.errors import ConfigurationError
from gendersignal.groups import PAIR_GROUPS

TINY = ["--n-filters", "4", "--hidden", "8", "--window", "128", "--pool-width", "2", "--epochs", "1",
        "--batch-size", "16", "--bootstrap-b", "50", "--rank-k", "20", "--baseline", "no"]


@pytest.fixture(scope="module")
def synth_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert cli.main(["synth", "--out-dir", str(out), "--synth-per-group", "25", "--synth-mean-words", "10",
                     "--synth-categories", "Books,Beauty"]) == 0
    argv = ["pipeline", "--out-dir", str(out), "--reviews", str(out / "synth" / "reviews.json"),
            "--products", str(out / "synth" / "products.json"), "--categories", "Books,Beauty", *TINY]
    assert cli.main(argv) == 0
    return out, argv


def test_pipeline_outputs(synth_run):
    out, _ = synth_run
    for name in (cli.SIGNALS, cli.MODEL, cli.GROUPS, cli.FEATURES, cli.PAIRS, cli.ESTIMATES,
                 cli.QUADRANTS, cli.OVERALL, cli.RANK_CURVES, cli.SUMMARY_TXT):
        assert (out / name).is_file(), name
    for stage in cli.PIPELINE + ("synth",):
        assert (out / "summaries" / f"{stage}.json").is_file()
    head = (out / cli.ESTIMATES).read_text().splitlines()[0]
    assert head == "pair_group,category,favored_group,advantage_pct,std_err,n_pairs,degenerate"


def test_pipeline_idempotent(synth_run):
    out, argv = synth_run
    before = {p.name: p.read_bytes() for p in out.iterdir() if p.is_file()}
    assert cli.main(argv) == 0
    after = {p.name: p.read_bytes() for p in out.iterdir() if p.is_file()}
    assert before == after


def test_missing_prerequisite(tmp_path, capsys):
    assert cli.main(["match", "--out-dir", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "features" in err and "match" in err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        cli.main(["nosuchstage"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        cli.main(["train", "--epochs", "many"])
    assert e.value.code == 1


def test_data_error_exit_code(tmp_path):
    r = tmp_path / "r.json"
    r.write_text('{"reviewerID": "A", "asin": "B", "helpful": [1, 0]}\n')  # up > total
    p = tmp_path / "p.json"
    p.write_text('{"asin": "B", "categories": [["Books"]]}\n')
    code = cli.main(["ingest", "--out-dir", str(tmp_path / "o"), "--reviews", str(r), "--products", str(p)])
    assert code == 0  # malformed lines are skipped and counted, not fatal
    assert '"skipped": 1' in (tmp_path / "o" / "summaries" / "ingest.json").read_text()
    assert cli.main(["ingest", "--out-dir", str(tmp_path / "o"), "--reviews", str(tmp_path / "nope"),
                     "--products", str(p)]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "gendersignal", "estimate", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 1 and "match" in res.stderr


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "c.ini"
    conf.write_text("epochs = 7  # comment\nreverse = yes\nsynth_plant = Books=10;Beauty=-5\n"
                    "[category_map]\nBooks = Printed Books\n")
    cfg = cli.load_config(conf)
    assert cfg.epochs == 7 and cfg.reverse is True and cfg.synth_plant == "Books=10;Beauty=-5"
    assert cfg.category_names()["Books"] == "Printed Books"
    args = cli.build_parser().parse_args(["train", "--config", str(conf), "--epochs", "2", "--seed", "4"])
    cfg = cli.config_from_args(args)
    assert cfg.epochs == 2 and cfg.seed == 4 and cfg.reverse is True


@pytest.mark.parametrize("text", ["nosuch = 1", "epochs = x", "[other]\na = 1"])
def test_bad_config(tmp_path, text):
    conf = tmp_path / "c.ini"
    conf.write_text(text + "\n")
    with pytest.raises(ConfigurationError):
        cli.load_config(conf)


def test_default_categories():
    names = cli.PipelineConfig().category_names()
    assert len(names) == 15
    assert names["Toys"] == "Toys & Games" and names["Books"] == "Books"


def test_parse_plants():
    cats = ("Books", "Beauty")
    p = cli.parse_plants("Books=25; PM-SM:Beauty=-3", cats)
    assert p[("PW-PM", "Books")] == 25.0 and p[("PM-SM", "Beauty")] == -3.0
    assert len(p) == len(PAIR_GROUPS) + 1
    assert cli.parse_plants("", cats) == {}
    with pytest.raises(ConfigurationError):
        cli.parse_plants("Books", cats)
    with pytest.raises(ConfigurationError):
        cli.parse_plants("Garden=3", cats)


def test_empty_estimates_header_only(tmp_path):
    p = tmp_path / "e.csv"
    assert cli.write_estimates(p, []) == 0
    assert len(p.read_text().splitlines()) == 1
    assert cli.read_estimates(p) == []


def test_summary_rows_for_full_grid(tmp_path):
    cats = list(cli.DEFAULT_CATEGORIES)
    est = [estimate_from_magnitude(pg, c, pg[-2:], 5.0, 1.0, 100) for c in cats for pg in PAIR_GROUPS]
    assert len(est) == 60
    cli.write_estimates(tmp_path / "e.csv", est)
    back = cli.read_estimates(tmp_path / "e.csv")
    assert [(e.pair_group, e.category, e.signed_mean_pct) for e in back] == \
        [(e.pair_group, e.category, e.signed_mean_pct) for e in est]
    text = cli.summary_table(back, quadrant_classify(back), {})
    assert sum(1 for line in text.splitlines() if any(f" {pg} " in line for pg in PAIR_GROUPS)) == 60
