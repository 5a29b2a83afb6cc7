from pathlib import Path

from toposig import cli
from toposig.graph import parse_edges_tsv, parse_geo

FIXTURE_DIR = Path(__file__).parent / "data"
FIXTURE_LINKS = FIXTURE_DIR / "fixture_200.links"
FIXTURE_GEO = FIXTURE_DIR / "fixture_200.geo"

CORE_ARTIFACTS = (
    cli.EDGES_TSV,
    cli.FEATURES_TSV,
    cli.MODEL_FILE,
    cli.NULL_SAMPLES_TSV,
    cli.NULL_MODEL_TSV,
    cli.RESULTS_TSV,
    cli.SUMMARY_TSV,
)


def run(args):
    return cli.main([str(a) for a in args])


def fixture_args(out, seed=7):
    return [
        "all",
        "--links", FIXTURE_LINKS,
        "--geo", FIXTURE_GEO,
        "--out", out,
        "--seed", seed,
        "--sizes", "10,20,50",
        "--sets", "40",
        "--level", "both",
    ]


# ---------------------------------------------------------------------------
# dependency and error handling
# ---------------------------------------------------------------------------

def test_test_before_null_exits_2(tmp_path, capsys):
    assert run(["test", "--out", tmp_path]) == 2
    err = capsys.readouterr().err
    assert "features.tsv" in err


def test_ingest_without_input_exits_2(tmp_path):
    assert run(["ingest", "--out", tmp_path]) == 2


def test_missing_geo_file_exits_2(tmp_path):
    code = run(
        ["ingest", "--links", FIXTURE_LINKS, "--geo", tmp_path / "nope.tsv", "--out", tmp_path]
    )
    assert code == 2


def test_strict_parse_failure_exits_3(tmp_path):
    bad = tmp_path / "bad.links"
    bad.write_text("link L1: N1 N2\nnot a record\n")
    assert run(["ingest", "--links", bad, "--out", tmp_path, "--strict"]) == 3
    # lenient mode shrugs it off
    assert run(["ingest", "--links", bad, "--out", tmp_path]) == 0


def test_degenerate_features_exit_4(tmp_path):
    ring = tmp_path / "ring.tsv"
    ring.write_text("a\tb\nb\tc\nc\td\nd\te\ne\tf\na\tf\n")
    assert run(["ingest", "--edges", ring, "--out", tmp_path]) == 0
    assert run(["features", "--out", tmp_path]) == 0
    assert run(["embed", "--out", tmp_path]) == 4


def test_missing_labels_for_test_stage_exits_2(tmp_path):
    assert run(["ingest", "--links", FIXTURE_LINKS, "--out", tmp_path]) == 0
    assert run(["features", "--out", tmp_path]) == 0
    assert run(["embed", "--out", tmp_path]) == 0
    assert run(["null", "--out", tmp_path, "--sizes", "10,20,50", "--sets", "10"]) == 0
    assert run(["test", "--out", tmp_path]) == 2  # no labels.tsv


# ---------------------------------------------------------------------------
# end-to-end runs
# ---------------------------------------------------------------------------

def test_fixture_end_to_end_produces_all_artifacts(tmp_path, capsys):
    assert run(fixture_args(tmp_path)) == 0
    for artifact in CORE_ARTIFACTS:
        assert (tmp_path / artifact).exists(), artifact
    assert (tmp_path / cli.MANIFEST).exists()
    out = capsys.readouterr().out
    assert "groups tested" in out

    manifest = (tmp_path / cli.MANIFEST).read_text().splitlines()
    assert [line.split("\t")[0] for line in manifest] == list(cli.ALL_CHAIN)


def test_stagewise_equals_all(tmp_path):
    out_all = tmp_path / "all"
    out_staged = tmp_path / "staged"
    assert run(fixture_args(out_all)) == 0
    base = ["--out", out_staged, "--seed", 7, "--sizes", "10,20,50", "--sets", "40",
            "--level", "both"]
    assert run(["ingest", "--links", FIXTURE_LINKS, "--geo", FIXTURE_GEO] + base) == 0
    for stage in ("features", "embed", "null", "test", "report"):
        assert run([stage] + base) == 0
    for artifact in CORE_ARTIFACTS:
        assert (out_all / artifact).read_bytes() == (out_staged / artifact).read_bytes()


def test_same_seed_byte_identical_artifacts(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(fixture_args(out_a)) == 0
    assert run(fixture_args(out_b)) == 0
    for artifact in CORE_ARTIFACTS + (cli.NODES_TSV, cli.LABELS_TSV):
        assert (out_a / artifact).read_bytes() == (out_b / artifact).read_bytes(), artifact
    # manifest identical apart from the trailing timestamp column
    strip = lambda p: [l.rsplit("\t", 1)[0] for l in (p / cli.MANIFEST).read_text().splitlines()]
    assert strip(out_a) == strip(out_b)


def test_different_seed_changes_null_samples(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(fixture_args(out_a, seed=7)) == 0
    assert run(fixture_args(out_b, seed=8)) == 0
    assert (out_a / cli.NULL_SAMPLES_TSV).read_bytes() != (out_b / cli.NULL_SAMPLES_TSV).read_bytes()


def test_fix_alpha_pins_the_exponent(tmp_path):
    assert run(fixture_args(tmp_path)) == 0
    assert run(
        ["null", "--out", tmp_path, "--seed", 7, "--sizes", "10,20,50", "--sets", "40",
         "--fix-alpha", "1.0"]
    ) == 0
    with open(tmp_path / cli.NULL_MODEL_TSV) as f:
        from toposig.nullmodel import read_null_model_tsv

        model = read_null_model_tsv(f)
    assert model.alpha == 1.0


def test_results_levels_respect_flag(tmp_path):
    assert run(fixture_args(tmp_path)) == 0
    rows = [
        line.split("\t")
        for line in (tmp_path / cli.RESULTS_TSV).read_text().splitlines()
        if not line.startswith("#")
    ]
    levels = {row[0] for row in rows}
    assert levels == {"country", "region"}
    zs = [float(row[4]) for row in rows]
    assert zs == sorted(zs)


# ---------------------------------------------------------------------------
# synth subcommand
# ---------------------------------------------------------------------------

def test_synth_gravity_writes_labeled_graph(tmp_path):
    code = run(
        ["synth", "--model", "gravity", "--n", 300, "--groups", 6, "--beta", 2,
         "--stubs", "1,2", "--seed", 3, "--out", tmp_path]
    )
    assert code == 0
    with open(tmp_path / cli.EDGES_TSV) as f:
        el = parse_edges_tsv(f)
    assert el.edge_count > 0
    with open(tmp_path / cli.LABELS_TSV) as f:
        labels = parse_geo(f)
    assert len(labels.country) == 300
    assert set(labels.region.values()) <= {"Q0", "Q1", "Q2", "Q3"}


def test_synth_er_with_random_groups(tmp_path):
    code = run(
        ["synth", "--model", "er", "--n", 500, "--p", 0.02, "--seed", 1,
         "--random-groups", 5, "--group-sizes", "20,40", "--out", tmp_path]
    )
    assert code == 0
    with open(tmp_path / cli.LABELS_TSV) as f:
        labels = parse_geo(f)
    assert len(set(labels.country.values())) == 5


def test_synth_ba_has_no_labels(tmp_path):
    assert run(["synth", "--model", "ba", "--n", 100, "--attach", 2, "--out", tmp_path]) == 0
    assert not (tmp_path / cli.LABELS_TSV).exists()


def test_synth_feeds_pipeline(tmp_path):
    assert run(
        ["synth", "--model", "gravity", "--n", 400, "--groups", 8, "--beta", 3,
         "--stubs", "1,2,3", "--seed", 11, "--out", tmp_path]
    ) == 0
    code = run(
        ["all", "--edges", tmp_path / cli.EDGES_TSV, "--geo", tmp_path / cli.LABELS_TSV,
         "--out", tmp_path, "--seed", 5, "--sizes", "10,20,50", "--sets", "30"]
    )
    assert code == 0
    assert (tmp_path / cli.RESULTS_TSV).exists()
