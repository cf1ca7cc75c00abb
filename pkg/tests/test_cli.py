import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from attnmosaic.cli import main
from attnmosaic.curvefit import CurveParams, curve_value
from attnmosaic.mosaic import validate_metadata


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tile_dir(tmp_path):
    rng = np.random.default_rng(0)
    root = tmp_path / "tiles"
    root.mkdir()
    for i in range(6):
        arr = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        Image.fromarray(arr).save(root / f"tile_{i:03d}.png")
    return root


@pytest.fixture
def target_file(tmp_path):
    rng = np.random.default_rng(1)
    path = tmp_path / "target.png"
    arr = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
    Image.fromarray(arr).save(path)
    return path


def parse_records(output):
    return [json.loads(line) for line in output.strip().splitlines() if line]


class TestCompose:
    def test_bundle_written_and_valid(self, runner, tile_dir, target_file, tmp_path):
        out = tmp_path / "bundle"
        result = runner.invoke(main, [
            "compose", "--target", str(target_file), "--tiles", str(tile_dir),
            "--tile-size", "8", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "mosaic.png").is_file()
        metadata = json.loads((out / "metadata.json").read_text())
        validate_metadata(metadata)
        assert metadata["grid"] == {"rows": 4, "cols": 4, "tile_size": 8}
        for entry in metadata["tiles"]:
            assert (out / entry["original"]).is_file()

    def test_rerun_metadata_byte_identical(self, runner, tile_dir, target_file, tmp_path):
        args = ["compose", "--target", str(target_file), "--tiles", str(tile_dir),
                "--tile-size", "8"]
        r1 = runner.invoke(main, args + ["--out", str(tmp_path / "b1")])
        r2 = runner.invoke(main, args + ["--out", str(tmp_path / "b2")])
        assert r1.exit_code == r2.exit_code == 0
        assert ((tmp_path / "b1" / "metadata.json").read_bytes()
                == (tmp_path / "b2" / "metadata.json").read_bytes())

    def test_records_format_deterministic(self, runner, tile_dir, target_file, tmp_path):
        args = ["--format", "records", "compose", "--target", str(target_file),
                "--tiles", str(tile_dir), "--tile-size", "8", "--no-timings"]
        r1 = runner.invoke(main, args + ["--out", str(tmp_path / "b1")])
        r2 = runner.invoke(main, args + ["--out", str(tmp_path / "b1")])
        assert r1.exit_code == r2.exit_code == 0
        assert r1.output == r2.output
        (record,) = parse_records(r1.output)
        assert record["cells"] == 16
        assert record["elapsed_s"] is None

    def test_constraint_violation_cites_dimensions(self, runner, tile_dir,
                                                   target_file, tmp_path):
        result = runner.invoke(main, [
            "compose", "--target", str(target_file), "--tiles", str(tile_dir),
            "--tile-size", "8", "--rows", "5", "--cols", "4",
            "--out", str(tmp_path / "b"),
        ])
        assert result.exit_code == 1
        assert "error[grid-constraint]" in result.output
        assert "40" in result.output and "32" in result.output

    def test_knowledge_flows_into_metadata(self, runner, tile_dir, tmp_path):
        # target tiled from tile_000 itself, so tile 0 wins every cell
        tile0 = np.asarray(Image.open(tile_dir / "tile_000.png"))
        target = tmp_path / "tiled_target.png"
        Image.fromarray(np.tile(tile0, (2, 2, 1))).save(target)
        mapping = tmp_path / "knowledge.tsv"
        mapping.write_text("tile_000.png\tEcoTire retailer list\n")
        out = tmp_path / "bundle"
        result = runner.invoke(main, [
            "compose", "--target", str(target), "--tiles", str(tile_dir),
            "--tile-size", "8", "--knowledge", str(mapping), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        metadata = json.loads((out / "metadata.json").read_text())
        texts = {t["id"]: t["knowledge"] for t in metadata["tiles"]}
        assert texts == {0: "EcoTire retailer list"}


class TestAttn:
    def test_full_keep_matches_dense(self, runner):
        result = runner.invoke(main, [
            "--format", "records",
            "attn", "--seq-len", "64", "--block-r", "8", "--block-c", "8",
            "--k", "8", "--w", "1", "--trials", "3",
        ])
        assert result.exit_code == 0, result.output
        records = parse_records(result.output)
        assert len(records) == 3
        for rec in records:
            assert rec["kept_row_fraction"] == 1.0
            assert rec["kept_col_fraction"] == 1.0
            assert rec["max_abs_diff_vs_dense"] <= 1e-6

    def test_random_drop_rate_near_target(self, runner):
        result = runner.invoke(main, [
            "--format", "records",
            "attn", "--seq-len", "64", "--block-r", "2", "--block-c", "2",
            "--w", "0", "--sparsity", "50", "--trials", "100", "--no-timings",
        ])
        assert result.exit_code == 0
        records = parse_records(result.output)
        kept = np.mean([rec["kept_row_fraction"] for rec in records])
        assert 0.4 <= kept <= 0.6  # Bernoulli(draw >= 0.5) over 3200 rows

    def test_invalid_weight_is_usage_error(self, runner):
        result = runner.invoke(main, ["attn", "--w", "1.5"])
        assert result.exit_code == 2
        assert "--w" in result.output

    def test_invalid_sparsity_is_usage_error(self, runner):
        result = runner.invoke(main, ["attn", "--sparsity", "150"])
        assert result.exit_code == 2

    def test_records_rerun_identical_without_timings(self, runner):
        args = ["--seed", "7", "--format", "records",
                "attn", "--seq-len", "32", "--block-r", "4", "--block-c", "4",
                "--w", "0.5", "--sparsity", "40", "--trials", "5", "--no-timings"]
        r1 = runner.invoke(main, args)
        r2 = runner.invoke(main, args)
        assert r1.exit_code == r2.exit_code == 0
        assert r1.output == r2.output

    def test_out_writes_records_and_figure(self, runner, tmp_path):
        out = tmp_path / "report"
        result = runner.invoke(main, [
            "attn", "--seq-len", "32", "--block-r", "4", "--block-c", "4",
            "--trials", "2", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        saved = parse_records((out / "records.jsonl").read_text())
        assert len(saved) == 2
        assert (out / "attn_report.png").stat().st_size > 0


class TestKv:
    def test_full_precision_ladder_is_exact(self, runner):
        result = runner.invoke(main, [
            "--format", "records",
            "kv", "--prompt-len", "64", "--gen-len", "8",
            "--segment", "16", "--group", "4", "--bits", "16",
        ])
        assert result.exit_code == 0, result.output
        records = parse_records(result.output)
        assert len(records) == 8
        assert all(rec["max_abs_err"] <= 1e-6 for rec in records)

    def test_deep_ladder_saves_cache_bits(self, runner):
        result = runner.invoke(main, [
            "--format", "records",
            "kv", "--prompt-len", "512", "--gen-len", "4",
            "--segment", "128", "--group", "32", "--bits", "16,8,4,2",
        ])
        assert result.exit_code == 0
        records = parse_records(result.output)
        last = records[-1]
        assert last["theoretical_cache_bits"] < last["baseline_cache_bits"]
        assert last["cache_ratio"] < 1.0

    def test_zero_gen_len_emits_no_records(self, runner):
        result = runner.invoke(main, [
            "--format", "records",
            "kv", "--prompt-len", "32", "--gen-len", "0",
            "--segment", "16", "--group", "4",
        ])
        assert result.exit_code == 0
        assert parse_records(result.output) == []

    def test_group_must_divide_segment(self, runner):
        result = runner.invoke(main, ["kv", "--segment", "10", "--group", "3"])
        assert result.exit_code == 2

    def test_nondecreasing_ladder_rejected(self, runner):
        result = runner.invoke(main, ["kv", "--bits", "16,8,8"])
        assert result.exit_code == 2

    def test_records_rerun_identical(self, runner):
        args = ["--seed", "3", "--format", "records",
                "kv", "--prompt-len", "80", "--gen-len", "6",
                "--segment", "16", "--group", "4", "--bits", "16,8,4"]
        r1 = runner.invoke(main, args)
        r2 = runner.invoke(main, args)
        assert r1.exit_code == r2.exit_code == 0
        assert r1.output == r2.output

    def test_out_writes_records_and_figure(self, runner, tmp_path):
        out = tmp_path / "kvreport"
        result = runner.invoke(main, [
            "kv", "--prompt-len", "64", "--gen-len", "4",
            "--segment", "16", "--group", "4", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert len(parse_records((out / "records.jsonl").read_text())) == 4
        assert (out / "kv_report.png").stat().st_size > 0


class TestFit:
    def write_points(self, tmp_path, noise=0.0):
        xs = np.linspace(0.5, 5.0, 50)
        ys = np.asarray(curve_value(CurveParams(1.0, 2.0, 1.0, 0.0), xs))
        if noise:
            ys = ys + np.random.default_rng(0).normal(0, noise, size=xs.size)
        path = tmp_path / "points.csv"
        path.write_text("# x,y\n" + "".join(f"{x},{y}\n" for x, y in zip(xs, ys)))
        return path

    def test_recovers_generating_parameters(self, runner, tmp_path):
        result = runner.invoke(main, [
            "--format", "records", "fit", "--points", str(self.write_points(tmp_path)),
        ])
        assert result.exit_code == 0, result.output
        (doc,) = parse_records(result.output)
        assert abs(doc["a1"] - 1.0) <= 1e-4
        assert abs(doc["a2"] - 2.0) <= 1e-4
        assert doc["residual"] < 1e-12

    def test_rerun_identical(self, runner, tmp_path):
        points = self.write_points(tmp_path, noise=1e-3)
        args = ["--format", "records", "fit", "--points", str(points)]
        r1 = runner.invoke(main, args)
        r2 = runner.invoke(main, args)
        assert r1.exit_code == r2.exit_code == 0
        assert r1.output == r2.output

    def test_out_writes_doc_and_figure(self, runner, tmp_path):
        out = tmp_path / "fitreport"
        result = runner.invoke(main, [
            "fit", "--points", str(self.write_points(tmp_path)), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "fit.json").is_file()
        assert (out / "fit_report.png").stat().st_size > 0

    def test_too_few_points_usage_error(self, runner, tmp_path):
        path = tmp_path / "few.csv"
        path.write_text("1,2\n2,3\n")
        result = runner.invoke(main, ["fit", "--points", str(path)])
        assert result.exit_code == 2


class TestExportKnowledge:
    def test_exports_entries(self, runner, tile_dir, tmp_path):
        mapping = tmp_path / "knowledge.tsv"
        mapping.write_text("tile_000.png\talpha\ntile_001.png\tbeta\n")
        out = tmp_path / "pack.json"
        result = runner.invoke(main, [
            "export-knowledge", "--tiles", str(tile_dir),
            "--knowledge", str(mapping), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        assert len(doc["entries"]) == 6
        assert doc["entries"][0]["knowledge"] == "alpha"

    def test_unknown_filename_fails(self, runner, tile_dir, tmp_path):
        mapping = tmp_path / "knowledge.tsv"
        mapping.write_text("nope.png\ttext\n")
        result = runner.invoke(main, [
            "export-knowledge", "--tiles", str(tile_dir),
            "--knowledge", str(mapping), "--out", str(tmp_path / "pack.json"),
        ])
        assert result.exit_code == 1
        assert "error[unknown-tile]" in result.output
        assert "nope.png" in result.output


class TestSeedPlumbing:
    def test_env_var_overrides_default(self, runner):
        args = ["--format", "records", "attn", "--seq-len", "16",
                "--block-r", "4", "--block-c", "4", "--no-timings"]
        from_env = runner.invoke(main, args, env={"ATTNMOSAIC_SEED": "9"})
        explicit = runner.invoke(main, ["--seed", "9"] + args)
        assert from_env.exit_code == explicit.exit_code == 0
        assert from_env.output == explicit.output

    def test_flag_beats_env(self, runner):
        base = ["--format", "records", "attn", "--seq-len", "16",
                "--block-r", "4", "--block-c", "4", "--no-timings"]
        flagged = runner.invoke(main, ["--seed", "5"] + base,
                                env={"ATTNMOSAIC_SEED": "9"})
        reference = runner.invoke(main, ["--seed", "5"] + base)
        assert flagged.output == reference.output
        (rec,) = parse_records(flagged.output)
        assert rec["seed"] == 5
