import csv

from phasekit.analysis import ResponseSet, summarize
from phasekit.report import render_report


def test_report_artifacts(tmp_path, responses_csv):
    responses = ResponseSet.from_csv(responses_csv)
    summary = summarize(responses)
    written = render_report(tmp_path / "report", summary, responses)

    names = {p.name for p in written}
    assert names == {"summary.csv", "posterior.png", "question_scores.png",
                     "category_accuracy.png"}
    for path in written:
        assert path.exists() and path.stat().st_size > 0

    with (tmp_path / "report" / "summary.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    groups = {row["group"] for row in rows}
    assert groups == {"overall", "music", "speech", "other"}
    overall = next(row for row in rows if row["group"] == "overall")
    assert overall["n"] == "26"
    assert 0.4 < float(overall["mean"]) < 0.6
    assert float(overall["p_value"]) > 0.5  # nowhere near rejecting chance


def test_pngs_have_magic_bytes(tmp_path, responses_csv):
    responses = ResponseSet.from_csv(responses_csv)
    written = render_report(tmp_path, summarize(responses), responses)
    for path in written:
        if path.suffix == ".png":
            assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
