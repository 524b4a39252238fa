from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from esdp.corpus import (
    DEFAULT_EXTENSIONS,
    Manifest,
    SourceDescriptor,
    build_manifest,
    check_staleness,
    compute_digest,
    load_term_list,
    parse_source_config,
    scan_corpus,
    scan_sources,
)
from esdp.errors import (
    ClockSkewError,
    ConfigurationError,
    EmptyCorpusError,
    SourceUnavailableError,
)

NOW = datetime(2026, 8, 10, 12, 0, 0, tzinfo=timezone.utc)


def desc(root, kind="open-source-project", sid="s1"):
    return SourceDescriptor(id=sid, kind=kind, root=str(root))


def test_scan_empty_directory(tmp_path):
    assert scan_corpus(desc(tmp_path)) == []


def test_scan_orders_lexicographically(tmp_path):
    (tmp_path / "b").mkdir()
    (tmp_path / "a").mkdir()
    (tmp_path / "b" / "Util.java").write_text("class Util {}")
    (tmp_path / "a" / "Test.java").write_text("class Test {}")
    units = scan_corpus(desc(tmp_path))
    assert [u.path for u in units] == ["a/Test.java", "b/Util.java"]


def test_scan_counts_fourteen_files(tmp_path):
    for i in range(14):
        (tmp_path / f"F{i:02d}.java").write_text(f"class F{i:02d} {{}}")
    assert len(scan_corpus(desc(tmp_path))) == 14


def test_scan_filters_extensions(tmp_path):
    (tmp_path / "A.java").write_text("class A {}")
    (tmp_path / "B.txt").write_text("not source")
    units = scan_corpus(desc(tmp_path))
    assert [u.path for u in units] == ["A.java"]
    both = scan_corpus(desc(tmp_path), frozenset({".java", ".txt"}))
    assert len(both) == 2


def test_scan_missing_root_raises(tmp_path):
    with pytest.raises(SourceUnavailableError):
        scan_corpus(desc(tmp_path / "nope"))


def test_scan_rejects_empty_extension_set(tmp_path):
    with pytest.raises(ConfigurationError):
        scan_corpus(desc(tmp_path), frozenset())


def test_build_manifest_requires_descriptors():
    with pytest.raises(ConfigurationError):
        build_manifest([], NOW)


def test_scan_extracts_package(tmp_path):
    (tmp_path / "A.java").write_text("package com.x;\nclass A {}")
    unit = scan_corpus(desc(tmp_path))[0]
    assert unit.package == "com.x"
    assert unit.line(1) == "package com.x;"
    assert unit.line_count == 2


def test_unreadable_file_is_skipped_with_warning(tmp_path, monkeypatch, caplog):
    (tmp_path / "A.java").write_text("class A {}")
    (tmp_path / "B.java").write_text("class B {}")
    real = Path.read_bytes

    def flaky(self):
        if self.name == "A.java":
            raise OSError("simulated failure")
        return real(self)

    monkeypatch.setattr(Path, "read_bytes", flaky)
    with caplog.at_level("WARNING"):
        units = scan_corpus(desc(tmp_path))
    assert [u.path for u in units] == ["B.java"]
    assert any("skipping unreadable" in r.message for r in caplog.records)


def test_digest_changes_iff_bytes_change(tmp_path):
    f = tmp_path / "A.java"
    f.write_text("class A {}")
    first = scan_corpus(desc(tmp_path))[0].digest
    f.write_text("class A {}")
    assert scan_corpus(desc(tmp_path))[0].digest == first
    f.write_text("class A { int x; }")
    assert scan_corpus(desc(tmp_path))[0].digest != first
    assert compute_digest(b"class A {}") == first


def test_build_manifest_empty_dir(tmp_path):
    manifest = build_manifest([desc(tmp_path)], NOW)
    assert len(manifest.sources) == 1
    assert manifest.units == ()
    assert manifest.built_at == NOW


def test_build_manifest_duplicate_ids(tmp_path):
    with pytest.raises(ConfigurationError):
        build_manifest([desc(tmp_path, sid="dup"), desc(tmp_path, sid="dup")], NOW)


def test_build_manifest_five_source_kinds(tmp_path):
    descriptors = []
    for i, kind in enumerate(
        ["open-source-project", "company-project", "standard-library", "authored-api"]
    ):
        d = tmp_path / f"src{i}"
        d.mkdir()
        (d / f"K{i}.java").write_text(f"class K{i} {{}}")
        descriptors.append(desc(d, kind=kind, sid=f"s{i}"))
    terms = tmp_path / "terms.txt"
    terms.write_text("Connection\n")
    descriptors.append(desc(terms, kind="trending-terms", sid="s4"))
    manifest = build_manifest(descriptors, NOW)
    assert len(manifest.sources) == 5
    assert len(manifest.units) == 4  # the terms source contributes no units


def test_build_manifest_all_sources_unavailable(tmp_path):
    with pytest.raises(EmptyCorpusError):
        scan_sources([desc(tmp_path / "gone1"), desc(tmp_path / "gone2", sid="s2")])


def test_build_manifest_tolerates_one_missing_source(tmp_path):
    d = tmp_path / "ok"
    d.mkdir()
    (d / "A.java").write_text("class A {}")
    units = scan_sources([desc(d), desc(tmp_path / "gone", sid="s2")])
    assert [u.path for u in units] == ["A.java"]


def test_rescan_is_identical_except_built_at(tmp_path):
    (tmp_path / "A.java").write_text("package p;\nclass A { int x; }")
    m1 = build_manifest([desc(tmp_path)], NOW)
    m2 = build_manifest([desc(tmp_path)], NOW + timedelta(days=1))
    assert m1.sources == m2.sources
    assert m1.units == m2.units
    assert m1.built_at != m2.built_at


def test_duplicate_unit_paths_across_sources_rejected(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    (a / "Same.java").write_text("class Same {}")
    (b / "Same.java").write_text("class Same {}")
    with pytest.raises(ConfigurationError):
        build_manifest([desc(a, sid="s1"), desc(b, sid="s2")], NOW)


# -- staleness ---------------------------------------------------------------

def manifest_built(days_ago: int, interval: int = 90) -> Manifest:
    return Manifest(
        sources=(), units=(),
        built_at=NOW - timedelta(days=days_ago),
        update_interval_days=interval,
    )


def test_staleness_fresh_today():
    report = check_staleness(manifest_built(0), NOW)
    assert report == type(report)(stale=False, age_days=0)


def test_staleness_just_past_interval():
    report = check_staleness(manifest_built(91), NOW)
    assert report.stale is True
    assert report.age_days == 91


def test_staleness_boundary_day_is_fresh():
    report = check_staleness(manifest_built(90), NOW)
    assert report.stale is False
    assert report.age_days == 90


def test_staleness_clock_skew():
    with pytest.raises(ClockSkewError):
        check_staleness(manifest_built(0), NOW - timedelta(seconds=5))


@given(st.integers(min_value=0, max_value=400), st.integers(min_value=0, max_value=400))
def test_staleness_is_monotone(days_a, days_b):
    manifest = manifest_built(0, interval=90)
    early, late = sorted([days_a, days_b])
    r_early = check_staleness(manifest, NOW + timedelta(days=early))
    r_late = check_staleness(manifest, NOW + timedelta(days=late))
    if r_early.stale:
        assert r_late.stale


# -- term lists ---------------------------------------------------------------

def test_term_list_from_file(tmp_path):
    f = tmp_path / "terms.txt"
    f.write_text("Connection\nXMLParser\n")
    terms = load_term_list(str(f), "t")
    assert terms.terms == ("Connection", "XMLParser")


def test_term_list_empty_file(tmp_path):
    f = tmp_path / "terms.txt"
    f.write_text("")
    assert load_term_list(str(f), "t").terms == ()


def test_term_list_dedups_preserving_first(tmp_path):
    f = tmp_path / "terms.txt"
    f.write_text("a\na\nb\n\n")
    assert load_term_list(str(f), "t").terms == ("a", "b")


def test_term_list_missing_file(tmp_path):
    with pytest.raises(SourceUnavailableError):
        load_term_list(str(tmp_path / "missing.txt"), "t")


# -- source configuration file -------------------------------------------------

def test_parse_source_config(tmp_path):
    (tmp_path / "proj").mkdir()
    cfg = tmp_path / "esdp.cfg"
    cfg.write_text(
        "# comment\n"
        "[options]\n"
        "central = out/central.xml\n"
        "min_support = 3\n"
        "\n"
        "[source]\n"
        "id = p1\n"
        "kind = open-source-project\n"
        "root = proj\n"
        "label = demo project\n"
    )
    parsed = parse_source_config(str(cfg))
    assert parsed.options["min_support"] == "3"
    assert parsed.options["central"] == str(tmp_path / "out/central.xml")
    assert len(parsed.descriptors) == 1
    d = parsed.descriptors[0]
    assert (d.id, d.kind, d.label) == ("p1", "open-source-project", "demo project")
    assert d.root == str(tmp_path / "proj")


def test_parse_source_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[source]\nid = x\nkind = open-source-project\nroot = .\nbogus = 1\n")
    with pytest.raises(ConfigurationError):
        parse_source_config(str(cfg))


def test_parse_source_config_rejects_unknown_section(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[mystery]\nx = 1\n")
    with pytest.raises(ConfigurationError):
        parse_source_config(str(cfg))


def test_parse_source_config_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        parse_source_config(str(tmp_path / "none.cfg"))


def test_descriptor_rejects_unknown_kind(tmp_path):
    with pytest.raises(ConfigurationError):
        SourceDescriptor(id="x", kind="mystery", root=str(tmp_path))
