import math
import struct

import numpy as np
import pytest

from ccfo.errors import (
    CorruptTemplateError,
    DuplicateIdError,
    EmptyGalleryError,
    GridMismatchError,
    ManifestError,
    ParameterMismatchError,
    ShapeMismatchError,
    TemplateVersionError,
    UnknownIdError,
)
from ccfo.evalharness import SynthParams, synth_print
from ccfo.gallery import (
    Gallery,
    GalleryRecord,
    add_record,
    decode_template,
    encode_template,
    enroll,
    identify,
    load_gallery,
    read_template,
    save_gallery,
    verify,
    write_template,
)
from ccfo.matcher import ACCEPT, REJECT, MatchConfig
from ccfo.orientation import OrientationField
from ccfo.pipeline import PipelineConfig, extract_field


def rand_field(seed, shape=(4, 5), n=16, mode="standard"):
    rng = np.random.default_rng(seed)
    return OrientationField(rng.uniform(0, math.pi, shape), rng.uniform(0, 1, shape), n, mode)


def gallery_of(n, shape=(4, 5)):
    g = Gallery()
    for k in range(n):
        g = add_record(g, GalleryRecord(f"p{k:02d}", rand_field(k, shape), f"img{k}.pgm", "2026-01-01T00:00:00Z"))
    return g


def print_of(deg, seed=0, size=256):
    return synth_print(SynthParams(size=size, flow_angle=math.radians(deg), noise_sigma=4, seed=seed))


def test_enroll_into_empty():
    g = enroll(Gallery(), "alice", print_of(10))
    assert len(g) == 1 and "alice" in g
    assert g.grid == (16, 16)


def test_enroll_duplicate():
    g = enroll(Gallery(), "alice", print_of(10))
    with pytest.raises(DuplicateIdError):
        enroll(g, "alice", print_of(20))


def test_enroll_grid_mismatch():
    g = enroll(Gallery(), "a", print_of(10))
    tall = np.zeros((300, 260), np.uint8)
    tall[:256, :256] = print_of(30)
    with pytest.raises(GridMismatchError):
        enroll(g, "b", tall)


def test_enroll_parameter_mismatch():
    with pytest.raises(ParameterMismatchError):
        enroll(Gallery(block_size=16), "a", print_of(10), PipelineConfig(block_size=8))


def test_enroll_returns_new_gallery():
    g0 = Gallery()
    g1 = enroll(g0, "a", print_of(10))
    assert len(g0) == 0 and len(g1) == 1


def test_bad_ids():
    f = rand_field(0)
    for bad in ["", "a\tb", "a\nb", "x/y", ".."]:
        with pytest.raises(ValueError):
            GalleryRecord(bad, f)


def test_identify_self_match():
    g = enroll(Gallery(), "A", print_of(10))
    best, res, ranked = identify(g, g.get("A").field)
    assert best == "A" and res.score == 1.0 and res.decision == ACCEPT
    assert ranked == [("A", 1.0)]


def test_identify_orthogonal_record_scores_zero():
    a = rand_field(1)
    b = OrientationField((a.theta + math.pi / 2) % math.pi, a.coherence, 16)
    g = add_record(add_record(Gallery(), GalleryRecord("A", a)), GalleryRecord("B", b))
    best, res, ranked = identify(g, a)
    assert best == "A" and res.score == 1.0
    assert ranked[1][0] == "B" and ranked[1][1] == pytest.approx(0.0, abs=1e-12)


def test_identify_intruder_still_answers():
    g = Gallery()
    for k, deg in enumerate([0, 10, 20]):
        g = enroll(g, f"id{k}", print_of(deg, seed=k))
    probe = extract_field(print_of(100, seed=9))
    best, res, ranked = identify(g, probe)
    assert all(s < 0.85 for _, s in ranked)
    assert best == ranked[0][0]
    assert res.decision == REJECT


def test_identify_ranked_permutation_and_tiebreak():
    f = rand_field(3)
    g = Gallery()
    for ident in ["zed", "amy", "kim"]:
        g = add_record(g, GalleryRecord(ident, f))
    best, _, ranked = identify(g, f)
    assert [i for i, _ in ranked] == ["amy", "kim", "zed"]
    assert best == "amy"


def test_identify_empty_gallery():
    with pytest.raises(EmptyGalleryError):
        identify(Gallery(), rand_field(0))


def test_identify_grid_mismatch():
    g = gallery_of(2)
    with pytest.raises(ShapeMismatchError):
        identify(g, rand_field(0, shape=(3, 3)))


def test_appending_does_not_change_existing_scores():
    g = gallery_of(3)
    probe = rand_field(99)
    before = dict(identify(g, probe)[2])
    after = dict(identify(add_record(g, GalleryRecord("zz", rand_field(50))), probe)[2])
    for k, v in before.items():
        assert after[k] == v


def test_verify_unknown_id():
    with pytest.raises(UnknownIdError):
        verify(gallery_of(2), "nobody", rand_field(0))


def test_verify_self():
    g = gallery_of(2)
    assert verify(g, "p01", g.get("p01").field, MatchConfig()).score == 1.0


def test_records_kept_in_id_order():
    g = Gallery()
    for ident in ["c", "a", "b"]:
        g = add_record(g, GalleryRecord(ident, rand_field(0)))
    assert g.ids == ["a", "b", "c"]


# --- persistence -------------------------------------------------------------

def test_template_header_layout():
    f = rand_field(0, shape=(2, 3), n=8, mode="paper")
    blob = encode_template(f)
    header = b"CCFO 1\nmode paper\nblock 8\ngrid 2 3\n\n"
    assert blob.startswith(header)
    payload = blob[len(header):]
    assert len(payload) == 2 * 6 * 8
    assert struct.unpack("<6d", payload[:48]) == tuple(f.theta.ravel())
    assert struct.unpack("<6d", payload[48:]) == tuple(f.coherence.ravel())


def test_template_round_trip_with_metadata(tmp_path):
    f = rand_field(7)
    p = tmp_path / "t.ccfo"
    write_template(f, p, "scans/a b.pgm", "2026-10-15T00:00:00Z")
    g, src, when = read_template(p)
    assert g == f and src == "scans/a b.pgm" and when == "2026-10-15T00:00:00Z"


def test_save_load_three_records(tmp_path):
    g = gallery_of(3)
    save_gallery(g, tmp_path / "g")
    h = load_gallery(tmp_path / "g")
    assert h == g
    assert h.ids == g.ids
    manifest = (tmp_path / "g" / "manifest.tsv").read_text()
    assert manifest == "".join(f"p{k:02d}\ttemplates/p{k:02d}.ccfo\n" for k in range(3))


def test_save_load_bit_exact_special_values(tmp_path):
    theta = np.array([[0.0, math.pi - 2 ** -50, 5e-324], [1 / 3, 2.0 ** -1074, math.nextafter(1.0, 0)]])
    f = OrientationField(theta, np.array([[0.0, 1.0, 1e-300], [0.5, 0.25, math.nextafter(1.0, 0)]]), 16)
    save_gallery(add_record(Gallery(), GalleryRecord("x", f)), tmp_path)
    g = load_gallery(tmp_path)
    assert g.get("x").field.theta.tobytes() == theta.astype("<f8").tobytes()


def test_empty_gallery_round_trip(tmp_path):
    save_gallery(Gallery(block_size=8, mode="paper"), tmp_path)
    g = load_gallery(tmp_path, block_size=8, mode="paper")
    assert len(g) == 0 and g.block_size == 8


def test_missing_manifest(tmp_path):
    with pytest.raises(ManifestError, match="manifest"):
        load_gallery(tmp_path)


def test_manifest_references_missing_file(tmp_path):
    save_gallery(gallery_of(2), tmp_path)
    (tmp_path / "templates" / "p01.ccfo").unlink()
    with pytest.raises(ManifestError, match="p01"):
        load_gallery(tmp_path)


def test_template_grid_disagrees_with_payload(tmp_path):
    save_gallery(gallery_of(1), tmp_path)
    p = tmp_path / "templates" / "p00.ccfo"
    p.write_bytes(p.read_bytes().replace(b"grid 4 5", b"grid 5 5"))
    with pytest.raises(CorruptTemplateError):
        load_gallery(tmp_path)


def test_truncated_payload():
    blob = encode_template(rand_field(0))
    with pytest.raises(CorruptTemplateError):
        decode_template(blob[:-8])


def test_unknown_version():
    blob = encode_template(rand_field(0)).replace(b"CCFO 1", b"CCFO 2", 1)
    with pytest.raises(TemplateVersionError):
        decode_template(blob)


@pytest.mark.parametrize("mangle", [
    lambda b: b.replace(b"CCFO", b"XXXX", 1),
    lambda b: b.replace(b"mode standard", b"mode fancy", 1),
    lambda b: b.replace(b"\n\n", b"\n", 1),
    lambda b: b.replace(b"block 16\n", b"", 1),
    lambda b: b.replace(b"block 16\n", b"block 16\ncolor red\n", 1),
])
def test_malformed_headers(mangle):
    with pytest.raises(CorruptTemplateError):
        decode_template(mangle(encode_template(rand_field(0))))


def test_mixed_parameters_rejected_on_load(tmp_path):
    save_gallery(gallery_of(2), tmp_path)
    p = tmp_path / "templates" / "p01.ccfo"
    p.write_bytes(p.read_bytes().replace(b"block 16", b"block 8"))
    with pytest.raises(ParameterMismatchError):
        load_gallery(tmp_path)


def test_gallery_rejects_mixed_records():
    g = gallery_of(1)
    with pytest.raises(ParameterMismatchError):
        add_record(g, GalleryRecord("m", rand_field(1, mode="paper")))
    with pytest.raises(GridMismatchError):
        add_record(g, GalleryRecord("m", rand_field(1, shape=(3, 3))))
