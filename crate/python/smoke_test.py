"""Smoke test for the radiogram Python module.

Build and install first, e.g. `pip install --no-build-isolation ./crates/py`.
"""

import json
import sys

import radiogram as rg


def main() -> int:
    d = rg.Design("TET_TET", "TET")
    moves = d.applicable_moves()
    assert len(moves) == 24, len(moves)

    # every label on one face places the same solid, so L1 keys agree
    firsts = [d.apply(m) for m in moves[:6]]
    assert len({x.key("l1") for x in firsts}) == 1
    assert len({x.key("l0") for x in firsts}) == 6

    helix = rg.Design("TET_OCT", "TET")
    for m in [rg.Move(0, 0, "TET"), rg.Move(0, 1, "TET"), rg.Move(1, 1, "TET")]:
        helix = helix.apply(m)
    twin, chiral = helix.mirror_twin()
    assert chiral and twin.key("l2") != helix.key("l2")
    assert twin.key("l3") == helix.key("l3")

    again = rg.Design.from_json(helix.to_json())
    assert again == helix

    frame = helix.frame()
    stats = frame.stats()
    assert frame.node_count == 7 and len(frame.struts) == 15
    assert stats["connected"] and stats["chiral"]
    obj = frame.to_obj()
    assert sum(line.startswith("v ") for line in obj.splitlines()) == 7

    try:
        helix.apply(rg.Move(0, 0, "TET"))
    except rg.GrammarError as e:
        assert "FaceOccupied" in str(e)
    else:
        raise AssertionError("reused face was accepted")

    report = rg.paper_check()
    labeled = [report["labeled_counts"][g] for g in ("TET_TET", "OCT_OCT", "TET_OCT")]
    print("labeled", *labeled, "|", report["labeled_total"])
    assert labeled == [24, 48, 1152] and report["labeled_total"] == 1224

    reps = rg.catalog("oct", 1, level="l1")
    assert len(reps) == 8
    print(json.dumps(rg.ladder_report("tet", 1)["blind"]))
    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
