"""Smoke test for the dpcr_py extension: synthesize a pair, train-free checks, register."""

import math
import sys
import tempfile

import dpcr_py as d


def main(model_path=None):
    t = d.RigidTransform.from_axis_angle([0.0, 0.0, 1.0], 0.7, [0.3, -0.2, 0.1])
    src = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.2, 0.4, 0.9]]
    fit = d.estimate_rigid(src, [t.apply(p) for p in src])
    re, te = d.pose_errors(fit, t)
    assert re < 1e-6 and te < 1e-9, (re, te)

    source, target, gt, cs_src, cs_tgt = d.scene_pair(overlap=0.6, inlier_ratio=0.1, points_per_view=800, seed=3)
    assert len(source) > 0 and len(target) > 0
    hyps = d.hypotheses(cs_src, cs_tgt, k=50, seed=1)
    assert [h.rank for h in hyps] == list(range(len(hyps)))
    best = min(d.pose_errors(h.transform, gt)[0] for h in hyps)
    print(f"{len(hyps)} hypotheses, best rotation error {best:.3f} deg")

    if model_path:
        model = d.ScorerModel.load(model_path)
        s = model.score(source, target, gt)
        assert 0.0 <= s <= 1.0 and not math.isnan(s)
        out = d.register(source, target, cs_src, cs_tgt, model, m=50)
        print(f"registered: score {out.score:.3f} rank {out.rank} scanned {out.scanned}", d.pose_errors(out.transform, gt))
    print("smoke test ok")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
