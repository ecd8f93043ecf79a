"""Smoke test for the ocrdir_py extension module.

Build and stage the module first:

    cargo build -p ocrdir-py --release --features extension-module
    cp target/release/libocrdir_py.so python/ocrdir_py.so
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import ocrdir_py as oc  # noqa: E402


def main() -> None:
    t, r = oc.gen_pair("translated_blob", 32, 32, seed=0)
    assert (t.m, t.n) == (32, 32)
    assert len(t.rows()) == 32 and len(t.rows()[0]) == 32

    res = oc.register(t, r, n_steps=8)
    m = res.metrics
    assert m["re_ssd"] is not None and m["re_ssd"] < 1.0, m
    assert m["r_min"] > 0.0, m
    assert abs(m["det_mean"] - 1.0) < 0.01, m
    assert res.per_step_csv().startswith("t,dt,r_min")
    u1, u2 = res.displacement
    assert oc.min_triangle_ratio(u1, u2) > 0.0
    assert oc.re_ssd(t, r, res.warped) == m["re_ssd"]

    same = oc.register(t, t, n_steps=4)
    assert same.metrics["re_ssd"] is None
    assert math.isinf(same.metrics["psnr"])
    assert all(abs(v - 1.0) < 1e-12 for row in same.det_jacobian for v in row)

    demons = oc.register_demons(t, r, iters=20)
    assert demons.steps == 20
    v1, v2 = oc.active_demons(t, r, iters=20)
    assert len(v1) == 32 and len(v2[0]) == 32

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "t.pgm")
        oc.save_pgm(t, path)
        back = oc.load_image(path)
        err = max(abs(a - b) for ra, rb in zip(back.rows(), t.rows()) for a, b in zip(ra, rb))
        assert err <= 1.0 / 255.0, err
        try:
            oc.load_image(os.path.join(d, "missing.pgm"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise")

    try:
        oc.register(t, r, gamma=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative gamma should raise")

    img = oc.Image([[0.0, 0.5, 1.0]] * 3)
    assert (img.m, img.n) == (3, 3) and abs(img.mean() - 0.5) < 1e-15
    print("smoke test passed:", res)


if __name__ == "__main__":
    main()
