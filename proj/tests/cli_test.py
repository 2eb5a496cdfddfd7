import json
import os
import re
import subprocess
import sys
import tempfile

EXE, ROOT = sys.argv[1], sys.argv[2]
CONFIGS = os.path.join(ROOT, "configs")
MEDIUM = os.path.join(ROOT, "media", "homogeneous.json")
failures = []


def run(experiment, config, out, seed=None, env=None):
    cmd = [EXE, experiment, "--config", config, "--out", out]
    if seed is not None:
        cmd += ["--seed", str(seed)]
    e = dict(os.environ, **(env or {}))
    return subprocess.run(cmd, capture_output=True, text=True, env=e).returncode


def expect(name, got, want):
    status = "PASS" if got == want else "FAIL"
    print(f"[{status}] {name}: got {got!r}, want {want!r}")
    if got != want:
        failures.append(name)


def write(tmp, name, data):
    path = os.path.join(tmp, name)
    with open(path, "w") as f:
        json.dump(data, f)
    return path


def read(path):
    with open(path) as f:
        return f.read()


with tempfile.TemporaryDirectory() as tmp:
    for exp in ["validate", "trace", "riccati-check", "beam-residual", "recover-ab", "transform"]:
        expect(f"{exp} exits 0", run(exp, os.path.join(CONFIGS, exp + ".json"), os.path.join(tmp, exp)), 0)

    bad_key = write(tmp, "bad_key.json", {"medium": MEDIUM, "bogus": 1})
    expect("unknown config key exits 2", run("validate", bad_key, os.path.join(tmp, "k")), 2)
    expect("unknown experiment exits 2", run("nosuch", bad_key, os.path.join(tmp, "e")), 2)
    expect("missing config exits 2", run("validate", os.path.join(tmp, "none.json"), os.path.join(tmp, "m")), 2)
    expect("missing medium exits 2",
           run("validate", write(tmp, "no_medium.json", {"grid_n": 5}), os.path.join(tmp, "n")), 2)
    bad_medium = write(tmp, "bad_medium.json", {"box": {"min": [-1, -1, -1], "max": [1, 1, 1], "margin": 0.1},
                                                 "fields": {"lambda": "2", "mu": "-1", "rho": "1",
                                                            "A": "0", "B": "0", "C": "0"}})
    bad_cfg = write(tmp, "bad_med_cfg.json", {"medium": bad_medium})
    expect("validate on an invalid medium exits 1", run("validate", bad_cfg, os.path.join(tmp, "b1")), 1)
    expect("trace on an invalid medium exits 2", run("trace", bad_cfg, os.path.join(tmp, "b2")), 2)

    tf = json.loads(read(os.path.join(CONFIGS, "transform.json")))
    tf["medium"] = MEDIUM
    tf["expected"] = [9.0, 0.0]
    expect("failed check exits 1", run("transform", write(tmp, "tf.json", tf), os.path.join(tmp, "f")), 1)

    empty = write(tmp, "empty.json", {"medium": MEDIUM, "radii": [], "transport_tau": []})
    out = os.path.join(tmp, "empty")
    expect("empty result set exits 0", run("beam-residual", empty, out), 0)
    expect("empty beam_residual.csv is header-only", read(os.path.join(out, "beam_residual.csv")),
           "rho,residual_norm\n")

    br = os.path.join(CONFIGS, "beam-residual.json")
    a, b, c = (os.path.join(tmp, d) for d in ("s1", "s2", "s3"))
    run("beam-residual", br, a, seed=7)
    run("beam-residual", br, b, seed=7)
    run("beam-residual", br, c, seed=7, env={"ELASTOBEAM_THREADS": "2", "ELASTOBEAM_SIMD": "scalar"})
    strip = lambda s: re.sub(r'"timestamp": \{[^}]*\}', '"timestamp": {}', s)
    ma, mb = (read(os.path.join(d, "manifest.json")) for d in (a, b))
    expect("manifest identical modulo timestamp", strip(ma) == strip(mb), True)
    expect("manifest records seed", json.loads(ma)["seed"], 7)
    same = all(read(os.path.join(a, f)) == read(os.path.join(d, f))
               for d in (b, c) for f in ("beam_residual.csv", "transport.csv"))
    expect("outputs identical across runs, threads and kernels", same, True)
    expect("threads override recorded", json.loads(read(os.path.join(c, "manifest.json")))["build"]["threads"], 2)
    run("beam-residual", br, os.path.join(tmp, "s0"))
    expect("default seed is 0", json.loads(read(os.path.join(tmp, "s0", "manifest.json")))["seed"], 0)

    rows = read(os.path.join(a, "beam_residual.csv")).splitlines()
    rho = [float(r.split(",")[0]) for r in rows[1:]]
    expect("beam_residual.csv sorted by rho", rho == sorted(rho) and len(rho) > 0, True)

sys.exit(1 if failures else 0)
