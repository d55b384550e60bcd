#!/usr/bin/env python3
"""Regenerate the bundled datasets under data/.

Every dataset is either synthetic or a classic public-domain measurement
set shipped with scikit-learn, so the repository needs no network access
to run the demo config or the test suite. Generation is fully seeded;
rerunning this script reproduces the committed files byte for byte.

Floats are written with repr(), i.e. shortest round-trip notation, so the
C++ reader recovers the exact IEEE values and derived-feature relations
(area = pi * r^2 and friends) hold to machine precision.
"""

import json
import math
from pathlib import Path

import numpy as np
from sklearn.datasets import load_iris

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def fmt(v):
    if isinstance(v, str):
        return v
    f = float(v)
    if f == int(f) and abs(f) < 1e15:
        return repr(int(f))
    return repr(f)


def write_csv(name, header, rows):
    path = DATA_DIR / f"{name}.csv"
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    print(f"{path.name}: {len(rows)} rows")


def margin_range(values, pad=0.05):
    lo, hi = float(np.min(values)), float(np.max(values))
    span = max(hi - lo, 1e-9)
    return [lo - pad * span, hi + pad * span]


def write_schema(name, columns, target, constraints=None):
    doc = {"target": target, "columns": columns}
    if constraints:
        doc["constraints"] = constraints
    path = DATA_DIR / f"{name}.schema.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")


def numeric_cols(header, rows, names):
    cols = {}
    arr = np.array([[row[header.index(n)] for n in names] for row in rows], dtype=float)
    for i, n in enumerate(names):
        cols[n] = arr[:, i]
    return cols


def make_iris():
    bunch = load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    rows = []
    for x, t in zip(bunch.data, bunch.target):
        rows.append(list(x) + [bunch.target_names[t]])
    header = names + ["species"]
    write_csv("iris", header, rows)
    cols = numeric_cols(header, rows, names)
    columns = [{"name": n, "kind": "numeric", "range": margin_range(cols[n])} for n in names]
    columns.append({
        "name": "species",
        "kind": "categorical",
        "categories": ["setosa", "versicolor", "virginica"],
    })
    write_schema("iris", columns, "species")


def make_synth_linear(rng):
    # Two anti-diagonal bands: the signed offset s = x1 + x2 determines the
    # class, the spread d = x1 - x2 is uninformative. The class counts are
    # deliberately lopsided so the global feature mean lands inside the
    # majority band's support rather than in the empty margin between bands.
    rows = []
    for label, count, lo, hi in (("high", 880, 0.4, 2.0), ("low", 320, -2.0, -0.4)):
        s = rng.uniform(lo, hi, count)
        d = rng.uniform(-3.0, 3.0, count)
        for si, di in zip(s, d):
            rows.append([(si + di) / 2.0, (si - di) / 2.0, label])
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    header = ["x1", "x2", "label"]
    write_csv("synth_linear", header, rows)
    cols = numeric_cols(header, rows, ["x1", "x2"])
    columns = [
        {"name": "x1", "kind": "numeric", "range": margin_range(cols["x1"])},
        {"name": "x2", "kind": "numeric", "range": margin_range(cols["x2"])},
        {"name": "label", "kind": "categorical", "categories": ["high", "low"]},
    ]
    write_schema("synth_linear", columns, "label")
    s = cols["x1"] + cols["x2"]
    print(f"  synth_linear mean offset: {np.mean(s):.4f} (band edges at +-0.4)")


def make_synth_cat(rng):
    color_effect = {"blue": -2.0, "green": 0.0, "red": 2.0}
    size_effect = {"large": 1.5, "medium": 0.0, "small": -1.5}
    gloss_effect = {"no": -0.8, "yes": 0.8}
    rows = []
    combos = [(c, s, g) for c in sorted(color_effect) for s in sorted(size_effect)
              for g in sorted(gloss_effect)]
    for color, size, gloss in combos:
        score = color_effect[color] + size_effect[size] + gloss_effect[gloss]
        if abs(score) < 0.5:
            continue  # ambiguous cells would make the labels unlearnable
        label = "one" if score > 0 else "zero"
        for _ in range(24):
            rows.append([color, size, gloss, label])
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    write_csv("synth_cat", ["color", "size", "gloss", "label"], rows)
    columns = [
        {"name": "color", "kind": "categorical", "categories": sorted(color_effect)},
        {"name": "size", "kind": "categorical", "categories": sorted(size_effect)},
        {"name": "gloss", "kind": "binary", "categories": sorted(gloss_effect)},
        {"name": "label", "kind": "categorical", "categories": ["one", "zero"]},
    ]
    write_schema("synth_cat", columns, "label")
    counts = {}
    for r in rows:
        counts[r[3]] = counts.get(r[3], 0) + 1
    print(f"  synth_cat class counts: {counts}")


def make_synth_mixed(rng):
    color_effect = {"blue": -1.2, "green": 0.0, "red": 1.2}
    flag_effect = {"no": -0.6, "yes": 0.6}
    rows = []
    colors, flags = sorted(color_effect), sorted(flag_effect)
    while len(rows) < 400:
        u1, u2 = rng.uniform(-2.0, 2.0, 2)
        color = colors[rng.integers(len(colors))]
        flag = flags[rng.integers(len(flags))]
        score = u1 + u2 + color_effect[color] + flag_effect[flag]
        if abs(score) < 0.35:
            continue
        rows.append([u1, u2, color, flag, "hi" if score > 0 else "lo"])
    header = ["u1", "u2", "color", "flag", "label"]
    write_csv("synth_mixed", header, rows)
    cols = numeric_cols(header, rows, ["u1", "u2"])
    columns = [
        {"name": "u1", "kind": "numeric", "range": margin_range(cols["u1"])},
        {"name": "u2", "kind": "numeric", "range": margin_range(cols["u2"])},
        {"name": "color", "kind": "categorical", "categories": colors},
        {"name": "flag", "kind": "binary", "categories": flags},
        {"name": "label", "kind": "categorical", "categories": ["hi", "lo"]},
    ]
    write_schema("synth_mixed", columns, "label")


def make_geometry(rng):
    rows = []
    while len(rows) < 220:
        radius = rng.uniform(0.5, 5.0)
        if abs(radius - 2.75) < 0.15:
            continue
        texture = rng.uniform(8.0, 30.0)
        area = math.pi * radius * radius
        rows.append([radius, texture, area, "large" if radius > 2.75 else "small"])
    header = ["radius", "texture", "area", "size_class"]
    write_csv("geometry", header, rows)
    cols = numeric_cols(header, rows, ["radius", "texture", "area"])
    columns = [{"name": n, "kind": "numeric", "range": margin_range(cols[n])}
               for n in ["radius", "texture", "area"]]
    columns.append({"name": "size_class", "kind": "categorical",
                    "categories": ["large", "small"]})
    write_schema("geometry", columns, "size_class",
                 constraints=[{"relation": "area = pi * radius ^ 2"}])


def make_aspect(rng):
    rows = []
    while len(rows) < 220:
        width = rng.uniform(10.0, 400.0)
        height = rng.uniform(10.0, 400.0)
        ratio = width / height
        if abs(math.log(ratio)) < 0.1:
            continue
        depth = rng.uniform(1.0, 50.0)
        rows.append([width, height, ratio, depth, "wide" if ratio > 1.0 else "tall"])
    header = ["width", "height", "ratio", "depth", "shape"]
    write_csv("aspect", header, rows)
    cols = numeric_cols(header, rows, ["width", "height", "ratio", "depth"])
    columns = [{"name": n, "kind": "numeric", "range": margin_range(cols[n])}
               for n in ["width", "height", "ratio", "depth"]]
    columns.append({"name": "shape", "kind": "categorical", "categories": ["tall", "wide"]})
    write_schema("aspect", columns, "shape",
                 constraints=[{"relation": "ratio = width / height"}])


def make_pbc_like(rng):
    # Document-layout style blocks: five measured quantities and five derived
    # ones tied to them by fixed algebra.
    rows = []
    while len(rows) < 260:
        height = int(rng.integers(5, 81))
        length = int(rng.integers(5, 401))
        area = height * length
        eccen = length / height
        if abs(eccen - 3.5) < 0.2:
            continue
        blackpix = int(rng.integers(1, area + 1))
        blackand = int(rng.integers(blackpix, area + 1))
        wb_trans = int(rng.integers(1, max(2, blackpix + 1)))
        p_black = blackpix / area
        p_and = blackand / area
        mean_tr = blackpix / wb_trans
        label = "text" if eccen > 3.5 else "other"
        rows.append([height, length, area, eccen, p_black, p_and, mean_tr,
                     blackpix, blackand, wb_trans, label])
    header = ["height", "length", "area", "eccen", "p_black", "p_and", "mean_tr",
              "blackpix", "blackand", "wb_trans", "block_class"]
    write_csv("pbc_like", header, rows)
    names = header[:-1]
    cols = numeric_cols(header, rows, names)
    columns = [{"name": n, "kind": "numeric", "range": margin_range(cols[n])} for n in names]
    columns.append({"name": "block_class", "kind": "categorical",
                    "categories": ["other", "text"]})
    write_schema("pbc_like", columns, "block_class", constraints=[
        {"relation": "area = height * length"},
        {"relation": "eccen = length / height"},
        {"relation": "p_black = blackpix / area"},
        {"relation": "p_and = blackand / area"},
        {"relation": "mean_tr = blackpix / wb_trans"},
    ])


def main():
    DATA_DIR.mkdir(exist_ok=True)
    make_iris()
    make_synth_linear(np.random.default_rng(20240601))
    make_synth_cat(np.random.default_rng(20240602))
    make_synth_mixed(np.random.default_rng(20240603))
    make_geometry(np.random.default_rng(20240604))
    make_aspect(np.random.default_rng(20240605))
    make_pbc_like(np.random.default_rng(20240606))


if __name__ == "__main__":
    main()
