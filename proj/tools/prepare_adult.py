#!/usr/bin/env python3
"""Convert the UCI Adult census files into 123-feature binary LibSVM files.

Continuous columns are discretized into training-set quantile bins (capital
gain/loss as zero vs. nonzero), categorical columns are one-hot encoded, and a
missing value ('?') leaves its group all-zero. Labels: +1 for '>50K', -1 otherwise.

usage: prepare_adult.py RAW_DIR OUT_DIR
"""
import sys
from pathlib import Path

import numpy as np

COLUMNS = [
    ("age", 5),
    ("workclass", ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                   "Local-gov", "State-gov", "Without-pay", "Never-worked"]),
    ("fnlwgt", 5),
    ("education", ["Bachelors", "Some-college", "11th", "HS-grad", "Prof-school",
                   "Assoc-acdm", "Assoc-voc", "9th", "7th-8th", "12th", "Masters",
                   "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool"]),
    ("education-num", 5),
    ("marital-status", ["Married-civ-spouse", "Divorced", "Never-married", "Separated",
                        "Widowed", "Married-spouse-absent", "Married-AF-spouse"]),
    ("occupation", ["Tech-support", "Craft-repair", "Other-service", "Sales",
                    "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                    "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                    "Transport-moving", "Priv-house-serv", "Protective-serv",
                    "Armed-Forces"]),
    ("relationship", ["Wife", "Own-child", "Husband", "Not-in-family", "Other-relative",
                      "Unmarried"]),
    ("race", ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"]),
    ("sex", ["Female", "Male"]),
    ("capital-gain", 2),
    ("capital-loss", 2),
    ("hours-per-week", 5),
    ("native-country", ["United-States", "Cambodia", "England", "Puerto-Rico", "Canada",
                        "Germany", "Outlying-US(Guam-USVI-etc)", "India", "Japan",
                        "Greece", "South", "China", "Cuba", "Iran", "Honduras",
                        "Philippines", "Italy", "Poland", "Jamaica", "Vietnam", "Mexico",
                        "Portugal", "Ireland", "France", "Dominican-Republic", "Laos",
                        "Ecuador", "Taiwan", "Haiti", "Columbia", "Hungary", "Guatemala",
                        "Nicaragua", "Scotland", "Thailand", "Yugoslavia", "El-Salvador",
                        "Trinadad&Tobago", "Peru", "Hong", "Holand-Netherlands"]),
]


def read_rows(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 15:
            raise ValueError(f"{path}: unexpected row {line!r}")
        rows.append(fields)
    return rows


def bin_edges(values, bins):
    if bins == 2:
        return np.array([0.5])
    qs = np.quantile(values, np.linspace(0, 1, bins + 1)[1:-1])
    return qs


def encode(rows, edges):
    lines = []
    for fields in rows:
        feats = []
        offset = 0
        for col, (name, spec) in enumerate(COLUMNS):
            value = fields[col]
            if isinstance(spec, int):
                if value != "?":
                    v = float(value)
                    feats.append(offset + int(np.searchsorted(edges[name], v, side="right")))
                offset += spec
            else:
                if value in spec:
                    feats.append(offset + spec.index(value))
                offset += len(spec)
        label = "+1" if fields[14].rstrip(".") == ">50K" else "-1"
        lines.append(label + "".join(f" {f + 1}:1" for f in feats))
    return lines


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    raw, out = Path(sys.argv[1]), Path(sys.argv[2])
    train = read_rows(raw / "adult.data")
    test = read_rows(raw / "adult.test")
    edges = {}
    for col, (name, spec) in enumerate(COLUMNS):
        if isinstance(spec, int):
            values = np.array([float(r[col]) for r in train if r[col] != "?"])
            edges[name] = bin_edges(values, spec)
    out.mkdir(parents=True, exist_ok=True)
    (out / "adult.train").write_text("\n".join(encode(train, edges)) + "\n")
    (out / "adult.test").write_text("\n".join(encode(test, edges)) + "\n")
    total = sum(s if isinstance(s, int) else len(s) for _, s in COLUMNS)
    print(f"train={len(train)} test={len(test)} d={total}")


if __name__ == "__main__":
    main()
