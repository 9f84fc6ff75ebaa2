"""Bit-exact export and reload of quantum theta series coefficients.

Two formats: a CSV table with a fixed header and 17-significant-digit
decimals, rows in the canonical enumeration order, and a JSON mirror that
carries the embedding and structure parameters so a series can be
reloaded and re-exported byte-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .embedding import EmbeddingKind, enumerate_indices, lattice_element
from .qtheta import QuantumThetaSeries

CSV_HEADER = "k1,k2,k3,k4,w1,w2,m1,m2,t1,t2,re,im"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _ambient_columns(series: QuantumThetaSeries, k) -> tuple:
    """Six ambient slots per the element layout.

    Lattice kind: (w1, w2, m1, m2, t1, t2) with unreduced torus lifts.
    Vector-space kind: the M part fills (w1, w2), the dual part (t1, t2),
    and the integer slots are zero.
    """
    el = lattice_element(series.embedding, k)
    if series.kind is EmbeddingKind.LATTICE:
        m1, m2 = el.m_shift
        return (el.w1, el.w2, float(m1), float(m2), el.t_lift[0], el.t_lift[1])
    return (el.m_part[0], el.m_part[1], 0.0, 0.0, el.dual_part[0], el.dual_part[1])


def export_coefficients(series: QuantumThetaSeries, fmt: str, path) -> Path:
    """Write the coefficient table; returns the path written."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [CSV_HEADER]
        for k in enumerate_indices(series.radius):
            c = series.coefficient(k)
            amb = _ambient_columns(series, k)
            lines.append(",".join(
                [str(int(v)) for v in k] + [_fmt(v) for v in amb]
                + [_fmt(c.real), _fmt(c.imag)]))
        path.write_text("\n".join(lines) + "\n", newline="\n")
        return path
    if fmt != "json":
        raise ValueError(f"unknown export format: {fmt}")
    emb = series.embedding
    emb_params = {"kind": emb.kind.value, "theta1": emb.theta1}
    if emb.kind is EmbeddingKind.LATTICE:
        emb_params["m"] = emb.m.tolist()
        emb_params["delta_hat"] = emb.delta_hat.tolist()
    else:
        emb_params["theta2"] = emb.theta2
    from .structures import MixedStructure

    st = series.structure
    if isinstance(st, MixedStructure):
        st_params = {"tau": [st.tau().real, st.tau().imag],
                     "lattice_decay": st.lattice_decay}
    else:
        t = st.tau()
        st_params = {"tau": [[[t[0, 0].real, t[0, 0].imag], [t[0, 1].real, t[0, 1].imag]],
                             [[t[1, 0].real, t[1, 0].imag], [t[1, 1].real, t[1, 1].imag]]]}
    payload = {
        "kind": emb.kind.value,
        "embedding": emb_params,
        "structure": st_params,
        "radius": series.radius,
        "normalization": series.normalization,
        "coefficients": [
            {"k": [int(v) for v in k],
             "ambient": [float(v) for v in _ambient_columns(series, k)],
             "re": series.coefficient(k).real,
             "im": series.coefficient(k).imag}
            for k in enumerate_indices(series.radius)
        ],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", newline="\n")
    return path


def load_series(path) -> QuantumThetaSeries:
    """Reload a JSON coefficient export; values are taken as stored."""
    from .embedding import build_embedding

    data = json.loads(Path(path).read_text())
    e = data["embedding"]
    kind = EmbeddingKind(e["kind"])
    if kind is EmbeddingKind.LATTICE:
        emb = build_embedding(kind, e["theta1"], m=e["m"], delta_hat=e["delta_hat"])
        from .structures import make_complex_structure

        tau = complex(*data["structure"]["tau"])
        structure = make_complex_structure(kind, tau, emb.theta1, emb.theta34,
                                           lattice_decay=data["structure"].get("lattice_decay"))
    else:
        emb = build_embedding(kind, e["theta1"], e["theta2"])
        from .structures import make_complex_structure

        t = data["structure"]["tau"]
        tau = np.array([[complex(*t[0][0]), complex(*t[0][1])],
                        [complex(*t[1][0]), complex(*t[1][1])]])
        structure = make_complex_structure(kind, tau, emb.theta1, emb.theta2)
    coeffs = {tuple(row["k"]): complex(row["re"], row["im"])
              for row in data["coefficients"]}
    return QuantumThetaSeries(emb, structure, data["radius"],
                              data["normalization"], coeffs)
