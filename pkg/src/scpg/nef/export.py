"""Plain-text export of populations and factored connections.

Format (line oriented, ``#`` starts a comment)::

    nef-text 1
    network <label>
    population <name> n_neurons=<N> dimensions=<D> radius=<r> seed=<s>
    matrix encoders <N> <D>
    <N rows of D floats>
    matrix gains <N> 1
    ...                      (also biases, max_rates, intercepts)
    input <name> dimensions=<k>
    connection <pre> <post|-> synapse_tau=<tau|none> post_dims=<i,j,..> label=<label>
    matrix decoders <N> <k>  (omitted for connections from inputs)
    matrix transform <rows> <k>
    end

Every matrix header carries its shape, followed by one row per line with
values written as ``%.17g`` so that reading back is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .simulator import Network

MAGIC = "nef-text 1"
POP_MATRICES = ("encoders", "gains", "biases", "max_rates", "intercepts")


def _write_matrix(fh, name, m):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim == 2 and m.shape[0] == 1 and name in POP_MATRICES[1:]:
        m = m.T
    fh.write(f"matrix {name} {m.shape[0]} {m.shape[1]}\n")
    for row in m:
        fh.write(" ".join("%.17g" % v for v in row) + "\n")


def write_network(network: Network, path):
    """Write every population and connection of ``network`` to ``path``."""
    with open(path, "w") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"network {network.label or '-'}\n")
        for name, pop in network.populations.items():
            s = pop.spec
            fh.write(f"population {name} n_neurons={s.n_neurons} dimensions={s.dimensions} "
                     f"radius={s.radius!r} seed={s.seed}\n")
            for m in POP_MATRICES:
                _write_matrix(fh, m, getattr(pop, m))
        for name, k in network.inputs.items():
            fh.write(f"input {name} dimensions={k}\n")
        for c in network.connections:
            tau = "none" if c.synapse is None else repr(c.synapse.tau)
            dims = ",".join(str(int(d)) for d in c.post_dims)
            fh.write(f"connection {c.pre} {c.post or '-'} synapse_tau={tau} post_dims={dims} "
                     f"label={c.label.replace(' ', '_')}\n")
            if c.decoders is not None:
                _write_matrix(fh, "decoders", c.decoders.weights)
            _write_matrix(fh, "transform", c.transform)
        fh.write("end\n")


@dataclass
class TextRecord:
    kind: str
    name: str
    attrs: dict
    matrices: dict = field(default_factory=dict)


def read_network(path) -> list[TextRecord]:
    """Parse a file written by :func:`write_network` into records with their matrices."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0] != MAGIC:
        raise ConfigError(f"{path}: not a {MAGIC!r} file")
    records: list[TextRecord] = []
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        head = parts[0]
        i += 1
        if head == "end":
            break
        if head == "matrix":
            if not records:
                raise ConfigError(f"{path}: matrix outside a record")
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            data = np.array([[float(v) for v in lines[i + r].split()] for r in range(rows)]).reshape(rows, cols)
            records[-1].matrices[name] = data
            i += rows
        elif head in ("network", "population", "input"):
            attrs = dict(p.split("=", 1) for p in parts[2:])
            records.append(TextRecord(head, parts[1], attrs))
        elif head == "connection":
            attrs = dict(p.split("=", 1) for p in parts[3:])
            attrs["pre"], attrs["post"] = parts[1], parts[2]
            records.append(TextRecord(head, attrs.get("label", f"{parts[1]}->{parts[2]}"), attrs))
        else:
            raise ConfigError(f"{path}: unknown record {head!r}")
    return records


def full_weights(network: Network, connection) -> np.ndarray:
    """Dense ``(n_post, n_pre)`` weight matrix of a population-to-population connection.

    Multiplies the factors out: target gains and encoders (over the
    connection's ``post_dims``), the transform and the decoders.
    """
    if connection.decoders is None or connection.post is None:
        raise ConfigError("full weights exist only between two populations")
    post = network.populations[connection.post]
    enc = post.encoders[:, connection.post_dims] / post.radius
    return (post.gains[:, None] * enc) @ connection.transform @ connection.decoders.weights.T
