"""Fixed-step spiking simulator for networks of NEF populations.

Connections are kept in factored form: each population decodes its spikes
with one or more decoder matrices, the decoded signals pass through linear
transforms and per-connection low-pass synapses, and the filtered values are
re-encoded by the target population.  Everything is compiled into flat sparse
matrices so that one time step is a handful of vectorised operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ConfigError, DivergenceError
from .decoders import DecoderMatrix, Synapse
from .neurons import lif_rate, lif_step
from .population import Population


@dataclass
class Connection:
    pre: str
    post: str | None
    decoders: DecoderMatrix | None
    transform: np.ndarray
    synapse: Synapse | None
    post_dims: np.ndarray
    label: str = ""


@dataclass
class Probe:
    kind: str
    target: str
    connection: Connection | None = None
    neurons: np.ndarray | None = None
    data: list = field(default_factory=list)


class Network:
    """Container describing populations, external inputs, connections and probes."""

    def __init__(self, label=""):
        self.label = label
        self.populations: dict[str, Population] = {}
        self.inputs: dict[str, int] = {}
        self.connections: list[Connection] = []
        self.probes: dict[str, Probe] = {}

    def add_population(self, name, pop: Population):
        if name in self.populations or name in self.inputs:
            raise ConfigError(f"duplicate object name {name!r}")
        self.populations[name] = pop
        return name

    def add_input(self, name, dimensions):
        if name in self.populations or name in self.inputs:
            raise ConfigError(f"duplicate object name {name!r}")
        self.inputs[name] = int(dimensions)
        return name

    def _source_dims(self, pre, decoders):
        if pre in self.populations:
            if decoders is None:
                raise ConfigError(f"connection from population {pre!r} needs decoders")
            if decoders.n_neurons != self.populations[pre].n_neurons:
                raise ConfigError(f"decoders for {pre!r} have the wrong number of neurons")
            return decoders.output_dimensions
        if pre in self.inputs:
            return self.inputs[pre]
        raise ConfigError(f"unknown connection source {pre!r}")

    def connect(self, pre, post, decoders=None, transform=None, synapse=None, post_dims=None, label=""):
        """Add a connection; ``transform`` maps the decoded/input vector onto ``post_dims``."""
        k = self._source_dims(pre, decoders)
        if post not in self.populations:
            raise ConfigError(f"unknown connection target {post!r}")
        d_post = self.populations[post].dimensions
        post_dims = np.arange(d_post) if post_dims is None else np.atleast_1d(np.asarray(post_dims, dtype=int))
        if np.any(post_dims < 0) or np.any(post_dims >= d_post):
            raise ConfigError(f"post_dims {post_dims.tolist()} out of range for {post!r}")
        transform = np.eye(len(post_dims), k) if transform is None else np.atleast_2d(np.asarray(transform, float))
        if transform.shape != (len(post_dims), k):
            raise ConfigError(f"transform shape {transform.shape} != {(len(post_dims), k)} for {pre}->{post}")
        conn = Connection(pre, post, decoders, transform, synapse, post_dims, label or f"{pre}->{post}")
        self.connections.append(conn)
        return conn

    def probe(self, name, target, kind="decoded", decoders=None, synapse=None, neurons=None):
        """Register a probe: ``decoded`` (filtered decoded value) or ``spikes``."""
        if name in self.probes:
            raise ConfigError(f"duplicate probe {name!r}")
        if kind == "decoded":
            k = self._source_dims(target, decoders)
            conn = Connection(target, None, decoders, np.eye(k), synapse, np.arange(k), f"probe:{name}")
            self.probes[name] = Probe(kind, target, connection=conn)
        elif kind == "spikes":
            if target not in self.populations:
                raise ConfigError(f"spike probe target {target!r} is not a population")
            n = self.populations[target].n_neurons
            idx = np.arange(n) if neurons is None else np.asarray(neurons, dtype=int)
            self.probes[name] = Probe(kind, target, neurons=idx)
        else:
            raise ConfigError(f"unknown probe kind {kind!r}")
        return name


class Simulator:
    """Advance a compiled :class:`Network` with a fixed step ``dt``.

    ``mode="rate"`` replaces spikes by steady-state LIF rates, which is useful
    as a noise-free reference for the same weights.
    """

    def __init__(self, network: Network, dt=0.001, seed=0, mode="spiking", init_voltage_noise=1.0):
        if dt <= 0:
            raise ConfigError(f"dt must be > 0, got {dt}")
        if mode not in ("spiking", "rate"):
            raise ConfigError(f"unknown neuron mode {mode!r}")
        self.network = network
        self.dt = float(dt)
        self.mode = mode
        self.n_steps = 0
        self._compile(np.random.default_rng(seed), init_voltage_noise)

    @property
    def t(self) -> float:
        return self.n_steps * self.dt

    def _compile(self, rng, init_voltage_noise):
        net = self.network
        names = list(net.populations)
        pops = [net.populations[n] for n in names]
        self._pop_names = names
        n_per = np.array([p.n_neurons for p in pops], dtype=int)
        self._neuron_offset = dict(zip(names, np.concatenate([[0], np.cumsum(n_per)[:-1]])))
        dims = np.array([p.dimensions for p in pops], dtype=int)
        self._dim_offset = dict(zip(names, np.concatenate([[0], np.cumsum(dims)[:-1]])))
        n_total, d_total = int(n_per.sum()), int(dims.sum())
        self.n_neurons = n_total

        # encoders: J = enc @ U + bias, U = stacked population input vectors
        rows, cols, vals = [], [], []
        for name, p in zip(names, pops):
            n0, d0 = self._neuron_offset[name], self._dim_offset[name]
            r, c = np.meshgrid(np.arange(p.n_neurons), np.arange(p.dimensions), indexing="ij")
            rows.append((r + n0).ravel())
            cols.append((c + d0).ravel())
            vals.append((p.encoders * (p.gains / p.radius)[:, None]).ravel())
        self._enc = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                  shape=(n_total, d_total))
        self._bias = np.concatenate([p.biases for p in pops])
        lifs = {p.lif for p in pops}
        if len(lifs) > 1:
            raise ConfigError("all populations in one simulator must share LifParams")
        self._lif = pops[0].lif

        # unique decoder matrices -> decoded signal rows
        sig_index = {}
        d_rows, d_cols, d_vals = [], [], []
        n_sig = 0
        conns = list(net.connections) + [p.connection for p in net.probes.values() if p.connection]
        for c in conns:
            if c.pre in net.populations and (c.pre, id(c.decoders)) not in sig_index:
                D = c.decoders.weights
                sig_index[(c.pre, id(c.decoders))] = n_sig
                r, k = np.meshgrid(np.arange(D.shape[0]), np.arange(D.shape[1]), indexing="ij")
                d_rows.append((k + n_sig).ravel())
                d_cols.append((r + self._neuron_offset[c.pre]).ravel())
                d_vals.append(D.ravel())
                n_sig += D.shape[1]
        if n_sig:
            self._dec = sp.csr_matrix((np.concatenate(d_vals), (np.concatenate(d_rows), np.concatenate(d_cols))),
                                      shape=(n_sig, n_total))
        else:
            self._dec = sp.csr_matrix((0, n_total))
        in_offset, n_in = {}, 0
        for name, k in net.inputs.items():
            in_offset[name] = n_in
            n_in += k
        self._input_offset = in_offset
        self._input_values = np.zeros(n_in)

        # connection rows: state = filtered (transform @ source)
        s_r, s_c, s_v, i_r, i_c, i_v, route_r, route_c, decay = [], [], [], [], [], [], [], [], []
        row = 0
        self._conn_rows = {}
        for c in conns:
            m, k = c.transform.shape
            rr, kk = np.meshgrid(np.arange(m) + row, np.arange(k), indexing="ij")
            if c.pre in net.populations:
                base = sig_index[(c.pre, id(c.decoders))]
                s_r.append(rr.ravel()); s_c.append((kk + base).ravel()); s_v.append(c.transform.ravel())
            else:
                base = in_offset[c.pre]
                i_r.append(rr.ravel()); i_c.append((kk + base).ravel()); i_v.append(c.transform.ravel())
            if c.post is not None:
                route_r.append(c.post_dims + self._dim_offset[c.post])
                route_c.append(np.arange(m) + row)
            a = 0.0 if c.synapse is None else c.synapse.decay(self.dt)
            decay.append(np.full(m, a))
            self._conn_rows[id(c)] = slice(row, row + m)
            row += m
        n_rows = row

        def _mat(r, c, v, shape):
            if not r:
                return sp.csr_matrix(shape)
            return sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=shape)

        self._from_sig = _mat(s_r, s_c, s_v, (n_rows, n_sig))
        self._from_in = _mat(i_r, i_c, i_v, (n_rows, n_in))
        self._route = _mat(route_r, route_c, [np.ones(len(r)) for r in route_r], (d_total, n_rows))
        self._decay = np.concatenate(decay) if decay else np.zeros(0)
        self._conn_state = np.zeros(n_rows)
        self._row_owner = np.empty(n_rows, dtype=object)
        for c in conns:
            self._row_owner[self._conn_rows[id(c)]] = c.label

        self.voltage = rng.uniform(0.0, init_voltage_noise * self._lif.v_threshold, n_total) \
            if init_voltage_noise > 0 else np.zeros(n_total)
        self.refractory = np.zeros(n_total)
        self._spikes = np.zeros(n_total, dtype=bool)
        for p in net.probes.values():
            p.data.clear()

    # --- stepping -----------------------------------------------------------------

    def set_input(self, name, value):
        k = self.network.inputs[name]
        value = np.broadcast_to(np.asarray(value, dtype=float), (k,))
        o = self._input_offset[name]
        self._input_values[o:o + k] = value

    def population_input(self, name) -> np.ndarray:
        """Current (filtered) input vector of population ``name``."""
        u = self._route @ self._conn_state
        d0 = self._dim_offset[name]
        return u[d0:d0 + self.network.populations[name].dimensions]

    def connection_value(self, conn: Connection) -> np.ndarray:
        return self._conn_state[self._conn_rows[id(conn)]].copy()

    def step(self, inputs=None):
        """Advance one ``dt``; ``inputs`` maps input-node names to values."""
        if inputs:
            for name, value in inputs.items():
                self.set_input(name, value)
        J = self._enc @ (self._route @ self._conn_state) + self._bias
        if self.mode == "spiking":
            self._spikes = lif_step(J, self.voltage, self.refractory, self.dt, self._lif)
            activity = self._spikes * (1.0 / self.dt)
        else:
            activity = lif_rate(J, self._lif)
        new = self._from_sig @ (self._dec @ activity) + self._from_in @ self._input_values
        self._conn_state *= self._decay
        self._conn_state += (1.0 - self._decay) * new
        self.n_steps += 1
        if not np.all(np.isfinite(self._conn_state)):
            bad = self._row_owner[~np.isfinite(self._conn_state)][0]
            raise DivergenceError(f"non-finite decoded value on {bad} at t={self.t:.3f}s",
                                  module=str(bad), t=self.t)
        self._record()

    def _record(self):
        for p in self.network.probes.values():
            if p.kind == "decoded":
                p.data.append(self._conn_state[self._conn_rows[id(p.connection)]].copy())
            else:
                n0 = self._neuron_offset[p.target]
                fired = np.flatnonzero(self._spikes[n0 + p.neurons])
                if len(fired):
                    p.data.append((self.n_steps, fired))

    def run(self, duration, inputs=None):
        for _ in range(int(round(duration / self.dt))):
            self.step(inputs)

    # --- probe access ---------------------------------------------------------------

    def probe_data(self, name) -> np.ndarray:
        """Decoded probe series ``(n_steps, k)``, or spike events ``(n, 2)`` of ``(t, neuron)``."""
        try:
            p = self.network.probes[name]
        except KeyError:
            raise ConfigError(f"unknown probe {name!r}") from None
        if p.kind == "decoded":
            k = p.connection.transform.shape[0]
            return np.array(p.data).reshape(-1, k)
        if not p.data:
            return np.zeros((0, 2))
        steps = np.concatenate([np.full(len(f), s) for s, f in p.data])
        ids = np.concatenate([p.neurons[f] for _, f in p.data])
        return np.column_stack([steps * self.dt, ids])

    def trange(self) -> np.ndarray:
        return np.arange(1, self.n_steps + 1) * self.dt

    def spikes(self, name) -> np.ndarray:
        """Boolean spike mask of population ``name`` at the last step."""
        n0 = self._neuron_offset[name]
        return self._spikes[n0:n0 + self.network.populations[name].n_neurons].copy()


def simulate_step(sim: Simulator, inputs=None):
    """Advance ``sim`` by one step and return the spike mask of all neurons."""
    sim.step(inputs)
    return sim._spikes.copy()
