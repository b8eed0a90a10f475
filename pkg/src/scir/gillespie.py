"""Exact event-driven simulation of the networked SCIR chain.

Every waiting time is exponential: activity toggles at state-dependent
rates, infection hazards accumulate over static neighbors and currently
live temporal links, carriers exit at eta_prime (split between progression
and silent recovery), infected recover at delta. Temporal links are
realized at activation time and dissolve when either endpoint deactivates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netgen import LayeredNetwork
from .params import ActivityRates, EpidemicParams, ParameterError

S, C, I, R = 0, 1, 2, 3
STATE_NAMES = ("S", "C", "I", "R")


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    """Initial infections: explicit nodes or a uniformly random count."""

    nodes: tuple | None = None
    count: int | None = None
    state: str = "C"

    def __post_init__(self):
        if (self.nodes is None) == (self.count is None):
            raise ParameterError("seed spec needs exactly one of nodes or count")
        if self.state not in ("C", "I"):
            raise ParameterError("seed state must be C or I")

    def pick(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.nodes is not None:
            nodes = np.asarray(self.nodes, dtype=int)
            if len(nodes) and (nodes.min() < 0 or nodes.max() >= n):
                raise ParameterError("seed node out of range")
            return nodes
        if not 0 <= self.count <= n:
            raise ParameterError("seed count out of range")
        return rng.choice(n, size=self.count, replace=False)


@dataclass
class SimState:
    """Snapshot of the simulation: epidemic codes, activity flags, live links."""

    epi: np.ndarray
    act: np.ndarray
    live_links: set
    t: float


@dataclass
class Trajectory:
    times: np.ndarray
    counts: np.ndarray  # (len(times), 4) compartment totals
    final_state: SimState
    events: list = field(default_factory=list)

    @property
    def prevalence(self) -> float:
        return float(np.sum(self.final_state.epi == R)) / len(self.final_state.epi)


class Simulation:
    """One stochastic run with incrementally maintained hazards."""

    def __init__(self, net: LayeredNetwork, epi_params: EpidemicParams,
                 rates: ActivityRates, rng: np.random.Generator,
                 seeds: SeedSpec | None = None):
        if rates.n != net.n:
            raise ParameterError("rate vectors must match the network size")
        epi_params.validate()
        self.net = net
        self.params = epi_params
        self.rates = rates
        self.rng = rng
        n = net.n
        self.n = n
        self.a_nbrs = [np.flatnonzero(net.a[i]).astype(int) for i in range(n)]
        self.b_nbrs = [np.flatnonzero(net.b[i]).astype(int) for i in range(n)]
        self.epi = np.zeros(n, dtype=np.int8)
        act_prob = rates.activity_probability()
        self.act = (rng.random(n) < act_prob).astype(np.int8)
        self.live: list[set] = [set() for _ in range(n)]
        self.zs = np.zeros(n, dtype=np.int64)
        self.ys = np.zeros(n, dtype=np.int64)
        self.za = np.zeros(n, dtype=np.int64)
        self.ya = np.zeros(n, dtype=np.int64)
        self.t = 0.0
        self.state_counts = np.array([n, 0, 0, 0], dtype=np.int64)
        # initially active pairs hold links with the stationary probability
        for i in range(n):
            if self.act[i] == 1:
                for j in self.b_nbrs[i]:
                    j = int(j)
                    if j > i and self.act[j] == 1 and rng.random() < net.p[i, j]:
                        self.live[i].add(j)
                        self.live[j].add(i)
        seeds = seeds if seeds is not None else SeedSpec(count=1)
        seed_nodes = seeds.pick(n, rng)
        target = C if seeds.state == "C" else I
        for node in seed_nodes:
            self._apply_epi_change(int(node), target)
        self.rate = np.array([self._node_rate(i) for i in range(n)])

    # --- hazard bookkeeping -------------------------------------------------

    def _toggle_rate(self, i: int) -> float:
        state, active = self.epi[i], self.act[i]
        r = self.rates
        if state == S or state == C:
            return r.gamma2[i] if active else r.gamma1[i]
        if state == I:
            return r.gamma2_i[i] if active else r.gamma1_i[i]
        return r.gamma2_r[i] if active else r.gamma1_r[i]

    def _infection_hazard(self, i: int) -> float:
        p = self.params
        beta = p.beta_c * self.zs[i] + p.beta_i * self.ys[i]
        if self.act[i] == 1:
            beta += p.beta_c * self.za[i] + p.beta_i * self.ya[i]
        return beta

    def _node_rate(self, i: int) -> float:
        state = self.epi[i]
        rate = self._toggle_rate(i)
        if state == S:
            rate += self._infection_hazard(i)
        elif state == C:
            rate += self.params.eta_prime
        elif state == I:
            rate += self.params.delta
        return rate

    def _refresh(self, i: int) -> None:
        self.rate[i] = self._node_rate(i)

    # --- state changes ------------------------------------------------------

    def _apply_epi_change(self, i: int, new_state: int) -> None:
        """Move node i to a new compartment and update neighbor pressures."""
        old = self.epi[i]
        self.epi[i] = new_state
        self.state_counts[old] -= 1
        self.state_counts[new_state] += 1
        nbrs = self.a_nbrs[i]
        if old == C:
            self.zs[nbrs] -= 1
        elif old == I:
            self.ys[nbrs] -= 1
        if new_state == C:
            self.zs[nbrs] += 1
        elif new_state == I:
            self.ys[nbrs] += 1
        if self.act[i] == 1 and self.live[i]:
            linked = list(self.live[i])
            if old == C:
                for j in linked:
                    self.za[j] -= 1
            elif old == I:
                for j in linked:
                    self.ya[j] -= 1
            if new_state == C:
                for j in linked:
                    self.za[j] += 1
            elif new_state == I:
                for j in linked:
                    self.ya[j] += 1

    def _realize_links(self, i: int) -> None:
        """Sample fresh temporal links from a newly active node to active neighbors."""
        for j in self.b_nbrs[i]:
            j = int(j)
            if self.act[j] == 1 and self.rng.random() < self.net.p[i, j]:
                self.live[i].add(j)
                self.live[j].add(i)
                if self.epi[j] == C:
                    self.za[i] += 1
                elif self.epi[j] == I:
                    self.ya[i] += 1
                if self.epi[i] == C:
                    self.za[j] += 1
                elif self.epi[i] == I:
                    self.ya[j] += 1

    def _dissolve_links(self, i: int) -> None:
        for j in self.live[i]:
            self.live[j].discard(i)
            if self.epi[i] == C:
                self.za[j] -= 1
            elif self.epi[i] == I:
                self.ya[j] -= 1
        self.live[i].clear()
        self.za[i] = 0
        self.ya[i] = 0

    # --- the core step ------------------------------------------------------

    def total_rate(self) -> float:
        return float(self.rate.sum())

    def step(self):
        """Fire one event; returns (time, node, kind) or None when absorbed."""
        cumulative = np.cumsum(self.rate)
        total = cumulative[-1]
        if total <= 0:
            return None
        self.t += self.rng.exponential(1.0 / total)
        i = int(np.searchsorted(cumulative, self.rng.random() * total, side="right"))
        i = min(i, self.n - 1)
        state = self.epi[i]
        toggle = self._toggle_rate(i)
        draw = self.rng.random() * self.rate[i]
        touched = [i]
        if draw < toggle:
            kind = "deactivate" if self.act[i] == 1 else "activate"
            if self.act[i] == 1:
                touched.extend(self.live[i])
                self._dissolve_links(i)
                self.act[i] = 0
            else:
                self.act[i] = 1
                self._realize_links(i)
                touched.extend(self.live[i])
        elif state == S:
            if self.rng.random() < self.params.kappa:
                self._apply_epi_change(i, C)
                kind = "s_to_c"
            else:
                self._apply_epi_change(i, I)
                kind = "s_to_i"
            touched.extend(self.a_nbrs[i])
            touched.extend(self.live[i])
        elif state == C:
            # carrier exit: progress at eta, silent recovery at eta_prime - eta
            if draw - toggle < self.params.eta:
                self._apply_epi_change(i, I)
                kind = "c_to_i"
            else:
                self._apply_epi_change(i, R)
                kind = "c_to_r"
            touched.extend(self.a_nbrs[i])
            touched.extend(self.live[i])
        elif state == I:
            self._apply_epi_change(i, R)
            kind = "i_to_r"
            touched.extend(self.a_nbrs[i])
            touched.extend(self.live[i])
        else:
            raise SimulationError("removed nodes only toggle activity")
        for j in set(touched):
            self._refresh(int(j))
        return self.t, i, kind

    # --- observation --------------------------------------------------------

    def counts(self) -> np.ndarray:
        return self.state_counts.copy()

    def infectious_remaining(self) -> int:
        return int(self.state_counts[C] + self.state_counts[I])

    def state(self) -> SimState:
        links = {(min(i, j), max(i, j)) for i in range(self.n) for j in self.live[i]}
        return SimState(epi=self.epi.copy(), act=self.act.copy(), live_links=links, t=self.t)


def total_hazards(state: SimState, net: LayeredNetwork, epi_params: EpidemicParams,
                  rates: ActivityRates) -> dict:
    """Recompute every enabled transition rate from scratch (reference oracle)."""
    n = net.n
    epi, act = state.epi, state.act
    live_at = [set() for _ in range(n)]
    for i, j in state.live_links:
        live_at[i].add(j)
        live_at[j].add(i)
    table = {}
    for i in range(n):
        st = epi[i]
        if st in (S, C):
            toggle = rates.gamma2[i] if act[i] else rates.gamma1[i]
        elif st == I:
            toggle = rates.gamma2_i[i] if act[i] else rates.gamma1_i[i]
        else:
            toggle = rates.gamma2_r[i] if act[i] else rates.gamma1_r[i]
        table[(i, "deactivate" if act[i] else "activate")] = float(toggle)
        if st == S:
            zs = sum(1 for j in np.flatnonzero(net.a[i]) if epi[j] == C)
            ys = sum(1 for j in np.flatnonzero(net.a[i]) if epi[j] == I)
            beta = epi_params.beta_c * zs + epi_params.beta_i * ys
            if act[i]:
                za = sum(1 for j in live_at[i] if epi[j] == C and act[j])
                ya = sum(1 for j in live_at[i] if epi[j] == I and act[j])
                beta += epi_params.beta_c * za + epi_params.beta_i * ya
            table[(i, "s_to_c")] = epi_params.kappa * beta
            table[(i, "s_to_i")] = (1.0 - epi_params.kappa) * beta
        elif st == C:
            table[(i, "c_to_i")] = epi_params.eta
            table[(i, "c_to_r")] = epi_params.eta_prime - epi_params.eta
        elif st == I:
            table[(i, "i_to_r")] = epi_params.delta
    return table


def simulate(
    net: LayeredNetwork,
    epi_params: EpidemicParams,
    rates: ActivityRates,
    seeds: SeedSpec,
    rng: np.random.Generator,
    horizon: float | None = None,
    grid=None,
    record_events: bool = False,
    max_events: int = 50_000_000,
) -> Trajectory:
    """Run one realization until no carriers or infected remain (or the horizon)."""
    sim = Simulation(net, epi_params, rates, rng, seeds)
    grid = np.array([], dtype=float) if grid is None else np.asarray(grid, dtype=float)
    grid_pos = 0
    sampled = []
    events = []
    horizon_cap = np.inf if horizon is None else float(horizon)
    for _ in range(max_events):
        if sim.infectious_remaining() == 0:
            break
        before = sim.counts() if grid_pos < len(grid) else None
        fired = sim.step()
        if fired is None:
            break
        t_new = fired[0]
        while grid_pos < len(grid) and grid[grid_pos] < t_new:
            sampled.append(before)
            grid_pos += 1
        if record_events:
            events.append(fired)
        if t_new >= horizon_cap:
            break
    final = sim.counts()
    while grid_pos < len(grid):
        sampled.append(final)
        grid_pos += 1
    times = grid if len(grid) else np.array([sim.t])
    counts = np.array(sampled) if len(grid) else final[None, :]
    return Trajectory(times=times, counts=counts, final_state=sim.state(), events=events)


@dataclass
class EnsembleResult:
    prevalence_mean: float
    prevalence_stderr: float
    prevalences: np.ndarray
    times: np.ndarray
    mean_counts: np.ndarray  # (len(times), 4)
    runs: int
    master_seed: int

    def summary(self) -> dict:
        return {
            "prevalence_mean": self.prevalence_mean,
            "prevalence_stderr": self.prevalence_stderr,
            "runs": self.runs,
            "seed": self.master_seed,
        }


def run_ensemble(
    net: LayeredNetwork,
    epi_params: EpidemicParams,
    rates: ActivityRates,
    seeds: SeedSpec,
    runs: int,
    master_seed: int,
    horizon: float | None = None,
    grid=None,
) -> EnsembleResult:
    """Average prevalence and compartment time series over independent runs."""
    if runs < 1:
        raise ParameterError("need at least one run")
    grid = np.linspace(0.0, 50.0, 101) if grid is None else np.asarray(grid, dtype=float)
    prevalences = np.empty(runs)
    count_sum = np.zeros((len(grid), 4))
    for run_index in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence((master_seed, run_index)))
        traj = simulate(net, epi_params, rates, seeds, rng, horizon=horizon, grid=grid)
        prevalences[run_index] = traj.prevalence
        count_sum += traj.counts
    stderr = float(prevalences.std(ddof=1) / np.sqrt(runs)) if runs > 1 else 0.0
    return EnsembleResult(
        prevalence_mean=float(prevalences.mean()),
        prevalence_stderr=stderr,
        prevalences=prevalences,
        times=grid,
        mean_counts=count_sum / runs,
        runs=runs,
        master_seed=master_seed,
    )
