import numpy as np
import pytest

from scir.gillespie import (
    I,
    R,
    S,
    SeedSpec,
    Simulation,
    run_ensemble,
    simulate,
    total_hazards,
)
from scir.netgen import LayeredNetwork, gen_random_regular
from scir.params import ActivityRates, EpidemicParams, ParameterError

TABLE1 = EpidemicParams(beta_c=0.1, beta_i=0.2, kappa=1.0, eta=0.56, eta_prime=0.8, delta=1.5)


def two_node_static():
    a = np.array([[0., 1.], [1., 0.]])
    return LayeredNetwork(a=a, b=np.zeros((2, 2)), p=np.zeros((2, 2)))


def uniform_rates(n, gamma1=0.3, gamma2=0.2, gamma1_i=0.0, gamma2_i=0.2):
    return ActivityRates.uniform(n, gamma1, gamma2, gamma1_i, gamma2_i)


class TestHazards:
    def test_all_susceptible_only_toggles(self):
        net = two_node_static()
        rates = uniform_rates(2)
        sim = Simulation(net, TABLE1, rates, np.random.default_rng(0), SeedSpec(nodes=()))
        table = total_hazards(sim.state(), net, TABLE1, rates)
        infection = [r for (i, kind), r in table.items() if kind.startswith("s_to")]
        assert all(r == 0 for r in infection)
        toggles = [r for (i, kind), r in table.items() if kind in ("activate", "deactivate")]
        assert all(r > 0 for r in toggles)

    def test_static_pressure_arithmetic(self):
        # node 0 inactive with 1 carrier and 2 infected static neighbors
        n = 4
        a = np.zeros((n, n))
        for j in (1, 2, 3):
            a[0, j] = a[j, 0] = 1.0
        net = LayeredNetwork(a=a, b=np.zeros((n, n)), p=np.zeros((n, n)))
        epi = EpidemicParams(0.1, 0.2, 0.6, 0.56, 0.8, 1.5)
        rates = ActivityRates(gamma1=np.zeros(n) + 1e-9, gamma2=np.full(n, 5.0),
                              gamma1_i=np.zeros(n), gamma2_i=np.full(n, 5.0))
        sim = Simulation(net, epi, rates, np.random.default_rng(1), SeedSpec(nodes=()))
        sim.act[:] = 0
        for node, state in ((1, 1), (2, 2), (3, 2)):  # C, I, I
            sim._apply_epi_change(node, state)
        for i in range(n):
            sim._refresh(i)
        table = total_hazards(sim.state(), net, epi, rates)
        beta = 0.1 * 1 + 0.2 * 2
        assert table[(0, "s_to_c")] == pytest.approx(0.6 * beta)
        assert table[(0, "s_to_i")] == pytest.approx(0.4 * beta)
        assert sim.rate[0] == pytest.approx(rates.gamma1[0] + beta)

    def test_live_link_pressure(self):
        # active node with one live temporal link to an active carrier
        n = 2
        b = np.array([[0., 1.], [1., 0.]])
        net = LayeredNetwork(a=np.zeros((n, n)), b=b, p=np.where(b > 0, 1.0, 0.0))
        rates = ActivityRates.uniform(n, 5.0, 1e-9, 5.0, 1e-9)
        sim = Simulation(net, TABLE1, rates, np.random.default_rng(2), SeedSpec(nodes=()))
        sim.act[:] = 1
        sim.live[0] = {1}
        sim.live[1] = {0}
        sim._apply_epi_change(1, 1)  # carrier
        for i in range(n):
            sim._refresh(i)
        table = total_hazards(sim.state(), net, TABLE1, rates)
        assert table[(0, "s_to_c")] == pytest.approx(TABLE1.beta_c)

    def test_incremental_matches_recomputation(self):
        n = 30
        a = gen_random_regular(n, 4, seed=3)
        b = gen_random_regular(n, 6, seed=4)
        net = LayeredNetwork(a=a, b=b, p=np.where(b > 0, 0.5, 0.0))
        epi = EpidemicParams(0.1, 0.2, 0.7, 0.56, 0.8, 1.5)
        rates = uniform_rates(n)
        rng = np.random.default_rng(5)
        sim = Simulation(net, epi, rates, rng, SeedSpec(count=3))
        for step in range(300):
            if sim.step() is None:
                break
            if step % 25 == 0:
                table = total_hazards(sim.state(), net, epi, rates)
                per_node = np.zeros(n)
                for (i, _), r in table.items():
                    per_node[i] += r
                assert np.max(np.abs(per_node - sim.rate)) < 1e-9


class TestStep:
    def test_single_event_waiting_time_distribution(self):
        # one node, no infection: the first event is its activity toggle with
        # rate gamma1 or gamma2; waiting times must be exponential
        net = LayeredNetwork(a=np.zeros((1, 1)), b=np.zeros((1, 1)), p=np.zeros((1, 1)))
        rates = ActivityRates(gamma1=[0.7], gamma2=[0.7], gamma1_i=[0.0], gamma2_i=[0.2])
        waits = []
        for k in range(4000):
            sim = Simulation(net, TABLE1, rates, np.random.default_rng((11, k)),
                             SeedSpec(nodes=()))
            t, _, _ = sim.step()
            waits.append(t)
        waits = np.asarray(waits)
        # Exp(0.7): mean 1/0.7, sd 1/0.7
        mean = waits.mean()
        se = waits.std(ddof=1) / np.sqrt(len(waits))
        assert abs(mean - 1 / 0.7) < 4 * se

    def test_activation_with_certain_links(self):
        n = 4
        b = np.zeros((n, n))
        for j in (1, 2, 3):
            b[0, j] = b[j, 0] = 1.0
        net = LayeredNetwork(a=np.zeros((n, n)), b=b, p=np.where(b > 0, 1.0, 0.0))
        rates = ActivityRates(gamma1=[5.0, 1e-12, 1e-12, 1e-12],
                              gamma2=[1e-12, 1e-12, 1e-12, 1e-12],
                              gamma1_i=np.zeros(n), gamma2_i=np.full(n, 0.2))
        rng = np.random.default_rng(0)
        sim = Simulation(net, TABLE1, rates, rng, SeedSpec(nodes=()))
        sim.act[:] = np.array([0, 1, 1, 1], dtype=np.int8)
        for i in range(n):
            sim.live[i].clear()
        sim.za[:] = 0
        sim.ya[:] = 0
        for i in range(n):
            sim._refresh(i)
        _, node, kind = sim.step()
        assert (node, kind) == (0, "activate")
        assert sim.live[0] == {1, 2, 3}

    def test_no_transmission_recovers_only_seeds(self):
        n = 20
        a = gen_random_regular(n, 4, seed=1)
        net = LayeredNetwork(a=a, b=np.zeros((n, n)), p=np.zeros((n, n)))
        epi = EpidemicParams(0.0, 0.0, 1.0, 0.56, 0.8, 1.5)
        rates = uniform_rates(n)
        for k in range(20):
            traj = simulate(net, epi, rates, SeedSpec(count=3),
                            np.random.default_rng((21, k)))
            assert (traj.final_state.epi == R).sum() == 3

    def test_empty_layers_no_infection_beyond_seeds(self):
        n = 15
        b = gen_random_regular(n, 4, seed=2)
        net = LayeredNetwork(a=np.zeros((n, n)), b=b, p=np.zeros((n, n)))  # p = 0
        rates = uniform_rates(n)
        traj = simulate(net, TABLE1, rates, SeedSpec(count=2), np.random.default_rng(3))
        assert (traj.final_state.epi == R).sum() == 2


class TestInvariants:
    def test_live_links_and_counts_along_run(self):
        n = 25
        a = gen_random_regular(n, 4, seed=5)
        b = gen_random_regular(n, 6, seed=6)
        net = LayeredNetwork(a=a, b=b, p=np.where(b > 0, 0.4, 0.0))
        rates = uniform_rates(n)
        sim = Simulation(net, TABLE1, rates, np.random.default_rng(7), SeedSpec(count=2))
        recovered_counts = []
        for _ in range(400):
            if sim.step() is None:
                break
            state = sim.state()
            for (i, j) in state.live_links:
                assert state.act[i] == 1 and state.act[j] == 1
                assert net.b[i, j] == 1
            assert sim.counts().sum() == n
            recovered_counts.append(int((state.epi == R).sum()))
        assert all(b >= a for a, b in zip(recovered_counts, recovered_counts[1:]))

    def test_seed_spec_validation(self):
        with pytest.raises(ParameterError):
            SeedSpec()
        with pytest.raises(ParameterError):
            SeedSpec(nodes=(0,), count=1)
        with pytest.raises(ParameterError):
            SeedSpec(count=1, state="X")


class TestEnsemble:
    def test_zero_beta_prevalence_exact(self):
        n = 30
        a = gen_random_regular(n, 4, seed=8)
        net = LayeredNetwork(a=a, b=np.zeros((n, n)), p=np.zeros((n, n)))
        epi = EpidemicParams(0.0, 0.0, 1.0, 0.56, 0.8, 1.5)
        rates = uniform_rates(n)
        ens = run_ensemble(net, epi, rates, SeedSpec(count=3), runs=50, master_seed=1)
        assert ens.prevalence_mean == pytest.approx(3 / n, abs=1e-12)
        assert ens.prevalence_stderr < 1e-15

    def test_deterministic_given_seed(self):
        n = 20
        a = gen_random_regular(n, 4, seed=9)
        b = gen_random_regular(n, 6, seed=10)
        net = LayeredNetwork(a=a, b=b, p=np.where(b > 0, 0.3, 0.0))
        rates = uniform_rates(n)
        e1 = run_ensemble(net, TABLE1, rates, SeedSpec(count=2), runs=20, master_seed=5)
        e2 = run_ensemble(net, TABLE1, rates, SeedSpec(count=2), runs=20, master_seed=5)
        assert np.array_equal(e1.prevalences, e2.prevalences)
        assert np.array_equal(e1.mean_counts, e2.mean_counts)

    def test_carrier_lingering_raises_prevalence(self):
        # lower total carrier exit with the same eta/eta_prime ratio spreads wider
        n = 60
        a = gen_random_regular(n, 4, seed=11)
        b = gen_random_regular(n, 10, seed=12)
        net = LayeredNetwork(a=a, b=b, p=np.where(b > 0, 0.3, 0.0))
        rates = uniform_rates(n, gamma1=0.2, gamma2=0.2)
        prevs = {}
        for etap in (0.1, 0.8):
            epi = EpidemicParams(0.1, 0.2, 1.0, 0.7 * etap, etap, 1.5)
            ens = run_ensemble(net, epi, rates, SeedSpec(count=2), runs=150, master_seed=4)
            prevs[etap] = ens.prevalence_mean
        assert prevs[0.1] > prevs[0.8]

    def test_grid_sampling_conserves_population(self):
        n = 20
        a = gen_random_regular(n, 4, seed=13)
        net = LayeredNetwork(a=a, b=np.zeros((n, n)), p=np.zeros((n, n)))
        rates = uniform_rates(n)
        ens = run_ensemble(net, TABLE1, rates, SeedSpec(count=2), runs=10, master_seed=2,
                           grid=np.linspace(0, 30, 31))
        assert np.allclose(ens.mean_counts.sum(axis=1), n)
