import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bifurjet.durham import Jet, durham_exclusive, event_preselection, is_btagged, jet_separation, make_jets
from bifurjet.kinematics import Event, Particle

from conftest import massless, random_event


def naive_durham(particles, n_jet):
    """Re-scan every pair each iteration; O(N^3) reference."""
    objs = [(list(p.p4), [i]) for i, p in enumerate(particles)]
    while len(objs) > n_jet:
        best = None
        for i in range(len(objs)):
            for j in range(i + 1, len(objs)):
                (pi, _), (pj, _) = objs[i], objs[j]
                ni = math.sqrt(pi[1] ** 2 + pi[2] ** 2 + pi[3] ** 2)
                nj = math.sqrt(pj[1] ** 2 + pj[2] ** 2 + pj[3] ** 2)
                c = (pi[1] * pj[1] + pi[2] * pj[2] + pi[3] * pj[3]) / (ni * nj)
                c = min(1.0, max(-1.0, c))
                d = 2.0 * min(pi[0], pj[0]) ** 2 * (1.0 - c)
                if best is None or d < best[0]:
                    best = (d, i, j)
        _, i, j = best
        merged = [a + b for a, b in zip(objs[i][0], objs[j][0])]
        objs[i] = (merged, objs[i][1] + objs[j][1])
        del objs[j]
    return [(np.array(p), sorted(m)) for p, m in objs]


def jet(e, direction, members=(0,), btag=False):
    p = massless(e, direction)
    return Jet(p.p4, list(members), btag)


def three_particles():
    th = math.radians(5)
    return Event([massless(10, (0, 0, 1)), massless(1, (math.sin(th), 0, math.cos(th))),
                  massless(8, (0, 0, -1))])


class TestExclusive:
    def test_two_singletons(self):
        ev = Event([massless(5, (1, 0, 0)), massless(5, (-1, 0, 0))])
        assert [j.constituents for j in durham_exclusive(ev, 2)] == [[0], [1]]

    def test_identity_when_njet_equals_n(self, rng):
        ev = random_event(rng, 6)
        jets = durham_exclusive(ev, 6)
        assert [j.constituents for j in jets] == [[i] for i in range(6)]
        for j, p in zip(jets, ev.particles):
            np.testing.assert_array_equal(j.p4, p.p4)

    def test_hand_case(self):
        ev = three_particles()
        jets = durham_exclusive(ev, 2)
        assert [j.constituents for j in jets] == [[0, 1], [2]]
        np.testing.assert_allclose(jets[0].p4, ev.particles[0].p4 + ev.particles[1].p4)
        d_ab = 2 * 1 * (1 - math.cos(math.radians(5)))
        assert d_ab == pytest.approx(0.0076, abs=1e-4)

    def test_tie_breaks_to_lowest_pair(self):
        # +x, +y, -x, -y at equal energy: four neighbouring pairs tie exactly
        ev = Event([massless(10, d) for d in [(1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0)]])
        assert [j.constituents for j in durham_exclusive(ev, 3)] == [[0, 1], [2], [3]]

    @pytest.mark.parametrize("n_jet", [0, 4])
    def test_errors(self, n_jet):
        with pytest.raises(ValueError):
            durham_exclusive(three_particles(), n_jet)

    @given(st.integers(0, 2**31 - 1), st.integers(2, 25), st.integers(1, 6))
    def test_partition_and_conservation(self, seed, n, n_jet):
        n_jet = min(n_jet, n)
        ev = random_event(np.random.default_rng(seed), n)
        jets = durham_exclusive(ev, n_jet)
        assert len(jets) == n_jet
        assert sorted(sum((j.constituents for j in jets), [])) == list(range(n))
        total = ev.p4s().sum(axis=0)
        got = np.sum([j.p4 for j in jets], axis=0)
        assert np.abs(got - total).max() <= 1e-9 * np.abs(total).max()
        for j in jets:
            np.testing.assert_allclose(j.p4, ev.p4s()[j.constituents].sum(axis=0), rtol=1e-12, atol=1e-9)

    @given(st.integers(0, 2**31 - 1), st.integers(2, 20), st.integers(1, 6))
    def test_matches_naive_rescan(self, seed, n, n_jet):
        n_jet = min(n_jet, n)
        ev = random_event(np.random.default_rng(seed), n)
        ours = durham_exclusive(ev, n_jet)
        ref = naive_durham(ev.particles, n_jet)
        assert [j.constituents for j in ours] == [m for _, m in ref]
        for j, (p, _) in zip(ours, ref):
            np.testing.assert_allclose(j.p4, p, rtol=1e-12, atol=1e-12)

    @given(st.integers(0, 2**31 - 1), st.integers(4, 15), st.integers(2, 4))
    def test_permutation_independence(self, seed, n, n_jet):
        rng = np.random.default_rng(seed)
        ev = random_event(rng, n)
        perm = rng.permutation(n)
        shuffled = Event([ev.particles[k] for k in perm])
        a = {frozenset(j.constituents) for j in durham_exclusive(ev, n_jet)}
        b = {frozenset(int(perm[i]) for i in j.constituents) for j in durham_exclusive(shuffled, n_jet)}
        assert a == b


class TestBtag:
    def test_energy_majority(self):
        parts = [Particle(6, 6, 0, 0, "b"), Particle(4, 4, 0, 0, "light")]
        assert is_btagged([0, 1], parts)
        assert not is_btagged([1], parts)
        equal = [Particle(5, 5, 0, 0, "b"), Particle(5, 5, 0, 0, "light")]
        assert not is_btagged([0, 1], equal)

    def test_make_jets_skips_empty(self):
        parts = [Particle(6, 6, 0, 0, "b"), Particle(4, 0, 4, 0, "light")]
        jets = make_jets([[1, 0], []], parts)
        assert len(jets) == 1 and jets[0].constituents == [0, 1] and jets[0].btag


class TestSeparation:
    def test_collinear(self):
        assert jet_separation(jet(10, (1, 0, 0)), jet(30, (1, 0, 0))) == 0.0

    def test_back_to_back(self):
        assert jet_separation(jet(50, (1, 0, 0)), jet(50, (-1, 0, 0))) == pytest.approx(100.0)

    def test_right_angle(self):
        assert jet_separation(jet(10, (1, 0, 0)), jet(99, (0, 1, 0))) == pytest.approx(math.sqrt(200))

    def test_symmetric(self):
        a, b = jet(10, (1, 2, 0)), jet(20, (0, 1, 3))
        assert jet_separation(a, b) == jet_separation(b, a)

    def test_zero_momentum(self):
        with pytest.raises(ValueError):
            jet_separation(Jet(np.array([1.0, 0, 0, 0]), [0]), jet(5, (1, 0, 0)))


class TestPreselection:
    def test_back_to_back_transverse_passes(self):
        ok, reasons = event_preselection([jet(50, (1, 0, 0)), jet(50, (-1, 0, 0))])
        assert ok and reasons == []

    def test_acceptance_cut(self):
        s = math.sqrt(1 - 0.95**2)
        ok, reasons = event_preselection([jet(50, (s, 0, 0.95)), jet(50, (-1, 0, 0))])
        assert not ok and any("acceptance" in r for r in reasons)

    def test_acceptance_boundary_is_exclusive(self):
        s = math.sqrt(1 - 0.9**2)
        ok, _ = event_preselection([jet(50, (s, 0, 0.9)), jet(50, (-s, 0, -0.9))])
        assert not ok

    def test_separation_cut_on_lowest_pt(self):
        # lowest-pT pair: 5 GeV jets back to back give separation 10
        jets = [jet(80, (1, 0, 0)), jet(80, (-1, 0.1, 0)), jet(5, (0, 1, 0)), jet(5, (0, -1, 0))]
        ok, reasons = event_preselection(jets)
        assert not ok and any("separated" in r for r in reasons)

    def test_needs_two_jets(self):
        with pytest.raises(ValueError):
            event_preselection([jet(50, (1, 0, 0))])
