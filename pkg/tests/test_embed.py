import io
import json

import numpy as np
import pytest

from _fixtures import free_sets_agree, marks_of, pair, partial_run_setup, tetrahedron_example, triple
from blowup.complex import IndexComplex, MarkedComplex, make_complete
from blowup.embed import (BufferInfeasible, ParamConfig, Target, apply_embedding, calibrated, embed, init_state,
                          parse_config_text, select_buffer, validate_embedding)
from blowup.embed.engine import _remaining_core, step
from blowup.embed.sdr import hall_witness, hopcroft_karp
from blowup.gen import InstanceSpec, build_instance, edges_complex, gen_target

X = [(p, 0) for p in range(4)]
XP = [(p, 1) for p in range(4)]


@pytest.fixture(scope="module")
def after_first_step():
    H, GM = tetrahedron_example()
    run = init_state(H, GM, None, [], calibrated(3), check=False)
    v1 = 2
    apply_embedding(run, run.target.vertex(0, 0), v1)
    F, M = run.free.snapshot()
    return GM, v1, F, M, run, H


def test_first_step_on_tetrahedron(after_first_step):
    GM, v1, F, M, _, _ = after_first_step
    G = GM.complex
    n = G.ground.size(0)
    only = np.zeros(n, dtype=bool)
    only[v1] = True
    assert np.array_equal(F[(X[0],)], only)
    for i in (1, 2, 3):
        want = pair(G, 0, i) & only[:, None]
        assert np.array_equal(F[(X[0], X[i])], want)
        assert np.array_equal(F[(X[i],)], pair(G, 0, i)[v1])
    for i, j in ((1, 2), (1, 3), (2, 3)):
        want = triple(G, 0, i, j) & only[:, None, None]
        assert np.array_equal(F[(X[0], X[i], X[j])], want)
        assert np.array_equal(F[(X[i], X[j])], triple(G, 0, i, j)[v1])
    want = (triple(G, 1, 2, 3) & triple(G, 0, 1, 2)[v1][:, :, None] & triple(G, 0, 1, 3)[v1][:, None, :]
            & triple(G, 0, 2, 3)[v1][None, :, :])
    assert np.array_equal(F[(X[1], X[2], X[3])], want)


def test_first_step_on_vertices_outside_the_tetrahedron(after_first_step):
    GM, v1, F, _, _, _ = after_first_step
    G = GM.complex
    assert np.array_equal(F[(XP[1], X[2])], pair(G, 1, 2) & pair(G, 0, 2)[v1][None, :])
    assert np.array_equal(F[(XP[1],)], G.part(G.index.copy((1,))))
    drop = np.ones(G.ground.size(0), dtype=bool)
    drop[v1] = False
    want = triple(G, 0, 1, 2) & drop[:, None, None] & pair(G, 0, 2)[v1][None, None, :]
    assert np.array_equal(F[(XP[0], XP[1], X[2])], want)
    assert np.array_equal(F[(XP[0], XP[2])], pair(G, 0, 2) & drop[:, None])


def test_first_step_marks(after_first_step):
    GM, v1, _, M, _, _ = after_first_step
    assert np.array_equal(M[(X[0], X[1], X[2])], marks_of(GM, 0, 1, 2)[v1])


def test_first_step_agrees_with_oracle(after_first_step):
    GM, _, _, _, run, H = after_first_step
    assert free_sets_agree(run, H, GM, None) == []


@pytest.mark.parametrize("seed", range(6))
def test_free_sets_follow_oracle_step_by_step(seed):
    inst, cfg = partial_run_setup(seed)
    H, GM, gamma = inst["H"], inst["G"], inst["gamma"]
    run = init_state(H, GM, gamma, None, cfg, seed)
    assert free_sets_agree(run, H, GM, gamma) == []
    while _remaining_core(run):
        if step(run) is not None:
            break
        assert free_sets_agree(run, H, GM, gamma) == []


def test_embedding_into_complete_complex():
    idx = IndexComplex.partite(3, 2)
    G = make_complete(idx, [12, 12, 12])
    H = gen_target("clique-factor", [12, 12, 12], 0, k=2).H
    out = embed(H, G, None, calibrated(2), seed=4)
    assert out.ok
    assert validate_embedding(H, MarkedComplex.unmarked(G), None, out.phi) == []


def test_restrictions_are_respected():
    G = make_complete(IndexComplex.partite(3, 2), [12, 12, 12])
    H = gen_target("matching", [12, 12, 12], 1, k=2).H
    allowed = np.zeros(12, dtype=bool)
    allowed[3:10] = True
    gamma = {((0, 5),): allowed}
    for seed in range(5):
        out = embed(H, G, gamma, calibrated(2, c=0.1), seed=seed)
        assert out.ok and 3 <= out.image(0, 5) < 10
    allowed[5:] = False
    out = embed(H, G, gamma, calibrated(2, c=0.1), seed=0)
    assert out.stage == "hypothesis"


def test_validator_catches_bad_maps():
    G = make_complete(IndexComplex.partite(2, 2), [3, 3])
    idx = G.index
    H = edges_complex(idx, [3, 3], [((0, 0), (1, 0))])
    e = idx.copy((0, 1))
    adj = np.ones((3, 3), dtype=bool)
    adj[0, 0] = False
    G2 = MarkedComplex.unmarked(G.replace({**G.parts, e: adj}))
    assert validate_embedding(H, G2, None, {0: np.array([1, 0, 2]), 1: np.array([0, 1, 2])}) == []
    assert validate_embedding(H, G2, None, {0: np.array([0, 1, 2]), 1: np.array([0, 1, 2])})
    assert validate_embedding(H, G2, None, {0: np.array([0, 0, 2]), 1: np.array([0, 1, 2])})


def test_transcripts_are_deterministic():
    spec = InstanceSpec(k=2, r=3, sizes=20, densities={2: 0.8}, theta=0.05, family="clique-factor", seed=3)
    inst = build_instance(spec)
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        embed(inst["H"], inst["G"], inst["gamma"], calibrated(2), seed=11, transcript=buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
    lines = [json.loads(ln) for ln in outs[0].splitlines()]
    assert lines[0]["type"] == "header" and lines[-1]["type"] == "result"


def test_buffer_vertices_are_far_apart():
    H = gen_target("clique-factor", [30, 30, 30], 2, k=2).H
    cfg = ParamConfig(k=2, buffer_fraction=0.1, buffer_distance=3)
    tg = Target(H)
    buf = select_buffer(tg, cfg, None, 0)
    assert len(buf) == 9
    for v in buf:
        near = tg.distances_from(v, cfg.distance - 1)
        assert not (set(near) - {v}) & set(buf)


def test_buffer_infeasible():
    H = gen_target("clique-factor", [4, 4, 4], 0, k=2).H
    with pytest.raises(BufferInfeasible):
        select_buffer(H, ParamConfig(k=2, buffer_fraction=0.9, buffer_distance=3), None, 0)


def test_hypothesis_failure_is_reported():
    G = make_complete(IndexComplex.partite(3, 2), [5, 5, 5])
    H = gen_target("clique-factor", [6, 6, 6], 0, k=2).H
    out = embed(H, G, None, calibrated(2))
    assert not out.ok and out.stage == "hypothesis"


def test_config_validation_and_overrides():
    with pytest.raises(ValueError):
        ParamConfig(buffer_distance=1)
    with pytest.raises(ValueError):
        ParamConfig(eps={"lo": 0.5, "hi": 0.4})
    with pytest.raises(ValueError):
        ParamConfig(list_order="sideways")
    cfg = calibrated(2).override(parse_config_text("# tweak\nbuffer_fraction = 0.1\neps.hi = 0.95\n"))
    assert cfg.buffer_fraction == 0.1 and cfg.eps.hi == 0.95


def test_matching_and_hall_witness():
    adj = [[0, 1], [1, 2], [0, 2]]
    ml, mr = hopcroft_karp(adj, 3)
    assert sorted(ml) == [0, 1, 2] and all(mr[m] == i for i, m in enumerate(ml))
    assert hall_witness(adj, ml, mr) is None
    adj = [[0], [0], [1, 2]]
    ml, mr = hopcroft_karp(adj, 3)
    assert sum(m >= 0 for m in ml) == 2
    S, NS = hall_witness(adj, ml, mr)
    assert len(NS) < len(S) and set(NS) == {j for i in S for j in adj[i]}
