import numpy as np
import pytest

from code_lab.learner import (LearnerConfig, OracleWebAgent, RandomWebAgent, WebLearner, parameter_count,
                              run_grid_episode, run_web_episode, update_learner, GridLearner)
from code_lab.gridenv import GridDesign, build_grid
from code_lab.nn import SGD, RandomStream, Tape
from code_lab.webenv import Placement, WebEnv, WebsiteDesign, render, test_suite

from helpers import check, grid_policy_case, web_policy_case


def agent(seed=0):
    return WebLearner(LearnerConfig(8, 12, 32), RandomStream(seed))


def site(*names, seed=0):
    return render(WebsiteDesign(1, [Placement(n, 0) for n in names]), RandomStream(seed))


def test_single_element_page():
    obs = WebEnv(site()).reset()
    enc, refs = agent().encode_dom(Tape(), obs)
    assert enc.value.shape == (1, 12) and len(refs) == 1
    probs, _ = agent().distribution(obs)
    assert probs.shape == (1, 1) and probs[0, 0] == pytest.approx(1.0)


def test_joint_distribution_shape():
    s = site("username", "password")
    probs, _ = agent().distribution(WebEnv(s).reset())
    assert probs.shape == (3, 3)
    assert probs.sum() == pytest.approx(1.0)


def test_encodings_deterministic_and_order_sensitive():
    a = agent()

    def username_encoding(*names):
        obs = WebEnv(site(*names)).reset()
        enc, refs = a.encode_dom(Tape(), obs)
        ref = next(r for r, el in obs.page.elements.items() if el.field_key == "username")
        return enc.value[refs.index(ref)]

    e1 = username_encoding("username", "footer")
    assert e1.tobytes() == username_encoding("username", "footer").tobytes()
    assert not np.allclose(e1, username_encoding("footer", "username"))


@pytest.mark.parametrize("seed", range(3))
def test_policy_gradients(seed):
    assert check(web_policy_case(seed), seed).ok
    assert check(grid_policy_case(seed), seed).ok


def test_oracle_and_random_agents():
    design = test_suite()["Login"][1]
    rng = RandomStream(0)
    ep = run_web_episode(OracleWebAgent(), WebEnv(render(design, rng)), rng, record=False)
    assert ep.success
    wins = sum(run_web_episode(RandomWebAgent(), WebEnv(render(test_suite()["Flight"][4], rng)), rng,
                               record=False).success for _ in range(100))
    assert wins < 5


def test_update_raises_oracle_trajectory_logp():
    """Teacher-forcing the oracle's actions with a positive return makes them more likely."""
    a = agent(1)
    s = render(test_suite()["Login"][1], RandomStream(0))

    def oracle_logp():
        env, total = WebEnv(s), 0.0
        obs = env.reset()
        while not env.done:
            act = OracleWebAgent().act(None, obs, None)[0]
            probs, _ = a.distribution(obs)
            refs = list(obs.page.elements)
            f = len(obs.instruction) if act.field is None else act.field
            total += np.log(probs[refs.index(act.element), f])
            obs, *_ = env.step(act)
        return total

    before = oracle_logp()

    class Forced:
        def start_episode(self, tape, obs):
            return a.start_episode(tape, obs)

        def act(self, tape, obs, rng, greedy=False, fields=None):
            want = OracleWebAgent().act(None, obs, None)[0]
            from code_lab.nn.heads import categorical_head
            logp, value, refs, nf = a.policy_forward(tape, obs, fields)
            f = nf if want.field is None else want.field
            _, lp, ent = categorical_head(tape, logp, index=refs.index(want.element) * (nf + 1) + f)
            return want, lp, value, ent

    ep = run_web_episode(Forced(), WebEnv(s), RandomStream(0))
    assert ep.success
    update_learner(a, [ep], 0.99, SGD(a.parameters(), 0.05), entropy_coeff=0.0)
    assert oracle_logp() > before


def test_zero_advantage_no_policy_gradient():
    from code_lab.nn import a2c_losses, ops
    t = Tape()
    lp = t.record(np.array(-0.7), (), None)
    pol, _, _ = a2c_losses(t, [lp], [np.float64(2.0)], [2.0])
    t.backward(pol)
    assert float(lp.grad) == 0.0


def test_grid_episode_runs():
    state = build_grid(GridDesign.closed(["PickupKey"]), np.random.default_rng(0), 5, 5)
    g = GridLearner(5 * 5 * 9 + 8, 8, RandomStream(0))
    ep = run_grid_episode(g, state, RandomStream(0))
    assert len(ep.rewards) == len(ep.log_probs) <= state.max_steps
    update_learner(g, [ep], 0.99, SGD(g.parameters(), 0.01))


def test_parameter_count():
    assert parameter_count() == 104134
    assert parameter_count(LearnerConfig(44, 100)) == 728 * 44 + 72102
