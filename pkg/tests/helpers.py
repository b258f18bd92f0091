"""Gradient-check fixtures shared by the unit and acceptance tests."""
import numpy as np

from code_lab import generator as gen
from code_lab.learner import GridLearner, LearnerConfig, WebLearner
from code_lab.gridenv import GridDesign, build_grid
from code_lab.nn import DenseLayer, DenseStack, LSTMCell, Parameter, RandomStream, check_gradients, ops
from code_lab.nn.losses import a2c_losses
from code_lab.webenv import WebEnv, render
from code_lab.webenv.site import Placement, WebsiteDesign


def _param(rng, name, shape):
    return Parameter(name, rng.normal(size=shape))


def op_cases(seed):
    """(name, loss_fn, params) for every differentiable op, random shapes per seed."""
    rng = np.random.default_rng(seed)
    stream = RandomStream(seed)
    n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
    a, b = _param(rng, "a", (n, m)), _param(rng, "b", (n, m))
    row = _param(rng, "row", (m,))
    pos = Parameter("pos", rng.uniform(0.5, 2.0, size=(n, m)))
    vec = _param(rng, "vec", (m,))
    sq = _param(rng, "sq", (m, n))
    w = rng.normal(size=(n, m))
    table = _param(rng, "table", (7, 3))
    tokens = [list(rng.integers(0, 7, size=int(rng.integers(1, 4)))) for _ in range(n)] + [[]]
    dense = DenseLayer("d", m, n, "tanh", stream)
    stack = DenseStack("s", [m, 3, 2], stream)
    cell = LSTMCell("c", m, 3, stream)
    X = rng.normal(size=(n, m))
    mask = np.ones(n * m, dtype=bool)
    mask[0] = False

    weights = {}
    hc0 = rng.normal(size=6)

    def wsum(t, v):
        # fixed random weighting so every output entry contributes a distinct gradient
        shape = v.value.shape
        if shape not in weights:
            weights[shape] = np.random.default_rng(seed + len(weights)).normal(size=shape)
        return ops.total(t, ops.mul(t, v, weights[shape]))

    return [
        ("add", lambda t: wsum(t, ops.add(t, a, b)), [a, b]),
        ("add_broadcast", lambda t: wsum(t, ops.add(t, a, row)), [a, row]),
        ("sub", lambda t: wsum(t, ops.sub(t, a, b)), [a, b]),
        ("mul", lambda t: wsum(t, ops.mul(t, a, b)), [a, b]),
        ("scale", lambda t: wsum(t, ops.scale(t, a, -1.7)), [a]),
        ("tanh", lambda t: wsum(t, ops.tanh(t, a)), [a]),
        ("exp", lambda t: wsum(t, ops.exp(t, ops.scale(t, a, 0.3))), [a]),
        ("log", lambda t: wsum(t, ops.log(t, pos)), [pos]),
        ("square", lambda t: wsum(t, ops.square(t, a)), [a]),
        ("mean", lambda t: ops.mean(t, ops.mul(t, a, b)), [a, b]),
        ("sum_rows", lambda t: ops.total(t, ops.mul(t, ops.sum_rows(t, a), vec)), [a, vec]),
        ("sum_cols", lambda t: ops.total(t, ops.square(t, ops.sum_cols(t, a))), [a]),
        ("matmul_mm", lambda t: wsum(t, ops.matmul(t, a, sq)), [a, sq]),
        ("matmul_mv", lambda t: ops.total(t, ops.square(t, ops.matmul(t, a, vec))), [a, vec]),
        ("transpose", lambda t: wsum(t, ops.transpose(t, ops.transpose(t, a))), [a]),
        ("concat", lambda t: wsum(t, ops.concat(t, [a, b], axis=1)), [a, b]),
        ("stack", lambda t: wsum(t, ops.stack(t, [vec, row])), [vec, row]),
        ("take", lambda t: ops.total(t, ops.square(t, ops.take(t, a, [0, n - 1, 0]))), [a]),
        ("reshape", lambda t: wsum(t, ops.reshape(t, a, (m, n))), [a]),
        ("embed_mean", lambda t: ops.total(t, ops.square(t, ops.embed_mean(t, table, tokens))), [table]),
        ("log_softmax", lambda t: wsum(t, ops.reshape(t, ops.log_softmax(t, ops.reshape(t, a, (n * m,))), (n, m))),
         [a]),
        ("log_softmax_mask", lambda t: ops.pick(t, ops.log_softmax(t, ops.reshape(t, a, (n * m,)), mask), 1), [a]),
        ("softmax", lambda t: ops.total(t, ops.mul(t, ops.softmax(t, vec), row)), [vec, row]),
        ("pick", lambda t: ops.pick(t, ops.tanh(t, vec), m - 1), [vec]),
        ("entropy", lambda t: ops.entropy_from_logp(t, ops.log_softmax(t, vec)), [vec]),
        ("dense", lambda t: ops.total(t, ops.mul(t, dense(t, vec.value), w[:, 0])), dense.parameters()),
        ("dense_stack", lambda t: ops.total(t, ops.square(t, stack(t, X))), stack.parameters()),
        ("lstm_step", lambda t: ops.total(t, ops.tanh(t, cell.step(t, X[0], hc0))),
         cell.parameters()),
        ("lstm_sequence", lambda t: ops.total(t, ops.square(t, cell.sequence(t, X))), cell.parameters()),
    ]


def _site(seed):
    rng = RandomStream(seed)
    design = WebsiteDesign(1, [Placement("username", 0), Placement("password", 0), Placement("header_login", 0)])
    return render(design, rng)


def web_policy_case(seed, embed=6, hidden=8):
    """Policy and value of the web learner on a rendered login page."""
    stream = RandomStream(seed)
    agent = WebLearner(LearnerConfig(embed, hidden, 32), stream)
    env = WebEnv(_site(seed))
    obs = env.reset()
    obs, *_ = env.step(next(iter(_oracle(obs))))
    w = np.random.default_rng(seed).normal(size=64)

    def loss(tape):
        logp, value, refs, nf = agent.policy_forward(tape, obs)
        k = logp.value.size
        lp = ops.total(tape, ops.mul(tape, logp, w[:k]))
        return ops.add(tape, lp, ops.square(tape, value))

    return loss, agent.parameters()


def _oracle(obs):
    from code_lab.webenv import oracle_actions
    yield oracle_actions(obs)


def grid_policy_case(seed, hidden=8):
    stream = RandomStream(seed)
    state = build_grid(GridDesign.closed(["OpenDoor"]), np.random.default_rng(seed), 5, 5)
    agent = GridLearner(5 * 5 * 9 + 8, hidden, stream)
    w = np.random.default_rng(seed).normal(size=6)

    def loss(tape):
        logp, value = agent.policy_forward(tape, state)
        return ops.add(tape, ops.total(tape, ops.mul(tape, logp, w)), ops.square(tape, value))

    return loss, agent.parameters()


def generator_case(seed, hidden=6, domain="web"):
    """Log-prob, entropy and SKIP mass of a fixed rollout on a tiny generator."""
    prims = ("username", "password", "footer") if domain == "web" else ("PickupKey", "OpenDoor")
    cfg = gen.GeneratorConfig(domain, hidden, max_pages=2, budget=2, primitives=prims)
    params = gen.GeneratorParams(cfg, RandomStream(seed))
    rng = RandomStream(seed + 1)
    rollout = gen.sample_design(params, rng)
    while domain == "web" and rollout.k == 0:
        rollout = gen.sample_design(params, rng)

    def loss(tape):
        r = gen.rescore(params, rollout, tape)
        out = ops.add(tape, r.logp_var, ops.scale(tape, r.entropy_var, 0.3))
        return ops.add(tape, out, ops.scale(tape, r.n_hat_var, 0.1))

    return loss, params.parameters()


def a2c_case(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(2, 6))
    lp = Parameter("lp", -rng.uniform(0.1, 2.0, size=T))
    v = Parameter("v", rng.normal(size=T))
    ent = Parameter("ent", rng.uniform(0.1, 1.0, size=T))
    G = rng.normal(size=T)

    def loss(tape):
        logps = [ops.pick(tape, lp, i) for i in range(T)]
        vals = [ops.pick(tape, v, i) for i in range(T)]
        ents = [ops.pick(tape, ent, i) for i in range(T)]
        pol, val, bonus = a2c_losses(tape, logps, vals, G, 0.05, ents)
        return ops.sub(tape, ops.add(tape, pol, ops.scale(tape, val, 0.5)), bonus)

    # the advantage treats V as a constant, so V's gradient is checked on the value term alone
    def value_loss(tape):
        vals = [ops.pick(tape, v, i) for i in range(T)]
        return a2c_losses(tape, [ops.pick(tape, lp, i) for i in range(T)], vals, G)[1]

    return (loss, [lp, ent]), (value_loss, [v])


def check(case, seed, n_coords=4, n_directions=2):
    loss, params = case
    return check_gradients(loss, params, np.random.default_rng(seed), n_coords=n_coords,
                           n_directions=n_directions)
