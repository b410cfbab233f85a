import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from advos.errors import ContractError, UnsupportedOpError
from advos.nn import autodiff as ad
from advos.nn.autodiff import Tape, Tensor

from conftest import central_diff, rel_err


def grad_of(build, *leaves):
    with Tape() as tape:
        out = build(*leaves)
        return out, tape.gradient(out, list(leaves))


def test_square_scalar():
    w = Tensor([[3.0]], requires_grad=True)
    _, (g,) = grad_of(lambda w: ad.sum_(ad.mul(w, w)), w)
    assert g.data.item() == 6.0


def test_nonscalar_target_rejected():
    w = Tensor([[1.0, 2.0]], requires_grad=True)
    with Tape() as tape:
        out = ad.mul(w, 2.0)
        with pytest.raises(ContractError):
            tape.gradient(out, [w])


def test_softmax_ce_closed_form():
    from advos.nn.losses import ce_loss

    logits = Tensor([[0.0, 0.0]], requires_grad=True)
    _, (g,) = grad_of(lambda z: ce_loss(ad.softmax(z), [0]), logits)
    np.testing.assert_allclose(g.data, [[-0.5, 0.5]], atol=1e-12)


def test_unreachable_source_gets_zeros():
    a = Tensor([[1.0]], requires_grad=True)
    b = Tensor([[2.0, 3.0]], requires_grad=True)
    _, (ga, gb) = grad_of(lambda a, b: ad.sum_(ad.square(a)), a, b)
    assert ga.data.item() == 2.0
    assert np.array_equal(gb.data, np.zeros((1, 2)))


def test_no_tape_records_nothing():
    a = Tensor([[1.0]], requires_grad=True)
    with Tape() as tape:
        pass
    ad.square(a)
    assert len(tape) == 0


def test_replay_is_bitwise(rng):
    a = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    w = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    with Tape() as tape:
        ad.sum_(ad.softmax(ad.leaky_relu(ad.matmul(a, w))))
    assert len(tape) > 0
    assert tape.replay()
    # every node's parents precede it
    seen = set()
    for node in tape.nodes:
        for inp in node.inputs:
            if inp.requires_grad and inp not in (a, w):
                assert id(inp) in seen
        seen.add(id(node.output))


UNARY = {
    "square": ad.square,
    "sqrt": lambda x: ad.sqrt(ad.add(ad.square(x), 0.5)),
    "leaky_relu": lambda x: ad.leaky_relu(x, 0.2),
    "relu": ad.relu,
    "softmax": ad.softmax,
    "log": lambda x: ad.log(ad.add(ad.square(x), 0.1)),
    "sigmoid": ad.sigmoid,
    "reciprocal": lambda x: ad.reciprocal(ad.add(ad.square(x), 1.0)),
    "neg": ad.neg,
    "transpose": ad.transpose,
    "sum_axis0": lambda x: ad.sum_(x, axis=0),
    "sum_axis1_keep": lambda x: ad.sum_(x, axis=1, keepdims=True),
    "mean": lambda x: ad.mean(x, axis=1),
    "broadcast": lambda x: ad.broadcast_to(ad.sum_(x, axis=0, keepdims=True), x.shape),
    "reshape": lambda x: ad.reshape(x, (x.shape[0] * x.shape[1],)),
    "concat": lambda x: ad.concat_rows([x, ad.square(x)]),
}
BINARY = {
    "add_bcast": lambda a, b: ad.add(a, ad.sum_(b, axis=0, keepdims=True)),
    "sub": lambda a, b: ad.sub(a, b),
    "mul": lambda a, b: ad.mul(a, b),
    "matmul": lambda a, b: ad.matmul(a, ad.transpose(b)),
}


def _check_op(build, arrays, rng):
    # random projection turns any output into a scalar
    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    with Tape() as tape:
        out = build(*leaves)
        proj = rng.normal(size=out.shape)
        loss = ad.sum_(ad.mul(out, Tensor(proj)))
        grads = tape.gradient(loss, leaves)
    for leaf, g in zip(leaves, grads):
        def f():
            return float(np.sum(build(*[Tensor(l.data) for l in leaves]).data * proj))
        fd = central_diff(f, leaf.data)
        assert rel_err(g.data, fd) < 1e-4


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_ops_match_finite_differences(name, rng):
    for _ in range(5):
        x = rng.normal(size=(3, 4))
        x[np.abs(x) < 1e-2] += 0.1  # stay off the rectifier kink
        _check_op(UNARY[name], [x], rng)


@pytest.mark.parametrize("name", sorted(BINARY))
def test_binary_ops_match_finite_differences(name, rng):
    for _ in range(5):
        _check_op(BINARY[name], [rng.normal(size=(3, 4)), rng.normal(size=(3, 4))], rng)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_mlp_gradients(seed):
    from advos.nn.mlp import MlpSpec, forward_mlp, init_mlp
    from advos.nn.losses import ce_loss

    rng = np.random.default_rng(seed)
    d, c = int(rng.integers(2, 6)), int(rng.integers(2, 4))
    spec = MlpSpec.stack([d, int(rng.integers(2, 6)), int(rng.integers(2, 6)), c], "leaky_relu", "softmax")
    params = init_mlp(spec, rng)
    x = rng.normal(size=(4, d))
    y = rng.integers(0, c, size=4)
    # finite differences are meaningless within a step of a leaky-relu kink
    h = x
    for W, b in zip(params[:-2:2], params[1:-2:2]):
        z = h @ W.data + b.data
        assume(np.abs(z).min() > 1e-2)
        h = np.where(z > 0, z, spec.slope * z)
    with Tape() as tape:
        loss = ce_loss(forward_mlp(spec, params, x), y)
        grads = tape.gradient(loss, params)

    def f():
        return float(ce_loss(forward_mlp(spec, [Tensor(p.data) for p in params], x), y).data)

    for p, g in zip(params, grads):
        assert rel_err(g.data, central_diff(f, p.data)) < 1e-4


def test_second_order_matches_finite_differences(rng):
    """d/dW of ||d/dx sum(leaky(x W1) W2)||^2, compared against finite differences."""
    x = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    w1 = Tensor(rng.normal(size=(2, 4)), requires_grad=True)
    w2 = Tensor(rng.normal(size=(4, 1)), requires_grad=True)

    def penalty(w1_, w2_, x_):
        with Tape() as tape:
            out = ad.matmul(ad.leaky_relu(ad.matmul(x_, w1_)), w2_)
            (gx,) = tape.gradient(ad.sum_(out), [x_], create_graph=True)
            return ad.sum_(ad.square(gx)), tape

    with Tape() as outer:
        out = ad.matmul(ad.leaky_relu(ad.matmul(x, w1)), w2)
        (gx,) = outer.gradient(ad.sum_(out), [x], create_graph=True)
        loss = ad.sum_(ad.square(gx))
        g1, g2 = outer.gradient(loss, [w1, w2])

    def f():
        xx = Tensor(x.data, requires_grad=True)
        return float(penalty(Tensor(w1.data, requires_grad=True), Tensor(w2.data, requires_grad=True), xx)[0].data)

    assert rel_err(g1.data, central_diff(f, w1.data)) < 1e-4
    assert rel_err(g2.data, central_diff(f, w2.data)) < 1e-4


@pytest.mark.parametrize("op", [ad.sigmoid, lambda t: ad.log(ad.add(ad.square(t), 1.0)),
                                lambda t: ad.concat_rows([t, t])])
def test_second_order_unsupported(op):
    x = Tensor([[0.3, -0.2]], requires_grad=True)
    with Tape() as tape:
        out = ad.sum_(op(x))
        with pytest.raises(UnsupportedOpError):
            tape.gradient(out, [x], create_graph=True)
