import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mbdp import DecPomdp, build_mabc, build_tiger

settings.register_profile(
    "mbdp",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=50,
)
settings.load_profile("mbdp")


def random_model(
    seed,
    num_states=3,
    action_counts=(2, 2),
    obs_counts=(2, 2),
    horizon=3,
    reward_span=(-1.0, 1.0),
):
    """Dense random model with Dirichlet-sampled stochastic rows."""
    rng = np.random.default_rng(seed)
    num_ja = int(np.prod(action_counts))
    num_jo = int(np.prod(obs_counts))
    transition = rng.dirichlet(np.ones(num_states), size=(num_ja, num_states))
    observation = rng.dirichlet(np.ones(num_jo), size=(num_ja, num_states))
    lo, hi = reward_span
    reward = rng.uniform(lo, hi, size=(num_ja, num_states, num_states))
    states = tuple(f"s{i}" for i in range(num_states))
    actions = tuple(tuple(f"a{i}{j}" for j in range(n)) for i, n in enumerate(action_counts))
    observations = tuple(tuple(f"o{i}{j}" for j in range(n)) for i, n in enumerate(obs_counts))
    return DecPomdp(
        states=states,
        actions=actions,
        observations=observations,
        transition=transition,
        observation=observation,
        reward=reward,
        initial_belief=rng.dirichlet(np.ones(num_states)),
        horizon=horizon,
        name=f"random-{seed}",
    )


@pytest.fixture(scope="session")
def tiger():
    return build_tiger(horizon=2)


@pytest.fixture(scope="session")
def mabc():
    return build_mabc(horizon=3)


@pytest.fixture
def tiny():
    return random_model(7, num_states=2, action_counts=(2, 2), obs_counts=(2, 2), horizon=2)
