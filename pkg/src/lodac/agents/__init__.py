"""Learning agents for radius control: tabular Q-learning and double DQN."""
from lodac.agents.ddqn import DDQNAgent, DDQNConfig
from lodac.agents.mlp import MLP, Adam
from lodac.agents.replay import ReplayBuffer
from lodac.agents.tabular import QLearningAgent, q_select_action, q_update

__all__ = [
    "Adam",
    "DDQNAgent",
    "DDQNConfig",
    "MLP",
    "QLearningAgent",
    "ReplayBuffer",
    "extract_greedy_policy",
    "q_select_action",
    "q_update",
]


def extract_greedy_policy(agent, spec):
    """Greedy radius at every fitness 0..n-1 as a table policy over ``spec.portfolio``."""
    from lodac.policy import Policy

    actions = agent.greedy_actions(spec.n)
    return Policy(spec.portfolio, table=tuple(spec.portfolio.radii[a] for a in actions))
